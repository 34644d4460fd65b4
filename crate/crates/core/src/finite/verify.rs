//! Brute-force verifiers for the statements connecting denseness,
//! ε-measurability, the covariance-orthogonality structure, and the
//! regression operator.
//!
//! Each verifier computes its hypothesis and conclusion through independent
//! routes and reports both, so a randomized suite can assert
//! "hypothesis implies conclusion" over many instances without ever trusting
//! a single code path.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

use super::{
    central_partition, cond_expectation, expected_cond_variance, eps_sublevel_perp3,
    is_complete, is_dense_mod_constants, is_measurable, measurable_l2, measurable_subspace,
    perp3_complement, population_operators, population_regression_operator, FiniteSpace,
    FunctionVec, HilbertSubspace, JointModel, Partition,
};

/// A named numeric observation attached to a verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub value: f64,
}

/// Outcome of checking one statement on one instance. `conclusion_holds` is
/// asserted by callers only when `hypothesis_holds` is true; otherwise it is
/// recorded for information.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub statement: String,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    pub witnesses: Vec<Witness>,
    pub max_residual: f64,
}

impl VerdictReport {
    /// A statement is violated when its hypothesis holds but its conclusion
    /// does not.
    pub fn violated(&self) -> bool {
        self.hypothesis_holds && !self.conclusion_holds
    }
}

fn with_constants(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let m = basis.nrows();
    let mut out = DMatrix::zeros(m, basis.ncols() + 1);
    for j in 0..basis.ncols() {
        out.set_column(j, &basis.column(j));
    }
    out.set_column(basis.ncols(), &DVector::from_element(m, 1.0));
    out
}

/// Whether the subspace spans all of L2 modulo constants.
pub fn is_dense_in_l2(h: &HilbertSubspace, sp: &FiniteSpace) -> bool {
    linalg::rank(&with_constants(h.basis()), linalg::DEFAULT_RANK_TOL) == sp.len()
}

/// If `h` is dense in L2 modulo constants, then for every eps the
/// covariance-orthogonal complement of the ε-measurable members of `h` is
/// contained in the complement of the G-measurable functions of L2.
///
/// Hypothesis and conclusion are computed independently: the hypothesis by a
/// rank computation, the conclusion through the sublevel complement and a
/// span containment.
pub fn verify_universality_from_denseness(
    h: &HilbertSubspace,
    g: &Partition,
    sp: &FiniteSpace,
    eps: f64,
) -> Result<VerdictReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be strictly positive".into()));
    }
    let hypothesis_holds = is_dense_in_l2(h, sp);

    let sublevel_perp = eps_sublevel_perp3(h, g, sp, eps)?;
    let l2_meas = measurable_l2(g, sp);
    let target = perp3_complement(&l2_meas.basis_functions(), sp)?;
    let residual = linalg::containment_residual(target.basis(), sublevel_perp.basis());
    let conclusion_holds = residual <= 1e-9;

    Ok(VerdictReport {
        statement: "relative-universality-from-denseness".into(),
        hypothesis_holds,
        conclusion_holds,
        witnesses: vec![
            Witness { label: "sublevel_perp_dim".into(), value: sublevel_perp.dim() as f64 },
            Witness { label: "target_perp_dim".into(), value: target.dim() as f64 },
        ],
        max_residual: residual,
    })
}

/// Both sides of the equivalence "f is covariance-orthogonal to every
/// G-measurable function iff E[f | G] = E[f]", computed independently.
#[derive(Debug, Clone)]
pub struct ConstantMeanCheck {
    /// cov(f, g) = 0 for every g in an indicator basis of the G-measurable
    /// functions.
    pub side_orthogonal: bool,
    /// max |E[f | G] - E[f]| below tolerance.
    pub side_constant_mean: bool,
    pub max_cov: f64,
    pub max_mean_gap: f64,
}

impl ConstantMeanCheck {
    pub fn agrees(&self) -> bool {
        self.side_orthogonal == self.side_constant_mean
    }

    pub fn into_verdict(self) -> VerdictReport {
        VerdictReport {
            statement: "constant-conditional-mean".into(),
            hypothesis_holds: true,
            conclusion_holds: self.agrees(),
            witnesses: vec![
                Witness { label: "max_cov_with_measurable".into(), value: self.max_cov },
                Witness { label: "max_conditional_mean_gap".into(), value: self.max_mean_gap },
            ],
            max_residual: self.max_cov.min(self.max_mean_gap),
        }
    }
}

/// Check `f ⟂ (G-measurable functions) under cov` against
/// `E[f | G] = E[f]` on both routes.
pub fn verify_constant_conditional_mean(
    f: &FunctionVec,
    g: &Partition,
    sp: &FiniteSpace,
) -> Result<ConstantMeanCheck> {
    let scale = sp.var(f).max(1.0);
    let tol = 1e-10 * scale;

    let mut max_cov = 0.0_f64;
    for b in 0..g.num_blocks() {
        let ind = g.indicator(b);
        max_cov = max_cov.max(sp.cov(f, &ind).abs());
    }
    let side_orthogonal = max_cov <= tol;

    let ce = cond_expectation(f, g, sp)?;
    let mean = sp.mean(f);
    let max_mean_gap = ce.iter().fold(0.0_f64, |m, &v| m.max((v - mean).abs()));
    let side_constant_mean = max_mean_gap <= 1e-10 * scale.sqrt().max(1.0);

    Ok(ConstantMeanCheck { side_orthogonal, side_constant_mean, max_cov, max_mean_gap })
}

/// The G-measurable members of `h` are exactly the intersection of the
/// ε-sublevel sets over a decreasing grid extended by the exact limit check,
/// and sublevel membership is monotone in ε. Checked on the basis plus the
/// supplied probe functions.
pub fn verify_sublevel_intersection(
    h: &HilbertSubspace,
    g: &Partition,
    sp: &FiniteSpace,
    eps_grid: &[f64],
    extra_probes: &[FunctionVec],
) -> Result<bool> {
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("epsilon grid must be nonempty and positive".into()));
    }
    if eps_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidInput("epsilon grid must be strictly decreasing".into()));
    }
    let mut probes = h.basis_functions();
    probes.extend(extra_probes.iter().cloned());
    for f in &probes {
        let ev = expected_cond_variance(f, g, sp)?;
        let measurable = is_measurable(f, g, sp)?;
        let mut previous = false;
        // Walk the grid from the smallest eps upward: membership must be
        // monotone increasing in eps.
        for &eps in eps_grid.iter().rev() {
            let member = ev < eps;
            if previous && !member {
                return Ok(false);
            }
            previous = member;
        }
        let in_all_sublevels = eps_grid.iter().all(|&eps| ev < eps);
        // Intersection over all eps > 0 is the grid check extended by the
        // limit: E(var[f | G]) = 0 within tolerance.
        let in_intersection = in_all_sublevels && measurable;
        if measurable != in_intersection {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Strong relative universality as a checkable predicate: the G-measurable
/// members of `h` are dense (modulo constants) in the G-measurable functions
/// of L2.
pub fn is_strongly_relatively_universal(
    h: &HilbertSubspace,
    g: &Partition,
    sp: &FiniteSpace,
) -> Result<bool> {
    let meas_h = measurable_subspace(h, g, sp)?;
    let meas_l2 = measurable_l2(g, sp);
    is_dense_mod_constants(&meas_h, &meas_l2, sp)
}

/// Search for a finite counterexample to "dense in L2 modulo constants
/// implies strongly relatively universal". Returns the first violating
/// instance found, if any.
pub fn search_strong_universality_counterexample(
    rng: &mut impl rand::Rng,
    tries: usize,
) -> Result<Option<(FiniteSpace, Partition, HilbertSubspace)>> {
    for _ in 0..tries {
        let sp = super::random::random_space(rng, 2, 8);
        let g = super::random::random_partition(rng, sp.len(), 5);
        let h = super::random::random_dense_subspace(rng, &sp, true);
        if !is_dense_in_l2(&h, &sp) {
            continue;
        }
        if !is_strongly_relatively_universal(&h, &g, &sp)? {
            return Ok(Some((sp, g, h)));
        }
    }
    Ok(None)
}

/// Unbiasedness of the regression-operator range: with `h_x` dense in L2
/// modulo constants, every column of the regression operator is measurable
/// with respect to the central partition of the joint.
pub fn verify_unbiasedness(
    jm: &JointModel,
    h_x: &HilbertSubspace,
    h_y: &HilbertSubspace,
    tol: f64,
) -> Result<VerdictReport> {
    let sx = jm.x_space();
    let hypothesis_holds = is_dense_in_l2(h_x, &sx);
    let g = central_partition(jm);
    let ops = population_operators(jm, h_x, h_y)?;
    let r = population_regression_operator(&ops, 1e-8)?;

    let mut witnesses = Vec::with_capacity(r.ncols());
    let mut max_ratio = 0.0_f64;
    for j in 0..r.ncols() {
        let f = h_x.basis() * r.column(j);
        let var = sx.var(&f);
        let ev = expected_cond_variance(&f, &g, &sx)?;
        let ratio = if var > 1e-14 { ev / var } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
        witnesses.push(Witness { label: format!("column_{j}_evar_ratio"), value: ratio });
    }
    Ok(VerdictReport {
        statement: "unbiasedness".into(),
        hypothesis_holds,
        conclusion_holds: max_ratio <= tol,
        witnesses,
        max_residual: max_ratio,
    })
}

/// Exhaustiveness: with `h_y` dense in L2(P_Y) modulo constants and a
/// complete central σ-field, the span of the regression-operator columns
/// plus constants contains every central-partition-measurable function of
/// `h_x`. Hypothesis failures downgrade to "not applicable" (the verdict's
/// hypothesis flag), never to a failure.
pub fn verify_exhaustiveness(
    jm: &JointModel,
    h_x: &HilbertSubspace,
    h_y: &HilbertSubspace,
    tol: f64,
) -> Result<VerdictReport> {
    let sx = jm.x_space();
    let sy = jm.y_space();
    let g = central_partition(jm);
    let y_dense = is_dense_in_l2(h_y, &sy);
    let complete = is_complete(jm, &g);
    let hypothesis_holds = y_dense && complete;

    let ops = population_operators(jm, h_x, h_y)?;
    let r = population_regression_operator(&ops, 1e-8)?;
    let predictors = h_x.basis() * &r;
    let span = {
        let mut s = DMatrix::zeros(sx.len(), predictors.ncols() + 1);
        for j in 0..predictors.ncols() {
            s.set_column(j, &predictors.column(j));
        }
        s.set_column(predictors.ncols(), &DVector::from_element(sx.len(), 1.0));
        s
    };
    let central_members = measurable_subspace(h_x, &g, &sx)?;
    let residual = linalg::containment_residual(&span, central_members.basis());
    let conclusion_holds = residual <= tol;

    Ok(VerdictReport {
        statement: "exhaustiveness".into(),
        hypothesis_holds,
        conclusion_holds,
        witnesses: vec![
            Witness { label: "y_side_dense".into(), value: if y_dense { 1.0 } else { 0.0 } },
            Witness { label: "central_sigma_field_complete".into(), value: if complete { 1.0 } else { 0.0 } },
            Witness { label: "central_class_dim".into(), value: central_members.dim() as f64 },
            Witness { label: "regression_range_dim".into(), value: linalg::rank(&predictors, linalg::DEFAULT_RANK_TOL) as f64 },
        ],
        max_residual: residual,
    })
}

/// Fisher consistency on one joint: unbiasedness and exhaustiveness
/// verdicts combined into subspace equality.
pub fn verify_fisher_consistency(
    jm: &JointModel,
    h_x: &HilbertSubspace,
    h_y: &HilbertSubspace,
    tol: f64,
) -> Result<VerdictReport> {
    let unbiased = verify_unbiasedness(jm, h_x, h_y, tol)?;
    let exhaustive = verify_exhaustiveness(jm, h_x, h_y, tol)?;
    Ok(VerdictReport {
        statement: "fisher-consistency".into(),
        hypothesis_holds: unbiased.hypothesis_holds && exhaustive.hypothesis_holds,
        conclusion_holds: unbiased.conclusion_holds && exhaustive.conclusion_holds,
        witnesses: vec![
            Witness { label: "unbiasedness_residual".into(), value: unbiased.max_residual },
            Witness { label: "exhaustiveness_residual".into(), value: exhaustive.max_residual },
        ],
        max_residual: unbiased.max_residual.max(exhaustive.max_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_block_4() -> (FiniteSpace, Partition) {
        (
            FiniteSpace::uniform(4),
            Partition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap(),
        )
    }

    fn joint_4x2() -> JointModel {
        let rows = [
            [0.9 * 0.25, 0.1 * 0.25],
            [0.9 * 0.25, 0.1 * 0.25],
            [0.2 * 0.25, 0.8 * 0.25],
            [0.2 * 0.25, 0.8 * 0.25],
        ];
        let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
        JointModel::new(DMatrix::from_row_slice(4, 2, &flat)).unwrap()
    }

    #[test]
    fn universality_holds_for_full_l2() {
        let (sp, g) = two_block_4();
        let h = HilbertSubspace::full_l2(&sp);
        let v = verify_universality_from_denseness(&h, &g, &sp, 0.3).unwrap();
        assert!(v.hypothesis_holds);
        assert!(v.conclusion_holds);
        assert!(!v.violated());
    }

    #[test]
    fn universality_trivial_sigma_field_always_concludes() {
        let sp = FiniteSpace::uniform(4);
        let basis = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let h = HilbertSubspace::from_span(basis, &sp).unwrap();
        let v =
            verify_universality_from_denseness(&h, &Partition::trivial(4), &sp, 0.5).unwrap();
        assert!(!v.hypothesis_holds);
        assert!(v.conclusion_holds);
    }

    #[test]
    fn universality_records_non_dense_hypothesis() {
        let (sp, g) = two_block_4();
        let basis = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, -1.0, -1.0]);
        let h = HilbertSubspace::from_span(basis, &sp).unwrap();
        let v = verify_universality_from_denseness(&h, &g, &sp, 0.5).unwrap();
        assert!(!v.hypothesis_holds);
        // Not asserted, but for this instance the conclusion happens to hold.
        assert!(v.conclusion_holds);
    }

    #[test]
    fn constant_mean_check_agreement() {
        let (sp, g) = two_block_4();
        let f = DVector::from_row_slice(&[1.0, -1.0, 1.0, -1.0]);
        let check = verify_constant_conditional_mean(&f, &g, &sp).unwrap();
        assert!(check.side_orthogonal);
        assert!(check.side_constant_mean);

        let f = DVector::from_row_slice(&[1.0, 1.0, -1.0, -1.0]);
        let check = verify_constant_conditional_mean(&f, &g, &sp).unwrap();
        assert!(!check.side_orthogonal);
        assert!(!check.side_constant_mean);
        assert!(check.agrees());

        let constant = DVector::from_element(4, 3.25);
        let check = verify_constant_conditional_mean(&constant, &g, &sp).unwrap();
        assert!(check.side_orthogonal && check.side_constant_mean);
    }

    #[test]
    fn sublevel_intersection_on_probes() {
        let (sp, g) = two_block_4();
        let h = HilbertSubspace::full_l2(&sp);
        let probes = vec![
            DVector::from_row_slice(&[1.0, 3.0, 5.0, 7.0]),
            DVector::from_row_slice(&[2.0, 2.0, -1.0, -1.0]),
        ];
        assert!(verify_sublevel_intersection(&h, &g, &sp, &[2.0, 1.5, 0.5], &probes).unwrap());
        assert!(verify_sublevel_intersection(
            &h,
            &Partition::singletons(4),
            &sp,
            &[1.0, 0.1, 1e-6],
            &probes
        )
        .unwrap());
        // Bad grids rejected.
        assert!(verify_sublevel_intersection(&h, &g, &sp, &[], &probes).is_err());
        assert!(verify_sublevel_intersection(&h, &g, &sp, &[0.5, 1.0], &probes).is_err());
    }

    #[test]
    fn strong_universality_trivial_cases() {
        let sp = FiniteSpace::uniform(4);
        let h = HilbertSubspace::full_l2(&sp);
        let g = Partition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert!(is_strongly_relatively_universal(&h, &g, &sp).unwrap());
        assert!(is_strongly_relatively_universal(&h, &Partition::trivial(4), &sp).unwrap());
        assert!(is_strongly_relatively_universal(&h, &Partition::singletons(4), &sp).unwrap());
    }

    #[test]
    fn unbiasedness_on_block_joint() {
        let jm = joint_4x2();
        let hx = HilbertSubspace::full_l2(&jm.x_space());
        let hy = HilbertSubspace::full_l2(&jm.y_space());
        let v = verify_unbiasedness(&jm, &hx, &hy, 1e-9).unwrap();
        assert!(v.hypothesis_holds);
        assert!(v.conclusion_holds, "max ratio {}", v.max_residual);
    }

    #[test]
    fn unbiasedness_trivial_for_independence() {
        let px = DVector::from_row_slice(&[0.3, 0.7]);
        let py = DVector::from_row_slice(&[0.6, 0.4]);
        let jm = JointModel::new(&px * py.transpose()).unwrap();
        let hx = HilbertSubspace::full_l2(&jm.x_space());
        let hy = HilbertSubspace::full_l2(&jm.y_space());
        let v = verify_unbiasedness(&jm, &hx, &hy, 1e-9).unwrap();
        assert!(v.conclusion_holds);
        assert!(v.max_residual < 1e-15);
    }

    #[test]
    fn exhaustiveness_and_fisher_consistency() {
        let jm = joint_4x2();
        let hx = HilbertSubspace::full_l2(&jm.x_space());
        let hy = HilbertSubspace::full_l2(&jm.y_space());
        let v = verify_exhaustiveness(&jm, &hx, &hy, 1e-8).unwrap();
        assert!(v.hypothesis_holds);
        assert!(v.conclusion_holds, "residual {}", v.max_residual);

        let fisher = verify_fisher_consistency(&jm, &hx, &hy, 1e-8).unwrap();
        assert!(fisher.hypothesis_holds && fisher.conclusion_holds);
    }

    #[test]
    fn exhaustiveness_not_applicable_when_incomplete() {
        // Independent joint: the central partition is one block and is
        // complete, so force incompleteness through a 4-block joint with a
        // 2-valued Y (rank can never reach 3).
        let rows = [
            [0.8, 0.2],
            [0.6, 0.4],
            [0.4, 0.6],
            [0.2, 0.8],
        ];
        let mut flat = Vec::new();
        for r in rows.iter() {
            for v in r.iter() {
                flat.push(v * 0.25);
            }
        }
        let jm = JointModel::new(DMatrix::from_row_slice(4, 2, &flat)).unwrap();
        let hx = HilbertSubspace::full_l2(&jm.x_space());
        let hy = HilbertSubspace::full_l2(&jm.y_space());
        let v = verify_exhaustiveness(&jm, &hx, &hy, 1e-8).unwrap();
        assert!(!v.hypothesis_holds);
        assert!(!v.violated());
    }

    #[test]
    fn verdict_json_shape() {
        let (sp, g) = two_block_4();
        let h = HilbertSubspace::full_l2(&sp);
        let v = verify_universality_from_denseness(&h, &g, &sp, 0.3).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"statement\""));
        assert!(json.contains("\"hypothesis_holds\""));
        assert!(json.contains("\"conclusion_holds\""));
        assert!(json.contains("\"witnesses\""));
        assert!(json.contains("\"max_residual\""));
    }
}
