//! The randomized theory-verification suite behind `gsir verify`.
//!
//! Each statement gets `instances` independently seeded instances; a
//! violation is a case where the statement's hypothesis held and its
//! conclusion failed at the configured tolerance. Hypothesis failures count
//! as not-applicable, never as failures.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gsir_core::finite::{
    is_dense_in_l2, is_dense_mod_constants, random_block_constant, random_dense_subspace,
    random_function, random_partition, random_space, random_subspace,
    verify_constant_conditional_mean, verify_exhaustiveness, verify_sublevel_intersection,
    verify_unbiasedness, verify_universality_from_denseness, HilbertSubspace, InstanceRng,
    Partition,
};
use gsir_core::linalg;
use gsir_core::synth::gen_discrete_joint;

use crate::config::VerifyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statement {
    /// Denseness modulo constants agrees between the span route and the
    /// covariance-complement route.
    DenseModuloConstants,
    /// The measurable members equal the intersection of the ε-sublevels.
    SublevelIntersection,
    /// Covariance-orthogonality to measurable functions is equivalent to a
    /// constant conditional mean.
    ConstantConditionalMean,
    /// Relative universality w.r.t. the full σ-field is denseness in L2
    /// modulo constants.
    UniversalityFullField,
    /// Relative universality w.r.t. the trivial σ-field always holds.
    UniversalityTrivialField,
    /// Denseness in L2 modulo constants implies relative universality.
    UniversalityFromDenseness,
    /// Penrose identities and the range-projection property of the
    /// pseudoinverse.
    PseudoinverseProjection,
    /// Regression-operator columns are measurable w.r.t. the central
    /// partition (unbiasedness).
    Unbiasedness,
    /// Complete central σ-fields make the regression-operator range
    /// exhaustive (with unbiasedness: Fisher consistency).
    ExhaustivenessFisher,
}

pub const ALL_STATEMENTS: [Statement; 9] = [
    Statement::DenseModuloConstants,
    Statement::SublevelIntersection,
    Statement::ConstantConditionalMean,
    Statement::UniversalityFullField,
    Statement::UniversalityTrivialField,
    Statement::UniversalityFromDenseness,
    Statement::PseudoinverseProjection,
    Statement::Unbiasedness,
    Statement::ExhaustivenessFisher,
];

impl Statement {
    pub fn name(&self) -> &'static str {
        match self {
            Statement::DenseModuloConstants => "dense-modulo-constants",
            Statement::SublevelIntersection => "sublevel-intersection",
            Statement::ConstantConditionalMean => "constant-conditional-mean",
            Statement::UniversalityFullField => "universality-full-field",
            Statement::UniversalityTrivialField => "universality-trivial-field",
            Statement::UniversalityFromDenseness => "universality-from-denseness",
            Statement::PseudoinverseProjection => "pseudoinverse-projection",
            Statement::Unbiasedness => "unbiasedness",
            Statement::ExhaustivenessFisher => "exhaustiveness-fisher",
        }
    }

    fn tag(&self) -> u64 {
        ALL_STATEMENTS.iter().position(|s| s == self).unwrap() as u64 + 1
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Pass { residual: f64 },
    NotApplicable,
    Fail { residual: f64, detail: String },
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn instance_seed(base: u64, statement: Statement, index: u64) -> u64 {
    splitmix(base ^ splitmix(statement.tag()).wrapping_add(index))
}

fn space_and_partition(rng: &mut InstanceRng, max_space: usize) -> (gsir_core::finite::FiniteSpace, Partition) {
    let sp = random_space(rng, 2, max_space);
    let g = random_partition(rng, sp.len(), 5);
    (sp, g)
}

pub fn run_instance(st: Statement, seed: u64, cfg: &VerifyConfig) -> Outcome {
    let mut rng = InstanceRng::seed_from_u64(seed);
    let tol = cfg.tol;
    match st {
        Statement::DenseModuloConstants => {
            let (sp, _) = space_and_partition(&mut rng, cfg.max_space);
            let kb = rng.gen_range(1..=sp.len());
            let b = random_subspace(&mut rng, &sp, kb, true);
            let a = match rng.gen_range(0..4) {
                0 => b.clone(),
                1 => HilbertSubspace::zero(sp.len()),
                2 => {
                    let ka = rng.gen_range(0..=kb);
                    let mix = DMatrix::from_fn(kb, ka, |_, _| rng.gen_range(-1.0..1.0));
                    match HilbertSubspace::from_span(b.basis() * mix, &sp) {
                        Ok(h) => h,
                        Err(e) => return Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
                    }
                }
                _ => {
                    let ka = rng.gen_range(1..=kb);
                    let mix = DMatrix::from_fn(kb, ka, |_, _| rng.gen_range(-1.0..1.0));
                    let mut shifted = b.basis() * mix;
                    for j in 0..shifted.ncols() {
                        let c = rng.gen_range(-1.0..1.0);
                        for r in 0..shifted.nrows() {
                            shifted[(r, j)] += c;
                        }
                    }
                    match HilbertSubspace::from_span(shifted, &sp) {
                        Ok(h) => h,
                        Err(e) => return Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
                    }
                }
            };
            match is_dense_mod_constants(&a, &b, &sp) {
                Ok(_) => Outcome::Pass { residual: 0.0 },
                Err(e) => Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            }
        }
        Statement::SublevelIntersection => {
            let (sp, g) = space_and_partition(&mut rng, cfg.max_space);
            let dim = rng.gen_range(1..=sp.len());
            let h = if rng.gen_bool(0.5) {
                random_subspace(&mut rng, &sp, dim, true)
            } else {
                let mut cols = DMatrix::zeros(sp.len(), dim);
                cols.set_column(0, &random_block_constant(&mut rng, &g));
                for j in 1..dim {
                    cols.set_column(j, &random_function(&mut rng, sp.len()));
                }
                match HilbertSubspace::from_span(cols, &sp) {
                    Ok(h) if h.dim() > 0 => h,
                    _ => return Outcome::NotApplicable,
                }
            };
            let probes: Vec<_> = (0..3).map(|_| random_function(&mut rng, sp.len())).collect();
            match verify_sublevel_intersection(&h, &g, &sp, &[2.0, 0.7, 0.2, 0.05], &probes) {
                Ok(true) => Outcome::Pass { residual: 0.0 },
                Ok(false) => Outcome::Fail {
                    residual: f64::NAN,
                    detail: "membership and sublevel intersection disagree".into(),
                },
                Err(e) => Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            }
        }
        Statement::ConstantConditionalMean => {
            let (sp, g) = space_and_partition(&mut rng, cfg.max_space);
            let f = match rng.gen_range(0..3) {
                0 => random_function(&mut rng, sp.len()),
                1 => random_block_constant(&mut rng, &g),
                _ => {
                    let raw = random_function(&mut rng, sp.len());
                    let ce = gsir_core::finite::cond_expectation(&raw, &g, &sp).unwrap();
                    raw - ce
                }
            };
            let mut check = match verify_constant_conditional_mean(&f, &g, &sp) {
                Ok(c) => c,
                Err(e) => return Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            };
            if cfg.corrupt_constant_mean {
                check.side_constant_mean = !check.side_constant_mean;
            }
            if check.agrees() {
                // The residual is meaningful when both sides claim zero;
                // when both sides are robustly nonzero there is nothing to
                // measure.
                let residual = if check.side_orthogonal {
                    check.max_cov.max(check.max_mean_gap)
                } else {
                    0.0
                };
                Outcome::Pass { residual }
            } else {
                Outcome::Fail {
                    residual: check.max_cov.max(check.max_mean_gap),
                    detail: "the two sides of the constant-mean equivalence disagree".into(),
                }
            }
        }
        Statement::UniversalityFullField => {
            let (sp, _) = space_and_partition(&mut rng, cfg.max_space);
            let dim = rng.gen_range(1..=sp.len());
            let h = if rng.gen_bool(0.5) {
                random_dense_subspace(&mut rng, &sp, true)
            } else {
                random_subspace(&mut rng, &sp, dim, true)
            };
            let full = Partition::singletons(sp.len());
            let v = match verify_universality_from_denseness(&h, &full, &sp, 0.5) {
                Ok(v) => v,
                Err(e) => return Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            };
            let dense = is_dense_in_l2(&h, &sp);
            if v.conclusion_holds == dense {
                Outcome::Pass { residual: if dense { v.max_residual } else { 0.0 } }
            } else {
                Outcome::Fail {
                    residual: v.max_residual,
                    detail: format!(
                        "universality w.r.t. the full σ-field is {} but denseness is {dense}",
                        v.conclusion_holds
                    ),
                }
            }
        }
        Statement::UniversalityTrivialField => {
            let (sp, _) = space_and_partition(&mut rng, cfg.max_space);
            let dim = rng.gen_range(1..=sp.len());
            let h = random_subspace(&mut rng, &sp, dim, true);
            let trivial = Partition::trivial(sp.len());
            match verify_universality_from_denseness(&h, &trivial, &sp, 0.5) {
                Ok(v) if v.conclusion_holds => Outcome::Pass { residual: v.max_residual },
                Ok(v) => Outcome::Fail {
                    residual: v.max_residual,
                    detail: "trivial σ-field case failed".into(),
                },
                Err(e) => Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            }
        }
        Statement::UniversalityFromDenseness => {
            let (sp, g) = space_and_partition(&mut rng, cfg.max_space);
            let eps = rng.gen_range(1e-3..1.0);
            let dense_case = rng.gen_bool(0.7);
            let h = if dense_case {
                random_dense_subspace(&mut rng, &sp, true)
            } else {
                let dim = rng.gen_range(1..=(sp.len() - 1).max(1));
                random_subspace(&mut rng, &sp, dim, true)
            };
            let v = match verify_universality_from_denseness(&h, &g, &sp, eps) {
                Ok(v) => v,
                Err(e) => return Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            };
            if !v.hypothesis_holds {
                Outcome::NotApplicable
            } else if v.conclusion_holds {
                Outcome::Pass { residual: v.max_residual }
            } else {
                Outcome::Fail {
                    residual: v.max_residual,
                    detail: "dense subspace failed relative universality".into(),
                }
            }
        }
        Statement::PseudoinverseProjection => {
            let r = rng.gen_range(1..=cfg.max_space);
            let c = rng.gen_range(1..=cfg.max_space);
            let rk = rng.gen_range(0..=r.min(c));
            let a = if rk == 0 {
                DMatrix::zeros(r, c)
            } else {
                let l = DMatrix::from_fn(r, rk, |_, _| rng.gen_range(-1.0..1.0));
                let rt = DMatrix::from_fn(rk, c, |_, _| rng.gen_range(-1.0..1.0));
                l * rt
            };
            match pinv_projection_residual(&a) {
                Ok(res) if res <= tol => Outcome::Pass { residual: res },
                Ok(res) => Outcome::Fail {
                    residual: res,
                    detail: "Penrose or projection identity failed".into(),
                },
                Err(e) => Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            }
        }
        Statement::Unbiasedness => {
            let (inst, sx, sy) = match random_joint_instance(&mut rng) {
                Some(t) => t,
                None => return Outcome::NotApplicable,
            };
            let h_x = if rng.gen_bool(0.5) {
                HilbertSubspace::full_l2(&sx)
            } else {
                random_dense_subspace(&mut rng, &sx, true)
            };
            let y_dim = rng.gen_range(1..=sy.len());
            let h_y = random_subspace(&mut rng, &sy, y_dim, true);
            match verify_unbiasedness(&inst.joint, &h_x, &h_y, tol) {
                Ok(v) if !v.hypothesis_holds => Outcome::NotApplicable,
                Ok(v) if v.conclusion_holds => Outcome::Pass { residual: v.max_residual },
                Ok(v) => Outcome::Fail {
                    residual: v.max_residual,
                    detail: "a regression-operator column is not measurable".into(),
                },
                Err(e) => Outcome::Fail { residual: f64::NAN, detail: e.to_string() },
            }
        }
        Statement::ExhaustivenessFisher => {
            let (inst, sx, sy) = match random_joint_instance(&mut rng) {
                Some(t) => t,
                None => return Outcome::NotApplicable,
            };
            if !inst.complete {
                return Outcome::NotApplicable;
            }
            let h_x = HilbertSubspace::full_l2(&sx);
            let h_y = HilbertSubspace::full_l2(&sy);
            let unbiased = verify_unbiasedness(&inst.joint, &h_x, &h_y, tol);
            let exhaustive = verify_exhaustiveness(&inst.joint, &h_x, &h_y, tol);
            match (unbiased, exhaustive) {
                (Ok(u), Ok(e)) => {
                    if !e.hypothesis_holds {
                        Outcome::NotApplicable
                    } else if u.conclusion_holds && e.conclusion_holds {
                        Outcome::Pass { residual: u.max_residual.max(e.max_residual) }
                    } else {
                        Outcome::Fail {
                            residual: u.max_residual.max(e.max_residual),
                            detail: "Fisher consistency failed on a complete instance".into(),
                        }
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    Outcome::Fail { residual: f64::NAN, detail: e.to_string() }
                }
            }
        }
    }
}

fn random_joint_instance(
    rng: &mut InstanceRng,
) -> Option<(gsir_core::synth::DiscreteInstance, gsir_core::finite::FiniteSpace, gsir_core::finite::FiniteSpace)> {
    let m_x = rng.gen_range(2..=10);
    let m_y = rng.gen_range(2..=8);
    let blocks = rng.gen_range(1..=m_x.min(5));
    let seed: u64 = rng.gen();
    let inst = gen_discrete_joint(m_x, m_y, blocks, seed).ok()?;
    let sx = inst.joint.x_space();
    let sy = inst.joint.y_space();
    Some((inst, sx, sy))
}

/// Worst relative residual over the four Penrose identities and the
/// independent Gram–Schmidt construction of the row-space projector.
pub fn pinv_projection_residual(a: &DMatrix<f64>) -> gsir_core::Result<f64> {
    let p = linalg::mp_pinv(a, linalg::DEFAULT_RANK_TOL)?;
    let scale = linalg::max_abs(a).max(1.0);
    let pscale = linalg::max_abs(&p).max(1.0);
    let mut worst = linalg::max_abs(&(a * &p * a - a)) / scale;
    worst = worst.max(linalg::max_abs(&(&p * a * &p - &p)) / pscale);
    let ap = a * &p;
    worst = worst.max(linalg::max_abs(&(&ap - ap.transpose())) / scale.max(pscale));
    let pa = &p * a;
    worst = worst.max(linalg::max_abs(&(&pa - pa.transpose())) / scale.max(pscale));
    // Projection onto the row space, against an orthonormal-basis oracle.
    let proj = linalg::range_projection(a, linalg::DEFAULT_RANK_TOL)?;
    worst = worst.max(linalg::max_abs(&(&proj * &proj - &proj)));
    let u = linalg::orth_basis(&a.transpose(), linalg::DEFAULT_RANK_TOL);
    let oracle = &u * u.transpose();
    worst = worst.max(linalg::max_abs(&(&proj - oracle)));
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatementReport {
    pub name: String,
    pub instances: usize,
    pub passed: usize,
    pub not_applicable: usize,
    pub failed: usize,
    pub worst_residual: f64,
    /// Seed reproducing the first failure, when any.
    pub failure_seed: Option<u64>,
    pub failure_detail: Option<String>,
}

/// Run one statement over `cfg.instances` seeded instances, in parallel.
pub fn run_statement(st: Statement, cfg: &VerifyConfig) -> StatementReport {
    let outcomes: Vec<(u64, Outcome)> = (0..cfg.instances as u64)
        .into_par_iter()
        .map(|i| {
            let seed = instance_seed(cfg.seed, st, i);
            (seed, run_instance(st, seed, cfg))
        })
        .collect();
    let mut report = StatementReport {
        name: st.name().into(),
        instances: cfg.instances,
        passed: 0,
        not_applicable: 0,
        failed: 0,
        worst_residual: 0.0,
        failure_seed: None,
        failure_detail: None,
    };
    for (seed, outcome) in outcomes {
        match outcome {
            Outcome::Pass { residual } => {
                report.passed += 1;
                if residual.is_finite() {
                    report.worst_residual = report.worst_residual.max(residual);
                }
            }
            Outcome::NotApplicable => report.not_applicable += 1,
            Outcome::Fail { residual, detail } => {
                report.failed += 1;
                if residual.is_finite() {
                    report.worst_residual = report.worst_residual.max(residual);
                }
                if report.failure_seed.is_none() {
                    report.failure_seed = Some(seed);
                    report.failure_detail = Some(detail);
                }
            }
        }
    }
    report
}
