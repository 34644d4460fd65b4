//! Hilbert subspaces of L2 over a finite space, and the orthogonality
//! structures built on top of them.
//!
//! A subspace carries its own inner product, given as a symmetric
//! positive-definite matrix in basis coordinates; it need not agree with the
//! L2 inner product of the ambient space. Span-level questions (containment,
//! equality, complements with respect to the covariance pairing) are
//! metric-free and are answered with Euclidean rank computations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

use super::{cond_expectation, expected_cond_variance, FiniteSpace, FunctionVec, Partition};

/// Relative tolerance for span containment/equality decisions.
const SPAN_TOL: f64 = 1e-9;

/// A subspace of L2 over a finite space with its own inner product.
///
/// `basis` is m×k with linearly independent columns; `metric` is the k×k
/// Gram matrix of the subspace's inner product in basis coordinates. The
/// zero subspace (`k = 0`) is allowed.
#[derive(Debug, Clone)]
pub struct HilbertSubspace {
    basis: DMatrix<f64>,
    metric: DMatrix<f64>,
}

impl HilbertSubspace {
    pub fn new(basis: DMatrix<f64>, metric: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        if metric.nrows() != k || metric.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "metric is {}x{} but basis has {k} columns",
                metric.nrows(),
                metric.ncols()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) || metric.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("subspace data must be finite".into()));
        }
        if k > 0 {
            if linalg::rank(&basis, linalg::DEFAULT_RANK_TOL) != k {
                return Err(Error::InvalidInput(
                    "basis columns are not linearly independent".into(),
                ));
            }
            if !linalg::is_symmetric(&metric, 1e-12) {
                return Err(Error::InvalidInput("metric is not symmetric".into()));
            }
            let eig = linalg::sym_eig(&metric)?;
            let min = eig.eigenvalues[eig.eigenvalues.len() - 1];
            if min <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "metric is not positive definite (min eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(Self { basis, metric })
    }

    /// All of L2 over the space, with the L2 inner product.
    pub fn full_l2(sp: &FiniteSpace) -> Self {
        let m = sp.len();
        Self {
            basis: DMatrix::identity(m, m),
            metric: DMatrix::from_diagonal(sp.pmf()),
        }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
            metric: DMatrix::zeros(0, 0),
        }
    }

    /// Span with the L2 metric restricted to it; the basis is orthonormalized
    /// in the Euclidean sense first.
    pub fn from_span(columns: DMatrix<f64>, sp: &FiniteSpace) -> Result<Self> {
        let basis = linalg::orth_basis(&columns, linalg::DEFAULT_RANK_TOL);
        let metric = l2_gram(&basis, sp);
        Self::new(basis, metric)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// The function with the given basis coordinates.
    pub fn member(&self, coords: &DVector<f64>) -> FunctionVec {
        &self.basis * coords
    }

    /// Basis functions as ambient vectors.
    pub fn basis_functions(&self) -> Vec<FunctionVec> {
        (0..self.dim()).map(|j| self.basis.column(j).into_owned()).collect()
    }

    pub fn contains_function(&self, f: &FunctionVec, tol: f64) -> bool {
        linalg::span_residual(&self.basis, f) <= tol
    }

    /// Gram matrix of the basis under the ambient L2 inner product.
    pub fn l2_gram(&self, sp: &FiniteSpace) -> DMatrix<f64> {
        l2_gram(&self.basis, sp)
    }
}

fn l2_gram(basis: &DMatrix<f64>, sp: &FiniteSpace) -> DMatrix<f64> {
    let mut weighted = basis.clone();
    for i in 0..weighted.nrows() {
        let p = sp.pmf()[i];
        for j in 0..weighted.ncols() {
            weighted[(i, j)] *= p;
        }
    }
    linalg::symmetrize(&(basis.transpose() * weighted))
}

/// The G-measurable members of `h`: the null space of the quadratic form
/// `f -> E(var[f | g])` restricted to `h`.
pub fn measurable_subspace(h: &HilbertSubspace, g: &Partition, sp: &FiniteSpace) -> Result<HilbertSubspace> {
    if h.ambient_dim() != sp.len() || g.atom_count() != sp.len() {
        return Err(Error::DimensionMismatch(
            "subspace/partition/space sizes disagree".into(),
        ));
    }
    let k = h.dim();
    if k == 0 {
        return Ok(HilbertSubspace::zero(sp.len()));
    }
    // Residual of each basis function after conditional expectation, weighted
    // by sqrt(pmf) so singular values measure E(var[. | g]) in L2.
    let mut resid = DMatrix::zeros(sp.len(), k);
    for j in 0..k {
        let col = h.basis().column(j).into_owned();
        let ce = cond_expectation(&col, g, sp)?;
        for i in 0..sp.len() {
            resid[(i, j)] = sp.pmf()[i].sqrt() * (col[i] - ce[i]);
        }
    }
    let svd = linalg::thin_svd(&resid)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    // Relative cutoff with an absolute floor at the scale of the basis norms,
    // so a fully measurable subspace is recognized even when the residual
    // matrix is pure roundoff.
    let mut scaled = h.basis().clone();
    for i in 0..scaled.nrows() {
        let w = sp.pmf()[i].sqrt();
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= w;
        }
    }
    let basis_scale = linalg::max_abs(&scaled).max(1e-300);
    let cutoff = (linalg::DEFAULT_RANK_TOL * smax).max(1e-12 * basis_scale);
    let null_idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    if null_idx.is_empty() {
        return Ok(HilbertSubspace::zero(sp.len()));
    }
    let mut coords = DMatrix::zeros(k, null_idx.len());
    for (c, &i) in null_idx.iter().enumerate() {
        coords.set_column(c, &svd.v.column(i));
    }
    let basis = h.basis() * &coords;
    let metric = linalg::symmetrize(&(coords.transpose() * h.metric() * &coords));
    HilbertSubspace::new(basis, metric)
}

/// The G-measurable functions of L2 itself: indicators of the blocks, with
/// the L2 metric.
pub fn measurable_l2(g: &Partition, sp: &FiniteSpace) -> HilbertSubspace {
    let basis = g.indicator_basis();
    let metric = l2_gram(&basis, sp);
    HilbertSubspace::new(basis, metric).expect("indicator basis is independent")
}

/// Orthogonal complement under the covariance pairing: all f of L2 with
/// `cov(f, s) = 0` for every s in the spanning set. Always contains the
/// constants.
pub fn perp3_complement(spanning: &[FunctionVec], sp: &FiniteSpace) -> Result<HilbertSubspace> {
    let m = sp.len();
    for s in spanning {
        if s.len() != m {
            return Err(Error::DimensionMismatch(
                "spanning function has wrong length for the space".into(),
            ));
        }
    }
    if spanning.is_empty() {
        return Ok(HilbertSubspace::full_l2(sp));
    }
    // Constraint vectors: cov(f, s) = f . (P s_centered); the complement is
    // everything orthogonal to them. A constant s yields the zero functional
    // up to roundoff, and is dropped so noise cannot masquerade as a
    // constraint.
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for s in spanning {
        let mean = sp.mean(s);
        let col = DVector::from_fn(m, |i, _| sp.pmf()[i] * (s[i] - mean));
        if col.norm() > 1e-12 * s.norm().max(1e-300) {
            cols.push(col);
        }
    }
    if cols.is_empty() {
        return Ok(HilbertSubspace::full_l2(sp));
    }
    let mut constraints = DMatrix::zeros(m, cols.len());
    for (j, col) in cols.iter().enumerate() {
        constraints.set_column(j, col);
    }
    let row_space = linalg::orth_basis(&constraints, linalg::DEFAULT_RANK_TOL);
    let basis = linalg::orth_complement(&row_space);
    let metric = l2_gram(&basis, sp);
    HilbertSubspace::new(basis, metric)
}

/// Covariance-orthogonal complement of the ε-sublevel set
/// `{f in h : E(var[f | g]) < eps}`.
///
/// The sublevel set is star-shaped rather than linear, but the covariance
/// pairing is bilinear, so orthogonality to the set equals orthogonality to
/// its span. The span is computed from a probe set: basis functions already
/// inside the sublevel are kept, the rest are rescaled into it.
pub fn eps_sublevel_perp3(
    h: &HilbertSubspace,
    g: &Partition,
    sp: &FiniteSpace,
    eps: f64,
) -> Result<HilbertSubspace> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be strictly positive".into()));
    }
    let mut probes = Vec::with_capacity(h.dim());
    for col in h.basis_functions() {
        let ev = expected_cond_variance(&col, g, sp)?;
        if ev < eps {
            probes.push(col);
        } else {
            probes.push(col * (eps / (2.0 * ev)).sqrt());
        }
    }
    perp3_complement(&probes, sp)
}

/// Whether `a` is dense in `b` modulo constants. In finite dimension the
/// closure collapses to the span, so this is the span comparison
/// `span(a ∪ {1}) ⊇ span(b)`.
///
/// Requires `span(a) ⊆ span(b) + constants`. Two independent routes are
/// computed — the span comparison and the equality of covariance-orthogonal
/// complements — and must agree; disagreement is reported as an oracle
/// inconsistency (it would falsify the equivalence this function rests on).
pub fn is_dense_mod_constants(
    a: &HilbertSubspace,
    b: &HilbertSubspace,
    sp: &FiniteSpace,
) -> Result<bool> {
    let m = sp.len();
    if a.ambient_dim() != m || b.ambient_dim() != m {
        return Err(Error::DimensionMismatch("subspaces live over different spaces".into()));
    }
    let ones = DMatrix::from_element(m, 1, 1.0);
    let b_plus_const = append_cols(b.basis(), &ones);
    if linalg::containment_residual(&b_plus_const, a.basis()) > SPAN_TOL {
        return Err(Error::PreconditionViolation(
            "first subspace is not contained in the second modulo constants".into(),
        ));
    }

    let a_plus_const = append_cols(a.basis(), &ones);
    let by_span = linalg::containment_residual(&a_plus_const, b.basis()) <= SPAN_TOL;

    let pa = perp3_complement(&a.basis_functions(), sp)?;
    let pb = perp3_complement(&b.basis_functions(), sp)?;
    let by_perp = linalg::same_span(pa.basis(), pb.basis(), SPAN_TOL);

    if by_span != by_perp {
        return Err(Error::OracleInconsistency {
            statement: "dense-modulo-constants".into(),
            detail: format!("span comparison says {by_span}, complement comparison says {by_perp}"),
        });
    }
    Ok(by_span)
}

fn append_cols(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    for j in 0..a.ncols() {
        out.set_column(j, &a.column(j));
    }
    for j in 0..b.ncols() {
        out.set_column(a.ncols() + j, &b.column(j));
    }
    out
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

    #[test]
    fn subspace_validation() {
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(HilbertSubspace::new(basis.clone(), DMatrix::identity(2, 2)).is_ok());
        // Dependent columns rejected.
        let dep = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        assert!(HilbertSubspace::new(dep, DMatrix::identity(2, 2)).is_err());
        // Indefinite metric rejected.
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(HilbertSubspace::new(basis, bad).is_err());
    }

    #[test]
    fn measurable_subspace_of_full_l2() {
        let (sp, g) = two_block_4();
        let h = HilbertSubspace::full_l2(&sp);
        let meas = measurable_subspace(&h, &g, &sp).unwrap();
        assert_eq!(meas.dim(), 2);
        // Every member is block-constant.
        for f in meas.basis_functions() {
            assert!(expected_cond_variance(&f, &g, &sp).unwrap() < 1e-20);
        }
    }

    #[test]
    fn measurable_subspace_singletons_is_everything() {
        let sp = FiniteSpace::uniform(4);
        let h = HilbertSubspace::full_l2(&sp);
        let meas = measurable_subspace(&h, &Partition::singletons(4), &sp).unwrap();
        assert_eq!(meas.dim(), 4);
    }

    #[test]
    fn measurable_subspace_can_be_zero() {
        let (sp, g) = two_block_4();
        let basis = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 0.0, 0.0]);
        let h = HilbertSubspace::new(basis, DMatrix::identity(1, 1)).unwrap();
        let meas = measurable_subspace(&h, &g, &sp).unwrap();
        assert_eq!(meas.dim(), 0);
    }

    #[test]
    fn perp3_of_empty_is_everything() {
        let sp = FiniteSpace::uniform(3);
        let p = perp3_complement(&[], &sp).unwrap();
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn perp3_of_constants_is_everything() {
        let sp = FiniteSpace::from_pmf(vec![0.2, 0.3, 0.5]).unwrap();
        let ones = DVector::from_element(3, 2.5);
        let p = perp3_complement(&[ones], &sp).unwrap();
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn perp3_two_point_example() {
        let sp = FiniteSpace::uniform(2);
        let s = DVector::from_row_slice(&[1.0, -1.0]);
        let p = perp3_complement(&[s], &sp).unwrap();
        assert_eq!(p.dim(), 1);
        // The remaining direction is the constants.
        let b = p.basis().column(0);
        assert!((b[0] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn perp3_always_contains_constants() {
        let sp = FiniteSpace::from_pmf(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let fns = vec![
            DVector::from_row_slice(&[1.0, -2.0, 0.3, 4.0]),
            DVector::from_row_slice(&[0.0, 1.0, -1.0, 2.0]),
        ];
        let p = perp3_complement(&fns, &sp).unwrap();
        let ones = DVector::from_element(4, 1.0);
        assert!(p.contains_function(&ones, 1e-9));
    }

    #[test]
    fn sublevel_perp3_full_l2_leaves_constants() {
        let sp = FiniteSpace::uniform(4);
        let g = Partition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let h = HilbertSubspace::full_l2(&sp);
        let p = eps_sublevel_perp3(&h, &g, &sp, 0.5).unwrap();
        assert_eq!(p.dim(), 1);
    }

    #[test]
    fn sublevel_perp3_zero_subspace_gives_everything() {
        let sp = FiniteSpace::uniform(3);
        let g = Partition::trivial(3);
        let h = HilbertSubspace::zero(3);
        let p = eps_sublevel_perp3(&h, &g, &sp, 0.1).unwrap();
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn sublevel_perp3_singletons_matches_plain_perp3() {
        // With the full σ-field the sublevel set is all of h for every eps.
        let sp = FiniteSpace::from_pmf(vec![0.3, 0.3, 0.4]).unwrap();
        let basis = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, -1.0]);
        let h = HilbertSubspace::new(basis, DMatrix::identity(1, 1)).unwrap();
        let p1 = eps_sublevel_perp3(&h, &Partition::singletons(3), &sp, 1e-6).unwrap();
        let p2 = perp3_complement(&h.basis_functions(), &sp).unwrap();
        assert!(linalg::same_span(p1.basis(), p2.basis(), 1e-9));
    }

    #[test]
    fn sublevel_perp3_rejects_bad_eps() {
        let sp = FiniteSpace::uniform(2);
        let h = HilbertSubspace::full_l2(&sp);
        let g = Partition::trivial(2);
        assert!(eps_sublevel_perp3(&h, &g, &sp, 0.0).is_err());
        assert!(eps_sublevel_perp3(&h, &g, &sp, -1.0).is_err());
    }

    #[test]
    fn dense_mod_constants_identity() {
        let sp = FiniteSpace::uniform(4);
        let h = HilbertSubspace::full_l2(&sp);
        assert!(is_dense_mod_constants(&h, &h, &sp).unwrap());
    }

    #[test]
    fn dense_mod_constants_zero_in_constants() {
        let sp = FiniteSpace::uniform(3);
        let a = HilbertSubspace::zero(3);
        let consts =
            HilbertSubspace::from_span(DMatrix::from_element(3, 1, 1.0), &sp).unwrap();
        assert!(is_dense_mod_constants(&a, &consts, &sp).unwrap());
    }

    #[test]
    fn dense_mod_constants_counterexample() {
        let sp = FiniteSpace::uniform(4);
        let a = HilbertSubspace::from_span(
            DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]),
            &sp,
        )
        .unwrap();
        let b = HilbertSubspace::full_l2(&sp);
        assert!(!is_dense_mod_constants(&a, &b, &sp).unwrap());
    }

    #[test]
    fn dense_mod_constants_precondition() {
        let sp = FiniteSpace::uniform(4);
        let a = HilbertSubspace::full_l2(&sp);
        let b = HilbertSubspace::from_span(
            DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]),
            &sp,
        )
        .unwrap();
        assert!(matches!(
            is_dense_mod_constants(&a, &b, &sp),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn dense_mod_constants_shifted_subspace() {
        // a = {b + constant shifts} is allowed and dense in b.
        let sp = FiniteSpace::uniform(4);
        let b = HilbertSubspace::from_span(
            DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 2.0, 0.0]),
            &sp,
        )
        .unwrap();
        let shifted = DMatrix::from_column_slice(4, 1, &[4.0, 2.0, 5.0, 3.0]);
        let a = HilbertSubspace::from_span(shifted, &sp).unwrap();
        assert!(is_dense_mod_constants(&a, &b, &sp).unwrap());
    }
}
