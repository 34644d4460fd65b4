//! Dense numerical linear algebra shared by the exact oracle and the sampled
//! estimator: Moore–Penrose pseudoinverse with rank control, projections,
//! symmetric and generalized symmetric eigenproblems, ridge solves, and PSD
//! square roots.
//!
//! Decompositions are backed by `nalgebra`; everything here is a pure
//! function of its inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative rank tolerance: singular values below `tol * sigma_max`
/// count as zero. Chosen as the double-precision SVD noise floor with
/// headroom.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Eigenvalues sorted descending with their eigenvectors as columns.
/// Vectors are unit-norm in the metric of the problem that produced them.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

fn check_finite(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} contains non-finite entries")));
    }
    Ok(())
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = max_abs(a).max(1.0);
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (a + a.transpose())
}

/// Thin singular value decomposition `A = U diag(s) V^T` with
/// `r = min(rows, cols)`: `U` is rows×r, `V` is cols×r, `s` descending and
/// nonnegative.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD. Chosen over a bidiagonalization SVD because it
/// stays exact-rank-safe: zero columns keep zero singular values and the
/// factors always reconstruct the input. Cost is O(rows * cols^2) per sweep,
/// which is fine at the column counts used here.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<ThinSvd> {
    check_finite(a, "matrix")?;
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        let t = thin_svd(&a.transpose())?;
        return Ok(ThinSvd { u: t.v, singular_values: t.singular_values, v: t.u });
    }
    let mut b = a.clone();
    let mut v = DMatrix::identity(n, n);
    // Columns whose norm has collapsed below roundoff scale carry no
    // information; rotating them against real columns makes no progress and
    // would stall the sweep loop.
    let scale2: f64 = (0..n).map(|j| b.column(j).norm_squared()).fold(0.0, f64::max);
    let dead = scale2 * 1e-30;
    const MAX_SWEEPS: usize = 64;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let bi = b[(r, i)];
                    let bj = b[(r, j)];
                    alpha += bi * bi;
                    beta += bj * bj;
                    gamma += bi * bj;
                }
                if alpha <= dead || beta <= dead {
                    continue;
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let bi = b[(r, i)];
                    let bj = b[(r, j)];
                    b[(r, i)] = c * bi - s * bj;
                    b[(r, j)] = s * bi + c * bj;
                }
                for r in 0..n {
                    let vi = v[(r, i)];
                    let vj = v[(r, j)];
                    v[(r, i)] = c * vi - s * vj;
                    v[(r, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::InvalidInput("singular value decomposition did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = DMatrix::zeros(m, n);
    let mut vv = DMatrix::zeros(n, n);
    let mut sv = DVector::zeros(n);
    for (k, &j) in order.iter().enumerate() {
        sv[k] = norms[j];
        vv.set_column(k, &v.column(j));
        if norms[j] > 0.0 {
            u.set_column(k, &(b.column(j) / norms[j]));
        }
    }
    Ok(ThinSvd { u, singular_values: sv, v: vv })
}

/// Moore–Penrose pseudoinverse via SVD. Singular values strictly above
/// `tol * sigma_max` are inverted, the rest are zeroed.
pub fn mp_pinv(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if tol < 0.0 {
        return Err(Error::InvalidInput("rank tolerance must be nonnegative".into()));
    }
    let svd = thin_svd(a)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = tol * smax;
    let inv = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().map(|&s| if s > cutoff { 1.0 / s } else { 0.0 }),
    );
    Ok(&svd.v * DMatrix::from_diagonal(&inv) * svd.u.transpose())
}

/// Numerical rank with relative singular-value cutoff.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let svd = thin_svd(a).expect("svd of finite matrix");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = tol * smax;
    svd.singular_values.iter().filter(|&&s| s > cutoff).count()
}

/// Orthonormal basis of the column space, with relative cutoff `tol`.
pub fn orth_basis(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = thin_svd(a).expect("svd of finite matrix");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = tol * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .collect();
    let mut out = DMatrix::zeros(a.nrows(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &svd.u.column(i));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of an orthonormal `u`.
///
/// Works through the projector `I - u u^T`, whose spectrum is exactly {0, 1};
/// the 0.5 threshold makes the split immune to rounding.
pub fn orth_complement(u: &DMatrix<f64>) -> DMatrix<f64> {
    let m = u.nrows();
    let proj = DMatrix::identity(m, m) - u * u.transpose();
    let eig = nalgebra::SymmetricEigen::new(symmetrize(&proj));
    let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let mut out = DMatrix::zeros(m, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &eig.eigenvectors.column(i));
    }
    out
}

/// Relative residual of `v` after projecting onto the column span of `basis`
/// (Euclidean). Zero vectors have residual zero.
pub fn span_residual(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let u = orth_basis(basis, DEFAULT_RANK_TOL);
    let proj = &u * (u.transpose() * v);
    (v - proj).norm() / norm
}

/// Largest relative residual over the columns of `candidates` projected onto
/// the span of `container`.
pub fn containment_residual(container: &DMatrix<f64>, candidates: &DMatrix<f64>) -> f64 {
    let u = orth_basis(container, DEFAULT_RANK_TOL);
    let mut worst = 0.0_f64;
    for j in 0..candidates.ncols() {
        let v = candidates.column(j).into_owned();
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let proj = &u * (u.transpose() * &v);
        worst = worst.max((v - proj).norm() / norm);
    }
    worst
}

/// Whether two column spans are equal within `tol` (mutual containment).
pub fn same_span(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    containment_residual(a, b) <= tol && containment_residual(b, a) <= tol
}

/// Projection onto the row space of `a` as `pinv(a) * a`. The result is
/// idempotent and symmetric for the Euclidean metric.
pub fn range_projection(a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let pinv = mp_pinv(a, tol)?;
    Ok(pinv * a)
}

/// Symmetric eigendecomposition, eigenvalues descending, columns orthonormal.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<EigResult> {
    check_finite(a, "matrix")?;
    if !is_symmetric(a, 1e-10) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    let eig = nalgebra::SymmetricEigen::new(symmetrize(a));
    Ok(sorted_desc(eig.eigenvalues, eig.eigenvectors))
}

fn sorted_desc(values: DVector<f64>, vectors: DMatrix<f64>) -> EigResult {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep the underlying solver's order.
    idx.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    let mut ev = DVector::zeros(n);
    let mut vecs = DMatrix::zeros(vectors.nrows(), n);
    for (k, &i) in idx.iter().enumerate() {
        ev[k] = values[i];
        vecs.set_column(k, &vectors.column(i));
    }
    EigResult { eigenvalues: ev, eigenvectors: vecs }
}

/// Solve `A v = lambda (B + jitter I) v` for symmetric `A`, `B` by
/// Cholesky-based reduction to an ordinary symmetric problem.
///
/// Eigenvalues come back descending; the vectors satisfy
/// `v^T (B + jitter I) v = 1`.
pub fn generalized_sym_eig(a: &DMatrix<f64>, b: &DMatrix<f64>, jitter: f64) -> Result<EigResult> {
    check_finite(a, "lhs matrix")?;
    check_finite(b, "rhs matrix")?;
    if jitter < 0.0 {
        return Err(Error::InvalidInput("jitter must be nonnegative".into()));
    }
    if a.nrows() != a.ncols() || b.nrows() != b.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "generalized eigenproblem needs equal square matrices, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if !is_symmetric(a, 1e-10) || !is_symmetric(b, 1e-10) {
        return Err(Error::InvalidInput("generalized eigenproblem needs symmetric matrices".into()));
    }
    let n = a.nrows();
    let bj = symmetrize(b) + DMatrix::identity(n, n) * jitter;
    let chol = nalgebra::Cholesky::new(bj).ok_or_else(|| {
        Error::NotPositiveDefinite(
            "rhs matrix plus jitter is not positive definite; try a larger jitter".into(),
        )
    })?;
    let l = chol.l();
    // C = L^-1 A L^-T, computed with two triangular solves.
    let y = l.solve_lower_triangular(a).ok_or_else(|| {
        Error::NotPositiveDefinite("triangular solve failed in eigenproblem reduction".into())
    })?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| {
            Error::NotPositiveDefinite("triangular solve failed in eigenproblem reduction".into())
        })?
        .transpose();
    let eig = nalgebra::SymmetricEigen::new(symmetrize(&c));
    // Map w back to v = L^-T w; w orthonormal gives v^T (B + jI) v = 1.
    let vectors = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| {
            Error::NotPositiveDefinite("triangular solve failed in eigenproblem back-transform".into())
        })?;
    Ok(sorted_desc(eig.eigenvalues, vectors))
}

/// Solve `(M + lambda I) X = RHS` through Cholesky for symmetric PSD `M`.
pub fn ridge_solve(m: &DMatrix<f64>, lambda: f64, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_finite(m, "matrix")?;
    check_finite(rhs, "rhs")?;
    if lambda <= 0.0 {
        return Err(Error::InvalidInput("ridge parameter must be positive".into()));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("ridge solve needs a square matrix".into()));
    }
    if m.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "ridge solve: matrix is {}x{} but rhs has {} rows",
            m.nrows(),
            m.ncols(),
            rhs.nrows()
        )));
    }
    if !is_symmetric(m, 1e-8) {
        return Err(Error::InvalidInput("ridge solve needs a symmetric matrix".into()));
    }
    let n = m.nrows();
    let shifted = symmetrize(m) + DMatrix::identity(n, n) * lambda;
    let chol = nalgebra::Cholesky::new(shifted).ok_or_else(|| {
        Error::NotPositiveDefinite("ridge-shifted matrix is not positive definite".into())
    })?;
    Ok(chol.solve(rhs))
}

/// Symmetric square root of a PSD matrix. Eigenvalues slightly negative from
/// roundoff (above `-1e-10 * ||M||`) are clipped to zero; anything below that
/// is rejected as significantly indefinite.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(m)?;
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let floor = -1e-10 * scale.max(1e-300);
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for i in 0..eig.eigenvalues.len() {
        let v = eig.eigenvalues[i];
        if v < floor {
            return Err(Error::InvalidInput(format!(
                "matrix is significantly indefinite (eigenvalue {v:.3e})"
            )));
        }
        roots[i] = v.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&roots) * v.transpose())))
}
