//! Joint models over a product of finite spaces, and the population
//! operators they induce.
//!
//! The covariance operators are the Riesz representations of the covariance
//! bilinear forms: with basis coordinates u, v and subspace metrics M_X, M_Y,
//! the coordinate matrix of Sigma_XX solves `M_X S = B_X' (P - p p') B_X`,
//! and similarly for the cross terms. The regression operator composes the
//! metric-aware Moore–Penrose inverse of Sigma_XX with Sigma_XY.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

use super::{FiniteSpace, HilbertSubspace, Partition};

/// Absolute tolerance for grouping equal conditional rows.
const ROW_EQUALITY_TOL: f64 = 1e-10;

/// A joint pmf over the product of two finite atom sets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    joint: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointJson {
    joint: Vec<Vec<f64>>,
}

impl JointModel {
    pub fn new(joint: DMatrix<f64>) -> Result<Self> {
        if joint.nrows() == 0 || joint.ncols() == 0 {
            return Err(Error::InvalidInput("joint must be nonempty".into()));
        }
        if joint.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidInput("joint entries must be nonnegative and finite".into()));
        }
        let total: f64 = joint.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("joint sums to {total}, not 1")));
        }
        let jm = Self { joint };
        if jm.x_marginal().iter().any(|&p| p <= 0.0) || jm.y_marginal().iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidInput("all marginals must be strictly positive".into()));
        }
        Ok(jm)
    }

    pub fn joint(&self) -> &DMatrix<f64> {
        &self.joint
    }

    pub fn num_x(&self) -> usize {
        self.joint.nrows()
    }

    pub fn num_y(&self) -> usize {
        self.joint.ncols()
    }

    pub fn x_marginal(&self) -> DVector<f64> {
        DVector::from_iterator(self.num_x(), self.joint.row_iter().map(|r| r.sum()))
    }

    pub fn y_marginal(&self) -> DVector<f64> {
        DVector::from_iterator(self.num_y(), self.joint.column_iter().map(|c| c.sum()))
    }

    pub fn x_space(&self) -> FiniteSpace {
        FiniteSpace::from_pmf(self.x_marginal().iter().cloned().collect())
            .expect("marginal is a valid pmf")
    }

    pub fn y_space(&self) -> FiniteSpace {
        FiniteSpace::from_pmf(self.y_marginal().iter().cloned().collect())
            .expect("marginal is a valid pmf")
    }

    /// Row x of the matrix P(Y = . | X = x).
    pub fn conditional_rows(&self) -> DMatrix<f64> {
        let px = self.x_marginal();
        let mut rows = self.joint.clone();
        for i in 0..rows.nrows() {
            for j in 0..rows.ncols() {
                rows[(i, j)] /= px[i];
            }
        }
        rows
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .joint
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect();
        serde_json::to_string_pretty(&JointJson { joint: rows }).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: JointJson = serde_json::from_str(s)?;
        let nrows = raw.joint.len();
        let ncols = raw.joint.first().map(|r| r.len()).unwrap_or(0);
        if raw.joint.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("joint rows have uneven lengths".into()));
        }
        let flat: Vec<f64> = raw.joint.into_iter().flatten().collect();
        Self::new(DMatrix::from_row_slice(nrows, ncols, &flat))
    }
}

/// Coordinate matrices of the population covariance operators and mean
/// elements of a joint model restricted to the two subspaces.
#[derive(Debug, Clone)]
pub struct PopulationOperators {
    pub sigma_xx: DMatrix<f64>,
    pub sigma_xy: DMatrix<f64>,
    pub sigma_yx: DMatrix<f64>,
    pub sigma_yy: DMatrix<f64>,
    pub mu_x: DVector<f64>,
    pub mu_y: DVector<f64>,
    pub h_x: HilbertSubspace,
    pub h_y: HilbertSubspace,
}

fn metric_solve(metric: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if metric.nrows() == 0 {
        return Ok(DMatrix::zeros(0, rhs.ncols()));
    }
    let chol = nalgebra::Cholesky::new(linalg::symmetrize(metric))
        .ok_or_else(|| Error::NotPositiveDefinite("subspace metric is not positive definite".into()))?;
    Ok(chol.solve(rhs))
}

/// Centered second-moment form between two bases under a joint weight
/// matrix: `B_X' (W - p_x p_y') B_Y`.
fn centered_form(
    bx: &DMatrix<f64>,
    by: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    px: &DVector<f64>,
    py: &DVector<f64>,
) -> DMatrix<f64> {
    let centered = weights - px * py.transpose();
    bx.transpose() * centered * by
}

/// Covariance operators and mean elements for `(h_x, h_y)` under the joint.
pub fn population_operators(
    jm: &JointModel,
    h_x: &HilbertSubspace,
    h_y: &HilbertSubspace,
) -> Result<PopulationOperators> {
    if h_x.ambient_dim() != jm.num_x() || h_y.ambient_dim() != jm.num_y() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces are over {} and {} atoms but the joint is {}x{}",
            h_x.ambient_dim(),
            h_y.ambient_dim(),
            jm.num_x(),
            jm.num_y()
        )));
    }
    let px = jm.x_marginal();
    let py = jm.y_marginal();
    let pxd = DMatrix::from_diagonal(&px);
    let pyd = DMatrix::from_diagonal(&py);

    let c_xx = linalg::symmetrize(&centered_form(h_x.basis(), h_x.basis(), &pxd, &px, &px));
    let c_yy = linalg::symmetrize(&centered_form(h_y.basis(), h_y.basis(), &pyd, &py, &py));
    let c_xy = centered_form(h_x.basis(), h_y.basis(), jm.joint(), &px, &py);

    let sigma_xx = metric_solve(h_x.metric(), &c_xx)?;
    let sigma_yy = metric_solve(h_y.metric(), &c_yy)?;
    let sigma_xy = metric_solve(h_x.metric(), &c_xy)?;
    let sigma_yx = metric_solve(h_y.metric(), &c_xy.transpose())?;

    let bx_px = DMatrix::from_column_slice(h_x.dim(), 1, (h_x.basis().transpose() * &px).as_slice());
    let by_py = DMatrix::from_column_slice(h_y.dim(), 1, (h_y.basis().transpose() * &py).as_slice());
    let mu_x = metric_solve(h_x.metric(), &bx_px)?.column(0).into_owned();
    let mu_y = metric_solve(h_y.metric(), &by_py)?.column(0).into_owned();

    Ok(PopulationOperators {
        sigma_xx,
        sigma_xy,
        sigma_yx,
        sigma_yy,
        mu_x,
        mu_y,
        h_x: h_x.clone(),
        h_y: h_y.clone(),
    })
}

/// Whether every column of `a` lies in the column space of `b`, up to
/// `tol` times the column norm. Columns at roundoff scale relative to the
/// pair count as zero.
pub fn check_range_inclusion(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    if a.nrows() != b.nrows() {
        return false;
    }
    let floor = 1e-13 * linalg::max_abs(a).max(linalg::max_abs(b)).max(1e-300)
        * (a.nrows() as f64).sqrt();
    let u = linalg::orth_basis(b, linalg::DEFAULT_RANK_TOL);
    for j in 0..a.ncols() {
        let col = a.column(j).into_owned();
        let norm = col.norm();
        if norm <= floor {
            continue;
        }
        let proj = &u * (u.transpose() * &col);
        if (col - proj).norm() > tol * norm {
            return false;
        }
    }
    true
}

/// The regression operator `pinv(Sigma_XX) * Sigma_XY` with the
/// pseudoinverse taken with respect to the H_X inner product.
///
/// Requires the range of Sigma_XY to lie inside the range of Sigma_XX; the
/// violation is reported as a failed assumption rather than silently
/// projected away.
pub fn population_regression_operator(ops: &PopulationOperators, tol: f64) -> Result<DMatrix<f64>> {
    if !check_range_inclusion(&ops.sigma_xy, &ops.sigma_xx, tol.max(1e-12)) {
        return Err(Error::AssumptionViolation {
            name: "range inclusion".into(),
            detail: "ran(Sigma_XY) is not contained in ran(Sigma_XX); the regression operator is undefined"
                .into(),
        });
    }
    let k = ops.sigma_xx.nrows();
    if k == 0 {
        return Ok(DMatrix::zeros(0, ops.sigma_xy.ncols()));
    }
    // Whiten by the Cholesky factor of the metric so the Euclidean
    // pseudoinverse realizes the metric-orthogonal one:
    //   R = L^-T pinv(L^-1 C_XX L^-T) L^-1 C_XY,  M = L L^T.
    let chol = nalgebra::Cholesky::new(linalg::symmetrize(ops.h_x.metric()))
        .ok_or_else(|| Error::NotPositiveDefinite("subspace metric is not positive definite".into()))?;
    let l = chol.l();
    let c_xx = ops.h_x.metric() * &ops.sigma_xx;
    let c_xy = ops.h_x.metric() * &ops.sigma_xy;
    let y = l
        .solve_lower_triangular(&c_xx)
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve failed".into()))?;
    let whitened = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve failed".into()))?
        .transpose();
    let pinv = linalg::mp_pinv(&linalg::symmetrize(&whitened), linalg::DEFAULT_RANK_TOL)?;
    let rhs = l
        .solve_lower_triangular(&c_xy)
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve failed".into()))?;
    let solved = pinv * rhs;
    let r = l
        .transpose()
        .solve_upper_triangular(&solved)
        .ok_or_else(|| Error::NotPositiveDefinite("triangular solve failed".into()))?;
    Ok(r)
}

/// The coarsest partition of the X atoms given which X and Y are
/// conditionally independent: atoms are grouped exactly when their
/// conditional rows P(Y = . | X = x) agree.
pub fn central_partition(jm: &JointModel) -> Partition {
    let rows = jm.conditional_rows();
    let mut reps: Vec<usize> = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    'atoms: for i in 0..jm.num_x() {
        for (b, &r) in reps.iter().enumerate() {
            let equal = (0..jm.num_y()).all(|j| (rows[(i, j)] - rows[(r, j)]).abs() <= ROW_EQUALITY_TOL);
            if equal {
                blocks[b].push(i);
                continue 'atoms;
            }
        }
        reps.push(i);
        blocks.push(vec![i]);
    }
    Partition::new(blocks, jm.num_x()).expect("row grouping is a partition")
}

/// Completeness of the σ-field generated by `g`: the conditional-mean map
/// `f -> E[f(X) | Y]`, restricted to G-measurable functions modulo
/// constants, is injective.
pub fn is_complete(jm: &JointModel, g: &Partition) -> bool {
    if g.atom_count() != jm.num_x() {
        return false;
    }
    let b = g.num_blocks();
    let px = jm.x_marginal();
    let py = jm.y_marginal();
    // T[y, x] = P(X = x | Y = y); restricted to block indicators and
    // centered, completeness is rank b - 1.
    let ind = g.indicator_basis();
    let mut t = jm.joint().transpose();
    for y in 0..t.nrows() {
        for x in 0..t.ncols() {
            t[(y, x)] /= py[y];
        }
    }
    let mapped = &t * &ind;
    let col_means = px.transpose() * &ind;
    let ones = DMatrix::from_element(jm.num_y(), 1, 1.0);
    let centered = mapped - ones * col_means;
    linalg::rank(&centered, linalg::DEFAULT_RANK_TOL) == b - 1
}

/// Smallest constant C with `||f||_L2 <= C ||f||_H` over the subspace:
/// the largest generalized singular value of the embedding.
pub fn check_norm_domination(h: &HilbertSubspace, sp: &FiniteSpace) -> f64 {
    if h.dim() == 0 {
        return 0.0;
    }
    let gram = h.l2_gram(sp);
    let eig = linalg::generalized_sym_eig(&gram, h.metric(), 0.0)
        .expect("metric is positive definite by construction");
    eig.eigenvalues[0].max(0.0).sqrt()
}
