//! Kernels, Gram matrices, and the bandwidth heuristic.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed seed for the pair subsampling in the median heuristic, so the
/// default bandwidth is a deterministic function of the data.
pub const MEDIAN_HEURISTIC_SEED: u64 = 0x6d65_6469_616e;

/// Largest number of pairwise distances examined by the median heuristic.
pub const MEDIAN_HEURISTIC_MAX_PAIRS: usize = 1000;

/// A positive-definite kernel family.
///
/// The gaussian kernel uses the convention
/// `k(x, x') = exp(-||x - x'||^2 / (2 sigma^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian { bandwidth: f64 },
    Polynomial { degree: u32, offset: f64 },
    Linear,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Gaussian { bandwidth } => {
                if !(*bandwidth > 0.0) || !bandwidth.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "gaussian bandwidth must be positive and finite, got {bandwidth}"
                    )));
                }
            }
            KernelSpec::Polynomial { degree, offset } => {
                if *degree < 1 {
                    return Err(Error::InvalidInput("polynomial degree must be at least 1".into()));
                }
                if !(*offset >= 0.0) || !offset.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "polynomial offset must be nonnegative, got {offset}"
                    )));
                }
            }
            KernelSpec::Linear => {}
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            KernelSpec::Gaussian { bandwidth } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Polynomial { degree, offset } => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot + offset).powi(*degree as i32)
            }
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

fn row(a: &DMatrix<f64>, i: usize) -> Vec<f64> {
    a.row(i).iter().cloned().collect()
}

/// Kernel matrix between the rows of `a` and the rows of `b`.
pub fn gram(k: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    k.validate()?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "point sets have {} and {} coordinates",
            a.ncols(),
            b.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("kernel inputs must be finite".into()));
    }
    let mut out = DMatrix::zeros(a.nrows(), b.nrows());
    let rows_a: Vec<Vec<f64>> = (0..a.nrows()).map(|i| row(a, i)).collect();
    let rows_b: Vec<Vec<f64>> = (0..b.nrows()).map(|j| row(b, j)).collect();
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            out[(i, j)] = k.eval(&rows_a[i], &rows_b[j]);
        }
    }
    Ok(out)
}

/// Doubly centered Gram `Q K Q` with `Q = I - 11'/n`. Row and column sums of
/// the result vanish; positive semidefiniteness is preserved.
pub fn center_gram(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    debug_assert_eq!(n, k.ncols());
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let total = k.sum() / (nf * nf);
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = k[(i, j)] - row_means[i] - col_means[j] + total;
        }
    }
    // Kill the asymmetry roundoff so downstream symmetric solvers are happy.
    crate::linalg::symmetrize(&out)
}

/// Median pairwise distance between rows, over at most
/// `MEDIAN_HEURISTIC_MAX_PAIRS` pairs subsampled with a fixed seed.
/// Falls back to 1.0 when the points are all identical.
pub fn median_bandwidth(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n < 2 {
        return 1.0;
    }
    let mut dists = Vec::new();
    let total_pairs = n * (n - 1) / 2;
    let dist = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for c in 0..x.ncols() {
            let d = x[(i, c)] - x[(j, c)];
            s += d * d;
        }
        s.sqrt()
    };
    if total_pairs <= MEDIAN_HEURISTIC_MAX_PAIRS {
        for i in 0..n {
            for j in (i + 1)..n {
                dists.push(dist(i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(MEDIAN_HEURISTIC_SEED);
        while dists.len() < MEDIAN_HEURISTIC_MAX_PAIRS {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                dists.push(dist(i.min(j), i.max(j)));
            }
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = dists[dists.len() / 2];
    if median > 0.0 {
        median
    } else {
        let mean = dists.iter().sum::<f64>() / dists.len() as f64;
        if mean > 0.0 {
            mean
        } else {
            1.0
        }
    }
}

/// Sample version of the norm-domination constant of the RKHS embedding into
/// L2: the square root of the average of `k(x_i, x_i)`.
pub fn norm_domination_constant(k: &KernelSpec, x: &DMatrix<f64>) -> Result<f64> {
    k.validate()?;
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let r = row(x, i);
        total += k.eval(&r, &r);
    }
    Ok((total / x.nrows() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_gram_example() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    }

    #[test]
    fn gaussian_diag_is_one_and_offdiag_matches() {
        let a = DMatrix::from_column_slice(2, 1, &[0.0, 2.0]);
        let g = gram(&KernelSpec::Gaussian { bandwidth: 1.0 }, &a, &a).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((g[(0, 1)] - (-2.0f64).exp()).abs() < 1e-12);
        assert!((g[(0, 1)] - 0.1353).abs() < 1e-4);
    }

    #[test]
    fn gram_rejects_bad_inputs() {
        let a = DMatrix::from_column_slice(2, 1, &[0.0, f64::NAN]);
        assert!(gram(&KernelSpec::Linear, &a, &a).is_err());
        let ok = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!(gram(&KernelSpec::Gaussian { bandwidth: 0.0 }, &ok, &ok).is_err());
        let wide = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert!(gram(&KernelSpec::Linear, &ok, &wide).is_err());
    }

    #[test]
    fn gram_square_is_symmetric_psd() {
        let a = DMatrix::from_row_slice(4, 2, &[0.0, 0.1, 1.0, -0.4, 0.3, 0.3, -1.2, 0.8]);
        let g = gram(&KernelSpec::Gaussian { bandwidth: 0.7 }, &a, &a).unwrap();
        assert!(crate::linalg::is_symmetric(&g, 1e-8));
        let eig = crate::linalg::sym_eig(&g).unwrap();
        assert!(eig.eigenvalues.iter().all(|&v| v > -1e-8));
    }

    #[test]
    fn center_gram_examples() {
        let ones = DMatrix::from_element(3, 3, 1.0);
        assert!(crate::linalg::max_abs(&center_gram(&ones)) < 1e-14);

        let i2 = DMatrix::identity(2, 2);
        let c = center_gram(&i2);
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(crate::linalg::max_abs(&(c - expected)) < 1e-14);
    }

    #[test]
    fn center_gram_idempotent_and_sums_vanish() {
        let a = DMatrix::from_row_slice(4, 2, &[0.0, 0.1, 1.0, -0.4, 0.3, 0.3, -1.2, 0.8]);
        let g = gram(&KernelSpec::Gaussian { bandwidth: 1.0 }, &a, &a).unwrap();
        let c = center_gram(&g);
        for i in 0..4 {
            assert!(c.row(i).sum().abs() < 1e-8);
            assert!(c.column(i).sum().abs() < 1e-8);
        }
        let c2 = center_gram(&c);
        assert!(crate::linalg::max_abs(&(c2 - &c)) < 1e-12);
    }

    #[test]
    fn median_bandwidth_deterministic_and_positive() {
        let a = DMatrix::from_fn(50, 2, |i, j| ((i * 7 + j * 3) as f64 * 0.37).sin());
        let b1 = median_bandwidth(&a);
        let b2 = median_bandwidth(&a);
        assert_eq!(b1, b2);
        assert!(b1 > 0.0);
        // Degenerate data falls back.
        let constant = DMatrix::from_element(10, 2, 3.0);
        assert_eq!(median_bandwidth(&constant), 1.0);
    }

    #[test]
    fn norm_domination_constants() {
        let x = DMatrix::from_column_slice(3, 1, &[0.3, -0.9, 1.5]);
        let g = norm_domination_constant(&KernelSpec::Gaussian { bandwidth: 2.0 }, &x).unwrap();
        assert!((g - 1.0).abs() < 1e-15);

        // Rows with ||x||^2 = 1 under (dot + 1)^2: diag is 4, constant 2.
        let unit = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let c = norm_domination_constant(
            &KernelSpec::Polynomial { degree: 2, offset: 1.0 },
            &unit,
        )
        .unwrap();
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_spec_json_round_trip() {
        let specs = vec![
            KernelSpec::Gaussian { bandwidth: 0.5 },
            KernelSpec::Polynomial { degree: 3, offset: 1.0 },
            KernelSpec::Linear,
        ];
        for s in specs {
            let j = serde_json::to_string(&s).unwrap();
            let back: KernelSpec = serde_json::from_str(&j).unwrap();
            assert_eq!(s, back);
        }
        let j = serde_json::to_string(&KernelSpec::Gaussian { bandwidth: 0.5 }).unwrap();
        assert!(j.contains("\"family\":\"gaussian\""));
    }
}
