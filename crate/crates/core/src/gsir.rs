//! Generalized sliced inverse regression on sampled data.
//!
//! The population target is the closure of the range of the regression
//! operator `pinv(Sigma_XX) Sigma_XY`; the sample version replaces the
//! pseudoinverses with ridge inverses in centered-Gram coordinates and
//! extracts predictors from a generalized symmetric eigenproblem:
//!
//! ```text
//!   D = G_X (G_X + n eta_X I)^-1,   E = G_Y (G_Y + n eta_Y I)^-1,
//!   (D E D) a = lambda (G_X + jitter I) a.
//! ```
//!
//! A fitted predictor is `f_j(x) = sum_k a_kj (k(x, x_k) - mean_k' k(x, x_k'))`
//! recentered to mean zero and rescaled to unit variance over the training
//! sample.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{center_gram, gram, KernelSpec};
use crate::linalg;

/// Default ridge parameter for both sides.
pub const DEFAULT_ETA: f64 = 1e-2;

/// Default jitter for the eigenproblem metric.
pub const DEFAULT_JITTER: f64 = 1e-9;

/// Row-aligned predictor and response samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} rows, y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::InvalidInput("need at least 2 samples".into()));
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidInput("x and y need at least one column".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset entries must be finite".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// CSV with a mandatory `x1..xp,y1..yq` header, comma separator, dot
    /// decimal.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.x.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("x{}", j + 1));
        }
        for j in 0..self.y.ncols() {
            out.push(',');
            out.push_str(&format!("y{}", j + 1));
        }
        out.push('\n');
        for i in 0..self.n() {
            for j in 0..self.x.ncols() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.x[(i, j)]));
            }
            for j in 0..self.y.ncols() {
                out.push(',');
                out.push_str(&format!("{}", self.y[(i, j)]));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV dialect written by [`Dataset::to_csv`]. Errors carry the
    /// 1-based line and column of the first offending field.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, column: 1, detail: "empty file".into() })?;
        let names: Vec<&str> = header.split(',').map(|s| s.trim()).collect();
        let mut p = 0usize;
        let mut q = 0usize;
        for (c, name) in names.iter().enumerate() {
            let expected_x = format!("x{}", p + 1);
            let expected_y = format!("y{}", q + 1);
            if q == 0 && *name == expected_x {
                p += 1;
            } else if *name == expected_y {
                q += 1;
            } else {
                return Err(Error::Parse {
                    line: 1,
                    column: c + 1,
                    detail: format!(
                        "unexpected column name {name:?}; header must read x1..xp,y1..yq"
                    ),
                });
            }
        }
        if p == 0 || q == 0 {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                detail: "header must contain at least one x column and one y column".into(),
            });
        }
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != p + q {
                return Err(Error::Parse {
                    line: i + 1,
                    column: fields.len().min(p + q) + 1,
                    detail: format!("expected {} fields, found {}", p + q, fields.len()),
                });
            }
            for (c, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    column: c + 1,
                    detail: format!("cannot parse {field:?} as a number"),
                })?;
                if c < p {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
            n += 1;
        }
        if n < 2 {
            return Err(Error::Parse {
                line: n + 1,
                column: 1,
                detail: "need at least 2 data rows".into(),
            });
        }
        Dataset::new(
            DMatrix::from_row_slice(n, p, &xs),
            DMatrix::from_row_slice(n, q, &ys),
        )
    }
}

/// Raw and doubly centered Gram matrices for both sides.
#[derive(Debug, Clone)]
pub struct GramPair {
    pub k_x: DMatrix<f64>,
    pub k_y: DMatrix<f64>,
    pub g_x: DMatrix<f64>,
    pub g_y: DMatrix<f64>,
}

pub fn gram_pair(data: &Dataset, kx: &KernelSpec, ky: &KernelSpec) -> Result<GramPair> {
    let k_x = gram(kx, &data.x, &data.x)?;
    let k_y = gram(ky, &data.y, &data.y)?;
    let g_x = center_gram(&k_x);
    let g_y = center_gram(&k_y);
    Ok(GramPair { k_x, k_y, g_x, g_y })
}

/// A fitted GSIR model: kernels, ridge parameters, training inputs, and the
/// eigen-coefficients of the predictors in the centered-feature basis.
#[derive(Debug, Clone)]
pub struct GsirModel {
    pub train_x: DMatrix<f64>,
    pub kernel_x: KernelSpec,
    pub kernel_y: KernelSpec,
    pub eta_x: f64,
    pub eta_y: f64,
    /// n×d; column j holds the coefficients of the j-th predictor.
    pub coeffs: DMatrix<f64>,
    /// Top-d eigenvalues, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub d: usize,
}

const MODEL_FORMAT: &str = "gsir-model/1";

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

impl MatrixJson {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidInput(format!(
                "matrix payload holds {} entries for shape {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Serialize, Deserialize)]
struct GsirModelJson {
    format: String,
    kernel_x: KernelSpec,
    kernel_y: KernelSpec,
    eta_x: f64,
    eta_y: f64,
    train_x: MatrixJson,
    coeffs: MatrixJson,
    eigenvalues: Vec<f64>,
    d: usize,
}

impl GsirModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GsirModelJson {
            format: MODEL_FORMAT.into(),
            kernel_x: self.kernel_x.clone(),
            kernel_y: self.kernel_y.clone(),
            eta_x: self.eta_x,
            eta_y: self.eta_y,
            train_x: MatrixJson::from_matrix(&self.train_x),
            coeffs: MatrixJson::from_matrix(&self.coeffs),
            eigenvalues: self.eigenvalues.clone(),
            d: self.d,
        })
        .expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GsirModelJson = serde_json::from_str(text)?;
        if raw.format != MODEL_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                raw.format
            )));
        }
        raw.kernel_x.validate()?;
        raw.kernel_y.validate()?;
        let train_x = raw.train_x.into_matrix()?;
        let coeffs = raw.coeffs.into_matrix()?;
        if coeffs.nrows() != train_x.nrows() || coeffs.ncols() != raw.d {
            return Err(Error::InvalidInput("coefficient shape disagrees with model".into()));
        }
        Ok(Self {
            train_x,
            kernel_x: raw.kernel_x,
            kernel_y: raw.kernel_y,
            eta_x: raw.eta_x,
            eta_y: raw.eta_y,
            coeffs,
            eigenvalues: raw.eigenvalues,
            d: raw.d,
        })
    }
}

/// Fit GSIR: build centered Grams, ridge-smooth each side, and take the
/// top-`d` eigenvectors of `(D E D, G_X + jitter I)`.
///
/// Predictors are normalized to zero mean and unit variance over the
/// training sample, with the sign fixed so the largest-magnitude coefficient
/// is positive. A response with no variation yields a model with all-zero
/// eigenvalues rather than an error.
pub fn gsir_fit(
    data: &Dataset,
    kernel_x: &KernelSpec,
    kernel_y: &KernelSpec,
    eta_x: f64,
    eta_y: f64,
    d: usize,
    jitter: f64,
) -> Result<GsirModel> {
    let n = data.n();
    if !(eta_x > 0.0) || !(eta_y > 0.0) {
        return Err(Error::InvalidInput("ridge parameters must be positive".into()));
    }
    if d < 1 || d >= n {
        return Err(Error::InvalidInput(format!(
            "requested dimension d = {d} must satisfy 1 <= d < n = {n}"
        )));
    }
    let grams = gram_pair(data, kernel_x, kernel_y)?;
    let nf = n as f64;

    let d_mat = smoother(&grams.g_x, nf * eta_x)?;
    let e_mat = smoother(&grams.g_y, nf * eta_y)?;
    let candidate = linalg::symmetrize(&(&d_mat * &e_mat * &d_mat));

    let eig = linalg::generalized_sym_eig(&candidate, &grams.g_x, jitter).map_err(|e| match e {
        Error::NotPositiveDefinite(msg) => Error::NotPositiveDefinite(format!(
            "{msg}; the centered Gram may be numerically indefinite, raise jitter or eta"
        )),
        other => other,
    })?;

    let mut coeffs = DMatrix::zeros(n, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for j in 0..d {
        eigenvalues.push(eig.eigenvalues[j].max(0.0));
        let mut a = eig.eigenvectors.column(j).into_owned();
        // In-sample predictor values are G_X a, already mean zero.
        let values = &grams.g_x * &a;
        let sd = (values.norm_squared() / nf).sqrt();
        if sd > 1e-12 {
            a /= sd;
        } else if a.norm() > 0.0 {
            // Degenerate direction (e.g. zero response): keep a unit
            // coefficient vector; the eigenvalue records the degeneracy.
            a /= a.norm();
        }
        let mut max_idx = 0;
        for i in 0..n {
            if a[i].abs() > a[max_idx].abs() {
                max_idx = i;
            }
        }
        if a[max_idx] < 0.0 {
            a = -a;
        }
        coeffs.set_column(j, &a);
    }

    Ok(GsirModel {
        train_x: data.x.clone(),
        kernel_x: kernel_x.clone(),
        kernel_y: kernel_y.clone(),
        eta_x,
        eta_y,
        coeffs,
        eigenvalues,
        d,
    })
}

/// `G (G + c I)^-1`, symmetrized. `G` and its ridge inverse commute, so the
/// product is symmetric up to roundoff.
fn smoother(g: &DMatrix<f64>, c: f64) -> Result<DMatrix<f64>> {
    let solved = linalg::ridge_solve(g, c, g)?;
    Ok(linalg::symmetrize(&solved))
}

/// Evaluate the fitted predictors at new points:
/// `f_j(x) = sum_k coeffs[k, j] (k(x, x_k) - mean_k' k(x, x_k')) - m_j`,
/// where `m_j` recenters the predictor to mean zero over the training
/// sample. Evaluating at the training points reproduces the in-sample
/// predictor matrix exactly.
pub fn evaluate_predictors(model: &GsirModel, new_x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if new_x.ncols() != model.train_x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "new points have {} coordinates, training had {}",
            new_x.ncols(),
            model.train_x.ncols()
        )));
    }
    let cross = gram(&model.kernel_x, new_x, &model.train_x)?;
    let projected = row_centered_product(&cross, &model.coeffs);

    // Training means of the row-centered expansion, recomputed from the
    // stored inputs (the serialized model carries no derived statistics).
    let train_gram = gram(&model.kernel_x, &model.train_x, &model.train_x)?;
    let in_sample = row_centered_product(&train_gram, &model.coeffs);
    let n = model.train_x.nrows() as f64;
    let means: Vec<f64> = (0..model.d).map(|j| in_sample.column(j).sum() / n).collect();

    let mut out = projected;
    for j in 0..model.d {
        for i in 0..out.nrows() {
            out[(i, j)] -= means[j];
        }
    }
    Ok(out)
}

fn row_centered_product(k: &DMatrix<f64>, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.ncols() as f64;
    let raw = k * coeffs;
    let row_means: Vec<f64> = (0..k.nrows()).map(|i| k.row(i).sum() / n).collect();
    let col_sums: Vec<f64> = (0..coeffs.ncols()).map(|j| coeffs.column(j).sum()).collect();
    let mut out = raw;
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            out[(i, j)] -= row_means[i] * col_sums[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn sn(rng: &mut StdRng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn normal_matrix(rng: &mut StdRng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| sn(rng))
    }

    fn fit_simple(n: usize, seed: u64) -> (Dataset, GsirModel) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = normal_matrix(&mut rng, n, 2);
        let y = DMatrix::from_fn(n, 1, |i, _| {
            x[(i, 0)] + 0.1 * sn(&mut rng)
        });
        let data = Dataset::new(x, y).unwrap();
        let model = gsir_fit(
            &data,
            &KernelSpec::Linear,
            &KernelSpec::Linear,
            1e-3,
            1e-3,
            1,
            DEFAULT_JITTER,
        )
        .unwrap();
        (data, model)
    }

    #[test]
    fn dataset_validation() {
        let x = DMatrix::zeros(3, 2);
        let y = DMatrix::zeros(2, 1);
        assert!(Dataset::new(x, y).is_err());
        let x = DMatrix::zeros(1, 2);
        let y = DMatrix::zeros(1, 1);
        assert!(Dataset::new(x, y).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let data = Dataset::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.5, -4.0, 0.25, 6.0]),
            DMatrix::from_row_slice(3, 1, &[0.5, 1.5, -2.5]),
        )
        .unwrap();
        let csv = data.to_csv();
        assert!(csv.starts_with("x1,x2,y1\n"));
        let back = Dataset::from_csv(&csv).unwrap();
        assert_eq!(data, back);

        let bad_header = "a,b\n1,2\n3,4\n";
        match Dataset::from_csv(bad_header) {
            Err(Error::Parse { line: 1, column: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad_field = "x1,y1\n1,2\n3,oops\n";
        match Dataset::from_csv(bad_field) {
            Err(Error::Parse { line: 3, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let short_row = "x1,y1\n1,2\n3\n";
        match Dataset::from_csv(short_row) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fit_rejects_bad_parameters() {
        let (data, _) = fit_simple(10, 0);
        let k = KernelSpec::Linear;
        assert!(gsir_fit(&data, &k, &k, 0.0, 1e-2, 1, 0.0).is_err());
        assert!(gsir_fit(&data, &k, &k, 1e-2, 1e-2, 0, 0.0).is_err());
        assert!(gsir_fit(&data, &k, &k, 1e-2, 1e-2, 10, 0.0).is_err());
    }

    #[test]
    fn constant_response_gives_null_spectrum() {
        let mut rng = StdRng::seed_from_u64(1);
        let x = normal_matrix(&mut rng, 20, 2);
        let y = DMatrix::from_element(20, 1, 3.0);
        let data = Dataset::new(x, y).unwrap();
        let model = gsir_fit(
            &data,
            &KernelSpec::Gaussian { bandwidth: 1.0 },
            &KernelSpec::Gaussian { bandwidth: 1.0 },
            1e-2,
            1e-2,
            2,
            DEFAULT_JITTER,
        )
        .unwrap();
        assert!(model.eigenvalues.iter().all(|&v| v < 1e-8));
    }

    #[test]
    fn in_sample_predictors_standardized() {
        let (data, model) = fit_simple(40, 2);
        let preds = evaluate_predictors(&model, &data.x).unwrap();
        let n = data.n() as f64;
        for j in 0..model.d {
            let col = preds.column(j);
            let mean = col.sum() / n;
            assert!(mean.abs() < 1e-8, "mean {mean}");
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!((var - 1.0).abs() < 1e-8, "var {var}");
        }
    }

    #[test]
    fn single_index_linear_recovery() {
        let mut rng = StdRng::seed_from_u64(3);
        let n = 200;
        let x = normal_matrix(&mut rng, n, 1);
        let y = DMatrix::from_fn(n, 1, |i, _| {
            x[(i, 0)] + 0.1 * sn(&mut rng)
        });
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let model = gsir_fit(
            &data,
            &KernelSpec::Linear,
            &KernelSpec::Linear,
            1e-3,
            1e-3,
            1,
            DEFAULT_JITTER,
        )
        .unwrap();
        let preds = evaluate_predictors(&model, &data.x).unwrap();
        // Oracle: the ordinary least-squares direction is x1 itself here.
        let corr = pearson(&preds.column(0).into_owned(), &x.column(0).into_owned());
        assert!(corr.abs() > 0.99, "corr {corr}");
    }

    #[test]
    fn constant_coefficients_give_zero_predictor() {
        let (data, mut model) = fit_simple(15, 4);
        model.coeffs = DMatrix::from_element(15, 1, 0.3);
        let preds = evaluate_predictors(&model, &data.x).unwrap();
        assert!(preds.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn linear_kernel_predictor_affine_in_inputs() {
        // With a linear kernel every predictor is an affine function of x, so
        // evaluating off-sample correlates exactly with that combination.
        let (data, model) = fit_simple(30, 5);
        let mut rng = StdRng::seed_from_u64(6);
        let fresh = normal_matrix(&mut rng, 100, 2);
        let preds = evaluate_predictors(&model, &fresh).unwrap();
        // beta = X_train' Q a; predictor should equal fresh * beta - const.
        let n = data.n() as f64;
        let col_means = DVector::from_iterator(
            2,
            (0..2).map(|j| data.x.column(j).sum() / n),
        );
        let centered = {
            let mut c = data.x.clone();
            for i in 0..c.nrows() {
                for j in 0..2 {
                    c[(i, j)] -= col_means[j];
                }
            }
            c
        };
        let beta = centered.transpose() * model.coeffs.column(0).into_owned();
        let lin = &fresh * &beta;
        let corr = pearson(&preds.column(0).into_owned(), &lin);
        assert!(corr > 1.0 - 1e-10, "corr {corr}");
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 30;
        let x = normal_matrix(&mut rng, n, 2);
        let y = DMatrix::from_fn(n, 1, |i, _| (x[(i, 0)]).sin());
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let kx = KernelSpec::Gaussian { bandwidth: 1.0 };
        let ky = KernelSpec::Gaussian { bandwidth: 1.0 };
        let model = gsir_fit(&data, &kx, &ky, 1e-2, 1e-2, 2, DEFAULT_JITTER).unwrap();

        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let xp = DMatrix::from_fn(n, 2, |i, j| x[(perm[i], j)]);
        let yp = DMatrix::from_fn(n, 1, |i, j| y[(perm[i], j)]);
        let datap = Dataset::new(xp, yp).unwrap();
        let modelp = gsir_fit(&datap, &kx, &ky, 1e-2, 1e-2, 2, DEFAULT_JITTER).unwrap();

        for j in 0..2 {
            assert!(
                (model.eigenvalues[j] - modelp.eigenvalues[j]).abs() < 1e-9,
                "eigenvalue {j} moved under permutation"
            );
        }
        // Predictors as functions agree on fresh points up to sign.
        let fresh = normal_matrix(&mut rng, 40, 2);
        let a = evaluate_predictors(&model, &fresh).unwrap();
        let b = evaluate_predictors(&modelp, &fresh).unwrap();
        for j in 0..2 {
            let col_a = a.column(j).into_owned();
            let col_b = b.column(j).into_owned();
            let diff = (&col_a - &col_b).norm().min((&col_a + &col_b).norm());
            assert!(diff < 1e-6 * col_a.norm().max(1.0), "predictor {j} changed");
        }
    }

    #[test]
    fn eigenvalues_bounded_and_eta_monotone() {
        // Contraction bound: with n*eta >= 1/4 every eigenvalue sits in
        // [0, 1]; the leading eigenvalue grows as the ridge relaxes.
        let mut rng = StdRng::seed_from_u64(8);
        let n = 100;
        let x = normal_matrix(&mut rng, n, 2);
        let y = DMatrix::from_fn(n, 1, |i, _| {
            (2.0 * x[(i, 0)]).sin() + 0.2 * sn(&mut rng)
        });
        let data = Dataset::new(x, y).unwrap();
        let kx = KernelSpec::Gaussian { bandwidth: 1.0 };
        let ky = KernelSpec::Gaussian { bandwidth: 1.0 };
        let mut last_leading = -1.0;
        for &eta in &[5e-2, 1e-2, 5e-3] {
            let model = gsir_fit(&data, &kx, &ky, eta, eta, 3, DEFAULT_JITTER).unwrap();
            for &v in &model.eigenvalues {
                assert!((-1e-8..=1.0 + 1e-8).contains(&v), "eigenvalue {v} out of range");
            }
            assert!(
                model.eigenvalues[0] >= last_leading - 1e-9,
                "leading eigenvalue not monotone under ridge relaxation"
            );
            last_leading = model.eigenvalues[0];
        }
    }

    #[test]
    fn identical_response_drives_leading_eigenvalue_up() {
        // Y = X with the same kernel on both sides: relaxing the ridge sends
        // the leading eigenvalues toward 1.
        let mut rng = StdRng::seed_from_u64(9);
        let n = 50;
        let x = normal_matrix(&mut rng, n, 1);
        let data = Dataset::new(x.clone(), x.clone()).unwrap();
        let k = KernelSpec::Gaussian { bandwidth: 1.0 };
        let mut last = -1.0;
        for &eta in &[0.5, 0.1, 0.02, 0.005] {
            let model = gsir_fit(&data, &k, &k, eta, eta, 1, DEFAULT_JITTER).unwrap();
            assert!(model.eigenvalues[0] >= last - 1e-9);
            last = model.eigenvalues[0];
        }
        assert!(last > 0.5, "leading eigenvalue {last} did not approach 1");
    }

    #[test]
    fn monotone_response_relabeling_keeps_predictor_span() {
        // A strictly monotone deterministic relabeling of Y changes the
        // response Gram but barely moves the span of the fitted predictors.
        let mut rng = StdRng::seed_from_u64(11);
        let n = 200;
        let x = normal_matrix(&mut rng, n, 2);
        let y = DMatrix::from_fn(n, 1, |i, _| x[(i, 0)].sin() + 0.1 * sn(&mut rng));
        let relabeled = DMatrix::from_fn(n, 1, |i, j| {
            let v: f64 = y[(i, j)];
            v.powi(3) + 2.0 * v
        });
        let kx = KernelSpec::Gaussian { bandwidth: crate::kernel::median_bandwidth(&x) };
        let fit = |yy: &DMatrix<f64>| {
            let data = Dataset::new(x.clone(), yy.clone()).unwrap();
            let ky = KernelSpec::Gaussian { bandwidth: crate::kernel::median_bandwidth(yy) };
            let model = gsir_fit(&data, &kx, &ky, 1e-2, 1e-2, 2, DEFAULT_JITTER).unwrap();
            evaluate_predictors(&model, &x).unwrap()
        };
        let base = fit(&y);
        let moved = fit(&relabeled);
        let cc = crate::diagnostics::alignment(&base, &moved).unwrap();
        assert!(
            cc.correlations[0] >= 0.99,
            "leading canonical correlation {} after relabeling",
            cc.correlations[0]
        );
    }

    #[test]
    fn model_json_round_trip() {
        let (_, model) = fit_simple(12, 10);
        let json = model.to_json();
        assert!(json.contains("\"format\": \"gsir-model/1\""));
        let back = GsirModel::from_json(&json).unwrap();
        assert_eq!(model.train_x, back.train_x);
        assert_eq!(model.coeffs, back.coeffs);
        assert_eq!(model.eigenvalues, back.eigenvalues);
        assert_eq!(model.kernel_x, back.kernel_x);
    }

    fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let n = a.len() as f64;
        let ma = a.sum() / n;
        let mb = b.sum() / n;
        let mut num = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for i in 0..a.len() {
            num += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        num / (va.sqrt() * vb.sqrt())
    }
}
