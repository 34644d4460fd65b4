//! Sample-level checks of the population claims: approximate measurability
//! of fitted predictors given a known sufficient reduction, and alignment
//! between predictor spans.
//!
//! Variances use the population convention (divide by n), matching the
//! predictor normalization of the estimator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsir::{evaluate_predictors, Dataset, GsirModel};
use crate::linalg;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Result of the quantile-sliced conditional-variance estimate. When cells
/// came up empty, the slice count was reduced automatically and the
/// reduction recorded here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlicedVariance {
    pub value: f64,
    pub slices_used: usize,
    pub reduced: bool,
    /// Per-cell statistics for external plotting.
    pub cells: Vec<SliceCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceCell {
    pub cell: usize,
    pub count: usize,
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Monte-Carlo analogue of `E(var[f | g])` with the conditioning σ-field
/// replaced by quantile cells of `gvals` (r = 1 slices directly, r = 2 uses
/// the product of per-coordinate quantile bins).
pub fn sliced_cond_variance(
    fvals: &[f64],
    gvals: &DMatrix<f64>,
    slices: usize,
) -> Result<SlicedVariance> {
    let n = fvals.len();
    let r = gvals.ncols();
    if gvals.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} predictor values, {} conditioning rows",
            n,
            gvals.nrows()
        )));
    }
    if r == 0 || r > 2 {
        return Err(Error::InvalidInput(
            "quantile slicing handles 1 or 2 conditioning columns; use the nearest-neighbor variant for more"
                .into(),
        ));
    }
    if slices < 2 {
        return Err(Error::InvalidInput("need at least 2 slices".into()));
    }
    if n < 2 * slices {
        return Err(Error::InvalidInput(format!(
            "need at least {} samples for {} slices",
            2 * slices,
            slices
        )));
    }

    let mut s = slices;
    loop {
        let assignment = assign_cells(gvals, s);
        let num_cells = s.pow(r as u32);
        let mut members: Vec<Vec<f64>> = vec![Vec::new(); num_cells];
        for (i, &c) in assignment.iter().enumerate() {
            members[c].push(fvals[i]);
        }
        if members.iter().any(|m| m.is_empty()) && s > 2 {
            s -= 1;
            continue;
        }
        let mut value = 0.0;
        let mut cells = Vec::new();
        for (c, m) in members.iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let w = m.len() as f64 / n as f64;
            let cell_mean = mean(m);
            let cell_var = variance(m);
            value += w * cell_var;
            cells.push(SliceCell {
                cell: c,
                count: m.len(),
                weight: w,
                mean: cell_mean,
                variance: cell_var,
            });
        }
        return Ok(SlicedVariance { value, slices_used: s, reduced: s != slices, cells });
    }
}

/// Quantile cut points at ranks k/slices; the bin of a value is the number
/// of cut points at or below it.
fn assign_cells(gvals: &DMatrix<f64>, slices: usize) -> Vec<usize> {
    let n = gvals.nrows();
    let r = gvals.ncols();
    let mut cuts_per_col: Vec<Vec<f64>> = Vec::with_capacity(r);
    for c in 0..r {
        let mut sorted: Vec<f64> = gvals.column(c).iter().cloned().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cuts: Vec<f64> = (1..slices)
            .map(|k| sorted[(k * n / slices).min(n - 1)])
            .collect();
        cuts_per_col.push(cuts);
    }
    (0..n)
        .map(|i| {
            let mut cell = 0usize;
            for c in 0..r {
                let v = gvals[(i, c)];
                let bin = cuts_per_col[c].iter().filter(|&&cut| v >= cut).count();
                cell = cell * slices + bin;
            }
            cell
        })
        .collect()
}

/// Nearest-neighbor conditional-variance estimate for conditioning sets of
/// any dimension: the mean over i of the variance of `fvals` across the k
/// nearest neighbors of `gvals_i` (self excluded).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnVariance {
    pub value: f64,
    /// Set when the conditioning values are all identical, in which case the
    /// estimate is just the marginal variance.
    pub degenerate: bool,
}

pub fn knn_cond_variance(fvals: &[f64], gvals: &DMatrix<f64>, k: usize) -> Result<KnnVariance> {
    let n = fvals.len();
    if gvals.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} predictor values, {} conditioning rows",
            n,
            gvals.nrows()
        )));
    }
    if k < 2 || 2 * k > n {
        return Err(Error::InvalidInput(format!(
            "neighbor count k = {k} must satisfy 2 <= k <= n/2 with n = {n}"
        )));
    }
    let degenerate = (1..n).all(|i| (0..gvals.ncols()).all(|c| gvals[(i, c)] == gvals[(0, c)]));
    if degenerate {
        return Ok(KnnVariance { value: variance(fvals), degenerate: true });
    }
    let mut total = 0.0;
    let mut dist_idx: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        dist_idx.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut d = 0.0;
            for c in 0..gvals.ncols() {
                let t = gvals[(i, c)] - gvals[(j, c)];
                d += t * t;
            }
            dist_idx.push((d, j));
        }
        dist_idx.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let neighborhood: Vec<f64> = dist_idx[..k].iter().map(|&(_, j)| fvals[j]).collect();
        total += variance(&neighborhood);
    }
    Ok(KnnVariance { value: total / n as f64, degenerate: false })
}

/// Canonical correlations between the column spans of two sample-evaluated
/// predictor matrices, after centering. Invariant under invertible affine
/// recombination of either side's columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Alignment {
    /// Descending, each in [0, 1]; length is the smaller effective rank.
    pub correlations: Vec<f64>,
    pub rank_deficient: bool,
}

pub fn alignment(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<Alignment> {
    let t = est.nrows();
    if truth.nrows() != t {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} rows, truth has {}",
            t,
            truth.nrows()
        )));
    }
    let (d, s) = (est.ncols(), truth.ncols());
    if t <= d + s {
        return Err(Error::InvalidInput(format!(
            "need more rows than total columns, got {t} rows for {d}+{s} columns"
        )));
    }
    let ue = linalg::orth_basis(&center_columns(est), linalg::DEFAULT_RANK_TOL);
    let ut = linalg::orth_basis(&center_columns(truth), linalg::DEFAULT_RANK_TOL);
    let rank_deficient = ue.ncols() < d || ut.ncols() < s;
    if ue.ncols() == 0 || ut.ncols() == 0 {
        return Ok(Alignment { correlations: Vec::new(), rank_deficient });
    }
    let cross = ue.transpose() * ut;
    let svd = linalg::thin_svd(&cross)?;
    let mut correlations: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&v| v.clamp(0.0, 1.0))
        .collect();
    correlations.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(Alignment { correlations, rank_deficient })
}

fn center_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() as f64;
    let mut out = a.clone();
    for j in 0..a.ncols() {
        let m = a.column(j).sum() / n;
        for i in 0..a.nrows() {
            out[(i, j)] -= m;
        }
    }
    out
}

/// Distance correlation (the biased V-statistic) between two row-aligned
/// sample matrices. Zero for either side constant.
pub fn distance_correlation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch("row counts differ".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 rows".into()));
    }
    let da = centered_distance_matrix(a);
    let db = centered_distance_matrix(b);
    let nf = (n * n) as f64;
    let mut vab = 0.0;
    let mut vaa = 0.0;
    let mut vbb = 0.0;
    for i in 0..n {
        for j in 0..n {
            vab += da[(i, j)] * db[(i, j)];
            vaa += da[(i, j)] * da[(i, j)];
            vbb += db[(i, j)] * db[(i, j)];
        }
    }
    vab /= nf;
    vaa /= nf;
    vbb /= nf;
    if vaa <= 0.0 || vbb <= 0.0 {
        return Ok(0.0);
    }
    Ok((vab / (vaa * vbb).sqrt()).max(0.0).sqrt())
}

fn centered_distance_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..a.ncols() {
                let t = a[(i, c)] - a[(j, c)];
                s += t * t;
            }
            let dist = s.sqrt();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    crate::kernel::center_gram(&d)
}

/// Thresholds and knobs for report generation. All values are recorded in
/// the emitted report so verdicts stay auditable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    /// Quantile slices for conditioning dimension 1 or 2; derived from n
    /// when absent.
    pub slices: Option<usize>,
    /// Neighbor count for conditioning dimension above 2; derived from n
    /// when absent.
    pub knn_k: Option<usize>,
    /// A predictor counts as measurable at sample scale when its
    /// conditional-variance ratio stays below this.
    pub ratio_threshold: f64,
    /// Required leading canonical correlation with the true reduction.
    pub alignment_threshold: f64,
    /// Spectra entirely below this are flagged as null; no recovery verdict
    /// is issued for them.
    pub null_threshold: f64,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            slices: None,
            knn_k: None,
            ratio_threshold: 0.2,
            alignment_threshold: 0.9,
            null_threshold: 0.01,
            seed: 0,
        }
    }
}

pub fn default_slices(n: usize) -> usize {
    (((n as f64).sqrt() / 2.0).floor() as usize).max(5)
}

pub fn default_knn_k(n: usize) -> usize {
    (n / 50).max(10)
}

/// A named boolean with its threshold; `passed` is `None` when the verdict
/// was not issued (null spectrum).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: Option<bool>,
    pub threshold: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Estimated `E(var[f_j | reduction]) / var(f_j)` per predictor.
    pub eps_ratios: Vec<f64>,
    /// Canonical correlations between fitted predictors and the truth.
    pub alignment: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub config: DiagnosticsConfig,
    /// "sliced" or "knn".
    pub method: String,
    pub slices_used: Option<usize>,
    pub null_spectrum: bool,
    pub warnings: Vec<String>,
    pub cells: Vec<Vec<SliceCell>>,
}

impl DiagnosticsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Exit-code semantics: all issued verdicts passed.
    pub fn all_passed(&self) -> bool {
        !self.null_spectrum && self.verdicts.iter().all(|v| v.passed == Some(true))
    }
}

/// Score fitted predictors against a known sufficient reduction:
/// conditional-variance ratios per predictor, canonical correlations with
/// the truth, and named verdicts at the configured thresholds.
pub fn unbiasedness_report(
    model: &GsirModel,
    data: &Dataset,
    true_reduction: &DMatrix<f64>,
    cfg: &DiagnosticsConfig,
) -> Result<DiagnosticsReport> {
    if true_reduction.nrows() != data.n() {
        return Err(Error::DimensionMismatch(format!(
            "true reduction has {} rows, data has {}",
            true_reduction.nrows(),
            data.n()
        )));
    }
    let preds = evaluate_predictors(model, &data.x)?;
    let n = data.n();
    let r = true_reduction.ncols();
    let mut warnings = Vec::new();
    let mut eps_ratios = Vec::with_capacity(model.d);
    let mut cells = Vec::new();
    let mut slices_used = None;
    let method = if r <= 2 { "sliced" } else { "knn" };

    for j in 0..model.d {
        let f: Vec<f64> = preds.column(j).iter().cloned().collect();
        let var = variance(&f);
        if var <= 1e-12 {
            eps_ratios.push(0.0);
            cells.push(Vec::new());
            continue;
        }
        let cond_var = if r <= 2 {
            let slices = cfg.slices.unwrap_or_else(|| default_slices(n));
            let out = sliced_cond_variance(&f, true_reduction, slices)?;
            if out.reduced {
                warnings.push(format!(
                    "predictor {j}: empty cells reduced the slice count to {}",
                    out.slices_used
                ));
            }
            slices_used = Some(out.slices_used);
            cells.push(out.cells.clone());
            out.value
        } else {
            let k = cfg.knn_k.unwrap_or_else(|| default_knn_k(n));
            let out = knn_cond_variance(&f, true_reduction, k)?;
            if out.degenerate {
                warnings.push(format!("predictor {j}: degenerate conditioning values"));
            }
            cells.push(Vec::new());
            out.value
        };
        eps_ratios.push(cond_var / var);
    }

    let align = alignment(&preds, true_reduction)?;
    if align.rank_deficient {
        warnings.push("rank-deficient predictor or truth matrix in alignment".into());
    }

    let spectrum = model.eigenvalues.clone();
    let null_spectrum = spectrum.iter().all(|&v| v < cfg.null_threshold);

    let worst_ratio = eps_ratios.iter().cloned().fold(0.0_f64, f64::max);
    let leading_alignment = align.correlations.first().cloned().unwrap_or(0.0);
    let verdicts = vec![
        Verdict {
            name: "unbiased-at-sample-scale".into(),
            passed: if null_spectrum { None } else { Some(worst_ratio < cfg.ratio_threshold) },
            threshold: cfg.ratio_threshold,
            observed: worst_ratio,
        },
        Verdict {
            name: "aligned-with-truth".into(),
            passed: if null_spectrum { None } else { Some(leading_alignment >= cfg.alignment_threshold) },
            threshold: cfg.alignment_threshold,
            observed: leading_alignment,
        },
    ];

    Ok(DiagnosticsReport {
        eps_ratios,
        alignment: align.correlations,
        spectrum,
        verdicts,
        config: cfg.clone(),
        method: method.into(),
        slices_used,
        null_spectrum,
        warnings,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn sn(rng: &mut StdRng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn normals(rng: &mut StdRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| sn(rng)).collect()
    }

    #[test]
    fn sliced_variance_monotone_link_is_small() {
        let mut rng = StdRng::seed_from_u64(20);
        let n = 1000;
        let g: Vec<f64> = normals(&mut rng, n);
        let f: Vec<f64> = g.iter().map(|&v| (1.5 * v).tanh() + v).collect();
        let gm = DMatrix::from_column_slice(n, 1, &g);
        let out = sliced_cond_variance(&f, &gm, 10).unwrap();
        assert!(out.value < 0.02 * variance(&f), "value {}", out.value);
        assert!(!out.reduced);
    }

    #[test]
    fn sliced_variance_independent_matches_marginal() {
        let mut rng = StdRng::seed_from_u64(21);
        let n = 1000;
        let g = normals(&mut rng, n);
        let f = normals(&mut rng, n);
        let gm = DMatrix::from_column_slice(n, 1, &g);
        let out = sliced_cond_variance(&f, &gm, 10).unwrap();
        let v = variance(&f);
        assert!((out.value - v).abs() < 0.1 * v, "value {} vs var {}", out.value, v);
    }

    #[test]
    fn sliced_variance_constant_is_zero() {
        let n = 100;
        let f = vec![2.5; n];
        let g = DMatrix::from_fn(n, 1, |i, _| i as f64);
        let out = sliced_cond_variance(&f, &g, 5).unwrap();
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn sliced_variance_never_exceeds_marginal() {
        let mut rng = StdRng::seed_from_u64(22);
        for trial in 0..20 {
            let n = 200;
            let g = normals(&mut rng, n);
            let f: Vec<f64> = g
                .iter()
                .map(|&v| v * (trial as f64 * 0.1) + sn(&mut rng))
                .collect();
            let gm = DMatrix::from_column_slice(n, 1, &g);
            let out = sliced_cond_variance(&f, &gm, 8).unwrap();
            assert!(out.value <= variance(&f) + 1e-10);
        }
    }

    #[test]
    fn sliced_variance_two_dims_and_reduction() {
        let mut rng = StdRng::seed_from_u64(23);
        let n = 300;
        let g = DMatrix::from_fn(n, 2, |_, _| sn(&mut rng));
        let f: Vec<f64> = (0..n).map(|i| g[(i, 0)] + g[(i, 1)].powi(2)).collect();
        let out = sliced_cond_variance(&f, &g, 10).unwrap();
        // 100 product cells over 300 points will have empties; the call must
        // degrade gracefully and stay below the marginal variance. The cells
        // end up coarse, so only a loose dependence bound is asserted.
        assert!(out.reduced);
        assert!(out.slices_used < 10);
        assert!(out.value <= variance(&f));
        assert!(out.value < 0.35 * variance(&f), "ratio {}", out.value / variance(&f));
    }

    #[test]
    fn sliced_variance_argument_checks() {
        let f = vec![1.0; 10];
        let g1 = DMatrix::zeros(10, 1);
        assert!(sliced_cond_variance(&f, &g1, 1).is_err());
        assert!(sliced_cond_variance(&f, &g1, 6).is_err()); // n < 2*slices
        let g3 = DMatrix::zeros(10, 3);
        assert!(sliced_cond_variance(&f, &g3, 2).is_err()); // r > 2
    }

    #[test]
    fn sliced_variance_converges_to_quadrature_oracle() {
        // Heteroskedastic smooth relation: f = tanh(g) + 0.3 sqrt(1 + g^2) e.
        // The true expected conditional variance is E[0.09 (1 + g^2)] = 0.18,
        // cross-checked by quadrature over a fine grid.
        let mut rng = StdRng::seed_from_u64(31);
        let n = 10_000;
        let g = normals(&mut rng, n);
        let f: Vec<f64> = g
            .iter()
            .map(|&v| v.tanh() + 0.3 * (1.0 + v * v).sqrt() * sn(&mut rng))
            .collect();
        let truth = {
            let mut total = 0.0;
            let mut mass = 0.0;
            let steps = 12_000;
            for k in 0..steps {
                let v = -6.0 + 12.0 * (k as f64 + 0.5) / steps as f64;
                let density = (-0.5 * v * v).exp();
                total += density * 0.09 * (1.0 + v * v);
                mass += density;
            }
            total / mass
        };
        assert!((truth - 0.18).abs() < 1e-3);
        let gm = DMatrix::from_column_slice(n, 1, &g);
        let out = sliced_cond_variance(&f, &gm, default_slices(n)).unwrap();
        assert!(
            (out.value - truth).abs() < 0.1 * truth,
            "sliced {} vs quadrature {truth}",
            out.value
        );
    }

    #[test]
    fn knn_variance_deterministic_link() {
        let mut rng = StdRng::seed_from_u64(24);
        let n = 500;
        let g = normals(&mut rng, n);
        let f = g.clone();
        let gm = DMatrix::from_column_slice(n, 1, &g);
        let out = knn_cond_variance(&f, &gm, 5).unwrap();
        assert!(out.value < 0.05 * variance(&f), "value {}", out.value);
    }

    #[test]
    fn knn_variance_independent_with_correction() {
        let mut rng = StdRng::seed_from_u64(25);
        let n = 500;
        let k = 5;
        let g = normals(&mut rng, n);
        let f = normals(&mut rng, n);
        let gm = DMatrix::from_column_slice(n, 1, &g);
        let out = knn_cond_variance(&f, &gm, k).unwrap();
        let corrected = out.value * k as f64 / (k as f64 - 1.0);
        let v = variance(&f);
        assert!((corrected - v).abs() < 0.15 * v, "corrected {corrected} vs {v}");
    }

    #[test]
    fn knn_variance_degenerate_conditioning() {
        let f = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let g = DMatrix::from_element(8, 2, 1.0);
        let out = knn_cond_variance(&f, &g, 3).unwrap();
        assert!(out.degenerate);
        assert!((out.value - variance(&f)).abs() < 1e-12);
    }

    #[test]
    fn knn_variance_argument_checks() {
        let f = vec![0.0; 10];
        let g = DMatrix::zeros(10, 1);
        assert!(knn_cond_variance(&f, &g, 1).is_err());
        assert!(knn_cond_variance(&f, &g, 6).is_err());
    }

    #[test]
    fn alignment_identity_and_affine_invariance() {
        let mut rng = StdRng::seed_from_u64(26);
        let t = 200;
        let truth = DMatrix::from_fn(t, 2, |_, _| sn(&mut rng));
        let a = alignment(&truth, &truth).unwrap();
        assert!(a.correlations.iter().all(|&c| c > 1.0 - 1e-10));

        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -0.5, 0.7]);
        let mixed = &truth * m + DMatrix::from_element(t, 2, 3.0);
        let a = alignment(&mixed, &truth).unwrap();
        assert!(a.correlations.iter().all(|&c| c > 1.0 - 1e-10));
    }

    #[test]
    fn alignment_independent_is_near_zero() {
        let mut rng = StdRng::seed_from_u64(27);
        let t = 10_000;
        let a = DMatrix::from_fn(t, 1, |_, _| sn(&mut rng));
        let b = DMatrix::from_fn(t, 1, |_, _| sn(&mut rng));
        let out = alignment(&a, &b).unwrap();
        assert!(out.correlations[0] < 0.05, "corr {}", out.correlations[0]);
    }

    #[test]
    fn alignment_flags_rank_deficiency() {
        let mut rng = StdRng::seed_from_u64(28);
        let t = 50;
        let col = DVector::from_fn(t, |_, _| sn(&mut rng));
        let mut est = DMatrix::zeros(t, 2);
        est.set_column(0, &col);
        est.set_column(1, &(2.0 * &col));
        let truth = DMatrix::from_fn(t, 1, |_, _| sn(&mut rng));
        let out = alignment(&est, &truth).unwrap();
        assert!(out.rank_deficient);
        assert_eq!(out.correlations.len(), 1);
    }

    #[test]
    fn alignment_shape_checks() {
        let a = DMatrix::zeros(4, 2);
        let b = DMatrix::zeros(4, 2);
        assert!(alignment(&a, &b).is_err()); // t <= d + s
    }

    #[test]
    fn distance_correlation_behaviour() {
        let mut rng = StdRng::seed_from_u64(29);
        let n = 300;
        let x = DMatrix::from_fn(n, 1, |_, _| sn(&mut rng));
        let y_dep = DMatrix::from_fn(n, 1, |i, _| x[(i, 0)].powi(2));
        let y_ind = DMatrix::from_fn(n, 1, |_, _| sn(&mut rng));
        let dep = distance_correlation(&x, &y_dep).unwrap();
        let ind = distance_correlation(&x, &y_ind).unwrap();
        assert!(dep > 0.4, "dependent dcor {dep}");
        assert!(ind < 0.15, "independent dcor {ind}");
        let constant = DMatrix::from_element(n, 1, 1.0);
        assert_eq!(distance_correlation(&x, &constant).unwrap(), 0.0);
    }

    #[test]
    fn report_self_comparison() {
        // Truth = the fitted predictors themselves: ratios near zero and
        // alignment one.
        let mut rng = StdRng::seed_from_u64(30);
        let n = 200;
        let x = DMatrix::from_fn(n, 2, |_, _| sn(&mut rng));
        let y = DMatrix::from_fn(n, 1, |i, _| {
            (x[(i, 0)]).exp() + 0.1 * sn(&mut rng)
        });
        let data = Dataset::new(x, y).unwrap();
        let model = crate::gsir::gsir_fit(
            &data,
            &crate::kernel::KernelSpec::Gaussian { bandwidth: 1.0 },
            &crate::kernel::KernelSpec::Gaussian { bandwidth: 1.0 },
            1e-2,
            1e-2,
            1,
            1e-9,
        )
        .unwrap();
        let preds = evaluate_predictors(&model, &data.x).unwrap();
        // The exp-link predictor is heavy-tailed; finer slices keep the
        // self-conditioning ratio honest at this sample size.
        let cfg = DiagnosticsConfig { slices: Some(20), ..DiagnosticsConfig::default() };
        let report = unbiasedness_report(&model, &data, &preds, &cfg).unwrap();
        assert!(report.eps_ratios[0] < 0.1, "ratio {}", report.eps_ratios[0]);
        assert!(report.alignment[0] > 1.0 - 1e-8);
        assert!(report.all_passed());
        // Round trip.
        let back = DiagnosticsReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back.eps_ratios, report.eps_ratios);
    }
}
