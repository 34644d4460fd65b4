//! The four batch commands. Each returns its exit code: 0 on success, 1 on
//! configuration or data errors (raised as `Err`), 2 on verdict or theorem
//! failures.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use nalgebra::DMatrix;
use serde::Serialize;

use gsir_core::diagnostics::{
    distance_correlation, unbiasedness_report, DiagnosticsConfig, DiagnosticsReport,
};
use gsir_core::gsir::{evaluate_predictors, gsir_fit, Dataset, GsirModel};
use gsir_core::kernel::{median_bandwidth, KernelSpec};
use gsir_core::synth::{gen_continuous, ScenarioSpec};

use crate::config::{DiagnoseConfig, FitConfig, SimulateConfig, VerifyConfig};
use crate::io::{eigenvalues_to_csv, matrix_from_csv, matrix_to_csv, slices_to_csv, write_atomic};
use crate::suite::{run_statement, StatementReport, ALL_STATEMENTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_VERDICT: i32 = 2;

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: String,
    pub timestamp: String,
    pub config: VerifyConfig,
    pub statements: Vec<StatementReport>,
    pub all_passed: bool,
}

/// Run every statement suite and write `verify_report.json`.
pub fn cmd_verify(cfg: &VerifyConfig, out_dir: &Path) -> anyhow::Result<(i32, VerifyReport)> {
    if cfg.instances < 1 {
        return Err(anyhow!("instances must be at least 1"));
    }
    if cfg.max_space < 2 || cfg.max_space > 16 {
        return Err(anyhow!("max_space must lie in 2..=16"));
    }
    fs::create_dir_all(out_dir)?;
    let statements: Vec<StatementReport> = ALL_STATEMENTS
        .iter()
        .map(|&st| run_statement(st, cfg))
        .collect();
    let all_passed = statements.iter().all(|s| s.failed == 0);
    let report = VerifyReport {
        schema: "verify-report/1".into(),
        timestamp: timestamp(),
        config: cfg.clone(),
        statements,
        all_passed,
    };
    for s in &report.statements {
        let status = if s.failed == 0 { "pass" } else { "FAIL" };
        println!(
            "{status} {name}: {passed}/{instances} passed, {na} not applicable, worst residual {res:.2e}{seed}",
            name = s.name,
            passed = s.passed,
            instances = s.instances,
            na = s.not_applicable,
            res = s.worst_residual,
            seed = s
                .failure_seed
                .map(|x| format!(", reproduce with seed {x}"))
                .unwrap_or_default(),
        );
    }
    write_atomic(
        &out_dir.join("verify_report.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    let code = if all_passed { EXIT_OK } else { EXIT_FAILED_VERDICT };
    Ok((code, report))
}

fn resolve_kernel(choice: &Option<KernelSpec>, data_side: &DMatrix<f64>) -> KernelSpec {
    match choice {
        Some(spec) => spec.clone(),
        None => KernelSpec::Gaussian { bandwidth: median_bandwidth(data_side) },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema: String,
    pub timestamp: String,
    pub config: SimulateConfig,
    pub resolved_kernel_x: KernelSpec,
    pub resolved_kernel_y: KernelSpec,
    pub d: usize,
    pub diagnostics: DiagnosticsReport,
}

/// Generate a scenario, fit, diagnose against the scenario's own reduction,
/// and emit dataset/model/report artifacts.
pub fn cmd_simulate(cfg: &SimulateConfig, out_dir: &Path) -> anyhow::Result<(i32, SimulateReport)> {
    let spec = ScenarioSpec {
        name: cfg.scenario.clone(),
        n: cfg.n,
        p: cfg.p,
        link: cfg.link,
        noise_sd: cfg.noise_sd,
        seed: cfg.seed,
    };
    let generated = gen_continuous(&spec).context("scenario generation")?;
    let d = cfg.d.unwrap_or(generated.reduction_dim);
    let kernel_x = resolve_kernel(&cfg.kernel_x, &generated.data.x);
    let kernel_y = resolve_kernel(&cfg.kernel_y, &generated.data.y);
    let model = gsir_fit(
        &generated.data,
        &kernel_x,
        &kernel_y,
        cfg.eta_x,
        cfg.eta_y,
        d,
        cfg.jitter,
    )?;
    let diag_cfg = DiagnosticsConfig {
        slices: cfg.slices,
        knn_k: cfg.knn_k,
        ratio_threshold: cfg.ratio_threshold,
        alignment_threshold: cfg.alignment_threshold,
        null_threshold: cfg.null_threshold,
        seed: cfg.seed,
    };
    let diagnostics =
        unbiasedness_report(&model, &generated.data, &generated.true_reduction, &diag_cfg)?;

    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("dataset.csv"), &generated.data.to_csv())?;
    write_atomic(
        &out_dir.join("truth.csv"),
        &matrix_to_csv("t", &generated.true_reduction),
    )?;
    write_atomic(&out_dir.join("model.json"), &model.to_json())?;
    write_atomic(
        &out_dir.join("eigenvalues.csv"),
        &eigenvalues_to_csv(&model.eigenvalues),
    )?;
    write_atomic(&out_dir.join("slices.csv"), &slices_to_csv(&diagnostics.cells))?;

    let passed = diagnostics.all_passed();
    let report = SimulateReport {
        schema: "simulate-report/1".into(),
        timestamp: timestamp(),
        config: cfg.clone(),
        resolved_kernel_x: kernel_x,
        resolved_kernel_y: kernel_y,
        d,
        diagnostics,
    };
    write_atomic(
        &out_dir.join("diagnostics.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "scenario {} (n = {}, seed {}): spectrum head {:?}, verdicts {}",
        cfg.scenario,
        cfg.n,
        cfg.seed,
        &report.diagnostics.spectrum.iter().take(3).collect::<Vec<_>>(),
        if passed { "passed" } else { "failed" }
    );
    Ok((if passed { EXIT_OK } else { EXIT_FAILED_VERDICT }, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct CvEntry {
    pub eta: f64,
    pub mean_distance_correlation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub schema: String,
    pub timestamp: String,
    pub config: FitConfig,
    pub resolved_kernel_x: KernelSpec,
    pub resolved_kernel_y: KernelSpec,
    pub selected_eta_x: f64,
    pub selected_eta_y: f64,
    pub d: usize,
    pub eigenvalues: Vec<f64>,
    pub cv: Option<Vec<CvEntry>>,
}

/// Mean held-out distance correlation between fitted predictors and the
/// response over contiguous folds.
fn cv_score(
    data: &Dataset,
    kernel_x: &KernelSpec,
    kernel_y: &KernelSpec,
    eta: f64,
    d: usize,
    jitter: f64,
    folds: usize,
) -> anyhow::Result<f64> {
    let n = data.n();
    let mut total = 0.0;
    let mut used = 0usize;
    for f in 0..folds {
        let lo = f * n / folds;
        let hi = (f + 1) * n / folds;
        if hi - lo == 0 || n - (hi - lo) < d + 2 {
            continue;
        }
        let train_rows: Vec<usize> = (0..n).filter(|i| *i < lo || *i >= hi).collect();
        let test_rows: Vec<usize> = (lo..hi).collect();
        let take = |rows: &[usize], m: &DMatrix<f64>| {
            DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
        };
        let train = Dataset::new(take(&train_rows, &data.x), take(&train_rows, &data.y))?;
        let model = gsir_fit(&train, kernel_x, kernel_y, eta, eta, d, jitter)?;
        let held_x = take(&test_rows, &data.x);
        let held_y = take(&test_rows, &data.y);
        let preds = evaluate_predictors(&model, &held_x)?;
        total += distance_correlation(&preds, &held_y)?;
        used += 1;
    }
    if used == 0 {
        return Err(anyhow!("no usable folds; reduce cv_folds or d"));
    }
    Ok(total / used as f64)
}

/// Fit a model from a dataset CSV, optionally selecting the ridge from a
/// grid by cross-validation, and write the model plus in-sample predictors.
pub fn cmd_fit(cfg: &FitConfig, out_dir: &Path) -> anyhow::Result<(i32, FitReport)> {
    let text = fs::read_to_string(&cfg.input)
        .with_context(|| format!("reading {}", cfg.input.display()))?;
    let data = Dataset::from_csv(&text)?;
    let kernel_x = resolve_kernel(&cfg.kernel_x, &data.x);
    let kernel_y = resolve_kernel(&cfg.kernel_y, &data.y);
    // An explicit d is passed through unchanged so an out-of-range request
    // fails loudly; only the default adapts to small samples.
    let d = cfg.d.unwrap_or_else(|| 2.min(data.n() - 1));

    let (eta_x, eta_y, cv) = match &cfg.eta_grid {
        None => (cfg.eta_x, cfg.eta_y, None),
        Some(grid) if grid.is_empty() => return Err(anyhow!("eta grid is empty")),
        Some(grid) => {
            let mut entries = Vec::with_capacity(grid.len());
            for &eta in grid {
                if !(eta > 0.0) {
                    return Err(anyhow!("eta grid entries must be positive"));
                }
                let score =
                    cv_score(&data, &kernel_x, &kernel_y, eta, d, cfg.jitter, cfg.cv_folds)?;
                entries.push(CvEntry { eta, mean_distance_correlation: score });
            }
            let best = entries
                .iter()
                .max_by(|a, b| {
                    a.mean_distance_correlation
                        .partial_cmp(&b.mean_distance_correlation)
                        .unwrap()
                })
                .map(|e| e.eta)
                .unwrap();
            (best, best, Some(entries))
        }
    };

    let model = gsir_fit(&data, &kernel_x, &kernel_y, eta_x, eta_y, d, cfg.jitter)?;
    let preds = evaluate_predictors(&model, &data.x)?;

    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("model.json"), &model.to_json())?;
    write_atomic(&out_dir.join("predictors.csv"), &matrix_to_csv("p", &preds))?;
    let report = FitReport {
        schema: "fit-report/1".into(),
        timestamp: timestamp(),
        config: cfg.clone(),
        resolved_kernel_x: kernel_x,
        resolved_kernel_y: kernel_y,
        selected_eta_x: eta_x,
        selected_eta_y: eta_y,
        d,
        eigenvalues: model.eigenvalues.clone(),
        cv,
    };
    write_atomic(
        &out_dir.join("fit_report.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "fitted d = {} predictors on {} samples; spectrum head {:?}",
        d,
        data.n(),
        report.eigenvalues.iter().take(3).collect::<Vec<_>>()
    );
    Ok((EXIT_OK, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub schema: String,
    pub timestamp: String,
    pub config: DiagnoseConfig,
    pub diagnostics: DiagnosticsReport,
}

/// Score a stored model against a stored dataset and truth matrix.
pub fn cmd_diagnose(cfg: &DiagnoseConfig, out_dir: &Path) -> anyhow::Result<(i32, DiagnoseReport)> {
    let model = GsirModel::from_json(
        &fs::read_to_string(&cfg.model)
            .with_context(|| format!("reading {}", cfg.model.display()))?,
    )?;
    let data = Dataset::from_csv(
        &fs::read_to_string(&cfg.data)
            .with_context(|| format!("reading {}", cfg.data.display()))?,
    )?;
    let truth = matrix_from_csv(
        &fs::read_to_string(&cfg.truth)
            .with_context(|| format!("reading {}", cfg.truth.display()))?,
    )?;
    let diag_cfg = DiagnosticsConfig {
        slices: cfg.slices,
        knn_k: cfg.knn_k,
        ratio_threshold: cfg.ratio_threshold,
        alignment_threshold: cfg.alignment_threshold,
        null_threshold: cfg.null_threshold,
        seed: 0,
    };
    let diagnostics = unbiasedness_report(&model, &data, &truth, &diag_cfg)?;

    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join("slices.csv"), &slices_to_csv(&diagnostics.cells))?;
    let passed = diagnostics.all_passed();
    let report = DiagnoseReport {
        schema: "diagnose-report/1".into(),
        timestamp: timestamp(),
        config: cfg.clone(),
        diagnostics,
    };
    write_atomic(
        &out_dir.join("diagnostics.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "diagnostics: eps ratios {:?}, leading alignment {:?}, verdicts {}",
        report.diagnostics.eps_ratios,
        report.diagnostics.alignment.first(),
        if passed { "passed" } else { "failed" }
    );
    Ok((if passed { EXIT_OK } else { EXIT_FAILED_VERDICT }, report))
}
