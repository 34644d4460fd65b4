//! Resolved run configurations. Every report embeds the full configuration
//! that produced it, so threshold-dependent verdicts stay auditable.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gsir_core::kernel::KernelSpec;
use gsir_core::synth::Link;

pub const DEFAULT_INSTANCES: usize = 500;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_SPACE: usize = 12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub instances: usize,
    pub seed: u64,
    /// Residual tolerance for every statement.
    pub tol: f64,
    /// Largest atom count for generated spaces.
    pub max_space: usize,
    /// Test-only: negate the conditional-mean side of the constant-mean
    /// verifier to prove the harness can catch a broken oracle.
    pub corrupt_constant_mean: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: DEFAULT_INSTANCES,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
            max_space: DEFAULT_MAX_SPACE,
            corrupt_constant_mean: false,
        }
    }
}

/// Kernel choice: an explicit spec, or the median-distance heuristic for a
/// gaussian kernel when absent.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct KernelChoice {
    pub spec: Option<KernelSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub scenario: String,
    pub link: Link,
    pub n: usize,
    pub p: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub kernel_x: Option<KernelSpec>,
    pub kernel_y: Option<KernelSpec>,
    pub eta_x: f64,
    pub eta_y: f64,
    /// Predictors to extract; the scenario's reduction dimension when absent.
    pub d: Option<usize>,
    pub jitter: f64,
    pub slices: Option<usize>,
    pub knn_k: Option<usize>,
    pub ratio_threshold: f64,
    pub alignment_threshold: f64,
    pub null_threshold: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            scenario: "exp".into(),
            link: Link::Exp,
            n: 500,
            p: 5,
            noise_sd: 0.2,
            seed: DEFAULT_SEED,
            kernel_x: None,
            kernel_y: None,
            eta_x: gsir_core::gsir::DEFAULT_ETA,
            eta_y: gsir_core::gsir::DEFAULT_ETA,
            d: None,
            jitter: gsir_core::gsir::DEFAULT_JITTER,
            slices: None,
            knn_k: None,
            ratio_threshold: 0.2,
            alignment_threshold: 0.9,
            null_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub input: PathBuf,
    pub kernel_x: Option<KernelSpec>,
    pub kernel_y: Option<KernelSpec>,
    pub eta_x: f64,
    pub eta_y: f64,
    /// When present, a shared ridge grid selected by cross-validated
    /// distance correlation between held-out predictors and responses.
    pub eta_grid: Option<Vec<f64>>,
    pub cv_folds: usize,
    pub d: Option<usize>,
    pub jitter: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            kernel_x: None,
            kernel_y: None,
            eta_x: gsir_core::gsir::DEFAULT_ETA,
            eta_y: gsir_core::gsir::DEFAULT_ETA,
            eta_grid: None,
            cv_folds: 5,
            d: None,
            jitter: gsir_core::gsir::DEFAULT_JITTER,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseConfig {
    pub model: PathBuf,
    pub data: PathBuf,
    pub truth: PathBuf,
    pub slices: Option<usize>,
    pub knn_k: Option<usize>,
    pub ratio_threshold: f64,
    pub alignment_threshold: f64,
    pub null_threshold: f64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            model: PathBuf::new(),
            data: PathBuf::new(),
            truth: PathBuf::new(),
            slices: None,
            knn_k: None,
            ratio_threshold: 0.2,
            alignment_threshold: 0.9,
            null_threshold: 0.01,
        }
    }
}

/// Parse a kernel flag: `linear`, `gaussian`, `gaussian:<bw>`,
/// `poly:<degree>:<offset>`. Plain `gaussian` defers the bandwidth to the
/// median heuristic.
pub fn parse_kernel_flag(text: &str) -> Result<Option<KernelSpec>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["linear"] => Ok(Some(KernelSpec::Linear)),
        ["gaussian"] => Ok(None),
        ["gaussian", bw] => {
            let bandwidth: f64 = bw.parse().map_err(|_| format!("bad bandwidth {bw:?}"))?;
            Ok(Some(KernelSpec::Gaussian { bandwidth }))
        }
        ["poly", deg, off] => {
            let degree: u32 = deg.parse().map_err(|_| format!("bad degree {deg:?}"))?;
            let offset: f64 = off.parse().map_err(|_| format!("bad offset {off:?}"))?;
            Ok(Some(KernelSpec::Polynomial { degree, offset }))
        }
        _ => Err(format!(
            "unrecognized kernel {text:?}; expected linear, gaussian, gaussian:<bw>, or poly:<degree>:<offset>"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_flag_parsing() {
        assert_eq!(parse_kernel_flag("linear").unwrap(), Some(KernelSpec::Linear));
        assert_eq!(parse_kernel_flag("gaussian").unwrap(), None);
        assert_eq!(
            parse_kernel_flag("gaussian:0.5").unwrap(),
            Some(KernelSpec::Gaussian { bandwidth: 0.5 })
        );
        assert_eq!(
            parse_kernel_flag("poly:2:1.0").unwrap(),
            Some(KernelSpec::Polynomial { degree: 2, offset: 1.0 })
        );
        assert!(parse_kernel_flag("rbf").is_err());
    }

    #[test]
    fn configs_round_trip_json() {
        let v = VerifyConfig::default();
        let back: VerifyConfig =
            serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back.instances, v.instances);

        let s = SimulateConfig::default();
        let back: SimulateConfig =
            serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back.n, s.n);
        // Partial configs fill in defaults.
        let partial: SimulateConfig = serde_json::from_str(r#"{"n": 100}"#).unwrap();
        assert_eq!(partial.n, 100);
        assert_eq!(partial.noise_sd, 0.2);
    }
}
