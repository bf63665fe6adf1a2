//! Run summaries and their JSON form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// JSON schema every summary validates against.
pub const SUMMARY_SCHEMA: &str = include_str!("../schema/run_summary.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub code: String,
    pub rng: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            code: env!("CARGO_PKG_VERSION").to_string(),
            rng: swlab_core::rng::GENERATOR.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    pub generator: String,
}

impl InstanceMeta {
    pub fn of(inst: &swlab_core::SpikedInstance) -> Self {
        Self {
            n: inst.n,
            lambda: inst.lambda,
            seed: inst.seed,
            generator: swlab_core::rng::GENERATOR.to_string(),
        }
    }
}

/// One trial (or grid cell) of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Main observable: terminal correlation or magnetization, or a grid-cell value.
    pub value: f64,
    /// Distance from the prediction.
    pub deviation: f64,
    pub pass: bool,
    /// Per-trial output file, relative to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// Additional named numbers (prediction, escape step, grid coordinates).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<(String, f64)>,
}

impl TrialRecord {
    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    /// Echo of the configuration in INI form.
    pub config: String,
    pub opt: Option<f64>,
    pub regime: Option<String>,
    pub trials: usize,
    pub pass_fraction: f64,
    pub quantiles: Quantiles,
    pub wall_ms: u64,
    pub versions: Versions,
    pub tolerance: Option<f64>,
    pub passed: bool,
    /// Meaning of the pass rule in words.
    pub criterion: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceMeta>,
    pub records: Vec<TrialRecord>,
    /// Experiment-level numbers (for example the count of regimes seen).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aggregates: Vec<(String, f64)>,
}

impl RunSummary {
    pub fn aggregate(&self, key: &str) -> Option<f64> {
        self.aggregates.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Internal(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()? + "\n")
            .map_err(|e| HarnessError::Internal(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Input(e.to_string()))
    }
}

/// Linear-interpolation quantile of unsorted data (`p ∈ [0, 1]`).
pub fn quantile(data: &[f64], p: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn quantiles(data: &[f64]) -> Quantiles {
    Quantiles { p10: quantile(data, 0.1), p50: quantile(data, 0.5), p90: quantile(data, 0.9) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let d = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(quantile(&d, 0.5), 3.0);
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 1.0), 5.0);
        assert!((quantile(&d, 0.1) - 1.4).abs() < 1e-12);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
