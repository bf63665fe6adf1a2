//! Replica overlaps and Monte Carlo error estimates.

use ndarray::Array2;

use super::glauber::GlauberChain;
use super::IsingModel;
use crate::instances::{correlation_spins, SpinConfiguration};
use crate::rng::{derive_seed, rng_from_seed, trial_seed};
use crate::scalar::{solve_q, ModelParams};
use crate::{Error, Result};

/// Sample mean with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

/// Batch-means estimate for a correlated series split into `batches` blocks.
pub fn batch_means(series: &[f64], batches: usize) -> Result<McEstimate> {
    if batches < 2 || series.len() < batches {
        return Err(Error::input(format!(
            "need at least {batches} >= 2 samples for batch means, got {}",
            series.len()
        )));
    }
    let len = series.len() / batches;
    let means: Vec<f64> = series
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(McEstimate { mean, standard_error: (var / batches as f64).sqrt() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapProbe {
    pub mean_overlap: f64,
    pub var_overlap: f64,
    pub q_predicted: f64,
    pub overlaps: Vec<f64>,
}

/// Overlap `⟨σ¹, σ²⟩/n` of replica pairs from `μ_{βW, h𝟙}`, each replica an
/// independent Glauber run of `inner_steps` from uniform spins.
pub fn overlap_concentration_probe(
    noise: &Array2<f64>,
    beta: f64,
    h: f64,
    trials: usize,
    inner_steps: u64,
    seed: u64,
) -> Result<OverlapProbe> {
    if trials < 2 {
        return Err(Error::input("overlap probe needs at least 2 trials"));
    }
    if inner_steps == 0 {
        return Err(Error::input("inner_steps must be >= 1"));
    }
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::input(format!("field must be finite and >= 0, got {h}")));
    }
    let n = noise.nrows();
    if n == 0 || noise.ncols() != n || !noise.is_standard_layout() {
        return Err(Error::input("noise must be a non-empty square row-major matrix"));
    }
    let q_predicted = solve_q(beta, h, &ModelParams::default())?.q;
    let model = IsingModel::trusted(noise, beta, vec![h; n]);
    let replica = |s: u64| -> Result<SpinConfiguration> {
        let mut rng = rng_from_seed(s);
        let start = SpinConfiguration::random(n, &mut rng);
        let mut chain = GlauberChain::new(model.clone(), start)?;
        chain.run(inner_steps, &mut rng);
        Ok(chain.state())
    };
    let mut overlaps = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let base = trial_seed(seed, t);
        let a = replica(derive_seed(base, 1))?;
        let b = replica(derive_seed(base, 2))?;
        overlaps.push(correlation_spins(&a, &b)?);
    }
    let k = trials as f64;
    let mean_overlap = overlaps.iter().sum::<f64>() / k;
    let var_overlap = overlaps.iter().map(|o| (o - mean_overlap).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(OverlapProbe { mean_overlap, var_overlap, q_predicted, overlaps })
}
