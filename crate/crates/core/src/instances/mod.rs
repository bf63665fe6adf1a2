//! Planted instances `M = W + (λ/N) x xᵀ` with a Rademacher spike and GOE noise.
//!
//! Matrices are dense `ndarray` arrays in standard (row-major) layout.

mod dump;

pub use dump::{read_instance, write_instance, DUMP_MAGIC, DUMP_VERSION};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::check_dim;
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::{Error, Result};

/// A vector of ±1 spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    sigma: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(sigma: Vec<i8>) -> Result<Self> {
        if let Some(i) = sigma.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::input(format!("spin {i} is {}, expected ±1", sigma[i])));
        }
        Ok(Self { sigma })
    }

    pub fn ones(n: usize) -> Self {
        Self { sigma: vec![1; n] }
    }

    /// I.i.d. spins with `P(+1) = (1 + mean)/2`.
    pub fn random_with_mean<R: Rng + ?Sized>(n: usize, mean: f64, rng: &mut R) -> Self {
        let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
        Self {
            sigma: (0..n).map(|_| if rng.gen::<f64>() < p { 1 } else { -1 }).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            sigma: (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.sigma
    }

    pub fn get(&self, i: usize) -> i8 {
        self.sigma[i]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.sigma.iter().map(|&s| s as f64).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            sigma: self.sigma.iter().map(|&s| -s).collect(),
        }
    }

    /// Entrywise product, the gauge change `σ_i → σ_i x_i`.
    pub fn gauge(&self, other: &SpinConfiguration) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Ok(Self {
            sigma: self.sigma.iter().zip(&other.sigma).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn magnetization(&self) -> f64 {
        if self.sigma.is_empty() {
            return 0.0;
        }
        self.sigma.iter().map(|&s| s as i64).sum::<i64>() as f64 / self.len() as f64
    }

    /// Bit pattern with bit `i` set iff spin `i` is +1. Requires `n ≤ 64`.
    pub fn to_index(&self) -> u64 {
        debug_assert!(self.len() <= 64);
        self.sigma
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| if s > 0 { acc | (1 << i) } else { acc })
    }

    pub fn from_index(index: u64, n: usize) -> Self {
        Self {
            sigma: (0..n).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect(),
        }
    }
}

/// A planted spiked Wigner instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedInstance {
    pub n: usize,
    pub lambda: f64,
    pub spike: SpinConfiguration,
    pub noise: Array2<f64>,
    pub m_matrix: Array2<f64>,
    pub seed: u64,
}

impl SpikedInstance {
    /// Spike `x` in `±1` as floats.
    pub fn spike_f64(&self) -> Vec<f64> {
        self.spike.to_f64()
    }

    /// Normalised correlation `⟨σ, x⟩/n` with the planted spike.
    pub fn spike_correlation(&self, sigma: &SpinConfiguration) -> Result<f64> {
        correlation_spins(sigma, &self.spike)
    }
}

/// GOE(n) matrix: off-diagonal `N(0, 1/n)`, diagonal `N(0, 2/n)`.
///
/// Entries are drawn over the upper triangle in row-major order and mirrored.
pub fn sample_goe(n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::input("GOE dimension must be >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let off = (1.0 / n as f64).sqrt();
    let diag = (2.0 / n as f64).sqrt();
    let mut w = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let g: f64 = rng.sample(StandardNormal);
            if i == j {
                w[[i, i]] = diag * g;
            } else {
                w[[i, j]] = off * g;
                w[[j, i]] = off * g;
            }
        }
    }
    Ok(w)
}

/// I.i.d. uniform signs.
pub fn sample_spike(n: usize, seed: u64) -> SpinConfiguration {
    SpinConfiguration::random(n, &mut rng_from_seed(seed))
}

/// Spike, noise and `M` from independent sub-seeds of `seed`.
pub fn assemble(n: usize, lambda: f64, seed: u64) -> Result<SpikedInstance> {
    if n == 0 {
        return Err(Error::input("instance dimension must be >= 1"));
    }
    let spike = sample_spike(n, derive_seed(seed, stream::SPIKE));
    assemble_with_spike(spike, lambda, seed)
}

/// Instance with a prescribed spike; the noise still comes from `seed`.
pub fn assemble_with_spike(
    spike: SpinConfiguration,
    lambda: f64,
    seed: u64,
) -> Result<SpikedInstance> {
    let n = spike.len();
    let noise = sample_goe(n, derive_seed(seed, stream::NOISE))?;
    with_noise(spike, noise, lambda, seed)
}

/// Instance with spike `𝟙`, the gauge used for SK-with-field experiments.
pub fn assemble_ones(n: usize, lambda: f64, seed: u64) -> Result<SpikedInstance> {
    assemble_with_spike(SpinConfiguration::ones(n), lambda, seed)
}

/// Builds `M = noise + (λ/n) x xᵀ` from given parts.
pub fn with_noise(
    spike: SpinConfiguration,
    noise: Array2<f64>,
    lambda: f64,
    seed: u64,
) -> Result<SpikedInstance> {
    let n = spike.len();
    if n == 0 {
        return Err(Error::input("instance dimension must be >= 1"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if noise.dim() != (n, n) {
        return Err(Error::Dimension { expected: n, got: noise.nrows() });
    }
    let scale = lambda / n as f64;
    let x = spike.as_slice();
    let mut m = noise.clone();
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] += scale * (x[i] * x[j]) as f64;
        }
    }
    Ok(SpikedInstance { n, lambda, spike, noise, m_matrix: m, seed })
}

/// `σᵀAσ` for a symmetric dense matrix.
pub fn quadratic_form(a: &Array2<f64>, sigma: &SpinConfiguration) -> Result<f64> {
    check_dim(a.nrows(), sigma.len())?;
    let s = sigma.as_slice();
    let mut total = 0.0;
    for (i, row) in a.outer_iter().enumerate() {
        let dot: f64 = row.iter().zip(s).map(|(&a, &b)| a * b as f64).sum();
        total += s[i] as f64 * dot;
    }
    Ok(total)
}

/// Log unnormalised density `(β/2) σᵀMσ` of the scaled posterior.
pub fn posterior_energy(sigma: &SpinConfiguration, inst: &SpikedInstance, beta: f64) -> Result<f64> {
    if beta == 0.0 {
        check_dim(inst.n, sigma.len())?;
        return Ok(0.0);
    }
    Ok(0.5 * beta * quadratic_form(&inst.m_matrix, sigma)?)
}

/// `⟨a, b⟩ / n`.
pub fn correlation(a: &SpinConfiguration, b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::input("correlation of empty vectors"));
    }
    let dot: f64 = a.as_slice().iter().zip(b).map(|(&s, &v)| s as f64 * v).sum();
    Ok(dot / a.len() as f64)
}

pub fn correlation_spins(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::input("correlation of empty vectors"));
    }
    let dot: i64 = a.as_slice().iter().zip(b.as_slice()).map(|(&x, &y)| (x * y) as i64).sum();
    Ok(dot as f64 / a.len() as f64)
}
