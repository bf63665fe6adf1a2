//! Markov chains on `{±1}^n` and their small-`n` exact counterparts.
//!
//! * [`glauber`]: heat-bath Glauber dynamics with incrementally maintained
//!   local fields, plus the SK samplers built on it.
//! * [`rgd`]: restricted Gaussian dynamics on a planted instance, its
//!   one-dimensional projection and the Curie–Weiss special case.
//! * [`exact`]: enumeration of Gibbs measures and exact transition kernels for
//!   `n ≤ 20` (`n ≤ 12` for the kernels), used as oracles and for the
//!   Dirichlet-form diagnostic.
//! * [`probe`]: replica overlap statistics and Monte Carlo error estimates.
//!
//! Gibbs measures have the form `μ(σ) ∝ exp(s·½σᵀJσ + ⟨h, σ⟩)`, where `s` is
//! the coupling scale of an [`IsingModel`]. The external field is never
//! multiplied by `s`.

pub mod exact;
pub mod glauber;
pub mod probe;
pub mod rgd;

use std::io::Write;

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

pub use exact::{
    dirichlet_diagnostic, exact_enumerate, Enumeration, ExactKernel, KernelKind, MAX_ENUMERATION,
    MAX_KERNEL,
};
pub use glauber::{
    glauber_run, sk_gibbs_sample, sk_gibbs_sample_field, GlauberChain, GlauberOptions, GlauberRun,
};
pub use probe::{batch_means, overlap_concentration_probe, McEstimate, OverlapProbe};
pub use rgd::{
    curie_weiss_rgd, default_inner_steps, prgd_run, prgd_step, rgd_run, rgd_step, RgdChain,
    RgdStep,
};

/// Probability that a heat-bath update at local field `l` sets the spin to +1.
#[inline]
pub fn heat_bath_probability(local_field: f64) -> f64 {
    0.5 * (1.0 + local_field.tanh())
}

/// Ising model `μ(σ) ∝ exp(scale·½σᵀJσ + ⟨h, σ⟩)`.
///
/// The coupling is borrowed so that chains on large instances share one copy.
#[derive(Debug, Clone)]
pub struct IsingModel<'a> {
    coupling: ArrayView2<'a, f64>,
    scale: f64,
    field: Vec<f64>,
}

impl<'a> IsingModel<'a> {
    /// Checks that `coupling` is square, exactly symmetric and row-major.
    pub fn new(coupling: &'a Array2<f64>, scale: f64, field: Vec<f64>) -> Result<Self> {
        let n = coupling.nrows();
        if coupling.ncols() != n {
            return Err(Error::input(format!(
                "coupling must be square, got {}x{}",
                n,
                coupling.ncols()
            )));
        }
        if field.len() != n {
            return Err(Error::Dimension { expected: n, got: field.len() });
        }
        if !scale.is_finite() || field.iter().any(|h| !h.is_finite()) {
            return Err(Error::input("coupling scale and field must be finite"));
        }
        if !coupling.is_standard_layout() {
            return Err(Error::input("coupling matrix must be in row-major layout"));
        }
        for i in 0..n {
            for j in i + 1..n {
                if coupling[[i, j]] != coupling[[j, i]] {
                    return Err(Error::input(format!("coupling not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self::trusted(coupling, scale, field))
    }

    /// Model with no external field.
    pub fn without_field(coupling: &'a Array2<f64>, scale: f64) -> Result<Self> {
        Self::new(coupling, scale, vec![0.0; coupling.nrows()])
    }

    /// Skips the checks; for row-major matrices built symmetric by construction.
    pub(crate) fn trusted(coupling: &'a Array2<f64>, scale: f64, field: Vec<f64>) -> Self {
        debug_assert!(coupling.is_standard_layout());
        debug_assert_eq!(coupling.nrows(), field.len());
        Self { coupling: coupling.view(), scale, field }
    }

    pub fn n(&self) -> usize {
        self.field.len()
    }

    pub fn coupling(&self) -> ArrayView2<'a, f64> {
        self.coupling
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        Self { scale, ..self.clone() }
    }

    /// `scale·½σᵀJσ + ⟨h, σ⟩`, diagonal included.
    pub fn log_weight(&self, sigma: &[i8]) -> f64 {
        let mut quad = 0.0;
        for (i, row) in self.coupling.outer_iter().enumerate() {
            let dot: f64 = row.iter().zip(sigma).map(|(&a, &s)| a * s as f64).sum();
            quad += sigma[i] as f64 * dot;
        }
        let lin: f64 = self.field.iter().zip(sigma).map(|(&h, &s)| h * s as f64).sum();
        0.5 * self.scale * quad + lin
    }
}

/// Single-site update order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    #[default]
    RandomSite,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEntry {
    pub step: u64,
    pub correlation: f64,
    pub energy: f64,
    pub z_field: Option<f64>,
}

/// Recorded time series of a chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub entries: Vec<TrajectoryEntry>,
    pub record_every: u64,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(record_every: u64, seed: u64) -> Self {
        Self { entries: Vec::new(), record_every: record_every.max(1), seed }
    }

    pub(crate) fn push(&mut self, step: u64, correlation: f64, energy: f64, z_field: Option<f64>) {
        debug_assert!(self.entries.last().is_none_or(|e| e.step < step));
        self.entries.push(TrajectoryEntry { step, correlation, energy, z_field });
    }

    pub fn last(&self) -> Option<&TrajectoryEntry> {
        self.entries.last()
    }

    pub fn final_correlation(&self) -> Option<f64> {
        self.last().map(|e| e.correlation)
    }

    pub fn correlations(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.correlation).collect()
    }

    /// CSV with header `step,correlation,energy,z_field`; `z_field` is empty when absent.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,correlation,energy,z_field")?;
        for e in &self.entries {
            match e.z_field {
                Some(z) => writeln!(w, "{},{},{},{}", e.step, e.correlation, e.energy, z)?,
                None => writeln!(w, "{},{},{},", e.step, e.correlation, e.energy)?,
            }
        }
        w.flush()?;
        Ok(())
    }
}
