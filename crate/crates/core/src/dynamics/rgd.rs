//! Restricted Gaussian dynamics.
//!
//! One step from `σ` draws `g ∼ N(0,1)`, forms
//! `z = βλ·R(σ, x) + √(βλ/n)·g` and resamples `σ′ ∼ μ_{βW, z·x}` with an inner
//! Glauber run warm-started at `σ`. This is a Gibbs sampler for the joint law
//! of `(σ, z)` whose `σ`-marginal is `μ_{βM}`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::glauber::GlauberChain;
use super::{IsingModel, Trajectory};
use crate::error::check_dim;
use crate::instances::{SpikedInstance, SpinConfiguration};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Multiplier of `n ln n` in the default inner Glauber budget.
pub const INNER_STEPS_FACTOR: f64 = 20.0;

/// `⌈20·n·ln n⌉`, at least 1.
pub fn default_inner_steps(n: usize) -> u64 {
    let n = n as f64;
    ((INNER_STEPS_FACTOR * n * n.ln()).ceil() as u64).max(1)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("beta must be finite and >= 0, got {beta}")))
    }
}

#[derive(Debug, Clone)]
pub struct RgdStep {
    pub next: SpinConfiguration,
    pub z: f64,
    pub g: f64,
}

/// RGD on a planted instance, reusing one inner Glauber chain across steps.
#[derive(Debug, Clone)]
pub struct RgdChain<'a> {
    inst: &'a SpikedInstance,
    beta: f64,
    inner_steps: u64,
    inner: GlauberChain<'a>,
}

impl<'a> RgdChain<'a> {
    pub fn new(
        inst: &'a SpikedInstance,
        beta: f64,
        inner_steps: u64,
        start: SpinConfiguration,
    ) -> Result<Self> {
        check_beta(beta)?;
        check_dim(inst.n, start.len())?;
        if inner_steps == 0 {
            return Err(Error::input("inner_steps must be >= 1"));
        }
        let model = IsingModel::trusted(&inst.noise, beta, vec![0.0; inst.n]);
        let mut inner = GlauberChain::new(model, start)?;
        inner.set_reference(&inst.spike)?;
        Ok(Self { inst, beta, inner_steps, inner })
    }

    /// `R(σ, x)`.
    pub fn correlation(&self) -> f64 {
        self.inner.correlation()
    }

    /// `(β/2)σᵀMσ` of the current state.
    pub fn posterior_energy(&self) -> f64 {
        let dot = self.inner.reference_dot() as f64;
        self.inner.quadratic_energy() + 0.5 * self.beta * self.inst.lambda * dot * dot / self.inst.n as f64
    }

    pub fn state(&self) -> SpinConfiguration {
        self.inner.state()
    }

    /// Field strength `z` for a given Gaussian draw at the current state.
    pub fn field_for(&self, g: f64) -> f64 {
        let bl = self.beta * self.inst.lambda;
        bl * self.correlation() + (bl / self.inst.n as f64).sqrt() * g
    }

    /// One RGD step; returns `(z, g)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(f64, f64)> {
        let g: f64 = rng.sample(StandardNormal);
        let z = self.field_for(g);
        self.inner.set_field_along(z, self.inst.spike.as_slice())?;
        self.inner.run(self.inner_steps, rng);
        Ok((z, g))
    }
}

/// One RGD step from `sigma`.
pub fn rgd_step(
    sigma: &SpinConfiguration,
    inst: &SpikedInstance,
    beta: f64,
    inner_steps: u64,
    seed: u64,
) -> Result<RgdStep> {
    let mut chain = RgdChain::new(inst, beta, inner_steps, sigma.clone())?;
    let (z, g) = chain.step(&mut rng_from_seed(seed))?;
    Ok(RgdStep { next: chain.state(), z, g })
}

/// `steps` RGD steps from `start`; entry `t` holds `R(σ_t, x)`, the posterior
/// energy and the field `z` that produced `σ_t` (absent at `t = 0`).
pub fn rgd_run(
    start: &SpinConfiguration,
    inst: &SpikedInstance,
    beta: f64,
    steps: u64,
    inner_steps: u64,
    seed: u64,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::input("RGD run needs at least one step"));
    }
    let mut chain = RgdChain::new(inst, beta, inner_steps, start.clone())?;
    let mut rng = rng_from_seed(seed);
    let mut traj = Trajectory::new(1, seed);
    traj.push(0, chain.correlation(), chain.posterior_energy(), None);
    for t in 1..=steps {
        let (z, _) = chain.step(&mut rng)?;
        traj.push(t, chain.correlation(), chain.posterior_energy(), Some(z));
    }
    Ok(traj)
}

fn prgd_field<R: Rng + ?Sized>(z: f64, beta: f64, lambda: f64, n: usize, rng: &mut R) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    let bl = beta * lambda;
    bl * z + (bl / n as f64).sqrt() * g
}

fn check_prgd(z: f64, noise: &Array2<f64>, beta: f64, lambda: f64, inner_steps: u64) -> Result<()> {
    check_beta(beta)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if !(z.abs() <= 1.0) {
        return Err(Error::input(format!("correlation must lie in [-1, 1], got {z}")));
    }
    if inner_steps == 0 {
        return Err(Error::input("inner_steps must be >= 1"));
    }
    if noise.nrows() == 0 || noise.nrows() != noise.ncols() || !noise.is_standard_layout() {
        return Err(Error::input("noise must be a non-empty square row-major matrix"));
    }
    Ok(())
}

/// One step of the projected chain: `σ ∼ μ_{βW, h𝟙}` with
/// `h = βλz + √(βλ/n)·g`, returning `R(σ, 𝟙)`.
///
/// The inner sampler is warm-started from i.i.d. spins with mean `z`.
pub fn prgd_step(
    z: f64,
    noise: &Array2<f64>,
    beta: f64,
    lambda: f64,
    inner_steps: u64,
    seed: u64,
) -> Result<f64> {
    check_prgd(z, noise, beta, lambda, inner_steps)?;
    let n = noise.nrows();
    let mut rng = rng_from_seed(seed);
    let h = prgd_field(z, beta, lambda, n, &mut rng);
    let warm = SpinConfiguration::random_with_mean(n, z, &mut rng);
    let mut chain = GlauberChain::new(IsingModel::trusted(noise, beta, vec![h; n]), warm)?;
    chain.run(inner_steps, &mut rng);
    Ok(chain.correlation())
}

/// Iterated projected chain; each inner sampler is warm-started at the
/// previous sample. Energies are SK log-weights including the field.
pub fn prgd_run(
    z0: f64,
    noise: &Array2<f64>,
    beta: f64,
    lambda: f64,
    steps: u64,
    inner_steps: u64,
    seed: u64,
) -> Result<Trajectory> {
    check_prgd(z0, noise, beta, lambda, inner_steps)?;
    let n = noise.nrows();
    let mut rng = rng_from_seed(seed);
    let warm = SpinConfiguration::random_with_mean(n, z0, &mut rng);
    let mut chain = GlauberChain::new(IsingModel::trusted(noise, beta, vec![0.0; n]), warm)?;
    let mut traj = Trajectory::new(1, seed);
    traj.push(0, chain.correlation(), chain.energy(), None);
    for t in 1..=steps {
        let h = prgd_field(chain.correlation(), beta, lambda, n, &mut rng);
        chain.set_field(vec![h; n])?;
        chain.run(inner_steps, &mut rng);
        traj.push(t, chain.correlation(), chain.energy(), Some(h));
    }
    Ok(traj)
}

/// RGD for the Curie–Weiss model `exp(βn m²/2 + h n m)`.
///
/// With no disorder the conditional law is a product measure, so each step
/// samples `σ′` exactly: `z = βm + √(β/n)·g + h`, spins i.i.d. with
/// `P(+1) = (1 + tanh z)/2`. Starts from uniform spins.
pub fn curie_weiss_rgd(beta: f64, h: f64, n: usize, steps: u64, seed: u64) -> Result<Trajectory> {
    check_beta(beta)?;
    if !h.is_finite() {
        return Err(Error::input(format!("field must be finite, got {h}")));
    }
    if n == 0 {
        return Err(Error::input("n must be >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let nf = n as f64;
    let energy = |m: f64| 0.5 * beta * nf * m * m + h * nf * m;
    let mut m = SpinConfiguration::random(n, &mut rng).magnetization();
    let mut traj = Trajectory::new(1, seed);
    traj.push(0, m, energy(m), None);
    for t in 1..=steps {
        let g: f64 = rng.sample(StandardNormal);
        let z = beta * m + (beta / nf).sqrt() * g + h;
        let p = super::heat_bath_probability(z);
        let plus = (0..n).filter(|_| rng.gen::<f64>() < p).count();
        m = (2.0 * plus as f64 - nf) / nf;
        traj.push(t, m, energy(m), Some(z));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::assemble;

    #[test]
    fn inner_budget_default() {
        assert_eq!(default_inner_steps(1), 1);
        assert_eq!(default_inner_steps(1000), (20.0 * 1000.0 * 1000f64.ln()).ceil() as u64);
    }

    #[test]
    fn field_is_affine_in_correlation() {
        let inst = assemble(50, 2.0, 3).unwrap();
        let mut rng = rng_from_seed(1);
        let g = 0.37;
        let mut pts = Vec::new();
        for _ in 0..5 {
            let s = SpinConfiguration::random(50, &mut rng);
            let chain = RgdChain::new(&inst, 0.8, 10, s).unwrap();
            pts.push((chain.correlation(), chain.field_for(g)));
        }
        let offset = (0.8 * 2.0 / 50.0f64).sqrt() * g;
        for (r, z) in pts {
            assert!((z - (1.6 * r + offset)).abs() < 1e-14);
        }
    }

    #[test]
    fn step_is_deterministic() {
        let inst = assemble(40, 1.5, 2).unwrap();
        let s = SpinConfiguration::random(40, &mut rng_from_seed(9));
        let a = rgd_step(&s, &inst, 1.0, 500, 4).unwrap();
        let b = rgd_step(&s, &inst, 1.0, 500, 4).unwrap();
        assert_eq!(a.next, b.next);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn posterior_energy_tracks_direct_evaluation() {
        let inst = assemble(60, 2.0, 5).unwrap();
        let start = SpinConfiguration::random(60, &mut rng_from_seed(2));
        let traj = rgd_run(&start, &inst, 0.7, 5, 2000, 8).unwrap();
        let mut chain = RgdChain::new(&inst, 0.7, 2000, start).unwrap();
        let mut rng = rng_from_seed(8);
        for e in &traj.entries[1..] {
            chain.step(&mut rng).unwrap();
            let direct = crate::instances::posterior_energy(&chain.state(), &inst, 0.7).unwrap();
            assert!((e.energy - direct).abs() < 1e-9);
            assert_eq!(e.correlation, chain.correlation());
        }
    }

    #[test]
    fn infinite_temperature_rgd_forgets_start() {
        let inst = assemble(2000, 2.0, 1).unwrap();
        let traj = rgd_run(&inst.spike, &inst, 0.0, 3, 40_000, 3).unwrap();
        for e in &traj.entries[1..] {
            assert!(e.correlation.abs() < 0.1);
        }
    }

    #[test]
    fn projected_step_at_infinite_temperature() {
        let w = crate::instances::sample_goe(3000, 4).unwrap();
        let r = prgd_step(0.9, &w, 0.0, 2.0, 60_000, 5).unwrap();
        assert!(r.abs() < 0.1);
        assert!(prgd_step(1.5, &w, 0.5, 2.0, 10, 5).is_err());
    }

    #[test]
    fn curie_weiss_records_every_step() {
        let t = curie_weiss_rgd(1.0, 0.1, 100, 10, 2).unwrap();
        assert_eq!(t.entries.len(), 11);
        assert!(t.entries[1..].iter().all(|e| e.z_field.is_some()));
        assert!(t.entries.iter().all(|e| e.correlation.abs() <= 1.0));
    }
}
