//! Heat-bath Glauber dynamics.

use ndarray::Array2;
use rand::Rng;

use super::{heat_bath_probability, IsingModel, Trajectory, UpdateOrder};
use crate::error::check_dim;
use crate::instances::SpinConfiguration;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// A Glauber chain owning its configuration and local fields.
///
/// `interaction[i] = Σ_{j≠i} J_ij σ_j` is kept in sync with `σ` in `O(n)` per
/// accepted flip. The quadratic and linear parts of the log-weight are tracked
/// separately so the field can be swapped without touching the couplings.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    model: IsingModel<'a>,
    sigma: Vec<i8>,
    interaction: Vec<f64>,
    half_quad: f64,
    linear: f64,
    reference: Vec<i8>,
    ref_dot: i64,
    order: UpdateOrder,
    cursor: usize,
}

impl<'a> GlauberChain<'a> {
    pub fn new(model: IsingModel<'a>, start: SpinConfiguration) -> Result<Self> {
        let n = model.n();
        check_dim(n, start.len())?;
        if n == 0 {
            return Err(Error::input("empty model"));
        }
        let sigma = start.as_slice().to_vec();
        let mut chain = Self {
            model,
            reference: vec![1; n],
            ref_dot: 0,
            interaction: vec![0.0; n],
            half_quad: 0.0,
            linear: 0.0,
            sigma,
            order: UpdateOrder::RandomSite,
            cursor: 0,
        };
        chain.rebuild();
        Ok(chain)
    }

    fn rebuild(&mut self) {
        let j = self.model.coupling();
        let mut half_quad = 0.0;
        for (i, row) in j.outer_iter().enumerate() {
            let full: f64 = row.iter().zip(&self.sigma).map(|(&a, &s)| a * s as f64).sum();
            self.interaction[i] = full - j[[i, i]] * self.sigma[i] as f64;
            half_quad += 0.5 * self.sigma[i] as f64 * full;
        }
        self.half_quad = half_quad;
        self.linear = dot_field(self.model.field(), &self.sigma);
        self.ref_dot = dot_spins(&self.reference, &self.sigma);
    }

    pub fn with_order(mut self, order: UpdateOrder) -> Self {
        self.order = order;
        self
    }

    /// Correlation is reported against `reference` (default `𝟙`).
    pub fn set_reference(&mut self, reference: &SpinConfiguration) -> Result<()> {
        check_dim(self.n(), reference.len())?;
        self.reference = reference.as_slice().to_vec();
        self.ref_dot = dot_spins(&self.reference, &self.sigma);
        Ok(())
    }

    pub fn set_field(&mut self, field: Vec<f64>) -> Result<()> {
        check_dim(self.n(), field.len())?;
        if field.iter().any(|h| !h.is_finite()) {
            return Err(Error::NonFinite("external field".into()));
        }
        self.model.field = field;
        self.linear = dot_field(self.model.field(), &self.sigma);
        Ok(())
    }

    /// Sets `h = z·x` for a sign vector `x`.
    pub fn set_field_along(&mut self, z: f64, direction: &[i8]) -> Result<()> {
        check_dim(self.n(), direction.len())?;
        if !z.is_finite() {
            return Err(Error::NonFinite("external field".into()));
        }
        for (h, &x) in self.model.field.iter_mut().zip(direction) {
            *h = z * x as f64;
        }
        self.linear = dot_field(self.model.field(), &self.sigma);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn model(&self) -> &IsingModel<'a> {
        &self.model
    }

    pub fn spins(&self) -> &[i8] {
        &self.sigma
    }

    pub fn state(&self) -> SpinConfiguration {
        SpinConfiguration::new(self.sigma.clone()).expect("chain keeps ±1 spins")
    }

    pub fn local_field(&self, i: usize) -> f64 {
        self.model.scale * self.interaction[i] + self.model.field[i]
    }

    /// `⟨σ, reference⟩ / n`.
    pub fn correlation(&self) -> f64 {
        self.ref_dot as f64 / self.n() as f64
    }

    /// `⟨σ, reference⟩` as an integer.
    pub fn reference_dot(&self) -> i64 {
        self.ref_dot
    }

    /// `scale·½σᵀJσ`, diagonal included.
    pub fn quadratic_energy(&self) -> f64 {
        self.model.scale * self.half_quad
    }

    /// Log-weight `scale·½σᵀJσ + ⟨h, σ⟩` of the current state.
    pub fn energy(&self) -> f64 {
        self.quadratic_energy() + self.linear
    }

    /// Heat-bath update of site `i` driven by the uniform variate `u`.
    #[inline]
    pub fn update_site(&mut self, i: usize, u: f64) -> bool {
        let p = heat_bath_probability(self.local_field(i));
        let new: i8 = if u < p { 1 } else { -1 };
        let old = self.sigma[i];
        if new == old {
            return false;
        }
        let delta = (new - old) as f64;
        self.half_quad += delta * self.interaction[i];
        self.linear += delta * self.model.field[i];
        self.ref_dot += ((new - old) * self.reference[i]) as i64;
        self.sigma[i] = new;
        let j = self.model.coupling;
        let row = j.row(i);
        let row = row.as_slice().expect("row-major coupling");
        for (acc, &jij) in self.interaction.iter_mut().zip(row) {
            *acc += delta * jij;
        }
        self.interaction[i] -= delta * row[i];
        true
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let i = match self.order {
            UpdateOrder::RandomSite => rng.gen_range(0..self.n()),
            UpdateOrder::Sequential => {
                let i = self.cursor;
                self.cursor = (self.cursor + 1) % self.n();
                i
            }
        };
        let u: f64 = rng.gen();
        self.update_site(i, u)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, steps: u64, rng: &mut R) {
        for _ in 0..steps {
            self.step(rng);
        }
    }

    /// Largest deviation of the cached local fields and energy from a fresh
    /// `O(n²)` recomputation.
    pub fn bookkeeping_drift(&self) -> f64 {
        let mut fresh = self.clone();
        fresh.rebuild();
        let fields = self
            .interaction
            .iter()
            .zip(&fresh.interaction)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        fields
            .max((self.half_quad - fresh.half_quad).abs())
            .max((self.linear - fresh.linear).abs())
    }
}

fn dot_field(h: &[f64], sigma: &[i8]) -> f64 {
    h.iter().zip(sigma).map(|(&h, &s)| h * s as f64).sum()
}

fn dot_spins(a: &[i8], b: &[i8]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| (x * y) as i64).sum()
}

/// Options for [`glauber_run`].
#[derive(Debug, Clone, Default)]
pub struct GlauberOptions {
    /// Recording period in single-site steps; `None` records once per sweep.
    pub record_every: Option<u64>,
    pub order: UpdateOrder,
    /// Correlation reference; `None` means `𝟙` (magnetization).
    pub reference: Option<SpinConfiguration>,
}

#[derive(Debug, Clone)]
pub struct GlauberRun {
    pub trajectory: Trajectory,
    pub final_state: SpinConfiguration,
}

/// Runs `steps` single-site updates from `start`, recording at step 0, every
/// `record_every` steps and at the final step.
pub fn glauber_run(
    model: &IsingModel<'_>,
    start: &SpinConfiguration,
    steps: u64,
    seed: u64,
    options: &GlauberOptions,
) -> Result<GlauberRun> {
    let mut chain = GlauberChain::new(model.clone(), start.clone())?.with_order(options.order);
    if let Some(r) = &options.reference {
        chain.set_reference(r)?;
    }
    let every = options.record_every.unwrap_or(chain.n() as u64).max(1);
    let mut rng = rng_from_seed(seed);
    let mut trajectory = Trajectory::new(every, seed);
    trajectory.push(0, chain.correlation(), chain.energy(), None);
    let mut done = 0u64;
    while done < steps {
        let chunk = every.min(steps - done);
        chain.run(chunk, &mut rng);
        done += chunk;
        trajectory.push(done, chain.correlation(), chain.energy(), None);
    }
    Ok(GlauberRun { trajectory, final_state: chain.state() })
}

/// Approximate draw from `μ_{βW, h𝟙}` by `inner_steps` Glauber updates from `warm`.
///
/// Exact only as `inner_steps → ∞` (except at `β = 0`, where a draw is exact
/// once every site has been visited).
pub fn sk_gibbs_sample(
    noise: &Array2<f64>,
    beta: f64,
    h: f64,
    inner_steps: u64,
    warm: &SpinConfiguration,
    seed: u64,
) -> Result<SpinConfiguration> {
    if !h.is_finite() {
        return Err(Error::input(format!("field must be finite, got {h}")));
    }
    sk_gibbs_sample_field(noise, beta, &vec![h; noise.nrows()], inner_steps, warm, seed)
}

/// As [`sk_gibbs_sample`] with an arbitrary field vector.
pub fn sk_gibbs_sample_field(
    noise: &Array2<f64>,
    beta: f64,
    field: &[f64],
    inner_steps: u64,
    warm: &SpinConfiguration,
    seed: u64,
) -> Result<SpinConfiguration> {
    if inner_steps == 0 {
        return Err(Error::input("inner_steps must be >= 1"));
    }
    check_dim(noise.nrows(), field.len())?;
    if !noise.is_standard_layout() || noise.ncols() != noise.nrows() {
        return Err(Error::input("noise must be a square row-major matrix"));
    }
    let model = IsingModel::trusted(noise, beta, field.to_vec());
    let mut chain = GlauberChain::new(model, warm.clone())?;
    chain.run(inner_steps, &mut rng_from_seed(seed));
    Ok(chain.state())
}
