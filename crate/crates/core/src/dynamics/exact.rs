//! Exhaustive enumeration over `{±1}^n`.
//!
//! States are indexed by bit patterns: bit `i` set means spin `i` is +1
//! (see [`SpinConfiguration::to_index`]).

use crate::instances::{SpikedInstance, SpinConfiguration};
use crate::scalar::GaussRule;
use crate::{Error, Result};

use super::{heat_bath_probability, IsingModel};

/// Largest `n` accepted by [`exact_enumerate`].
pub const MAX_ENUMERATION: usize = 20;
/// Largest `n` for which dense exact kernels are built.
pub const MAX_KERNEL: usize = 12;

/// Exact Gibbs expectations.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub n: usize,
    /// `E[Σσ_i / n]`.
    pub magnetization: f64,
    /// `E⟨σ¹, σ²⟩/n` for independent replicas, i.e. `Σ_i ⟨σ_i⟩² / n`.
    pub overlap_mean: f64,
    /// Mean log-weight.
    pub mean_energy: f64,
    pub partition_log: f64,
    pub site_means: Vec<f64>,
    /// Probability of each state, indexed by bit pattern.
    pub distribution: Vec<f64>,
}

impl Enumeration {
    pub fn probability(&self, sigma: &SpinConfiguration) -> f64 {
        self.distribution[sigma.to_index() as usize]
    }

    /// Variance of the log-weight, for Monte Carlo error bars.
    pub fn energy_variance(&self, log_weights: &[f64]) -> f64 {
        self.distribution
            .iter()
            .zip(log_weights)
            .map(|(p, e)| p * (e - self.mean_energy).powi(2))
            .sum()
    }
}

/// Log-weights `β·s·½σᵀJσ + ⟨h, σ⟩` of all states, by Gray-code traversal.
pub fn log_weights(model: &IsingModel<'_>, beta: f64) -> Result<Vec<f64>> {
    let n = model.n();
    if n == 0 {
        return Err(Error::input("empty model"));
    }
    if n > MAX_ENUMERATION {
        return Err(Error::input(format!(
            "enumeration refused for n = {n} > {MAX_ENUMERATION}"
        )));
    }
    let j = model.coupling();
    let h = model.field();
    let s = beta * model.scale();
    let mut sigma = vec![-1i8; n];
    let mut interaction: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&k| k != i).map(|k| -j[[i, k]]).sum())
        .collect();
    let mut lw = model.with_scale(s).log_weight(&sigma);
    let mut out = vec![0.0; 1 << n];
    let mut index = 0usize;
    out[0] = lw;
    for k in 1usize..1 << n {
        let i = k.trailing_zeros() as usize;
        let delta = -2.0 * sigma[i] as f64;
        lw += delta * (s * interaction[i] + h[i]);
        sigma[i] = -sigma[i];
        for m in 0..n {
            if m != i {
                interaction[m] += delta * j[[m, i]];
            }
        }
        index ^= 1 << i;
        out[index] = lw;
    }
    Ok(out)
}

fn normalise(log_w: &[f64]) -> (Vec<f64>, f64) {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    (p, max + z.ln())
}

/// Exact expectations under `μ(σ) ∝ exp(β·s·½σᵀJσ + ⟨h, σ⟩)`, where `s` is the
/// model's coupling scale. `β` multiplies the couplings only.
pub fn exact_enumerate(model: &IsingModel<'_>, beta: f64) -> Result<Enumeration> {
    let n = model.n();
    let lw = log_weights(model, beta)?;
    let (distribution, partition_log) = normalise(&lw);
    let mean_energy = distribution.iter().zip(&lw).map(|(p, l)| p * l).sum();
    let mut site_means = vec![0.0; n];
    for (idx, &p) in distribution.iter().enumerate() {
        for (i, m) in site_means.iter_mut().enumerate() {
            if idx >> i & 1 == 1 {
                *m += p;
            } else {
                *m -= p;
            }
        }
    }
    let nf = n as f64;
    Ok(Enumeration {
        n,
        magnetization: site_means.iter().sum::<f64>() / nf,
        overlap_mean: site_means.iter().map(|m| m * m).sum::<f64>() / nf,
        mean_energy,
        partition_log,
        site_means,
        distribution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Random-site heat-bath Glauber.
    Glauber,
    /// Restricted Gaussian dynamics with an exact inner sampler.
    Rgd,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `flip[x·n + i] = P(x → x with spin i flipped)`.
    Glauber { flip: Vec<f64> },
    /// Rows depend on `x` only through `⟨x, spike⟩`; `class[x]` selects the row.
    Rgd { class: Vec<usize>, rows: Vec<Vec<f64>> },
}

/// Exact transition kernel together with its target law.
#[derive(Debug, Clone)]
pub struct ExactKernel {
    n: usize,
    pi: Vec<f64>,
    repr: Repr,
}

fn check_kernel_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_KERNEL {
        Err(Error::input(format!("exact kernels need 1 <= n <= {MAX_KERNEL}, got {n}")))
    } else {
        Ok(())
    }
}

impl ExactKernel {
    /// Random-site Glauber kernel for `exp(β·s·½σᵀJσ + ⟨h, σ⟩)`.
    pub fn glauber(model: &IsingModel<'_>, beta: f64) -> Result<Self> {
        let n = model.n();
        check_kernel_size(n)?;
        let (pi, _) = normalise(&log_weights(model, beta)?);
        let j = model.coupling();
        let s = beta * model.scale();
        let mut flip = vec![0.0; n << n];
        for x in 0..1usize << n {
            let sigma = SpinConfiguration::from_index(x as u64, n);
            let sig = sigma.as_slice();
            for i in 0..n {
                let inter: f64 = (0..n).filter(|&k| k != i).map(|k| j[[i, k]] * sig[k] as f64).sum();
                let p_plus = heat_bath_probability(s * inter + model.field()[i]);
                let p_other = if sig[i] > 0 { 1.0 - p_plus } else { p_plus };
                flip[x * n + i] = p_other / n as f64;
            }
        }
        Ok(Self { n, pi, repr: Repr::Glauber { flip } })
    }

    /// RGD kernel on `inst` at inverse temperature `β`, integrating the
    /// Gaussian `g` with `rule`. Its target law is `μ_{βM}`.
    pub fn rgd(inst: &SpikedInstance, beta: f64, rule: &GaussRule) -> Result<Self> {
        let n = inst.n;
        check_kernel_size(n)?;
        let posterior = IsingModel::trusted(&inst.m_matrix, beta, vec![0.0; n]);
        let (pi, _) = normalise(&log_weights(&posterior, 1.0)?);
        let sk = IsingModel::trusted(&inst.noise, beta, vec![0.0; n]);
        let quad = log_weights(&sk, 1.0)?;
        let spike = inst.spike.as_slice();
        let overlap: Vec<i64> = (0..1u64 << n)
            .map(|x| {
                let s = SpinConfiguration::from_index(x, n);
                s.as_slice().iter().zip(spike).map(|(&a, &b)| (a * b) as i64).sum()
            })
            .collect();
        let class: Vec<usize> = overlap.iter().map(|&r| ((r + n as i64) / 2) as usize).collect();
        let bl = beta * inst.lambda;
        let nf = n as f64;
        let points = rule.points();
        let mut rows = Vec::with_capacity(n + 1);
        let mut lw = vec![0.0; 1 << n];
        for k in 0..=n {
            let r = (2 * k) as f64 - nf;
            let mut row = vec![0.0; 1 << n];
            for &(g, w) in &points {
                let z = bl * r / nf + (bl / nf).sqrt() * g;
                for (l, (&a, &o)) in lw.iter_mut().zip(quad.iter().zip(&overlap)) {
                    *l = a + z * o as f64;
                }
                let (p, _) = normalise(&lw);
                for (acc, v) in row.iter_mut().zip(&p) {
                    *acc += w * v;
                }
            }
            rows.push(row);
        }
        Ok(Self { n, pi, repr: Repr::Rgd { class, rows } })
    }

    pub fn kind(&self) -> KernelKind {
        match self.repr {
            Repr::Glauber { .. } => KernelKind::Glauber,
            Repr::Rgd { .. } => KernelKind::Rgd,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        1 << self.n
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `P(x → y)`.
    pub fn transition(&self, x: usize, y: usize) -> f64 {
        match &self.repr {
            Repr::Glauber { flip } => {
                let diff = x ^ y;
                if diff == 0 {
                    1.0 - flip[x * self.n..(x + 1) * self.n].iter().sum::<f64>()
                } else if diff.is_power_of_two() {
                    flip[x * self.n + diff.trailing_zeros() as usize]
                } else {
                    0.0
                }
            }
            Repr::Rgd { class, rows } => rows[class[x]][y],
        }
    }

    /// One step of the chain applied to a distribution: `ν ↦ νP`.
    pub fn apply(&self, nu: &[f64]) -> Vec<f64> {
        let states = self.states();
        match &self.repr {
            Repr::Glauber { flip } => {
                let n = self.n;
                (0..states)
                    .map(|y| {
                        let stay = 1.0 - flip[y * n..(y + 1) * n].iter().sum::<f64>();
                        let moved: f64 = (0..n).map(|i| nu[y ^ 1 << i] * flip[(y ^ 1 << i) * n + i]).sum();
                        nu[y] * stay + moved
                    })
                    .collect()
            }
            Repr::Rgd { class, rows } => {
                let mut mass = vec![0.0; rows.len()];
                for (x, &v) in nu.iter().enumerate() {
                    mass[class[x]] += v;
                }
                let mut out = vec![0.0; states];
                for (m, row) in mass.iter().zip(rows) {
                    for (o, &p) in out.iter_mut().zip(row) {
                        *o += m * p;
                    }
                }
                out
            }
        }
    }

    /// Row sums minus one, worst case.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.states())
            .map(|x| ((0..self.states()).map(|y| self.transition(x, y)).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_{x,y} |π(x)P(x→y) − π(y)P(y→x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let states = self.states();
        let mut worst = 0.0f64;
        for x in 0..states {
            let ys: Box<dyn Iterator<Item = usize>> = match self.repr {
                Repr::Glauber { .. } => Box::new((0..self.n).map(move |i| x ^ 1 << i)),
                Repr::Rgd { .. } => Box::new(0..states),
            };
            for y in ys {
                let r = self.pi[x] * self.transition(x, y) - self.pi[y] * self.transition(y, x);
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Total-variation distance between `πP` and `π`.
    pub fn stationarity_residual(&self) -> f64 {
        0.5 * self.apply(&self.pi).iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// `(1/(T+1)) Σ_{t=0}^{T} ν₀Pᵗ`.
    pub fn time_average(&self, nu0: &[f64], horizon: usize) -> Vec<f64> {
        let mut acc = nu0.to_vec();
        let mut cur = nu0.to_vec();
        for _ in 0..horizon {
            cur = self.apply(&cur);
            acc.iter_mut().zip(&cur).for_each(|(a, c)| *a += c);
        }
        let k = (horizon + 1) as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        acc
    }

    /// `Σ_{x,y} π(x)P(x→y)(f(x) − f(y))(log f(x) − log f(y))` with `f = ν/π`.
    pub fn dirichlet(&self, nu: &[f64]) -> Result<f64> {
        let states = self.states();
        if nu.len() != states {
            return Err(Error::Dimension { expected: states, got: nu.len() });
        }
        if nu.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::input("distribution entries must be finite and non-negative"));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("distribution sums to {total}, not 1")));
        }
        if let Some(x) = (0..states).find(|&x| nu[x] == 0.0 && self.pi[x] > 0.0) {
            return Err(Error::domain(format!("density ratio vanishes at state {x}")));
        }
        let f: Vec<f64> = nu.iter().zip(&self.pi).map(|(v, p)| v / p).collect();
        let lf: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let term = |x: usize, y: usize| (f[x] - f[y]) * (lf[x] - lf[y]);
        let mut total = 0.0;
        match &self.repr {
            Repr::Glauber { flip } => {
                for x in 0..states {
                    let inner: f64 = (0..self.n).map(|i| flip[x * self.n + i] * term(x, x ^ 1 << i)).sum();
                    total += self.pi[x] * inner;
                }
            }
            Repr::Rgd { class, rows } => {
                for x in 0..states {
                    let row = &rows[class[x]];
                    let inner: f64 = (0..states).map(|y| row[y] * term(x, y)).sum();
                    total += self.pi[x] * inner;
                }
            }
        }
        Ok(total)
    }
}

/// Dirichlet form `E(f, log f)` of `ν` for the given exact kernel.
pub fn dirichlet_diagnostic(kernel: &ExactKernel, nu: &[f64]) -> Result<f64> {
    kernel.dirichlet(nu)
}
