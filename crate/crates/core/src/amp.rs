//! Approximate message passing for the spiked Wigner model.
//!
//! Iteration, with `m^{-1} = 0` and `coef` either `λ` (Bayes) or `β`
//! (mismatched):
//!
//! ```text
//! m^t     = tanh(x^t)
//! b_t     = coef²/N · Σ_i (1 − tanh²(x^t_i))
//! x^{t+1} = coef · M m^t − b_t · m^{t−1}
//! ```
//!
//! When `x^0` is a scaled copy of the top eigenvector with overlap `a` to the
//! spike, choosing `σ₀ = a / (λ√(1 − a²))` and `x^0 = a/(1 − a²)·√N·v₁` puts
//! `x^0` in the state-evolution form `λ²σ₀² x + λσ₀ g`, so the correlation of
//! `m^t` with the spike follows entry `t + 1` of the Bayes recursion started
//! at `σ₀²`.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::check_dim;
use crate::instances::{correlation, SpikedInstance, SpinConfiguration};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::scalar::{at_condition, f_update, se_bayes, ModelParams, SePath};
use crate::{Error, Result};

pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;
/// Default `σ₀²` when the spectral scale is fixed by the second-moment rule.
pub const DEFAULT_SIGMA0_SQ: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub m_prev: Vec<f64>,
    pub x_cur: Vec<f64>,
    pub t: usize,
}

impl AmpState {
    pub fn zero(n: usize) -> Self {
        Self { m_prev: vec![0.0; n], x_cur: vec![0.0; n], t: 0 }
    }

    /// State with `x^0 = x` and `m^{-1} = 0`.
    pub fn from_x(x: Vec<f64>) -> Self {
        Self { m_prev: vec![0.0; x.len()], t: 0, x_cur: x }
    }

    pub fn magnetization(&self) -> Vec<f64> {
        self.x_cur.iter().map(|v| v.tanh()).collect()
    }

    /// `⟨tanh(x^t), spike⟩ / N`.
    pub fn spike_correlation(&self, inst: &SpikedInstance) -> Result<f64> {
        correlation(&inst.spike, &self.magnetization())
    }
}

/// How the spectral direction is scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralScale {
    /// `‖x^0‖²/N = λ²σ₀²`.
    SecondMoment { sigma0_sq: f64 },
    /// Scale and `σ₀²` fixed by the measured overlap of `v₁` with the spike.
    MatchOverlap,
}

impl Default for SpectralScale {
    fn default() -> Self {
        SpectralScale::SecondMoment { sigma0_sq: DEFAULT_SIGMA0_SQ }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmpInit {
    Zero,
    Spectral(SpectralScale),
    /// `x^0 = c(a·x + √(1−a²)·ξ)` with fresh Gaussian `ξ`, independent of the noise.
    SideInformation { overlap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopEigenpair {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

fn matvec(a: &Array2<f64>, v: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(a.outer_iter()) {
        let row = row.to_slice().expect("row-major matrix");
        *o = row.iter().zip(v).map(|(x, y)| x * y).sum();
    }
}

fn normalise(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    norm
}

/// Top algebraic eigenpair of a symmetric matrix.
///
/// A short unshifted pass estimates the spectral radius `ρ`; the main loop
/// iterates `A + ρI`, whose spectrum is non-negative, until successive unit
/// vectors differ by at most `tol`.
pub fn power_iteration(a: &Array2<f64>, seed: u64, tol: f64, max_iter: usize) -> Result<TopEigenpair> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || !a.is_standard_layout() {
        return Err(Error::input("power iteration needs a non-empty square row-major matrix"));
    }
    let mut rng = rng_from_seed(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    normalise(&mut v);
    let mut w = vec![0.0; n];
    let mut radius = 0.0;
    for _ in 0..50 {
        matvec(a, &v, &mut w);
        radius = normalise(&mut w);
        std::mem::swap(&mut v, &mut w);
    }
    let shift = 1.05 * radius;
    for it in 1..=max_iter {
        matvec(a, &v, &mut w);
        w.iter_mut().zip(&v).for_each(|(x, y)| *x += shift * y);
        normalise(&mut w);
        let change = w.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut w);
        if !change.is_finite() {
            return Err(Error::NonFinite("power iteration vector".into()));
        }
        if change <= tol {
            matvec(a, &v, &mut w);
            let value = w.iter().zip(&v).map(|(x, y)| x * y).sum();
            return Ok(TopEigenpair { value, vector: v, iterations: it });
        }
    }
    Err(Error::NoConvergence { what: "power iteration", iterations: max_iter })
}

/// Spectral starting point and the state-evolution seed it corresponds to.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub state: AmpState,
    pub sigma0_sq: f64,
    pub eigenvalue: f64,
    /// `|⟨v₁, x⟩| / √N`.
    pub overlap: f64,
}

/// Spectral initialisation. The eigenvector sign is aligned with the spike.
pub fn spectral_init(inst: &SpikedInstance, scale: SpectralScale, seed: u64) -> Result<SpectralInit> {
    let pair = power_iteration(
        &inst.m_matrix,
        derive_seed(seed, stream::POWER_ITERATION),
        POWER_TOL,
        POWER_MAX_ITER,
    )?;
    let n = inst.n as f64;
    let signed = correlation(&inst.spike, &pair.vector)? * n.sqrt();
    let overlap = signed.abs().min(1.0);
    let sign = if signed < 0.0 { -1.0 } else { 1.0 };
    let lambda = inst.lambda;
    let (c, sigma0_sq) = match scale {
        SpectralScale::SecondMoment { sigma0_sq } => {
            if !(sigma0_sq > 0.0 && sigma0_sq <= 1.0) {
                return Err(Error::input(format!("sigma0_sq must lie in (0, 1], got {sigma0_sq}")));
            }
            (lambda * sigma0_sq.sqrt(), sigma0_sq)
        }
        SpectralScale::MatchOverlap => {
            if lambda == 0.0 || overlap >= 1.0 {
                return Err(Error::domain(format!(
                    "overlap matching needs lambda > 0 and overlap < 1 (lambda {lambda}, overlap {overlap})"
                )));
            }
            let s0 = overlap / (lambda * (1.0 - overlap * overlap).sqrt());
            (overlap / (1.0 - overlap * overlap), (s0 * s0).min(1.0))
        }
    };
    let x0: Vec<f64> = pair.vector.iter().map(|v| sign * c * n.sqrt() * v).collect();
    Ok(SpectralInit { state: AmpState::from_x(x0), sigma0_sq, eigenvalue: pair.value, overlap })
}

/// Starting state and the matching `σ₀²` (`0` for [`AmpInit::Zero`]).
pub fn amp_init(inst: &SpikedInstance, mode: AmpInit, seed: u64) -> Result<(AmpState, f64)> {
    match mode {
        AmpInit::Zero => Ok((AmpState::zero(inst.n), 0.0)),
        AmpInit::Spectral(scale) => {
            let s = spectral_init(inst, scale, seed)?;
            Ok((s.state, s.sigma0_sq))
        }
        AmpInit::SideInformation { overlap: a } => {
            if !(a > 0.0 && a < 1.0) || inst.lambda == 0.0 {
                return Err(Error::input(format!("side information needs 0 < a < 1 and lambda > 0, got {a}")));
            }
            let s0 = a / (inst.lambda * (1.0 - a * a).sqrt());
            let c = a / (1.0 - a * a);
            let b = (1.0 - a * a).sqrt();
            let mut rng = rng_from_seed(derive_seed(seed, stream::START));
            let x0 = inst
                .spike
                .as_slice()
                .iter()
                .map(|&x| {
                    let xi: f64 = rng.sample(StandardNormal);
                    c * (a * x as f64 + b * xi)
                })
                .collect();
            Ok((AmpState::from_x(x0), (s0 * s0).min(1.0)))
        }
    }
}

/// One AMP iteration. With `onsager = false` the memory term is dropped.
pub fn amp_step_with(state: &AmpState, inst: &SpikedInstance, coef: f64, onsager: bool) -> Result<AmpState> {
    check_dim(inst.n, state.x_cur.len())?;
    check_dim(inst.n, state.m_prev.len())?;
    let m = state.magnetization();
    let n = inst.n as f64;
    let b = if onsager {
        coef * coef / n * m.iter().map(|v| 1.0 - v * v).sum::<f64>()
    } else {
        0.0
    };
    let mut next = vec![0.0; inst.n];
    matvec(&inst.m_matrix, &m, &mut next);
    for (i, (x, mp)) in next.iter_mut().zip(&state.m_prev).enumerate() {
        *x = coef * *x - b * mp;
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("AMP iterate x^{} entry {i}", state.t + 1)));
        }
    }
    Ok(AmpState { m_prev: m, x_cur: next, t: state.t + 1 })
}

pub fn amp_step(state: &AmpState, inst: &SpikedInstance, coef: f64) -> Result<AmpState> {
    amp_step_with(state, inst, coef, true)
}

/// Correlations of `m^0, …, m^steps` with the spike, alongside the Bayes recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpTrace {
    pub correlations: Vec<f64>,
    pub se: SePath,
    pub sigma0_sq: f64,
}

impl AmpTrace {
    /// Prediction for `m^t`: entry `t + 1` of the recursion.
    pub fn predicted(&self, t: usize) -> (f64, f64) {
        let e = self.se.entries[t + 1];
        (e.m, e.q)
    }

    pub fn max_deviation(&self) -> f64 {
        self.correlations
            .iter()
            .enumerate()
            .map(|(t, c)| (c - self.predicted(t).0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,correlation,se_m,se_q`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,correlation,se_m,se_q")?;
        for (t, c) in self.correlations.iter().enumerate() {
            let (m, q) = self.predicted(t);
            writeln!(w, "{t},{c},{m},{q}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bayes AMP (`coef = λ`) for `steps` iterations from `state`, compared with
/// the recursion started at `sigma0_sq`.
pub fn amp_trace(
    inst: &SpikedInstance,
    mut state: AmpState,
    sigma0_sq: f64,
    steps: usize,
    onsager: bool,
    params: &ModelParams,
) -> Result<AmpTrace> {
    let se = se_bayes(inst.lambda, sigma0_sq, steps + 1, params)?;
    let mut correlations = Vec::with_capacity(steps + 1);
    correlations.push(state.spike_correlation(inst)?);
    for _ in 0..steps {
        state = amp_step_with(&state, inst, inst.lambda, onsager)?;
        correlations.push(state.spike_correlation(inst)?);
    }
    Ok(AmpTrace { correlations, se, sigma0_sq })
}

/// Predicted post-step correlation `f_{β,λ}(R(σ, x))` for one RGD step.
///
/// Refuses correlations where `(β, βλ|R|)` violates the AT condition.
pub fn amp_like_map(
    sigma: &SpinConfiguration,
    inst: &SpikedInstance,
    beta: f64,
    lambda: f64,
    params: &ModelParams,
) -> Result<f64> {
    let r = inst.spike_correlation(sigma)?;
    let at = at_condition(beta, beta * lambda * r.abs(), params)?;
    if !at.satisfied {
        return Err(Error::domain(format!(
            "AT condition fails at correlation {r} (margin {})",
            at.margin
        )));
    }
    f_update(r, beta, lambda, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::assemble;

    #[test]
    fn zero_state_is_fixed() {
        let inst = assemble(30, 2.0, 1).unwrap();
        let (s, s0) = amp_init(&inst, AmpInit::Zero, 0).unwrap();
        assert_eq!(s0, 0.0);
        let next = amp_step(&s, &inst, 2.0).unwrap();
        assert!(next.x_cur.iter().all(|&v| v == 0.0));
        assert_eq!(next.t, 1);
    }

    #[test]
    fn power_iteration_on_diagonal_matrix() {
        let mut a = Array2::<f64>::zeros((4, 4));
        for (i, v) in [1.0, -3.0, 2.0, 0.5].iter().enumerate() {
            a[[i, i]] = *v;
        }
        let p = power_iteration(&a, 3, 1e-10, 10_000).unwrap();
        assert!((p.value - 2.0).abs() < 1e-9);
        assert!((p.vector[2].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_budget_is_enforced() {
        let inst = assemble(200, 0.0, 2).unwrap();
        let r = power_iteration(&inst.m_matrix, 1, 1e-15, 3);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn second_moment_rule() {
        let inst = assemble(200, 2.0, 4).unwrap();
        let s = spectral_init(&inst, SpectralScale::SecondMoment { sigma0_sq: 0.04 }, 1).unwrap();
        let m2 = s.state.x_cur.iter().map(|v| v * v).sum::<f64>() / 200.0;
        assert!((m2 - 4.0 * 0.04).abs() < 1e-12);
        assert!(s.state.spike_correlation(&inst).unwrap() > 0.0);
    }

    #[test]
    fn onsager_term_uses_previous_magnetization() {
        let inst = assemble(20, 1.5, 3).unwrap();
        let x0: Vec<f64> = (0..20).map(|i| 0.1 * i as f64 - 1.0).collect();
        let s1 = amp_step(&AmpState::from_x(x0), &inst, 1.5).unwrap();
        let with = amp_step_with(&s1, &inst, 1.5, true).unwrap();
        let without = amp_step_with(&s1, &inst, 1.5, false).unwrap();
        let m = s1.magnetization();
        let b = 1.5 * 1.5 / 20.0 * m.iter().map(|v| 1.0 - v * v).sum::<f64>();
        for i in 0..20 {
            assert!((without.x_cur[i] - with.x_cur[i] - b * s1.m_prev[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_iterate_is_reported() {
        let inst = assemble(5, 1.0, 3).unwrap();
        let r = amp_step(&AmpState::from_x(vec![0.1; 5]), &inst, f64::INFINITY);
        assert!(matches!(r, Err(Error::NonFinite(s)) if s.contains("x^1")));
    }

    #[test]
    fn amp_like_map_cases() {
        let inst = assemble(400, 1.5, 5).unwrap();
        let p = ModelParams::default();
        let half = SpinConfiguration::new(
            inst.spike.as_slice().iter().enumerate().map(|(i, &s)| if i % 2 == 0 { s } else { -s }).collect(),
        )
        .unwrap();
        assert_eq!(amp_like_map(&half, &inst, 0.5, 1.5, &p).unwrap(), 0.0);
        // (1.5, h → 0) lies below the AT line
        assert!(matches!(amp_like_map(&half, &inst, 1.5, 1.5, &p), Err(Error::Domain(_))));
        let v = amp_like_map(&inst.spike, &inst, 1.5, 1.5, &p).unwrap();
        let w = amp_like_map(&inst.spike.negated(), &inst, 1.5, 1.5, &p).unwrap();
        assert_eq!(v, -w);
    }
}
