//! Scalar state evolutions.
//!
//! Bayes AMP: `μ_{t+1} = λ E tanh(λ g σ_t + λ² σ_t²)`,
//! `σ²_{t+1} = E tanh²(λ g σ_t + λ² σ_t²)`.
//!
//! Mismatched AMP: `M_{t+1} = E tanh(β g √Q_t + βλ M_t)`,
//! `Q_{t+1} = E tanh²(β g √Q_t + βλ M_t)`, updated synchronously.
//!
//! Both are stored as `(m, q)` pairs; for the Bayes path `m = μ/λ` and
//! `q = σ²`, which puts them on the same footing as the RGD correlation.

use super::{check_finite_nonneg, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeVariant {
    Bayes,
    Mismatched,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeEntry {
    pub t: usize,
    pub m: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SePath {
    pub entries: Vec<SeEntry>,
    pub variant: SeVariant,
}

impl SePath {
    pub fn last(&self) -> SeEntry {
        *self.entries.last().expect("state-evolution path is never empty")
    }
}

/// Bayes state evolution started from `σ₀²` with `μ₀ = λ σ₀²`.
///
/// `σ₀² = 0` is the trivial fixed point and yields the all-zero path.
pub fn se_bayes(lambda: f64, sigma0_sq: f64, steps: usize, params: &ModelParams) -> Result<SePath> {
    params.validate()?;
    check_finite_nonneg("lambda", lambda)?;
    if !(0.0..=1.0).contains(&sigma0_sq) {
        return Err(Error::input(format!("sigma0_sq must lie in [0, 1], got {sigma0_sq}")));
    }
    if steps == 0 {
        return Err(Error::input("state evolution needs at least one step"));
    }
    let rule = params.rule()?;
    let mut entries = Vec::with_capacity(steps + 1);
    entries.push(SeEntry { t: 0, m: sigma0_sq, q: sigma0_sq });
    let mut var = sigma0_sq;
    for t in 1..=steps {
        let sd = var.sqrt();
        let (a, b) = (lambda * sd, lambda * lambda * var);
        let [e1, e2] = rule.expect_many(|g| {
            let th = (a * g + b).tanh();
            [th, th * th]
        })?;
        // entries hold μ/λ = E tanh(...)
        entries.push(SeEntry { t, m: e1, q: e2 });
        var = e2;
    }
    Ok(SePath { entries, variant: SeVariant::Bayes })
}

/// Synchronous mismatched state evolution from `(m0, q0)`.
pub fn se_mismatched(
    beta: f64,
    lambda: f64,
    m0: f64,
    q0: f64,
    steps: usize,
    params: &ModelParams,
) -> Result<SePath> {
    params.validate()?;
    check_finite_nonneg("beta", beta)?;
    check_finite_nonneg("lambda", lambda)?;
    if !(m0.is_finite() && m0.abs() <= 1.0) {
        return Err(Error::input(format!("m0 must lie in [-1, 1], got {m0}")));
    }
    if !(0.0..=1.0).contains(&q0) {
        return Err(Error::input(format!("q0 must lie in [0, 1], got {q0}")));
    }
    if steps == 0 {
        return Err(Error::input("state evolution needs at least one step"));
    }
    let rule = params.rule()?;
    let mut entries = Vec::with_capacity(steps + 1);
    entries.push(SeEntry { t: 0, m: m0, q: q0 });
    let (mut m, mut q) = (m0, q0);
    for t in 1..=steps {
        let (a, b) = (beta * q.sqrt(), beta * lambda * m);
        let [e1, e2] = rule.expect_many(|g| {
            let th = (a * g + b).tanh();
            [th, th * th]
        })?;
        m = e1;
        q = e2.clamp(0.0, 1.0);
        entries.push(SeEntry { t, m, q });
    }
    Ok(SePath { entries, variant: SeVariant::Mismatched })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `E tanh^{2k}(γ + g√γ)` against `E tanh^{2k−1}(γ + g√γ)`; the two agree for every `γ ≥ 0`.
pub fn check_tanh_identity(gamma: f64, k: u32, params: &ModelParams) -> Result<TanhIdentity> {
    params.validate()?;
    check_finite_nonneg("gamma", gamma)?;
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    let rule = params.rule()?;
    let sd = gamma.sqrt();
    let [lhs, rhs] = rule.expect_many(|g| {
        let t = (gamma + sd * g).tanh();
        let odd = t.powi(2 * k as i32 - 1);
        [odd * t, odd]
    })?;
    Ok(TanhIdentity { lhs, rhs, gap: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn zero_start_stays_at_zero() {
        let path = se_bayes(2.0, 0.0, 10, &p()).unwrap();
        assert!(path.entries.iter().all(|e| e.m == 0.0 && e.q == 0.0));
        let path = se_mismatched(0.8, 2.0, 0.0, 0.0, 10, &p()).unwrap();
        assert!(path.entries.iter().all(|e| e.m == 0.0 && e.q == 0.0));
    }

    #[test]
    fn time_index_is_contiguous() {
        let path = se_bayes(1.5, 0.01, 7, &p()).unwrap();
        assert_eq!(path.entries.len(), 8);
        for (i, e) in path.entries.iter().enumerate() {
            assert_eq!(e.t, i);
            assert!((-1.0..=1.0).contains(&e.m) && (0.0..=1.0).contains(&e.q));
        }
    }

    #[test]
    fn tanh_identity_trivial_at_zero() {
        let r = check_tanh_identity(0.0, 1, &p()).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn bad_inputs() {
        assert!(se_bayes(2.0, 1.5, 5, &p()).is_err());
        assert!(se_bayes(2.0, 0.1, 0, &p()).is_err());
        assert!(se_mismatched(0.5, 2.0, 1.5, 0.1, 5, &p()).is_err());
        assert!(check_tanh_identity(1.0, 0, &p()).is_err());
    }
}
