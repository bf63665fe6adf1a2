//! The overlap constant `q_{β,h}` and the AT condition.
//!
//! `q` solves `q = E tanh²(β g √q + h)`; by convention `q = 0` at `h = 0`
//! whatever `β` is. `q1 = E tanh(β g √q + h)` is the predicted mean
//! magnetization of the SK model with uniform field `h`, and
//! `1 − β² E sech⁴(β g √q + h)` is the margin to the AT line.

use super::quadrature::GaussRule;
use super::{check_finite_nonneg, ModelParams, DAMPING};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapSolution {
    pub q: f64,
    pub q1: f64,
    /// `1 − β² E sech⁴(β g √q + h)`; positive above the AT line.
    pub at_margin: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtStatus {
    pub satisfied: bool,
    pub margin: f64,
}

#[inline]
fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `(E tanh, E tanh², E sech⁴)` of `β g √q + h`.
pub(crate) fn moments(rule: &GaussRule, beta: f64, q: f64, h: f64) -> Result<[f64; 3]> {
    let scale = beta * q.max(0.0).sqrt();
    rule.expect_many(|g| {
        let x = scale * g + h;
        let t = x.tanh();
        let s = sech(x);
        [t, t * t, s * s * s * s]
    })
}

/// Iterations of the damped map before switching to bisection.
const ITERATION_BUDGET: usize = 1000;

fn q_image(rule: &GaussRule, beta: f64, h: f64, q: f64) -> Result<f64> {
    let sq = beta * q.sqrt();
    rule.expect(|g| {
        let t = (sq * g + h).tanh();
        t * t
    })
}

/// Solves for `q` at fixed `(β, h)`, `h > 0`.
///
/// Runs the damped map until the step and the geometric-tail estimate of the
/// remaining error are both below `tol`. Near `β = 1` with small `h` the map
/// contracts too slowly, so after a fixed budget the unique root of
/// `E tanh²(β g √q + h) − q` is bracketed and bisected instead.
pub(crate) fn iterate_q(
    rule: &GaussRule,
    beta: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
    start: f64,
) -> Result<(f64, usize, bool)> {
    let mut q = start.clamp(0.0, 1.0);
    let mut prev_step = f64::NAN;
    let budget = max_iter.min(ITERATION_BUDGET);
    for it in 1..=budget {
        let image = q_image(rule, beta, h, q)?;
        let next = ((1.0 - DAMPING) * q + DAMPING * image).clamp(0.0, 1.0);
        let step = (next - q).abs();
        q = next;
        if step <= tol {
            let rate = step / prev_step;
            let tail_ok = rate < 1.0 && step * rate / (1.0 - rate) <= tol;
            if step == 0.0 || tail_ok || step <= 1e-3 * tol {
                return Ok((q, it, true));
            }
        }
        prev_step = step;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut used = budget;
    while used < max_iter {
        if hi - lo <= tol {
            return Ok((0.5 * (lo + hi), used, true));
        }
        let mid = 0.5 * (lo + hi);
        if q_image(rule, beta, h, mid)? > mid {
            lo = mid;
        } else {
            hi = mid;
        }
        used += 1;
    }
    Ok((q, max_iter, false))
}

pub(crate) fn solve_q_with(
    rule: &GaussRule,
    beta: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
    start: Option<f64>,
) -> Result<OverlapSolution> {
    check_finite_nonneg("beta", beta)?;
    if !h.is_finite() {
        return Err(Error::input(format!("field h must be finite, got {h}")));
    }
    if h < 0.0 {
        return Err(Error::input(format!(
            "field h must be non-negative (pass |h| and restore the sign of q1), got {h}"
        )));
    }
    if h == 0.0 {
        return Ok(OverlapSolution {
            q: 0.0,
            q1: 0.0,
            at_margin: 1.0 - beta * beta,
            iterations: 0,
            converged: true,
        });
    }
    let start = start.unwrap_or_else(|| h.tanh().powi(2));
    let (q, iterations, converged) = iterate_q(rule, beta, h, tol, max_iter, start)?;
    let [q1, _, sech4] = moments(rule, beta, q, h)?;
    Ok(OverlapSolution {
        q,
        q1,
        at_margin: 1.0 - beta * beta * sech4,
        iterations,
        converged,
    })
}

/// Overlap constant `q_{β,h}` together with `q1` and the AT margin.
///
/// Non-convergence is reported through `converged = false` with the last
/// iterate; a negative `h` is an input error.
pub fn solve_q(beta: f64, h: f64, params: &ModelParams) -> Result<OverlapSolution> {
    params.validate()?;
    solve_q_with(&params.rule()?, beta, h, params.fp_tol, params.fp_max_iter, None)
}

pub(crate) fn converged_q(
    rule: &GaussRule,
    beta: f64,
    h: f64,
    params: &ModelParams,
    start: Option<f64>,
) -> Result<OverlapSolution> {
    let sol = solve_q_with(rule, beta, h, params.fp_tol, params.fp_max_iter, start)?;
    if !sol.converged {
        return Err(Error::NoConvergence {
            what: "overlap iteration",
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

/// `q'(h) = 2 E[T S²] / (1 − β² E[S⁴ − 2 S² T²])` with `T = tanh X`,
/// `S = sech X`, `X = β g √q + h`. Only defined above the AT line.
pub fn q_derivative(beta: f64, h: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !(h > 0.0) {
        return Err(Error::input(format!("q_derivative needs h > 0, got {h}")));
    }
    let rule = params.rule()?;
    let sol = converged_q(&rule, beta, h, params, None)?;
    if sol.at_margin <= 0.0 {
        return Err(Error::domain(format!(
            "(beta={beta}, h={h}) violates the AT condition (margin {})",
            sol.at_margin
        )));
    }
    let scale = beta * sol.q.sqrt();
    let [num, den] = rule.expect_many(|g| {
        let x = scale * g + h;
        let t = x.tanh();
        let s2 = sech(x).powi(2);
        [t * s2, s2 * s2 - 2.0 * s2 * t * t]
    })?;
    Ok(2.0 * num / (1.0 - beta * beta * den))
}

/// `(β, h)` lies above the AT line iff `β² E sech⁴(β g √q + h) < 1`.
pub fn at_condition(beta: f64, h: f64, params: &ModelParams) -> Result<AtStatus> {
    params.validate()?;
    let rule = params.rule()?;
    let sol = converged_q(&rule, beta, h, params, None)?;
    Ok(AtStatus {
        satisfied: sol.at_margin > 0.0,
        margin: sol.at_margin,
    })
}
