//! The RGD update map `f_{β,λ}(z) = E tanh(β g √q + βλz)`, `q = q_{β,βλ|z|}`,
//! and the classification of its fixed points on `[0, 1]`.

use super::overlap::{converged_q, OverlapSolution};
use super::quadrature::GaussRule;
use super::ModelParams;
use crate::{Error, Result};

/// Step of the central difference used for stability classification.
pub const DERIVATIVE_STEP: f64 = 1e-5;

/// Qualitative shape of `f_{β,λ}` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `βλ < 1`: zero is the only fixed point and it is stable.
    SubCritical,
    /// `βλ > 1`, `β ≤ 1`: zero is unstable and a stable positive fixed point exists.
    SuperCriticalHighTemp,
    /// `β > 1` with an AT-satisfying positive fixed point.
    LowTempWithFP,
    /// `β > 1` and every positive fixed point lies below the AT line.
    LowTempNoFP,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SubCritical => "SubCritical",
            Regime::SuperCriticalHighTemp => "SuperCriticalHighTemp",
            Regime::LowTempWithFP => "LowTempWithFP",
            Regime::LowTempNoFP => "LowTempNoFP",
        }
    }

    pub fn classify(beta: f64, lambda: f64, has_at_positive_fp: bool) -> Self {
        if beta * lambda < 1.0 {
            Regime::SubCritical
        } else if beta <= 1.0 {
            Regime::SuperCriticalHighTemp
        } else if has_at_positive_fp {
            Regime::LowTempWithFP
        } else {
            Regime::LowTempNoFP
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub z: f64,
    /// Central-difference `f'(z)`.
    pub derivative: f64,
    pub stable: bool,
    pub at_satisfied: bool,
    pub at_margin: f64,
    /// `f(z) − z` at the reported point.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub beta: f64,
    pub lambda: f64,
    /// Sorted ascending by `z`; always starts with the trivial fixed point 0.
    pub fixed_points: Vec<FixedPoint>,
    /// Largest AT-satisfying fixed point, 0 if none is positive.
    pub opt: f64,
    pub regime: Regime,
    /// Set when the scan grid may have merged neighbouring fixed points.
    pub unresolved: bool,
}

impl FixedPointReport {
    pub fn positive(&self) -> impl Iterator<Item = &FixedPoint> {
        self.fixed_points.iter().filter(|fp| fp.z > 0.0)
    }

    pub fn opt_point(&self) -> Option<&FixedPoint> {
        self.positive().filter(|fp| fp.at_satisfied).last()
    }
}

/// Evaluator for `f_{β,λ}` with a shared rule.
pub(crate) struct UpdateMap<'a> {
    pub rule: &'a GaussRule,
    pub params: &'a ModelParams,
    pub beta: f64,
    pub lambda: f64,
}

impl UpdateMap<'_> {
    /// `(f(z), overlap solution at h = βλ|z|)`; no range check on `z`.
    pub fn eval_with(&self, z: f64, q_start: Option<f64>) -> Result<(f64, OverlapSolution)> {
        let h = self.beta * self.lambda * z;
        let sol = converged_q(self.rule, self.beta, h.abs(), self.params, q_start)?;
        Ok((if z < 0.0 { -sol.q1 } else { sol.q1 }, sol))
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        Ok(self.eval_with(z, None)?.0)
    }

    pub fn derivative(&self, z: f64) -> Result<f64> {
        let up = self.eval(z + DERIVATIVE_STEP)?;
        let down = self.eval(z - DERIVATIVE_STEP)?;
        Ok((up - down) / (2.0 * DERIVATIVE_STEP))
    }
}

fn check_z(z: f64) -> Result<()> {
    if z.is_finite() && z.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("correlation z must lie in [-1, 1], got {z}")))
    }
}

/// `f_{β,λ}(z)`; odd in `z`, values in `(−1, 1)`.
pub fn f_update(z: f64, beta: f64, lambda: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    check_z(z)?;
    super::check_finite_nonneg("beta", beta)?;
    super::check_finite_nonneg("lambda", lambda)?;
    let rule = params.rule()?;
    UpdateMap { rule: &rule, params, beta, lambda }.eval(z)
}

/// Iterates `z ← f_{β,λ}(z)` from `z0` for `steps` steps, returning all iterates.
pub fn collapsed_iteration(
    z0: f64,
    beta: f64,
    lambda: f64,
    steps: usize,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    check_z(z0)?;
    let rule = params.rule()?;
    let map = UpdateMap { rule: &rule, params, beta, lambda };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z0);
    let mut z = z0;
    let mut q_prev = None;
    for _ in 0..steps {
        let (next, sol) = map.eval_with(z, q_prev)?;
        q_prev = Some(sol.q);
        z = next;
        out.push(z);
    }
    Ok(out)
}

/// Bisection on `f(z) − z` over `[lo, hi]` with `d(lo) = d_lo` of opposite
/// sign to `d(hi)`. Returns the bracket end with the smaller residual.
fn bisect(map: &UpdateMap<'_>, mut lo: f64, mut hi: f64, mut d_lo: f64) -> Result<(f64, f64)> {
    let mut d_hi = map.eval(hi)? - hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d_mid = map.eval(mid)? - mid;
        if d_mid == 0.0 {
            return Ok((mid, 0.0));
        }
        if (d_mid > 0.0) == (d_lo > 0.0) {
            lo = mid;
            d_lo = d_mid;
        } else {
            hi = mid;
            d_hi = d_mid;
        }
    }
    Ok(if d_lo.abs() <= d_hi.abs() { (lo, d_lo) } else { (hi, d_hi) })
}

fn classify_point(map: &UpdateMap<'_>, z: f64, residual: f64) -> Result<FixedPoint> {
    let derivative = map.derivative(z)?;
    let h = map.beta * map.lambda * z;
    let sol = converged_q(map.rule, map.beta, h, map.params, None)?;
    Ok(FixedPoint {
        z,
        derivative,
        stable: derivative.abs() < 1.0,
        at_satisfied: sol.at_margin > 0.0,
        at_margin: sol.at_margin,
        residual,
    })
}

/// Locates and classifies the fixed points of `f_{β,λ}` on `[0, 1]`.
///
/// Sign changes of `f(z) − z` on a uniform grid of `params.scan_points`
/// points are refined by bisection; each fixed point gets a central-difference
/// derivative and its AT status at `h = βλz`.
pub fn find_opt(beta: f64, lambda: f64, params: &ModelParams) -> Result<FixedPointReport> {
    params.validate()?;
    super::check_finite_nonneg("beta", beta)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!("find_opt needs lambda > 0, got {lambda}")));
    }
    let rule = params.rule()?;
    let map = UpdateMap { rule: &rule, params, beta, lambda };

    let m = params.scan_points;
    let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let mut diff = Vec::with_capacity(m);
    diff.push(0.0);
    let mut q_prev = None;
    for &z in &grid[1..] {
        let (fz, sol) = map.eval_with(z, q_prev)?;
        q_prev = Some(sol.q);
        diff.push(fz - z);
    }

    let mut fixed_points = vec![classify_point(&map, 0.0, 0.0)?];
    let mut brackets = Vec::new();
    for i in 1..m - 1 {
        let (a, b) = (diff[i], diff[i + 1]);
        if a == 0.0 {
            brackets.push((i, grid[i], grid[i], a));
        } else if b != 0.0 && (a > 0.0) != (b > 0.0) {
            brackets.push((i, grid[i], grid[i + 1], a));
        }
    }
    // the first cell [0, Δ] is bracketed against its right end only
    if diff[1] == 0.0 {
        brackets.insert(0, (1, grid[1], grid[1], 0.0));
    }

    let mut unresolved = brackets.windows(2).any(|w| w[1].0 <= w[0].0 + 1);
    for i in 1..m - 1 {
        let (a, b, c) = (diff[i - 1], diff[i], diff[i + 1]);
        let same_sign = (a > 0.0) == (b > 0.0) && (b > 0.0) == (c > 0.0);
        if i > 1 && same_sign && b.abs() < a.abs() && b.abs() < c.abs() && b.abs() < 1e-6 {
            unresolved = true;
        }
    }

    for &(_, lo, hi, d_lo) in &brackets {
        let (z, residual) = if lo == hi { (lo, 0.0) } else { bisect(&map, lo, hi, d_lo)? };
        fixed_points.push(classify_point(&map, z, residual)?);
    }
    fixed_points.sort_by(|a, b| a.z.total_cmp(&b.z));

    let opt = fixed_points
        .iter()
        .filter(|fp| fp.z > 0.0 && fp.at_satisfied)
        .map(|fp| fp.z)
        .fold(0.0, f64::max);
    let has_at_positive = fixed_points.iter().any(|fp| fp.z > 0.0 && fp.at_satisfied);
    Ok(FixedPointReport {
        beta,
        lambda,
        fixed_points,
        opt,
        regime: Regime::classify(beta, lambda, has_at_positive),
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn map_vanishes_at_zero_and_is_odd() {
        assert_eq!(f_update(0.0, 0.8, 2.0, &p()).unwrap(), 0.0);
        for z in [0.1, 0.37, 0.9] {
            let a = f_update(z, 1.3, 2.0, &p()).unwrap();
            let b = f_update(-z, 1.3, 2.0, &p()).unwrap();
            assert_eq!(a, -b);
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn out_of_range_correlation_is_rejected() {
        assert!(f_update(1.2, 0.8, 2.0, &p()).is_err());
        assert!(f_update(f64::NAN, 0.8, 2.0, &p()).is_err());
    }

    #[test]
    fn slope_at_zero_is_beta_lambda_for_high_temperature() {
        for (beta, lambda) in [(0.8, 2.0), (0.3, 1.5), (0.95, 4.0)] {
            let h = 1e-4;
            let slope = (f_update(h, beta, lambda, &p()).unwrap()
                - f_update(-h, beta, lambda, &p()).unwrap())
                / (2.0 * h);
            assert_abs_diff_eq!(slope, beta * lambda, epsilon = 1e-4);
        }
    }

    #[test]
    fn subcritical_report() {
        let r = find_opt(0.4, 2.0, &p()).unwrap();
        assert_eq!(r.opt, 0.0);
        assert_eq!(r.regime, Regime::SubCritical);
        assert_eq!(r.fixed_points.len(), 1);
        assert!(r.fixed_points[0].stable);
        assert!(r.fixed_points[0].at_satisfied);
    }

    #[test]
    fn supercritical_report() {
        let r = find_opt(0.8, 2.0, &p()).unwrap();
        assert_eq!(r.regime, Regime::SuperCriticalHighTemp);
        assert!(r.opt > 0.0);
        assert!(!r.fixed_points[0].stable);
        let opt = r.opt_point().unwrap();
        assert!(opt.stable);
        assert!(!r.unresolved);
    }

    #[test]
    fn lambda_must_be_positive() {
        assert!(find_opt(0.5, 0.0, &p()).is_err());
    }

    #[test]
    fn regime_thresholds() {
        assert_eq!(Regime::classify(0.4, 2.0, false), Regime::SubCritical);
        assert_eq!(Regime::classify(0.6, 2.0, true), Regime::SuperCriticalHighTemp);
        assert_eq!(Regime::classify(1.5, 2.0, true), Regime::LowTempWithFP);
        assert_eq!(Regime::classify(1.5, 2.0, false), Regime::LowTempNoFP);
    }
}
