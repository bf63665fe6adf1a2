//! Deterministic scalar machinery.
//!
//! Everything here is a pure function of its arguments. Gaussian expectations
//! `E_{g∼N(0,1)}[·]` are evaluated with a fixed symmetric rule from
//! [`quadrature`]; the recursions built on top of it are the overlap constant
//! ([`overlap`]), the one-dimensional RGD update map and its fixed points
//! ([`fixed_point`]) and the Bayes / mismatched state evolutions
//! ([`state_evolution`]).

pub mod fixed_point;
pub mod overlap;
pub mod quadrature;
pub mod state_evolution;

pub use fixed_point::{
    collapsed_iteration, f_update, find_opt, FixedPoint, FixedPointReport, Regime,
};
pub use overlap::{at_condition, q_derivative, solve_q, AtStatus, OverlapSolution};
pub use quadrature::{gauss_expect, GaussRule};
pub use state_evolution::{
    check_tanh_identity, se_bayes, se_mismatched, SeEntry, SePath, SeVariant, TanhIdentity,
};

use crate::{Error, Result};

/// Damping used by the overlap iteration `q ← (1−d)q + d·F(q)`.
pub const DAMPING: f64 = 0.5;

/// Inverse temperature, SNR and the numerical settings shared by the scalar solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub lambda: f64,
    /// Number of quadrature nodes; odd so that 0 is a node.
    pub quad_nodes: usize,
    /// Convergence tolerance of the fixed-point iterations.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Grid size used by [`find_opt`] to bracket fixed points on `[0, 1]`.
    pub scan_points: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            beta: 0.0,
            lambda: 0.0,
            quad_nodes: quadrature::DEFAULT_NODES,
            fp_tol: 1e-12,
            fp_max_iter: 10_000,
            scan_points: 2001,
        }
    }
}

impl ModelParams {
    pub fn new(beta: f64, lambda: f64) -> Self {
        Self {
            beta,
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::input(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::input(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.quad_nodes < 21 || self.quad_nodes.is_multiple_of(2) {
            return Err(Error::input(format!(
                "quad_nodes must be odd and >= 21, got {}",
                self.quad_nodes
            )));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol.is_finite()) {
            return Err(Error::input(format!("fp_tol must be > 0, got {}", self.fp_tol)));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::input("fp_max_iter must be positive"));
        }
        if self.scan_points < 3 {
            return Err(Error::input("scan_points must be at least 3"));
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<GaussRule> {
        GaussRule::new(self.quad_nodes)
    }
}

pub(crate) fn check_finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be finite and >= 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_or_small_node_counts() {
        let mut p = ModelParams::new(0.5, 2.0);
        assert!(p.validate().is_ok());
        p.quad_nodes = 200;
        assert!(p.validate().is_err());
        p.quad_nodes = 19;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_negative_or_nan_parameters() {
        assert!(ModelParams::new(-0.1, 1.0).validate().is_err());
        assert!(ModelParams::new(0.1, f64::NAN).validate().is_err());
        assert!(ModelParams::new(f64::INFINITY, 1.0).validate().is_err());
    }
}
