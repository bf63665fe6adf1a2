//! Numerical laboratory for the spiked Wigner model with a Boolean spike.
//!
//! The crate is split by concern:
//!
//! * [`scalar`]: deterministic scalar machinery. Gaussian expectations, the
//!   overlap constant `q_{β,h}`, the AT condition, the RGD update map
//!   `f_{β,λ}`, fixed-point location and the two state-evolution recursions.
//! * [`instances`]: planted instances `M = W + (λ/N) x xᵀ`, posterior energies
//!   and correlations.
//! * [`dynamics`]: Markov chains (Glauber, restricted Gaussian dynamics and its
//!   one-dimensional projection, Curie–Weiss RGD), exact enumeration oracles
//!   and small-N diagnostics.
//! * [`amp`]: approximate message passing with Onsager correction and the
//!   one-step comparator used against RGD.
//!
//! Every random quantity is driven by an explicit 64-bit seed; see [`rng`].

pub mod amp;
pub mod dynamics;
mod error;
pub mod instances;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use instances::{SpikedInstance, SpinConfiguration};
pub use scalar::ModelParams;
