//! Global supersonic potential flow in a divergent conical nozzle with vacuum at infinity.
//!
//! The crate computes the radial background flow, marches axisymmetric
//! perturbations outward in `r` (the supersonic, time-like direction) and
//! evaluates the conserved quantities, decay rates and weighted energy
//! functionals that characterize global stability of the flow.

pub mod background;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod march;
pub mod profile;
pub mod quadrature;

pub use error::{Error, Result};
