//! Cone geometry: discretization grids, rotation fields, the extension across
//! `r = T` and weighted interpolation inequalities.

pub mod autodiff;
pub mod extension;
pub mod grid;
pub mod inequality;
pub mod zfields;

pub use grid::{AngularGrid, RadialGrid};
