//! Cellular mixing flows on the unit square `Q = (-1/2, 1/2)^2`.
//!
//! The crate builds self-similar stirring protocols out of rescaled building
//! blocks, advects binary mean-free tracers with them and measures how fast
//! they mix: geometric and functional mixing scales, characteristic length
//! scales, Sobolev budgets of the stirring field, Lagrangian stretching and
//! the trapping of particles inside shrinking tiles.
//!
//! Grids are cell-centered, row-major (`index = j * n + i`, `i` along `x`).

pub mod assembly;
pub mod blocks;
pub mod diagnostics;
pub mod domain;
pub mod harness;
pub mod lagrangian;
pub mod par;
pub mod sobolev;

/// A point or vector in the plane.
pub type Vec2 = [f64; 2];
