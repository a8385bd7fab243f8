//! Grids, tilings, time schedules and binary tracer fields on `Q`.

mod grid;
pub mod io;
pub mod patterns;
mod schedule;
mod tiling;
mod tracer;

pub use grid::Grid;
pub use schedule::{rescale_identity_exact, rescale_schedule, time_steps, Schedule};
pub use tiling::{lambda_reciprocal, make_tiling, Region, Tile, Tiling};
pub use tracer::{
    make_binary_tracer, tile_average, tile_is_mean_free, BinaryLevels, CellMask, TracerField,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("1/lambda must be an integer >= 2, got lambda = {0}")]
    NonIntegerReciprocal(f64),
    #[error("tiles of side {side} do not align with a grid of {n} cells per side")]
    ResolutionTooCoarse { side: f64, n: usize },
    #[error("mask is empty")]
    EmptyMask,
    #[error("mask covers {count} of {total} cells, more than half")]
    MaskTooLarge { count: usize, total: usize },
    #[error("region is not aligned with the grid cells")]
    MisalignedTile,
    #[error("time dilation must be positive, got {0}")]
    InvalidTau(f64),
    #[error("time dilation 1 has no rescaling constant")]
    TauEqualsOne,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for DomainError {
    fn from(e: std::io::Error) -> Self {
        DomainError::Io(e.to_string())
    }
}

/// Accuracy parameter used when none is configured.
pub const DEFAULT_KAPPA: f64 = 1.0 / 3.0;
/// Length-scale parameter used when none is configured.
pub const DEFAULT_S_BAR: f64 = 0.5;

/// Parameters of a building block family.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlockParams {
    pub lambda: f64,
    /// Floor on the characteristic length scale of the initial set.
    pub a: f64,
    pub p: f64,
    pub theta: f64,
    pub s: f64,
    pub kappa: f64,
    pub s_bar: f64,
}

impl Default for BlockParams {
    fn default() -> Self {
        BlockParams {
            lambda: 0.5,
            a: 0.25,
            p: 2.0,
            theta: 0.5,
            s: 2.0,
            kappa: DEFAULT_KAPPA,
            s_bar: DEFAULT_S_BAR,
        }
    }
}

impl BlockParams {
    pub fn validate(&self) -> Result<(), String> {
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        if !open01(self.lambda) {
            return Err(format!("lambda must lie in (0,1), got {}", self.lambda));
        }
        if !(self.a > 0.0) {
            return Err(format!("a must be positive, got {}", self.a));
        }
        if !(self.p > 1.0) {
            return Err(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.theta > 0.0 && self.theta <= 0.5) {
            return Err(format!("theta must lie in (0,1/2], got {}", self.theta));
        }
        if !(self.s > 1.0) {
            return Err(format!("s must exceed 1, got {}", self.s));
        }
        if !open01(self.kappa) {
            return Err(format!("kappa must lie in (0,1), got {}", self.kappa));
        }
        if !open01(self.s_bar) {
            return Err(format!("s_bar must lie in (0,1), got {}", self.s_bar));
        }
        Ok(())
    }

    /// Fill fraction a ball must exceed to witness the length scale.
    pub fn fill_threshold(&self) -> f64 {
        fill_threshold(self.kappa, self.s_bar)
    }
}

/// `1 - (1 - kappa) / 2 * s_bar`.
pub fn fill_threshold(kappa: f64, s_bar: f64) -> f64 {
    1.0 - 0.5 * (1.0 - kappa) * s_bar
}
