//! Particle flow maps, restricted Lipschitz constants of their inverses, the
//! minimal-cost witness and the trapping diagnostics of cellular flows.

mod flow;
mod mincost;
mod stretch;
mod trapping;

pub use flow::{
    cell_centers, integrate_flow, integrate_flow_adaptive, lattice_points, occupancy_deviation,
    FlowMap,
};
pub use stretch::{
    grid_pairs, pair_stretches, restricted_lipschitz, restricted_lipschitz_curve, PairSample,
    StretchStatistics, CROSS_PAIRS,
};

pub use mincost::{
    mincost_experiment, reference_family, FamilyMember, MemberReport, MincostConfig, MincostReport,
    WitnessReport,
};
pub use trapping::{
    cellular_trapping, trapping_radius, universality_counterexample, CounterexampleReport,
    CounterexampleSample, TrappingReport, COUNTEREXAMPLE_CENTER, COUNTEREXAMPLE_RADIUS,
    TRAPPING_THRESHOLD,
};

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::blocks::BlockError;
use crate::diagnostics::DiagnosticsError;
use crate::domain::DomainError;
use crate::sobolev::SobolevError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagrangianError {
    #[error("a particle moved {displacement:.3e} in one step, more than the cell size {cell:.3e}")]
    CflViolation { displacement: f64, cell: f64 },
    #[error("{pairs} pairs cannot cover {particles} particles")]
    PairBudgetTooSmall { pairs: usize, particles: usize },
    #[error("exceptional measure must lie in (0,1), got {0}")]
    InvalidEta(f64),
    #[error("no stretch witness found: {0}")]
    WitnessNotFound(String),
    #[error("horizon {horizon} does not reach past t = {t}")]
    HorizonTooShort { t: f64, horizon: f64 },
    #[error("trapping radius {radius:.4} at t = {t} exceeds 1/100")]
    TrappingNotReached { t: f64, radius: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}
