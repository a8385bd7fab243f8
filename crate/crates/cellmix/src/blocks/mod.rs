//! Building blocks at two layers: exact cell rearrangements made of rigid
//! square rotations, and smooth swirl fields approximating them.

mod field;
mod map;
mod validate;

pub use field::{
    block_cost, block_cost_extrapolated, realize_block, FieldBlock, Realization, SmoothedRotation,
    CORE_FRACTION,
};
pub use map::{self_similar_map_block, MapBlock, Move, MoveKind};
pub use validate::{
    validate_block, BlockReport, Clause, Layer, DIVERGENCE_TOLERANCE, REGULARITY_CELLS,
    TILE_MEAN_TOLERANCE,
};

use thiserror::Error;

use crate::diagnostics::DiagnosticsError;
use crate::domain::DomainError;
use crate::sobolev::SobolevError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockError {
    #[error("the reference family is defined for lambda = 1/2 only, got {0}")]
    UnsupportedLambda(f64),
    #[error("move cannot be realized by a swirl: {0}")]
    RealizationInfeasible(String),
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("a grid of {n} cells per side does not resolve a block with base {base}")]
    ResolutionMismatch { n: usize, base: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("flow integration: {0}")]
    Flow(String),
}

/// A map block together with its smooth realization, if any.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Block {
    pub id: String,
    pub map: MapBlock,
    pub field: Option<FieldBlock>,
}

impl Block {
    /// The `lambda = 1/2` self-similar block with its swirl realization.
    pub fn reference() -> Self {
        let map = self_similar_map_block(0.5).expect("reference lambda is supported");
        let field = FieldBlock::from_map(&map).expect("reference moves fit inside Q");
        Block {
            id: "reference".into(),
            map,
            field: Some(field),
        }
    }

    /// The block that leaves every cell in place.
    pub fn identity() -> Self {
        Block {
            id: "identity".into(),
            map: MapBlock::identity(),
            field: Some(FieldBlock::default()),
        }
    }
}
