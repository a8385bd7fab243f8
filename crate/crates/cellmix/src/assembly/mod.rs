//! Patching rescaled building blocks into cellular evolutions: per-stage
//! tracer states at the stage times, stage budgets of the assembled field,
//! and the fine-tiling rescaling.

mod evolution;
mod rescale;
mod stage;

pub use evolution::{
    evolve, interior_unmixedness_probe, CellularEvolution, CellularField, InteriorReport,
    StageRecord,
};
pub use rescale::{fine_tiling_rescale, RescaleReport};
pub use stage::{patch_stage, stage_budget, stage_permutation, StageEvolution};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{Block, BlockError};
use crate::diagnostics::DiagnosticsError;
use crate::domain::DomainError;
use crate::sobolev::SobolevError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("blocks do not align with the stage-{stage} tiles: {reason}")]
    MisalignedBlocks { stage: u32, reason: String },
    #[error("time dilation 1 has no rescaling constant")]
    TauEqualsOne,
    #[error("invalid block plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Which block runs in which tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockPlan {
    /// The same block in every tile of every stage.
    Uniform(Block),
    /// `stages[n][k]` indexes `blocks` for tile `k` (row-major) of stage `n`.
    PerTile {
        blocks: Vec<Block>,
        stages: Vec<Vec<usize>>,
    },
}

impl BlockPlan {
    pub fn block(&self, stage: u32, tile: usize) -> Result<&Block, AssemblyError> {
        match self {
            BlockPlan::Uniform(b) => Ok(b),
            BlockPlan::PerTile { blocks, stages } => {
                let k = stages
                    .get(stage as usize)
                    .and_then(|s| s.get(tile))
                    .ok_or_else(|| {
                        AssemblyError::InvalidPlan(format!(
                            "no block for stage {stage}, tile {tile}"
                        ))
                    })?;
                blocks.get(*k).ok_or_else(|| {
                    AssemblyError::InvalidPlan(format!("block index {k} out of range"))
                })
            }
        }
    }

    /// Distinct blocks of a stage with `tiles` tiles: `(block, count, first tile)`.
    pub fn distinct(
        &self,
        stage: u32,
        tiles: usize,
    ) -> Result<Vec<(&Block, usize, usize)>, AssemblyError> {
        match self {
            BlockPlan::Uniform(b) => Ok(vec![(b, tiles, 0)]),
            BlockPlan::PerTile { blocks, stages } => {
                let assign = stages.get(stage as usize).ok_or_else(|| {
                    AssemblyError::InvalidPlan(format!("no assignment for stage {stage}"))
                })?;
                if assign.len() != tiles {
                    return Err(AssemblyError::InvalidPlan(format!(
                        "stage {stage} assigns {} tiles, the tiling has {tiles}",
                        assign.len()
                    )));
                }
                let mut out: Vec<(&Block, usize, usize)> = Vec::new();
                for (tile, &k) in assign.iter().enumerate() {
                    let b = blocks.get(k).ok_or_else(|| {
                        AssemblyError::InvalidPlan(format!("block index {k} out of range"))
                    })?;
                    match out.iter_mut().find(|e| std::ptr::eq(e.0, b)) {
                        Some(e) => e.1 += 1,
                        None => out.push((b, 1, tile)),
                    }
                }
                Ok(out)
            }
        }
    }

    /// Whether every block of the plan has a field realization.
    pub fn has_fields(&self) -> bool {
        match self {
            BlockPlan::Uniform(b) => b.field.is_some(),
            BlockPlan::PerTile { blocks, .. } => blocks.iter().all(|b| b.field.is_some()),
        }
    }
}

/// How stage budgets are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub s: f64,
    pub p: f64,
    /// Cells per tile side of each snapshot.
    pub cells: usize,
    /// Midpoint times per stage.
    pub samples: usize,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec {
            s: 2.0,
            p: 2.0,
            cells: 128,
            samples: 4,
        }
    }
}
