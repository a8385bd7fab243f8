use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::BlockError;
use crate::domain::{Grid, Region, TracerField};
use crate::Vec2;

/// Largest grid searched when aligning moves.
const MAX_BASE: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Rotation,
}

/// Rigid counterclockwise rotation of an aligned square by a multiple of a
/// quarter turn, carried out during `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub center: Vec2,
    /// Side of the square.
    pub size: f64,
    /// Radians.
    pub angle: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Move {
    pub fn rotation(center: Vec2, size: f64, angle: f64, t_start: f64, t_end: f64) -> Self {
        Move {
            kind: MoveKind::Rotation,
            center,
            size,
            angle,
            t_start,
            t_end,
        }
    }

    pub fn square(&self) -> Region {
        Region {
            x0: self.center[0] - 0.5 * self.size,
            y0: self.center[1] - 0.5 * self.size,
            side: self.size,
        }
    }

    /// Angle in quarter turns, reduced mod 4.
    pub fn quarter_turns(&self) -> Result<u32, BlockError> {
        let q = self.angle / FRAC_PI_2;
        let r = q.round();
        if (q - r).abs() > 1e-9 {
            return Err(BlockError::InvalidMove(format!(
                "angle {} is not a multiple of a quarter turn",
                self.angle
            )));
        }
        Ok((r as i64).rem_euclid(4) as u32)
    }

    /// The move carried into a square of side `scale` centered at `center`
    /// and onto the time window `[t0, t0 + dilation]`.
    pub fn placed(&self, center: Vec2, scale: f64, t0: f64, dilation: f64) -> Move {
        Move {
            kind: self.kind,
            center: [
                center[0] + scale * self.center[0],
                center[1] + scale * self.center[1],
            ],
            size: scale * self.size,
            angle: self.angle,
            t_start: t0 + dilation * self.t_start,
            t_end: t0 + dilation * self.t_end,
        }
    }

    fn overlaps(&self, other: &Move) -> bool {
        let a = self.square();
        let b = other.square();
        let eps = 1e-12;
        a.x0 + a.side > b.x0 + eps
            && b.x0 + b.side > a.x0 + eps
            && a.y0 + a.side > b.y0 + eps
            && b.y0 + b.side > a.y0 + eps
    }

    fn concurrent(&self, other: &Move) -> bool {
        self.t_start < other.t_end && other.t_start < self.t_end
    }
}

/// Measure-preserving rearrangement of the cells of `Q`, described by a
/// time-ordered list of square rotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapBlock {
    base: usize,
    moves: Vec<Move>,
}

impl MapBlock {
    pub fn identity() -> Self {
        MapBlock {
            base: 1,
            moves: Vec::new(),
        }
    }

    /// Validates the moves and sorts them by start time.
    ///
    /// Moves must lie in `Q` on a common aligned grid, carry
    /// quarter-turn angles, and moves overlapping in time must be disjoint.
    pub fn new(mut moves: Vec<Move>) -> Result<Self, BlockError> {
        for m in &moves {
            m.quarter_turns()?;
            if !(m.size > 0.0)
                || !(m.t_start >= 0.0 && m.t_end <= 1.0 + 1e-12 && m.t_start < m.t_end)
            {
                return Err(BlockError::InvalidMove(format!("{m:?}")));
            }
            let sq = m.square();
            if sq.x0 < -0.5 - 1e-12
                || sq.y0 < -0.5 - 1e-12
                || sq.x0 + sq.side > 0.5 + 1e-12
                || sq.y0 + sq.side > 0.5 + 1e-12
            {
                return Err(BlockError::InvalidMove(format!("square {sq:?} leaves Q")));
            }
        }
        moves.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for (i, a) in moves.iter().enumerate() {
            for b in &moves[i + 1..] {
                if b.t_start >= a.t_end {
                    break;
                }
                if a.concurrent(b) && a.overlaps(b) {
                    return Err(BlockError::InvalidMove(format!(
                        "{a:?} and {b:?} overlap in space and time"
                    )));
                }
            }
        }
        let base = (1..=MAX_BASE)
            .find(|&n| {
                let grid = Grid::new(n).expect("positive size");
                moves.iter().all(|m| m.square().cell_range(&grid).is_ok())
            })
            .ok_or_else(|| BlockError::InvalidMove("moves do not align with any grid".into()))?;
        Ok(MapBlock { base, moves })
    }

    /// Cells per side of the coarsest grid all moves align with.
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn is_identity(&self) -> bool {
        self.moves.is_empty()
    }

    fn check_resolution(&self, n: usize) -> Result<(), BlockError> {
        if n == 0 || n % self.base != 0 {
            return Err(BlockError::ResolutionMismatch { n, base: self.base });
        }
        Ok(())
    }

    /// Destination of each cell on an `n`-cell grid after the moves finished by
    /// time `t`: the content of cell `k` ends in cell `perm[k]`.
    pub fn permutation_until(&self, n: usize, t: f64) -> Result<Vec<u32>, BlockError> {
        self.check_resolution(n)?;
        let grid = Grid::new(n)?;
        // occupant[c] = original cell now sitting in c
        let mut occupant: Vec<u32> = (0..(n * n) as u32).collect();
        let mut scratch = Vec::new();
        for m in self.moves.iter().filter(|m| m.t_end <= t + 1e-12) {
            let (i0, j0, c) = m.square().cell_range(&grid)?;
            let q = m.quarter_turns()?;
            if q == 0 {
                continue;
            }
            scratch.clear();
            for b in 0..c {
                scratch.extend_from_slice(&occupant[(j0 + b) * n + i0..(j0 + b) * n + i0 + c]);
            }
            for b in 0..c {
                for a in 0..c {
                    let (a2, b2) = rotate_cell(a, b, c, q);
                    occupant[(j0 + b2) * n + i0 + a2] = scratch[b * c + a];
                }
            }
        }
        let mut perm = vec![0u32; n * n];
        for (cell, &orig) in occupant.iter().enumerate() {
            perm[orig as usize] = cell as u32;
        }
        Ok(perm)
    }

    /// Destination of each cell once every move has run.
    pub fn permutation(&self, n: usize) -> Result<Vec<u32>, BlockError> {
        self.permutation_until(n, f64::INFINITY)
    }

    /// Pushes `rho` forward through the block.
    pub fn apply(&self, rho: &TracerField) -> Result<TracerField, BlockError> {
        Ok(rho.pushed_forward(&self.permutation(rho.n())?))
    }

    /// The block obtained by running `levels` stages of the self-similar
    /// construction with this block: stage `m` applies a copy scaled by
    /// `lambda^m` in each of the `inv_lambda^{2m}` tiles, during
    /// `[T_m, T_{m+1}] / T_levels` with `T_m = sum_{j<m} tau^j`.
    pub fn nested(&self, levels: u32, inv_lambda: usize, tau: f64) -> Result<MapBlock, BlockError> {
        if levels == 0 || inv_lambda < 2 || !(tau > 0.0) {
            return Err(BlockError::InvalidMove(format!(
                "nested block needs levels >= 1, 1/lambda >= 2, tau > 0 (got {levels}, {inv_lambda}, {tau})"
            )));
        }
        let total: f64 = (0..levels).map(|m| tau.powi(m as i32)).sum();
        let mut moves = Vec::new();
        let mut t0 = 0.0;
        for m in 0..levels {
            let per_side = inv_lambda.pow(m);
            let scale = 1.0 / per_side as f64;
            let dilation = tau.powi(m as i32) / total;
            for ty in 0..per_side {
                for tx in 0..per_side {
                    let center = [
                        -0.5 + (tx as f64 + 0.5) * scale,
                        -0.5 + (ty as f64 + 0.5) * scale,
                    ];
                    moves.extend(
                        self.moves
                            .iter()
                            .map(|mv| mv.placed(center, scale, t0, dilation)),
                    );
                }
            }
            t0 += dilation;
        }
        MapBlock::new(moves)
    }

    /// Times at which some move starts or ends.
    pub fn event_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .moves
            .iter()
            .flat_map(|m| [m.t_start, m.t_end])
            .collect();
        t.push(0.0);
        t.push(1.0);
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        t
    }
}

/// Position of local cell `(a, b)` of a `c`-cell square after `q` counterclockwise quarter turns.
fn rotate_cell(a: usize, b: usize, c: usize, q: u32) -> (usize, usize) {
    match q {
        1 => (c - 1 - b, a),
        2 => (c - 1 - a, c - 1 - b),
        3 => (b, c - 1 - a),
        _ => (a, b),
    }
}

/// The reference block for `lambda = 1/2`: the middle vertical strip
/// `[-1/4, 1/4] x [-1/2, 1/2]` is turned by a half turn, lower square first,
/// then upper square. A vertical half split becomes four half-scale copies of itself.
pub fn self_similar_map_block(lambda: f64) -> Result<MapBlock, BlockError> {
    if (lambda - 0.5).abs() > 1e-12 {
        return Err(BlockError::UnsupportedLambda(lambda));
    }
    MapBlock::new(vec![
        Move::rotation([0.0, -0.25], 0.5, PI, 0.0, 0.5),
        Move::rotation([0.0, 0.25], 0.5, PI, 0.5, 1.0),
    ])
}
