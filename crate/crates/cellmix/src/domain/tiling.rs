use super::{DomainError, Grid};

/// Returns `1/lambda` when it is an integer of at least 2.
pub fn lambda_reciprocal(lambda: f64) -> Result<usize, DomainError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(DomainError::NonIntegerReciprocal(lambda));
    }
    let inv = 1.0 / lambda;
    let r = inv.round();
    if (inv - r).abs() > 1e-9 * inv || r < 2.0 {
        return Err(DomainError::NonIntegerReciprocal(lambda));
    }
    Ok(r as usize)
}

/// Partition of `Q` into `lambda^{-2 level}` aligned squares of side `lambda^level`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tiling {
    lambda: f64,
    inv_lambda: usize,
    level: u32,
    per_side: usize,
    tile_cells: usize,
    grid: Grid,
}

/// One square of a tiling, in cell units and in coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub tx: usize,
    pub ty: usize,
    /// First cell column and row.
    pub i0: usize,
    pub j0: usize,
    /// Cells per side.
    pub cells: usize,
    pub center: [f64; 2],
    pub side: f64,
}

impl Tile {
    pub fn region(&self) -> Region {
        Region {
            x0: self.center[0] - 0.5 * self.side,
            y0: self.center[1] - 0.5 * self.side,
            side: self.side,
        }
    }

    pub fn contains_cell(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i0 + self.cells && j >= self.j0 && j < self.j0 + self.cells
    }

    /// Maps a point of the tile to the unit square `Q`.
    pub fn to_unit(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (x[0] - self.center[0]) / self.side,
            (x[1] - self.center[1]) / self.side,
        ]
    }
}

/// Axis-aligned square given by its lower-left corner and side, in `Q` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl Region {
    pub fn unit() -> Self {
        Region {
            x0: -0.5,
            y0: -0.5,
            side: 1.0,
        }
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x0 + 0.5 * self.side, self.y0 + 0.5 * self.side]
    }

    /// Cell range `(i0, j0, cells)` if the square is aligned with `grid`.
    pub fn cell_range(&self, grid: &Grid) -> Result<(usize, usize, usize), super::DomainError> {
        let n = grid.n() as f64;
        let conv = |v: f64| -> Result<usize, super::DomainError> {
            let s = v * n;
            let r = s.round();
            if (s - r).abs() > 1e-7 || r < 0.0 {
                return Err(super::DomainError::MisalignedTile);
            }
            Ok(r as usize)
        };
        let i0 = conv(self.x0 + 0.5)?;
        let j0 = conv(self.y0 + 0.5)?;
        let c = conv(self.side)?;
        if c == 0 || i0 + c > grid.n() || j0 + c > grid.n() {
            return Err(super::DomainError::MisalignedTile);
        }
        Ok((i0, j0, c))
    }
}

/// Builds the tiling `T_{lambda^level}` on `grid`.
pub fn make_tiling(lambda: f64, level: u32, grid: &Grid) -> Result<Tiling, DomainError> {
    let inv = lambda_reciprocal(lambda)?;
    let per_side = inv
        .checked_pow(level)
        .ok_or(DomainError::ResolutionTooCoarse {
            side: lambda.powi(level as i32),
            n: grid.n(),
        })?;
    if per_side > grid.n() || grid.n() % per_side != 0 {
        return Err(DomainError::ResolutionTooCoarse {
            side: lambda.powi(level as i32),
            n: grid.n(),
        });
    }
    Ok(Tiling {
        lambda: 1.0 / inv as f64,
        inv_lambda: inv,
        level,
        per_side,
        tile_cells: grid.n() / per_side,
        grid: *grid,
    })
}

impl Tiling {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn inv_lambda(&self) -> usize {
        self.inv_lambda
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Tiles per side, `lambda^{-level}`.
    pub fn per_side(&self) -> usize {
        self.per_side
    }

    pub fn count(&self) -> usize {
        self.per_side * self.per_side
    }

    /// Cells per tile side.
    pub fn tile_cells(&self) -> usize {
        self.tile_cells
    }

    pub fn tile_side(&self) -> f64 {
        1.0 / self.per_side as f64
    }

    pub fn tile(&self, tx: usize, ty: usize) -> Tile {
        let side = self.tile_side();
        Tile {
            tx,
            ty,
            i0: tx * self.tile_cells,
            j0: ty * self.tile_cells,
            cells: self.tile_cells,
            center: [
                -0.5 + (tx as f64 + 0.5) * side,
                -0.5 + (ty as f64 + 0.5) * side,
            ],
            side,
        }
    }

    /// Tiles in row-major order.
    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        (0..self.count()).map(move |k| self.tile(k % self.per_side, k / self.per_side))
    }

    pub fn tile_of_cell(&self, i: usize, j: usize) -> (usize, usize) {
        (i / self.tile_cells, j / self.tile_cells)
    }

    /// Tile containing a point of the closed square.
    pub fn tile_of_point(&self, x: [f64; 2]) -> (usize, usize) {
        let f = |v: f64| {
            (((v + 0.5) * self.per_side as f64).floor().max(0.0) as usize).min(self.per_side - 1)
        };
        (f(x[0]), f(x[1]))
    }
}
