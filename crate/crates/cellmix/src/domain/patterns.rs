//! Standard tracer and mask patterns.

use super::{make_binary_tracer, CellMask, DomainError, Grid, TracerField};

/// Left half of `Q`.
pub fn left_half(grid: Grid) -> CellMask {
    let half = grid.n() / 2;
    CellMask::from_fn(grid, |i, _| i < half)
}

/// `1` on the left half, `-1` on the right half.
pub fn half_split(grid: Grid) -> Result<TracerField, DomainError> {
    if grid.n() % 2 != 0 {
        return Err(DomainError::ResolutionTooCoarse {
            side: 0.5,
            n: grid.n(),
        });
    }
    make_binary_tracer(&left_half(grid), &grid)
}

/// Checkerboard with squares of side `lambda / 2`, so every tile of `T_lambda`
/// holds a 2x2 block of squares and has mean zero.
pub fn checkerboard(grid: Grid, lambda: f64) -> Result<TracerField, DomainError> {
    let inv = super::lambda_reciprocal(lambda)?;
    let squares = 2 * inv;
    if grid.n() % squares != 0 {
        return Err(DomainError::ResolutionTooCoarse {
            side: lambda / 2.0,
            n: grid.n(),
        });
    }
    let cs = grid.n() / squares;
    let mask = CellMask::from_fn(grid, |i, j| (i / cs + j / cs) % 2 == 0);
    make_binary_tracer(&mask, &grid)
}

/// Vertical stripes of width `width` cells starting with `1` at the left edge.
pub fn stripes(grid: Grid, width: usize) -> Result<TracerField, DomainError> {
    if width == 0 || grid.n() % (2 * width) != 0 {
        return Err(DomainError::ResolutionTooCoarse {
            side: width as f64 / grid.n() as f64,
            n: grid.n(),
        });
    }
    let mask = CellMask::from_fn(grid, |i, _| (i / width) % 2 == 0);
    make_binary_tracer(&mask, &grid)
}

/// Disc of radius `r` about `c` (cell-center inclusion).
pub fn disc(grid: Grid, c: [f64; 2], r: f64) -> CellMask {
    CellMask::from_fn(grid, |i, j| {
        let dx = grid.center(i) - c[0];
        let dy = grid.center(j) - c[1];
        dx * dx + dy * dy < r * r
    })
}

/// `sin(2 pi m x)` sampled at cell centers.
pub fn sine_mode(grid: Grid, m: u32) -> TracerField {
    let k = 2.0 * std::f64::consts::PI * m as f64;
    TracerField::from_fn(grid, |x, _| (k * (x + 0.5)).sin())
}
