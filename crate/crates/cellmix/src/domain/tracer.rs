use super::{DomainError, Grid, Region, Tile};

/// Set of grid cells, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    grid: Grid,
    bits: Vec<bool>,
}

impl CellMask {
    pub fn empty(grid: Grid) -> Self {
        CellMask {
            grid,
            bits: vec![false; grid.cells()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(usize, usize) -> bool) -> Self {
        let n = grid.n();
        let bits = (0..grid.cells()).map(|k| f(k % n, k / n)).collect();
        CellMask { grid, bits }
    }

    pub fn from_bits(grid: Grid, bits: Vec<bool>) -> Result<Self, DomainError> {
        if bits.len() != grid.cells() {
            return Err(DomainError::Parse(format!(
                "mask has {} cells, grid needs {}",
                bits.len(),
                grid.cells()
            )));
        }
        Ok(CellMask { grid, bits })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[self.grid.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = self.grid.index(i, j);
        self.bits[k] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        CellMask {
            grid: self.grid,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// The two values of a binary tracer: `1` on `A` and `c` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryLevels {
    pub c: f64,
    /// `|A|` in cells.
    pub a_cells: usize,
}

impl BinaryLevels {
    pub fn theta(&self, total: usize) -> f64 {
        self.a_cells as f64 / total as f64
    }
}

/// Scalar per cell of a grid on `Q`, zero outside `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TracerField {
    grid: Grid,
    values: Vec<f64>,
    binary: Option<BinaryLevels>,
}

impl TracerField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != grid.cells() {
            return Err(DomainError::Parse(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.cells()
            )));
        }
        Ok(TracerField {
            grid,
            values,
            binary: None,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        TracerField {
            grid,
            values: vec![0.0; grid.cells()],
            binary: None,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = (0..grid.cells())
            .map(|k| f(grid.center(k % n), grid.center(k / n)))
            .collect();
        TracerField {
            grid,
            values,
            binary: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn binary(&self) -> Option<BinaryLevels> {
        self.binary
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Mean over `Q`. Binary tracers are mean-free by construction of `c`.
    pub fn mean(&self) -> f64 {
        if self.binary.is_some() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        let h2 = self.grid.spacing().powi(2);
        (self.values.iter().map(|v| v * v).sum::<f64>() * h2).sqrt()
    }

    /// Cells of `A` (value `1`) for a binary tracer.
    pub fn level_set(&self) -> Option<CellMask> {
        self.binary?;
        let bits = self.values.iter().map(|&v| v == 1.0).collect();
        Some(CellMask {
            grid: self.grid,
            bits,
        })
    }

    /// Multiplies every value by `alpha`; binary structure is dropped unless `alpha == 1`.
    pub fn scaled(&self, alpha: f64) -> Self {
        TracerField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * alpha).collect(),
            binary: if alpha == 1.0 { self.binary } else { None },
        }
    }

    /// Gathers values through a cell permutation: `new[perm[k]] = old[k]`.
    ///
    /// `perm[k]` is the cell that the content of cell `k` moves to.
    pub fn pushed_forward(&self, perm: &[u32]) -> Self {
        debug_assert_eq!(perm.len(), self.values.len());
        let mut values = vec![0.0; self.values.len()];
        for (k, &dest) in perm.iter().enumerate() {
            values[dest as usize] = self.values[k];
        }
        TracerField {
            grid: self.grid,
            values,
            binary: self.binary,
        }
    }
}

/// `k (M - K) == (S - k) K`: a tile with `k` of `S` cells in `A` has mean zero
/// when `A` has `K` of `M` cells in total.
fn exact_zero_mean(k: usize, s: usize, big_k: usize, m: usize) -> bool {
    (k as u128) * ((m - big_k) as u128) == ((s - k) as u128) * (big_k as u128)
}

/// Binary tracer `1` on `mask`, `c = -theta/(1 - theta)` elsewhere.
pub fn make_binary_tracer(mask: &CellMask, grid: &Grid) -> Result<TracerField, DomainError> {
    if mask.grid() != grid {
        return Err(DomainError::InvalidGrid("mask and grid differ".into()));
    }
    let total = grid.cells();
    let k = mask.count();
    if k == 0 {
        return Err(DomainError::EmptyMask);
    }
    if 2 * k > total {
        return Err(DomainError::MaskTooLarge { count: k, total });
    }
    let c = -(k as f64) / ((total - k) as f64);
    let values = mask
        .bits()
        .iter()
        .map(|&b| if b { 1.0 } else { c })
        .collect();
    Ok(TracerField {
        grid: *grid,
        values,
        binary: Some(BinaryLevels { c, a_cells: k }),
    })
}

fn region_sum(rho: &TracerField, i0: usize, j0: usize, c: usize) -> (f64, usize) {
    let n = rho.n();
    let mut sum = 0.0;
    let mut ones = 0usize;
    for j in j0..j0 + c {
        let row = &rho.values[j * n + i0..j * n + i0 + c];
        sum += row.iter().sum::<f64>();
        ones += row.iter().filter(|&&v| v == 1.0).count();
    }
    (sum, ones)
}

/// Average of `rho` over an aligned square.
///
/// Binary tracers are averaged from exact cell counts.
pub fn tile_average(rho: &TracerField, region: &Region) -> Result<f64, DomainError> {
    let (i0, j0, c) = region.cell_range(rho.grid())?;
    let (sum, ones) = region_sum(rho, i0, j0, c);
    let s = c * c;
    if let Some(b) = rho.binary {
        if exact_zero_mean(ones, s, b.a_cells, rho.grid.cells()) {
            return Ok(0.0);
        }
        return Ok((ones as f64 + (s - ones) as f64 * b.c) / s as f64);
    }
    Ok(sum / s as f64)
}

/// Whether the tile average vanishes: exactly for binary tracers, to `1e-12 ||rho||` otherwise.
pub fn tile_is_mean_free(rho: &TracerField, tile: &Tile) -> bool {
    let (sum, ones) = region_sum(rho, tile.i0, tile.j0, tile.cells);
    let s = tile.cells * tile.cells;
    match rho.binary {
        Some(b) => exact_zero_mean(ones, s, b.a_cells, rho.grid.cells()),
        None => (sum / s as f64).abs() <= 1e-12 * rho.sup_norm().max(f64::MIN_POSITIVE),
    }
}
