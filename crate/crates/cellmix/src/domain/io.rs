//! Tracer and mask serialization.
//!
//! Tracers are stored as `n*n` row-major values, either raw little-endian
//! `f64` or one value per CSV line, next to a JSON sidecar header. Masks use a
//! run-length text format: the first line is `n`, every further line is
//! `start len` for a run of set cells in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{make_binary_tracer, CellMask, DomainError, Grid, TracerField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracerHeader {
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub kappa: f64,
    pub s_bar: f64,
}

pub fn write_header(path: &Path, header: &TracerHeader) -> Result<(), DomainError> {
    let text = serde_json::to_string_pretty(header).map_err(|e| DomainError::Io(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<TracerHeader, DomainError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| DomainError::Parse(e.to_string()))
}

pub fn write_binary(path: &Path, rho: &TracerField) -> Result<(), DomainError> {
    let mut bytes = Vec::with_capacity(8 * rho.values().len());
    for v in rho.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_binary(path: &Path, grid: Grid) -> Result<TracerField, DomainError> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.cells() {
        return Err(DomainError::Parse(format!(
            "expected {} bytes, found {}",
            8 * grid.cells(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    TracerField::new(grid, values)
}

pub fn write_csv(path: &Path, rho: &TracerField) -> Result<(), DomainError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for v in rho.values() {
        writeln!(f, "{v:e}")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path, grid: Grid) -> Result<TracerField, DomainError> {
    let text = fs::read_to_string(path)?;
    let values = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| DomainError::Parse(format!("{l:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    TracerField::new(grid, values)
}

/// Saves `stem.bin` and `stem.json`.
pub fn save_tracer(
    stem: &Path,
    rho: &TracerField,
    header: &TracerHeader,
) -> Result<(), DomainError> {
    write_binary(&stem.with_extension("bin"), rho)?;
    write_header(&stem.with_extension("json"), header)
}

/// Loads a tracer saved by [`save_tracer`].
pub fn load_tracer(stem: &Path) -> Result<(TracerField, TracerHeader), DomainError> {
    let header = read_header(&stem.with_extension("json"))?;
    let rho = read_binary(&stem.with_extension("bin"), Grid::new(header.n)?)?;
    Ok((rho, header))
}

pub fn encode_mask(mask: &CellMask) -> String {
    let mut out = format!("{}\n", mask.grid().n());
    let bits = mask.bits();
    let mut k = 0;
    while k < bits.len() {
        if bits[k] {
            let start = k;
            while k < bits.len() && bits[k] {
                k += 1;
            }
            out.push_str(&format!("{} {}\n", start, k - start));
        } else {
            k += 1;
        }
    }
    out
}

pub fn decode_mask(text: &str) -> Result<CellMask, DomainError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| DomainError::Parse("empty mask file".into()))?
        .parse()
        .map_err(|e| DomainError::Parse(format!("grid size: {e}")))?;
    let grid = Grid::new(n)?;
    let mut bits = vec![false; grid.cells()];
    for line in lines {
        let mut it = line.split_whitespace();
        let mut next = || -> Result<usize, DomainError> {
            it.next()
                .ok_or_else(|| DomainError::Parse(format!("bad run {line:?}")))?
                .parse()
                .map_err(|e| DomainError::Parse(format!("bad run {line:?}: {e}")))
        };
        let (start, len) = (next()?, next()?);
        if start + len > bits.len() {
            return Err(DomainError::Parse(format!("run {line:?} exceeds grid")));
        }
        bits[start..start + len].iter_mut().for_each(|b| *b = true);
    }
    CellMask::from_bits(grid, bits)
}

/// Reads a mask file and builds the binary tracer it describes.
pub fn tracer_from_mask_file(path: &Path) -> Result<TracerField, DomainError> {
    let mask = decode_mask(&fs::read_to_string(path)?)?;
    let grid = *mask.grid();
    make_binary_tracer(&mask, &grid)
}
