use super::fields::{Patched, VelocityField};
use super::fractional::{gagliardo_extrapolated, GagliardoDomain};
use super::integer::grad_lp_power;
use super::snapshot::Snapshot;
use super::{split_order, SobolevError};
use crate::domain::{make_tiling, Grid, Region, Schedule};

/// One point of the scaling grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScalingCase {
    pub lambda: f64,
    pub tau: f64,
    pub n: u32,
    /// Smoothness: an integer `k`, or `k + r` for the fractional semi-norm.
    pub s: f64,
    pub p: f64,
}

impl ScalingCase {
    /// `lambda^{2n} lambda^{-(s-1) n p} tau^{-n p}`: ratio of one rescaled snapshot to the original.
    pub fn snapshot_factor(&self) -> f64 {
        let n = self.n as f64;
        self.lambda.powf(2.0 * n)
            * self.lambda.powf(-(self.s - 1.0) * n * self.p)
            * self.tau.powf(-n * self.p)
    }

    /// `lambda^{2n} lambda^{-(s-1) n p} tau^{n(1-p)}`: ratio of the stage integral
    /// `int_{T_n}^{T_{n+1}} ||u||^p dt` to `int_0^1 ||u_0||^p dt`.
    pub fn stage_factor(&self) -> f64 {
        self.snapshot_factor() * self.tau.powi(self.n as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScalingReport {
    pub case: ScalingCase,
    pub tile_cells: usize,
    pub reference_cells: usize,
    pub expected_snapshot: f64,
    pub measured_snapshot: f64,
    pub expected_stage: f64,
    pub measured_stage: f64,
    pub snapshot_error: f64,
    pub stage_error: f64,
    pub passed: bool,
}

/// Relative tolerance on both ratios.
pub const SCALING_TOLERANCE: f64 = 0.02;

fn seminorm_power(
    field: &dyn VelocityField,
    region: &Region,
    cells: usize,
    t: f64,
    s: f64,
    p: f64,
) -> Result<f64, SobolevError> {
    let (k, r) = split_order(s)?;
    if r == 0.0 {
        grad_lp_power(&Snapshot::velocity(field, region, cells, t), k, p)
    } else {
        gagliardo_extrapolated(field, region, cells, t, s, p, GagliardoDomain::WholePlane)
    }
}

/// Patches `u0` into one tile of `T_{lambda^n}` on an `grid_n` grid with amplitude
/// `lambda^n / tau^n` over `[T_n, T_{n+1}]`, and compares its `W^{s,p}` power,
/// per snapshot and integrated over the stage, with that of `u0` sampled on
/// `reference_n` cells over `[0, 1]`.
///
/// Integer orders are evaluated over all of `Q`; fractional ones over the tile
/// with the whole-plane exterior term, since the patched field vanishes
/// outside it, and with one Richardson step on both sides.
pub fn scaling_identity_check(
    u0: &dyn VelocityField,
    case: &ScalingCase,
    grid_n: usize,
    reference_n: usize,
    samples: usize,
) -> Result<ScalingReport, SobolevError> {
    let (k, r) = split_order(case.s)?;
    let grid = Grid::new(grid_n)?;
    let tiling = make_tiling(case.lambda, case.n, &grid)?;
    let tile = tiling.tile(0, 0);
    if tile.cells < 2 * k + 3 {
        return Err(SobolevError::ResolutionTooCoarse {
            cells: tile.cells,
            k,
        });
    }
    let scale = tiling.tile_side();
    let dilation = case.tau.powi(case.n as i32);
    let t0 = Schedule::closed_form(case.tau, case.n as usize);
    let patched = Patched {
        inner: u0,
        scale,
        dilation,
        t0,
        center: tile.center,
    };
    let (region, cells) = if r == 0.0 {
        (Region::unit(), grid_n)
    } else {
        (tile.region(), tile.cells)
    };
    let mut orig = Vec::with_capacity(samples);
    let mut resc = Vec::with_capacity(samples);
    for m in 0..samples {
        let frac = (m as f64 + 0.5) / samples as f64;
        orig.push(seminorm_power(
            u0,
            &Region::unit(),
            reference_n,
            frac,
            case.s,
            case.p,
        )?);
        resc.push(seminorm_power(
            &patched,
            &region,
            cells,
            t0 + frac * dilation,
            case.s,
            case.p,
        )?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let measured_snapshot = resc[0] / orig[0];
    let measured_stage = mean(&resc) * dilation / mean(&orig);
    let expected_snapshot = case.snapshot_factor();
    let expected_stage = case.stage_factor();
    let snapshot_error = (measured_snapshot / expected_snapshot - 1.0).abs();
    let stage_error = (measured_stage / expected_stage - 1.0).abs();
    Ok(ScalingReport {
        case: *case,
        tile_cells: tile.cells,
        reference_cells: reference_n,
        expected_snapshot,
        measured_snapshot,
        expected_stage,
        measured_stage,
        snapshot_error,
        stage_error,
        passed: snapshot_error <= SCALING_TOLERANCE && stage_error <= SCALING_TOLERANCE,
    })
}
