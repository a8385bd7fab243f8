use serde::Serialize;

use super::map::MapBlock;
use super::BlockError;
use crate::diagnostics::characteristic_length_scale;
use crate::domain::{
    make_tiling, tile_average, tile_is_mean_free, BlockParams, Region, TracerField,
};
use crate::lagrangian::{cell_centers, integrate_flow_adaptive};
use crate::sobolev::{divergence_max, grad_lp_norm, Snapshot, VelocityField};

/// Largest discrete divergence allowed, relative to `max |grad u|`.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-2;
/// Largest tile average allowed at the field layer, relative to `||rho||_inf`.
pub const TILE_MEAN_TOLERANCE: f64 = 1e-3;
/// Resolution of the regularity snapshots; the swirl ramps need about 16
/// cells across for the discrete divergence to drop below tolerance.
pub const REGULARITY_CELLS: usize = 512;
/// RK4 steps per unit time for field-layer advection.
const ADVECTION_STEPS: usize = 256;

/// Which realization of the block the final tile means are checked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Layer {
    /// Exact cell permutation; tile means must vanish exactly.
    Map,
    /// Swirl field with backward characteristics; tile means within tolerance.
    Field,
}

/// A violated clause of the building block definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Clause {
    /// Clause (i): the field is not divergence free, not zero on the boundary, or not finite.
    Regularity(String),
    /// Clause (ii): the initial set is too thin.
    LengthScale { ls: f64, a: f64 },
    /// Clause (ii): the initial set has the wrong measure.
    Volume { theta: f64, expected: f64 },
    /// Clause (ii): the initial datum is not a binary tracer.
    NotBinary,
    /// Clause (iii): tiles `(tx, ty, average)` that are not mean free at time 1.
    TileMeans { tiles: Vec<(usize, usize, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub layer: Layer,
    pub length_scale: f64,
    pub theta: f64,
    /// Discrete divergence over `max |grad u|`, worst sampled time.
    pub max_divergence: f64,
    pub boundary_speed: f64,
    /// Largest `|tile average| / ||rho||_inf` at time 1.
    pub max_tile_mean: f64,
    pub violations: Vec<Clause>,
}

impl BlockReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sample_times(field: &dyn VelocityField) -> Vec<f64> {
    let (t0, t1) = field.interval();
    let mut cuts = vec![t0];
    cuts.extend(
        field
            .breakpoints()
            .into_iter()
            .filter(|&b| b > t0 && b < t1),
    );
    cuts.push(t1);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect()
}

fn check_regularity(field: &dyn VelocityField, report: &mut BlockReport) -> Result<(), BlockError> {
    let n = REGULARITY_CELLS;
    let mut problems = Vec::new();
    for t in sample_times(field) {
        let snap = Snapshot::velocity(field, &Region::unit(), n, t);
        let grad = grad_lp_norm(&snap, 1, f64::INFINITY)?;
        let div = divergence_max(&snap);
        if grad > 0.0 {
            report.max_divergence = report.max_divergence.max(div / grad);
        }
        for k in 1..=2 {
            if !grad_lp_norm(&snap, k, 2.0)?.is_finite() {
                problems.push(format!("||grad^{k} u({t})|| is not finite"));
            }
        }
        for m in 0..=4 * n {
            let s = -0.5 + m as f64 / (4 * n) as f64;
            for x in [[s, -0.5], [s, 0.5], [-0.5, s], [0.5, s]] {
                let v = field.velocity(t, x);
                report.boundary_speed = report.boundary_speed.max(v[0].hypot(v[1]));
            }
        }
    }
    if report.max_divergence > DIVERGENCE_TOLERANCE {
        problems.push(format!("relative divergence {:.3e}", report.max_divergence));
    }
    if report.boundary_speed > 1e-12 {
        problems.push(format!("boundary speed {:.3e}", report.boundary_speed));
    }
    if !problems.is_empty() {
        report
            .violations
            .push(Clause::Regularity(problems.join("; ")));
    }
    Ok(())
}

/// Tracer at time 1 by backward characteristics of `field` and nearest-cell lookup.
/// `steps` per unit time is doubled as long as a step crosses a whole cell.
pub(crate) fn advect_by_field(
    field: &dyn VelocityField,
    rho0: &TracerField,
    steps: usize,
) -> Result<TracerField, BlockError> {
    let n = rho0.n();
    let grid = *rho0.grid();
    let (t0, t1) = field.interval();
    let flow = integrate_flow_adaptive(field, &cell_centers(n), t1, t0, steps, 1.0 / n as f64)
        .map_err(|e| BlockError::Flow(e.to_string()))?;
    let values = flow
        .end
        .iter()
        .map(|y| {
            let (i, j) = grid.locate_clamped(*y);
            rho0.at(i, j)
        })
        .collect();
    Ok(TracerField::new(grid, values)?)
}

/// Checks the three clauses of the building block definition for the datum
/// `rho0`: (i) regularity of the field, (ii) `LS_Q(A) >= a` and `|A| = theta`,
/// (iii) zero tile averages over `T_lambda` at time 1 on the chosen layer.
pub fn validate_block(
    map: &MapBlock,
    field: Option<&dyn VelocityField>,
    rho0: &TracerField,
    params: &BlockParams,
    layer: Layer,
) -> Result<BlockReport, BlockError> {
    params.validate().map_err(BlockError::InvalidMove)?;
    let mut report = BlockReport {
        layer,
        length_scale: f64::NAN,
        theta: f64::NAN,
        max_divergence: 0.0,
        boundary_speed: 0.0,
        max_tile_mean: 0.0,
        violations: Vec::new(),
    };
    match field {
        Some(f) => check_regularity(f, &mut report)?,
        None if layer == Layer::Field => report
            .violations
            .push(Clause::Regularity("no field realization".into())),
        None => {}
    }

    match (rho0.binary(), rho0.level_set()) {
        (Some(levels), Some(mask)) => {
            let total = rho0.grid().cells();
            report.theta = levels.theta(total);
            report.length_scale =
                characteristic_length_scale(&mask, &Region::unit(), params.kappa, params.s_bar)?.ls;
            if report.length_scale < params.a {
                report.violations.push(Clause::LengthScale {
                    ls: report.length_scale,
                    a: params.a,
                });
            }
            if (report.theta - params.theta).abs() > 0.5 / total as f64 {
                report.violations.push(Clause::Volume {
                    theta: report.theta,
                    expected: params.theta,
                });
            }
        }
        _ => report.violations.push(Clause::NotBinary),
    }

    let tiling = make_tiling(params.lambda, 1, rho0.grid())?;
    let sup = rho0.sup_norm().max(f64::MIN_POSITIVE);
    let mut bad = Vec::new();
    match layer {
        Layer::Map => {
            let rho1 = map.apply(rho0)?;
            for tile in tiling.tiles() {
                let avg = tile_average(&rho1, &tile.region())?;
                report.max_tile_mean = report.max_tile_mean.max(avg.abs() / sup);
                if !tile_is_mean_free(&rho1, &tile) {
                    bad.push((tile.tx, tile.ty, avg));
                }
            }
        }
        Layer::Field => {
            if let Some(f) = field {
                let rho1 = advect_by_field(f, rho0, ADVECTION_STEPS)?;
                for tile in tiling.tiles() {
                    let avg = tile_average(&rho1, &tile.region())?;
                    report.max_tile_mean = report.max_tile_mean.max(avg.abs() / sup);
                    if avg.abs() > TILE_MEAN_TOLERANCE * sup {
                        bad.push((tile.tx, tile.ty, avg));
                    }
                }
            }
        }
    }
    if !bad.is_empty() {
        report.violations.push(Clause::TileMeans { tiles: bad });
    }
    Ok(report)
}
