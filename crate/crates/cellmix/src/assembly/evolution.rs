use serde::Serialize;

use super::stage::{patch_stage, stage_permutation};
use super::{AssemblyError, BlockPlan, BudgetSpec};
use crate::diagnostics::{characteristic_length_scale, DiagnosticsError};
use crate::domain::{lambda_reciprocal, make_tiling, BlockParams, CellMask, Schedule, TracerField};
use crate::lagrangian::{cell_centers, integrate_flow_adaptive};
use crate::sobolev::{SobolevBudget, VelocityField};
use crate::Vec2;

/// RK4 steps per stage for backward characteristics of the assembled field.
const PROBE_STEPS: usize = 256;

/// Bookkeeping of one stage `T_n <= t < T_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub n: u32,
    pub t_start: f64,
    pub t_end: f64,
    /// Tiles of `T_{lambda^n}` the stage acts on.
    pub tiles: usize,
    pub block_ids: Vec<String>,
    /// Every tile of `T_{lambda^{n+1}}` has zero mean at `T_{n+1}` (integer counts).
    pub tiles_mean_free: bool,
    /// Every tile of `T_{lambda^{n+1}}` holds exactly the fraction `theta` of `A` at `T_{n+1}`.
    pub tile_fractions_exact: bool,
    pub budget: Option<SobolevBudget>,
}

/// A cellular evolution sampled at the stage times.
#[derive(Debug, Clone, PartialEq)]
pub struct CellularEvolution {
    pub params: BlockParams,
    pub schedule: Schedule,
    pub plan: BlockPlan,
    /// Tracer at `T_0, ..., T_{stages}`.
    pub states: Vec<TracerField>,
    pub stages: Vec<StageRecord>,
    /// Cell permutation of each stage.
    pub perms: Vec<Vec<u32>>,
}

/// Whether every tile of the level-`level` tiling has zero mean and holds
/// exactly the fraction `theta` of the level set.
fn tile_invariants(rho: &TracerField, lambda: f64, level: u32, theta: f64) -> (bool, bool) {
    let Ok(tiling) = make_tiling(lambda, level, rho.grid()) else {
        return (false, false);
    };
    let mean_free = tiling
        .tiles()
        .all(|t| crate::domain::tile_is_mean_free(rho, &t));
    let Some(mask) = rho.level_set() else {
        return (mean_free, false);
    };
    let n = rho.n();
    let cells = tiling.tile_cells() * tiling.tile_cells();
    let exact = tiling.tiles().all(|t| {
        let mut count = 0usize;
        for j in t.j0..t.j0 + t.cells {
            count += mask.bits()[j * n + t.i0..j * n + t.i0 + t.cells]
                .iter()
                .filter(|&&b| b)
                .count();
        }
        (count as f64 - theta * cells as f64).abs() < 0.5
    });
    (mean_free, exact)
}

/// Runs stages `0..n_stages` of the cellular evolution from `rho_bar`.
///
/// With `budget`, every stage budget of the assembled field is sampled.
pub fn evolve(
    rho_bar: &TracerField,
    n_stages: usize,
    params: &BlockParams,
    schedule: &Schedule,
    plan: &BlockPlan,
    budget: Option<&BudgetSpec>,
) -> Result<CellularEvolution, AssemblyError> {
    params.validate().map_err(AssemblyError::InvalidPlan)?;
    if schedule.n_max() < n_stages {
        return Err(AssemblyError::InvalidPlan(format!(
            "schedule reaches T_{} but {n_stages} stages were requested",
            schedule.n_max()
        )));
    }
    let lambda = params.lambda;
    let tau = schedule.tau;
    let inv = lambda_reciprocal(lambda)?;
    let mut states = vec![rho_bar.clone()];
    let mut stages = Vec::with_capacity(n_stages);
    let mut perms = Vec::with_capacity(n_stages);
    for n in 0..n_stages as u32 {
        let current = states.last().expect("initial state present");
        let step = patch_stage(current, plan, n, lambda, tau, budget)?;
        let tiles = inv.pow(n) * inv.pow(n);
        let mut block_ids: Vec<String> = plan
            .distinct(n, tiles)?
            .iter()
            .map(|d| d.0.id.clone())
            .collect();
        block_ids.dedup();
        let (tiles_mean_free, tile_fractions_exact) =
            tile_invariants(&step.state, lambda, n + 1, params.theta);
        stages.push(StageRecord {
            n,
            t_start: schedule.t(n as usize),
            t_end: schedule.t(n as usize + 1),
            tiles,
            block_ids,
            tiles_mean_free,
            tile_fractions_exact,
            budget: step.budget,
        });
        perms.push(step.perm);
        states.push(step.state);
    }
    Ok(CellularEvolution {
        params: *params,
        schedule: schedule.clone(),
        plan: plan.clone(),
        states,
        stages,
        perms,
    })
}

impl CellularEvolution {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn tau(&self) -> f64 {
        self.schedule.tau
    }

    pub fn grid_n(&self) -> usize {
        self.states[0].n()
    }

    /// Tracer at `T_n`.
    pub fn state(&self, n: usize) -> &TracerField {
        &self.states[n]
    }

    /// Destination at `T_n` of every initial cell.
    pub fn composite_permutation(&self, n: usize) -> Vec<u32> {
        let mut out: Vec<u32> = (0..self.states[0].values().len() as u32).collect();
        for perm in &self.perms[..n] {
            for d in out.iter_mut() {
                *d = perm[*d as usize];
            }
        }
        out
    }

    /// Tracer at `T_n + fraction * tau^n` on the map layer: the moves of stage
    /// `n` finished by then have been applied.
    pub fn state_within(&self, n: usize, fraction: f64) -> Result<TracerField, AssemblyError> {
        let perm = stage_permutation(&self.plan, self.grid_n(), n as u32, self.lambda(), fraction)?;
        Ok(self.states[n].pushed_forward(&perm))
    }

    /// The assembled velocity field on `[0, T_stages)`, if every block has a field.
    pub fn field(&self) -> Option<CellularField> {
        if !self.plan.has_fields() {
            return None;
        }
        Some(CellularField {
            plan: self.plan.clone(),
            inv_lambda: lambda_reciprocal(self.lambda()).ok()?,
            tau: self.tau(),
            times: self.schedule.steps()[..=self.n_stages()].to_vec(),
        })
    }
}

/// `u(t, x) = (lambda^n / tau^n) u_0((t - T_n) / tau^n, (x - r) / lambda^n)` on the
/// tile of `T_{lambda^n}` with center `r` containing `x`, for `T_n <= t < T_{n+1}`.
#[derive(Debug, Clone)]
pub struct CellularField {
    plan: BlockPlan,
    inv_lambda: usize,
    tau: f64,
    times: Vec<f64>,
}

impl CellularField {
    pub fn stages(&self) -> usize {
        self.times.len() - 1
    }

    /// Stage containing `t`, if `t` lies in `[0, T_stages)`.
    pub fn stage_at(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0 && t < *self.times.last().expect("at least T_0")) {
            return None;
        }
        Some(self.times.partition_point(|&s| s <= t) - 1)
    }
}

impl VelocityField for CellularField {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        let Some(n) = self.stage_at(t) else {
            return [0.0, 0.0];
        };
        if x[0].abs() >= 0.5 || x[1].abs() >= 0.5 {
            return [0.0, 0.0];
        }
        let per_side = self.inv_lambda.pow(n as u32);
        let scale = 1.0 / per_side as f64;
        let cell = |v: f64| (((v + 0.5) * per_side as f64).floor() as usize).min(per_side - 1);
        let (tx, ty) = (cell(x[0]), cell(x[1]));
        let Ok(block) = self.plan.block(n as u32, ty * per_side + tx) else {
            return [0.0, 0.0];
        };
        let Some(field) = &block.field else {
            return [0.0, 0.0];
        };
        let dilation = self.tau.powi(n as i32);
        let center = [
            -0.5 + (tx as f64 + 0.5) * scale,
            -0.5 + (ty as f64 + 0.5) * scale,
        ];
        let y = [(x[0] - center[0]) / scale, (x[1] - center[1]) / scale];
        let v = field.velocity((t - self.times[n]) / dilation, y);
        let amp = scale / dilation;
        [amp * v[0], amp * v[1]]
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, *self.times.last().expect("at least T_0"))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = self.times.clone();
        for n in 0..self.stages() {
            let per_side = self.inv_lambda.pow(n as u32);
            let Ok(distinct) = self.plan.distinct(n as u32, per_side * per_side) else {
                continue;
            };
            let dilation = self.tau.powi(n as i32);
            for (block, _, _) in distinct {
                if let Some(f) = &block.field {
                    out.extend(
                        f.breakpoints()
                            .into_iter()
                            .map(|b| self.times[n] + b * dilation),
                    );
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        out
    }
}

/// Length scales of the level set at an interior time, tile by tile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorReport {
    pub t: f64,
    pub stage: Option<usize>,
    /// Set when the evolution has no field layer; nothing was measured.
    pub map_only: bool,
    /// `LS` of the level set inside each tile of `T_{lambda^n}`, over the tile side.
    pub relative_ls: Vec<f64>,
    pub min_relative_ls: f64,
    /// `lambda * a`.
    pub bound: f64,
}

/// Level-set length scales inside the stage tiles at time `t`, from
/// backward characteristics of the assembled field to the stage start.
/// Informational: nothing is asserted.
pub fn interior_unmixedness_probe(
    evolution: &CellularEvolution,
    t: f64,
) -> Result<InteriorReport, AssemblyError> {
    let bound = evolution.lambda() * evolution.params.a;
    let Some(field) = evolution.field() else {
        return Ok(InteriorReport {
            t,
            stage: None,
            map_only: true,
            relative_ls: Vec::new(),
            min_relative_ls: f64::NAN,
            bound,
        });
    };
    let stage = field
        .stage_at(t)
        .ok_or_else(|| AssemblyError::InvalidPlan(format!("t = {t} lies outside the evolution")))?;
    let start = evolution.schedule.t(stage);
    let rho = evolution.state(stage);
    let n = rho.n();
    let grid = *rho.grid();
    let bits: Vec<bool> = if t == start {
        rho.values().iter().map(|&v| v == 1.0).collect()
    } else {
        let dilation = evolution.tau().powi(stage as i32);
        let steps = (PROBE_STEPS as f64 / dilation).ceil() as usize;
        let flow =
            integrate_flow_adaptive(&field, &cell_centers(n), t, start, steps, 1.0 / n as f64)
                .map_err(|e| AssemblyError::InvalidPlan(e.to_string()))?;
        flow.end
            .iter()
            .map(|y| {
                let (i, j) = grid.locate_clamped(*y);
                rho.at(i, j) == 1.0
            })
            .collect()
    };
    let mask = CellMask::from_bits(grid, bits)?;
    let tiling = make_tiling(evolution.lambda(), stage as u32, &grid)?;
    let mut relative_ls = Vec::with_capacity(tiling.count());
    for tile in tiling.tiles() {
        let ls = match characteristic_length_scale(
            &mask,
            &tile.region(),
            evolution.params.kappa,
            evolution.params.s_bar,
        ) {
            Ok(r) => r.ls,
            Err(DiagnosticsError::EmptySet) => 0.0,
            Err(e) => return Err(e.into()),
        };
        relative_ls.push(ls / tile.side);
    }
    let min_relative_ls = relative_ls.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InteriorReport {
        t,
        stage: Some(stage),
        map_only: false,
        relative_ls,
        min_relative_ls,
        bound,
    })
}
