use super::{AssemblyError, BlockPlan, BudgetSpec};
use crate::blocks::BlockError;
use crate::domain::{make_tiling, Schedule, TracerField};
use crate::par;
use crate::sobolev::{grad_lp_norm, snapshot_seminorm, Patched, Snapshot, SobolevBudget};

/// One stage of a cellular evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct StageEvolution {
    pub n: u32,
    /// Destination of every cell over the stage.
    pub perm: Vec<u32>,
    /// Tracer at `T_{n+1}`.
    pub state: TracerField,
    /// `None` when some block of the stage has no field.
    pub budget: Option<SobolevBudget>,
}

/// Cell permutation of stage `n` on an `N`-cell grid, stopped at the
/// fraction `until` of the stage: every tile of `T_{lambda^n}` runs its
/// block's permutation rescaled to the tile's cells.
pub fn stage_permutation(
    plan: &BlockPlan,
    grid_n: usize,
    n: u32,
    lambda: f64,
    until: f64,
) -> Result<Vec<u32>, AssemblyError> {
    let grid = crate::domain::Grid::new(grid_n)?;
    let misaligned = |reason: String| AssemblyError::MisalignedBlocks { stage: n, reason };
    let tiling = make_tiling(lambda, n, &grid).map_err(|e| misaligned(e.to_string()))?;
    let tc = tiling.tile_cells();
    let per_side = tiling.per_side();
    let distinct = plan.distinct(n, tiling.count())?;
    let mut local: Vec<Vec<u32>> = Vec::with_capacity(distinct.len());
    for (block, _, _) in &distinct {
        let perm = block
            .map
            .permutation_until(tc, until)
            .map_err(|e| match e {
                BlockError::ResolutionMismatch { .. } => misaligned(e.to_string()),
                other => other.into(),
            })?;
        local.push(perm);
    }
    // tile index -> position in `local`
    let which: Vec<usize> = match plan {
        BlockPlan::Uniform(_) => vec![0; tiling.count()],
        BlockPlan::PerTile { .. } => (0..tiling.count())
            .map(|t| {
                let b = plan.block(n, t).expect("assignment checked");
                distinct
                    .iter()
                    .position(|d| std::ptr::eq(d.0, b))
                    .expect("distinct covers every tile")
            })
            .collect(),
    };
    Ok(par::map_collect(0..grid_n * grid_n, |k| {
        let (i, j) = (k % grid_n, k / grid_n);
        let (tx, ty) = (i / tc, j / tc);
        let l = (j % tc) * tc + i % tc;
        let d = local[which[ty * per_side + tx]][l] as usize;
        ((ty * tc + d / tc) * grid_n + tx * tc + d % tc) as u32
    }))
}

/// Stage-`n` budget: the field `(lambda^n / tau^n) u_0((t - T_n) / tau^n, (x - r) / lambda^n)`
/// in every tile, sampled at `spec.samples` midpoint times.
///
/// Tiles running the same block differ by a translation, so one
/// representative tile per distinct block is sampled and its `p`-th powers
/// are weighted by the number of tiles. For fractional orders this drops the
/// interaction between tiles.
pub fn stage_budget(
    plan: &BlockPlan,
    n: u32,
    lambda: f64,
    tau: f64,
    spec: &BudgetSpec,
) -> Result<Option<SobolevBudget>, AssemblyError> {
    let inv = crate::domain::lambda_reciprocal(lambda)?;
    let per_side = inv.pow(n);
    let tiles = per_side * per_side;
    let distinct = plan.distinct(n, tiles)?;
    if distinct.iter().any(|d| d.0.field.is_none()) {
        return Ok(None);
    }
    let scale = 1.0 / per_side as f64;
    let dilation = tau.powi(n as i32);
    let t0 = Schedule::closed_form(tau, n as usize);
    let p = spec.p;
    let samples = spec.samples.max(1);
    let dt = dilation / samples as f64;
    let mut per_time = Vec::with_capacity(samples);
    let mut integral_cost = 0.0;
    for m in 0..samples {
        let t = t0 + (m as f64 + 0.5) * dt;
        let (mut semi, mut grad) = (0.0, 0.0);
        for (block, count, first) in &distinct {
            let (tx, ty) = (first % per_side, first / per_side);
            let center = [
                -0.5 + (tx as f64 + 0.5) * scale,
                -0.5 + (ty as f64 + 0.5) * scale,
            ];
            let patched = Patched {
                inner: block.field.as_ref().expect("checked above"),
                scale,
                dilation,
                t0,
                center,
            };
            let region = crate::domain::Region {
                x0: center[0] - 0.5 * scale,
                y0: center[1] - 0.5 * scale,
                side: scale,
            };
            let snap = Snapshot::velocity(&patched, &region, spec.cells, t);
            semi += *count as f64 * snapshot_seminorm(&snap, spec.s, p)?.powf(p);
            grad += *count as f64 * grad_lp_norm(&snap, 1, p)?.powf(p);
        }
        per_time.push((t, semi.powf(1.0 / p)));
        integral_cost += grad.powf(1.0 / p) * dt;
    }
    let sup_in_time = per_time.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(Some(SobolevBudget {
        s: spec.s,
        p,
        per_time,
        sup_in_time,
        integral_cost,
    }))
}

/// Runs stage `n`: permutes `rho` tile by tile and, if asked, samples the stage budget.
pub fn patch_stage(
    rho: &TracerField,
    plan: &BlockPlan,
    n: u32,
    lambda: f64,
    tau: f64,
    budget: Option<&BudgetSpec>,
) -> Result<StageEvolution, AssemblyError> {
    let perm = stage_permutation(plan, rho.n(), n, lambda, f64::INFINITY)?;
    let state = rho.pushed_forward(&perm);
    let budget = match budget {
        Some(spec) => stage_budget(plan, n, lambda, tau, spec)?,
        None => None,
    };
    Ok(StageEvolution {
        n,
        perm,
        state,
        budget,
    })
}
