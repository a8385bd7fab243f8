use serde::Serialize;

use super::flow::{lattice_points, rk4_path};
use super::LagrangianError;
use crate::assembly::{stage_permutation, CellularEvolution};
use crate::diagnostics::{geometric_mixing_scale, h_minus1_duality_lower_bound};
use crate::domain::{make_binary_tracer, CellMask, Grid, TracerField};
use crate::par;
use crate::sobolev::VelocityField;
use crate::Vec2;

/// Segments between consecutive breakpoints of `field` in `[t0, t1]`, each
/// with `steps` RK4 steps regardless of its length.
fn fixed_segments(
    field: &dyn VelocityField,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Vec<(f64, f64, usize)> {
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
        .map(|w| (w[0], w[1], steps.max(1)))
        .collect()
}

/// `max_k max_{t <= s <= horizon} |X_k(s) - X_k(t)|` over the particles,
/// trajectories sampled at every RK4 step.
pub fn trapping_radius(
    field: &dyn VelocityField,
    particles: &[Vec2],
    t: f64,
    horizon: f64,
    steps_per_segment: usize,
) -> Result<f64, LagrangianError> {
    if !(horizon > t) {
        return Err(LagrangianError::HorizonTooShort { t, horizon });
    }
    let segs = fixed_segments(field, t, horizon, steps_per_segment);
    Ok(par::max(0..particles.len(), |k| {
        let x0 = particles[k];
        let mut worst = 0.0f64;
        rk4_path(field, x0, &segs, |x, _| {
            worst = worst.max((x[0] - x0[0]).hypot(x[1] - x0[1]));
        });
        worst
    })
    .max(0.0))
}

/// Trapping radius of a cellular evolution at one time, with the bound of its stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrappingReport {
    pub t: f64,
    pub stage: usize,
    pub radius: f64,
    /// `sqrt 2 lambda^n`, the diameter of a stage-`n` tile.
    pub bound: f64,
    /// End of the last stage; motion beyond it is not followed.
    pub horizon: f64,
}

impl TrappingReport {
    pub fn holds(&self) -> bool {
        self.radius <= self.bound
    }
}

/// Trapping radius of the assembled field at time `t` over `particles^2`
/// lattice points, followed up to the end of the last stage.
pub fn cellular_trapping(
    evolution: &CellularEvolution,
    t: f64,
    particles: usize,
    steps_per_segment: usize,
) -> Result<TrappingReport, LagrangianError> {
    let field = evolution
        .field()
        .ok_or_else(|| LagrangianError::WitnessNotFound("evolution has no field layer".into()))?;
    let horizon = field.interval().1;
    let stage = field
        .stage_at(t)
        .ok_or(LagrangianError::HorizonTooShort { t, horizon })?;
    let radius = trapping_radius(
        &field,
        &lattice_points(particles * particles),
        t,
        horizon,
        steps_per_segment,
    )?;
    Ok(TrappingReport {
        t,
        stage,
        radius,
        bound: std::f64::consts::SQRT_2 * evolution.lambda().powi(stage as i32),
        horizon,
    })
}

/// Largest trapping radius allowed at the counterexample time.
pub const TRAPPING_THRESHOLD: f64 = 0.01;
/// Center of the ball kept monochrome: the middle of the lower half of `Q`.
pub const COUNTEREXAMPLE_CENTER: Vec2 = [0.0, -0.25];
pub const COUNTEREXAMPLE_RADIUS: f64 = 0.125;

/// One sampled time after `t*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleSample {
    pub t: f64,
    /// Every cell center strictly inside the ball carries the value 1.
    pub monochrome: bool,
    pub duality_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub t_star: f64,
    pub stage: usize,
    /// Cellular guarantee `sqrt 2 lambda^n` and the measured trapping radius, if a field exists.
    pub trapping_bound: f64,
    pub trapping_radius: Option<f64>,
    /// The tracer at `t*` is exactly the lower/upper half split.
    pub split_at_t_star: bool,
    pub samples: Vec<CounterexampleSample>,
    /// Every sample monochrome, hence `G >= 1/8` at every sampled time.
    pub all_monochrome: bool,
    pub min_duality_bound: f64,
    /// Geometric scale of the first and last samples, on a grid coarsened to at most 256 cells.
    pub coarse_geometric: Vec<(f64, f64)>,
}

/// Block average of `rho` onto a grid of `m` cells per side.
fn coarsen(rho: &TracerField, m: usize) -> Result<TracerField, LagrangianError> {
    let n = rho.n();
    if m >= n {
        return Ok(rho.clone());
    }
    let f = n / m;
    let mut values = vec![0.0; m * m];
    for j in 0..n {
        for i in 0..n {
            values[(j / f) * m + i / f] += rho.at(i, j);
        }
    }
    let w = 1.0 / (f * f) as f64;
    values.iter_mut().for_each(|v| *v *= w);
    Ok(TracerField::new(Grid::new(m)?, values)?)
}

fn monochrome(rho: &TracerField) -> bool {
    let g = rho.grid();
    let n = g.n();
    let (c, r) = (COUNTEREXAMPLE_CENTER, COUNTEREXAMPLE_RADIUS);
    (0..n * n).all(|k| {
        let (x, y) = (g.center(k % n), g.center(k / n));
        (x - c[0]).hypot(y - c[1]) >= r || rho.values()[k] == 1.0
    })
}

/// The tracer that the evolution maps to the lower/upper half split at the
/// stage time `t* = T_n`, and the check that the ball `B((0, -1/4), 1/8)`
/// stays filled with `1` at every later move boundary.
pub fn universality_counterexample(
    evolution: &CellularEvolution,
    stage: usize,
    particles: usize,
) -> Result<(TracerField, CounterexampleReport), LagrangianError> {
    if stage >= evolution.n_stages() {
        return Err(LagrangianError::HorizonTooShort {
            t: evolution.schedule.t(stage.min(evolution.schedule.n_max())),
            horizon: evolution.schedule.t(evolution.n_stages()),
        });
    }
    let t_star = evolution.schedule.t(stage);
    let trapping_bound = std::f64::consts::SQRT_2 * evolution.lambda().powi(stage as i32);
    let trapping_radius = match evolution.field() {
        Some(_) => Some(cellular_trapping(evolution, t_star, particles, 64)?.radius),
        None => None,
    };
    let measured = trapping_radius.unwrap_or(trapping_bound);
    if trapping_bound > TRAPPING_THRESHOLD || measured > TRAPPING_THRESHOLD {
        return Err(LagrangianError::TrappingNotReached {
            t: t_star,
            radius: measured.max(trapping_bound),
        });
    }
    let grid = *evolution.state(0).grid();
    let n = grid.n();
    let lower = make_binary_tracer(&CellMask::from_fn(grid, |_, j| j < n / 2), &grid)?;
    // rho0[k] = split[P[k]], P the destination of cell k at t*
    let dest = evolution.composite_permutation(stage);
    let mut back = vec![0u32; dest.len()];
    for (k, &d) in dest.iter().enumerate() {
        back[d as usize] = k as u32;
    }
    let rho0 = lower.pushed_forward(&back);
    let mut rho = rho0.pushed_forward(&dest);
    let split_at_t_star = rho.values() == lower.values();

    let kappa = evolution.params.kappa;
    let mut samples = Vec::new();
    let mut sample = |t: f64, rho: &TracerField| -> Result<(), LagrangianError> {
        let duality_bound =
            h_minus1_duality_lower_bound(rho, COUNTEREXAMPLE_CENTER, COUNTEREXAMPLE_RADIUS, kappa)
                .unwrap_or(0.0);
        samples.push(CounterexampleSample {
            t,
            monochrome: monochrome(rho),
            duality_bound,
        });
        Ok(())
    };
    sample(t_star, &rho)?;
    let mut first_coarse = None;
    for m in stage..evolution.n_stages() {
        let t0 = evolution.schedule.t(m);
        let dilation = evolution.tau().powi(m as i32);
        let events = match &evolution.plan {
            crate::assembly::BlockPlan::Uniform(b) => b.map.event_times(),
            crate::assembly::BlockPlan::PerTile { blocks, .. } => {
                let mut t: Vec<f64> = blocks.iter().flat_map(|b| b.map.event_times()).collect();
                t.sort_by(f64::total_cmp);
                t.dedup();
                t
            }
        };
        for &f in events.iter().filter(|&&f| f > 0.0 && f < 1.0) {
            let perm = stage_permutation(&evolution.plan, n, m as u32, evolution.lambda(), f)?;
            sample(t0 + f * dilation, &rho.pushed_forward(&perm))?;
        }
        rho = rho.pushed_forward(&evolution.perms[m]);
        sample(evolution.schedule.t(m + 1), &rho)?;
        if first_coarse.is_none() {
            first_coarse = Some(coarsen(&rho, 256)?);
        }
    }
    let mut coarse_geometric = Vec::new();
    if let Some(c) = first_coarse {
        coarse_geometric.push((
            evolution.schedule.t(stage + 1),
            geometric_mixing_scale(&c, kappa)?.value,
        ));
    }
    let last = coarsen(&rho, 256)?;
    coarse_geometric.push((
        evolution.schedule.t(evolution.n_stages()),
        geometric_mixing_scale(&last, kappa)?.value,
    ));

    let all_monochrome = samples.iter().all(|s| s.monochrome);
    let min_duality_bound = samples
        .iter()
        .map(|s| s.duality_bound)
        .fold(f64::INFINITY, f64::min);
    Ok((
        rho0,
        CounterexampleReport {
            t_star,
            stage,
            trapping_bound,
            trapping_radius,
            split_at_t_star,
            samples,
            all_monochrome,
            min_duality_bound,
            coarse_geometric,
        },
    ))
}
