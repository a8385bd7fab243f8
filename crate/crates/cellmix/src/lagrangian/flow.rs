use super::LagrangianError;
use crate::domain::Grid;
use crate::par;
use crate::sobolev::VelocityField;
use crate::Vec2;

/// Bins per side of the occupancy histogram.
const OCCUPANCY_BINS: usize = 16;
/// Every this many particles is re-integrated at half step for the error estimate.
const ERROR_STRIDE: usize = 61;

/// Positions of particles at two times of a flow.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FlowMap {
    pub start: Vec<Vec2>,
    pub end: Vec<Vec2>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    /// Step-doubling estimate of the global time-stepping error on a particle subset.
    pub max_step_error: f64,
    /// `sum |H_end - H_start| / sum H_start` over a 16 x 16 histogram of `Q`.
    pub occupancy_deviation: f64,
}

impl FlowMap {
    /// A flow map given directly by positions, e.g. a linear map.
    pub fn from_positions(start: Vec<Vec2>, end: Vec<Vec2>) -> Self {
        let occupancy_deviation = occupancy_deviation(&start, &end);
        FlowMap {
            start,
            end,
            t0: 0.0,
            t1: 1.0,
            steps: 0,
            max_step_error: 0.0,
            occupancy_deviation,
        }
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }
}

/// Centers of the cells of an `n`-cell grid, row-major.
pub fn cell_centers(n: usize) -> Vec<Vec2> {
    let grid = Grid::new(n.max(1)).expect("valid size");
    (0..n * n)
        .map(|k| [grid.center(k % n), grid.center(k / n)])
        .collect()
}

/// `count` points of a rank-1 lattice with golden-ratio slope, free of the
/// dyadic alignment with tile centers that a grid of cell centers has.
pub fn lattice_points(count: usize) -> Vec<Vec2> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|k| {
            [
                -0.5 + (k as f64 + 0.5) / count as f64,
                -0.5 + (k as f64 * golden + 0.25).fract(),
            ]
        })
        .collect()
}

/// Time segments between `t0` and `t1` split at the field's breakpoints, with
/// RK4 step counts proportional to their length (`steps` per unit time).
pub(crate) fn segments(
    field: &dyn VelocityField,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Vec<(f64, f64, usize)> {
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let mut cuts = vec![lo];
    let mut bps: Vec<f64> = field
        .breakpoints()
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .collect();
    bps.sort_by(f64::total_cmp);
    cuts.extend(bps);
    cuts.push(hi);
    cuts.dedup();
    let mut segs: Vec<(f64, f64, usize)> = cuts
        .windows(2)
        .map(|w| {
            let k = ((w[1] - w[0]) * steps as f64).ceil().max(1.0) as usize;
            (w[0], w[1], k)
        })
        .collect();
    if t0 > t1 {
        segs.reverse();
        for s in &mut segs {
            *s = (s.1, s.0, s.2);
        }
    }
    segs
}

/// Classical RK4 along the given segments. Evaluation times are kept strictly
/// inside each segment so that piecewise fields are sampled on the right side
/// of their jumps. `visit` sees every intermediate position.
pub(crate) fn rk4_path(
    field: &dyn VelocityField,
    mut x: Vec2,
    segs: &[(f64, f64, usize)],
    mut visit: impl FnMut(Vec2, f64),
) -> Vec2 {
    for &(a, b, k) in segs {
        let dt = (b - a) / k as f64;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let eps = 1e-12 * (hi - lo).max(1e-300);
        let vel = |t: f64, p: Vec2| field.velocity(t.clamp(lo + eps, hi - eps), p);
        for m in 0..k {
            let t = a + m as f64 * dt;
            let k1 = vel(t, x);
            let k2 = vel(
                t + 0.5 * dt,
                [x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]],
            );
            let k3 = vel(
                t + 0.5 * dt,
                [x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]],
            );
            let k4 = vel(t + dt, [x[0] + dt * k3[0], x[1] + dt * k3[1]]);
            x = [
                x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            visit(x, t + dt);
        }
    }
    x
}

fn histogram(points: &[Vec2]) -> Vec<usize> {
    let grid = Grid::new(OCCUPANCY_BINS).expect("valid size");
    let mut h = vec![0usize; grid.cells()];
    for p in points {
        let (i, j) = grid.locate_clamped(*p);
        h[grid.index(i, j)] += 1;
    }
    h
}

/// Relative L^1 distance between the occupancy histograms of two point sets.
pub fn occupancy_deviation(start: &[Vec2], end: &[Vec2]) -> f64 {
    if start.is_empty() {
        return 0.0;
    }
    let a = histogram(start);
    let b = histogram(end);
    let diff: usize = a.iter().zip(&b).map(|(x, y)| x.abs_diff(*y)).sum();
    diff as f64 / start.len() as f64
}

/// Integrates `x' = u(t, x)` from `t0` to `t1` (either direction) with RK4,
/// `steps` steps per unit time, the field evaluated analytically.
///
/// Fails with `CflViolation` when some particle moves more than `cell` in one step.
pub fn integrate_flow(
    field: &dyn VelocityField,
    particles: &[Vec2],
    t0: f64,
    t1: f64,
    steps: usize,
    cell: f64,
) -> Result<FlowMap, LagrangianError> {
    let steps = steps.max(1);
    let segs = segments(field, t0, t1, steps);
    let results = par::map_collect(0..particles.len(), |k| {
        let mut prev = particles[k];
        let mut worst = 0.0f64;
        let end = rk4_path(field, particles[k], &segs, |x, _| {
            worst = worst.max((x[0] - prev[0]).hypot(x[1] - prev[1]));
            prev = x;
        });
        (end, worst)
    });
    let max_disp = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_disp > cell {
        return Err(LagrangianError::CflViolation {
            displacement: max_disp,
            cell,
        });
    }
    let end: Vec<Vec2> = results.into_iter().map(|r| r.0).collect();
    let fine = segments(field, t0, t1, 2 * steps);
    let probes: Vec<usize> = (0..particles.len()).step_by(ERROR_STRIDE).collect();
    let max_step_error = par::max(0..probes.len(), |m| {
        let k = probes[m];
        let x = rk4_path(field, particles[k], &fine, |_, _| {});
        // RK4 halves its error 16-fold per halving of the step
        (x[0] - end[k][0]).hypot(x[1] - end[k][1]) * 16.0 / 15.0
    })
    .max(0.0);
    let occupancy_deviation = occupancy_deviation(particles, &end);
    Ok(FlowMap {
        start: particles.to_vec(),
        end,
        t0,
        t1,
        steps,
        max_step_error,
        occupancy_deviation,
    })
}

/// [`integrate_flow`] with the step count doubled, up to `2^16` steps per
/// unit time, until no particle crosses a cell in one step.
pub fn integrate_flow_adaptive(
    field: &dyn VelocityField,
    particles: &[Vec2],
    t0: f64,
    t1: f64,
    steps: usize,
    cell: f64,
) -> Result<FlowMap, LagrangianError> {
    let mut steps = steps.max(1);
    loop {
        match integrate_flow(field, particles, t0, t1, steps, cell) {
            Err(LagrangianError::CflViolation { .. }) if steps < 1 << 16 => steps *= 2,
            other => return other,
        }
    }
}
