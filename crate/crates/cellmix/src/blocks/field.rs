use serde::{Deserialize, Serialize};

use super::map::MapBlock;
use super::BlockError;
use crate::domain::{Region, TracerField};
use crate::lagrangian::{cell_centers, integrate_flow};
use crate::sobolev::{grad_lp_norm, Snapshot, VelocityField};
use crate::Vec2;

/// Core radius as a fraction of the outer radius: the cutoff ramp spans the
/// outer eighth of the swirl.
pub const CORE_FRACTION: f64 = 7.0 / 8.0;

/// Degree-7 smoothstep, `C^3` at both ends.
fn septic_step(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u.powi(4) * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)))
}

/// Swirl `u(x) = rate * omega(|x - c|) * (x - c)^perp` running at constant
/// angular rate on `[t_start, t_end)`, rigid on the core disc and cut off by
/// a septic ramp between `core_radius` and `outer_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedRotation {
    pub center: Vec2,
    pub outer_radius: f64,
    pub core_radius: f64,
    /// Total angle turned by the core, radians.
    pub angle: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl SmoothedRotation {
    pub fn rate(&self) -> f64 {
        self.angle / (self.t_end - self.t_start)
    }

    /// Radial profile `omega`: 1 on the core, 0 beyond the outer radius.
    pub fn profile(&self, r: f64) -> f64 {
        if r <= self.core_radius {
            1.0
        } else if r >= self.outer_radius {
            0.0
        } else {
            1.0 - septic_step((r - self.core_radius) / (self.outer_radius - self.core_radius))
        }
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end
    }

    /// Velocity of the swirl when active, ignoring the time window.
    pub fn spatial_velocity(&self, x: Vec2) -> Vec2 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if r >= self.outer_radius {
            return [0.0, 0.0];
        }
        let w = self.rate() * self.profile(r);
        [-w * d[1], w * d[0]]
    }

    pub fn in_core(&self, x: Vec2) -> bool {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        (d[0] * d[0] + d[1] * d[1]).sqrt() <= self.core_radius
    }

    pub fn in_support(&self, x: Vec2) -> bool {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        (d[0] * d[0] + d[1] * d[1]).sqrt() < self.outer_radius
    }

    pub fn shifted(&self, by: Vec2) -> Self {
        SmoothedRotation {
            center: [self.center[0] + by[0], self.center[1] + by[1]],
            ..*self
        }
    }

    /// The swirl carried into a square of side `scale` centered at `center`
    /// and onto the time window `[t0, t0 + dilation]`.
    pub fn placed(&self, center: Vec2, scale: f64, t0: f64, dilation: f64) -> Self {
        SmoothedRotation {
            center: [
                center[0] + scale * self.center[0],
                center[1] + scale * self.center[1],
            ],
            outer_radius: scale * self.outer_radius,
            core_radius: scale * self.core_radius,
            angle: self.angle,
            t_start: t0 + dilation * self.t_start,
            t_end: t0 + dilation * self.t_end,
        }
    }
}

/// Swirls sharing one time window, bucketed on a uniform grid over `Q`.
#[derive(Debug, Clone)]
struct Slot {
    t_start: f64,
    t_end: f64,
    per_side: usize,
    buckets: Vec<Vec<u32>>,
}

impl Slot {
    fn bucket(&self, v: f64) -> usize {
        (((v + 0.5) * self.per_side as f64).floor().max(0.0) as usize).min(self.per_side - 1)
    }
}

fn build_slots(primitives: &[SmoothedRotation]) -> Vec<Slot> {
    let mut slots: Vec<Slot> = Vec::new();
    let mut members: Vec<Vec<u32>> = Vec::new();
    for (k, p) in primitives.iter().enumerate() {
        match slots
            .iter()
            .position(|s| s.t_start == p.t_start && s.t_end == p.t_end)
        {
            Some(i) => members[i].push(k as u32),
            None => {
                slots.push(Slot {
                    t_start: p.t_start,
                    t_end: p.t_end,
                    per_side: 1,
                    buckets: Vec::new(),
                });
                members.push(vec![k as u32]);
            }
        }
    }
    for (slot, ids) in slots.iter_mut().zip(members) {
        let widest = ids
            .iter()
            .map(|&k| primitives[k as usize].outer_radius)
            .fold(0.0, f64::max);
        slot.per_side = ((0.5 / widest.max(1e-9)).floor() as usize).clamp(1, 1024);
        slot.buckets = vec![Vec::new(); slot.per_side * slot.per_side];
        for k in ids {
            let p = &primitives[k as usize];
            let (i0, i1) = (
                slot.bucket(p.center[0] - p.outer_radius),
                slot.bucket(p.center[0] + p.outer_radius),
            );
            let (j0, j1) = (
                slot.bucket(p.center[1] - p.outer_radius),
                slot.bucket(p.center[1] + p.outer_radius),
            );
            for j in j0..=j1 {
                for i in i0..=i1 {
                    slot.buckets[j * slot.per_side + i].push(k);
                }
            }
        }
    }
    slots
}

/// Smooth field of a building block on `[0, 1]`: a sequence of swirls.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "FieldBlockRepr", into = "FieldBlockRepr")]
pub struct FieldBlock {
    primitives: Vec<SmoothedRotation>,
    slots: Vec<Slot>,
}

#[derive(Serialize, Deserialize)]
struct FieldBlockRepr {
    primitives: Vec<SmoothedRotation>,
}

impl From<FieldBlockRepr> for FieldBlock {
    fn from(r: FieldBlockRepr) -> Self {
        FieldBlock::new(r.primitives)
    }
}

impl From<FieldBlock> for FieldBlockRepr {
    fn from(f: FieldBlock) -> Self {
        FieldBlockRepr {
            primitives: f.primitives,
        }
    }
}

impl PartialEq for FieldBlock {
    fn eq(&self, other: &Self) -> bool {
        self.primitives == other.primitives
    }
}

impl FieldBlock {
    pub fn new(primitives: Vec<SmoothedRotation>) -> Self {
        let slots = build_slots(&primitives);
        FieldBlock { primitives, slots }
    }

    pub fn primitives(&self) -> &[SmoothedRotation] {
        &self.primitives
    }

    /// One swirl per move: centered on the move's square, outer radius the
    /// square's inscribed radius, core `CORE_FRACTION` of it, same angle and
    /// time window.
    pub fn from_map(map: &MapBlock) -> Result<Self, BlockError> {
        let mut primitives = Vec::with_capacity(map.moves().len());
        for m in map.moves() {
            let outer = 0.5 * m.size;
            let reach = m.center[0].abs().max(m.center[1].abs()) + outer;
            if reach > 0.5 + 1e-12 {
                return Err(BlockError::RealizationInfeasible(format!(
                    "swirl of radius {outer} at {:?} leaves Q",
                    m.center
                )));
            }
            primitives.push(SmoothedRotation {
                center: m.center,
                outer_radius: outer,
                core_radius: CORE_FRACTION * outer,
                angle: m.angle,
                t_start: m.t_start,
                t_end: m.t_end,
            });
        }
        Ok(FieldBlock::new(primitives))
    }

    /// The same block with every swirl moved by `by`.
    pub fn shifted(&self, by: Vec2) -> Self {
        FieldBlock::new(self.primitives.iter().map(|p| p.shifted(by)).collect())
    }

    /// Field counterpart of [`MapBlock::nested`].
    pub fn nested(
        &self,
        levels: u32,
        inv_lambda: usize,
        tau: f64,
    ) -> Result<FieldBlock, BlockError> {
        if levels == 0 || inv_lambda < 2 || !(tau > 0.0) {
            return Err(BlockError::InvalidMove(format!(
                "nested block needs levels >= 1, 1/lambda >= 2, tau > 0 (got {levels}, {inv_lambda}, {tau})"
            )));
        }
        let total: f64 = (0..levels).map(|m| tau.powi(m as i32)).sum();
        let mut primitives = Vec::new();
        let mut t0 = 0.0;
        for m in 0..levels {
            let per_side = inv_lambda.pow(m);
            let scale = 1.0 / per_side as f64;
            let dilation = tau.powi(m as i32) / total;
            for ty in 0..per_side {
                for tx in 0..per_side {
                    let center = [
                        -0.5 + (tx as f64 + 0.5) * scale,
                        -0.5 + (ty as f64 + 0.5) * scale,
                    ];
                    primitives.extend(
                        self.primitives
                            .iter()
                            .map(|p| p.placed(center, scale, t0, dilation)),
                    );
                }
            }
            t0 += dilation;
        }
        Ok(FieldBlock::new(primitives))
    }

    /// Upper bound on the speed: `|rate| * outer_radius` of the fastest swirl.
    pub fn speed_bound(&self) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.rate().abs() * p.outer_radius)
            .fold(0.0, f64::max)
    }

    /// RK4 steps per unit time keeping every step below `cfl` cells of an
    /// `n`-cell grid, and at least `min_steps`.
    pub fn cfl_steps(&self, n: usize, cfl: f64, min_steps: usize) -> usize {
        let need = (self.speed_bound() * n as f64 / cfl).ceil() as usize;
        need.max(min_steps)
    }

    /// Whether `x` lies in the core of some swirl and in no swirl's ramp.
    pub fn in_cores(&self, x: Vec2) -> bool {
        let mut core = false;
        for p in &self.primitives {
            if p.in_core(x) {
                core = true;
            } else if p.in_support(x) {
                return false;
            }
        }
        core
    }
}

impl VelocityField for FieldBlock {
    fn velocity(&self, t: f64, x: Vec2) -> Vec2 {
        let mut v = [0.0, 0.0];
        for slot in self.slots.iter().filter(|s| t >= s.t_start && t < s.t_end) {
            let b = slot.bucket(x[1]) * slot.per_side + slot.bucket(x[0]);
            for &k in &slot.buckets[b] {
                let w = self.primitives[k as usize].spatial_velocity(x);
                v[0] += w[0];
                v[1] += w[1];
            }
        }
        v
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .primitives
            .iter()
            .flat_map(|p| [p.t_start, p.t_end])
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// A field realization of a map block with its measured mismatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub field: FieldBlock,
    /// Fraction of cells where the advected tracer differs from the permuted one.
    pub discrepancy: f64,
    /// The same fraction restricted to cells in swirl cores.
    pub core_discrepancy: f64,
}

/// Realizes `map` by swirls and compares, on the grid of `rho0`, the tracer
/// advected by the field (backward characteristics with `steps` RK4 steps
/// per unit time, raised if needed to keep steps under half a cell, and
/// nearest-cell lookup) with the tracer permuted by the map.
pub fn realize_block(
    map: &MapBlock,
    rho0: &TracerField,
    steps: usize,
) -> Result<Realization, BlockError> {
    let field = FieldBlock::from_map(map)?;
    let n = rho0.n();
    let steps = field.cfl_steps(n, 0.5, steps);
    let grid = *rho0.grid();
    let permuted = map.apply(rho0)?;
    let centers = cell_centers(n);
    let flow = integrate_flow(&field, &centers, 1.0, 0.0, steps, 1.0 / n as f64)
        .map_err(|e| BlockError::Flow(e.to_string()))?;
    let mut wrong = 0usize;
    let mut core_cells = 0usize;
    let mut core_wrong = 0usize;
    for (k, y) in flow.end.iter().enumerate() {
        let (i, j) = grid.locate_clamped(*y);
        let differs = rho0.at(i, j) != permuted.values()[k];
        wrong += differs as usize;
        if field.in_cores(centers[k]) {
            core_cells += 1;
            core_wrong += differs as usize;
        }
    }
    Ok(Realization {
        field,
        discrepancy: wrong as f64 / (n * n) as f64,
        core_discrepancy: if core_cells == 0 {
            0.0
        } else {
            core_wrong as f64 / core_cells as f64
        },
    })
}

/// `int_0^1 ||grad u(t)||_{L^p} dt` by the midpoint rule with `samples`
/// times, each snapshot on an `n`-cell grid of `Q`.
pub fn block_cost(
    field: &dyn VelocityField,
    p: f64,
    n: usize,
    samples: usize,
) -> Result<f64, BlockError> {
    let (t0, t1) = field.interval();
    let dt = (t1 - t0) / samples as f64;
    let mut cost = 0.0;
    for m in 0..samples {
        let t = t0 + (m as f64 + 0.5) * dt;
        cost += grad_lp_norm(&Snapshot::velocity(field, &Region::unit(), n, t), 1, p)? * dt;
    }
    Ok(cost)
}

/// Richardson extrapolation of [`block_cost`] from `n` and `2n` cells,
/// removing the second-order discretization error of the gradient.
pub fn block_cost_extrapolated(
    field: &dyn VelocityField,
    p: f64,
    n: usize,
    samples: usize,
) -> Result<f64, BlockError> {
    let coarse = block_cost(field, p, n, samples)?;
    let fine = block_cost(field, p, 2 * n, samples)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
