use serde::Serialize;

use super::flow::{cell_centers, integrate_flow_adaptive, FlowMap};
use super::stretch::{grid_pairs, restricted_lipschitz_curve, StretchStatistics, CROSS_PAIRS};
use super::LagrangianError;
use crate::assembly::{stage_budget, BlockPlan, BudgetSpec};
use crate::blocks::{block_cost, validate_block, Block, Clause, Layer};
use crate::diagnostics::characteristic_length_scale;
use crate::domain::{lambda_reciprocal, patterns, BlockParams, CellMask, Grid};
use crate::Vec2;

/// A block of the family together with the tiling it mixes at time 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub block: Block,
    pub lambda: f64,
    /// For a block made of `levels` nested stages of `base`: `(base, base lambda, levels, tau)`.
    /// Its cost is then measured stage by stage at the stage's own scale.
    pub nested: Option<(Block, f64, u32, f64)>,
}

/// Members `levels` of the self-similar family: the reference block nested
/// `l` times mixes `T_{2^-l}` at time 1.
pub fn reference_family(
    levels: impl IntoIterator<Item = u32>,
    tau: f64,
) -> Result<Vec<FamilyMember>, LagrangianError> {
    let base = Block::reference();
    let field = base.field.as_ref().expect("reference block has a field");
    levels
        .into_iter()
        .map(|l| {
            Ok(FamilyMember {
                block: Block {
                    id: format!("reference-l{l}"),
                    map: base.map.nested(l, 2, tau)?,
                    field: Some(field.nested(l, 2, tau)?),
                },
                lambda: 0.5f64.powi(l as i32),
                nested: Some((base.clone(), 0.5, l, tau)),
            })
        })
        .collect()
}

/// Knobs of the minimal-cost experiment.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct MincostConfig {
    /// Particles per side, one per cell center at time 1.
    pub particles: usize,
    /// Initial RK4 steps per unit time; doubled until the CFL condition holds.
    pub steps: usize,
    pub etas: Vec<f64>,
    /// Cap on sampled intra-tile pairs.
    pub intra_budget: usize,
    pub cross_pairs: usize,
    pub seed: u64,
    /// Cells per tile side of the cost snapshots (Richardson with twice as many).
    pub cost_cells: usize,
    pub cost_samples: usize,
}

impl Default for MincostConfig {
    fn default() -> Self {
        MincostConfig {
            particles: 128,
            steps: 1024,
            etas: vec![0.01, 0.05, 0.1],
            intra_budget: 4_000_000,
            cross_pairs: CROSS_PAIRS,
            seed: 7,
            cost_cells: 512,
            cost_samples: 2,
        }
    }
}

/// The stretch witness of the minimal-cost argument for one member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    /// Ball entirely inside `A`.
    pub ball_center: Vec2,
    pub ball_radius: f64,
    /// Exceptional measure the retained points were taken off.
    pub eta: f64,
    /// Final tiles holding retained images of both `A cap B(c, r/2)` and `A^c`.
    pub tiles_found: usize,
    /// Smallest stretch of `Phi^{-1}` over all witness pairs in those tiles.
    pub witness_stretch: f64,
    pub max_witness_stretch: f64,
    /// `(r/2) / (sqrt 2 lambda)`, what the geometry guarantees.
    pub guaranteed: f64,
    /// `lambda <= 3a / (16 sqrt 2)`: the guarantee is at least 2.
    pub compliant: bool,
    /// LS ball radius `r`, inner radius `sigma` with `|B(sigma)| = (3 + s_bar)/4 |B(r)|`,
    /// and whether `lambda < (r - sigma) / (2 sqrt 2)`.
    pub ls_radius: f64,
    pub sigma: f64,
    pub fine_guard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    pub block_id: String,
    pub lambda: f64,
    pub valid: bool,
    pub violations: Vec<Clause>,
    /// `int_0^1 ||grad u||_{L^p} dt`.
    pub cost: f64,
    /// `int_0^1 ||grad u||_{L^inf} dt`, bounding `log Lip(Phi^{-1})` by Gronwall.
    pub cost_inf: f64,
    pub stretch: Vec<StretchStatistics>,
    pub witness: Option<WitnessReport>,
    pub max_step_error: f64,
    pub occupancy_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MincostReport {
    pub p: f64,
    pub members: Vec<MemberReport>,
    /// Smallest cost over valid members.
    pub min_cost: f64,
    /// `max log(Lip) eta^{1/p} / cost` over valid members and measures.
    pub c_emp: f64,
    /// Per valid member: its largest ratio over the constant fitted without it.
    pub leave_one_out: Vec<(String, f64)>,
}

fn member_cost(
    member: &FamilyMember,
    params: &BlockParams,
    config: &MincostConfig,
) -> Result<(f64, f64), LagrangianError> {
    let field = member.block.field.as_ref().ok_or_else(|| {
        LagrangianError::WitnessNotFound(format!("{} has no field", member.block.id))
    })?;
    let samples = config.cost_samples.max(1);
    match &member.nested {
        Some((base, base_lambda, levels, tau)) => {
            let plan = BlockPlan::Uniform(base.clone());
            let spec = |cells| BudgetSpec {
                s: 1.0,
                p: params.p,
                cells,
                samples,
            };
            let mut cost = 0.0;
            for m in 0..*levels {
                let coarse = stage_budget(&plan, m, *base_lambda, *tau, &spec(config.cost_cells))?
                    .map_or(0.0, |b| b.integral_cost);
                let fine =
                    stage_budget(&plan, m, *base_lambda, *tau, &spec(2 * config.cost_cells))?
                        .map_or(0.0, |b| b.integral_cost);
                cost += (4.0 * fine - coarse) / 3.0;
            }
            // every stage carries the same sup-norm cost
            let base_field = base.field.as_ref().expect("nested base has a field");
            let cost_inf =
                *levels as f64 * block_cost(base_field, f64::INFINITY, config.cost_cells, samples)?;
            Ok((cost, cost_inf))
        }
        None => {
            let coarse = block_cost(field, params.p, config.cost_cells, samples)?;
            let fine = block_cost(field, params.p, 2 * config.cost_cells, samples)?;
            let cost_inf = block_cost(field, f64::INFINITY, config.cost_cells, samples)?;
            Ok(((4.0 * fine - coarse) / 3.0, cost_inf))
        }
    }
}

/// Looks for final tiles of `T_lambda` holding retained points `x`, `y` with
/// `Phi^{-1}(x) in A cap B(c, r/2)` and `Phi^{-1}(y) in A^c`.
fn find_witness(
    inverse: &FlowMap,
    in_a: &CellMask,
    full_ball: (Vec2, f64),
    stats: &StretchStatistics,
    lambda: f64,
    params: &BlockParams,
    ls_radius: f64,
) -> WitnessReport {
    let grid = *in_a.grid();
    let n = grid.n();
    let (c, r) = full_ball;
    let mut removed = vec![false; inverse.len()];
    for &k in &stats.exceptional {
        removed[k as usize] = true;
    }
    let per_side = (1.0 / lambda).round() as usize;
    let tc = n / per_side;
    let in_set = |x: Vec2| {
        let (i, j) = grid.locate_clamped(x);
        in_a.get(i, j)
    };
    let (mut found, mut lo, mut hi) = (0usize, f64::INFINITY, 0.0f64);
    for ty in 0..per_side {
        for tx in 0..per_side {
            let mut inner = Vec::new();
            let mut outer = Vec::new();
            for j in ty * tc..(ty + 1) * tc {
                for i in tx * tc..(tx + 1) * tc {
                    let k = j * n + i;
                    if removed[k] {
                        continue;
                    }
                    let x = inverse.end[k];
                    if !in_set(x) {
                        outer.push(k);
                    } else if (x[0] - c[0]).hypot(x[1] - c[1]) < 0.5 * r {
                        inner.push(k);
                    }
                }
            }
            if inner.is_empty() || outer.is_empty() {
                continue;
            }
            found += 1;
            for &a in &inner {
                for &b in &outer {
                    let (ya, yb) = (inverse.start[a], inverse.start[b]);
                    let (xa, xb) = (inverse.end[a], inverse.end[b]);
                    let s =
                        (xa[0] - xb[0]).hypot(xa[1] - xb[1]) / (ya[0] - yb[0]).hypot(ya[1] - yb[1]);
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
        }
    }
    let sigma = ls_radius * (0.25 * (3.0 + params.s_bar)).sqrt();
    WitnessReport {
        ball_center: c,
        ball_radius: r,
        eta: stats.eta,
        tiles_found: found,
        witness_stretch: if found > 0 { lo } else { f64::NAN },
        max_witness_stretch: hi,
        guaranteed: 0.5 * r / (std::f64::consts::SQRT_2 * lambda),
        compliant: lambda <= 3.0 * params.a / (16.0 * std::f64::consts::SQRT_2),
        ls_radius,
        sigma,
        fine_guard: lambda < (ls_radius - sigma) / (2.0 * std::f64::consts::SQRT_2),
    }
}

/// Measures cost, restricted Lipschitz constants of `Phi^{-1}` and the stretch
/// witness for every member, with the left half of `Q` as the initial set.
///
/// Members failing map-layer validation are reported but left out of the
/// minimum and of the fitted constant.
pub fn mincost_experiment(
    family: &[FamilyMember],
    params: &BlockParams,
    config: &MincostConfig,
) -> Result<MincostReport, LagrangianError> {
    params
        .validate()
        .map_err(LagrangianError::WitnessNotFound)?;
    let n = config.particles;
    let grid = Grid::new(n)?;
    let rho0 = patterns::half_split(grid)?;
    let in_a = patterns::left_half(grid);
    let ls = characteristic_length_scale(
        &in_a,
        &crate::domain::Region::unit(),
        params.kappa,
        params.s_bar,
    )?;
    // a ball entirely inside A: the fill threshold is pushed to 1
    let full =
        characteristic_length_scale(&in_a, &crate::domain::Region::unit(), params.kappa, 1e-12)?;
    let full_ball = (full.witness_ball.center, full.witness_ball.radius);
    let witness_eta = 0.25 * (1.0 - params.s_bar) * std::f64::consts::PI * ls.ls * ls.ls;
    let mut etas = config.etas.clone();
    etas.push(witness_eta);

    let mut members = Vec::with_capacity(family.len());
    for member in family {
        let mut member_params = *params;
        member_params.lambda = member.lambda;
        let report = validate_block(&member.block.map, None, &rho0, &member_params, Layer::Map)?;
        let (cost, cost_inf) = member_cost(member, params, config)?;
        let field = member
            .block
            .field
            .as_ref()
            .expect("member_cost checked the field");
        let inverse = integrate_flow_adaptive(
            field,
            &cell_centers(n),
            1.0,
            0.0,
            config.steps,
            1.0 / n as f64,
        )?;
        let inv = lambda_reciprocal(member.lambda)?;
        let pairs = grid_pairs(n, inv, config.intra_budget, config.cross_pairs, config.seed);
        let mut curve = restricted_lipschitz_curve(&inverse, &etas, &pairs)?;
        let witness_stats = curve.pop().expect("witness measure appended");
        let witness = find_witness(
            &inverse,
            &in_a,
            full_ball,
            &witness_stats,
            member.lambda,
            params,
            ls.ls,
        );
        members.push(MemberReport {
            block_id: member.block.id.clone(),
            lambda: member.lambda,
            valid: report.passed(),
            violations: report.violations,
            cost,
            cost_inf,
            stretch: curve,
            witness: Some(witness),
            max_step_error: inverse.max_step_error,
            occupancy_deviation: inverse.occupancy_deviation,
        });
    }

    let ratio = |m: &MemberReport| {
        m.stretch
            .iter()
            .map(|s| s.lip.max(f64::MIN_POSITIVE).ln() * s.eta.powf(1.0 / params.p) / m.cost)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let valid: Vec<&MemberReport> = members.iter().filter(|m| m.valid).collect();
    let min_cost = valid.iter().map(|m| m.cost).fold(f64::INFINITY, f64::min);
    let c_emp = valid
        .iter()
        .map(|m| ratio(m))
        .fold(f64::NEG_INFINITY, f64::max);
    let leave_one_out = valid
        .iter()
        .enumerate()
        .filter(|_| valid.len() > 1)
        .map(|(k, m)| {
            let others = valid
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, o)| ratio(o))
                .fold(f64::NEG_INFINITY, f64::max);
            (m.block_id.clone(), ratio(m) / others)
        })
        .collect();
    Ok(MincostReport {
        p: params.p,
        members,
        min_cost,
        c_emp,
        leave_one_out,
    })
}
