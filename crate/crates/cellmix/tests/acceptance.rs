//! Exit-gate checks at full resolution (N = 512). Each test prints one
//! PASS/FAIL line and fails when its criterion does not hold.

use std::f64::consts::PI;
use std::sync::OnceLock;

use cellmix::assembly::{evolve, fine_tiling_rescale, BlockPlan, BudgetSpec};
use cellmix::blocks::Block;
use cellmix::diagnostics::{check_tiling_lemma, periodic_h_minus1};
use cellmix::domain::patterns::{checkerboard, half_split, sine_mode};
use cellmix::domain::{make_tiling, rescale_identity_exact, time_steps, BlockParams, Grid};
use cellmix::harness::*;
use cellmix::lagrangian::MincostReport;
use num_rational::Ratio;

const N: usize = 512;

fn verdict(criterion: u32, title: &str, passed: bool, detail: &str) {
    println!(
        "criterion {criterion:>2} {}: {title}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} ({title}) failed: {detail}");
}

fn reference_evolution(
    stages: usize,
    tau: f64,
    budget: Option<&BudgetSpec>,
) -> cellmix::assembly::CellularEvolution {
    evolve(
        &half_split(Grid::new(N).unwrap()).unwrap(),
        stages,
        &BlockParams::default(),
        &time_steps(tau, stages).unwrap(),
        &BlockPlan::Uniform(Block::reference()),
        budget,
    )
    .unwrap()
}

fn mincost_config() -> ExperimentConfig {
    ExperimentConfig::new(ExperimentKind::Mincost)
}

/// The minimal-cost run is shared by the cost and consistency criteria.
fn mincost() -> &'static MincostReport {
    static REPORT: OnceLock<MincostReport> = OnceLock::new();
    REPORT.get_or_init(|| run_mincost(&mincost_config()).unwrap())
}

fn assertion<'a>(outcome: &'a ExperimentOutcome, name: &str) -> &'a Assertion {
    outcome
        .assertions
        .iter()
        .find(|a| a.name == name)
        .unwrap_or_else(|| panic!("no assertion {name}"))
}

#[test]
fn criterion_01_spectral_oracle() {
    let mut worst = 0.0f64;
    for m in [1, 2, 4, 8] {
        let rho = sine_mode(Grid::new(N).unwrap(), m);
        let expected = rho.l2_norm() / (2.0 * PI * m as f64);
        worst = worst.max((periodic_h_minus1(&rho).unwrap() / expected - 1.0).abs());
    }
    verdict(
        1,
        "torus modes against |rho|/(2 pi m)",
        worst <= 0.01,
        &format!("largest relative error {worst:.2e} (tolerance 1%)"),
    );
}

#[test]
fn criterion_02_tiling_lemma() {
    let grid = Grid::new(N).unwrap();
    let kappa = BlockParams::default().kappa;
    let mut reports = Vec::new();
    for k in 2..=6 {
        let side = 0.5f64.powi(k);
        let rho = checkerboard(grid, side).unwrap();
        reports
            .push(check_tiling_lemma(&rho, &make_tiling(side, 1, &grid).unwrap(), kappa).unwrap());
    }
    let g_ok = reports.iter().all(|r| r.geometric <= r.geometric_bound);
    let slope = |pick: fn(&cellmix::diagnostics::TilingLemmaReport) -> f64| {
        log_slope(
            &reports
                .iter()
                .map(|r| (r.side, pick(r)))
                .collect::<Vec<_>>(),
        )
    };
    let (sg, sh) = (slope(|r| r.geometric), slope(|r| r.functional));
    verdict(
        2,
        "checkerboards at sides 1/4..1/64",
        g_ok && sg >= 0.95 && sh >= 0.95,
        &format!(
            "G <= (4 sqrt 2/kappa) side on all: {g_ok}; slopes G {sg:.4}, Hm1 {sh:.4} (>= 0.95)"
        ),
    );
}

#[test]
fn criterion_03_cellular_lower_bound() {
    let config = ExperimentConfig::new(ExperimentKind::Decay);
    let report = run_decay_experiment(&config).unwrap();
    let spread = |v: &[f64]| {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (min, max / min - 1.0)
    };
    let (g_min, g_spread) = spread(&report.geometric_constants);
    let (d_min, d_spread) = spread(&report.duality_constants);
    // the measured Hm1 dominates its duality lower bound at every stage
    let lambda = config.params.lambda;
    let hm1: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.n >= 1)
        .map(|r| r.functional / lambda.powi(2 * r.n as i32))
        .collect();
    let dominated = report
        .rows
        .iter()
        .all(|r| r.duality_bound.map_or(false, |d| r.functional >= d));
    let passed = g_min > 0.0 && d_min > 0.0 && g_spread <= 0.25 && d_spread <= 0.25 && dominated;
    verdict(
        3,
        "G/lambda^n and Hm1/lambda^2n bounded below over 5 stages",
        passed,
        &format!(
            "G/lambda^n >= {g_min:.4} (spread {g_spread:.4}); Hm1/lambda^2n >= duality constant {d_min:.4} \
             (spread {d_spread:.4}); Hm1 above its bound at every stage: {dominated}; measured Hm1/lambda^2n {hm1:.4?}"
        ),
    );
}

#[test]
fn criterion_04_scaling_identities() {
    let matrix = run_scaling_experiment(&ExperimentConfig::new(ExperimentKind::Scaling)).unwrap();
    let worst = matrix
        .reports
        .iter()
        .map(|r| r.snapshot_error.max(r.stage_error))
        .fold(0.0, f64::max);
    verdict(
        4,
        "change-of-variables ratios for s in {1,2,1.5}, p in {2,4}, n in {1,2,3}",
        matrix.all_passed() && matrix.reports.len() == 18 && worst <= 0.02,
        &format!(
            "{} cases, largest relative error {worst:.3e} (tolerance 2%)",
            matrix.reports.len()
        ),
    );
}

#[test]
fn criterion_05_critical_time_dilation() {
    let report =
        run_upper_bound_experiment(&ExperimentConfig::new(ExperimentKind::UpperBound)).unwrap();
    let params = BlockParams::default();
    let floor = cellmix::sobolev::tau_floor(params.lambda, params.s);
    let spec = BudgetSpec {
        s: params.s,
        p: params.p,
        ..BudgetSpec::default()
    };
    let below = budget_growth(&reference_evolution(5, floor / 2.0, Some(&spec))).unwrap();
    let passed = report.budget.drift <= 0.1 && below.ratio_error <= 0.1;
    verdict(
        5,
        "flat budgets at tau = lambda^(1-s), geometric growth at half of it",
        passed,
        &format!(
            "drift {:.2e} at tau = {floor} (<= 10%); at tau = {} ratios {:.4?} against {:.4} (error {:.2e}, <= 10%)",
            report.budget.drift,
            floor / 2.0,
            below.ratios,
            below.expected_ratio,
            below.ratio_error
        ),
    );
}

#[test]
fn criterion_06_decay_exponents() {
    let report = run_decay_experiment(&ExperimentConfig::new(ExperimentKind::Decay)).unwrap();
    let (g, h) = (&report.geometric, &report.functional);
    let g_ok = (-1.1..=-0.9).contains(&g.exponent);
    let h_ok = (-2.2..=-1.8).contains(&h.exponent);
    verdict(
        6,
        "fitted exponents at s = 2, lambda = 1/2, tau = 2 over stages 1-5",
        g_ok && h_ok,
        &format!(
            "G {:.4} +- {:.4} in [-1.1, -0.9]: {g_ok}; Hm1 {:.4} +- {:.4} in [-2.2, -1.8]: {h_ok} \
             (unshifted clock: G {:.4}, Hm1 {:.4})",
            g.exponent, g.half_width, h.exponent, h.half_width, g.raw_exponent, h.raw_exponent
        ),
    );
}

#[test]
fn criterion_07_fine_tiling_identity() {
    let mut exact = true;
    let mut states = true;
    let mut compared = 0;
    for (num, den) in [(3, 2), (2, 1), (3, 1), (4, 1)] {
        for l in 2..=4 {
            for n in 0..=6 {
                exact &= rescale_identity_exact(Ratio::new(num, den), l, n).unwrap();
            }
        }
        // every stage the grid resolves: tiles of at least 4 cells
        let evo = reference_evolution(8, num as f64 / den as f64, None);
        for l in 2..=4 {
            let (_, report) = fine_tiling_rescale(&evo, l).unwrap();
            states &= report.all_states_equal() && report.time_errors.iter().all(|&e| e == 0.0);
            compared += report.states_equal.len();
        }
    }
    verdict(
        7,
        "C T~_n = T_nl for tau in {1.5,2,3,4}, l in {2,3,4}",
        exact && states,
        &format!("rational identity exact for n <= 6: {exact}; {compared} rescaled states cell-exact: {states}"),
    );
}

#[test]
fn criterion_08_minimal_cost() {
    let report = mincost();
    let outcome = mincost_outcome(report).unwrap();
    let floor = assertion(&outcome, "cost_floor");
    let witness = assertion(&outcome, "witness_stretch");
    verdict(
        8,
        "cost floor and stretch witness over the reference family",
        floor.passed && witness.passed,
        &format!(
            "{}; witness Lip >= 2 on compliant members: {}",
            floor.detail, witness.detail
        ),
    );
}

#[test]
fn criterion_09_stretch_cost_consistency() {
    let report = mincost();
    let outcome = mincost_outcome(report).unwrap();
    let consistency = assertion(&outcome, "stretch_cost_consistency");
    let monotone = assertion(&outcome, "lip_monotone");
    verdict(
        9,
        "log Lip eta^(1/p) <= C_emp cost within 20%, Lip nonincreasing in eta",
        consistency.passed && monotone.passed,
        &format!(
            "{} (each held out member against the constant fitted on the others, <= 1.2); monotone: {}",
            consistency.detail, monotone.passed
        ),
    );
}

#[test]
fn criterion_10_non_universality() {
    let config = ExperimentConfig::new(ExperimentKind::Universality);
    let report = run_universality(&config).unwrap();
    let outcome = universality_outcome(&report).unwrap();
    let failed: Vec<&str> = outcome.failures().iter().map(|a| a.name.as_str()).collect();
    let c = &report.counterexample;
    verdict(
        10,
        "counterexample at t* = T_8 stays unmixed, particles trapped",
        failed.is_empty() && c.t_star == 255.0,
        &format!(
            "t* = {}, ball monochrome at {} later times: {}, min duality bound {:.4e} >= {:.1e}, \
             trapping holds on {} samples; failed: {failed:?}",
            c.t_star,
            c.samples.len(),
            c.all_monochrome,
            c.min_duality_bound,
            report.duality_floor,
            report.trapping.len()
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    let mut decay = ExperimentConfig::new(ExperimentKind::Decay);
    decay.grid = 256;
    let csv = |outcome: &ExperimentOutcome| -> Vec<String> {
        outcome.tables.iter().map(render_csv).collect()
    };
    let a = csv(&run_experiment(&decay).unwrap());
    let b = csv(&run_experiment(&decay).unwrap());
    // the seeded pair sampling of the cost experiment, against the shared run
    let c = csv(&run_experiment(&mincost_config()).unwrap());
    let d = csv(&mincost_outcome(mincost()).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let first = emit_outputs(&run_experiment(&decay).unwrap(), &dir.path().join("first")).unwrap();
    let second =
        emit_outputs(&run_experiment(&decay).unwrap(), &dir.path().join("second")).unwrap();
    let files_equal = first.len() == second.len()
        && first
            .iter()
            .zip(&second)
            .all(|(x, y)| std::fs::read(x).unwrap() == std::fs::read(y).unwrap());
    verdict(
        11,
        "byte-identical CSV outputs across repeated runs",
        a == b && c == d && files_equal,
        &format!(
            "decay tables equal: {}, mincost tables (seed {}) equal: {}, written files equal: {files_equal}",
            a == b,
            mincost_config().seed,
            c == d
        ),
    );
}
