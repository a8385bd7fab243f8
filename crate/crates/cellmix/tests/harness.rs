use cellmix::assembly::{evolve, BlockPlan, BudgetSpec};
use cellmix::blocks::{Block, BlockError};
use cellmix::domain::patterns::half_split;
use cellmix::domain::{time_steps, BlockParams, Grid};
use cellmix::harness::*;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(kind);
    config.grid = 64;
    config.stages = 4;
    config.budget.cells = 32;
    config.budget.samples = 2;
    config
}

#[test]
fn fit_recovers_an_exact_power_law() {
    let series: Vec<(f64, f64)> = (1..=6)
        .map(|n| {
            let t = 2f64.powi(n) - 1.0;
            (t, 3.0 * (t + 1.0).powf(-1.5))
        })
        .collect();
    let fit = fit_decay(&series, 1.0).unwrap();
    assert!((fit.exponent + 1.5).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert!(fit.half_width < 1e-10);
    // without the shift the same data decays more slowly
    assert!(fit.raw_exponent > -1.5);
    assert!(
        (log_slope(
            &series
                .iter()
                .map(|&(t, v)| (t + 1.0, v))
                .collect::<Vec<_>>()
        ) + 1.5)
            .abs()
            < 1e-12
    );
}

#[test]
fn fit_half_width_matches_student_t() {
    // residuals +-e around a line on four points: slope 1, se from the textbook formula
    let e = 0.01;
    let xs = [0.0f64, 1.0, 2.0, 3.0];
    let series: Vec<(f64, f64)> = xs
        .iter()
        .zip([e, -e, -e, e])
        .map(|(&x, r)| (x.exp(), (x + r).exp()))
        .collect();
    let fit = fit_decay(&series, 0.0).unwrap();
    assert!((fit.exponent - 1.0).abs() < 1e-12);
    let se = (4.0 * e * e / 2.0 / 5.0f64).sqrt();
    // t_{0.975, 2} = 4.302652729911275
    assert!(
        (fit.half_width - 4.302652729911275 * se).abs() < 1e-9,
        "{}",
        fit.half_width
    );
}

#[test]
fn fit_rejects_short_or_nonpositive_series() {
    assert!(matches!(
        fit_decay(&[(1.0, 1.0), (2.0, 0.5)], 0.0),
        Err(HarnessError::Fit(_))
    ));
    assert!(matches!(
        fit_decay(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)], 0.0),
        Err(HarnessError::Fit(_))
    ));
}

#[test]
fn config_json_fills_defaults() {
    let config = ExperimentConfig::from_json(r#"{"kind": "upper_bound", "stages": 6}"#).unwrap();
    assert_eq!(config.kind, ExperimentKind::UpperBound);
    assert_eq!(config.stages, 6);
    assert_eq!(config.grid, 512);
    assert_eq!(config.tau(), 2.0);
    let text = serde_json::to_string(&config).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), config);
    assert!(matches!(
        ExperimentConfig::from_json(r#"{"stages": 6}"#),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn invalid_configs_exit_with_three() {
    let mut c = small(ExperimentKind::Decay);
    c.grid = 100;
    assert_eq!(c.validate().unwrap_err().exit_code(), 3);
    let mut c = small(ExperimentKind::Decay);
    c.stages = 7;
    assert_eq!(c.validate().unwrap_err().exit_code(), 3);
    let mut c = small(ExperimentKind::Decay);
    c.stages = 2;
    assert!(c.validate().is_err());
    let mut c = small(ExperimentKind::Mincost);
    c.mincost.etas = vec![1.5];
    assert!(c.validate().is_err());
    assert_eq!(
        HarnessError::Block(BlockError::UnsupportedLambda(0.3)).exit_code(),
        3
    );
    assert_eq!(HarnessError::Fit("x".into()).exit_code(), 2);
}

#[test]
fn dilation_below_the_floor_is_refused() {
    let mut c = small(ExperimentKind::Decay);
    c.tau = Some(1.5);
    let err = run_decay_experiment(&c).unwrap_err();
    assert!(matches!(err, HarnessError::TauBelowFloor { floor, .. } if floor == 2.0));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn budgets_stay_flat_at_the_floor_and_blow_up_without_dilation() {
    let c = small(ExperimentKind::UpperBound);
    let report = run_upper_bound_experiment(&c).unwrap();
    assert!(report.budget.flat(), "{:?}", report.budget);
    assert!((report.budget.expected_ratio - 1.0).abs() < 1e-12);
    let spec = BudgetSpec {
        cells: 32,
        samples: 2,
        ..BudgetSpec::default()
    };
    let rho = half_split(Grid::new(64).unwrap()).unwrap();
    let evo = evolve(
        &rho,
        4,
        &BlockParams::default(),
        &time_steps(1.0, 4).unwrap(),
        &BlockPlan::Uniform(Block::reference()),
        Some(&spec),
    )
    .unwrap();
    let growth = budget_growth(&evo).unwrap();
    assert!(!growth.flat());
    assert!((growth.expected_ratio - 4.0).abs() < 1e-12);
    assert!(
        growth.ratios.iter().all(|r| (r - 4.0).abs() < 1e-6),
        "{:?}",
        growth.ratios
    );
}

#[test]
fn decay_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(ExperimentKind::Decay);
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    assert_eq!(a, b);
    let first = emit_outputs(&a, &dir.path().join("a")).unwrap();
    let second = emit_outputs(&b, &dir.path().join("b")).unwrap();
    let names: Vec<_> = first
        .iter()
        .map(|p| p.file_name().unwrap().to_owned())
        .collect();
    for f in ["decay.csv", "decay.json", "decay.svg"] {
        assert!(names.iter().any(|n| n == f), "{names:?}");
    }
    for (p, q) in first.iter().zip(&second) {
        assert_eq!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap());
    }
    let csv = std::fs::read_to_string(dir.path().join("a/decay.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,T_n,G,Hm1,budget");
    assert_eq!(csv.lines().count(), 1 + 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/decay.json")).unwrap())
            .unwrap();
    assert_eq!(json["experiment"], "decay");
    assert_eq!(json["passed"], a.passed());
}

#[test]
fn decay_plot_carries_both_reference_slopes() {
    let g = [(1.0, 0.25), (3.0, 0.125), (7.0, 0.0625)];
    let h = [(1.0, 0.05), (3.0, 0.0125), (7.0, 0.003)];
    let svg = render_decay_svg(&g, &h, 1.0, 2.0);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches(r#"class="reference""#).count(), 2);
    assert!(svg.contains(r#"data-slope="-1.0000""#) && svg.contains(r#"data-slope="-2.0000""#));
}

#[test]
fn csv_rendering_quotes_nothing_and_ends_lines() {
    let mut t = Table::new("x.csv", &["a", "b"]);
    t.push(vec!["1".into(), "2.5".into()]);
    assert_eq!(render_csv(&t), "a,b\n1,2.5\n");
}

#[test]
fn diagnostics_run_on_a_small_grid() {
    let mut config = small(ExperimentKind::Diagnostics);
    config.grid = 256;
    let outcome = run_experiment(&config).unwrap();
    assert!(outcome.passed(), "{:?}", outcome.failures());
    assert_eq!(outcome.exit_code(), 0);
    assert_eq!(
        outcome.tables[0].header,
        ["n", "T_n", "G", "Hm1", "LS", "budget"]
    );
}
