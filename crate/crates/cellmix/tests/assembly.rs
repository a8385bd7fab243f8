use cellmix::assembly::*;
use cellmix::blocks::Block;
use cellmix::domain::patterns::half_split;
use cellmix::domain::*;
use cellmix::sobolev::{grad_lp_norm, Snapshot, VelocityField};
use num_rational::Ratio;
use proptest::prelude::*;

fn reference_evolution(
    n: usize,
    stages: usize,
    tau: f64,
    budget: Option<&BudgetSpec>,
) -> CellularEvolution {
    let rho = half_split(Grid::new(n).unwrap()).unwrap();
    let schedule = time_steps(tau, stages).unwrap();
    evolve(
        &rho,
        stages,
        &BlockParams::default(),
        &schedule,
        &BlockPlan::Uniform(Block::reference()),
        budget,
    )
    .unwrap()
}

#[test]
fn stages_leave_every_finer_tile_mean_free() {
    let evo = reference_evolution(256, 5, 2.0, None);
    assert_eq!(evo.n_stages(), 5);
    for (n, s) in evo.stages.iter().enumerate() {
        assert!(s.tiles_mean_free && s.tile_fractions_exact, "stage {n}");
        assert_eq!(s.tiles, 4usize.pow(n as u32));
        assert_eq!(s.block_ids, vec!["reference".to_string()]);
        assert_eq!(s.t_end - s.t_start, 2f64.powi(n as i32));
    }
    // stage 5 tracer: the half split at scale 1/32 in every tile
    let rho = evo.state(5);
    let left = rho.values()[0];
    for i in 0..256 {
        assert_eq!(rho.at(i, 77), if i % 8 < 4 { left } else { -left });
    }
}

#[test]
fn composite_permutation_reproduces_states() {
    let evo = reference_evolution(64, 4, 2.0, None);
    for n in 0..=4 {
        let perm = evo.composite_permutation(n);
        assert_eq!(evo.state(0).pushed_forward(&perm), *evo.state(n));
    }
}

#[test]
fn state_within_interpolates_between_stage_times() {
    let evo = reference_evolution(64, 3, 2.0, None);
    assert_eq!(evo.state_within(2, 0.0).unwrap(), *evo.state(2));
    assert_eq!(evo.state_within(2, 1.0).unwrap(), *evo.state(3));
    let mid = evo.state_within(2, 0.5).unwrap();
    assert_ne!(mid, *evo.state(2));
    assert_ne!(mid, *evo.state(3));
}

#[test]
fn assembled_field_is_the_rescaled_block() {
    let evo = reference_evolution(64, 3, 2.0, None);
    let field = evo.field().unwrap();
    let u0 = Block::reference().field.unwrap();
    assert_eq!(field.stages(), 3);
    assert_eq!(field.interval(), (0.0, 7.0));
    assert_eq!(field.stage_at(0.0), Some(0));
    assert_eq!(field.stage_at(3.5), Some(2));
    assert_eq!(field.stage_at(7.0), None);
    // stage 2: tiles of side 1/4, dilation 4, T_2 = 3
    let (lam, tau) = (0.25, 4.0);
    let center = [-0.5 + 2.5 * lam, -0.5 + 1.5 * lam];
    for (s, y) in [(0.3, [0.1, -0.2]), (0.8, [-0.4, 0.35])] {
        let x = [center[0] + lam * y[0], center[1] + lam * y[1]];
        let v = field.velocity(3.0 + tau * s, x);
        let w = u0.velocity(s, y);
        assert!((v[0] - lam / tau * w[0]).abs() < 1e-14 && (v[1] - lam / tau * w[1]).abs() < 1e-14);
    }
    assert!(field.breakpoints().contains(&1.0));
    assert!(field.breakpoints().contains(&5.0));
}

#[test]
fn stage_budgets_are_flat_at_the_critical_dilation() {
    let spec = BudgetSpec {
        cells: 64,
        samples: 2,
        ..BudgetSpec::default()
    };
    let evo = reference_evolution(64, 4, 2.0, Some(&spec));
    let sups: Vec<f64> = evo
        .stages
        .iter()
        .map(|s| s.budget.as_ref().unwrap().sup_in_time)
        .collect();
    assert!(
        sups.iter().all(|v| (v / sups[0] - 1.0).abs() < 1e-9),
        "{sups:?}"
    );
}

#[test]
fn stage_budgets_grow_fourfold_without_dilation() {
    let spec = BudgetSpec {
        cells: 64,
        samples: 2,
        ..BudgetSpec::default()
    };
    let evo = reference_evolution(64, 4, 1.0, Some(&spec));
    for w in evo.stages.windows(2) {
        let ratio = (w[1].budget.as_ref().unwrap().sup_in_time
            / w[0].budget.as_ref().unwrap().sup_in_time)
            .powi(2);
        assert!((ratio - 4.0).abs() < 1e-6, "{ratio}");
    }
}

#[test]
fn representative_tile_budget_matches_whole_square_snapshot() {
    // stage 1 gradient norm from one tile times the tile count, against a
    // snapshot of the assembled field over all of Q
    let spec = BudgetSpec {
        s: 1.0,
        p: 2.0,
        cells: 128,
        samples: 1,
    };
    let plan = BlockPlan::Uniform(Block::reference());
    let budget = stage_budget(&plan, 1, 0.5, 2.0, &spec).unwrap().unwrap();
    let (t, value) = budget.per_time[0];
    let evo = reference_evolution(64, 2, 2.0, None);
    let field = evo.field().unwrap();
    let whole = grad_lp_norm(&Snapshot::velocity(&field, &Region::unit(), 256, t), 1, 2.0).unwrap();
    assert!((value / whole - 1.0).abs() < 1e-3, "{value} {whole}");
}

#[test]
fn identity_tiles_break_tile_means() {
    let blocks = vec![Block::reference(), Block::identity()];
    let stages = vec![vec![0], vec![0, 1, 0, 0]];
    let plan = BlockPlan::PerTile { blocks, stages };
    let rho = half_split(Grid::new(64).unwrap()).unwrap();
    let evo = evolve(
        &rho,
        2,
        &BlockParams::default(),
        &time_steps(2.0, 2).unwrap(),
        &plan,
        None,
    )
    .unwrap();
    assert!(evo.stages[0].tiles_mean_free);
    assert!(!evo.stages[1].tiles_mean_free);
    assert_eq!(evo.stages[1].block_ids.len(), 2);
}

#[test]
fn malformed_plans_are_rejected() {
    let plan = BlockPlan::PerTile {
        blocks: vec![Block::reference()],
        stages: vec![vec![0, 0]],
    };
    let rho = half_split(Grid::new(64).unwrap()).unwrap();
    let r = evolve(
        &rho,
        1,
        &BlockParams::default(),
        &time_steps(2.0, 1).unwrap(),
        &plan,
        None,
    );
    assert!(matches!(r, Err(AssemblyError::InvalidPlan(_))));
    let short = evolve(
        &rho,
        3,
        &BlockParams::default(),
        &time_steps(2.0, 2).unwrap(),
        &BlockPlan::Uniform(Block::reference()),
        None,
    );
    assert!(matches!(short, Err(AssemblyError::InvalidPlan(_))));
    let coarse = evolve(
        &half_split(Grid::new(8).unwrap()).unwrap(),
        3,
        &BlockParams::default(),
        &time_steps(2.0, 3).unwrap(),
        &BlockPlan::Uniform(Block::reference()),
        None,
    );
    assert!(
        matches!(coarse, Err(AssemblyError::MisalignedBlocks { .. })),
        "{coarse:?}"
    );
}

#[test]
fn fine_tiling_rescale_reproduces_every_lth_state() {
    for tau in [1.5, 2.0, 3.0, 4.0] {
        let evo = reference_evolution(256, 6, tau, None);
        for l in [2u32, 3] {
            let (rescaled, report) = fine_tiling_rescale(&evo, l).unwrap();
            assert!(report.all_states_equal(), "tau {tau}, l {l}");
            assert_eq!(rescaled.n_stages(), 6 / l as usize);
            assert!(report
                .time_errors
                .iter()
                .all(|&e| e <= 1e-9 * evo.schedule.t(6)));
            assert_eq!(report.lambda_tilde, 0.5f64.powi(l as i32));
        }
    }
}

#[test]
fn rescale_needs_dilation() {
    let evo = reference_evolution(64, 2, 1.0, None);
    assert!(matches!(
        fine_tiling_rescale(&evo, 2),
        Err(AssemblyError::TauEqualsOne)
    ));
}

#[test]
fn rescale_time_identity_is_exact_in_rationals() {
    for (num, den) in [(3, 2), (2, 1), (3, 1), (4, 1)] {
        for l in 2..=4 {
            for n in 0..=6 {
                assert!(rescale_identity_exact(Ratio::new(num, den), l, n).unwrap());
            }
        }
    }
}

#[test]
fn interior_probe_reports_tile_length_scales() {
    let evo = reference_evolution(128, 2, 2.0, None);
    let at_start = interior_unmixedness_probe(&evo, 1.0).unwrap();
    assert_eq!(at_start.stage, Some(1));
    assert_eq!(at_start.relative_ls.len(), 4);
    assert!(at_start.min_relative_ls > at_start.bound);
    let inside = interior_unmixedness_probe(&evo, 1.5).unwrap();
    assert!(inside.min_relative_ls > 0.0);
    let map_only = {
        let mut e = evo.clone();
        e.plan = BlockPlan::Uniform(Block {
            field: None,
            ..Block::reference()
        });
        interior_unmixedness_probe(&e, 1.5).unwrap()
    };
    assert!(map_only.map_only);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolutions_preserve_tracer_values(assign in prop::collection::vec(0usize..2, 4)) {
        let plan = BlockPlan::PerTile {
            blocks: vec![Block::reference(), Block::identity()],
            stages: vec![vec![0], assign],
        };
        let rho = half_split(Grid::new(32).unwrap()).unwrap();
        let evo = evolve(&rho, 2, &BlockParams::default(), &time_steps(2.0, 2).unwrap(), &plan, None).unwrap();
        let mut a = rho.values().to_vec();
        let mut b = evo.state(2).values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
        prop_assert!(evo.state(2).mean().abs() < 1e-12);
    }

    #[test]
    fn uniform_reference_keeps_tiles_mean_free(stages in 1usize..5) {
        let evo = reference_evolution(64, stages, 2.0, None);
        prop_assert!(evo.stages.iter().all(|s| s.tiles_mean_free && s.tile_fractions_exact));
    }
}
