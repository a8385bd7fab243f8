use std::f64::consts::PI;

use cellmix::diagnostics::*;
use cellmix::domain::patterns::{checkerboard, disc, half_split, left_half, sine_mode};
use cellmix::domain::*;
use proptest::prelude::*;

const KAPPA: f64 = 1.0 / 3.0;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

/// Brute-force geometric scale over the same lattice and ladder, using
/// floating ball averages instead of the quantized prefix sums.
fn brute_force_scale(rho: &TracerField, kappa: f64) -> f64 {
    let g = rho.grid();
    let n = g.n() as i64;
    let half_h = 0.5 * g.spacing();
    let sup = rho.sup_norm();
    for r in radius_ladder(g) {
        let reach = 2 * ((r / g.spacing()).ceil() as i64 + 1);
        let mixed = (-reach..=2 * n + reach).all(|cy| {
            (-reach..=2 * n + reach).all(|cx| {
                let c = [-0.5 + cx as f64 * half_h, -0.5 + cy as f64 * half_h];
                ball_average(rho, c, r).abs() <= kappa * sup * (1.0 + 1e-9)
            })
        });
        if mixed {
            return r;
        }
    }
    f64::INFINITY
}

/// Largest radius of a ball inside `Q` centered at `(-e, 0)` whose part in the
/// left half has fraction above `threshold`, from circular segment areas.
fn left_half_length_scale(threshold: f64) -> f64 {
    let beyond = |u: f64| (u.acos() - u * (1.0 - u * u).sqrt()) / PI;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beyond(mid) < 1.0 - threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 / (1.0 + hi)).max(0.25)
}

fn lcg_field(n: usize, seed: u64) -> TracerField {
    let mut s = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut vals: Vec<f64> = (0..n * n)
        .map(|_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    vals.iter_mut().for_each(|v| *v -= mean);
    TracerField::new(grid(n), vals).unwrap()
}

#[test]
fn torus_sine_modes_match_fourier_oracle() {
    for m in [1, 2, 4, 8] {
        let rho = sine_mode(grid(512), m);
        let expected = rho.l2_norm() / (2.0 * PI * m as f64);
        let got = periodic_h_minus1(&rho).unwrap();
        assert!(
            (got / expected - 1.0).abs() < 0.01,
            "m={m}: {got} vs {expected}"
        );
    }
    let first = periodic_h_minus1(&sine_mode(grid(512), 1)).unwrap();
    assert!((first - 0.5_f64.sqrt() / (2.0 * PI)).abs() < 1e-4);
}

#[test]
fn spectral_norm_edge_cases() {
    let g = grid(64);
    assert_eq!(
        functional_mixing_scale(&TracerField::zeros(g), 2).unwrap(),
        0.0
    );
    let rho = half_split(g).unwrap();
    assert_eq!(
        functional_mixing_scale(&rho, 1),
        Err(DiagnosticsError::PadTooSmall(1))
    );
    let biased = TracerField::from_fn(g, |_, _| 1.0);
    assert!(matches!(
        functional_mixing_scale(&biased, 2),
        Err(DiagnosticsError::NotMeanFree { .. })
    ));
}

#[test]
fn spectral_norm_grows_with_padding() {
    let rho = half_split(grid(128)).unwrap();
    let conv = functional_convergence(&rho).unwrap();
    assert!(conv.fine >= conv.coarse);
    assert!(conv.relative_change < 0.1);
}

#[test]
fn half_split_has_monochrome_quarter_ball() {
    let rho = half_split(grid(128)).unwrap();
    let q = ball_average(&rho, [-0.25, 0.0], 0.25);
    assert_eq!(q, 1.0);
    let gs = geometric_mixing_scale(&rho, KAPPA).unwrap();
    assert!(gs.value >= 0.25);
    let w = gs.witness.unwrap();
    assert!(w.average.abs() > KAPPA);
    assert!((w.radius * LADDER_STEP - gs.value).abs() < 1e-12);
}

#[test]
fn geometric_scale_matches_brute_force() {
    for seed in 0..3 {
        let rho = lcg_field(16, seed);
        let fast = geometric_mixing_scale(&rho, KAPPA).unwrap().value;
        assert_eq!(fast, brute_force_scale(&rho, KAPPA), "seed {seed}");
    }
    let cb = checkerboard(grid(32), 0.25).unwrap();
    let fast = geometric_mixing_scale(&cb, KAPPA).unwrap().value;
    assert_eq!(fast, brute_force_scale(&cb, KAPPA));
}

#[test]
fn zero_field_is_rejected() {
    let z = TracerField::zeros(grid(16));
    assert_eq!(
        geometric_mixing_scale(&z, KAPPA).unwrap_err(),
        DiagnosticsError::ZeroField
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geometric_scale_is_scale_invariant(seed in 0u64..1000, alpha in prop_oneof![1e-3f64..1e3, -1e3f64..-1e-3]) {
        let rho = lcg_field(16, seed);
        let a = geometric_mixing_scale(&rho, KAPPA).unwrap().value;
        let b = geometric_mixing_scale(&rho.scaled(alpha), KAPPA).unwrap().value;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn duality_bound_stays_below_spectral_norm(cx in -0.3f64..0.3, cy in -0.3f64..0.3, r in 0.05f64..0.2) {
        let g = grid(64);
        let rho = make_binary_tracer(&disc(g, [cx, cy], r), &g).unwrap();
        let bound = h_minus1_duality_lower_bound(&rho, [cx, cy], 0.9 * r, KAPPA).unwrap();
        let spectral = functional_mixing_scale(&rho, 2).unwrap();
        prop_assert!(bound > 0.0);
        prop_assert!(bound <= 1.02 * spectral, "{} > {}", bound, spectral);
    }
}

#[test]
fn bump_gradient_matches_closed_form() {
    for kappa in [0.1, KAPPA, 0.5, 0.9] {
        for r in [0.01, 0.1, 0.3] {
            let w = r * kappa / 20.0;
            let closed = (2.0 * PI / w * (r * 6.0 / 5.0 + w * 3.0 / 5.0)).sqrt();
            let got = bump_gradient_norm(r, kappa);
            assert!((got / closed - 1.0).abs() < 1e-12, "{got} vs {closed}");
        }
    }
}

#[test]
fn monochrome_disc_pairing_meets_quadratic_floor() {
    let g = grid(256);
    for r in [0.05, 0.1, 0.2] {
        let rho =
            make_binary_tracer(&disc(g, [0.0, 0.0], r * (1.0 + KAPPA / 20.0) + 0.01), &g).unwrap();
        let (pairing, grad) = duality_pairing(&rho, [0.0, 0.0], r, KAPPA);
        let floor = rho.sup_norm() * PI * KAPPA * r * r * (1.0 - 3.0 / 20.0);
        assert!(pairing >= floor, "r={r}: {pairing} < {floor}");
        let bound = h_minus1_duality_lower_bound(&rho, [0.0, 0.0], r, KAPPA).unwrap();
        assert!(bound >= floor / grad);
        assert!((bound - pairing / grad).abs() < 1e-15);
    }
}

#[test]
fn duality_bound_degenerate_cases() {
    let g = grid(64);
    assert_eq!(
        h_minus1_duality_lower_bound(&TracerField::zeros(g), [0.0, 0.0], 0.1, KAPPA).unwrap(),
        0.0
    );
    let cb = checkerboard(g, 0.125).unwrap();
    assert!(matches!(
        h_minus1_duality_lower_bound(&cb, [0.0, 0.0], 0.3, KAPPA),
        Err(DiagnosticsError::BallNotUnmixed { .. })
    ));
}

#[test]
fn half_split_duality_bound_is_positive_and_bracketed() {
    let rho = half_split(grid(256)).unwrap();
    let bound = h_minus1_duality_lower_bound(&rho, [-0.25, 0.0], 0.25, KAPPA).unwrap();
    let spectral = functional_mixing_scale(&rho, 2).unwrap();
    assert!(bound > 0.0 && bound < spectral);
}

#[test]
fn full_square_has_length_scale_one_half() {
    let g = grid(64);
    let all = CellMask::from_fn(g, |_, _| true);
    let ls = characteristic_length_scale(&all, &Region::unit(), KAPPA, 0.5).unwrap();
    assert_eq!(ls.ls, 0.5);
    assert_eq!(ls.witness_ball.average, 1.0);
}

#[test]
fn single_cell_has_cell_inradius() {
    let g = grid(512);
    let mut m = CellMask::empty(g);
    m.set(100, 200, true);
    let ls = characteristic_length_scale(&m, &Region::unit(), KAPPA, 0.5).unwrap();
    // Balls up to radius one cell width around its center hold only that cell.
    assert!(ls.ls >= 0.5 * g.spacing() && ls.ls <= g.spacing());
    assert_eq!(
        characteristic_length_scale(&CellMask::empty(g), &Region::unit(), KAPPA, 0.5).unwrap_err(),
        DiagnosticsError::EmptySet
    );
}

#[test]
fn left_half_length_scale_brackets_segment_oracle() {
    let g = grid(512);
    let thr = fill_threshold(KAPPA, 0.5);
    let exact = left_half_length_scale(thr);
    assert!((exact - 0.322).abs() < 1e-3, "{exact}");
    let ls = characteristic_length_scale(&left_half(g), &Region::unit(), KAPPA, 0.5).unwrap();
    assert!(ls.ls >= 0.25);
    assert!(ls.ls <= exact + 2.0 * g.spacing());
    assert!(exact < ls.ls * LADDER_STEP);
    assert!(ls.witness_ball.average > thr);
    let w = ls.witness_ball;
    assert!(!w.crosses_boundary());
}

#[test]
fn length_scale_is_monotone() {
    let g = grid(128);
    let big = disc(g, [0.05, -0.1], 0.3);
    let small = disc(g, [0.05, -0.1], 0.2);
    let e = Region::unit();
    let mut last = 0.0;
    for s_bar in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let ls = characteristic_length_scale(&small, &e, KAPPA, s_bar)
            .unwrap()
            .ls;
        assert!(ls >= last, "s_bar {s_bar}");
        last = ls;
    }
    let ls_small = characteristic_length_scale(&small, &e, KAPPA, 0.5)
        .unwrap()
        .ls;
    let ls_big = characteristic_length_scale(&big, &e, KAPPA, 0.5)
        .unwrap()
        .ls;
    assert!(ls_big >= ls_small);
}

#[test]
fn length_scale_witness_is_unmixed() {
    let g = grid(128);
    for mask in [left_half(g), disc(g, [0.1, 0.1], 0.15)] {
        let rho = make_binary_tracer(&mask, &g).unwrap();
        let ls = characteristic_length_scale(&mask, &Region::unit(), KAPPA, 0.5).unwrap();
        let w = ls.witness_ball;
        let avg = ball_average(&rho, w.center, w.radius);
        assert!(avg.abs() / rho.sup_norm() > KAPPA);
    }
}

#[test]
fn checkerboard_satisfies_tiling_lemma() {
    let g = grid(256);
    let rho = checkerboard(g, 0.125).unwrap();
    let tiling = make_tiling(0.125, 1, &g).unwrap();
    let rep = check_tiling_lemma(&rho, &tiling, KAPPA).unwrap();
    assert!(rep.holds(), "{rep:?}");
    assert!((rep.geometric_bound - 12.0 * 2f64.sqrt() * 0.125).abs() < 1e-12);
}

#[test]
fn tiling_lemma_rejects_unmixed_tiles() {
    let g = grid(64);
    let rho = half_split(g).unwrap();
    let tiling = make_tiling(0.5, 1, &g).unwrap();
    assert!(matches!(
        check_tiling_lemma(&rho, &tiling, KAPPA),
        Err(DiagnosticsError::TilesNotMeanFree { .. })
    ));
}

#[test]
fn tiling_constant_calibration_is_frozen() {
    let g = grid(512);
    let rho = checkerboard(g, 0.25).unwrap();
    let h = functional_mixing_scale(&rho, 2).unwrap();
    let c = h / 0.25;
    assert!((c - 0.10312).abs() < 5e-5, "{c}");
    assert!(c <= TILING_H1_CONSTANT);
}

#[test]
fn half_split_stage_zero_has_witness() {
    let g = grid(128);
    let rho = half_split(g).unwrap();
    let params = BlockParams::default();
    let rep = check_cellular_lower_bound(&rho, 0, &params).unwrap();
    assert!(rep.witness.radius >= 0.75 * params.a);
    assert!(rep.holds(), "{rep:?}");
    assert!(rep.geometric >= rep.witness.radius * LADDER_STEP - 1e-12);
}

#[test]
fn mixed_field_has_no_witness() {
    let g = grid(128);
    let rho = checkerboard(g, 1.0 / 16.0).unwrap();
    let params = BlockParams::default();
    assert!(matches!(
        check_cellular_lower_bound(&rho, 0, &params),
        Err(DiagnosticsError::NoWitnessBall { .. })
    ));
}
