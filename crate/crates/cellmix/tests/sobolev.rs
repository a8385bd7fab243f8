use std::f64::consts::{PI, SQRT_2};

use cellmix::domain::Region;
use cellmix::sobolev::*;
use proptest::prelude::*;

fn unit_snapshot(field: &dyn VelocityField, n: usize) -> Snapshot {
    Snapshot::velocity(field, &Region::unit(), n, 0.0)
}

#[test]
fn shear_gradient_norm_matches_analytic_integral() {
    let v = grad_lp_norm(&unit_snapshot(&ShearSine, 256), 1, 2.0).unwrap();
    assert!((v - PI * SQRT_2).abs() < 1e-3, "{v}");
}

#[test]
fn zero_field_has_zero_norms() {
    let snap = unit_snapshot(&ZeroVelocity, 32);
    for k in 1..=3 {
        assert_eq!(grad_lp_norm(&snap, k, 2.0).unwrap(), 0.0);
        assert_eq!(grad_lp_norm(&snap, k, f64::INFINITY).unwrap(), 0.0);
    }
    assert_eq!(
        gagliardo_integral(&snap, 1.5, 2.0, GagliardoDomain::WholePlane).unwrap(),
        0.0
    );
    assert_eq!(
        fractional_seminorm(&snap, 2.5, 4.0, GagliardoDomain::Box).unwrap(),
        0.0
    );
}

#[test]
fn rigid_rotation_has_constant_gradient() {
    // A radius beyond the corners keeps the cutoff outside Q, so |grad u|^2 = 2.
    let rot = RigidRotation {
        center: [0.0, 0.0],
        rate: 1.0,
        radius: 1.0,
    };
    let snap = unit_snapshot(&rot, 64);
    let v = grad_lp_norm(&snap, 1, 2.0).unwrap();
    assert!((v - SQRT_2).abs() < 1e-10, "{v}");
    assert!((grad_lp_norm(&snap, 1, f64::INFINITY).unwrap() - SQRT_2).abs() < 1e-10);
    assert!(grad_lp_norm(&snap, 2, 2.0).unwrap() < 1e-9);
    assert!(divergence_max(&snap) < 1e-10);
}

#[test]
fn stencil_overrun_is_reported() {
    let snap = unit_snapshot(&ShearSine, 4);
    assert!(matches!(
        grad_lp_norm(&snap, 2, 2.0),
        Err(SobolevError::StencilOverrun { .. })
    ));
    assert!(grad_lp_norm(&snap, 1, 2.0).is_ok());
}

#[test]
fn fractional_infinity_rejected() {
    let snap = unit_snapshot(&StreamBump::default(), 16);
    assert!(matches!(
        fractional_seminorm(&snap, 1.5, f64::INFINITY, GagliardoDomain::WholePlane),
        Err(SobolevError::InfinityPNotSupported)
    ));
}

#[test]
fn integer_norms_converge_at_second_order() {
    let bump = StreamBump::default();
    for k in [1, 2] {
        let v: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&n| grad_lp_norm(&unit_snapshot(&bump, n), k, 2.0).unwrap())
            .collect();
        let slope = ((v[1] - v[0]).abs() / (v[2] - v[1]).abs()).log2();
        assert!(slope >= 1.8, "k={k} slope {slope}");
    }
    let err: Vec<f64> = [128, 256, 512]
        .iter()
        .map(|&n| {
            (grad_lp_norm(&unit_snapshot(&ShearSine, n), 1, 2.0).unwrap() - PI * SQRT_2).abs()
        })
        .collect();
    assert!(
        (err[0] / err[1]).log2() >= 1.8 && (err[1] / err[2]).log2() >= 1.8,
        "{err:?}"
    );
}

#[test]
fn second_gradient_dominates_first() {
    // Each gradient below has zero mean over Q, so the Neumann Poincare
    // inequality on the unit square gives ||grad^2 u|| >= pi ||grad u||.
    let family: Vec<Box<dyn VelocityField>> = vec![
        Box::new(ShearSine),
        Box::new(StreamBump::default()),
        Box::new(StreamBump {
            power: 3,
            ..StreamBump::default()
        }),
        Box::new(StreamBump {
            power: 5,
            amplitude: 0.3,
            ..StreamBump::default()
        }),
    ];
    let ratios: Vec<f64> = family
        .iter()
        .map(|f| {
            let snap = unit_snapshot(f.as_ref(), 256);
            grad_lp_norm(&snap, 2, 2.0).unwrap() / grad_lp_norm(&snap, 1, 2.0).unwrap()
        })
        .collect();
    let c = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(c >= PI, "{ratios:?}");
    // The shear attains exactly 2 pi.
    assert!((ratios[0] - 2.0 * PI).abs() < 1e-3);
}

#[test]
fn fractional_sweep_tends_to_next_order() {
    let snap = unit_snapshot(&StreamBump::default(), 32);
    let scaled: Vec<f64> = [0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&r| {
            (1.0 - r)
                * gagliardo_integral(&snap, 1.0 + r, 2.0, GagliardoDomain::WholePlane).unwrap()
        })
        .collect();
    assert!(scaled.windows(2).all(|w| w[1] > w[0]), "{scaled:?}");
}

#[test]
fn gagliardo_quadrature_converges() {
    let bump = StreamBump::default();
    let v: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            gagliardo_integral(
                &unit_snapshot(&bump, n),
                1.5,
                2.0,
                GagliardoDomain::WholePlane,
            )
            .unwrap()
        })
        .collect();
    let ratio = (v[1] - v[0]) / (v[2] - v[1]);
    assert!(ratio > 3.5 && ratio < 4.5, "{v:?}");
    let extrapolated = gagliardo_extrapolated(
        &bump,
        &Region::unit(),
        64,
        0.0,
        1.5,
        2.0,
        GagliardoDomain::WholePlane,
    )
    .unwrap();
    // Converged value from a 256-cell refinement run, frozen.
    assert!(
        (extrapolated / 38_800.0 - 1.0).abs() < 2e-3,
        "{extrapolated}"
    );
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let snap = unit_snapshot(&StreamBump::default(), 64);
    let quad = gagliardo_integral(&snap, 1.5, 2.0, GagliardoDomain::WholePlane).unwrap();
    let mc =
        gagliardo_monte_carlo(&snap, 1.5, 2.0, GagliardoDomain::WholePlane, 1 << 20, 11).unwrap();
    // Bilinear interpolation biases the sampler slightly low.
    assert!(
        (mc.value - quad).abs() <= 4.0 * mc.std_error + 0.01 * quad,
        "{mc:?} vs {quad}"
    );
    let again =
        gagliardo_monte_carlo(&snap, 1.5, 2.0, GagliardoDomain::WholePlane, 1 << 20, 11).unwrap();
    assert_eq!(mc, again);
}

#[test]
fn poincare_degenerate_for_constants() {
    let f = Snapshot::scalar(|_, _| 3.0, &Region::unit(), 16);
    let rep = fractional_poincare_check(&f, 0.5, 2.0).unwrap();
    assert!(rep.degenerate);
    assert_eq!(rep.ratio, 0.0);
    assert!(rep.holds());
}

#[test]
fn poincare_ratio_stable_for_sine() {
    let ratios: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let f = Snapshot::scalar(|x, _| (2.0 * PI * x).sin(), &Region::unit(), n);
            let rep = fractional_poincare_check(&f, 0.5, 2.0).unwrap();
            assert!(rep.holds());
            rep.ratio
        })
        .collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min)
        - 1.0;
    assert!(spread < 0.03, "{ratios:?}");
}

#[test]
fn poincare_bounded_for_checkerboard() {
    for n in [32, 64, 128] {
        let f = Snapshot::scalar(
            |x, y| {
                if ((8.0 * x).floor() + (8.0 * y).floor()) as i64 % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            },
            &Region::unit(),
            n,
        );
        for (r, p) in [(0.25, 2.0), (0.5, 2.0), (0.5, 4.0)] {
            let rep = fractional_poincare_check(&f, r, p).unwrap();
            assert!(rep.holds(), "n={n} r={r} p={p} {rep:?}");
        }
    }
}

#[test]
fn scaling_factor_examples() {
    let case = |n, s| ScalingCase {
        lambda: 0.5,
        tau: 2.0,
        n,
        s,
        p: 2.0,
    };
    assert!((case(1, 1.0).snapshot_factor() - 1.0 / 16.0).abs() < 1e-15);
    assert!((case(2, 1.0).snapshot_factor() - 1.0 / 256.0).abs() < 1e-15);
    assert!((case(1, 2.0).snapshot_factor() / case(1, 1.0).snapshot_factor() - 4.0).abs() < 1e-12);
    assert!((case(1, 1.0).stage_factor() - 1.0 / 8.0).abs() < 1e-15);
}

#[test]
fn scaling_identity_measured() {
    let bump = StreamBump::default();
    for (n, s) in [(1, 1.0), (2, 1.0), (1, 2.0), (2, 2.0)] {
        let case = ScalingCase {
            lambda: 0.5,
            tau: 2.0,
            n,
            s,
            p: 2.0,
        };
        let rep = scaling_identity_check(&bump, &case, 512, 256, 2).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
    let frac = ScalingCase {
        lambda: 0.5,
        tau: 2.0,
        n: 1,
        s: 1.5,
        p: 2.0,
    };
    let rep = scaling_identity_check(&bump, &frac, 64, 32, 1).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn scaling_rejects_coarse_tiles() {
    let case = ScalingCase {
        lambda: 0.25,
        tau: 4.0,
        n: 3,
        s: 2.0,
        p: 2.0,
    };
    assert!(matches!(
        scaling_identity_check(&StreamBump::default(), &case, 64, 64, 1),
        Err(SobolevError::ResolutionTooCoarse { .. })
    ));
}

#[test]
fn tau_floor_examples() {
    assert!((tau_floor(0.25, 2.0) - 4.0).abs() < 1e-15);
    assert!((tau_floor(0.5, 3.0) - 4.0).abs() < 1e-15);
    assert!((tau_floor(0.5, 1.0 + 1e-9) - 1.0).abs() < 1e-8);
}

#[test]
fn budget_sup_dominates_samples() {
    let bump = StreamBump {
        modulation: 0.5,
        ..StreamBump::default()
    };
    let b = sobolev_budget(&bump, &Region::unit(), 64, 2.0, 2.0, 8).unwrap();
    assert_eq!(b.per_time.len(), 8);
    assert!(b.per_time.iter().all(|&(_, v)| v <= b.sup_in_time));
    assert!(b.integral_cost > 0.0);
    // The modulation averages out over one period.
    let steady = grad_lp_norm(&unit_snapshot(&StreamBump::default(), 64), 1, 2.0).unwrap();
    assert!(
        (b.integral_cost / steady - 1.0).abs() < 1e-2,
        "{}",
        b.integral_cost / steady
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradient_norm_is_homogeneous(alpha in -5.0f64..5.0, k in 1usize..4, p in prop::sample::select(vec![1.5, 2.0, 4.0, f64::INFINITY])) {
        let snap = unit_snapshot(&StreamBump::default(), 32);
        let base = grad_lp_norm(&snap, k, p).unwrap();
        let scaled = grad_lp_norm(&snap.scaled(alpha), k, p).unwrap();
        prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn stream_bump_is_divergence_free(power in 3i32..6, t in 0.0f64..1.0) {
        let bump = StreamBump { power, modulation: 0.3, ..StreamBump::default() };
        // The discrete divergence of the sampled field is a truncation error.
        let div = |n| divergence_max(&Snapshot::velocity(&bump, &Region::unit(), n, t));
        let (coarse, fine) = (div(64), div(128));
        prop_assert!(coarse / fine > 3.5, "{} {}", coarse, fine);
    }
}
