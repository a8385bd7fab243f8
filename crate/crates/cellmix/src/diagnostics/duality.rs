use std::f64::consts::PI;

use super::balls::ball_average;
use super::DiagnosticsError;
use crate::domain::TracerField;

/// Radial test function: `1` on `B(x, r)`, `0` outside `B(x, r_out)`, cubic
/// smoothstep in between.
#[derive(Debug, Clone, Copy)]
struct Bump {
    center: [f64; 2],
    r: f64,
    r_out: f64,
}

impl Bump {
    fn new(center: [f64; 2], r: f64, kappa: f64) -> Self {
        Bump {
            center,
            r,
            r_out: r * (1.0 + kappa / 20.0),
        }
    }

    fn radial(&self, d: f64) -> f64 {
        if d <= self.r {
            1.0
        } else if d >= self.r_out {
            0.0
        } else {
            let u = (d - self.r) / (self.r_out - self.r);
            1.0 - u * u * (3.0 - 2.0 * u)
        }
    }

    fn radial_slope(&self, d: f64) -> f64 {
        let w = self.r_out - self.r;
        let u = (d - self.r) / w;
        -6.0 * u * (1.0 - u) / w
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.radial((x - self.center[0]).hypot(y - self.center[1]))
    }

    /// `||grad g||_{L^2}` by 4-point Gauss-Legendre on the ramp, exact for this profile.
    fn gradient_norm(&self) -> f64 {
        const NODES: [f64; 4] = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        const WEIGHTS: [f64; 4] = [
            0.347_854_845_137_453_9,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_9,
        ];
        let half = 0.5 * (self.r_out - self.r);
        let mid = 0.5 * (self.r_out + self.r);
        let integral: f64 = NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&t, w)| {
                let d = mid + half * t;
                w * self.radial_slope(d).powi(2) * d
            })
            .sum::<f64>()
            * half;
        (2.0 * PI * integral).sqrt()
    }
}

/// `||grad g||_{L^2}` of the bump with inner radius `r`.
pub fn bump_gradient_norm(r: f64, kappa: f64) -> f64 {
    Bump::new([0.0, 0.0], r, kappa).gradient_norm()
}

/// `(int rho g, ||grad g||_{L^2})` for the bump on `B(center, r)`.
///
/// Cells entirely inside the inner ball take weight one, cells that meet the
/// ramp are sampled on a 4x4 sub-grid.
pub fn duality_pairing(rho: &TracerField, center: [f64; 2], r: f64, kappa: f64) -> (f64, f64) {
    let bump = Bump::new(center, r, kappa);
    let g = rho.grid();
    let h = g.spacing();
    let n = g.n();
    let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
    let cell_range = |c: f64| {
        let lo = ((c - bump.r_out + 0.5) / h).floor().max(0.0) as usize;
        let hi = (((c + bump.r_out + 0.5) / h).ceil() as usize).min(n);
        lo..hi
    };
    let mut pairing = 0.0;
    for j in cell_range(center[1]) {
        let y = g.center(j);
        for i in cell_range(center[0]) {
            let x = g.center(i);
            let d = (x - center[0]).hypot(y - center[1]);
            let w = if d + half_diag <= bump.r {
                1.0
            } else if d - half_diag >= bump.r_out {
                0.0
            } else {
                let mut acc = 0.0;
                for sj in 0..4 {
                    for si in 0..4 {
                        let sx = x + (si as f64 - 1.5) * h / 4.0;
                        let sy = y + (sj as f64 - 1.5) * h / 4.0;
                        acc += bump.at(sx, sy);
                    }
                }
                acc / 16.0
            };
            pairing += w * rho.at(i, j);
        }
    }
    (pairing * h * h, bump.gradient_norm())
}

/// Lower bound `|int rho g| / ||g||_{H^1}` on `||rho||_{H^{-1}}` from the bump
/// supported near an unmixed ball.
pub fn h_minus1_duality_lower_bound(
    rho: &TracerField,
    center: [f64; 2],
    r: f64,
    kappa: f64,
) -> Result<f64, DiagnosticsError> {
    let sup = rho.sup_norm();
    if sup == 0.0 {
        return Ok(0.0);
    }
    let ratio = ball_average(rho, center, r).abs() / sup;
    if ratio <= kappa {
        return Err(DiagnosticsError::BallNotUnmixed { ratio, kappa });
    }
    let (pairing, grad) = duality_pairing(rho, center, r, kappa);
    Ok(pairing.abs() / grad)
}
