use crate::domain::{Grid, TracerField};

/// Ratio between consecutive ladder radii.
pub const LADDER_STEP: f64 = 1.090_507_732_665_257_7; // 2^(1/8)

/// Radii `(h/2) 2^(k/8)` up to 1. Powers of two are exact.
pub fn radius_ladder(grid: &Grid) -> Vec<f64> {
    let base = 0.5 * grid.spacing();
    let frac: Vec<f64> = (0..8).map(|m| (m as f64 / 8.0).exp2()).collect();
    let mut out = Vec::new();
    for k in 0.. {
        let r = base * (1u64 << (k / 8)) as f64 * frac[k % 8];
        if r > 1.0 + 1e-12 {
            break;
        }
        out.push(r);
    }
    out
}

/// A ball together with the tracer average over it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BallQuery {
    pub center: [f64; 2],
    pub radius: f64,
    /// Mean over the ball; cells outside `Q` count as zeros.
    pub average: f64,
}

impl BallQuery {
    /// Whether the ball reaches outside `Q`.
    pub fn crosses_boundary(&self) -> bool {
        self.center
            .iter()
            .any(|c| c.abs() + self.radius > 0.5 + 1e-12)
    }
}

/// Mean of `rho` over the lattice cells whose centers lie strictly inside
/// `B(center, r)`, counting cells outside `Q` as zeros. Brute force.
pub fn ball_average(rho: &TracerField, center: [f64; 2], r: f64) -> f64 {
    let g = rho.grid();
    let h = g.spacing();
    let n = g.n() as i64;
    let lo = |c: f64| ((c - r + 0.5) / h - 0.5).floor() as i64 - 1;
    let hi = |c: f64| ((c + r + 0.5) / h - 0.5).ceil() as i64 + 1;
    let (mut sum, mut count) = (0.0, 0usize);
    for j in lo(center[1])..=hi(center[1]) {
        let y = -0.5 + (j as f64 + 0.5) * h - center[1];
        for i in lo(center[0])..=hi(center[0]) {
            let x = -0.5 + (i as f64 + 0.5) * h - center[0];
            if x * x + y * y < r * r {
                count += 1;
                if i >= 0 && i < n && j >= 0 && j < n {
                    sum += rho.at(i as usize, j as usize);
                }
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Cell rows of a disc centered on the half-cell lattice.
///
/// A lattice center has half-cell coordinates `(2a + px, 2b + py)`; cell
/// `(a + di, b + dj)` lies in the disc when
/// `(2 di + 1 - px)^2 + (2 dj + 1 - py)^2 < (2 r / h)^2`.
#[derive(Debug, Clone)]
pub struct BallStencil {
    /// `(dj, di_lo, di_hi)` with an inclusive column range, ordered by `dj`.
    pub rows: Vec<(i64, i64, i64)>,
    /// Number of lattice cells in the disc, including cells outside `Q`.
    pub count: u64,
}

impl BallStencil {
    pub fn new(radius_over_half_h: f64, px: i64, py: i64) -> Self {
        let rr = radius_over_half_h * radius_over_half_h;
        let reach = radius_over_half_h.ceil() as i64 + 1;
        let mut rows = Vec::new();
        let mut count = 0u64;
        for dj in -reach..=reach {
            let ty = (2 * dj + 1 - py) as f64;
            let rem = rr - ty * ty;
            if rem <= 0.0 {
                continue;
            }
            let inside = |di: i64| {
                let tx = (2 * di + 1 - px) as f64;
                tx * tx < rem
            };
            let s = rem.sqrt();
            let mut hi = ((s - 1.0 + px as f64) / 2.0).floor() as i64 + 1;
            while hi > -reach && !inside(hi) {
                hi -= 1;
            }
            while inside(hi + 1) {
                hi += 1;
            }
            let mut lo = ((-s - 1.0 + px as f64) / 2.0).ceil() as i64 - 1;
            while lo < reach && !inside(lo) {
                lo += 1;
            }
            while inside(lo - 1) {
                lo -= 1;
            }
            if !inside(lo) || !inside(hi) {
                continue;
            }
            if lo <= hi {
                rows.push((dj, lo, hi));
                count += (hi - lo + 1) as u64;
            }
        }
        BallStencil { rows, count }
    }
}
