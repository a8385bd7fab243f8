use super::balls::{radius_ladder, BallQuery, BallStencil};
use super::DiagnosticsError;
use crate::domain::TracerField;
use crate::par;

/// Result of the ladder scan for the geometric mixing scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GeometricScale {
    /// Smallest ladder radius at which every lattice ball is mixed.
    pub value: f64,
    /// Distance to the next smaller ladder radius.
    pub error_bar: f64,
    /// An unmixed ball at the next smaller radius, if any.
    pub witness: Option<BallQuery>,
    pub kappa: f64,
}

/// Fixed-point scale for normalized values; keeps ball sums exact integers.
const QUANT: f64 = (1u64 << 40) as f64;

/// Tracer normalized by its sup norm, quantized, with per-row prefix sums.
pub(crate) struct PrefixField {
    n: i64,
    prefix: Vec<i64>,
    sup: f64,
}

impl PrefixField {
    pub(crate) fn new(rho: &TracerField) -> Option<Self> {
        let sup = rho.sup_norm();
        if sup == 0.0 {
            return None;
        }
        let n = rho.n();
        let mut prefix = vec![0i64; n * (n + 1)];
        let vals = rho.values();
        par::for_each_chunk_mut(&mut prefix, n + 1, |j, row| {
            let mut acc = 0i64;
            for i in 0..n {
                row[i] = acc;
                acc += (vals[j * n + i] / sup * QUANT).round() as i64;
            }
            row[n] = acc;
        });
        Some(PrefixField {
            n: n as i64,
            prefix,
            sup,
        })
    }

    #[inline]
    pub(crate) fn ball_sum(&self, st: &BallStencil, a: i64, b: i64) -> i64 {
        let n = self.n;
        let Some(first) = st.rows.first() else {
            return 0;
        };
        let dj0 = first.0;
        let k_lo = (-b - dj0).max(0) as usize;
        let k_hi = ((n - b - dj0).max(0) as usize).min(st.rows.len());
        let mut s = 0i64;
        for &(dj, lo, hi) in &st.rows[k_lo.min(k_hi)..k_hi] {
            let j = b + dj;
            let i0 = (a + lo).max(0);
            let i1 = (a + hi + 1).min(n);
            if i0 < i1 {
                let base = (j * (n + 1)) as usize;
                s += self.prefix[base + i1 as usize] - self.prefix[base + i0 as usize];
            }
        }
        s
    }
}

struct RadiusProbe<'a> {
    field: &'a PrefixField,
    stencils: [BallStencil; 4],
    thresholds: [f64; 4],
}

impl RadiusProbe<'_> {
    fn stencil(&self, cx: i64, cy: i64) -> usize {
        (cx.rem_euclid(2) + 2 * cy.rem_euclid(2)) as usize
    }

    /// Whether the lattice ball centered at half-cell coordinates `(cx, cy)` is unmixed.
    #[inline]
    fn fails(&self, cx: i64, cy: i64) -> bool {
        let k = self.stencil(cx, cy);
        let s = self
            .field
            .ball_sum(&self.stencils[k], cx.div_euclid(2), cy.div_euclid(2));
        (s.unsigned_abs() as f64) > self.thresholds[k]
    }

    fn query(&self, cx: i64, cy: i64, r: f64, half_h: f64) -> BallQuery {
        let k = self.stencil(cx, cy);
        let s = self
            .field
            .ball_sum(&self.stencils[k], cx.div_euclid(2), cy.div_euclid(2));
        BallQuery {
            center: [-0.5 + cx as f64 * half_h, -0.5 + cy as f64 * half_h],
            radius: r,
            average: s as f64 / QUANT / self.stencils[k].count as f64 * self.field.sup,
        }
    }
}

/// Geometric mixing scale: the smallest ladder radius `r` such that every ball
/// `B(x, r)` with `x` on the half-cell lattice has `|avg| <= kappa ||rho||_inf`.
///
/// Centers range over all lattice points whose balls meet `Q`; values outside
/// `Q` are zero. Radii are scanned in increasing order and each scan stops at
/// the first unmixed ball. The last unmixed center is tried first at the next
/// radius, which makes failing radii cheap.
pub fn geometric_mixing_scale(
    rho: &TracerField,
    kappa: f64,
) -> Result<GeometricScale, DiagnosticsError> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(DiagnosticsError::InvalidParameter(format!(
            "kappa must lie in (0,1), got {kappa}"
        )));
    }
    let field = PrefixField::new(rho).ok_or(DiagnosticsError::ZeroField)?;
    let grid = rho.grid();
    let n = grid.n() as i64;
    let half_h = 0.5 * grid.spacing();
    let ladder = radius_ladder(grid);
    let mut cache: Option<(i64, i64)> = None;
    let mut witness = None;
    for (k, &r) in ladder.iter().enumerate() {
        let rh = r / half_h;
        let stencils = [
            BallStencil::new(rh, 0, 0),
            BallStencil::new(rh, 1, 0),
            BallStencil::new(rh, 0, 1),
            BallStencil::new(rh, 1, 1),
        ];
        let thresholds = stencils
            .each_ref()
            .map(|s| (kappa + 1e-12) * s.count as f64 * QUANT);
        let probe = RadiusProbe {
            field: &field,
            stencils,
            thresholds,
        };
        if let Some((cx, cy)) = cache {
            if probe.fails(cx, cy) {
                witness = Some(probe.query(cx, cy, r, half_h));
                continue;
            }
        }
        let reach = 2 * ((r / grid.spacing()).ceil() as i64 + 1);
        let lo = -reach;
        let hi = 2 * n + reach;
        let width = (hi - lo + 1) as usize;
        let row_fails = |row: usize| {
            let cy = lo + row as i64;
            (lo..=hi).any(|cx| probe.fails(cx, cy))
        };
        match par::find_first(0..width, row_fails) {
            Some(row) => {
                let cy = lo + row as i64;
                let cx = (lo..=hi)
                    .find(|&cx| probe.fails(cx, cy))
                    .expect("row reported an unmixed ball");
                cache = Some((cx, cy));
                witness = Some(probe.query(cx, cy, r, half_h));
            }
            None => {
                let prev = if k == 0 { 0.0 } else { ladder[k - 1] };
                return Ok(GeometricScale {
                    value: r,
                    error_bar: r - prev,
                    witness: if k == 0 { None } else { witness },
                    kappa,
                });
            }
        }
    }
    Err(DiagnosticsError::NoPassingRadius)
}
