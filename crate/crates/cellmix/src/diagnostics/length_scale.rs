use super::balls::{radius_ladder, BallQuery, BallStencil};
use super::DiagnosticsError;
use crate::domain::{fill_threshold, CellMask, Region};
use crate::par;

/// Largest lattice ball inside a region that is filled by a set above the
/// length-scale threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LengthScaleResult {
    pub ls: f64,
    /// Gap to the next larger ladder radius.
    pub error_bar: f64,
    /// `average` is the filled fraction `|A cap B| / |B|`.
    pub witness_ball: BallQuery,
    pub threshold: f64,
}

/// Row prefix counts of a mask plus a summed-area table for pruning.
struct MaskCounts {
    n: i64,
    rows: Vec<i64>,
    sat: Vec<i64>,
}

impl MaskCounts {
    fn new(mask: &CellMask) -> Self {
        let n = mask.grid().n();
        let bits = mask.bits();
        let mut rows = vec![0i64; n * (n + 1)];
        for j in 0..n {
            let mut acc = 0;
            for i in 0..n {
                rows[j * (n + 1) + i] = acc;
                acc += bits[j * n + i] as i64;
            }
            rows[j * (n + 1) + n] = acc;
        }
        let mut sat = vec![0i64; (n + 1) * (n + 1)];
        for j in 0..n {
            for i in 0..=n {
                sat[(j + 1) * (n + 1) + i] = sat[j * (n + 1) + i] + rows[j * (n + 1) + i];
            }
        }
        MaskCounts {
            n: n as i64,
            rows,
            sat,
        }
    }

    /// Cells of the mask in columns `i0..i1`, rows `j0..j1` (clamped to the grid).
    fn rect(&self, i0: i64, i1: i64, j0: i64, j1: i64) -> i64 {
        let c = |v: i64| v.clamp(0, self.n) as usize;
        let (i0, i1, j0, j1) = (c(i0), c(i1), c(j0), c(j1));
        if i0 >= i1 || j0 >= j1 {
            return 0;
        }
        let w = self.n as usize + 1;
        self.sat[j1 * w + i1] - self.sat[j0 * w + i1] - self.sat[j1 * w + i0]
            + self.sat[j0 * w + i0]
    }

    fn ball(&self, st: &BallStencil, a: i64, b: i64) -> i64 {
        let w = self.n + 1;
        st.rows
            .iter()
            .map(|&(dj, lo, hi)| {
                let j = b + dj;
                let (i0, i1) = ((a + lo).max(0), (a + hi + 1).min(self.n));
                if j < 0 || j >= self.n || i0 >= i1 {
                    0
                } else {
                    self.rows[(j * w + i1) as usize] - self.rows[(j * w + i0) as usize]
                }
            })
            .sum()
    }
}

struct Candidate<'a> {
    counts: &'a MaskCounts,
    stencils: [BallStencil; 4],
    boxes: [(i64, i64, i64, i64); 4],
    threshold: f64,
}

impl Candidate<'_> {
    /// Filled cell count and total cell count if the ball passes the threshold.
    fn filled(&self, cx: i64, cy: i64) -> Option<(i64, u64)> {
        let k = (cx.rem_euclid(2) + 2 * cy.rem_euclid(2)) as usize;
        let st = &self.stencils[k];
        let need = self.threshold * st.count as f64;
        let (a, b) = (cx.div_euclid(2), cy.div_euclid(2));
        let (i0, i1, j0, j1) = self.boxes[k];
        if (self.counts.rect(a + i0, a + i1, b + j0, b + j1) as f64) <= need {
            return None;
        }
        let got = self.counts.ball(st, a, b);
        (got as f64 > need).then_some((got, st.count))
    }
}

fn bounding_box(st: &BallStencil) -> (i64, i64, i64, i64) {
    let j0 = st.rows.first().map_or(0, |r| r.0);
    let j1 = st.rows.last().map_or(0, |r| r.0) + 1;
    let i0 = st.rows.iter().map(|r| r.1).min().unwrap_or(0);
    let i1 = st.rows.iter().map(|r| r.2).max().unwrap_or(-1) + 1;
    (i0, i1, j0, j1)
}

/// Descending ladder scan for the largest filled ball inside `region` with
/// radius at least `r_min`.
pub(crate) fn largest_filled_ball(
    mask: &CellMask,
    region: &Region,
    threshold: f64,
    r_min: f64,
) -> Result<Option<LengthScaleResult>, DiagnosticsError> {
    let grid = mask.grid();
    let (i0, j0, c) = region.cell_range(grid)?;
    let half_h = 0.5 * grid.spacing();
    let counts = MaskCounts::new(mask);
    if counts.rect(i0 as i64, (i0 + c) as i64, j0 as i64, (j0 + c) as i64) == 0 {
        return Err(DiagnosticsError::EmptySet);
    }
    let ladder = radius_ladder(grid);
    let max_r = 0.5 * region.side + 1e-12;
    let top = ladder.iter().rposition(|&r| r <= max_r).unwrap_or(0);
    for k in (0..=top).rev() {
        let r = ladder[k];
        if r < r_min * (1.0 - 1e-12) {
            break;
        }
        let rh = r / half_h;
        let stencils = [
            BallStencil::new(rh, 0, 0),
            BallStencil::new(rh, 1, 0),
            BallStencil::new(rh, 0, 1),
            BallStencil::new(rh, 1, 1),
        ];
        let boxes = stencils.each_ref().map(bounding_box);
        let cand = Candidate {
            counts: &counts,
            stencils,
            boxes,
            threshold,
        };
        let margin = (rh - 1e-9).ceil() as i64;
        let lo = |o: usize| 2 * o as i64 + margin;
        let hi = |o: usize| 2 * (o + c) as i64 - margin;
        let (xl, xh, yl, yh) = (lo(i0), hi(i0), lo(j0), hi(j0));
        if xl > xh || yl > yh {
            continue;
        }
        let rows = (yh - yl + 1) as usize;
        let hit_row = par::find_first(0..rows, |row| {
            let cy = yl + row as i64;
            (xl..=xh).any(|cx| cand.filled(cx, cy).is_some())
        });
        if let Some(row) = hit_row {
            let cy = yl + row as i64;
            let (cx, (got, total)) = (xl..=xh)
                .find_map(|cx| cand.filled(cx, cy).map(|f| (cx, f)))
                .expect("row reported a filled ball");
            let next = ladder.get(k + 1).copied().unwrap_or(r);
            return Ok(Some(LengthScaleResult {
                ls: r,
                error_bar: next - r,
                witness_ball: BallQuery {
                    center: [-0.5 + cx as f64 * half_h, -0.5 + cy as f64 * half_h],
                    radius: r,
                    average: got as f64 / total as f64,
                },
                threshold,
            }));
        }
    }
    Ok(None)
}

/// Characteristic length scale `LS_E(A)`: the largest ladder radius of a
/// lattice ball inside `E` whose filled fraction exceeds
/// `1 - (1 - kappa) s_bar / 2`.
pub fn characteristic_length_scale(
    mask: &CellMask,
    region: &Region,
    kappa: f64,
    s_bar: f64,
) -> Result<LengthScaleResult, DiagnosticsError> {
    if !(kappa > 0.0 && kappa < 1.0 && s_bar > 0.0 && s_bar < 1.0) {
        return Err(DiagnosticsError::InvalidParameter(format!(
            "kappa {kappa} and s_bar {s_bar} must lie in (0,1)"
        )));
    }
    largest_filled_ball(mask, region, fill_threshold(kappa, s_bar), 0.0)?
        .ok_or(DiagnosticsError::EmptySet)
}
