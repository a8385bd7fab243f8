use super::fields::VelocityField;
use crate::domain::Region;

/// Cells sampled beyond each side of a snapshot so that difference stencils
/// see the field itself rather than a zero extension.
pub const HALO: usize = 2;

/// Vector-valued samples at the cell centers of an aligned square plus a halo.
///
/// Each component is a row-major array of side `n + 2 * halo`; interior cell
/// `(i, j)` sits at `(i + halo, j + halo)`. Beyond the halo the field counts as zero.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Snapshot {
    pub n: usize,
    pub h: f64,
    /// Lower-left corner of the square.
    pub origin: [f64; 2],
    pub halo: usize,
    pub comps: Vec<Vec<f64>>,
    pub t: f64,
}

impl Snapshot {
    /// Samples `field` at time `t` on `n x n` cells covering `region`.
    pub fn velocity(field: &dyn VelocityField, region: &Region, n: usize, t: f64) -> Self {
        let h = region.side / n as f64;
        let origin = [region.x0, region.y0];
        let w = n + 2 * HALO;
        let samples = crate::par::map_collect(0..w * w, |idx| {
            let (i, j) = ((idx % w) as f64, (idx / w) as f64);
            let off = HALO as f64 - 0.5;
            field.velocity(t, [origin[0] + (i - off) * h, origin[1] + (j - off) * h])
        });
        Snapshot {
            n,
            h,
            origin,
            halo: HALO,
            comps: vec![
                samples.iter().map(|v| v[0]).collect(),
                samples.iter().map(|v| v[1]).collect(),
            ],
            t,
        }
    }

    /// Scalar samples of `f` on `n x n` cells covering `region`, with halo.
    pub fn scalar(f: impl Fn(f64, f64) -> f64 + Sync + Send, region: &Region, n: usize) -> Self {
        let h = region.side / n as f64;
        let w = n + 2 * HALO;
        let off = HALO as f64 - 0.5;
        let values = crate::par::map_collect(0..w * w, |idx| {
            let (i, j) = ((idx % w) as f64, (idx / w) as f64);
            f(region.x0 + (i - off) * h, region.y0 + (j - off) * h)
        });
        Snapshot {
            n,
            h,
            origin: [region.x0, region.y0],
            halo: HALO,
            comps: vec![values],
            t: 0.0,
        }
    }

    /// Wraps raw `n * n` component arrays (no halo: zero extension).
    pub fn from_components(n: usize, h: f64, origin: [f64; 2], comps: Vec<Vec<f64>>) -> Self {
        assert!(comps.iter().all(|c| c.len() == n * n), "component size");
        Snapshot {
            n,
            h,
            origin,
            halo: 0,
            comps,
            t: 0.0,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.comps
            .iter_mut()
            .for_each(|c| c.iter_mut().for_each(|v| *v *= alpha));
        out
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Side of the stored arrays.
    pub fn stored_side(&self) -> usize {
        self.n + 2 * self.halo
    }

    /// Interior values of component `c`.
    pub fn interior(&self, c: usize) -> Vec<f64> {
        let w = self.stored_side();
        (0..self.n * self.n)
            .map(|idx| {
                let (i, j) = (idx % self.n + self.halo, idx / self.n + self.halo);
                self.comps[c][j * w + i]
            })
            .collect()
    }
}
