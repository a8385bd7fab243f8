use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::integer::{grad_tensor, grad_tensor_slopes};
use super::snapshot::Snapshot;
use super::SobolevError;
use crate::par;

/// Where the outer variable of the Gagliardo double integral ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GagliardoDomain {
    /// `R^2 x R^2` with the field extended by zero outside the snapshot square.
    WholePlane,
    /// The snapshot square only.
    Box,
}

/// Cell offsets (per axis) inside which pairs use the local linear model.
const NEAR_CELLS: usize = 2;
const ANGLES: usize = 512;
const TAIL_ANGLES: usize = 1024;

fn split_fractional(s: f64) -> Result<(usize, f64), SobolevError> {
    let k = s.floor();
    let r = s - k;
    if !(s > 0.0) || !s.is_finite() || r < 1e-12 {
        return Err(SobolevError::InvalidOrder(format!(
            "s = {s} has no fractional part in (0,1)"
        )));
    }
    Ok((k as usize, r))
}

#[inline]
fn pow_half(d2: f64, p: f64) -> f64 {
    if p == 2.0 {
        d2
    } else if p == 4.0 {
        d2 * d2
    } else {
        d2.powf(0.5 * p)
    }
}

/// `int_0^inf rho^q a_x(rho c) a_y(rho s) d rho`, where `a` is the overlap of
/// a unit cell with the union of cells at offsets `-lo..=hi` along one axis.
fn radial_profile(q: f64, c: f64, s: f64, ext: [usize; 4]) -> f64 {
    let reach = |comp: f64, lo: usize, hi: usize| -> (f64, f64) {
        // (|component|, number of full cells available in that direction)
        (comp.abs(), if comp >= 0.0 { lo } else { hi } as f64)
    };
    let (ax, lx) = reach(c, ext[0], ext[1]);
    let (ay, ly) = reach(s, ext[2], ext[3]);
    let mut breaks = vec![0.0];
    for (a, l) in [(ax, lx), (ay, ly)] {
        if a > 1e-15 {
            breaks.push(l / a);
            breaks.push((l + 1.0) / a);
        }
    }
    breaks.retain(|b| b.is_finite());
    breaks.sort_by(f64::total_cmp);
    let end = breaks.iter().copied().fold(0.0, f64::max);
    let factor = |a: f64, l: f64, rho: f64| -> (f64, f64) {
        let z = rho * a;
        if z <= l {
            (1.0, 0.0)
        } else if z <= l + 1.0 {
            (l + 1.0, -a)
        } else {
            (0.0, 0.0)
        }
    };
    let prim = |e: f64, x: f64| x.powf(e + 1.0) / (e + 1.0);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (r0, r1) = (w[0], w[1].min(end));
        if r1 <= r0 {
            continue;
        }
        let mid = 0.5 * (r0 + r1);
        let (a0, a1) = factor(ax, lx, mid);
        let (b0, b1) = factor(ay, ly, mid);
        let (c0, c1, c2) = (a0 * b0, a0 * b1 + a1 * b0, a1 * b1);
        total += c0 * (prim(q, r1) - prim(q, r0))
            + c1 * (prim(q + 1.0, r1) - prim(q + 1.0, r0))
            + c2 * (prim(q + 2.0, r1) - prim(q + 2.0, r0));
    }
    total
}

fn angle_nodes(count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|m| {
            let th = 2.0 * PI * (m as f64 + 0.5) / count as f64;
            (th.cos(), th.sin())
        })
        .collect()
}

/// `int_{R^2 minus S} |x - y|^{-2-alpha} dy` for `x` inside the square `S = [0, side]^2`.
fn exterior_kernel(x: [f64; 2], side: f64, alpha: f64, nodes: &[(f64, f64)]) -> f64 {
    let sum: f64 = nodes
        .iter()
        .map(|&(c, s)| {
            let t = |p: f64, d: f64| {
                if d > 0.0 {
                    (side - p) / d
                } else if d < 0.0 {
                    -p / d
                } else {
                    f64::INFINITY
                }
            };
            t(x[0], c).min(t(x[1], s)).powf(-alpha)
        })
        .sum();
    sum * 2.0 * PI / nodes.len() as f64 / alpha
}

/// `||f||^p` with `||f||^p = int int |grad^k f(x) - grad^k f(y)|^p / |x-y|^{2+rp}`
/// for `s = k + r`.
///
/// Cell pairs farther apart than a small block use the midpoint rule. Pairs
/// inside the block around each cell are integrated exactly against the local
/// linear model of `grad^k f`. On the whole plane the pairs with one point
/// outside the square, where the field vanishes, are added through the
/// exterior kernel.
pub fn gagliardo_integral(
    snap: &Snapshot,
    s: f64,
    p: f64,
    domain: GagliardoDomain,
) -> Result<f64, SobolevError> {
    if !p.is_finite() {
        return Err(SobolevError::InfinityPNotSupported);
    }
    if p < 1.0 {
        return Err(SobolevError::InvalidOrder(format!("p = {p}")));
    }
    let (k, r) = split_fractional(s)?;
    let entries = grad_tensor(snap, k)?;
    let slopes = grad_tensor_slopes(snap, k)?;
    let n = snap.n;
    let h = snap.h;
    let alpha = r * p;
    let q = p - 1.0 - alpha;
    let cells = n * n;
    let values: Vec<Vec<f64>> = (0..cells)
        .map(|idx| entries.iter().map(|e| e[idx]).collect())
        .collect();

    let weights: Vec<f64> = (0..cells)
        .map(|idx| {
            let (dx, dy) = ((idx % n) as f64, (idx / n) as f64);
            if idx == 0 {
                0.0
            } else {
                (h * h * (dx * dx + dy * dy)).powf(-0.5 * (2.0 + alpha)) * h.powi(4)
            }
        })
        .collect();
    let near = NEAR_CELLS as i64;
    let far = par::sum(0..cells, |i| {
        let (ix, iy) = ((i % n) as i64, (i / n) as i64);
        let fi = &values[i];
        let mut acc = 0.0;
        for j in i + 1..cells {
            let (jx, jy) = ((j % n) as i64, (j / n) as i64);
            let (dx, dy) = ((jx - ix).abs(), (jy - iy).abs());
            if dx <= near && dy <= near {
                continue;
            }
            let d2: f64 = fi
                .iter()
                .zip(&values[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 > 0.0 {
                acc += pow_half(d2, p) * weights[dy as usize * n + dx as usize];
            }
        }
        2.0 * acc
    });

    let nodes = angle_nodes(ANGLES);
    let ext_of = |i: usize| -> [usize; 4] {
        let (ix, iy) = (i % n, i / n);
        [
            ix.min(NEAR_CELLS),
            (n - 1 - ix).min(NEAR_CELLS),
            iy.min(NEAR_CELLS),
            (n - 1 - iy).min(NEAR_CELLS),
        ]
    };
    let mut profiles: HashMap<[usize; 4], Vec<f64>> = HashMap::new();
    for i in 0..cells {
        profiles.entry(ext_of(i)).or_insert_with_key(|ext| {
            nodes
                .iter()
                .map(|&(c, s)| radial_profile(q, c, s, *ext))
                .collect()
        });
    }
    let dtheta = 2.0 * PI / ANGLES as f64;
    let local_scale = h.powf(2.0 + p - alpha);
    let local = par::sum(0..cells, |i| {
        let mut b = [0.0; 3];
        for sl in &slopes {
            let (gx, gy) = (sl[0][i], sl[1][i]);
            b[0] += gx * gx;
            b[1] += gx * gy;
            b[2] += gy * gy;
        }
        if b[0] == 0.0 && b[2] == 0.0 {
            return 0.0;
        }
        let prof = &profiles[&ext_of(i)];
        let sum: f64 = nodes
            .iter()
            .zip(prof)
            .map(|(&(c, s), &w)| pow_half(b[0] * c * c + 2.0 * b[1] * c * s + b[2] * s * s, p) * w)
            .sum();
        sum * dtheta * local_scale
    });

    let tail = match domain {
        GagliardoDomain::Box => 0.0,
        GagliardoDomain::WholePlane => {
            let tnodes = angle_nodes(TAIL_ANGLES);
            let side = snap.side();
            2.0 * par::sum(0..cells, |i| {
                let fp = pow_half(values[i].iter().map(|v| v * v).sum(), p);
                if fp == 0.0 {
                    return 0.0;
                }
                let x = [((i % n) as f64 + 0.5) * h, ((i / n) as f64 + 0.5) * h];
                fp * exterior_kernel(x, side, alpha, &tnodes) * h * h
            })
        }
    };
    Ok(far + local + tail)
}

/// `(gagliardo_integral)^{1/p}`.
pub fn fractional_seminorm(
    snap: &Snapshot,
    s: f64,
    p: f64,
    domain: GagliardoDomain,
) -> Result<f64, SobolevError> {
    Ok(gagliardo_integral(snap, s, p, domain)?.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Bilinear interpolation of cell-centered values, clamped at the outer half cells.
fn interpolate(values: &[f64], n: usize, u: f64, v: f64) -> f64 {
    let fx = (u - 0.5).clamp(0.0, (n - 1) as f64);
    let fy = (v - 0.5).clamp(0.0, (n - 1) as f64);
    let (i0, j0) = (
        (fx.floor() as usize).min(n.saturating_sub(2)),
        (fy.floor() as usize).min(n.saturating_sub(2)),
    );
    let (i1, j1) = ((i0 + 1).min(n - 1), (j0 + 1).min(n - 1));
    let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
    let at = |i: usize, j: usize| values[j * n + i];
    (1.0 - ty) * ((1.0 - tx) * at(i0, j0) + tx * at(i1, j0))
        + ty * ((1.0 - tx) * at(i0, j1) + tx * at(i1, j1))
}

/// Monte Carlo estimate of the same double integral with seeded, batched
/// sampling. Pairs inside the square are sampled with radial density
/// proportional to `rho^{p-1-rp}`; the exterior part is added by quadrature.
pub fn gagliardo_monte_carlo(
    snap: &Snapshot,
    s: f64,
    p: f64,
    domain: GagliardoDomain,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate, SobolevError> {
    if !p.is_finite() {
        return Err(SobolevError::InfinityPNotSupported);
    }
    let (k, r) = split_fractional(s)?;
    let entries = grad_tensor(snap, k)?;
    let n = snap.n;
    let side = snap.side();
    let alpha = r * p;
    let q = p - 1.0 - alpha;
    let diam = side * std::f64::consts::SQRT_2;
    let scale = side * side * 2.0 * PI * diam.powf(q + 1.0) / (q + 1.0);
    const BATCH: usize = 4096;
    let batches = samples.div_ceil(BATCH);
    let sums = par::map_collect(0..batches, |b| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let count = BATCH.min(samples - b * BATCH);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let x = [rng.gen::<f64>() * side, rng.gen::<f64>() * side];
            let th = rng.gen::<f64>() * 2.0 * PI;
            let rho = diam * rng.gen::<f64>().powf(1.0 / (q + 1.0));
            let y = [x[0] + rho * th.cos(), x[1] + rho * th.sin()];
            let mut val = 0.0;
            if y[0] > 0.0 && y[0] < side && y[1] > 0.0 && y[1] < side && rho > 0.0 {
                let d2: f64 = entries
                    .iter()
                    .map(|e| {
                        let a = interpolate(e, n, x[0] / snap.h, x[1] / snap.h);
                        let c = interpolate(e, n, y[0] / snap.h, y[1] / snap.h);
                        (a - c) * (a - c)
                    })
                    .sum();
                val = scale * pow_half(d2, p) / rho.powf(p);
            }
            s1 += val;
            s2 += val * val;
        }
        (s1, s2)
    });
    let (s1, s2) = sums
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s1 / m;
    let var = (s2 / m - mean * mean).max(0.0);
    let tail = match domain {
        GagliardoDomain::Box => 0.0,
        GagliardoDomain::WholePlane => {
            let tnodes = angle_nodes(TAIL_ANGLES);
            let h = snap.h;
            2.0 * par::sum(0..n * n, |i| {
                let fp = pow_half(entries.iter().map(|e| e[i] * e[i]).sum(), p);
                if fp == 0.0 {
                    return 0.0;
                }
                let x = [((i % n) as f64 + 0.5) * h, ((i / n) as f64 + 0.5) * h];
                fp * exterior_kernel(x, side, alpha, &tnodes) * h * h
            })
        }
    };
    Ok(MonteCarloEstimate {
        value: mean + tail,
        std_error: (var / m).sqrt(),
        samples,
    })
}

/// Constant of the Jensen argument on a square of side `side`:
/// `int |f - f_Q|^p <= diam^{2+rp} / |Q| * int int |f(x)-f(y)|^p / |x-y|^{2+rp}`.
pub fn poincare_proof_constant(r: f64, p: f64, side: f64) -> f64 {
    (std::f64::consts::SQRT_2 * side).powf(2.0 + r * p) / (side * side)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PoincareReport {
    /// `int |f - f_Q|^p`.
    pub deviation: f64,
    /// Gagliardo integral over the square.
    pub gagliardo: f64,
    pub ratio: f64,
    /// Both sides vanish; `ratio` is set to 0.
    pub degenerate: bool,
    pub bound: f64,
}

impl PoincareReport {
    pub fn holds(&self) -> bool {
        self.ratio <= self.bound
    }
}

/// `int |f - f_Q|^p` over the Gagliardo integral of a scalar snapshot `f`
/// with fractional order `r`.
pub fn fractional_poincare_check(
    f: &Snapshot,
    r: f64,
    p: f64,
) -> Result<PoincareReport, SobolevError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(SobolevError::InvalidOrder(format!("r = {r}")));
    }
    let vals = &f.interior(0);
    let area = f.h * f.h;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let deviation: f64 = vals.iter().map(|v| (v - mean).abs().powf(p)).sum::<f64>() * area;
    let gag = gagliardo_integral(f, r, p, GagliardoDomain::Box)?;
    let scale = vals
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let degenerate = deviation <= 1e-24 * scale.powf(p) && gag <= 1e-20 * scale.powf(p);
    Ok(PoincareReport {
        deviation,
        gagliardo: gag,
        ratio: if degenerate { 0.0 } else { deviation / gag },
        degenerate,
        bound: poincare_proof_constant(r, p, f.side()),
    })
}

/// Gagliardo integral of a sampled field with one Richardson step: the
/// quadrature converges at second order, so `I_n + (I_n - I_{n/2}) / 3`.
pub fn gagliardo_extrapolated(
    field: &dyn super::VelocityField,
    region: &crate::domain::Region,
    n: usize,
    t: f64,
    s: f64,
    p: f64,
    domain: GagliardoDomain,
) -> Result<f64, SobolevError> {
    if n % 2 != 0 {
        return Err(SobolevError::InvalidOrder(format!(
            "extrapolation needs an even cell count, got {n}"
        )));
    }
    let fine = gagliardo_integral(&Snapshot::velocity(field, region, n, t), s, p, domain)?;
    let coarse = gagliardo_integral(&Snapshot::velocity(field, region, n / 2, t), s, p, domain)?;
    Ok(fine + (fine - coarse) / 3.0)
}
