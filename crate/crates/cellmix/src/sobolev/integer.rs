use super::snapshot::Snapshot;
use super::SobolevError;

/// Second-order central stencil `(first offset, coefficients)` for `d^order/dx^order`.
fn stencil(order: usize) -> Option<(i64, &'static [f64])> {
    match order {
        0 => Some((0, &[1.0])),
        1 => Some((-1, &[-0.5, 0.0, 0.5])),
        2 => Some((-1, &[1.0, -2.0, 1.0])),
        3 => Some((-2, &[-0.5, 1.0, 0.0, -1.0, 0.5])),
        4 => Some((-2, &[1.0, -4.0, 6.0, -4.0, 1.0])),
        _ => None,
    }
}

/// Highest derivative order with a built-in stencil.
pub(crate) const MAX_ORDER: usize = 4;

/// `d^ax/dx^ax d^ay/dy^ay` of component `c` at the interior cells.
pub(crate) fn derivative(snap: &Snapshot, c: usize, ax: usize, ay: usize) -> Vec<f64> {
    derivative_ring(snap, c, ax, ay, 0)
}

/// Same on the interior extended by `ring` cells on every side, a square of
/// side `n + 2 ring`. Stored samples end at the halo; beyond it values are zero.
fn derivative_ring(snap: &Snapshot, c: usize, ax: usize, ay: usize, ring: usize) -> Vec<f64> {
    let (sx, cx) = stencil(ax).expect("order checked by caller");
    let (sy, cy) = stencil(ay).expect("order checked by caller");
    let m = snap.n + 2 * ring;
    let w = snap.stored_side() as i64;
    let shift = snap.halo as i64 - ring as i64;
    let data = &snap.comps[c];
    let scale = snap.h.powi(-((ax + ay) as i32));
    crate::par::map_collect(0..m * m, |idx| {
        let (i, j) = ((idx % m) as i64 + shift, (idx / m) as i64 + shift);
        let mut acc = 0.0;
        for (my, &ky) in cy.iter().enumerate() {
            if ky == 0.0 {
                continue;
            }
            let jj = j + sy + my as i64;
            if jj < 0 || jj >= w {
                continue;
            }
            for (mx, &kx) in cx.iter().enumerate() {
                if kx == 0.0 {
                    continue;
                }
                let ii = i + sx + mx as i64;
                if ii >= 0 && ii < w {
                    acc += ky * kx * data[(jj * w + ii) as usize];
                }
            }
        }
        acc * scale
    })
}

fn binomial(k: usize, a: usize) -> f64 {
    (0..a).fold(1.0, |acc, m| acc * (k - m) as f64 / (m + 1) as f64)
}

pub(crate) fn check_order(snap: &Snapshot, k: usize) -> Result<(), SobolevError> {
    if k > MAX_ORDER {
        return Err(SobolevError::InvalidOrder(format!(
            "derivative order {k} > {MAX_ORDER}"
        )));
    }
    if snap.n < 2 * k + 1 {
        return Err(SobolevError::StencilOverrun { k, n: snap.n });
    }
    Ok(())
}

/// Entries of `grad^k` of every component as `(component, x-order, y-order, weight)`,
/// the weight being the square root of the multiplicity so that the Euclidean
/// norm over entries is the Frobenius norm of the symmetric tensor.
pub(crate) fn tensor_entries(snap: &Snapshot, k: usize) -> Vec<(usize, usize, usize, f64)> {
    (0..snap.comps.len())
        .flat_map(|c| (0..=k).map(move |a| (c, a, k - a, binomial(k, a).sqrt())))
        .collect()
}

/// Values of the weighted entries of `grad^k u` at the interior cells.
pub(crate) fn grad_tensor(snap: &Snapshot, k: usize) -> Result<Vec<Vec<f64>>, SobolevError> {
    check_order(snap, k)?;
    Ok(tensor_entries(snap, k)
        .into_iter()
        .map(|(c, ax, ay, w)| {
            let mut d = derivative(snap, c, ax, ay);
            if w != 1.0 {
                d.iter_mut().for_each(|v| *v *= w);
            }
            d
        })
        .collect())
}

/// Central differences `(d/dx, d/dy)` of every weighted entry of `grad^k u`,
/// taken from the entries on a one-cell ring around the interior.
pub(crate) fn grad_tensor_slopes(
    snap: &Snapshot,
    k: usize,
) -> Result<Vec<[Vec<f64>; 2]>, SobolevError> {
    check_order(snap, k)?;
    let n = snap.n;
    let m = n + 2;
    let half = 0.5 / snap.h;
    Ok(tensor_entries(snap, k)
        .into_iter()
        .map(|(c, ax, ay, w)| {
            let f = derivative_ring(snap, c, ax, ay, 1);
            let at = |i: usize, j: usize| f[j * m + i];
            let mut gx = Vec::with_capacity(n * n);
            let mut gy = Vec::with_capacity(n * n);
            for j in 1..=n {
                for i in 1..=n {
                    gx.push(w * half * (at(i + 1, j) - at(i - 1, j)));
                    gy.push(w * half * (at(i, j + 1) - at(i, j - 1)));
                }
            }
            [gx, gy]
        })
        .collect())
}

fn pointwise_norm_sq(entries: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|idx| entries.iter().map(|e| e[idx] * e[idx]).sum())
        .collect()
}

/// `int |grad^k u|^p dx` over the snapshot square (finite `p`).
pub fn grad_lp_power(snap: &Snapshot, k: usize, p: f64) -> Result<f64, SobolevError> {
    if !p.is_finite() || p < 1.0 {
        return Err(SobolevError::InvalidOrder(format!("p = {p}")));
    }
    let entries = grad_tensor(snap, k)?;
    let sq = pointwise_norm_sq(&entries, snap.n * snap.n);
    let area = snap.h * snap.h;
    Ok(crate::par::sum(0..sq.len(), |i| sq[i].powf(0.5 * p)) * area)
}

/// `||grad^k u||_{L^p}` over the snapshot square with central differences;
/// `p = inf` gives the max norm.
pub fn grad_lp_norm(snap: &Snapshot, k: usize, p: f64) -> Result<f64, SobolevError> {
    if p == f64::INFINITY {
        let entries = grad_tensor(snap, k)?;
        let sq = pointwise_norm_sq(&entries, snap.n * snap.n);
        return Ok(sq.into_iter().fold(0.0, f64::max).sqrt());
    }
    Ok(grad_lp_power(snap, k, p)?.powf(1.0 / p))
}

/// Largest central-difference divergence of a two-component snapshot.
pub fn divergence_max(snap: &Snapshot) -> f64 {
    let dx = derivative(snap, 0, 1, 0);
    let dy = derivative(snap, 1, 0, 1);
    dx.iter()
        .zip(&dy)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max)
}
