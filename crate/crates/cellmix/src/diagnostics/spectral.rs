use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::DiagnosticsError;
use crate::domain::TracerField;
use crate::par;

/// In-place 2D DFT of an `m x m` row-major buffer; the result is transposed.
fn fft2_transposed(buf: &mut Vec<Complex64>, m: usize) {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let rows = |data: &mut [Complex64]| {
        par::for_each_chunk_mut(data, m, |_, row| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(row, &mut scratch);
        });
    };
    rows(buf);
    let mut t = vec![Complex64::default(); m * m];
    par::for_each_chunk_mut(&mut t, m, |c, col| {
        for (r, v) in col.iter_mut().enumerate() {
            *v = buf[r * m + c];
        }
    });
    rows(&mut t);
    *buf = t;
}

/// `h^4 sum_{k != 0} |DFT_k|^2 / (4 pi^2 |k|^2)` over the modes of an `m x m` box.
fn spectral_sum(buf: &[Complex64], m: usize, h: f64) -> f64 {
    let signed = |k: usize| {
        if k <= m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        }
    };
    let rows = par::map_collect(0..m, |a| {
        let ka = signed(a);
        let mut s = 0.0;
        for b in 0..m {
            if a == 0 && b == 0 {
                continue;
            }
            let kb = signed(b);
            s += buf[a * m + b].norm_sqr() / (ka * ka + kb * kb);
        }
        s
    });
    let total: f64 = rows.into_iter().sum();
    h.powi(4) * total / (4.0 * PI * PI)
}

fn check_mean_free(rho: &TracerField) -> Result<(), DiagnosticsError> {
    let mean = rho.mean();
    if mean.abs() > 1e-10 * rho.sup_norm() {
        return Err(DiagnosticsError::NotMeanFree { mean });
    }
    Ok(())
}

/// `||rho||_{H^{-1}(R^2)}` of the zero extension of `rho`, computed on a
/// periodic box of side `pad_factor` by the discrete Fourier transform.
pub fn functional_mixing_scale(
    rho: &TracerField,
    pad_factor: usize,
) -> Result<f64, DiagnosticsError> {
    if pad_factor < 2 {
        return Err(DiagnosticsError::PadTooSmall(pad_factor));
    }
    if rho.sup_norm() == 0.0 {
        return Ok(0.0);
    }
    check_mean_free(rho)?;
    Ok(box_norm(rho, pad_factor))
}

/// `H^{-1}` norm of `rho` viewed as a function on the unit torus.
pub fn periodic_h_minus1(rho: &TracerField) -> Result<f64, DiagnosticsError> {
    if rho.sup_norm() == 0.0 {
        return Ok(0.0);
    }
    check_mean_free(rho)?;
    Ok(box_norm(rho, 1))
}

fn box_norm(rho: &TracerField, pad: usize) -> f64 {
    let n = rho.n();
    let m = n * pad;
    let mut buf = vec![Complex64::default(); m * m];
    let vals = rho.values();
    for j in 0..n {
        for i in 0..n {
            buf[j * m + i] = Complex64::new(vals[j * n + i], 0.0);
        }
    }
    fft2_transposed(&mut buf, m);
    spectral_sum(&buf, m, rho.grid().spacing()).sqrt()
}

/// Spectral norm at two padding factors.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PadConvergence {
    pub coarse_pad: usize,
    pub fine_pad: usize,
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
}

/// Compares the spectral norm at pad factors 2 and 4.
pub fn functional_convergence(rho: &TracerField) -> Result<PadConvergence, DiagnosticsError> {
    let coarse = functional_mixing_scale(rho, 2)?;
    let fine = functional_mixing_scale(rho, 4)?;
    Ok(PadConvergence {
        coarse_pad: 2,
        fine_pad: 4,
        coarse,
        fine,
        relative_change: if fine == 0.0 {
            0.0
        } else {
            (coarse - fine).abs() / fine
        },
    })
}
