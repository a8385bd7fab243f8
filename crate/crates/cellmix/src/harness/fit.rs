use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::HarnessError;

/// Least-squares power law `value ~ C (t + offset)^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// `(T_n, value)` as measured.
    pub series: Vec<(f64, f64)>,
    /// Added to every time before taking logarithms.
    pub clock_offset: f64,
    pub exponent: f64,
    /// 95% confidence half-width of the exponent.
    pub half_width: f64,
    /// `log C`.
    pub intercept: f64,
    /// Exponent of the same series against the unshifted times.
    pub raw_exponent: f64,
}

/// Slope, intercept and slope standard error of `y` on `x`.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (rss / (m - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, intercept, se)
}

/// Fits a power law on log-log axes; needs at least three points with
/// positive shifted time and positive value.
pub fn fit_decay(series: &[(f64, f64)], clock_offset: f64) -> Result<DecayFit, HarnessError> {
    if series.len() < 3 {
        return Err(HarnessError::Fit(format!(
            "{} points, at least 3 needed",
            series.len()
        )));
    }
    if let Some(bad) = series
        .iter()
        .find(|&&(t, v)| !(t + clock_offset > 0.0 && v > 0.0 && v.is_finite()))
    {
        return Err(HarnessError::Fit(format!(
            "point {bad:?} cannot be fitted on log-log axes"
        )));
    }
    let y: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let x: Vec<f64> = series.iter().map(|p| (p.0 + clock_offset).ln()).collect();
    let (exponent, intercept, se) = least_squares(&x, &y);
    if !exponent.is_finite() {
        return Err(HarnessError::Fit("degenerate time series".into()));
    }
    let dof = (series.len() - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| HarnessError::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    let raw_exponent = if series.iter().all(|p| p.0 > 0.0) {
        let raw: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
        least_squares(&raw, &y).0
    } else {
        f64::NAN
    };
    Ok(DecayFit {
        series: series.to_vec(),
        clock_offset,
        exponent,
        half_width: t * se,
        intercept,
        raw_exponent,
    })
}

/// Log-log slope of `value` against `t` over the whole series, without an
/// error estimate; used for short tails.
pub fn log_slope(series: &[(f64, f64)]) -> f64 {
    let x: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    least_squares(&x, &y).0
}
