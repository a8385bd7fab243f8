use num_rational::Ratio;

use super::DomainError;

/// Geometric stage times `T_n = sum_{i<n} tau^i`, stored for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Schedule {
    pub tau: f64,
    steps: Vec<f64>,
}

impl Schedule {
    /// `T_n`; `T_0 = 0`.
    pub fn t(&self, n: usize) -> f64 {
        self.steps[n]
    }

    pub fn n_max(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Closed form of `T_n`.
    pub fn closed_form(tau: f64, n: usize) -> f64 {
        if tau == 1.0 {
            n as f64
        } else {
            (tau.powi(n as i32) - 1.0) / (tau - 1.0)
        }
    }

    /// Stage containing time `t`: the `n` with `T_n <= t < T_{n+1}`, clamped to the last stage.
    pub fn stage_at(&self, t: f64) -> usize {
        let last = self.n_max().saturating_sub(1);
        (0..self.n_max())
            .find(|&n| t < self.steps[n + 1])
            .unwrap_or(last)
    }
}

/// Builds `T_0..=T_{n_max}` by direct summation.
pub fn time_steps(tau: f64, n_max: usize) -> Result<Schedule, DomainError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(DomainError::InvalidTau(tau));
    }
    if n_max == 0 {
        return Err(DomainError::InvalidGrid("n_max must be at least 1".into()));
    }
    let mut steps = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    let mut pow = 1.0;
    steps.push(0.0);
    for _ in 0..n_max {
        acc += pow;
        pow *= tau;
        steps.push(acc);
    }
    Ok(Schedule { tau, steps })
}

/// Fine-tiling rescaling: `(tau^l, (1 - tau^l) / (1 - tau))`.
///
/// With these, `C * T~_n = T_{n l}` where `T~` uses the dilation `tau^l`.
pub fn rescale_schedule(tau: f64, l: u32) -> Result<(f64, f64), DomainError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(DomainError::InvalidTau(tau));
    }
    if tau == 1.0 {
        return Err(DomainError::TauEqualsOne);
    }
    if l == 0 {
        return Err(DomainError::InvalidGrid("l must be at least 1".into()));
    }
    let tl = tau.powi(l as i32);
    Ok((tl, (1.0 - tl) / (1.0 - tau)))
}

fn geometric_sum(tau: Ratio<i128>, n: u32) -> Ratio<i128> {
    let mut acc = Ratio::from_integer(0);
    let mut pow = Ratio::from_integer(1);
    for _ in 0..n {
        acc += pow;
        pow *= tau;
    }
    acc
}

/// Checks `C * T~_n == T_{n l}` in exact rational arithmetic.
pub fn rescale_identity_exact(tau: Ratio<i128>, l: u32, n: u32) -> Result<bool, DomainError> {
    let one = Ratio::from_integer(1);
    if tau == one {
        return Err(DomainError::TauEqualsOne);
    }
    let mut tl = one;
    for _ in 0..l {
        tl *= tau;
    }
    let c = (one - tl) / (one - tau);
    Ok(c * geometric_sum(tl, n) == geometric_sum(tau, n * l))
}
