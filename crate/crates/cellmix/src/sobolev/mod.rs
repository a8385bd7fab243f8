//! Integer and fractional Sobolev semi-norms of velocity fields, budgets over
//! block intervals, and the change-of-variables identities behind the time
//! dilation floor.

mod fields;
mod fractional;
mod integer;
mod scaling;
mod snapshot;

pub use fields::{Patched, RigidRotation, ShearSine, StreamBump, VelocityField, ZeroVelocity};
pub use fractional::{
    fractional_poincare_check, fractional_seminorm, gagliardo_extrapolated, gagliardo_integral,
    gagliardo_monte_carlo, poincare_proof_constant, GagliardoDomain, MonteCarloEstimate,
    PoincareReport,
};
pub use integer::{divergence_max, grad_lp_norm, grad_lp_power};
pub use scaling::{scaling_identity_check, ScalingCase, ScalingReport, SCALING_TOLERANCE};
pub use snapshot::{Snapshot, HALO};

use thiserror::Error;

use crate::domain::DomainError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SobolevError {
    #[error("derivative order {k} needs more than {n} cells per side")]
    StencilOverrun { k: usize, n: usize },
    #[error("fractional semi-norms need a finite exponent")]
    InfinityPNotSupported,
    #[error("invalid order or exponent: {0}")]
    InvalidOrder(String),
    #[error("tile of {cells} cells per side is too coarse for order {k}")]
    ResolutionTooCoarse { cells: usize, k: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// `lambda^{1-s}`: the smallest time dilation keeping `W^{s,p}` budgets bounded.
pub fn tau_floor(lambda: f64, s: f64) -> f64 {
    lambda.powf(1.0 - s)
}

/// Splits `s` into an integer order `k >= 1` and a fractional part `r in [0,1)`.
pub fn split_order(s: f64) -> Result<(usize, f64), SobolevError> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(SobolevError::InvalidOrder(format!("s = {s}")));
    }
    let k = s.floor();
    let r = s - k;
    Ok((k as usize, if r < 1e-12 { 0.0 } else { r }))
}

/// Sampled `W^{s,p}` semi-norms of a field over a time interval.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SobolevBudget {
    pub s: f64,
    pub p: f64,
    /// `(t, ||u(t)||_{W^{s,p}})` at the midpoint samples.
    pub per_time: Vec<(f64, f64)>,
    pub sup_in_time: f64,
    /// Midpoint rule for `int ||grad u(t)||_{L^p} dt`.
    pub integral_cost: f64,
}

/// `W^{s,p}` semi-norm of one snapshot: `||grad^s u||_{L^p}` for integer `s`,
/// the whole-plane Gagliardo semi-norm of `grad^k u` for `s = k + r`.
pub fn snapshot_seminorm(snap: &Snapshot, s: f64, p: f64) -> Result<f64, SobolevError> {
    let (k, r) = split_order(s)?;
    if r == 0.0 {
        grad_lp_norm(snap, k, p)
    } else {
        fractional_seminorm(snap, s, p, GagliardoDomain::WholePlane)
    }
}

/// Budget of `field` over its interval on `region`, sampled on an `n`-cell grid at
/// `samples` midpoint times.
pub fn sobolev_budget(
    field: &dyn VelocityField,
    region: &crate::domain::Region,
    n: usize,
    s: f64,
    p: f64,
    samples: usize,
) -> Result<SobolevBudget, SobolevError> {
    let (t0, t1) = field.interval();
    let dt = (t1 - t0) / samples as f64;
    let mut per_time = Vec::with_capacity(samples);
    let mut integral_cost = 0.0;
    for m in 0..samples {
        let t = t0 + (m as f64 + 0.5) * dt;
        let snap = Snapshot::velocity(field, region, n, t);
        per_time.push((t, snapshot_seminorm(&snap, s, p)?));
        integral_cost += grad_lp_norm(&snap, 1, p)? * dt;
    }
    let sup_in_time = per_time.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(SobolevBudget {
        s,
        p,
        per_time,
        sup_in_time,
        integral_cost,
    })
}
