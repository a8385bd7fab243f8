use serde::Serialize;

use super::evolution::{evolve, CellularEvolution};
use super::{AssemblyError, BlockPlan};
use crate::blocks::Block;
use crate::domain::{lambda_reciprocal, rescale_schedule, time_steps, DomainError, Schedule};

/// Comparison of a rescaled evolution with the original.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaleReport {
    pub l: u32,
    pub tau_tilde: f64,
    pub lambda_tilde: f64,
    /// `C = (1 - tau^l) / (1 - tau)`.
    pub c: f64,
    /// `|C T~_n - T_{n l}|` for `n = 0..=stages`.
    pub time_errors: Vec<f64>,
    /// Whether the rescaled state at `T~_n` equals the original at `T_{n l}`, cell by cell.
    pub states_equal: Vec<bool>,
}

impl RescaleReport {
    pub fn all_states_equal(&self) -> bool {
        self.states_equal.iter().all(|&b| b)
    }
}

/// Regroups every `l` consecutive stages of a uniform evolution into one
/// stage of the tiling `T_{lambda^l}` with dilation `tau^l`, run with the
/// `l`-level nested block, and compares it with the original.
pub fn fine_tiling_rescale(
    evolution: &CellularEvolution,
    l: u32,
) -> Result<(CellularEvolution, RescaleReport), AssemblyError> {
    let tau = evolution.tau();
    let (tau_tilde, c) = rescale_schedule(tau, l).map_err(|e| match e {
        DomainError::TauEqualsOne => AssemblyError::TauEqualsOne,
        other => other.into(),
    })?;
    let BlockPlan::Uniform(block) = &evolution.plan else {
        return Err(AssemblyError::InvalidPlan(
            "fine-tiling rescaling needs a uniform plan".into(),
        ));
    };
    let inv = lambda_reciprocal(evolution.lambda())?;
    let nested = Block {
        id: format!("{}-nested-{l}", block.id),
        map: block.map.nested(l, inv, tau)?,
        field: block
            .field
            .as_ref()
            .map(|f| f.nested(l, inv, tau))
            .transpose()?,
    };
    let stages = evolution.n_stages() / l as usize;
    let mut params = evolution.params;
    params.lambda = evolution.lambda().powi(l as i32);
    let schedule = time_steps(tau_tilde, stages.max(1))?;
    let rescaled = evolve(
        evolution.state(0),
        stages,
        &params,
        &schedule,
        &BlockPlan::Uniform(nested),
        None,
    )?;
    let time_errors = (0..=stages)
        .map(|n| (c * schedule.t(n) - Schedule::closed_form(tau, n * l as usize)).abs())
        .collect();
    let states_equal = (0..=stages)
        .map(|n| rescaled.state(n).values() == evolution.state(n * l as usize).values())
        .collect();
    let report = RescaleReport {
        l,
        tau_tilde,
        lambda_tilde: params.lambda,
        c,
        time_errors,
        states_equal,
    };
    Ok((rescaled, report))
}
