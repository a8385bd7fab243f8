//! Experiment configuration, orchestration, decay-exponent fits and report
//! emission (CSV tables, JSON summaries, SVG log-log plots).

mod emit;
mod experiments;
mod fit;

pub use emit::{emit_outputs, render_csv, render_decay_svg, Table};
pub use experiments::{
    budget_growth, decay_outcome, diagnostics_outcome, mincost_outcome, run_decay_experiment,
    run_diagnostics, run_experiment, run_mincost, run_scaling_experiment, run_universality,
    run_upper_bound_experiment, scaling_outcome, universality_outcome, upper_bound_outcome,
    BudgetGrowth, DecayReport, DiagnosticsReport, ScalingMatrix, StageRow, UniversalityReport,
    UpperBoundReport, COUNTEREXAMPLE_DUALITY_FLOOR, REFERENCE_COST_FLOOR,
};
pub use fit::{fit_decay, log_slope, DecayFit};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{AssemblyError, BudgetSpec};
use crate::blocks::BlockError;
use crate::diagnostics::DiagnosticsError;
use crate::domain::{BlockParams, DomainError};
use crate::lagrangian::{LagrangianError, MincostConfig};
use crate::sobolev::SobolevError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("tau = {tau} lies below the floor lambda^(1-s) = {floor}")]
    TauBelowFloor { tau: f64, floor: f64 },
    #[error("stage budgets drift by {drift:.3} relative to stage 0 (allowed {allowed})")]
    BudgetUnbounded { drift: f64, allowed: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
}

impl HarnessError {
    /// 3 for problems with the configuration, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::TauBelowFloor { .. } | HarnessError::Config(_) => 3,
            HarnessError::Block(BlockError::UnsupportedLambda(_)) => 3,
            HarnessError::Domain(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Decay,
    UpperBound,
    Scaling,
    Mincost,
    Universality,
    Diagnostics,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Decay => "decay",
            ExperimentKind::UpperBound => "upper_bound",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Mincost => "mincost",
            ExperimentKind::Universality => "universality",
            ExperimentKind::Diagnostics => "diagnostics",
        }
    }
}

/// Grid of the scaling identity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingGrid {
    pub orders: Vec<f64>,
    pub ps: Vec<f64>,
    pub ns: Vec<u32>,
    /// Cells of the whole grid for integer orders, and of the reference field.
    pub integer_cells: usize,
    pub integer_reference_cells: usize,
    /// Cells per tile side for fractional orders, and of the reference field.
    pub fractional_tile_cells: usize,
    pub samples: usize,
}

impl Default for ScalingGrid {
    fn default() -> Self {
        ScalingGrid {
            orders: vec![1.0, 2.0, 1.5],
            ps: vec![2.0, 4.0],
            ns: vec![1, 2, 3],
            integer_cells: 512,
            integer_reference_cells: 256,
            fractional_tile_cells: 32,
            samples: 2,
        }
    }
}

/// Settings of the non-universality experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UniversalitySettings {
    pub grid: usize,
    pub stages: usize,
    /// Stage whose start is `t*`.
    pub t_star_stage: usize,
    /// Particles per side of the trapping lattice.
    pub particles: usize,
    pub steps_per_segment: usize,
}

impl Default for UniversalitySettings {
    fn default() -> Self {
        UniversalitySettings {
            grid: 2048,
            stages: 10,
            t_star_stage: 8,
            particles: 64,
            steps_per_segment: 64,
        }
    }
}

/// Everything one experiment run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub params: BlockParams,
    /// Time dilation; the floor `lambda^(1-s)` when absent.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_stages")]
    pub stages: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `s` and `p` are taken from `params`.
    #[serde(default)]
    pub budget: BudgetSpec,
    /// Cap on every stage budget; 1.1 times the stage-0 budget when absent.
    #[serde(default)]
    pub budget_cap: Option<f64>,
    #[serde(default = "default_levels")]
    pub family_levels: u32,
    #[serde(default)]
    pub mincost: MincostConfig,
    #[serde(default)]
    pub scaling: ScalingGrid,
    #[serde(default)]
    pub universality: UniversalitySettings,
}

fn default_stages() -> usize {
    5
}
fn default_grid() -> usize {
    512
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_seed() -> u64 {
    7
}
fn default_levels() -> u32 {
    5
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            params: BlockParams::default(),
            tau: None,
            stages: default_stages(),
            grid: default_grid(),
            out: default_out(),
            seed: default_seed(),
            budget: BudgetSpec::default(),
            budget_cap: None,
            family_levels: default_levels(),
            mincost: MincostConfig::default(),
            scaling: ScalingGrid::default(),
            universality: UniversalitySettings::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn tau(&self) -> f64 {
        self.tau
            .unwrap_or_else(|| crate::sobolev::tau_floor(self.params.lambda, self.params.s))
    }

    /// Checks every range before anything runs.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate().map_err(HarnessError::Config)?;
        let tau = self.tau();
        if !(tau.is_finite() && tau >= 1.0) {
            return Err(HarnessError::Config(format!(
                "tau must be finite and at least 1, got {tau}"
            )));
        }
        if !self.grid.is_power_of_two() || self.grid < 8 {
            return Err(HarnessError::Config(format!(
                "grid must be a power of two >= 8, got {}",
                self.grid
            )));
        }
        if self.stages == 0 || self.stages > 16 {
            return Err(HarnessError::Config(format!(
                "stages must lie in 1..=16, got {}",
                self.stages
            )));
        }
        if matches!(
            self.kind,
            ExperimentKind::Decay | ExperimentKind::UpperBound
        ) && self.stages < 3
        {
            return Err(HarnessError::Config(
                "decay fits need at least 3 stages".into(),
            ));
        }
        if let Ok(inv) = crate::domain::lambda_reciprocal(self.params.lambda) {
            let finest = inv.checked_pow(self.stages as u32).unwrap_or(usize::MAX);
            if finest > self.grid {
                return Err(HarnessError::Config(format!(
                    "a grid of {} cells cannot resolve {} stages at lambda = {}",
                    self.grid, self.stages, self.params.lambda
                )));
            }
        }
        if self.budget.cells < 8 || self.budget.samples == 0 {
            return Err(HarnessError::Config(
                "budget sampling needs >= 8 cells and >= 1 sample".into(),
            ));
        }
        if let Some(cap) = self.budget_cap {
            if !(cap > 0.0) {
                return Err(HarnessError::Config(format!(
                    "budget cap must be positive, got {cap}"
                )));
            }
        }
        if self.family_levels == 0 {
            return Err(HarnessError::Config(
                "the family needs at least one level".into(),
            ));
        }
        if self.mincost.etas.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(HarnessError::Config(
                "exceptional measures must lie in (0,1)".into(),
            ));
        }
        let u = &self.universality;
        if u.t_star_stage >= u.stages || !u.grid.is_power_of_two() || u.particles == 0 {
            return Err(HarnessError::Config(format!(
                "invalid universality settings {u:?}"
            )));
        }
        Ok(())
    }

    fn budget_spec(&self) -> BudgetSpec {
        BudgetSpec {
            s: self.params.s,
            p: self.params.p,
            ..self.budget
        }
    }
}

/// One named check of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Assertion {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Result of one experiment, ready to be written out.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub kind: ExperimentKind,
    pub assertions: Vec<Assertion>,
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    /// SVG document and its file name.
    pub plot: Option<(String, String)>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    /// 0 when every assertion passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }
}
