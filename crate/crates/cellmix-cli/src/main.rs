use std::path::PathBuf;
use std::process::ExitCode;

use cellmix::harness::{
    emit_outputs, run_experiment, ExperimentConfig, ExperimentKind, HarnessError,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cellmix", version, about = "Cellular mixing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay exponents of both mixing scales along the reference evolution.
    Decay(Overrides),
    /// Upper envelopes and flat budgets at the critical time dilation.
    UpperBound(Overrides),
    /// Change-of-variables identities of the Sobolev semi-norms.
    Scaling(Overrides),
    /// Minimal cost, restricted Lipschitz constants and stretch witnesses.
    Mincost(Overrides),
    /// The trapped counterexample tracer of a cellular flow.
    Universality(Overrides),
    /// Mixing and length scales per stage, and the tiling lemma.
    Diagnose(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON configuration; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Overrides) {
        match self {
            Command::Decay(o) => (ExperimentKind::Decay, o),
            Command::UpperBound(o) => (ExperimentKind::UpperBound, o),
            Command::Scaling(o) => (ExperimentKind::Scaling, o),
            Command::Mincost(o) => (ExperimentKind::Mincost, o),
            Command::Universality(o) => (ExperimentKind::Universality, o),
            Command::Diagnose(o) => (ExperimentKind::Diagnostics, o),
        }
    }
}

fn load_config(kind: ExperimentKind, o: Overrides) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            // the subcommand decides the experiment
            if let Some(map) = value.as_object_mut() {
                map.insert("kind".into(), serde_json::to_value(kind)?);
            }
            serde_json::from_value(value)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(v) = o.lambda {
        config.params.lambda = v;
    }
    if let Some(v) = o.tau {
        config.tau = Some(v);
    }
    if let Some(v) = o.s {
        config.params.s = v;
    }
    if let Some(v) = o.p {
        config.params.p = v;
    }
    if let Some(v) = o.stages {
        config.stages = v;
    }
    if let Some(v) = o.grid {
        config.grid = v;
    }
    if let Some(v) = o.seed {
        config.seed = v;
    }
    if let Some(v) = o.out {
        config.out = v;
    }
    config.validate()?;
    Ok(config)
}

fn run(kind: ExperimentKind, overrides: Overrides) -> Result<i32, HarnessError> {
    let config = load_config(kind, overrides)?;
    let outcome = run_experiment(&config)?;
    for path in emit_outputs(&outcome, &config.out)? {
        println!("wrote {}", path.display());
    }
    for a in &outcome.assertions {
        println!(
            "{} {}: {}",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        );
    }
    let failures = outcome.failures();
    if !failures.is_empty() {
        eprintln!("{} assertion(s) failed:", failures.len());
        for a in failures {
            eprintln!("  {}", a.name);
        }
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let (kind, overrides) = Cli::parse().command.split();
    let code = match run(kind, overrides) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
