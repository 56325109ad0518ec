//! `pno`: batch front end for planning runs, bound evaluation and the
//! Monte Carlo cross-checks.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pno_core::PnoError;

#[derive(Parser)]
#[command(name = "pno", version, about = "Probabilistically near-optimal roadmap planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a roadmap, answer one query and report the finite-time bounds.
    Plan(PlanArgs),
    /// Compute the stopping iteration for a desired bound and confidence.
    Stopping(StoppingArgs),
    /// Compare the closed-form path moments against Monte Carlo.
    VerifyMoments(MomentsArgs),
    /// Compare the closed-form coverage probability against Monte Carlo.
    VerifyCoverage(CoverageArgs),
    /// Filter a roadmap into t-spanners and audit their stretch.
    Spanner(SpannerArgs),
}

#[derive(Args, Serialize, Clone)]
pub struct PlanArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub start: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub goal: Vec<f64>,
    /// Connection rule: r-disc or k-nearest.
    #[arg(long, default_value = "r-disc")]
    pub mode: String,
    /// Upper bound on the collision-check step.
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.9)]
    pub psuccess: f64,
    /// Known optimal length; otherwise estimated from the solution.
    #[arg(long)]
    pub istar: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
pub struct StoppingArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub eps0: f64,
    #[arg(long = "delta-des")]
    pub delta_des: f64,
    #[arg(long = "p-des")]
    pub p_des: f64,
    /// Optimal length at clearance eps0; defaults to the start-goal distance.
    #[arg(long)]
    pub istar: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub start: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub goal: Vec<f64>,
    /// Run seeded planner trials at the computed iteration count.
    #[arg(long)]
    pub validate: bool,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "r-disc")]
    pub mode: String,
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
pub struct MomentsArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,10,100")]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.125,0.5")]
    pub lambda: Vec<f64>,
    /// Segments per chained path.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 120_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
pub struct CoverageArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ball spacing along the tiled segment.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// First ball center.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub start: Vec<f64>,
    /// Direction (and default extent) of the tiling.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub goal: Vec<f64>,
    /// Segment count; defaults to ceil(|goal - start| / eps).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
pub struct SpannerArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stretch factors to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1.1,1.5,2.0")]
    pub t: Vec<f64>,
    #[arg(long, default_value = "r-disc")]
    pub mode: String,
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Outcome of a command that ran to completion.
pub enum Outcome {
    Done,
    Unsolved,
}

fn exit_code(e: &PnoError) -> u8 {
    match e {
        PnoError::DegenerateDelta { .. } | PnoError::UnattainableConfidence { .. } | PnoError::InfeasibleSpec { .. } => 3,
        PnoError::Unreachable(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => commands::plan(&a),
        Command::Stopping(a) => commands::stopping(&a),
        Command::VerifyMoments(a) => commands::verify_moments(&a),
        Command::VerifyCoverage(a) => commands::verify_coverage(&a),
        Command::Spanner(a) => commands::spanner(&a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Unsolved) => ExitCode::from(4),
        Err(e) => {
            let msg = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
