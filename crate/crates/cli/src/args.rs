use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "fairalloc",
    version,
    about = "Distributionally robust fair multi-resource allocation"
)]
pub struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one model and write its report as JSON.
    Solve(SolveArgs),
    /// Solve every model on the same data and print a CSV row per model.
    Compare(CompareArgs),
    /// Solve over a list of parameter values and print a CSV row per value.
    Sweep(SweepArgs),
    /// Replicated confidence bounds and their relative gap.
    Bounds(BoundsArgs),
    /// Fairness properties of a stored report; exit 1 if one fails.
    Check(CheckArgs),
    /// Draw scenarios and write them as a trace CSV.
    Gen(GenArgs),
    /// Write a built-in instance and generator to a directory.
    Preset(PresetArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    Fds,
    Ev,
    Robust,
    Saa,
    Sadr,
}

/// Instance, scenario source and model parameters shared by the solving commands.
#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// Instance JSON (capacities, optional box, labels, ambiguity).
    #[arg(long)]
    pub instance: PathBuf,
    /// Scenario trace CSV (scenario_id,user,resource,requirement).
    #[arg(long, conflicts_with = "gen")]
    pub scenarios: Option<PathBuf>,
    /// Generator spec JSON; scenarios are drawn from it.
    #[arg(long)]
    pub gen: Option<PathBuf>,
    /// Override the generator's scenario count.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Fixed efficiency exponent; without it λ = (1 − β)/β.
    #[arg(long, conflicts_with = "coupled", allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Use the coupled exponent λ = (1 − β)/β (the default).
    #[arg(long)]
    pub coupled: bool,
    #[arg(long, default_value_t = 0.95)]
    pub theta: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    /// Moment ambiguity set scaled by Δ from the sample moments.
    #[arg(long, conflicts_with = "vacuous")]
    pub delta: Option<f64>,
    /// Ambiguity set containing every distribution on the scenarios.
    #[arg(long)]
    pub vacuous: bool,
    /// Robust and EV models see the generator's support corners instead of the sample.
    #[arg(long)]
    pub corners: bool,
    /// Use the printed EV chance form Prob ≥ 1 − θ.
    #[arg(long)]
    pub printed_ev: bool,
    #[arg(long, env = "FAIRALLOC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock times (off keeps output byte-identical across runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the SA-DR cut log as CSV.
    #[arg(long)]
    pub cut_log: Option<PathBuf>,
    /// Attach the fairness property report.
    #[arg(long)]
    pub check: bool,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Theta,
    Beta,
    Delta,
    Rho,
    Omega,
    #[value(name = "variance_config", alias = "variance-config")]
    VarianceConfig,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma list or inclusive range start:stop:step.
    #[arg(long)]
    pub values: String,
    #[arg(long, value_enum, default_value = "sadr")]
    pub model: ModelArg,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Rows solved concurrently; output stays in value order.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Add confidence bounds and the gap column (saa or sadr).
    #[arg(long)]
    pub bounds: bool,
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundsModeArg {
    SaaPoint,
    DrReplicate,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value = "saa")]
    pub model: ModelArg,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    /// Defaults to saa-point for saa and dr-replicate for sadr.
    #[arg(long, value_enum)]
    pub mode: Option<BoundsModeArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyArg {
    Uniform,
    Triangular,
    TwoPoint,
    Box,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Generator spec JSON.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    pub spec: Option<PathBuf>,
    /// Built-in generator: uniform/triangular over the 4-user Azure-like
    /// ranges, the toy two-point law, or the CloudSim-like box at ρ = 0.5.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, env = "FAIRALLOC_SEED")]
    pub seed: Option<u64>,
    /// Trace CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetName {
    Toy,
    Azure4,
    Cloudsim,
}

#[derive(Args, Debug)]
pub struct PresetArgs {
    #[arg(value_enum)]
    pub name: PresetName,
    /// Directory receiving instance.json and gen.json.
    #[arg(long)]
    pub dir: PathBuf,
}
