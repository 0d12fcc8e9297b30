use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "drawdown", version, about = "Scale functions, draw-down exit identities and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scale-function tables.
    #[command(subcommand)]
    Scale(ScaleCommand),
    /// Draw-down identities.
    #[command(subcommand)]
    Identity(IdentityCommand),
    /// Monte Carlo verification.
    #[command(subcommand)]
    Mc(McCommand),
    /// Run the consistency battery and print a pass/fail table.
    CompareReport(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum ScaleCommand {
    /// Tabulate W, W', W'' and Z on a grid.
    Eval(ScaleArgs),
}

#[derive(Debug, Subcommand)]
pub enum IdentityCommand {
    /// Evaluate one identity on a parameter grid.
    Eval(IdentityArgs),
}

#[derive(Debug, Subcommand)]
pub enum McCommand {
    /// Compare a simulated estimate with its formula value.
    Verify(McArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ClosedForm,
    Inversion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    UpExit,
    Triple,
    Potential,
    Creep,
    Hit,
    Mass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McWhich {
    UpExit,
    Triple,
    Creep,
    Potential,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output format; defaults to CSV for grids and JSON for single results.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub q: f64,
    /// Points as `a,b,c` or `start:end:count`.
    #[arg(long, default_value = "0.1:5:25", allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
    pub method: MethodArg,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Draw-down function as inline JSON or a file path.
    #[arg(long)]
    pub xi: String,
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    /// Killing rate(s); list or grid.
    #[arg(long, default_value = "1")]
    pub q: String,
    /// Time parameter of the triple transform; defaults to q.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub v: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    /// Potential-density level(s); list or grid.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Lower level for the hitting transform.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
    pub method: MethodArg,
    /// Accept 0 as the creeping transform of a model without Gaussian part.
    #[arg(long)]
    pub zero_creep_ok: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Draw-down function as inline JSON or a file path.
    #[arg(long)]
    pub xi: String,
    #[arg(long, value_enum, default_value_t = McWhich::UpExit)]
    pub which: McWhich,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// Decreasing list of grid sizes; a single value `h` means `h, h/2, h/4`.
    #[arg(long, default_value = "1e-3")]
    pub dt: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, env = "DRAWDOWN_THREADS")]
    pub threads: Option<usize>,
    /// Bin edges for `--which potential`.
    #[arg(long, allow_hyphen_values = true)]
    pub bins: Option<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Also run Monte Carlo checks with this many paths per configuration.
    #[arg(long)]
    pub mc_paths: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, env = "DRAWDOWN_THREADS")]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}
