//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "regionboot", version, about = "Approximately unbiased bootstrap p-values for the problem of regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// p-values of one observation under every requested method.
    Pvalue(PvalueArgs),
    /// Reproduce the p-value table (1) or the rejection table (2).
    Table(TableArgs),
    /// Multiscale BP or DBP curve with its polynomial fit.
    Curve(CurveArgs),
    /// Closed-form expansions from a geometric summary or a region and point.
    Oracle(OracleArgs),
}

/// Knobs shared with the JSON config file; flags override the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Knobs {
    /// JSON config with keys region, y, methods, scales, reps, seed, backend, alpha, out_dir.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Region name (`cone`, `efron`) or JSON descriptor.
    #[arg(long)]
    pub region: Option<String>,
    /// Observation as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Comma-separated method names or `all`.
    #[arg(long, alias = "method")]
    pub methods: Option<String>,
    /// Scales as `a:b:n` or a comma-separated list.
    #[arg(long)]
    pub scales: Option<String>,
    /// Monte Carlo replicates per scale.
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Extrapolation of multiscale curves.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mc,
    Quad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fit,
    Taylor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Quad,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKindArg {
    Bp,
    Dbp,
}

#[derive(Debug, Args)]
pub struct PvalueArgs {
    #[command(flatten)]
    pub knobs: Knobs,
    /// Report path (defaults to `<out_dir>/pvalue.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Which table: 1 or 2.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
    pub which: u8,
    #[command(flatten)]
    pub knobs: Knobs,
    /// Rejection integration scheme (table 2).
    #[arg(long, value_enum, default_value_t = SchemeArg::Quad)]
    pub scheme: SchemeArg,
    /// Comma-separated boundary parameters (table 2).
    #[arg(long, allow_hyphen_values = true)]
    pub u_list: Option<String>,
    /// Draws of `Y` for the Monte Carlo scheme (table 2).
    #[arg(long, default_value_t = 10_000)]
    pub draws: u64,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub knobs: Knobs,
    #[arg(long, value_enum, default_value_t = CurveKindArg::Bp)]
    pub kind: CurveKindArg,
    /// Degree of the fitted polynomial in `σ²`.
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub knobs: Knobs,
    /// Geometric summary as JSON (`gamma1`..`gamma4`, `beta0`..`beta3`).
    #[arg(long, conflicts_with_all = ["lambda0", "gamma"])]
    pub summary: Option<String>,
    /// Signed distance `λ₀` used with `--gamma`.
    #[arg(long, requires = "gamma")]
    pub lambda0: Option<f64>,
    /// Curvature traces `γ₁,γ₂,γ₃,γ₄`.
    #[arg(long, requires = "lambda0", allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma2: f64,
    /// Projection-error term of a perturbed double bootstrap center.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa: f64,
    /// Report path (defaults to `<out_dir>/oracle.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
