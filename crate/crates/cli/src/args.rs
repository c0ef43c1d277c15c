use std::path::PathBuf;

use ccmv_core::{SolverConfig, SolverKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Cardinality-constrained mean-variance portfolio solver.
#[derive(Debug, Parser, Serialize)]
#[command(name = "ccmv", version, about)]
pub struct RunManifest {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Solve one instance and write the solution.
    Solve(SolveArgs),
    /// Rolling-horizon out-of-sample evaluation on a returns CSV.
    Backtest(BacktestArgs),
    /// Solver-by-k comparison table with gaps against a reference.
    Compare(CompareArgs),
    /// Timing sweep over seeded synthetic instances.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// An external solver's solutions from --reference-file.
    MosekFile,
    Oracle,
    Pd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Pd,
    Padm,
    Oracle,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Pd => SolverKind::Pd,
            SolverArg::Padm => SolverKind::Padm,
            SolverArg::Oracle => SolverKind::Oracle,
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Problem JSON: {"A": [[..]], "mu": [..], "tau": t, "k": k}.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    /// Returns CSV with a leading date column; moments are estimated from all rows.
    #[arg(long, value_name = "PATH")]
    pub returns: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SolverConfig::default().rho0)]
    pub rho0: f64,
    #[arg(long, default_value_t = SolverConfig::default().zeta)]
    pub zeta: f64,
    #[arg(long, default_value_t = SolverConfig::default().eps_inner)]
    pub eps_inner: f64,
    #[arg(long, default_value_t = SolverConfig::default().eps_outer)]
    pub eps_outer: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_inner)]
    pub max_inner: usize,
    #[arg(long, default_value_t = SolverConfig::default().max_outer)]
    pub max_outer: usize,
}

impl SolverArgs {
    pub fn config(&self) -> ccmv_core::Result<SolverConfig> {
        let cfg = SolverConfig {
            rho0: self.rho0,
            zeta: self.zeta,
            eps_inner: self.eps_inner,
            eps_outer: self.eps_outer,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Cardinality bound.
    #[arg(long)]
    pub k: usize,
    /// Risk-aversion trade-off; defaults to the JSON value, or 0.5 for returns input.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Pd)]
    pub solver: SolverArg,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// json: solution document; csv: one row of weights per ticker.
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
    /// Also write the per-penalty trace as CSV.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BacktestArgs {
    #[arg(long, value_name = "PATH")]
    pub returns: PathBuf,
    /// Estimation window length in periods.
    #[arg(long)]
    pub window: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Pd)]
    pub solver: SolverArg,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// json: full report; csv: one row per window.
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Cardinality bounds, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Solvers to tabulate, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SolverArg::Pd, SolverArg::Padm])]
    pub solver: Vec<SolverArg>,
    #[arg(long, value_enum, default_value_t = Reference::Pd)]
    pub reference: Reference,
    /// Solution JSON (one object, or an array aligned with --k) for --reference mosek-file.
    #[arg(long, value_name = "PATH")]
    pub reference_file: Option<PathBuf>,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    /// Parallel solves; 1 keeps the timings free of contention.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Instance sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [226, 476])]
    pub sizes: Vec<usize>,
    /// Cardinality bounds, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 20])]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver_args: SolverArgs,
    /// Parallel solves; 1 keeps the timings free of contention.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
}
