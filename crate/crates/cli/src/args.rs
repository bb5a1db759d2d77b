use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gensylv", version, about = "Benchmark driver for generalized Sylvester equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem (or a batch from --config) with the extended Krylov method.
    Run(RunArgs),
    /// Cross-check the Kronecker, Neumann and Krylov solutions on a small problem.
    Verify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Mimo,
    Lowrank,
    Helmholtz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlocksArg {
    Commutator,
    Lowrank,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResidualArg {
    Cheap,
    True,
    Both,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Benchmark family; mutually exclusive with --config.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub family: Option<Family>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Coupling strength of the MIMO terms.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Low-rank family with the unscaled Laplacian (Neumann radius above one).
    #[arg(long)]
    pub scaled: bool,
    /// Shift applied to the Helmholtz coefficient.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Relative residual target.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub blocks: Option<BlocksArg>,
    /// Depth of the generalized Krylov starting space in commutator mode.
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long, value_enum)]
    pub residual: Option<ResidualArg>,
    /// Directory for the report, residual history and factors.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the solution factors as L.mtx and R.mtx (needs --out).
    #[arg(long)]
    pub factors: bool,
    /// JSON run description: `{"problem": {...}, "solve": {...}}` or an array of them.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
