//! `ccte` — risk-measure tables, single CCTE queries, copula fitting from
//! price/return CSVs, and plot-ready sweep data.

mod commands;
mod io;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "ccte",
    version,
    about = "Copula conditional tail expectation toolkit",
    after_help = "Exit codes: 2 flag parse error, 3 domain/ingestion error, \
                  4 numeric failure, 5 degenerate joint tail.\n\
                  Set CCTE_THREADS to pin the size of the worker pool."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write to this path instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render VaR, CTE, and per-theta CCTE blocks over level grids.
    Table(TableArgs),
    /// Compute a single CCTE value, optionally checked against the Monte
    /// Carlo oracle.
    Ccte(CcteArgs),
    /// Fit pairwise copulas to a CSV of prices or returns and score every
    /// pair.
    Fit(FitArgs),
    /// Emit a long-format diagonal sweep (s = t) of VaR, CTE, and CCTE.
    Plotdata(PlotArgs),
}

#[derive(Args)]
pub struct TableArgs {
    /// Copula family: product, fgm, gumbel, or clayton.
    #[arg(long)]
    pub family: String,
    /// Comma-separated dependence parameters; defaults to the family's
    /// reference sweep.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Pareto index of the target margin.
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    /// Target levels (rows of each CCTE block).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID)]
    pub s_grid: Vec<f64>,
    /// Associated levels (columns of each CCTE block).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID)]
    pub t_grid: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub const DEFAULT_GRID: [f64; 5] = [0.9000, 0.9225, 0.9450, 0.9675, 0.9900];

#[derive(Args)]
#[command(group = clap::ArgGroup::new("margin").required(true).args(["alpha", "margin_file"]))]
pub struct CcteArgs {
    /// Copula family: product, fgm, gumbel, or clayton.
    #[arg(long)]
    pub family: String,
    /// Dependence parameter (ignored for product).
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Pareto index of the target margin.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// File with one observation per line; builds an empirical margin.
    #[arg(long)]
    pub margin_file: Option<std::path::PathBuf>,
    /// Target level.
    #[arg(long)]
    pub s: f64,
    /// Associated level.
    #[arg(long)]
    pub t: f64,
    /// Cross-check with the Monte Carlo oracle: sample count and seed.
    #[arg(long, num_args = 2, value_names = ["N", "SEED"])]
    pub oracle: Option<Vec<u64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// Positive price levels; log returns are taken first.
    Prices,
    /// Log returns used as-is.
    Returns,
}

#[derive(Args)]
pub struct FitArgs {
    /// CSV with one header row and one column per series; a leading
    /// "date" column is ignored.
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Whether the CSV holds prices or returns.
    #[arg(long, value_enum, default_value = "prices")]
    pub kind: InputKind,
    /// Copula family to fit: fgm, gumbel, or clayton.
    #[arg(long)]
    pub family: String,
    /// Levels (s, t) for the pairwise CCTE matrix.
    #[arg(long, num_args = 2, value_names = ["S", "T"])]
    pub levels: Vec<f64>,
    /// Margin for each target series: "empirical" or "pareto:<alpha>".
    #[arg(long, default_value = "empirical")]
    pub margin: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Copula family: product, fgm, gumbel, or clayton.
    #[arg(long)]
    pub family: String,
    /// Comma-separated dependence parameters; defaults to the family's
    /// reference sweep.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Pareto index of the target margin.
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("CCTE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            ccte::exec::set_thread_count(n.max(1));
        }
    }
    let result = match cli.command {
        Command::Table(args) => commands::table(args),
        Command::Ccte(args) => commands::ccte_query(args),
        Command::Fit(args) => commands::fit(args),
        Command::Plotdata(args) => commands::plotdata(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Maps error classes onto the documented exit codes. Flag parse errors
/// never reach here; clap exits with 2 on its own.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ccte::Error>() {
        Some(ccte::Error::DegenerateTail(_)) | Some(ccte::Error::InsufficientTailMass { .. }) => 5,
        Some(ccte::Error::IntegrationFailure { .. }) | Some(ccte::Error::RootFind(_)) => 4,
        Some(_) => 3,
        None => 1,
    }
}
