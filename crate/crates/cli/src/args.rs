use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// m-bonacci words, chains, densities, gap conditions and frame probes.
#[derive(Debug, Parser)]
#[command(name = "mbonacci", version, about)]
pub struct Cli {
    /// Write the primary output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Refuse to generate words longer than this many digits.
    #[arg(long, global = true, default_value_t = 100_000_000, value_name = "DIGITS")]
    pub max_digits: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a window of the m-bonacci word.
    Word(WordArgs),
    /// Perron root and left eigenvector of the incidence matrix.
    Perron(PerronArgs),
    /// Points of the m-bonacci chain.
    Chain(ChainArgs),
    /// Window-count density estimate n(r)/r against the closed form.
    Density(DensityArgs),
    /// Brute-force check of the explicit gap conditions (m = 2, 3).
    Gaps(GapsArgs),
    /// Greedy Tribonacci expansion of a positive integer.
    Expand(ExpandArgs),
    /// Frame constants of truncated exponential systems across interval lengths.
    Frame(FrameArgs),
    /// Recompute every reference value and check it against its tolerance.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WordFormat {
    Digits,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct WordArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=255))]
    pub m: u64,
    /// Number of digits v_0, v_1, … to print.
    #[arg(long)]
    pub length: u64,
    /// Number of digits v_{-1}, v_{-2}, … to print before them.
    #[arg(long, default_value_t = 0)]
    pub left: u64,
    #[arg(long, value_enum, default_value_t = WordFormat::Digits)]
    pub format: WordFormat,
}

#[derive(Debug, Args)]
pub struct PerronArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=255))]
    pub m: u64,
    /// Decimal digits for the extended-precision root finder.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=10_000))]
    pub digits: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=255))]
    pub m: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub from: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: i64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=255))]
    pub m: u64,
    #[arg(long)]
    pub rmin: f64,
    #[arg(long)]
    pub rmax: f64,
    #[arg(long)]
    pub step: f64,
    /// Chain points λ_0 … λ_points used by the estimator.
    #[arg(long)]
    pub points: u64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Write the JSON summary here (default: one line on standard error).
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapsArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=3))]
    pub m: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub nmax: u64,
    /// Scan λ_{k+N} - λ_k for |k| ≤ krange.
    #[arg(long)]
    pub krange: u64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=255))]
    pub m: u64,
    /// Use the frequencies λ_k with |k| ≤ K.
    #[arg(long = "k")]
    pub k: u64,
    #[arg(long)]
    pub lmin: f64,
    #[arg(long)]
    pub lmax: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Keep double-precision c1 even when it is below round-off.
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Write the JSON summary here (default: one line on standard error).
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Reduced ranges, same checks.
    #[arg(long)]
    pub fast: bool,
    /// Skip the CSV side files.
    #[arg(long)]
    pub json_only: bool,
    /// Directory for CSV side files.
    #[arg(long, default_value = "repro-out", value_name = "DIR")]
    pub out_dir: PathBuf,
}
