use bnpost::cli::{self, RunOptions};
use bnpost::model::PriorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact posterior probabilities of edges and modular features in
/// Bayesian networks from complete discrete data.
#[derive(Parser)]
#[command(name = "bnpost", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// CSV dataset with a header row of variable names
    #[arg(long)]
    data: PathBuf,
    /// Optional sidecar JSON {"arities": {"name": int}} enlarging domains
    #[arg(long)]
    arities: Option<PathBuf>,
    /// Maximum indegree k (default: min(n-1, 5))
    #[arg(long = "max-indegree")]
    max_indegree: Option<usize>,
    /// Structure prior
    #[arg(long, default_value = "uniform")]
    prior: String,
    /// Feature file (feature subcommand only)
    #[arg(long)]
    feature: Option<PathBuf>,
    /// Result JSON output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per CPU)
    #[arg(long)]
    threads: Option<usize>,
    /// Dump the RR and H tables as flat binary next to --out
    #[arg(long = "dump-tables")]
    dump_tables: bool,
    /// JSON score-table cache, reused when dataset and k match
    #[arg(long = "score-cache")]
    score_cache: Option<PathBuf>,
}

impl RunArgs {
    fn into_options(self) -> Result<RunOptions, bnpost::Error> {
        Ok(RunOptions {
            data_path: self.data,
            arities_path: self.arities,
            max_indegree: self.max_indegree,
            prior: PriorKind::parse(&self.prior)?,
            feature_path: self.feature,
            out_path: self.out,
            threads: self.threads,
            dump_tables: self.dump_tables,
            score_cache: self.score_cache,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact posteriors of all n(n-1) directed edges
    Edges(RunArgs),
    /// Exact posterior of the modular feature in --feature
    Feature(RunArgs),
    /// Log evidence only
    Evidence(RunArgs),
    /// Brute-force enumeration reference (n <= 6), same output schema
    Oracle(RunArgs),
    /// Diff two result files into scatter CSV rows u,v,p_a,p_b
    Compare {
        /// First result file
        a: PathBuf,
        /// Second result file
        b: PathBuf,
        /// CSV output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(command: Command) -> Result<(), bnpost::Error> {
    match command {
        Command::Edges(args) => cli::run_edges(&args.into_options()?).map(|_| ()),
        Command::Feature(args) => cli::run_feature(&args.into_options()?).map(|_| ()),
        Command::Evidence(args) => cli::run_evidence(&args.into_options()?).map(|_| ()),
        Command::Oracle(args) => cli::run_oracle(&args.into_options()?).map(|_| ()),
        Command::Compare { a, b, out } => {
            cli::run_compare(&a, &b, out.as_deref()).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
