mod commands;
mod report;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finent_core::states::PSD_TOL;
use finent_core::DEFAULT_TOL_DETECT;

use source::FamilyArgs;

/// Entanglement verification by finite-dimensional truncation.
#[derive(Debug, Parser)]
#[command(name = "finent", version)]
struct Cli {
    /// Seed for random families.
    #[arg(long, global = true, env = "FINENT_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a state and write it as a QSTATE v1 file.
    Gen(GenArgs),
    /// Evaluate criteria on a state file at its stored dimensions.
    Test(TestArgs),
    /// Escalate the truncation dimension until a criterion certifies.
    Verify(VerifyArgs),
    /// Sweep a family parameter and write criterion values as CSV.
    Sweep(SweepArgs),
    /// List the bipartitions of a mode set.
    Bipartitions {
        #[arg(long)]
        modes: usize,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Output path; the state goes to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct Tolerances {
    /// Margin a criterion value must exceed to count as detection.
    #[arg(long, default_value_t = DEFAULT_TOL_DETECT)]
    tol_detect: f64,
    /// Hermiticity, positivity and trace tolerance when reading state files.
    #[arg(long, default_value_t = PSD_TOL)]
    tol_validate: f64,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// QSTATE v1 file.
    input: PathBuf,
    /// Comma-separated subset of ppt, realign, witness.
    #[arg(long, default_value = "ppt,realign,witness")]
    criteria: String,
    /// Bipartition such as "0|1,2"; defaults to mode 0 against the rest.
    #[arg(long)]
    partition: Option<String>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Entangled,
    Undecided,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Read a finite state from a QSTATE v1 file instead of a family.
    #[arg(long, conflicts_with = "family")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    dstart: usize,
    #[arg(long, default_value_t = 8)]
    dmax: usize,
    /// increment or double.
    #[arg(long, default_value = "increment")]
    growth: String,
    #[arg(long, default_value = "ppt,realign,witness")]
    criteria: String,
    #[arg(long, conflicts_with = "scan_bipartitions")]
    partition: Option<String>,
    /// Escalate every bipartition of a multimode source.
    #[arg(long)]
    scan_bipartitions: bool,
    /// Exit with status 3 unless the final verdict matches.
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// First grid value of the family parameter (p, lambda or k).
    #[arg(long, requires_all = ["stop", "step"])]
    start: Option<f64>,
    #[arg(long, requires = "start")]
    stop: Option<f64>,
    #[arg(long, requires = "start")]
    step: Option<f64>,
    /// Smallest truncation dimension for analytic families.
    #[arg(long, default_value_t = 1)]
    dmin: usize,
    #[arg(long, default_value_t = 8)]
    dmax: usize,
    #[arg(long, default_value = "ppt,realign,witness")]
    criteria: String,
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL_DETECT)]
    tol_detect: f64,
    /// CSV path; the CSV goes to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Exit status for usage and IO failures.
const EXIT_ERROR: u8 = 1;
/// Exit status when `--expect` does not match the verdict.
const EXIT_MISMATCH: u8 = 3;

fn command_echo() -> String {
    std::env::args()
        .skip(1)
        .map(|a| if a.contains(char::is_whitespace) || a.is_empty() { format!("'{a}'") } else { a })
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let echo = command_echo();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a, cli.seed, &echo),
        Command::Test(a) => commands::test(a, cli.seed, &echo),
        Command::Verify(a) => commands::verify(a, cli.seed, &echo),
        Command::Sweep(a) => commands::sweep(a, cli.seed, &echo),
        Command::Bipartitions { modes } => commands::bipartitions(*modes),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("finent: error: {message}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
