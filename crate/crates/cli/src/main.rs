use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moulds::job::{run_job, Command, ExitStatus, JobSpec};

/// Exact normal forms of polynomial vector fields and Hamiltonians via moulds.
///
/// Exit status: 0 ok, 1 pipeline failure, 2 bad input or arguments,
/// 3 resonance, 4 certification failure.
#[derive(Parser, Debug)]
#[command(name = "moulds", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Split a field into homogeneous letters and report resonances.
    Prepare(Common),
    /// Conjugate a nonresonant field to its linear part.
    Linearize(Common),
    /// Compute the trimmed (prenormal) form of a field.
    Trim(Common),
    /// Canonical trimmed form of a Hamiltonian.
    HamTrim(Common),
    /// Kolmogorov normal form of an action-angle Hamiltonian.
    Kolmogorov(Common),
    /// Print a mould table: theta, v, exp-v, sam, sam-<r>, tram.
    MouldTable {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check one property and exit nonzero if it fails.
    Certify {
        property: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Input file: a field, Hamiltonian, Kolmogorov or alphabet description.
    input: PathBuf,
    /// Override the truncation degree N of the input.
    #[arg(long)]
    cutoff: Option<u32>,
    /// Longest word length L examined (at most N).
    #[arg(long)]
    length: Option<usize>,
    /// Override the epsilon order of a Kolmogorov input.
    #[arg(long)]
    eps_order: Option<u32>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Drop the human-readable section and stay silent on stderr.
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Prepare(c) => (Command::Prepare, c),
        Cmd::Linearize(c) => (Command::Linearize, c),
        Cmd::Trim(c) => (Command::Trim, c),
        Cmd::HamTrim(c) => (Command::HamTrim, c),
        Cmd::Kolmogorov(c) => (Command::Kolmogorov, c),
        Cmd::MouldTable { name, common } => (Command::MouldTable(name), common),
        Cmd::Certify { property, common } => (Command::Certify(property), common),
    };
    let input = match fs::read_to_string(&common.input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("moulds: cannot read {}: {e}", common.input.display());
            return ExitCode::from(ExitStatus::Usage.code() as u8);
        }
    };
    let spec = JobSpec { command, input, cutoff: common.cutoff, length: common.length, eps_order: common.eps_order };
    let mut outcome = run_job(&spec);
    if !common.quiet {
        if let Some(e) = outcome.report.get("error") {
            eprintln!("moulds: {e}");
        }
    } else {
        outcome.report.human.clear();
    }
    let text = outcome.report.to_text();
    match &common.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("moulds: cannot write {}: {e}", path.display());
                return ExitCode::from(ExitStatus::Failure.code() as u8);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(outcome.status.code() as u8)
}
