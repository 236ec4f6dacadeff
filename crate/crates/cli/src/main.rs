// SPDX-License-Identifier: Apache-2.0

//! `emsteady`: steady-state electromigration screening from the command line.
//!
//! Exit codes: 0 success, 1 error, 2 validation failure (under `--strict`
//! for `analyze`; always for `validate`, `oracle-check` and `bench`).

mod analyze;
mod bench;
mod ingest;
mod oracle_check;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::{diagnostics, Outcome};

#[derive(Debug, Parser)]
#[command(name = "emsteady", version, about = "Exact steady-state electromigration stress and immortality screening")]
struct Cli {
    /// Worker threads for per-unit analysis.
    #[arg(long, global = true, env = "EM_STEADY_THREADS", value_name = "N")]
    threads: Option<usize>,

    /// Print one machine-readable JSON object instead of the text summary.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve, compute node stresses, screen every segment and write reports.
    Analyze(analyze::AnalyzeArgs),
    /// Compare both engines with the dense and transient oracles.
    OracleCheck(oracle_check::OracleArgs),
    /// Time both engines on synthetic meshes of growing size.
    Bench(bench::BenchArgs),
    /// Check an input for structural and consistency problems.
    Validate(ingest::InputArgs),
}

impl Command {
    fn verb(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::OracleCheck(_) => "oracle-check",
            Command::Bench(_) => "bench",
            Command::Validate(_) => "validate",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Analyze(a) => analyze::analyze(a),
        Command::OracleCheck(a) => oracle_check::oracle_check(a),
        Command::Bench(a) => bench::bench(a),
        Command::Validate(a) => analyze::validate(a),
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1; clap's own code 2 is reserved for validation.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = run(&cli);
    if cli.json {
        let value = diagnostics(cli.command.verb(), result.as_ref());
        println!("{}", serde_json::to_string_pretty(&value).expect("diagnostics serialize"));
    } else {
        match &result {
            Ok(o) => {
                println!("{}", o.summary);
                for w in &o.warnings {
                    eprintln!("warning: {w}");
                }
            }
            Err(e) => eprintln!("error: {e:#}"),
        }
    }
    match result {
        Ok(o) => ExitCode::from(o.code),
        Err(_) => ExitCode::from(1),
    }
}
