use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use spinflip::scenario::{load_config, run_scenario, RunKind};

/// Spin-flip rates, population dynamics and fits from JSON scenarios.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition rates and their ratios at one detuning and temperature.
    Rates(RunArgs),
    /// α, β and the asymptotic ratio R∞.
    Rinf(RunArgs),
    /// Population trajectory under constant noise.
    Evolve(RunArgs),
    /// Piecewise-constant noise protocol.
    Protocol(RunArgs),
    /// R∞ over detunings and temperatures.
    Scan(RunArgs),
    /// Fit a relaxation curve or a noise spectrum from CSV.
    Fit(RunArgs),
    /// Quadrature against Monte Carlo for all channels.
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// RNG seed; overrides the scenario's.
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(kind: &str, message: String, out: Option<&PathBuf>, code: u8) -> ExitCode {
    let record = json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{record}");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), record.to_string() + "\n");
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string(), None, 1),
    };
    let (kind, args) = match cli.command {
        Command::Rates(a) => (RunKind::Rates, a),
        Command::Rinf(a) => (RunKind::Rinf, a),
        Command::Evolve(a) => (RunKind::Evolve, a),
        Command::Protocol(a) => (RunKind::Protocol, a),
        Command::Scan(a) => (RunKind::Scan, a),
        Command::Fit(a) => (RunKind::Fit, a),
        Command::Oracle(a) => (RunKind::Oracle, a),
    };
    let result = load_config(&args.config).and_then(|config| run_scenario(&config, kind, &args.out, args.seed));
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (kind, code) = if e.is_validation() { ("validation", 1) } else { ("numerical", 2) };
            fail(kind, e.to_string(), Some(&args.out), code)
        }
    }
}
