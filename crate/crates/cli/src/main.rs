//! `nvhqc` scenario runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nvhqc::scenario::{self, RunOptions, ScenarioConfig};
use nvhqc::Error;

#[derive(Parser)]
#[command(name = "nvhqc", version, about = "Run holonomic-gate scenarios on NV-centre spins")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV tables and JSON summary.
    Run {
        /// Bundled scenario name or path to a TOML file.
        scenario: String,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Worker threads for sweeps (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Record every n-th integrator step.
        #[arg(long)]
        record_every: Option<usize>,
    },
    /// Check a scenario and print its derived parameters without running it.
    Validate { scenario: String },
    /// List bundled scenarios.
    List,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_config_error() => 2,
        Error::InvariantBreach { .. } => 3,
        _ => 1,
    }
}

fn load(name: &str, record_every: Option<usize>) -> nvhqc::Result<ScenarioConfig> {
    let mut config = scenario::load(name)?;
    if let Some(n) = record_every {
        config.integrator.record_every = n;
    }
    Ok(config)
}

fn execute(cli: Cli) -> nvhqc::Result<()> {
    match cli.command {
        Command::List => {
            for s in scenario::list_scenarios() {
                println!("{:<30} {:<24} {}", s.name, s.kind, s.description);
            }
        }
        Command::Validate { scenario: name } => {
            let report = scenario::validate(&load(&name, None)?)?;
            println!("{} ({}): ok", report.scenario, report.kind.map_or("", |k| k.as_str()));
            for (k, v) in &report.derived {
                println!("  {k:<16} {v:.9e}");
            }
        }
        Command::Run {
            scenario: name,
            out_dir,
            workers,
            record_every,
        } => {
            let config = load(&name, record_every)?;
            let mut options = RunOptions {
                out_dir: Some(out_dir),
                ..RunOptions::default()
            };
            if let Some(w) = workers {
                if w == 0 {
                    return Err(Error::Usage("--workers must be >= 1".into()));
                }
                options.workers = w;
            }
            let outcome = scenario::run(&config, &options)?;
            let s = &outcome.summary;
            println!("{} ({})", s.scenario, s.kind.as_str());
            for (k, v) in &s.final_fidelities {
                println!("  fidelity {k:<28} {v:.6}");
            }
            if let Some(l) = s.peak_leakage {
                println!("  peak leakage {l:.3e}");
            }
            println!(
                "  hygiene {} (trace drift {:.1e}, hermiticity {:.1e}, min eigenvalue {:.1e})",
                if s.hygiene.passes() { "ok" } else { "VIOLATED" },
                s.hygiene.trace_drift,
                s.hygiene.hermiticity_defect,
                s.hygiene.min_eigenvalue
            );
            for f in &outcome.files {
                println!("  wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
