//! Scenario runner CLI.
//!
//! `sim run --preset fig1_static --out fig1.csv` executes a preset and writes
//! the CSV time series plus a `<out>.report.txt` sidecar; `sim validate
//! <preset>` additionally evaluates the preset's checks and exits nonzero on
//! failure; `sim list-presets` enumerates what ships.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use driven_lattice_sim::scenarios::{self, runner::RunReport};

#[derive(Parser)]
#[command(name = "sim", version, about = "Field-driven lattice-model simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset scenario and write its CSV series.
    Run {
        /// Preset name (see `sim list-presets`).
        #[arg(long)]
        preset: String,
        /// Optional config file merged over the preset defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inline overrides, e.g. --set grid.N_k=256 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a preset and evaluate its validation checks.
    Validate {
        /// Preset name.
        name: String,
        /// Inline overrides (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Optional CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List available presets.
    ListPresets,
}

fn write_outputs(
    series: &driven_lattice_sim::observables::ObservableSeries,
    report: &mut RunReport,
    echo: &[(String, String)],
    out: &PathBuf,
) -> Result<(), scenarios::ScenarioError> {
    let digest = scenarios::write_csv(series, echo, out)?;
    report.output_digest = Some(digest);
    let report_path = PathBuf::from(format!("{}.report.txt", out.display()));
    std::fs::write(&report_path, report.render()).map_err(|e| scenarios::ScenarioError::Io {
        path: report_path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::ListPresets => {
            for name in scenarios::PRESET_NAMES {
                println!("{name:22} {}", scenarios::describe(name).unwrap_or(""));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { preset, config, sets, out } => {
            let file_text = match &config {
                Some(path) => Some(std::fs::read_to_string(path)?),
                None => None,
            };
            let (series, mut report, cfg) =
                scenarios::run_preset(&preset, file_text.as_deref(), &sets)?;
            write_outputs(&series, &mut report, &cfg.echo, &out)?;
            println!(
                "wrote {} ({} rows) in {:.1} s",
                out.display(),
                series.len(),
                report.wall_seconds
            );
            for note in &report.notes {
                eprintln!("warning: {note}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { name, sets, out } => {
            let (series, mut report) = scenarios::validate_preset(&name, &sets)?;
            if let Some(out) = out {
                let echo = report.config_echo.clone();
                write_outputs(&series, &mut report, &echo, &out)?;
            }
            for c in &report.checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            for note in &report.notes {
                eprintln!("warning: {note}");
            }
            if report.checks.is_empty() {
                eprintln!("preset `{name}` has no checks attached");
            }
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
    }
}
