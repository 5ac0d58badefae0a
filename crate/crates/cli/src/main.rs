use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fluxid_cli::artifacts::verify_dir;
use fluxid_cli::presets::{describe, preset, PRESET_NAMES};
use fluxid_cli::run::{load_map, run_scenario, RunOptions};
use fluxid_cli::{CliError, Override, Scenario};
use fluxid_core::compare::compare_maps;
use fluxid_core::magnetics::EnergyModel;

#[derive(Parser)]
#[command(name = "fluxid", version, about = "Locked-rotor flux identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a preset (`preset:<name>`).
    Run {
        scenario: String,
        /// Override a field, e.g. `--set sim.noise_std=0`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write gnuplot scripts.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Compare two flux map CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Energy model JSON used as ground truth.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// List or print built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Check a scenario without running it.
    Validate {
        scenario: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Recompute the artifact hashes of an output directory.
    Verify { dir: PathBuf },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn load(spec: &str, set: &[String]) -> Result<Scenario, CliError> {
    let sc = match spec.strip_prefix("preset:") {
        Some(name) => preset(name).ok_or_else(|| CliError::Invalid(format!("unknown preset `{name}`")))?,
        None => Scenario::load(spec.as_ref())?,
    };
    let overrides = set.iter().map(|s| s.parse()).collect::<Result<Vec<Override>, _>>()?;
    let sc = sc.with_overrides(&overrides)?;
    sc.validate()?;
    Ok(sc)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, set, out, gnuplot } => {
            let mut sc = load(&scenario, &set)?;
            if let Some(dir) = out {
                sc.output_dir = dir;
            }
            let run = run_scenario(&sc, RunOptions { gnuplot })?;
            println!("{} artifacts in {}", run.manifest.artifacts.len() + 1, run.output_dir.display());
            println!("{}", serde_json::to_string_pretty(&run.report).expect("report serializes"));
        }
        Command::Compare { a, b, truth } => {
            let model: Option<EnergyModel> = truth
                .map(|p| {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))
                })
                .transpose()?;
            let report = compare_maps(&load_map(&a)?, &load_map(&b)?, model.as_ref())
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::Presets { action: PresetAction::List } => {
            for n in PRESET_NAMES {
                println!("{n:16} {}", describe(n).unwrap_or(""));
            }
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            let sc = preset(&name).ok_or_else(|| CliError::Invalid(format!("unknown preset `{name}`")))?;
            print!("{}", sc.to_json());
        }
        Command::Validate { scenario, set } => {
            let sc = load(&scenario, &set)?;
            println!("{}: ok ({})", sc.name, sc.method);
        }
        Command::Verify { dir } => {
            let bad = verify_dir(&dir)?;
            if !bad.is_empty() {
                for m in &bad {
                    eprintln!("{}: {}", m.path, m.problem);
                }
                return Err(CliError::Invalid(format!("{} artifact(s) do not match the manifest", bad.len())));
            }
            println!("{}: all artifacts match", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
