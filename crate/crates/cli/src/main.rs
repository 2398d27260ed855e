use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surftrap_core::app::{self, ScenarioConfig};
use surftrap_core::Error;

#[derive(Parser)]
#[command(name = "surftrap", version, about = "Surface trap landscape, condensate and loss model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; omitted sections come from the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override a key, e.g. `--set beam.power=0.3`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    /// Start from this preset instead of the file's `preset` line.
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ShowArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Potential terms along z.
    PotentialCut(RunArgs),
    /// Total potential on an (x, z) grid at y = 0.
    PotentialMap(RunArgs),
    /// Trap minimum, barrier and saddle at magnet.z0.
    Minimize(RunArgs),
    /// Landscape for each z0 of the sweep.
    SweepZ0(RunArgs),
    /// Thomas-Fermi density along z for each z0 of the sweep.
    TfDensity(RunArgs),
    /// Field and RF resonance at the atoms for each z0.
    RfMap(RunArgs),
    /// Survival after the ramp for each closest approach z0.
    LossCurve(RunArgs),
    /// Position of the magnetic minimum over the ramp sequence.
    RampProfile(RunArgs),
    /// Print the fully resolved scenario.
    ShowConfig(ShowArgs),
}

fn resolve(config: &Option<PathBuf>, preset: Option<&str>, sets: &[String]) -> Result<ScenarioConfig, Error> {
    match config {
        Some(p) => app::load_config_with(p, preset, sets),
        None => app::parse_config("", preset, sets),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (name, args) = match cli.command {
        Command::ShowConfig(a) => {
            let cfg = resolve(&a.config, a.preset.as_deref(), &a.sets)?;
            print!("{}", cfg.to_config_string());
            return Ok(());
        }
        Command::PotentialCut(a) => ("potential-cut", a),
        Command::PotentialMap(a) => ("potential-map", a),
        Command::Minimize(a) => ("minimize", a),
        Command::SweepZ0(a) => ("sweep-z0", a),
        Command::TfDensity(a) => ("tf-density", a),
        Command::RfMap(a) => ("rf-map", a),
        Command::LossCurve(a) => ("loss-curve", a),
        Command::RampProfile(a) => ("ramp-profile", a),
    };
    let cfg = resolve(&args.config, args.preset.as_deref(), &args.sets)?;
    let table = app::run_subcommand(name, &cfg, &args.out, args.threads)?;
    for note in &table.notes {
        println!("{note}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
