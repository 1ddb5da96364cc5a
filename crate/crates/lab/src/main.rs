use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use viscoplate_lab::config::{apply_overrides, from_table, parse_table};
use viscoplate_lab::{presets, run, Experiment, LabError, RunOptions};

#[derive(Parser)]
#[command(
    name = "viscoplate",
    version,
    about = "Viscoelastic plate experiments with fading memory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (TOML)
    #[arg(long, short, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override one value, as section.key=value
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory, overriding the configured one
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0: one per core)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Integrate one trajectory and write trajectory.csv
    Simulate,
    /// Energy records and the inequality audit
    EnergyAudit,
    /// Log-slope fit of the energy decay
    Decay,
    /// Continuous dependence on the damping
    ContDep,
    /// Attractor sections over a damping family
    Sweep,
    /// Hausdorff semidistance between two cloud files
    Dist {
        /// `cloud_<i>.csv` files A and B, in place of `[dist] a`/`b`
        clouds: Vec<PathBuf>,
    },
    /// List the built-in configurations
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<u8, LabError> {
    let (experiment, clouds) = match cli.command {
        Command::Simulate => (Experiment::Simulate, vec![]),
        Command::EnergyAudit => (Experiment::EnergyAudit, vec![]),
        Command::Decay => (Experiment::Decay, vec![]),
        Command::ContDep => (Experiment::ContDep, vec![]),
        Command::Sweep => (Experiment::Sweep, vec![]),
        Command::Dist { clouds } => (Experiment::Dist, clouds),
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            return Ok(0);
        }
    };
    let text = match (&cli.config, &cli.preset) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?,
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| {
                LabError::config(format!(
                    "unknown preset {name:?}, expected one of {}",
                    presets::names().collect::<Vec<_>>().join(", ")
                ))
            })?
            .to_string(),
        (None, None) => String::new(),
    };
    let mut table = parse_table(&text)?;
    apply_overrides(&mut table, &cli.overrides)?;
    let mut config = from_table(table)?;
    if let Some(out) = cli.out {
        config.output = out;
    }
    let options = RunOptions { jobs: cli.jobs, clouds };
    Ok(run(experiment, &config, &options)?.exit_code())
}
