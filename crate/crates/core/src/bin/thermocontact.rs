use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use thermocontact::config::{load_config, preset_with_overrides, to_toml, Preset, ScenarioSpec};
use thermocontact::output::{run_scenario, run_study_to};
use thermocontact::Error;

#[derive(Parser)]
#[command(
    name = "thermocontact",
    version,
    about = "Thermoviscoelastic adhesive contact simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV, JSON and optional VTK output.
    Run(Common),
    /// Run a refinement or regularization study.
    Study(Common),
    /// Print the fully resolved configuration as TOML.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long, default_value = "reference")]
    preset: String,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted `key=value` override, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn spec(&self) -> thermocontact::Result<ScenarioSpec> {
        let mut spec = match &self.config {
            Some(path) => load_config(path, &self.overrides)?,
            None => preset_with_overrides(Preset::parse(&self.preset)?, &self.overrides)?,
        };
        if let Some(out) = &self.out {
            spec.output.dir = out.clone();
        }
        Ok(spec)
    }
}

fn execute(cli: &Cli) -> thermocontact::Result<()> {
    match &cli.command {
        Command::Run(c) => {
            let spec = c.spec()?;
            let summary = run_scenario(&spec, &spec.output.dir)?;
            println!("{}", summary.line());
        }
        Command::Study(c) => {
            let spec = c.spec()?;
            if spec.study.is_none() {
                return Err(Error::Validation(
                    "study needs a [study] section or study.* overrides".into(),
                ));
            }
            let result = run_study_to(&spec, &spec.output.dir)?;
            print!("{}", result.to_csv());
            let failed = result.levels.iter().filter(|l| l.failure.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} levels failed", result.levels.len());
            }
        }
        Command::Config(c) => {
            let spec = c.spec()?;
            print!("{}", to_toml(&spec)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let step = match &e {
                Error::Step { step, .. } => Some(*step),
                _ => None,
            };
            let record = json!({
                "error": e.kind(),
                "message": e.root().to_string(),
                "step": step,
                "exit_code": e.exit_code(),
            });
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
