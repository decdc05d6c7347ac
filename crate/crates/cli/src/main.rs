use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cutzoom::scenario::{run_scenario, RunOptions, ScenarioConfig};
use cutzoom::Error;

#[derive(Parser)]
#[command(name = "cutzoom", version, about = "Two-scale unfitted finite element runs with resolved zooms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        /// Directory for VTK files, summary.csv and report.json.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Scenario run alongside as the reference for the energy error.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Replace the number of equal load steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Also write the meshes, interfaces and cut cells.
        #[arg(long)]
        dump_geometry: bool,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, output_dir, reference, steps, dump_geometry } => {
            let config = ScenarioConfig::load(&config)?;
            let reference = reference.as_deref().map(ScenarioConfig::load).transpose()?;
            let options = RunOptions { output_dir, reference, steps_override: steps, dump_geometry };
            let summary = run_scenario(config, &options)?;
            for r in &summary.records {
                let err = r.energy_error.map(|e| format!(" error {e:.6e}")).unwrap_or_default();
                println!(
                    "step {:>3} load {:.4} iterations {:>2} residual {:.3e} dofs {} sum_p {:.6e}{err}",
                    r.step, r.factor, r.iterations, r.residual, r.dofs, r.sum_p
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CUTZOOM_LOG", "info"))
        .target(env_logger::Target::Stdout)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() || matches!(e, Error::Io { .. }) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
