use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use oseen_core::experiment::{dispatch, load_config, replay, RunOptions};
use oseen_core::lorentz::LorentzReport;
use oseen_core::solver::FlowField;
use oseen_core::Spectral;

/// Large-time asymptotics laboratory for 2D Navier-Stokes flows.
#[derive(Debug, Parser)]
#[command(name = "oseen", version)]
struct Cli {
    /// Output directory for this run (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Root under which `<id>/` is created when no directory is given.
    #[arg(long, global = true, env = "OSEEN_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,

    /// Reject unknown config keys (default).
    #[arg(long, global = true, overrides_with = "no_strict")]
    strict: bool,

    /// Drop unknown config keys with a warning.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    no_strict: bool,

    /// Seed for randomized data that does not fix its own.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Load an NSF2 snapshot and print its state summary.
    Replay {
        file: PathBuf,
        /// Truncation radius `R` (defaults to `L/4`).
        #[arg(long)]
        ball_radius: Option<f64>,
    },
    /// Lorentz-norm report of the velocity stored in a snapshot.
    Norms {
        file: PathBuf,
        #[arg(long)]
        p: f64,
        /// Lowest level of the tail functional (default: 1e-3 of the maximum).
        #[arg(long)]
        lambda_min: Option<f64>,
        /// Highest level of the tail functional (default: the maximum).
        #[arg(long)]
        lambda_max: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> oseen_core::Result<u8> {
    let strict = !cli.no_strict || cli.strict;
    match cli.command {
        Command::Run { config } => {
            let spec = load_config(&config, strict)?;
            let opts = RunOptions {
                output_dir: cli.output_dir,
                output_root: cli.output_root,
                seed: cli.seed,
            };
            let (report, path) = dispatch(&spec, &opts)?;
            for (name, ok) in &report.assertions {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            if let Some(d) = &report.diagnostic {
                println!("diagnostic: {d}");
            }
            println!("status: {:?}, report: {}", report.status, path.display());
            Ok(report.exit_code() as u8)
        }
        Command::Replay { file, ball_radius } => {
            let state = replay(&file, ball_radius)?;
            let grid = *state.grid();
            let sp = Spectral::new(grid);
            let v = state.velocity_field(&sp);
            let kind = match state.field {
                FlowField::Vorticity(_) => "vorticity",
                FlowField::Velocity(_) => "velocity",
            };
            println!("time={}", state.time);
            println!("n_points={}", grid.n_points());
            println!("half_width={}", grid.half_width());
            println!("field={kind}");
            println!("energy={:e}", v.energy());
            println!("max_u={:e}", v.max_abs());
            Ok(0)
        }
        Command::Norms { file, p, lambda_min, lambda_max } => {
            let state = replay(&file, None)?;
            let v = state.velocity_field(&Spectral::new(*state.grid()));
            let top = lambda_max.unwrap_or_else(|| v.max_abs());
            let bottom = lambda_min.unwrap_or(1e-3 * top);
            let report = LorentzReport::compute(&v, p, bottom, top)?;
            print!("{}", report.to_key_value());
            Ok(0)
        }
    }
}
