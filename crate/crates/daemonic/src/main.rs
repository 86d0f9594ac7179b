use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use daemonic::config::{SchemeName, UnravellingName};
use daemonic::executor::default_workers;
use daemonic::output::write_run;
use daemonic::validate::{run_suite, Analytic};
use daemonic::{commands, presets, CliError, ExperimentConfig, Overrides, RayonExecutor};

#[derive(Parser)]
#[command(
    name = "daemonic",
    version,
    about = "Daemonic ergotropy of monitored quantum batteries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Daemonic ergotropy time series against the unconditional bounds
    Figure2(RunArgs),
    /// Steady-state daemonic ergotropy over a drive sweep
    Figure3(RunArgs),
    /// Time series from a mixed start with ground-state reference curves
    Figure4(RunArgs),
    /// Closed-form steady state against the master equation
    Steady(RunArgs),
    /// Fast invariant checks
    Validate,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, or a run manifest (.json) to reproduce; defaults to the
    /// command's preset
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    #[arg(long, value_enum)]
    unravelling: Option<UnravellingName>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            seed: self.seed,
            eta: self.eta,
            alpha: self.alpha,
            dt: self.dt,
            horizon: self.horizon,
            unravelling: self.unravelling,
            phi: self.phi,
            scheme: self.scheme,
            out: self.out.clone(),
        }
    }
}

fn run(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => presets::load(name)?,
    };
    config.apply(&args.overrides());
    config.resolve()?;
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(daemonic::ConfigError::new("--workers", "must be at least 1").into());
    }
    let exec = RayonExecutor::new(workers)
        .map_err(|e| daemonic::ConfigError::new("--workers", e.to_string()))?;

    let start = Instant::now();
    let output = match name {
        "figure2" => commands::figure2(&config, &exec)?,
        "figure3" => commands::figure3(&config, &exec)?,
        "figure4" => commands::figure4(&config, &exec)?,
        _ => commands::steady(&config)?,
    };
    let wall = start.elapsed().as_secs_f64();
    let written = write_run(&config.output.dir, name, &config, &output, workers, wall)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    eprintln!("{name} finished in {wall:.1}s");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Figure2(a) => run("figure2", a),
        Command::Figure3(a) => run("figure3", a),
        Command::Figure4(a) => run("figure4", a),
        Command::Steady(a) => run("steady", a),
        Command::Validate => {
            let report = run_suite(&Analytic::default());
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Validation(report.failed_names().join(", ")))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
