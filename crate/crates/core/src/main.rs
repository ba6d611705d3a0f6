use clap::{Args, Parser, Subcommand};
use emission_bounds::harness::{refit, run, validate_config, Experiment, RunConfig, RunOptions, Threads};
use emission_bounds::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Bounds on the maximum collective emission rate of atomic ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the worker count.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides output_dir (for `fit`, the run directory to refit).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue an interrupted run in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Per-realization principal eigenpairs, bounds and full dense spectra.
    Spectrum(Common),
    /// Disorder-averaged spectral observables and power-law fits over N.
    Sweep(Common),
    /// Spectral sweep of the aperture-limited kernel over half-angles.
    DirectionalSweep(Common),
    /// Vector relaxation sweep.
    SdpSweep(Common),
    /// Emission pattern of a continuum cloud mode.
    Pattern(Common),
    /// Close-pair statistics.
    Pairs(Common),
    /// Product-state emission rate sweep.
    ProductState(Common),
    /// Recomputes points.csv and fits.csv of a finished run from raw.csv.
    Fit(Common),
    /// Reports every problem in a configuration.
    Validate(Common),
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::UnsupportedKernel(_) | Error::ModeOutOfRange(_) => {
            EXIT_CONFIG
        }
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_FAILURE,
    }
}

fn load(common: &Common) -> Result<RunConfig, ExitCode> {
    let path = match (&common.config, &common.out) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join("config.json"),
        (None, None) => return Err(fail(EXIT_CONFIG, "--config is required")),
    };
    let mut config = RunConfig::load(&path).map_err(|e| fail(EXIT_CONFIG, e))?;
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(t) = common.threads {
        config.threads = Threads::Count(t);
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn execute(experiment: Experiment, common: &Common) -> ExitCode {
    let config = match load(common) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if config.experiment != experiment {
        return fail(
            EXIT_CONFIG,
            format!("configuration describes a {} run, not {}", config.experiment.name(), experiment.name()),
        );
    }
    let problems = validate_config(&config);
    if !problems.is_empty() {
        for d in &problems {
            eprintln!("{d}");
        }
        return ExitCode::from(EXIT_CONFIG);
    }
    match run(&config, &RunOptions { resume: common.resume, task_limit: None }) {
        Ok(summary) => {
            println!(
                "{}: {} of {} tasks run, archive in {}",
                experiment.name(),
                summary.tasks_run,
                summary.tasks_total,
                summary.dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(error_code(&e), e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Spectrum(c) => execute(Experiment::Spectrum, c),
        Command::Sweep(c) => execute(Experiment::Sweep, c),
        Command::DirectionalSweep(c) => execute(Experiment::DirectionalSweep, c),
        Command::SdpSweep(c) => execute(Experiment::SdpSweep, c),
        Command::Pattern(c) => execute(Experiment::Pattern, c),
        Command::Pairs(c) => execute(Experiment::Pairs, c),
        Command::ProductState(c) => execute(Experiment::ProductState, c),
        Command::Fit(c) => {
            let config = match load(c) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match refit(&config, &config.output_dir) {
                Ok(()) => {
                    println!("fits written to {}", config.output_dir.join("fits.csv").display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(error_code(&e), e),
            }
        }
        Command::Validate(c) => {
            let config = match load(c) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let problems = validate_config(&config);
            if problems.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for d in &problems {
                    println!("{d}");
                }
                ExitCode::from(EXIT_CONFIG)
            }
        }
    }
}
