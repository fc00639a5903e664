use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fvselect_core::experiment::{self, ExperimentConfig, ExperimentKind};
use fvselect_core::Error;

/// Fleming-Viot and N-BBM selection experiments.
///
/// Run an experiment with `fvselect <experiment> --config FILE`, or check a
/// finished run with `fvselect verify DIR`. Worker threads are capped by
/// FVSELECT_THREADS.
#[derive(Debug, Parser)]
#[command(name = "fvselect", version)]
struct Cli {
    /// One of fv-stationary, fv-sweep, yaglom, survival, nbbm-speed,
    /// nbbm-profile, qsd-table, validate-kernel, green-check; or `verify`.
    command: String,

    /// Run directory to check (verify only).
    run_dir: Option<PathBuf>,

    /// Experiment configuration, TOML or JSON.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = if cli.command == "verify" {
        verify(&cli)
    } else {
        run(&cli)
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let kind: ExperimentKind = cli.command.parse()?;
    if cli.run_dir.is_some() {
        return Err(Error::Config("unexpected positional argument; use --out for the output directory".into()));
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    match config.experiment {
        Some(k) if k != kind => {
            return Err(Error::Config(format!(
                "{}: config is for {k} but {kind} was requested",
                path.display()
            )))
        }
        _ => config.experiment = Some(kind),
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    let output = experiment::run(&config)?;
    println!("wrote {}", output.dir.join(experiment::Manifest::file_name()).display());
    for o in &output.manifest.outputs {
        println!("wrote {}", output.dir.join(&o.file).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(cli: &Cli) -> Result<ExitCode, Error> {
    let dir = cli
        .run_dir
        .as_ref()
        .ok_or_else(|| Error::Config("verify needs a run directory".into()))?;
    let report = experiment::verify(dir)?;
    for p in &report.predicates {
        println!("{} {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail);
    }
    println!("wrote {}", dir.join(experiment::REPORT).display());
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
