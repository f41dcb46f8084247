use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use besov_mlmcmc::experiment::{commands, ExperimentConfig, Overrides};
use besov_mlmcmc::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Multilevel MCMC for elliptic inverse problems with Besov random tree priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat TOML keys).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset: paper-1d, paper-2d, desk-1d or desk-2d.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    burn_in: Option<OnOff>,
    /// Inclusive depth range, e.g. `2..4`.
    #[arg(long, global = true, value_parser = parse_levels)]
    levels: Option<[u32; 2]>,
    #[arg(long, global = true)]
    replicates: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a ground truth and write noisy observations.
    Synthesize,
    /// Importance-sampling reference value.
    Reference,
    /// Replicated multilevel estimator runs and the RMSE table.
    Mlmcmc,
    /// Replicated single-level chains.
    Singlelevel,
    /// Burn-in on/off ratio table from two mlmcmc runs.
    Report,
    /// Write the level schedules as JSON.
    DumpSchedule,
    /// Write one prior field as CSV.
    SamplePrior,
}

fn parse_levels(s: &str) -> std::result::Result<[u32; 2], String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("'{x}': {e}"));
    Ok([parse(a)?, parse(b)?])
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let base = match (&c.config, &c.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
    };
    let overrides = Overrides {
        seed: c.seed,
        out_dir: c.out.clone(),
        burn_in: c.burn_in.map(|b| matches!(b, OnOff::On)),
        levels: c.levels,
        replicates: c.replicates,
    };
    let cfg = overrides.apply(base)?;
    match cli.command {
        Command::Synthesize => {
            commands::synthesize(&cfg)?;
        }
        Command::Reference => {
            let r = commands::reference(&cfg)?;
            println!("{} {} {}", r.result.mean, r.result.std_error, r.result.effective_samples);
        }
        Command::Mlmcmc => {
            println!("L,rmse,mean_cpu_seconds,total_cpu_seconds");
            for r in commands::mlmcmc(&cfg)? {
                println!("{},{},{},{}", r.depth, r.rmse, r.mean_cpu_seconds, r.total_cpu_seconds);
            }
        }
        Command::Singlelevel => {
            for r in commands::singlelevel(&cfg)? {
                println!("{},{},{}", r.replicate, r.estimate, r.acceptance_rate);
            }
        }
        Command::Report => print!("{}", commands::format_report(&commands::report(&cfg)?)),
        Command::DumpSchedule => {
            let s = commands::dump_schedule(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::SamplePrior => {
            commands::sample_prior(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
