//! The experiment subcommands. Each reads its inputs from and writes its
//! outputs to the configuration's output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::io::{
    compare, read_csv, read_json, summarize, write_atomic, write_csv, write_json, ReferenceRecord, ReportRow,
    RmseRow, RunRecord, REFERENCE_SCHEMA_VERSION,
};
use crate::bayes::{synthesize_data, DataRecord};
use crate::error::{Error, Result};
use crate::mcmc::ChainSpec;
use crate::mlmcmc::{self, EstimatorOptions, LevelSchedule, LevelSpec, PdeModel};
use crate::prior::PriorSample;
use crate::rng::{stream, Purpose, StreamKey};
use crate::timing::timed;

pub const DATA_FILE: &str = "data.json";
pub const REFERENCE_FILE: &str = "reference.json";
pub const SCHEDULE_FILE: &str = "schedule.json";
pub const REPORT_FILE: &str = "report.csv";
pub const SINGLE_LEVEL_FILE: &str = "singlelevel.csv";
pub const FIELD_FILE: &str = "prior-field.csv";

fn mode(burn_in: bool) -> &'static str {
    if burn_in {
        "on"
    } else {
        "off"
    }
}

pub fn runs_file(burn_in: bool) -> String {
    format!("runs-burnin-{}.csv", mode(burn_in))
}

pub fn rmse_file(burn_in: bool) -> String {
    format!("rmse-burnin-{}.csv", mode(burn_in))
}

/// Command-line overrides of configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub burn_in: Option<bool>,
    pub levels: Option<[u32; 2]>,
    pub replicates: Option<u32>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out_dir {
            cfg.out_dir = o.clone();
        }
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
        if let Some(l) = self.levels {
            cfg.levels = l;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn require(path: &Path, produced_by: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{} not found; run `{produced_by}` first", path.display())))
    }
}

/// Ground truth draw and fine solve, plus Gaussian noise at the observation points.
pub fn synthesize(cfg: &ExperimentConfig) -> Result<DataRecord> {
    let forward = cfg.forward_model()?;
    let level = cfg.data_level();
    let mut truth_rng = stream(cfg.seed, StreamKey::new(Purpose::GroundTruth));
    let truth = PriorSample::draw(&cfg.prior(), level.truncation, &mut truth_rng)?;
    let mut noise_rng = stream(cfg.seed, StreamKey::new(Purpose::Noise));
    let setup = synthesize_data(&forward, &truth, level, cfg.observations()?, &mut noise_rng)?;
    let record = DataRecord::new(&setup, cfg.seed, level)?;
    write_json(&out(cfg, DATA_FILE), &record)?;
    info!("wrote {} observations to {}", record.delta.len(), out(cfg, DATA_FILE).display());
    Ok(record)
}

/// The posterior model built from the data file in the output directory.
pub fn load_model(cfg: &ExperimentConfig) -> Result<PdeModel> {
    let path = out(cfg, DATA_FILE);
    require(&path, "synthesize")?;
    let record = DataRecord::read(&path)?;
    let setup = record.setup()?;
    if setup.dim() != cfg.dim {
        return Err(Error::Config(format!("{} holds {}-dimensional data", path.display(), setup.dim())));
    }
    PdeModel::new(cfg.prior(), cfg.forward_model()?, setup, cfg.qoi)
}

pub fn load_reference(cfg: &ExperimentConfig) -> Result<ReferenceRecord> {
    let path = out(cfg, REFERENCE_FILE);
    require(&path, "reference")?;
    let r: ReferenceRecord = read_json(&path)?;
    if r.schema_version != REFERENCE_SCHEMA_VERSION {
        return Err(Error::Config(format!("unsupported reference schema version {}", r.schema_version)));
    }
    if r.qoi != cfg.qoi {
        return Err(Error::Config(format!("{} is for a different QoI", path.display())));
    }
    Ok(r)
}

/// Importance-sampling reference value of the posterior QoI mean.
pub fn reference(cfg: &ExperimentConfig) -> Result<ReferenceRecord> {
    let model = load_model(cfg)?;
    let level = cfg.reference_level();
    let spec = LevelSpec { index: 0, disc: level };
    let (result, cpu_seconds, _) =
        timed(|| mlmcmc::reference(&model, spec, cfg.reference_samples, cfg.reference_chunks, cfg.seed));
    let record = ReferenceRecord {
        schema_version: REFERENCE_SCHEMA_VERSION,
        qoi: cfg.qoi,
        level,
        seed: cfg.seed,
        result: result?,
        cpu_seconds,
    };
    write_json(&out(cfg, REFERENCE_FILE), &record)?;
    info!(
        "reference {:.10} ± {:.2e} (ESS {:.0})",
        record.result.mean, record.result.std_error, record.result.effective_samples
    );
    Ok(record)
}

/// `replicates` realizations of the multilevel estimator for every depth
/// in range, in the configured burn-in mode.
pub fn run_mlmcmc(cfg: &ExperimentConfig, model: &PdeModel) -> Result<Vec<RunRecord>> {
    let schedules: Vec<(u32, LevelSchedule)> =
        cfg.depths().map(|l| Ok((l, cfg.schedule(l)?))).collect::<Result<_>>()?;
    let jobs: Vec<(usize, u32)> =
        (0..schedules.len()).flat_map(|i| (0..cfg.replicates).map(move |r| (i, r))).collect();
    let runs: Vec<Result<RunRecord>> = jobs
        .par_iter()
        .map(|&(i, replicate)| {
            let (depth, schedule) = &schedules[i];
            let options = EstimatorOptions {
                burn_in: cfg.burn_in,
                burn_in_fraction: cfg.burn_in_fraction,
                seed: cfg.seed,
                replicate,
            };
            let e = mlmcmc::estimate(model, schedule, &options)?;
            Ok(RunRecord {
                depth: *depth,
                replicate,
                burn_in: cfg.burn_in,
                estimate: e.estimate,
                cpu_seconds: e.cpu_seconds,
                wall_seconds: e.wall_seconds,
                acceptance_rate: e.acceptance_rate(),
                evaluations: e.evaluations,
            })
        })
        .collect();
    runs.into_iter().collect()
}

/// Runs the estimator, writes the per-run and per-depth tables and returns the latter.
pub fn mlmcmc(cfg: &ExperimentConfig) -> Result<Vec<RmseRow>> {
    let model = load_model(cfg)?;
    let reference = load_reference(cfg)?;
    let runs = run_mlmcmc(cfg, &model)?;
    let rows = summarize(&runs, reference.result.mean);
    write_csv(&out(cfg, &runs_file(cfg.burn_in)), &runs)?;
    write_csv(&out(cfg, &rmse_file(cfg.burn_in)), &rows)?;
    for r in &rows {
        info!(
            "L={} burn-in {}: rmse {:.3e}, mean CPU {:.2}s",
            r.depth,
            mode(cfg.burn_in),
            r.rmse,
            r.mean_cpu_seconds
        );
    }
    Ok(rows)
}

/// One replicate of the plain single-level chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLevelRecord {
    pub replicate: u32,
    pub truncation: u32,
    pub mesh_level: u32,
    pub samples: usize,
    pub burn_in: usize,
    pub estimate: f64,
    pub cpu_seconds: f64,
    pub acceptance_rate: f64,
}

pub fn singlelevel(cfg: &ExperimentConfig) -> Result<Vec<SingleLevelRecord>> {
    let model = load_model(cfg)?;
    let disc = cfg.single_level();
    let burn = if cfg.burn_in { (cfg.burn_in_fraction * cfg.single_level_samples as f64).ceil() as usize } else { 0 };
    let spec = ChainSpec::new(cfg.single_level_samples, burn);
    let rows: Vec<Result<SingleLevelRecord>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|replicate| {
            let e = mlmcmc::single_level(
                &model,
                LevelSpec { index: 0, disc },
                disc.truncation,
                spec,
                cfg.seed,
                replicate,
            )?;
            Ok(SingleLevelRecord {
                replicate,
                truncation: disc.truncation,
                mesh_level: disc.mesh_level,
                samples: cfg.single_level_samples,
                burn_in: burn,
                estimate: e.estimate,
                cpu_seconds: e.cpu_seconds,
                acceptance_rate: e.stats.acceptance_rate(),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    write_csv(&out(cfg, SINGLE_LEVEL_FILE), &rows)?;
    Ok(rows)
}

/// Burn-in against no burn-in, from the two per-depth tables.
pub fn report(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let with_path = out(cfg, &rmse_file(true));
    let without_path = out(cfg, &rmse_file(false));
    require(&with_path, "mlmcmc --burn-in on")?;
    require(&without_path, "mlmcmc --burn-in off")?;
    let rows = compare(&read_csv(&with_path)?, &read_csv(&without_path)?);
    if rows.is_empty() {
        return Err(Error::Config("the burn-in tables share no depth".into()));
    }
    write_csv(&out(cfg, REPORT_FILE), &rows)?;
    Ok(rows)
}

/// Plain-text rendering of the report, one column per depth.
pub fn format_report(rows: &[ReportRow]) -> String {
    let mut s = String::from("L         ");
    for r in rows {
        let _ = write!(s, "{:>10}", r.depth);
    }
    s.push_str("\nRMSE ratio");
    for r in rows {
        let _ = write!(s, "{:>10.3}", r.rmse_ratio);
    }
    s.push_str("\nCPU ratio ");
    for r in rows {
        let _ = write!(s, "{:>10.3}", r.cpu_ratio);
    }
    s.push('\n');
    s
}

pub fn dump_schedule(cfg: &ExperimentConfig) -> Result<Vec<LevelSchedule>> {
    let schedules: Vec<LevelSchedule> = cfg.depths().map(|l| cfg.schedule(l)).collect::<Result<_>>()?;
    write_json(&out(cfg, SCHEDULE_FILE), &schedules)?;
    Ok(schedules)
}

/// One prior draw at the data truncation, evaluated on the full level
/// `field_level` grid. The first line is a `#` comment carrying the
/// parameters; each further line is one grid row with `x` fastest.
pub fn sample_prior(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let family = cfg.wavelet_family()?;
    let mut rng = stream(cfg.seed, StreamKey::new(Purpose::PriorSamples));
    let n = cfg.data_truncation;
    let sample = PriorSample::draw(&cfg.prior(), n, &mut rng)?;
    let g = cfg.field_level;
    let values = sample.synthesize_field(n, &family, g)?;
    let mut text = format!(
        "# d={},G={},N={},s={},p={},beta={},kappa={},seed={}\n",
        cfg.dim, g, n, cfg.s, cfg.p, cfg.beta, cfg.kappa, cfg.seed
    );
    let row = 1usize << g;
    for chunk in values.chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_atomic(&out(cfg, FIELD_FILE), text.as_bytes())?;
    Ok(values)
}
