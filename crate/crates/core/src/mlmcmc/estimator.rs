//! The multilevel MCMC estimator, its single-level counterpart and the
//! importance-sampling reference.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aterms::{a_terms, coarse_functionals, fine_functionals, BlockMeans, COARSE_WIDTH, FINE_WIDTH};
use super::model::{Evaluation, LevelSpec, MultilevelModel};
use super::schedule::LevelSchedule;
use crate::bayes::Discretization;
use crate::error::{Error, Result};
use crate::mcmc::{ratio_estimate, run_chain, ChainSpec, ChainStats, IndependenceTarget, RatioEstimate};
use crate::rng::{stream, Purpose, StreamKey};
use crate::timing::thread_cpu_seconds;

pub const ESTIMATE_SCHEMA_VERSION: u32 = 1;

/// Fraction of the first chain at each level discarded when burn-in is on.
pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// On: the `ℓ' = 0` chain at each level runs `⌈fraction·M⌉` extra states
    /// that are discarded, and each later chain at the same level starts
    /// from the last state of its predecessor. Off: every chain starts from
    /// an independent prior draw and nothing is discarded.
    pub burn_in: bool,
    pub burn_in_fraction: f64,
    pub seed: u64,
    pub replicate: u32,
}

impl EstimatorOptions {
    pub fn new(seed: u64, replicate: u32, burn_in: bool) -> Self {
        EstimatorOptions { burn_in, burn_in_fraction: DEFAULT_BURN_IN_FRACTION, seed, replicate }
    }
}

/// Chain state: the parameter and its evaluations for the current block.
#[derive(Debug, Clone)]
pub struct BlockState<S> {
    pub sample: S,
    pub eval: Evaluation,
}

impl<S> BlockState<S> {
    /// `φ_{ℓ'} − φ_{ℓ'−1}` with `φ_{−1} = 0`.
    pub fn qoi_difference(&self) -> f64 {
        self.eval.qois[0] - self.eval.qois.get(1).copied().unwrap_or(0.0)
    }
}

/// Posterior at potential slot `target` of one `(ℓ, ℓ')` block.
struct BlockTarget<'a, M> {
    model: &'a M,
    potentials: Vec<LevelSpec>,
    qois: Vec<LevelSpec>,
    target: usize,
    cap: u32,
}

impl<M: MultilevelModel> BlockTarget<'_, M> {
    fn evaluate(&self, sample: M::Sample) -> Result<BlockState<M::Sample>> {
        let eval = self.model.evaluate(&sample, &self.potentials, &self.qois)?;
        if eval.potentials.iter().chain(&eval.qois).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite potential or QoI".into()));
        }
        Ok(BlockState { sample, eval })
    }
}

impl<M: MultilevelModel> IndependenceTarget for BlockTarget<'_, M> {
    type State = BlockState<M::Sample>;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::State> {
        let sample = self.model.draw(self.cap, rng)?;
        self.evaluate(sample)
    }

    fn potential(&self, state: &Self::State) -> f64 {
        state.eval.potentials[self.target]
    }
}

fn level_spec(schedule: &LevelSchedule, l: u32) -> LevelSpec {
    LevelSpec {
        index: l,
        disc: Discretization {
            truncation: schedule.truncations[l as usize],
            mesh_level: schedule.mesh_levels[l as usize],
        },
    }
}

fn qoi_spec(schedule: &LevelSchedule, l: u32) -> LevelSpec {
    LevelSpec {
        index: l,
        disc: Discretization {
            truncation: schedule.qoi_truncations[l as usize],
            mesh_level: schedule.qoi_mesh_levels[l as usize],
        },
    }
}

/// Output of one block's chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub means: Vec<f64>,
    pub stats: ChainStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub level: u32,
    pub qoi_level: u32,
    pub samples: usize,
    pub contribution: f64,
    /// Chain targeting level `ℓ`; at `ℓ = 0` its single mean is `E^0(Δφ)`.
    pub fine: ChainSummary,
    /// Chain targeting level `ℓ−1`; absent at `ℓ = 0`.
    pub coarse: Option<ChainSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlEstimate {
    pub schema_version: u32,
    pub estimate: f64,
    pub depth: u32,
    pub qoi_depth: u32,
    pub burn_in: bool,
    pub seed: u64,
    pub replicate: u32,
    pub blocks: Vec<BlockRecord>,
    /// Total model evaluations (states drawn), burn-in included.
    pub evaluations: usize,
    /// Thread CPU time summed over all chains.
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
}

impl MlEstimate {
    pub fn acceptance_rate(&self) -> f64 {
        let (mut steps, mut acc) = (0usize, 0usize);
        for b in &self.blocks {
            for s in std::iter::once(&b.fine).chain(b.coarse.as_ref()) {
                steps += s.stats.steps;
                acc += s.stats.acceptances;
            }
        }
        if steps == 0 {
            0.0
        } else {
            acc as f64 / steps as f64
        }
    }
}

/// All chains at one posterior level and one target, in `ℓ'` order.
struct UnitResult {
    level: u32,
    target: usize,
    chains: Vec<ChainSummary>,
    cpu_seconds: f64,
}

fn run_unit<M: MultilevelModel>(
    model: &M,
    schedule: &LevelSchedule,
    options: &EstimatorOptions,
    level: u32,
    target: usize,
) -> Result<UnitResult> {
    let cpu_start = thread_cpu_seconds();
    let cap = schedule.max_truncation();
    let potentials = if level == 0 {
        vec![level_spec(schedule, 0)]
    } else {
        vec![level_spec(schedule, level), level_spec(schedule, level - 1)]
    };
    let mut chains = Vec::with_capacity(schedule.qoi_depth as usize + 1);
    let mut carried: Option<M::Sample> = None;
    for lq in 0..=schedule.qoi_depth {
        let qois = if lq == 0 {
            vec![qoi_spec(schedule, 0)]
        } else {
            vec![qoi_spec(schedule, lq), qoi_spec(schedule, lq - 1)]
        };
        let block = BlockTarget { model, potentials: potentials.clone(), qois, target, cap };
        let key = StreamKey::new(Purpose::Chain).replicate(options.replicate).block(level, lq, target as u32);
        let mut rng = stream(options.seed, key);
        let retained = schedule.samples[level as usize][lq as usize];
        let burn_in = if options.burn_in && lq == 0 {
            (options.burn_in_fraction * retained as f64).ceil() as usize
        } else {
            0
        };
        let initial = match carried.take() {
            Some(sample) if options.burn_in => Some(block.evaluate(sample)?),
            _ => None,
        };
        let out = if level == 0 {
            run_chain(&block, initial, ChainSpec::new(retained, burn_in), 1, |s, v| v[0] = s.qoi_difference(), &mut rng)?
        } else if target == 0 {
            run_chain(
                &block,
                initial,
                ChainSpec::new(retained, burn_in),
                FINE_WIDTH,
                |s, v| {
                    let p = &s.eval.potentials;
                    fine_functionals(&a_terms(p[0], p[1], s.qoi_difference()), v)
                },
                &mut rng,
            )?
        } else {
            run_chain(
                &block,
                initial,
                ChainSpec::new(retained, burn_in),
                COARSE_WIDTH,
                |s, v| {
                    let p = &s.eval.potentials;
                    coarse_functionals(&a_terms(p[0], p[1], s.qoi_difference()), v)
                },
                &mut rng,
            )?
        };
        carried = Some(out.last.sample);
        chains.push(ChainSummary { means: out.means, stats: out.stats });
    }
    Ok(UnitResult { level, target, chains, cpu_seconds: thread_cpu_seconds() - cpu_start })
}

/// One realization of the multilevel estimator `E_L(φ)`.
///
/// Chains for different `(ℓ, target)` pairs use disjoint random streams and
/// run concurrently; the result is independent of scheduling.
pub fn estimate<M: MultilevelModel>(
    model: &M,
    schedule: &LevelSchedule,
    options: &EstimatorOptions,
) -> Result<MlEstimate> {
    if !(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0) {
        return Err(Error::Config(format!("burn-in fraction {} outside [0, 1)", options.burn_in_fraction)));
    }
    let wall = Instant::now();
    let mut units: Vec<(u32, usize)> = vec![(0, 0)];
    for l in 1..=schedule.depth {
        units.push((l, 0));
        units.push((l, 1));
    }
    let results: Vec<Result<UnitResult>> = units
        .par_iter()
        .map(|&(level, target)| run_unit(model, schedule, options, level, target))
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut blocks = Vec::new();
    let mut estimate = 0.0;
    let mut cpu_seconds = 0.0;
    let mut evaluations = 0;
    for r in &results {
        cpu_seconds += r.cpu_seconds;
        for c in &r.chains {
            evaluations += c.stats.steps + 1;
        }
    }
    for level in 0..=schedule.depth {
        let fine = results.iter().find(|r| r.level == level && r.target == 0).expect("unit present");
        let coarse = results.iter().find(|r| r.level == level && r.target == 1);
        for lq in 0..=schedule.qoi_depth {
            let f = &fine.chains[lq as usize];
            let (contribution, coarse_summary) = match coarse {
                None => (f.means[0], None),
                Some(c) => {
                    let c = &c.chains[lq as usize];
                    let means = BlockMeans {
                        fine_a1: f.means[0],
                        fine_a3: f.means[1],
                        fine_a67: f.means[2],
                        coarse_a2: c.means[0],
                        coarse_a5: c.means[1],
                        coarse_a48: c.means[2],
                    };
                    (means.combine(), Some(c.clone()))
                }
            };
            estimate += contribution;
            blocks.push(BlockRecord {
                level,
                qoi_level: lq,
                samples: schedule.samples[level as usize][lq as usize],
                contribution,
                fine: f.clone(),
                coarse: coarse_summary,
            });
        }
    }
    Ok(MlEstimate {
        schema_version: ESTIMATE_SCHEMA_VERSION,
        estimate,
        depth: schedule.depth,
        qoi_depth: schedule.qoi_depth,
        burn_in: options.burn_in,
        seed: options.seed,
        replicate: options.replicate,
        blocks,
        evaluations,
        cpu_seconds,
        wall_seconds: wall.elapsed().as_secs_f64(),
    })
}

/// Result of a single-level chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLevelEstimate {
    pub estimate: f64,
    pub stats: ChainStats,
    pub cpu_seconds: f64,
}

/// Plain IMH chain mean of `φ` at one level, potential and QoI on the same discretization.
pub fn single_level<M: MultilevelModel>(
    model: &M,
    level: LevelSpec,
    cap: u32,
    spec: ChainSpec,
    seed: u64,
    replicate: u32,
) -> Result<SingleLevelEstimate> {
    let cpu = thread_cpu_seconds();
    let target = BlockTarget { model, potentials: vec![level], qois: vec![level], target: 0, cap };
    let key = StreamKey::new(Purpose::Chain).replicate(replicate).block(level.index, level.index, 15);
    let mut rng = stream(seed, key);
    let out = run_chain(&target, None, spec, 1, |s, v| v[0] = s.eval.qois[0], &mut rng)?;
    Ok(SingleLevelEstimate { estimate: out.means[0], stats: out.stats, cpu_seconds: thread_cpu_seconds() - cpu })
}

/// Self-normalized importance sampling estimate of the posterior mean of `φ`
/// at `level` from `samples` prior draws, split over `chunks` streams.
pub fn reference<M: MultilevelModel>(
    model: &M,
    level: LevelSpec,
    samples: usize,
    chunks: usize,
    seed: u64,
) -> Result<RatioEstimate> {
    let chunks = chunks.clamp(1, samples.max(1));
    let target = BlockTarget { model, potentials: vec![level], qois: vec![level], target: 0, cap: level.disc.truncation };
    let parts: Vec<Result<Vec<(f64, f64)>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = samples / chunks + usize::from(c < samples % chunks);
            let mut rng = stream(seed, StreamKey::new(Purpose::Reference).replicate(c as u32));
            (0..len)
                .map(|_| {
                    let s = target.draw(&mut rng)?;
                    Ok((s.eval.potentials[0], s.eval.qois[0]))
                })
                .collect()
        })
        .collect();
    let mut pairs = Vec::with_capacity(samples);
    for p in parts {
        pairs.extend(p?);
    }
    ratio_estimate(&pairs)
}
