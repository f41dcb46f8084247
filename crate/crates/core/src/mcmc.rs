//! Independence Metropolis-Hastings with prior proposals, and the
//! self-normalized importance-sampling ratio estimator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A posterior `∝ exp(−Φ) · prior` that can be sampled by prior proposals.
pub trait IndependenceTarget {
    /// A drawn parameter together with everything evaluated on it.
    type State: Clone;

    /// Draws a fresh parameter from the prior and evaluates it.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::State>;

    /// `Φ` of the targeted level at `state`.
    fn potential(&self, state: &Self::State) -> f64;
}

/// `min{1, exp(Φ(current) − Φ(proposal))}`, computed without overflow.
pub fn acceptance_probability(current: f64, proposal: f64) -> f64 {
    let delta = current - proposal;
    if delta >= 0.0 {
        1.0
    } else {
        delta.exp()
    }
}

/// One step: returns the next state and whether the proposal was accepted.
/// Each step consumes one prior draw and one uniform.
pub fn imh_step<T: IndependenceTarget, R: Rng + ?Sized>(
    target: &T,
    current: &T::State,
    rng: &mut R,
) -> Result<(T::State, bool)> {
    let proposal = target.draw(rng)?;
    let u: f64 = rng.gen();
    let delta = target.potential(current) - target.potential(&proposal);
    if delta >= 0.0 || u < delta.exp() {
        Ok((proposal, true))
    } else {
        Ok((current.clone(), false))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStats {
    /// Transitions performed, burn-in included.
    pub steps: usize,
    pub acceptances: usize,
    pub burn_in: usize,
    pub retained: usize,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.acceptances as f64 / self.steps as f64
        }
    }
}

/// One recorded chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub accepted: bool,
    pub potential: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainOutput<S> {
    /// Mean of each functional over the retained states.
    pub means: Vec<f64>,
    pub stats: ChainStats,
    pub last: S,
    pub trace: Vec<TraceRow>,
}

/// Chain length and recording options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpec {
    pub retained: usize,
    pub burn_in: usize,
    pub record_trace: bool,
}

impl ChainSpec {
    pub fn new(retained: usize, burn_in: usize) -> Self {
        ChainSpec { retained, burn_in, record_trace: false }
    }

    pub fn traced(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// Runs `burn_in + retained` states (the initial one included) and averages
/// `functionals` over the last `retained`.
///
/// Without `initial`, the first state is a prior draw. `functionals` writes
/// `width` values per state.
pub fn run_chain<T, R, F>(
    target: &T,
    initial: Option<T::State>,
    spec: ChainSpec,
    width: usize,
    mut functionals: F,
    rng: &mut R,
) -> Result<ChainOutput<T::State>>
where
    T: IndependenceTarget,
    R: Rng + ?Sized,
    F: FnMut(&T::State, &mut [f64]),
{
    let ChainSpec { retained, burn_in, record_trace } = spec;
    if retained == 0 {
        return Err(Error::Validation("a chain must retain at least one state".into()));
    }
    let mut state = match initial {
        Some(s) => s,
        None => target.draw(rng)?,
    };
    let mut stats = ChainStats { burn_in, retained, ..ChainStats::default() };
    let mut sums = vec![0.0; width];
    let mut values = vec![0.0; width];
    let mut trace = Vec::new();
    let total = burn_in + retained;
    let mut accepted = false;
    for index in 0..total {
        if index > 0 {
            let (next, acc) = imh_step(target, &state, rng)?;
            state = next;
            accepted = acc;
            stats.steps += 1;
            stats.acceptances += acc as usize;
        }
        if index >= burn_in || record_trace {
            functionals(&state, &mut values);
            if index >= burn_in {
                for (s, v) in sums.iter_mut().zip(&values) {
                    *s += v;
                }
            }
            if record_trace {
                trace.push(TraceRow {
                    step: index,
                    accepted,
                    potential: target.potential(&state),
                    values: values.clone(),
                });
            }
        }
    }
    let means = sums.iter().map(|s| s / retained as f64).collect();
    Ok(ChainOutput { means, stats, last: state, trace })
}

/// Writes a chain trace as CSV: `step,accepted,potential,f0,f1,…`.
pub fn write_trace<W: std::io::Write>(rows: &[TraceRow], mut out: W) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.values.len());
    let mut header = String::from("step,accepted,potential");
    for i in 0..width {
        header.push_str(&format!(",f{i}"));
    }
    writeln!(out, "{header}")?;
    for r in rows {
        let mut line = format!("{},{},{}", r.step, r.accepted as u8, r.potential);
        for v in &r.values {
            line.push_str(&format!(",{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Self-normalized importance sampling estimate with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Kish effective sample size `(Σw)² / Σw²`.
    pub effective_samples: f64,
    pub samples: usize,
}

/// `Σ φᵢ e^{−Φᵢ} / Σ e^{−Φᵢ}` from `(Φᵢ, φᵢ)` pairs of i.i.d. prior draws.
/// Potentials are shifted by their minimum before exponentiation.
pub fn ratio_estimate(pairs: &[(f64, f64)]) -> Result<RatioEstimate> {
    if pairs.is_empty() {
        return Err(Error::Estimation("no samples".into()));
    }
    if pairs.iter().any(|(p, v)| !p.is_finite() || !v.is_finite()) {
        return Err(Error::Estimation("non-finite potential or functional value".into()));
    }
    let shift = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    // centring at the first value keeps a constant functional exact
    let centre = pairs[0].1;
    let (mut sw, mut swv, mut sw2) = (0.0, 0.0, 0.0);
    for &(phi, v) in pairs {
        let w = (shift - phi).exp();
        sw += w;
        swv += w * (v - centre);
        sw2 += w * w;
    }
    if !(sw > 0.0) {
        return Err(Error::Estimation("all importance weights underflow".into()));
    }
    let mean = centre + swv / sw;
    let var: f64 = pairs
        .iter()
        .map(|&(phi, v)| {
            let w = (shift - phi).exp();
            (w * (v - mean)).powi(2)
        })
        .sum();
    Ok(RatioEstimate {
        mean,
        std_error: var.sqrt() / sw,
        effective_samples: sw * sw / sw2,
        samples: pairs.len(),
    })
}

/// Ratio estimator over `samples` prior draws of `target`, with functional `qoi`.
pub fn ratio_reference<T, R, F>(target: &T, samples: usize, mut qoi: F, rng: &mut R) -> Result<RatioEstimate>
where
    T: IndependenceTarget,
    R: Rng + ?Sized,
    F: FnMut(&T::State) -> f64,
{
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s = target.draw(rng)?;
        pairs.push((target.potential(&s), qoi(&s)));
    }
    ratio_estimate(&pairs)
}
