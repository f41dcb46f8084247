//! Models the multilevel estimator can run on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{Discretization, ForwardModel, ObservationSetup};
use crate::error::{Error, Result};
use crate::fem::FemSolution;
use crate::prior::{PriorParams, PriorSample};

/// One level of either hierarchy: its index and its discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelSpec {
    pub index: u32,
    pub disc: Discretization,
}

/// Potentials and QoI values at the requested levels, in request order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub potentials: Vec<f64>,
    pub qois: Vec<f64>,
}

/// A parameter space with a prior, a level-indexed potential and a
/// level-indexed quantity of interest.
pub trait MultilevelModel: Sync {
    type Sample: Clone + Send + Sync;

    /// Draws from the prior; the draw must serve truncations up to `cap`.
    fn draw<R: Rng + ?Sized>(&self, cap: u32, rng: &mut R) -> Result<Self::Sample>;

    /// Evaluates all requested levels on the same parameter.
    fn evaluate(&self, sample: &Self::Sample, potentials: &[LevelSpec], qois: &[LevelSpec]) -> Result<Evaluation>;
}

/// Quantity of interest of the PDE solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qoi {
    /// `(∫ ∇u·∇u)^{1/2}`.
    Energy,
    /// `∫ u`.
    Mean,
}

impl Qoi {
    pub fn apply(&self, u: &FemSolution) -> f64 {
        match self {
            Qoi::Energy => u.energy_norm(),
            Qoi::Mean => u.mean(),
        }
    }
}

impl std::str::FromStr for Qoi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Qoi::Energy),
            "mean" => Ok(Qoi::Mean),
            other => Err(Error::Config(format!("unknown QoI '{other}' (expected energy or mean)"))),
        }
    }
}

/// The elliptic inverse problem with a Besov random tree prior.
#[derive(Debug, Clone)]
pub struct PdeModel {
    pub prior: PriorParams,
    pub forward: ForwardModel,
    pub observations: ObservationSetup,
    pub qoi: Qoi,
}

impl PdeModel {
    pub fn new(prior: PriorParams, forward: ForwardModel, observations: ObservationSetup, qoi: Qoi) -> Result<Self> {
        prior.validate()?;
        if observations.data().is_none() {
            return Err(Error::Validation("the model needs observation data".into()));
        }
        if prior.dim != forward.dim() || observations.dim() != forward.dim() {
            return Err(Error::Validation("prior, forward model and observations disagree on dimension".into()));
        }
        Ok(PdeModel { prior, forward, observations, qoi })
    }
}

impl MultilevelModel for PdeModel {
    type Sample = PriorSample;

    fn draw<R: Rng + ?Sized>(&self, cap: u32, rng: &mut R) -> Result<PriorSample> {
        PriorSample::draw(&self.prior, cap, rng)
    }

    fn evaluate(&self, sample: &PriorSample, potentials: &[LevelSpec], qois: &[LevelSpec]) -> Result<Evaluation> {
        // each distinct discretization is solved once
        let mut discs: Vec<Discretization> = Vec::with_capacity(4);
        for spec in potentials.iter().chain(qois) {
            if !discs.contains(&spec.disc) {
                discs.push(spec.disc);
            }
        }
        let solutions = discs.iter().map(|&d| self.forward.solve(sample, d)).collect::<Result<Vec<_>>>()?;
        let solution = |d: Discretization| &solutions[discs.iter().position(|&x| x == d).expect("collected above")];
        let mut out = Evaluation::default();
        for spec in potentials {
            out.potentials.push(self.observations.potential(solution(spec.disc))?);
        }
        for spec in qois {
            out.qois.push(self.qoi.apply(solution(spec.disc)));
        }
        Ok(out)
    }
}

/// Finite parameter space with explicit level-wise potentials and QoIs;
/// expectations are computable exactly by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomModel {
    pub prior: Vec<f64>,
    /// `potentials[ℓ][atom]`.
    pub potentials: Vec<Vec<f64>>,
    /// `qois[ℓ'][atom]`.
    pub qois: Vec<Vec<f64>>,
}

impl AtomModel {
    pub fn new(prior: Vec<f64>, potentials: Vec<Vec<f64>>, qois: Vec<Vec<f64>>) -> Result<Self> {
        let n = prior.len();
        let total: f64 = prior.iter().sum();
        if n == 0 || prior.iter().any(|p| !(*p > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("atom prior must be positive and sum to one".into()));
        }
        if potentials.iter().chain(&qois).any(|row| row.len() != n || row.iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation("every level needs one finite value per atom".into()));
        }
        Ok(AtomModel { prior, potentials, qois })
    }

    /// Posterior weights at potential level `level`.
    pub fn posterior(&self, level: usize) -> Vec<f64> {
        let shift = self.potentials[level].iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.prior.iter().zip(&self.potentials[level]).map(|(p, f)| p * (shift - f).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// Exact posterior expectation at `level` of `f(atom)`.
    pub fn expectation(&self, level: usize, f: impl Fn(usize) -> f64) -> f64 {
        self.posterior(level).iter().enumerate().map(|(i, p)| p * f(i)).sum()
    }
}

impl MultilevelModel for AtomModel {
    type Sample = usize;

    fn draw<R: Rng + ?Sized>(&self, _cap: u32, rng: &mut R) -> Result<usize> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.prior.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
        Ok(self.prior.len() - 1)
    }

    fn evaluate(&self, sample: &usize, potentials: &[LevelSpec], qois: &[LevelSpec]) -> Result<Evaluation> {
        let pick = |rows: &Vec<Vec<f64>>, spec: &LevelSpec| -> Result<f64> {
            rows.get(spec.index as usize)
                .map(|row| row[*sample])
                .ok_or_else(|| Error::Validation(format!("level {} not defined on the atom model", spec.index)))
        };
        Ok(Evaluation {
            potentials: potentials.iter().map(|s| pick(&self.potentials, s)).collect::<Result<_>>()?,
            qois: qois.iter().map(|s| pick(&self.qois, s)).collect::<Result<_>>()?,
        })
    }
}
