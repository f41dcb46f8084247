//! Point observations, Gaussian noise and the Bayesian potential.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, CoefficientField, FemSolution, SolverOptions, Source, UniformMesh};
use crate::prior::PriorSample;
use crate::wavelet::{check_dim, WaveletFamily};

/// Observation locations, noise level `σ` (covariance `σ²I`) and, once
/// synthesized or loaded, the data vector `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSetup {
    points: Vec<Vec<f64>>,
    sigma: f64,
    data: Option<Vec<f64>>,
}

impl ObservationSetup {
    pub fn new(points: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("noise level must be positive, got {sigma}")));
        }
        let Some(dim) = points.first().map(Vec::len) else {
            return Err(Error::Config("at least one observation point is required".into()));
        };
        check_dim(dim)?;
        for p in &points {
            if p.len() != dim {
                return Err(Error::Config("observation points have mixed dimensions".into()));
            }
            if p.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                return Err(Error::Config(format!("observation point {p:?} is not strictly interior")));
            }
        }
        Ok(ObservationSetup { points, sigma, data: None })
    }

    /// Nine points `0.1·i` on the interval, `σ = 0.1`.
    pub fn default_1d() -> Self {
        Self::new((1..=9).map(|i| vec![0.1 * i as f64]).collect(), 0.1).expect("valid default")
    }

    /// The 36-point tensor grid `{0.1, 0.26, …, 0.9}²`, `σ = 0.1`.
    pub fn default_2d() -> Self {
        let axis: Vec<f64> = (0..6).map(|i| 0.1 + 0.16 * i as f64).collect();
        let points = axis.iter().flat_map(|&y| axis.iter().map(move |&x| vec![x, y])).collect();
        Self::new(points, 0.1).expect("valid default")
    }

    pub fn with_data(mut self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.points.len() {
            return Err(Error::Validation(format!(
                "{} data values for {} observation points",
                data.len(),
                self.points.len()
            )));
        }
        if data.iter().any(|d| !d.is_finite()) {
            return Err(Error::Validation("data contain non-finite values".into()));
        }
        self.data = Some(data);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn data(&self) -> Option<&[f64]> {
        self.data.as_deref()
    }

    /// `(k/2)·log(2π det Σ)` with `det Σ = σ^{2k}`.
    ///
    /// This constant follows the normalization `(2π det Σ)^{-k/2}`, not the
    /// textbook `(2π)^{-k/2} det Σ^{-1/2}`; only differences of potentials
    /// are ever used, so it cancels.
    pub fn log_normalization(&self) -> f64 {
        let k = self.len() as f64;
        0.5 * k * (2.0 * std::f64::consts::PI).ln() + k * k * self.sigma.ln()
    }

    /// `‖δ − 𝒢‖² / (2σ²)`.
    pub fn misfit(&self, observed: &[f64]) -> Result<f64> {
        let data = self.data.as_ref().ok_or_else(|| Error::Validation("observation data are missing".into()))?;
        if observed.len() != data.len() {
            return Err(Error::Validation(format!("{} observations for {} data", observed.len(), data.len())));
        }
        let sq: f64 = data.iter().zip(observed).map(|(d, g)| (d - g).powi(2)).sum();
        Ok(sq / (2.0 * self.sigma * self.sigma))
    }

    /// `Φ = (k/2)·log(2π det Σ) + ‖δ − 𝒢‖²/(2σ²)` for given model observations `𝒢`.
    pub fn potential_from_observations(&self, observed: &[f64]) -> Result<f64> {
        Ok(self.log_normalization() + self.misfit(observed)?)
    }

    /// `Φ` for a discrete forward solution, observed by point evaluation.
    pub fn potential(&self, solution: &FemSolution) -> Result<f64> {
        self.potential_from_observations(&solution.point_eval(&self.points)?)
    }
}

/// Discretization level of one forward evaluation: prior truncation `N` and mesh level `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Discretization {
    pub truncation: u32,
    pub mesh_level: u32,
}

/// `ω ↦ u_h` for `−∇·(exp(b_{T,N}) ∇u) = f` with constant `f`.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    dim: usize,
    family: Arc<WaveletFamily>,
    source: f64,
    solver: SolverOptions,
}

impl ForwardModel {
    pub fn new(dim: usize, family: Arc<WaveletFamily>, source: f64, solver: SolverOptions) -> Result<Self> {
        check_dim(dim)?;
        if !source.is_finite() {
            return Err(Error::Config(format!("source term {source} is not finite")));
        }
        Ok(ForwardModel { dim, family, source, solver })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &WaveletFamily {
        &self.family
    }

    pub fn source(&self) -> f64 {
        self.source
    }

    pub fn solver(&self) -> &SolverOptions {
        &self.solver
    }

    pub fn coefficient(&self, sample: &PriorSample, level: Discretization) -> Result<CoefficientField> {
        let mesh = UniformMesh::new(self.dim, level.mesh_level)?;
        let log_a = sample.synthesize_midpoints(level.truncation, &self.family, level.mesh_level)?;
        CoefficientField::from_log_values(mesh, &log_a)
    }

    pub fn solve_coefficient(&self, coefficient: &CoefficientField) -> Result<FemSolution> {
        fem::solve_with(coefficient, &Source::Constant(self.source), &self.solver)
    }

    pub fn solve(&self, sample: &PriorSample, level: Discretization) -> Result<FemSolution> {
        self.solve_coefficient(&self.coefficient(sample, level)?)
    }
}

/// `δ = 𝒢_fine(ω†) + σ·ξ`, `ξ` standard normal.
pub fn synthesize_data<R: Rng + ?Sized>(
    model: &ForwardModel,
    ground_truth: &PriorSample,
    fine: Discretization,
    setup: ObservationSetup,
    rng: &mut R,
) -> Result<ObservationSetup> {
    if setup.dim() != model.dim() {
        return Err(Error::Validation("observation and model dimensions differ".into()));
    }
    let solution = model.solve(ground_truth, fine)?;
    let clean = solution.point_eval(setup.points())?;
    let sigma = setup.sigma();
    let data = clean.iter().map(|g| g + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    setup.with_data(data)
}

pub const DATA_SCHEMA_VERSION: u32 = 1;

/// On-disk data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub schema_version: u32,
    pub points: Vec<Vec<f64>>,
    pub sigma: f64,
    pub delta: Vec<f64>,
    pub ground_truth_seed: u64,
    pub fine_level: Discretization,
}

impl DataRecord {
    pub fn new(setup: &ObservationSetup, ground_truth_seed: u64, fine_level: Discretization) -> Result<Self> {
        let delta = setup.data().ok_or_else(|| Error::Validation("no data to record".into()))?.to_vec();
        Ok(DataRecord {
            schema_version: DATA_SCHEMA_VERSION,
            points: setup.points().to_vec(),
            sigma: setup.sigma(),
            delta,
            ground_truth_seed,
            fine_level,
        })
    }

    pub fn setup(&self) -> Result<ObservationSetup> {
        if self.schema_version != DATA_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported data schema version {}", self.schema_version)));
        }
        ObservationSetup::new(self.points.clone(), self.sigma)?.with_data(self.delta.clone())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_misfit_leaves_the_normalization() {
        let pts: Vec<Vec<f64>> = (1..=9).map(|i| vec![0.1 * i as f64]).collect();
        let obs = vec![0.25; 9];
        let setup = ObservationSetup::new(pts, 1.0).unwrap().with_data(obs.clone()).unwrap();
        let phi = setup.potential_from_observations(&obs).unwrap();
        assert_abs_diff_eq!(phi, 4.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_point_formula() {
        let setup = ObservationSetup::new(vec![vec![0.5]], 0.1).unwrap().with_data(vec![0.3]).unwrap();
        let phi = setup.potential_from_observations(&[0.2]).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * 0.01).ln() + 0.5;
        assert_abs_diff_eq!(phi, expected, epsilon = 1e-12);
    }

    #[test]
    fn differences_cancel_the_constant() {
        let a = ObservationSetup::default_1d().with_data(vec![0.1; 9]).unwrap();
        let b = ObservationSetup::new(a.points().to_vec(), 0.1).unwrap().with_data(vec![0.1; 9]).unwrap();
        let g1: Vec<f64> = (0..9).map(|i| 0.05 * i as f64).collect();
        let g2: Vec<f64> = (0..9).map(|i| 0.2 - 0.01 * i as f64).collect();
        let d = a.potential_from_observations(&g1).unwrap() - a.potential_from_observations(&g2).unwrap();
        let m = b.misfit(&g1).unwrap() - b.misfit(&g2).unwrap();
        assert_abs_diff_eq!(d, m, epsilon = 1e-12);
    }

    #[test]
    fn default_point_sets() {
        let s1 = ObservationSetup::default_1d();
        assert_eq!(s1.len(), 9);
        assert_abs_diff_eq!(s1.points()[8][0], 0.9, epsilon = 1e-15);
        let s2 = ObservationSetup::default_2d();
        assert_eq!(s2.len(), 36);
        assert_eq!(s2.dim(), 2);
        assert_abs_diff_eq!(s2.points()[7][0], 0.26, epsilon = 1e-15);
        assert_abs_diff_eq!(s2.points()[7][1], 0.26, epsilon = 1e-15);
        assert_abs_diff_eq!(s2.points()[35][1], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_setups() {
        assert!(ObservationSetup::new(vec![vec![0.5]], 0.0).is_err());
        assert!(ObservationSetup::new(vec![vec![1.0]], 0.1).is_err());
        assert!(ObservationSetup::new(vec![vec![0.5], vec![0.5, 0.5]], 0.1).is_err());
        assert!(ObservationSetup::new(vec![], 0.1).is_err());
        assert!(ObservationSetup::default_1d().with_data(vec![0.0; 3]).is_err());
        assert!(ObservationSetup::default_1d().misfit(&[0.0; 9]).is_err());
    }
}
