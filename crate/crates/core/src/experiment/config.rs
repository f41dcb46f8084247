//! Flat key-value experiment configuration and the shipped presets.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bayes::{Discretization, ForwardModel, ObservationSetup};
use crate::error::{Error, Result};
use crate::fem::SolverOptions;
use crate::mlmcmc::{Depth, DirectionWeights, LevelSchedule, Qoi, ScheduleParams, WeightParams};
use crate::prior::PriorParams;
use crate::wavelet::WaveletFamily;

const PRESETS: [(&str, &str); 4] = [
    ("paper-1d", include_str!("../../presets/paper-1d.toml")),
    ("paper-2d", include_str!("../../presets/paper-2d.toml")),
    ("desk-1d", include_str!("../../presets/desk-1d.toml")),
    ("desk-2d", include_str!("../../presets/desk-2d.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Every key of a configuration file. Absent keys take the defaults of
/// [`ExperimentConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub qoi: Qoi,

    pub s: f64,
    pub p: f64,
    pub beta: f64,
    pub kappa: f64,
    pub wavelet_order: usize,

    pub source: f64,
    pub sigma: f64,
    /// Observation points; empty selects the default set for `dim`.
    pub points: Vec<Vec<f64>>,

    pub data_truncation: u32,
    pub data_mesh_level: u32,

    pub h0_level: u32,
    /// Inclusive range of finest levels `L` to run.
    pub levels: [u32; 2],
    pub r: f64,
    pub t: f64,
    pub eta_obs: f64,
    pub eta_qoi: f64,
    pub alpha1: f64,
    pub alpha2: Option<f64>,
    pub alpha3: f64,
    pub stabilization: f64,
    pub qoi_alpha1: f64,
    pub qoi_alpha2: Option<f64>,
    pub qoi_alpha3: f64,
    pub qoi_stabilization: f64,

    pub burn_in: bool,
    pub burn_in_fraction: f64,
    pub replicates: u32,

    pub reference_truncation: u32,
    pub reference_mesh_level: u32,
    pub reference_samples: usize,
    pub reference_chunks: usize,

    pub single_level_truncation: u32,
    pub single_level_mesh_level: u32,
    pub single_level_samples: usize,

    /// Grid level of `sample-prior` field dumps.
    pub field_level: u32,

    pub cg_tolerance: f64,
    pub direct_limit: usize,

    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dim: 1,
            qoi: Qoi::Energy,
            s: 1.6,
            p: 5.0 / 3.0,
            beta: 0.8,
            kappa: 1.0,
            wavelet_order: 5,
            source: 10.0,
            sigma: 0.1,
            points: Vec::new(),
            data_truncation: 11,
            data_mesh_level: 11,
            h0_level: 3,
            levels: [2, 6],
            r: 1.0,
            t: 1.0,
            eta_obs: 1.0,
            eta_qoi: 1.0,
            alpha1: 3.0,
            alpha2: None,
            alpha3: 0.5,
            stabilization: 1.0,
            qoi_alpha1: 3.0,
            qoi_alpha2: None,
            qoi_alpha3: 0.5,
            qoi_stabilization: 1.0,
            burn_in: false,
            burn_in_fraction: 0.2,
            replicates: 64,
            reference_truncation: 11,
            reference_mesh_level: 11,
            reference_samples: 1 << 22,
            reference_chunks: 64,
            single_level_truncation: 6,
            single_level_mesh_level: 6,
            single_level_samples: 10_000,
            field_level: 9,
            cg_tolerance: 1e-10,
            direct_limit: 127 * 127,
            seed: 2024,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{name}' (available: {})",
                    preset_names().collect::<Vec<_>>().join(", ")
                ))
            })?;
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn prior(&self) -> PriorParams {
        PriorParams { dim: self.dim, s: self.s, p: self.p, beta: self.beta, kappa: self.kappa }
    }

    pub fn observations(&self) -> Result<ObservationSetup> {
        if self.points.is_empty() {
            let mut setup = match self.dim {
                1 => ObservationSetup::default_1d(),
                _ => ObservationSetup::default_2d(),
            };
            if self.sigma != setup.sigma() {
                setup = ObservationSetup::new(setup.points().to_vec(), self.sigma)?;
            }
            Ok(setup)
        } else {
            ObservationSetup::new(self.points.clone(), self.sigma)
        }
    }

    pub fn data_level(&self) -> Discretization {
        Discretization { truncation: self.data_truncation, mesh_level: self.data_mesh_level }
    }

    pub fn reference_level(&self) -> Discretization {
        Discretization { truncation: self.reference_truncation, mesh_level: self.reference_mesh_level }
    }

    pub fn single_level(&self) -> Discretization {
        Discretization { truncation: self.single_level_truncation, mesh_level: self.single_level_mesh_level }
    }

    pub fn schedule_params(&self, depth: u32) -> ScheduleParams {
        ScheduleParams {
            dim: self.dim,
            h0_level: self.h0_level,
            depth: Depth::Levels(depth),
            r: self.r,
            t: self.t,
            eta_obs: self.eta_obs,
            eta_qoi: self.eta_qoi,
            weights: WeightParams {
                level: DirectionWeights {
                    alpha1: self.alpha1,
                    alpha2: self.alpha2,
                    alpha3: self.alpha3,
                    stabilization: self.stabilization,
                },
                qoi: DirectionWeights {
                    alpha1: self.qoi_alpha1,
                    alpha2: self.qoi_alpha2,
                    alpha3: self.qoi_alpha3,
                    stabilization: self.qoi_stabilization,
                },
            },
        }
    }

    pub fn schedule(&self, depth: u32) -> Result<LevelSchedule> {
        LevelSchedule::build(&self.schedule_params(depth))
    }

    pub fn depths(&self) -> std::ops::RangeInclusive<u32> {
        self.levels[0]..=self.levels[1]
    }

    /// Finest mesh level any command of this configuration touches.
    pub fn finest_mesh_level(&self) -> Result<u32> {
        let mut finest = self.data_mesh_level.max(self.reference_mesh_level).max(self.single_level_mesh_level);
        for l in self.depths() {
            finest = finest.max(self.schedule(l)?.max_mesh_level());
        }
        Ok(finest)
    }

    /// Wavelet tables fine enough for every midpoint grid and field dump.
    pub fn wavelet_family(&self) -> Result<WaveletFamily> {
        let level = (self.finest_mesh_level()? + 1).max(self.field_level).max(8);
        WaveletFamily::new(self.wavelet_order, level)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { tolerance: self.cg_tolerance, direct_limit: self.direct_limit, ..SolverOptions::default() }
    }

    pub fn forward_model(&self) -> Result<ForwardModel> {
        ForwardModel::new(self.dim, Arc::new(self.wavelet_family()?), self.source, self.solver())
    }

    pub fn validate(&self) -> Result<()> {
        self.prior().validate()?;
        self.observations()?;
        if self.levels[0] > self.levels[1] {
            return Err(Error::Config(format!("empty level range {}..{}", self.levels[0], self.levels[1])));
        }
        if self.replicates < 2 {
            return Err(Error::Config("at least two replicates are needed for an RMSE".into()));
        }
        if !(self.burn_in_fraction >= 0.0 && self.burn_in_fraction < 1.0) {
            return Err(Error::Config(format!("burn_in_fraction {} outside [0, 1)", self.burn_in_fraction)));
        }
        if self.reference_samples == 0 || self.single_level_samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        if !(self.cg_tolerance > 0.0 && self.cg_tolerance < 1.0) {
            return Err(Error::Config(format!("cg_tolerance {} outside (0, 1)", self.cg_tolerance)));
        }
        // data must be at least as fine as every level a potential is evaluated on
        for l in self.depths() {
            let s = self.schedule(l)?;
            let (n, m) = (s.truncations[l as usize], s.mesh_levels[l as usize]);
            if n > self.data_truncation || m > self.data_mesh_level {
                return Err(Error::Config(format!(
                    "data level (N={}, m={}) is coarser than the finest posterior level (N={n}, m={m}) at L={l}",
                    self.data_truncation, self.data_mesh_level
                )));
            }
        }
        for m in [self.data_mesh_level, self.reference_mesh_level, self.single_level_mesh_level] {
            if m == 0 || m > 14 {
                return Err(Error::Config(format!("mesh level {m} outside 1..=14")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in preset_names() {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert!(cfg.replicates >= 2, "{name}");
        }
        assert!(ExperimentConfig::preset("nope").is_err());
    }

    #[test]
    fn experiment_constants() {
        let c = ExperimentConfig::preset("paper-1d").unwrap();
        assert_eq!((c.s, c.beta, c.dim), (1.6, 0.8, 1));
        assert!((c.p - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.observations().unwrap().len(), 9);
        assert_eq!(c.reference_samples, 1 << 22);
        let c = ExperimentConfig::preset("paper-2d").unwrap();
        assert_eq!((c.s, c.beta, c.dim), (2.4, 0.5, 2));
        assert_eq!(c.observations().unwrap().len(), 36);
        assert_eq!(c.reference_samples, 1 << 18);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("dim = 1\nbogus = 3\n").is_err());
        assert!(ExperimentConfig::parse("replicates = 1\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::preset("desk-2d").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }
}
