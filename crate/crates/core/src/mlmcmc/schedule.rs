//! Level hierarchy, sample counts and oversampling weights of the multilevel estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `⌈x⌉`, except that values within a relative `1e-9` of an integer round to
/// it, so that `⌈8.000000000001⌉` from floating-point logarithms stays 8.
pub fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// How deep the hierarchy goes: from an accuracy target or directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Depth {
    Tolerance(f64),
    Levels(u32),
}

/// Weight parameters for one direction (posterior levels `ℓ` or QoI levels `ℓ'`).
/// Which of them is used depends on the regime the rates select.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectionWeights {
    /// Exponent of `(ℓ+1)^{α₁}`; must exceed 2.
    pub alpha1: f64,
    /// Exponent of `2^{α₂ℓ}`; has no default.
    pub alpha2: Option<f64>,
    pub alpha3: f64,
    /// Factor `c` in `1 + c·L²·1{ℓ>0}`.
    pub stabilization: f64,
}

impl Default for DirectionWeights {
    fn default() -> Self {
        DirectionWeights { alpha1: 3.0, alpha2: None, alpha3: 0.5, stabilization: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct WeightParams {
    pub level: DirectionWeights,
    pub qoi: DirectionWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub dim: usize,
    /// `h₀ = 2^{-h0_level}`.
    pub h0_level: u32,
    pub depth: Depth,
    /// FE convergence rate.
    pub r: f64,
    /// Truncation rate.
    pub t: f64,
    pub eta_obs: f64,
    pub eta_qoi: f64,
    pub weights: WeightParams,
}

/// Weight law in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightRegime {
    /// `(ℓ+1)^{α₁}`, when `2ηr > d`.
    Polynomial { alpha1: f64 },
    /// `1 + c·L²·1{ℓ>0}`, when `2ηr = d` and the other direction has `2ηr ≥ d`.
    LogSquared { c: f64, depth: u32 },
    /// `2^{α₂ℓ}`, when `2ηr = d` and the other direction has `2ηr < d`.
    Geometric { alpha2: f64 },
    /// `2^{(d−2ηr)(L−ℓ)α₃}`, when `2ηr < d`.
    Decaying { gap: f64, alpha3: f64, depth: u32 },
}

impl WeightRegime {
    pub fn weight(&self, level: u32) -> f64 {
        match *self {
            WeightRegime::Polynomial { alpha1 } => (level as f64 + 1.0).powf(alpha1),
            WeightRegime::LogSquared { c, depth } => {
                if level > 0 {
                    1.0 + c * (depth as f64).powi(2)
                } else {
                    1.0
                }
            }
            WeightRegime::Geometric { alpha2 } => 2f64.powf(alpha2 * level as f64),
            WeightRegime::Decaying { gap, alpha3, depth } => {
                2f64.powf(gap * (depth as f64 - level as f64) * alpha3)
            }
        }
    }

    /// Upper bound on `Σ_{ℓ≥0} w_ℓ^{-1/2}` uniform in the depth.
    pub fn inverse_sqrt_sum_bound(&self) -> f64 {
        match *self {
            WeightRegime::Polynomial { alpha1 } => riemann_zeta(alpha1 / 2.0),
            WeightRegime::LogSquared { c, .. } => 1.0 + 1.0 / c.sqrt(),
            WeightRegime::Geometric { alpha2 } => 1.0 / (1.0 - 2f64.powf(-alpha2 / 2.0)),
            WeightRegime::Decaying { gap, alpha3, .. } => 1.0 / (1.0 - 2f64.powf(-gap * alpha3 / 2.0)),
        }
    }
}

/// `ζ(s)` for `s > 1` by direct summation plus an Euler-Maclaurin tail.
fn riemann_zeta(s: f64) -> f64 {
    const K: usize = 1000;
    let k = K as f64;
    let head: f64 = (1..K).map(|n| (n as f64).powf(-s)).sum();
    head + k.powf(1.0 - s) / (s - 1.0) + 0.5 * k.powf(-s) + s * k.powf(-s - 1.0) / 12.0
}

fn classify(
    dim: usize,
    own: f64,
    other: f64,
    params: &DirectionWeights,
    depth: u32,
    label: &str,
) -> Result<WeightRegime> {
    let d = dim as f64;
    let tol = 1e-12;
    let regime = if own > d + tol {
        if !(params.alpha1 > 2.0) {
            return Err(Error::Config(format!("{label}: alpha1 must exceed 2, got {}", params.alpha1)));
        }
        WeightRegime::Polynomial { alpha1: params.alpha1 }
    } else if (own - d).abs() <= tol {
        if other >= d - tol {
            if !(params.stabilization > 0.0) {
                return Err(Error::Config(format!("{label}: stabilization factor must be positive")));
            }
            WeightRegime::LogSquared { c: params.stabilization, depth }
        } else {
            let upper = (d / 2.0 * (d / other - 1.0)).min(d);
            let alpha2 = params
                .alpha2
                .ok_or_else(|| Error::Config(format!("{label}: this regime needs alpha2 in (0, {upper}]")))?;
            if !(alpha2 > 0.0 && alpha2 <= upper && alpha2 < d) {
                return Err(Error::Config(format!("{label}: alpha2 = {alpha2} outside (0, {upper}] ∩ (0, {d})")));
            }
            WeightRegime::Geometric { alpha2 }
        }
    } else {
        if !(params.alpha3 > 0.0 && params.alpha3 < 1.0) {
            return Err(Error::Config(format!("{label}: alpha3 must lie in (0, 1), got {}", params.alpha3)));
        }
        WeightRegime::Decaying { gap: d - own, alpha3: params.alpha3, depth }
    };
    Ok(regime)
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::Config(format!("r must lie in (0, 1], got {}", self.r)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::Config(format!("t must be positive, got {}", self.t)));
        }
        if !(self.eta_obs >= 1.0 && self.eta_obs < 1.5) {
            return Err(Error::Config(format!("eta_obs must lie in [1, 3/2), got {}", self.eta_obs)));
        }
        if !(self.eta_qoi >= 1.0 && self.eta_qoi <= 2.0) {
            return Err(Error::Config(format!("eta_qoi must lie in [1, 2], got {}", self.eta_qoi)));
        }
        if self.h0_level == 0 {
            return Err(Error::Config("h0 must be a negative power of two".into()));
        }
        if let Depth::Tolerance(eps) = self.depth {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("tolerance must lie in (0, 1), got {eps}")));
            }
        }
        Ok(())
    }

    /// `L = ⌈−log₂ε/(η_𝒪 r) + log₂h₀⌉` (at least 0), or the given `L`.
    pub fn depth(&self) -> u32 {
        match self.depth {
            Depth::Levels(l) => l,
            Depth::Tolerance(eps) => {
                let x = -eps.log2() / (self.eta_obs * self.r) - self.h0_level as f64;
                snapped_ceil(x).max(0.0) as u32
            }
        }
    }
}

/// The full level hierarchy for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub dim: usize,
    pub depth: u32,
    pub qoi_depth: u32,
    /// `m_ℓ` with `h_ℓ = 2^{-m_ℓ}`.
    pub mesh_levels: Vec<u32>,
    pub truncations: Vec<u32>,
    pub qoi_mesh_levels: Vec<u32>,
    pub qoi_truncations: Vec<u32>,
    /// `M[ℓ][ℓ']`.
    pub samples: Vec<Vec<usize>>,
    /// `w[ℓ][ℓ'] = w_ℓ · w_ℓ'`.
    pub weights: Vec<Vec<f64>>,
    pub level_regime: WeightRegime,
    pub qoi_regime: WeightRegime,
    /// `Σ w_{ℓ,ℓ'}^{-1/2}` over all blocks, and its depth-uniform bound.
    pub weight_sum: f64,
    pub weight_bound: f64,
}

impl LevelSchedule {
    pub fn build(params: &ScheduleParams) -> Result<Self> {
        params.validate()?;
        let depth = params.depth();
        let qoi_depth = snapped_ceil(depth as f64 * params.eta_obs / params.eta_qoi) as u32;
        if params.h0_level + depth.max(qoi_depth) > 14 {
            return Err(Error::Config(format!(
                "finest mesh level {} exceeds 14",
                params.h0_level + depth.max(qoi_depth)
            )));
        }
        let mesh_levels: Vec<u32> = (0..=depth).map(|l| params.h0_level + l).collect();
        let qoi_mesh_levels: Vec<u32> = (0..=qoi_depth).map(|l| params.h0_level + l).collect();
        let trunc = |m: u32, eta: f64| snapped_ceil(m as f64 * eta * params.r / params.t) as u32;
        let truncations = mesh_levels.iter().map(|&m| trunc(m, params.eta_obs)).collect();
        let qoi_truncations = qoi_mesh_levels.iter().map(|&m| trunc(m, params.eta_qoi)).collect();

        let two_r = 2.0 * params.r;
        let own_obs = two_r * params.eta_obs;
        let own_qoi = two_r * params.eta_qoi;
        let level_regime = classify(params.dim, own_obs, own_qoi, &params.weights.level, depth, "level weights")?;
        let qoi_regime = classify(params.dim, own_qoi, own_obs, &params.weights.qoi, qoi_depth, "QoI weights")?;

        let m_fine = mesh_levels[depth as usize] as f64;
        let mut samples = vec![vec![0usize; qoi_depth as usize + 1]; depth as usize + 1];
        let mut weights = vec![vec![0.0; qoi_depth as usize + 1]; depth as usize + 1];
        let mut weight_sum = 0.0;
        for l in 0..=depth {
            for lq in 0..=qoi_depth {
                let w = level_regime.weight(l) * qoi_regime.weight(lq);
                // log₂ of h_L^{-2rη_𝒪} h_ℓ^{2rη_𝒪 1{ℓ>0}} h_ℓ'^{2rη_Ψ 1{ℓ'>0}}
                let mut e = own_obs * m_fine;
                if l > 0 {
                    e -= own_obs * mesh_levels[l as usize] as f64;
                }
                if lq > 0 {
                    e -= own_qoi * qoi_mesh_levels[lq as usize] as f64;
                }
                let m = snapped_ceil(2f64.powf(e) * w).max(1.0);
                if m > 1e15 {
                    return Err(Error::Config(format!("sample count {m:.3e} at block ({l}, {lq}) is not representable")));
                }
                samples[l as usize][lq as usize] = m as usize;
                weights[l as usize][lq as usize] = w;
                weight_sum += w.powf(-0.5);
            }
        }
        let weight_bound = level_regime.inverse_sqrt_sum_bound() * qoi_regime.inverse_sqrt_sum_bound();
        if weight_sum > weight_bound * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "weight sum {weight_sum} exceeds its uniform bound {weight_bound}"
            )));
        }
        Ok(LevelSchedule {
            dim: params.dim,
            depth,
            qoi_depth,
            mesh_levels,
            truncations,
            qoi_mesh_levels,
            qoi_truncations,
            samples,
            weights,
            level_regime,
            qoi_regime,
            weight_sum,
            weight_bound,
        })
    }

    /// Largest truncation used anywhere; prior draws are capped here.
    pub fn max_truncation(&self) -> u32 {
        self.truncations.iter().chain(&self.qoi_truncations).copied().max().unwrap_or(0)
    }

    pub fn max_mesh_level(&self) -> u32 {
        self.mesh_levels.iter().chain(&self.qoi_mesh_levels).copied().max().unwrap_or(0)
    }

    pub fn total_samples(&self) -> usize {
        self.samples.iter().flatten().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_1d(depth: Depth) -> ScheduleParams {
        ScheduleParams {
            dim: 1,
            h0_level: 3,
            depth,
            r: 1.0,
            t: 1.0,
            eta_obs: 1.0,
            eta_qoi: 1.0,
            weights: WeightParams::default(),
        }
    }

    #[test]
    fn depth_from_tolerance() {
        assert_eq!(params_1d(Depth::Tolerance(2f64.powi(-8))).depth(), 5);
        assert_eq!(params_1d(Depth::Tolerance(0.3)).depth(), 0);
    }

    #[test]
    fn first_block_count() {
        let s = LevelSchedule::build(&params_1d(Depth::Levels(2))).unwrap();
        assert_eq!(s.mesh_levels, vec![3, 4, 5]);
        assert_eq!(s.samples[0][0], 1024);
        assert_eq!(s.weights[1][2], 8.0 * 27.0);
        assert_eq!(s.qoi_depth, 2);
    }

    #[test]
    fn snapped_ceil_absorbs_rounding() {
        assert_eq!(snapped_ceil(8.000000000001), 8.0);
        assert_eq!(snapped_ceil(7.9999999999), 8.0);
        assert_eq!(snapped_ceil(7.2), 8.0);
        assert_eq!(snapped_ceil(-0.5), -0.0);
    }

    #[test]
    fn regimes_follow_rates() {
        let mut p = params_1d(Depth::Levels(3));
        p.dim = 2;
        let s = LevelSchedule::build(&p).unwrap();
        assert!(matches!(s.level_regime, WeightRegime::LogSquared { depth: 3, .. }));
        p.eta_qoi = 2.0;
        p.weights.qoi.alpha1 = 6.0;
        p.weights.level.stabilization = 3.0;
        let s = LevelSchedule::build(&p).unwrap();
        assert_eq!(s.qoi_depth, 2);
        assert!(matches!(s.qoi_regime, WeightRegime::Polynomial { alpha1 } if alpha1 == 6.0));
        assert_eq!(s.weights[2][1], (1.0 + 27.0) * 64.0);
        assert_eq!(s.qoi_truncations, vec![6, 8, 10]);
        p.r = 0.8;
        p.eta_qoi = 1.0;
        assert!(LevelSchedule::build(&p).is_ok());
        // 2·0.8·1.25 = 2 = d while 2·0.8·1 < d: needs alpha2
        p.eta_obs = 1.25;
        assert!(LevelSchedule::build(&p).is_err());
        p.weights.level.alpha2 = Some(0.2);
        let s = LevelSchedule::build(&p).unwrap();
        assert!(matches!(s.level_regime, WeightRegime::Geometric { .. }));
        assert!(matches!(s.qoi_regime, WeightRegime::Decaying { .. }));
        p.weights.level.alpha2 = Some(0.3);
        assert!(LevelSchedule::build(&p).is_err());
    }

    #[test]
    fn rejects_out_of_range_rates() {
        let mut p = params_1d(Depth::Levels(2));
        p.eta_obs = 1.5;
        assert!(LevelSchedule::build(&p).is_err());
        let mut p = params_1d(Depth::Levels(2));
        p.weights.level.alpha1 = 2.0;
        assert!(LevelSchedule::build(&p).is_err());
        let mut p = params_1d(Depth::Levels(2));
        p.r = 1.5;
        assert!(LevelSchedule::build(&p).is_err());
    }

    #[test]
    fn weight_sums_stay_below_bounds_for_deep_hierarchies() {
        for l in 0..=11 {
            let s = LevelSchedule::build(&params_1d(Depth::Levels(l))).unwrap();
            assert!(s.weight_sum <= s.weight_bound);
        }
    }

    #[test]
    fn zeta_values() {
        assert!((riemann_zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-10);
    }
}
