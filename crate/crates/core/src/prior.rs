//! Besov random tree priors: Galton-Watson trees over dyadic cubes carrying
//! p-exponential wavelet coefficients.
//!
//! A node `(j, k)` of the tree activates every `l ∈ L_j` at that position; its
//! children are the `2^d` sub-cubes `(j + 1, 2k + e)`, `e ∈ {0,1}^d`, each kept
//! independently with probability `β`. One draw is made up to a fixed depth cap
//! and then serves every truncation level `N ≤ cap`, which is what couples the
//! levels of a multilevel estimator.
//!
//! For `p = 1` the forward problem is only known to be well posed for small
//! enough `κ`; this is not enforced here.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::{
    add_tensor, check_dim, l_set, BasisIndex, DyadicAxis, DyadicGrid, ProfileScratch,
    WaveletFamily, MAX_DIM,
};

/// Hard limit on tree size, to fail loudly instead of exhausting memory.
const MAX_TREE_NODES: usize = 1 << 24;

/// Galton-Watson tree of dyadic cubes, cut at a fixed depth.
#[derive(Debug, Clone, PartialEq)]
pub struct GwTree {
    dim: usize,
    depth_cap: u32,
    // levels[j] = sorted translations k of the active cubes at depth j
    levels: Vec<Vec<[u32; MAX_DIM]>>,
}

impl GwTree {
    /// Breadth-first generation with `Bin(2^d, β)` offspring over the dyadic sub-cubes.
    pub fn sample<R: Rng + ?Sized>(beta: f64, dim: usize, depth_cap: u32, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        check_beta(beta)?;
        let mut levels = vec![vec![[0u32; MAX_DIM]]];
        let mut total = 1usize;
        for _ in 0..depth_cap {
            let parents = levels.last().expect("root level present");
            let mut children = Vec::new();
            for k in parents {
                for e in 0..(1u32 << dim) {
                    if rng.gen::<f64>() < beta {
                        let mut child = [0u32; MAX_DIM];
                        for i in 0..dim {
                            child[i] = 2 * k[i] + ((e >> i) & 1);
                        }
                        children.push(child);
                    }
                }
            }
            total += children.len();
            if total > MAX_TREE_NODES {
                return Err(Error::Config(format!(
                    "tree exceeded {MAX_TREE_NODES} nodes; lower the depth cap or beta"
                )));
            }
            if children.is_empty() {
                break;
            }
            children.sort_unstable_by_key(|k| (k[1], k[0]));
            levels.push(children);
        }
        Ok(GwTree { dim, depth_cap, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    /// Active translations at depth `j` (empty past the last generation).
    pub fn nodes_at(&self, j: u32) -> &[[u32; MAX_DIM]] {
        self.levels.get(j as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of generations present, including the root.
    pub fn height(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, j: u32, k: [u32; MAX_DIM]) -> bool {
        self.nodes_at(j).binary_search_by_key(&(k[1], k[0]), |n| (n[1], n[0])).is_ok()
    }

    /// True when the tree has no nodes at depth `depth_cap`.
    pub fn is_extinct(&self) -> bool {
        self.height() <= self.depth_cap
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("wavelet density beta must lie in [0, 1], got {beta}")));
    }
    Ok(())
}

/// Whether a Galton-Watson process with `Bin(2^d, β)` offspring still has
/// members at generation `depth`.
///
/// Generation sizes are drawn directly as binomials, which is the same law as
/// [`GwTree::sample`] without storing nodes. Once a generation holds
/// `saturation` members the process is reported as surviving; the error of that
/// shortcut is the extinction probability from `saturation` independent roots.
pub fn survives_to_depth<R: Rng + ?Sized>(
    beta: f64,
    dim: usize,
    depth: u32,
    saturation: u64,
    rng: &mut R,
) -> Result<bool> {
    check_dim(dim)?;
    check_beta(beta)?;
    let mut size: u64 = 1;
    for _ in 0..depth {
        if size >= saturation {
            return Ok(true);
        }
        let trials = size << dim;
        size = Binomial::new(trials, beta)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(rng);
        if size == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The p-exponential law with density proportional to `exp(−|x|^p / κ)`.
#[derive(Debug, Clone, Copy)]
pub struct PExponential {
    p: f64,
    kappa: f64,
    gamma: Gamma<f64>,
}

impl PExponential {
    pub fn new(p: f64, kappa: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("p must lie in [1, inf), got {p}")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
        }
        let gamma = Gamma::new(1.0 / p, 1.0).map_err(|e| Error::Config(e.to_string()))?;
        Ok(PExponential { p, kappa, gamma })
    }

    /// `E[X²] = κ^{2/p} Γ(3/p) / Γ(1/p)`, evaluated by the caller's gamma function.
    pub fn second_moment_with(&self, gamma_fn: impl Fn(f64) -> f64) -> f64 {
        self.kappa.powf(2.0 / self.p) * gamma_fn(3.0 / self.p) / gamma_fn(1.0 / self.p)
    }
}

impl Distribution<f64> for PExponential {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // |X|^p / κ ~ Gamma(1/p, 1), sign independent and fair.
        let g = self.gamma.sample(rng);
        let magnitude = (self.kappa * g).powf(1.0 / self.p);
        if rng.gen::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// Draw one p-exponential variate.
pub fn sample_p_exponential<R: Rng + ?Sized>(p: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    Ok(PExponential::new(p, kappa)?.sample(rng))
}

/// Hyper-parameters of a Besov random tree prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    pub dim: usize,
    /// Smoothness `s`.
    pub s: f64,
    /// Integrability `p`.
    pub p: f64,
    /// Wavelet density `β`.
    pub beta: f64,
    /// Scale `κ` of the p-exponential coefficients.
    pub kappa: f64,
}

impl PriorParams {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        check_beta(self.beta)?;
        PExponential::new(self.p, self.kappa)?;
        if !(self.s > 0.0) || self.s * self.p <= self.dim as f64 {
            return Err(Error::Config(format!(
                "prior requires s > 0 and s·p > d (s = {}, p = {}, d = {})",
                self.s, self.p, self.dim
            )));
        }
        Ok(())
    }

    /// Scale weight `η_j = 2^{−j(s + d/2 − d/p)}`.
    pub fn eta(&self, j: u32) -> f64 {
        let d = self.dim as f64;
        2f64.powf(-(j as f64) * (self.s + d / 2.0 - d / self.p))
    }

    /// Expected number of active cubes at depth `j`, `(2^d β)^j`.
    pub fn mean_nodes_at(&self, j: u32) -> f64 {
        ((1u32 << self.dim) as f64 * self.beta).powi(j as i32)
    }

    /// `E‖b_{T,N}‖²_{L²}` given `E[X²]`: `E[X²]·(2^d + Σ_{j=1..N} (2^dβ)^j (2^d−1) η_j²)`.
    pub fn expected_squared_norm(&self, truncation: u32, second_moment: f64) -> f64 {
        let two_d = (1u32 << self.dim) as f64;
        let tail: f64 = (1..=truncation)
            .map(|j| self.mean_nodes_at(j) * (two_d - 1.0) * self.eta(j).powi(2))
            .sum();
        second_moment * (two_d + tail)
    }
}

/// One prior draw `ω = (X, T)`, stored up to its depth cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSample {
    params: PriorParams,
    tree: GwTree,
    // coefficients[j] holds |L_j| values per node of tree.nodes_at(j), node-major
    coefficients: Vec<Vec<f64>>,
}

impl PriorSample {
    /// Draws the tree, then one coefficient per active `(j, k, l)`.
    pub fn draw<R: Rng + ?Sized>(params: &PriorParams, depth_cap: u32, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let tree = GwTree::sample(params.beta, params.dim, depth_cap, rng)?;
        let law = PExponential::new(params.p, params.kappa)?;
        let coefficients = (0..tree.height())
            .map(|j| {
                let per_node = l_set(j, params.dim).len();
                (0..tree.nodes_at(j).len() * per_node).map(|_| law.sample(rng)).collect()
            })
            .collect();
        Ok(PriorSample { params: *params, tree, coefficients })
    }

    /// Builds a sample from explicit parts; `coefficients[j]` must hold
    /// `|L_j|` values per node at depth `j`.
    pub fn from_parts(params: PriorParams, tree: GwTree, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if coefficients.len() != tree.height() as usize {
            return Err(Error::Validation("one coefficient block per tree level expected".into()));
        }
        for (j, block) in coefficients.iter().enumerate() {
            let want = tree.nodes_at(j as u32).len() * l_set(j as u32, params.dim).len();
            if block.len() != want {
                return Err(Error::Validation(format!(
                    "level {j}: expected {want} coefficients, got {}",
                    block.len()
                )));
            }
        }
        Ok(PriorSample { params, tree, coefficients })
    }

    pub fn params(&self) -> &PriorParams {
        &self.params
    }

    pub fn tree(&self) -> &GwTree {
        &self.tree
    }

    pub fn depth_cap(&self) -> u32 {
        self.tree.depth_cap
    }

    pub fn coefficient_count(&self) -> usize {
        self.coefficients.iter().map(Vec::len).sum()
    }

    /// Number of coefficients at scale `j`.
    pub fn count_at(&self, j: u32) -> usize {
        self.coefficients.get(j as usize).map(Vec::len).unwrap_or(0)
    }

    /// `(index, X)` pairs with scale `≤ truncation`.
    pub fn coefficients(&self, truncation: u32) -> impl Iterator<Item = (BasisIndex, f64)> + '_ {
        let dim = self.params.dim;
        self.coefficients
            .iter()
            .enumerate()
            .take(truncation as usize + 1)
            .flat_map(move |(j, block)| {
                let j = j as u32;
                let ls: Vec<u8> = l_set(j, dim).collect();
                let per_node = ls.len();
                self.tree
                    .nodes_at(j)
                    .iter()
                    .enumerate()
                    .flat_map(move |(n, k)| {
                        let ls = ls.clone();
                        ls.into_iter()
                            .enumerate()
                            .map(move |(i, l)| (BasisIndex::new(j, *k, l), block[n * per_node + i]))
                    })
            })
    }

    /// Mutable access to the coefficient block of scale `j`.
    pub fn coefficients_at_mut(&mut self, j: u32) -> Option<&mut [f64]> {
        self.coefficients.get_mut(j as usize).map(Vec::as_mut_slice)
    }

    /// `Σ_{j ≤ N} η_j² X²`, the squared `L²` norm of `b_{T,N}` by Parseval.
    pub fn parseval_norm_sq(&self, truncation: u32) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .take(truncation as usize + 1)
            .map(|(j, block)| self.params.eta(j as u32).powi(2) * block.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    fn check_truncation(&self, truncation: u32) -> Result<()> {
        if truncation > self.depth_cap() {
            return Err(Error::Truncation { requested: truncation, cap: self.depth_cap() });
        }
        Ok(())
    }

    /// `b_{T,N}` on an arbitrary dyadic tensor grid.
    pub fn synthesize_on(&self, truncation: u32, family: &WaveletFamily, grid: &DyadicGrid) -> Result<Vec<f64>> {
        self.check_truncation(truncation)?;
        let mut out = vec![0.0; grid.len()];
        self.accumulate_scales(0..truncation + 1, family, grid, &mut out)?;
        Ok(out)
    }

    /// Adds the terms of scales `scales` to `out`, so that partial sums for
    /// increasing truncations can be built incrementally.
    pub fn accumulate_scales(
        &self,
        scales: std::ops::Range<u32>,
        family: &WaveletFamily,
        grid: &DyadicGrid,
        out: &mut [f64],
    ) -> Result<()> {
        if scales.end > 0 {
            self.check_truncation(scales.end - 1)?;
        }
        if grid.dim != self.params.dim || out.len() != grid.len() {
            return Err(Error::Validation(format!(
                "grid of dimension {} with {} points does not match a {}D prior and {} outputs",
                grid.dim,
                grid.len(),
                self.params.dim,
                out.len()
            )));
        }
        let dim = self.params.dim;
        let mut scratch = ProfileScratch::default();
        // [φ, ψ] profiles along each axis for the current node
        let mut node_profiles: [[Vec<(usize, f64)>; 2]; MAX_DIM] = Default::default();
        for j in scales {
            let Some(block) = self.coefficients.get(j as usize) else { break };
            family.check_resolution(j, grid.axis.level)?;
            let eta = self.params.eta(j);
            let norm = 2f64.powf(dim as f64 * j as f64 / 2.0);
            let ls: Vec<u8> = l_set(j, dim).collect();
            for (n, k) in self.tree.nodes_at(j).iter().enumerate() {
                for i in 0..dim {
                    for l in 0..2u8 {
                        family.periodic_profile(j, k[i] as i64, l, &grid.axis, &mut scratch.axes[0]);
                        std::mem::swap(&mut node_profiles[i][l as usize], &mut scratch.axes[0]);
                    }
                }
                for (li, &l) in ls.iter().enumerate() {
                    let x = block[n * ls.len() + li];
                    if x == 0.0 {
                        continue;
                    }
                    let p0 = &node_profiles[0][(l & 1) as usize];
                    let p1 = &node_profiles[1][((l >> 1) & 1) as usize];
                    add_tensor(dim, grid.axis.count, [p0, p1], eta * x * norm, out);
                }
            }
        }
        Ok(())
    }

    /// `b_{T,N}` at the `2^{dG}` points of the full level-`G` torus grid.
    pub fn synthesize_field(&self, truncation: u32, family: &WaveletFamily, grid_level: u32) -> Result<Vec<f64>> {
        self.synthesize_on(truncation, family, &DyadicGrid::full(self.params.dim, grid_level)?)
    }

    /// `b_{T,N}` at the element midpoints of the uniform mesh of level `mesh_level`.
    pub fn synthesize_midpoints(&self, truncation: u32, family: &WaveletFamily, mesh_level: u32) -> Result<Vec<f64>> {
        self.synthesize_on(
            truncation,
            family,
            &DyadicGrid::new(self.params.dim, DyadicAxis::midpoints(mesh_level))?,
        )
    }
}
