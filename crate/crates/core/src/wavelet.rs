//! Periodized, tensorized Daubechies wavelet bases on the torus.
//!
//! The scaling function `φ` and wavelet `ψ` of order `M` are tabulated once on
//! the dyadic grid of spacing `2^-J` by the cascade algorithm: values at the
//! integers come from the eigenvector of the refinement matrix, and every finer
//! dyadic level follows from the two-scale relation
//! `φ(x) = √2 Σ_k h_k φ(2x − k)`. Evaluation at dyadic torus points is then a
//! table lookup, with no interpolation.
//!
//! Basis functions are indexed by `(j, k, l)` with `k ∈ K_j = {0..2^j}^d` and
//! `l ∈ {0,1}^d` stored as a bit mask (bit `i` selects `ψ` in coordinate `i`).
//! For `j ≥ 1` the all-scaling combination `l = 0` is excluded.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Largest tabulated Daubechies order.
pub const MAX_ORDER: usize = 10;

// Low-pass filters h_0..h_{2M-1}, normalized to sum √2 (minimum phase).
const DAUBECHIES: [&[f64]; MAX_ORDER] = [
    &[0.7071067811865475244, 0.7071067811865475244],
    &[0.48296291314453414337, 0.83651630373780790558, 0.22414386804201338103, -0.12940952255126038117],
    &[
        0.332670552950082616,
        0.80689150931109257649,
        0.4598775021184915701,
        -0.1350110200102545887,
        -0.085441273882026661693,
        0.035226291885709536603,
    ],
    &[
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ],
    &[
        0.16010239797419291448,
        0.60382926979718967054,
        0.72430852843777292773,
        0.13842814590132073151,
        -0.24229488706638203186,
        -0.032244869584638374648,
        0.077571493840045713523,
        -0.0062414902127982742742,
        -0.012580751999081999469,
        0.003335725285473771278,
    ],
    &[
        0.11154074335010946362,
        0.49462389039845308568,
        0.75113390802109535068,
        0.31525035170919762909,
        -0.22626469396543982008,
        -0.12976686756726193556,
        0.097501605587323049102,
        0.027522865530305728626,
        -0.031582039317486029565,
        0.00055384220116149613925,
        0.0047772575109455106396,
        -0.0010773010853084795649,
    ],
    &[
        0.07785205408500917902,
        0.39653931948191730654,
        0.72913209084623511992,
        0.46978228740519312247,
        -0.14390600392856497541,
        -0.22403618499387498264,
        0.071309219266830264751,
        0.080612609151083071913,
        -0.03802993693501441358,
        -0.016574541630666880654,
        0.012550998556099840613,
        0.00042957797292136652113,
        -0.0018016407040474909153,
        0.00035371379997452024845,
    ],
    &[
        0.054415842243104009955,
        0.31287159091429997066,
        0.67563073629728980681,
        0.58535468365420671277,
        -0.015829105256349305667,
        -0.28401554296154692652,
        0.00047248457391328277036,
        0.12874742662047845886,
        -0.01736930100180754617,
        -0.044088253930794751507,
        0.013981027917398281649,
        0.0087460940474057767164,
        -0.0048703529934515743104,
        -0.0003917403733769470463,
        0.00067544940645056936637,
        -0.00011747678412476953373,
    ],
    &[
        0.038077947363878346589,
        0.24383467461259035373,
        0.6048231236901111119,
        0.65728807805130053808,
        0.13319738582500757619,
        -0.29327378327917490881,
        -0.096840783222976460514,
        0.14854074933810638014,
        0.030725681479333379212,
        -0.067632829061329973676,
        0.00025094711483145195759,
        0.022361662123679097205,
        -0.0047232047577513972779,
        -0.0042815036824634298345,
        0.0018476468830562264766,
        0.00023038576352319596721,
        -0.00025196318894271013697,
        0.000039347320316271599481,
    ],
    &[
        0.026670057900555553587,
        0.18817680007769148902,
        0.52720118893172558648,
        0.68845903945360356574,
        0.28117234366057746075,
        -0.24984642432731537942,
        -0.1959462743773770435,
        0.12736934033579326008,
        0.09305736460357235116,
        -0.071394147166397087145,
        -0.029457536821875812858,
        0.03321267405934100174,
        0.0036065535669561696554,
        -0.010733175483330575044,
        0.0013953517470529011658,
        0.0019924052951850561172,
        -0.00068585669495971162656,
        -0.00011646685512928545095,
        0.000093588670320069591334,
        -0.000013264202894521244812,
    ],
];

const CASCADE_TOLERANCE: f64 = 1e-10;

/// Tabulated Daubechies scaling function and wavelet of a fixed order.
#[derive(Debug, Clone)]
pub struct WaveletFamily {
    order: usize,
    filter: Vec<f64>,
    eval_level: u32,
    // φ(n / 2^J) for n = 0..=(2M-1)·2^J
    phi: Vec<f64>,
    // ψ((1-M) + n / 2^J) for n = 0..=(2M-1)·2^J
    psi: Vec<f64>,
}

impl WaveletFamily {
    /// Tabulates the order-`order` Daubechies family at resolution `2^-eval_level`.
    pub fn new(order: usize, eval_level: u32) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Config(format!(
                "wavelet order must lie in 1..={MAX_ORDER}, got {order}"
            )));
        }
        if !(4..=20).contains(&eval_level) {
            return Err(Error::Config(format!(
                "table level must lie in 4..=20, got {eval_level}"
            )));
        }
        let filter = DAUBECHIES[order - 1].to_vec();
        let phi = cascade(&filter, eval_level)?;
        let psi = wavelet_from_scaling(&filter, &phi, eval_level);
        let family = WaveletFamily { order, filter, eval_level, phi, psi };

        let residual = family.refinement_residual();
        if residual > CASCADE_TOLERANCE {
            return Err(Error::Construction(format!(
                "refinement residual {residual:.3e} above {CASCADE_TOLERANCE:e}"
            )));
        }
        Ok(family)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn filter(&self) -> &[f64] {
        &self.filter
    }

    pub fn eval_level(&self) -> u32 {
        self.eval_level
    }

    pub fn phi_table(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi_table(&self) -> &[f64] {
        &self.psi
    }

    /// Closed support `[lo, hi]` of `φ` (`l = 0`) or `ψ` (`l = 1`).
    pub fn support(&self, l: u8) -> (i64, i64) {
        let m = self.order as i64;
        if l == 0 {
            (0, 2 * m - 1)
        } else {
            (1 - m, m)
        }
    }

    fn table(&self, l: u8) -> &[f64] {
        if l == 0 {
            &self.phi
        } else {
            &self.psi
        }
    }

    /// Value of `φ` (`l = 0`) or `ψ` (`l = 1`) at the dyadic point `numer / 2^level`.
    ///
    /// Returns `None` when `level` exceeds the table resolution.
    pub fn value_at(&self, l: u8, numer: i64, level: u32) -> Option<f64> {
        if level > self.eval_level {
            return None;
        }
        let (lo, hi) = self.support(l);
        let idx = (numer << (self.eval_level - level)) - (lo << self.eval_level);
        if idx < 0 || idx > (hi - lo) << self.eval_level {
            return Some(0.0);
        }
        Some(self.table(l)[idx as usize])
    }

    /// Largest deviation from `φ(x) = √2 Σ h_k φ(2x − k)` over all tabulated points.
    pub fn refinement_residual(&self) -> f64 {
        let len = self.phi.len() as i64;
        let unit = 1i64 << self.eval_level;
        let mut worst = 0.0f64;
        for idx in 0..len {
            let mut sum = 0.0;
            for (k, hk) in self.filter.iter().enumerate() {
                let t = 2 * idx - k as i64 * unit;
                if (0..len).contains(&t) {
                    sum += hk * self.phi[t as usize];
                }
            }
            worst = worst.max((self.phi[idx as usize] - std::f64::consts::SQRT_2 * sum).abs());
        }
        worst
    }

    /// Nonzero samples of the one-periodic univariate function
    /// `x ↦ Σ_n f_l(2^j (x − n) − k)` at the points of `axis`, without the
    /// `2^{j/2}` normalization. Entries are `(point index, value)`.
    pub(crate) fn periodic_profile(
        &self,
        j: u32,
        k: i64,
        l: u8,
        axis: &DyadicAxis,
        out: &mut Vec<(usize, f64)>,
    ) {
        out.clear();
        let table_level = self.eval_level as i64;
        let shift = j as i64 + table_level - axis.level as i64;
        debug_assert!(shift >= 0, "table resolution too coarse for this grid");
        let (lo, hi) = self.support(l);
        let table = self.table(l);
        let step = 1i64 << shift;
        let origin = (k + lo) << table_level;
        let q_lo = div_ceil(origin, step);
        let q_hi = ((k + hi) << table_level).div_euclid(step);
        let period = 1i64 << axis.level;
        let offset = axis.offset as i64;
        let stride = axis.stride as i64;
        for q in q_lo..=q_hi {
            let wrapped = q.rem_euclid(period) - offset;
            if wrapped < 0 || wrapped % stride != 0 {
                continue;
            }
            let a = (wrapped / stride) as usize;
            if a >= axis.count {
                continue;
            }
            let v = table[(q * step - origin) as usize];
            if v != 0.0 {
                out.push((a, v));
            }
        }
        // Coarse scales wrap around the torus more than once.
        if hi - lo > (1i64 << j) {
            out.sort_unstable_by_key(|e| e.0);
            out.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
        }
    }

    /// Checks that `grid` is fine enough to be served from the tables at scale `j`.
    pub(crate) fn check_resolution(&self, j: u32, grid_level: u32) -> Result<()> {
        if j + self.eval_level < grid_level {
            return Err(Error::Validation(format!(
                "scale {j} at grid level {grid_level} exceeds table resolution 2^-{}",
                self.eval_level
            )));
        }
        Ok(())
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Cascade tabulation of φ at all points n / 2^level of its support.
fn cascade(filter: &[f64], level: u32) -> Result<Vec<f64>> {
    let taps = filter.len();
    let span = taps - 1;
    let unit = 1usize << level;
    let mut phi = vec![0.0; span * unit + 1];
    let sqrt2 = std::f64::consts::SQRT_2;

    if taps == 2 {
        // Haar: φ = 1 on [0, 1), right-continuous at the jump.
        phi[0] = 1.0;
    } else {
        // Interior integers 1..=span-1; φ vanishes at both ends.
        let n = span - 1;
        let mut system = DMatrix::<f64>::zeros(n, n);
        for row in 0..n {
            for col in 0..n {
                let t = 2 * (row as i64 + 1) - (col as i64 + 1);
                if (0..taps as i64).contains(&t) {
                    system[(row, col)] = sqrt2 * filter[t as usize];
                }
            }
            system[(row, row)] -= 1.0;
        }
        let refinement = system.clone();
        // Replace one (redundant) equation by the partition of unity Σ φ(n) = 1.
        let mut rhs = DVector::<f64>::zeros(n);
        for col in 0..n {
            system[(n - 1, col)] = 1.0;
        }
        rhs[n - 1] = 1.0;
        let values = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Construction("singular refinement matrix".into()))?;
        let residual = (&refinement * &values).amax();
        if !residual.is_finite() || residual > CASCADE_TOLERANCE {
            return Err(Error::Construction(format!(
                "integer eigenvector residual {residual:.3e}"
            )));
        }
        for (i, v) in values.iter().enumerate() {
            phi[(i + 1) * unit] = *v;
        }
    }

    for lvl in 1..=level {
        let step = 1usize << (level - lvl);
        let count = span << lvl;
        for odd in (1..count).step_by(2) {
            let mut sum = 0.0;
            for (k, hk) in filter.iter().enumerate() {
                let t = 2 * (odd * step) as i64 - (k * unit) as i64;
                if t >= 0 && (t as usize) < phi.len() {
                    sum += hk * phi[t as usize];
                }
            }
            phi[odd * step] = sqrt2 * sum;
        }
    }
    Ok(phi)
}

/// ψ(x) = √2 Σ_k g_k φ(2x − k) with g_k = (−1)^k h_{1−k}, tabulated on [1−M, M].
fn wavelet_from_scaling(filter: &[f64], phi: &[f64], level: u32) -> Vec<f64> {
    let taps = filter.len() as i64;
    let order = taps / 2;
    let unit = 1i64 << level;
    let len = phi.len();
    let mut psi = vec![0.0; len];
    for (n, out) in psi.iter_mut().enumerate() {
        let mut sum = 0.0;
        for k in (2 - taps)..=1 {
            let g = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 } * filter[(1 - k) as usize];
            let t = 2 * n as i64 + (2 - 2 * order - k) * unit;
            if t >= 0 && (t as usize) < len {
                sum += g * phi[t as usize];
            }
        }
        *out = std::f64::consts::SQRT_2 * sum;
    }
    psi
}

/// One-dimensional dyadic point set `x_a = (offset + stride·a) / 2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicAxis {
    pub level: u32,
    pub offset: u64,
    pub stride: u64,
    pub count: usize,
}

impl DyadicAxis {
    /// All `2^level` points `a / 2^level`.
    pub fn full(level: u32) -> Self {
        DyadicAxis { level, offset: 0, stride: 1, count: 1 << level }
    }

    /// Midpoints of the `2^mesh_level` cells of a uniform mesh.
    pub fn midpoints(mesh_level: u32) -> Self {
        DyadicAxis { level: mesh_level + 1, offset: 1, stride: 2, count: 1 << mesh_level }
    }

    pub fn coordinate(&self, a: usize) -> f64 {
        (self.offset + self.stride * a as u64) as f64 / (1u64 << self.level) as f64
    }
}

/// Tensor grid `axis^dim`; flat index `a_0 + count · a_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicGrid {
    pub dim: usize,
    pub axis: DyadicAxis,
}

impl DyadicGrid {
    pub fn new(dim: usize, axis: DyadicAxis) -> Result<Self> {
        check_dim(dim)?;
        Ok(DyadicGrid { dim, axis })
    }

    pub fn full(dim: usize, level: u32) -> Result<Self> {
        Self::new(dim, DyadicAxis::full(level))
    }

    pub fn len(&self) -> usize {
        self.axis.count.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        let mut rest = flat;
        for xi in x.iter_mut().take(self.dim) {
            *xi = self.axis.coordinate(rest % self.axis.count);
            rest /= self.axis.count;
        }
        x
    }

    /// Quadrature weight of one point when the grid is a full dyadic grid.
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Config(format!("dimension must be 1 or 2, got {dim}")));
    }
    Ok(())
}

/// Wavelet index `(j, k, l)` of the periodized basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub j: u32,
    pub k: [u32; MAX_DIM],
    /// Bit `i` is `l_i`.
    pub l: u8,
}

impl BasisIndex {
    pub fn new(j: u32, k: [u32; MAX_DIM], l: u8) -> Self {
        BasisIndex { j, k, l }
    }

    pub fn l_component(&self, i: usize) -> u8 {
        (self.l >> i) & 1
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        check_dim(dim)?;
        if self.j > 30 {
            return Err(Error::Validation(format!("scale {} too large", self.j)));
        }
        let side = 1u64 << self.j;
        for (i, &ki) in self.k.iter().enumerate() {
            let bound = if i < dim { side } else { 1 };
            if ki as u64 >= bound {
                return Err(Error::Validation(format!(
                    "translation k_{i} = {ki} outside K_{}",
                    self.j
                )));
            }
        }
        if self.l >= 1 << dim {
            return Err(Error::Validation(format!("l = {:#b} outside {{0,1}}^{dim}", self.l)));
        }
        if self.j >= 1 && self.l == 0 {
            return Err(Error::Validation("l = 0 is only admissible at scale 0".into()));
        }
        Ok(())
    }
}

/// Admissible `l` masks at scale `j`: all of `{0,1}^d` at `j = 0`, nonzero ones after.
pub fn l_set(j: u32, dim: usize) -> std::ops::Range<u8> {
    let first = if j == 0 { 0 } else { 1 };
    first..(1u8 << dim)
}

/// All basis indices up to and including scale `max_scale`, scale by scale.
pub fn basis_indices(dim: usize, max_scale: u32) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for j in 0..=max_scale {
        let side = 1u32 << j;
        let cubes = if dim == 1 { side } else { side * side };
        for flat in 0..cubes {
            let k = if dim == 1 { [flat, 0] } else { [flat % side, flat / side] };
            for l in l_set(j, dim) {
                out.push(BasisIndex::new(j, k, l));
            }
        }
    }
    out
}

/// Scratch buffers for tensor-product accumulation.
#[derive(Debug, Default)]
pub(crate) struct ProfileScratch {
    pub(crate) axes: [Vec<(usize, f64)>; MAX_DIM],
}

/// Adds `scale · Π_i profile_i` over the tensor grid into `out`.
pub(crate) fn add_tensor(
    dim: usize,
    count: usize,
    profiles: [&[(usize, f64)]; MAX_DIM],
    scale: f64,
    out: &mut [f64],
) {
    if dim == 1 {
        for &(a, v) in profiles[0] {
            out[a] += scale * v;
        }
    } else {
        for &(b, vy) in profiles[1] {
            let row = &mut out[b * count..(b + 1) * count];
            let s = scale * vy;
            for &(a, vx) in profiles[0] {
                row[a] += s * vx;
            }
        }
    }
}

/// Values of the periodized basis function `ψ^l_{j,k}` on `grid`.
pub fn eval_on_grid(
    family: &WaveletFamily,
    index: &BasisIndex,
    grid: &DyadicGrid,
) -> Result<Vec<f64>> {
    index.validate(grid.dim)?;
    family.check_resolution(index.j, grid.axis.level)?;
    let mut out = vec![0.0; grid.len()];
    let mut scratch = ProfileScratch::default();
    for i in 0..grid.dim {
        let (axis_k, axis_l) = (index.k[i] as i64, index.l_component(i));
        family.periodic_profile(index.j, axis_k, axis_l, &grid.axis, &mut scratch.axes[i]);
    }
    let scale = 2f64.powf(grid.dim as f64 * index.j as f64 / 2.0);
    let [p0, p1] = &scratch.axes;
    add_tensor(grid.dim, grid.axis.count, [p0, p1], scale, &mut out);
    Ok(out)
}

/// Values of `ψ^l_{j,k}` at the `2^{dG}` points of the full level-`G` torus grid.
pub fn eval_periodized(
    family: &WaveletFamily,
    dim: usize,
    index: &BasisIndex,
    grid_level: u32,
) -> Result<Vec<f64>> {
    eval_on_grid(family, index, &DyadicGrid::full(dim, grid_level)?)
}

/// Besov `B^s_{p,p}` norm of a finite wavelet coefficient sequence.
pub fn besov_norm<'a, I>(coefficients: I, dim: usize, s: f64, p: f64) -> Result<f64>
where
    I: IntoIterator<Item = (&'a BasisIndex, &'a f64)>,
{
    check_dim(dim)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Validation(format!("p must lie in [1, inf), got {p}")));
    }
    if !s.is_finite() {
        return Err(Error::Validation(format!("s must be finite, got {s}")));
    }
    let d = dim as f64;
    let exponent = p * (s + d / 2.0 - d / p);
    let sum: f64 = coefficients
        .into_iter()
        .map(|(idx, c)| 2f64.powf(idx.j as f64 * exponent) * c.abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn filters_are_orthonormal() {
        for m in 1..=MAX_ORDER {
            let h = DAUBECHIES[m - 1];
            assert_eq!(h.len(), 2 * m);
            let sum: f64 = h.iter().sum();
            assert_abs_diff_eq!(sum, std::f64::consts::SQRT_2, epsilon = 1e-12);
            for shift in 0..m {
                let dot: f64 = (0..h.len() - 2 * shift).map(|i| h[i] * h[i + 2 * shift]).sum();
                let expected = if shift == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn haar_closed_form() {
        let fam = WaveletFamily::new(1, 6).unwrap();
        let unit = 1usize << 6;
        for n in 0..unit {
            assert_abs_diff_eq!(fam.phi_table()[n], 1.0, epsilon = 1e-15);
            let expected = if n < unit / 2 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(fam.psi_table()[n], expected, epsilon = 1e-15);
        }
        assert_eq!(fam.phi_table()[unit], 0.0);
    }

    #[test]
    fn db2_integer_values() {
        // φ(1) = (1+√3)/2, φ(2) = (1−√3)/2 solve the 2×2 refinement eigenproblem exactly.
        let fam = WaveletFamily::new(2, 8).unwrap();
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(fam.value_at(0, 1, 0).unwrap(), (1.0 + s3) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fam.value_at(0, 2, 0).unwrap(), (1.0 - s3) / 2.0, epsilon = 1e-12);
        assert_eq!(fam.value_at(0, 0, 0).unwrap(), 0.0);
        assert_eq!(fam.value_at(0, 3, 0).unwrap(), 0.0);
    }

    #[test]
    fn refinement_residual_small_for_all_orders() {
        for m in 1..=MAX_ORDER {
            let fam = WaveletFamily::new(m, 8).unwrap();
            assert!(fam.refinement_residual() < 1e-10, "order {m}");
        }
    }

    #[test]
    fn psi_vanishes_at_support_ends() {
        for m in 2..=MAX_ORDER {
            let fam = WaveletFamily::new(m, 6).unwrap();
            let psi = fam.psi_table();
            assert_abs_diff_eq!(psi[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(psi[psi.len() - 1], 0.0, epsilon = 1e-12);
            let (lo, hi) = fam.support(1);
            assert_eq!((lo, hi), (1 - m as i64, m as i64));
            assert_eq!(fam.value_at(1, hi + 1, 0), Some(0.0));
        }
    }

    #[test]
    fn psi_has_vanishing_moments() {
        let fam = WaveletFamily::new(4, 12).unwrap();
        let (lo, _) = fam.support(1);
        let h = 1.0 / (1u64 << 12) as f64;
        for power in 0..4 {
            let moment: f64 = fam
                .psi_table()
                .iter()
                .enumerate()
                .map(|(n, v)| v * (lo as f64 + n as f64 * h).powi(power) * h)
                .sum();
            assert!(moment.abs() < 1e-6, "moment {power} = {moment}");
        }
    }

    #[test]
    fn haar_periodized_values() {
        let fam = WaveletFamily::new(1, 4).unwrap();
        let values = eval_periodized(&fam, 1, &BasisIndex::new(0, [0, 0], 1), 1).unwrap();
        assert_abs_diff_eq!(values[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(values[1], -1.0, epsilon = 1e-15);
        assert_eq!(values.len(), 2);
    }

    #[test]
    fn rejects_bad_index() {
        let fam = WaveletFamily::new(2, 6).unwrap();
        assert!(eval_periodized(&fam, 1, &BasisIndex::new(1, [2, 0], 1), 4).is_err());
        assert!(eval_periodized(&fam, 1, &BasisIndex::new(1, [0, 0], 0), 4).is_err());
        assert!(eval_periodized(&fam, 1, &BasisIndex::new(0, [0, 0], 2), 4).is_err());
        assert!(eval_periodized(&fam, 2, &BasisIndex::new(0, [0, 1], 3), 4).is_err());
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(matches!(WaveletFamily::new(0, 8), Err(Error::Config(_))));
        assert!(matches!(WaveletFamily::new(11, 8), Err(Error::Config(_))));
        assert!(matches!(WaveletFamily::new(3, 3), Err(Error::Config(_))));
    }

    #[test]
    fn basis_count_matches_dyadic_dimension() {
        for dim in 1..=2 {
            for n in 0..5 {
                assert_eq!(basis_indices(dim, n).len(), 1 << (dim as u32 * (n + 1)));
            }
        }
    }

    #[test]
    fn besov_norm_examples() {
        let empty: Vec<(BasisIndex, f64)> = vec![];
        assert_eq!(besov_norm(empty.iter().map(|(a, b)| (a, b)), 1, 1.0, 2.0).unwrap(), 0.0);

        let single = [(BasisIndex::new(0, [0, 0], 1), -2.5)];
        let v = besov_norm(single.iter().map(|(a, b)| (a, b)), 2, 3.0, 1.5).unwrap();
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-14);

        let two = [(BasisIndex::new(0, [0, 0], 1), 1.0), (BasisIndex::new(1, [1, 0], 1), 1.0)];
        let v = besov_norm(two.iter().map(|(a, b)| (a, b)), 1, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(v, 5f64.sqrt(), epsilon = 1e-14);

        assert!(besov_norm(two.iter().map(|(a, b)| (a, b)), 1, 1.0, 0.5).is_err());
    }

    #[test]
    fn midpoint_axis_coordinates() {
        let axis = DyadicAxis::midpoints(2);
        let xs: Vec<f64> = (0..axis.count).map(|a| axis.coordinate(a)).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
    }
}
