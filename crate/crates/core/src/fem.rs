//! Galerkin finite elements on uniform dyadic meshes of the unit interval and
//! square: P1 in 1D, Q1 in 2D, homogeneous Dirichlet boundary conditions.
//!
//! The diffusion coefficient is piecewise constant, sampled at element
//! midpoints. Unknowns are the interior nodes, numbered with `x` fastest.

use std::io::Write;

use crate::error::{Error, Result};
use crate::wavelet::{check_dim, MAX_DIM};

/// Q1 stiffness of the unit-coefficient Laplacian on a square (any size),
/// local nodes counter-clockwise from the lower-left corner.
const Q1_STIFFNESS: [[f64; 4]; 4] = [
    [4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0],
    [-2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0],
];
const Q1_CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

/// Uniform mesh of `2^level` cells per axis on `[0, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UniformMesh {
    dim: usize,
    level: u32,
}

impl UniformMesh {
    pub fn new(dim: usize, level: u32) -> Result<Self> {
        check_dim(dim)?;
        if level == 0 || level > 14 {
            return Err(Error::Validation(format!("mesh level must lie in 1..=14, got {level}")));
        }
        Ok(UniformMesh { dim, level })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_axis() as f64
    }

    pub fn cells_per_axis(&self) -> usize {
        1 << self.level
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells_per_axis() + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    pub fn element_count(&self) -> usize {
        self.cells_per_axis().pow(self.dim as u32)
    }

    /// Number of interior (free) nodes.
    pub fn unknowns(&self) -> usize {
        (self.cells_per_axis() - 1).pow(self.dim as u32)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let n = self.cells_per_axis();
        let np = self.nodes_per_axis();
        let mut rest = node;
        for _ in 0..self.dim {
            let i = rest % np;
            if i == 0 || i == n {
                return true;
            }
            rest /= np;
        }
        false
    }

    /// Element midpoint, indexed `e_0 + cells · e_1`.
    pub fn midpoint(&self, element: usize) -> [f64; MAX_DIM] {
        let n = self.cells_per_axis();
        let h = self.h();
        let mut x = [0.0; MAX_DIM];
        let mut rest = element;
        for xi in x.iter_mut().take(self.dim) {
            *xi = ((rest % n) as f64 + 0.5) * h;
            rest /= n;
        }
        x
    }

    pub fn node_coordinates(&self, node: usize) -> [f64; MAX_DIM] {
        let np = self.nodes_per_axis();
        let h = self.h();
        let mut x = [0.0; MAX_DIM];
        let mut rest = node;
        for xi in x.iter_mut().take(self.dim) {
            *xi = (rest % np) as f64 * h;
            rest /= np;
        }
        x
    }

    fn unknown_to_node(&self, u: usize) -> usize {
        let inner = self.cells_per_axis() - 1;
        let np = self.nodes_per_axis();
        match self.dim {
            1 => u + 1,
            _ => (u % inner + 1) + np * (u / inner + 1),
        }
    }
}

/// Piecewise-constant diffusion coefficient, one strictly positive value per element.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    mesh: UniformMesh,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn new(mesh: UniformMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.element_count() {
            return Err(Error::Validation(format!(
                "expected {} element values, got {}",
                mesh.element_count(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Numerical(format!("coefficient value {bad} is not positive and finite")));
        }
        Ok(CoefficientField { mesh, values })
    }

    /// `a_K = exp(b_K)` from log-coefficient values at element midpoints.
    pub fn from_log_values(mesh: UniformMesh, log_values: &[f64]) -> Result<Self> {
        Self::new(mesh, log_values.iter().map(|b| b.exp()).collect())
    }

    pub fn constant(mesh: UniformMesh, value: f64) -> Result<Self> {
        Self::new(mesh, vec![value; mesh.element_count()])
    }

    /// Samples `a` at element midpoints.
    pub fn from_fn(mesh: UniformMesh, a: impl Fn([f64; MAX_DIM]) -> f64) -> Result<Self> {
        Self::new(mesh, (0..mesh.element_count()).map(|e| a(mesh.midpoint(e))).collect())
    }

    pub fn mesh(&self) -> &UniformMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `a_K = exp(b(midpoint of K))` from log-field values on the full level-`grid_level` grid.
pub fn coefficient_from_field(field: &[f64], grid_level: u32, mesh: UniformMesh) -> Result<CoefficientField> {
    if grid_level < mesh.level() + 1 {
        return Err(Error::Validation(format!(
            "grid level {grid_level} cannot resolve midpoints of mesh level {}",
            mesh.level()
        )));
    }
    let side = 1usize << grid_level;
    if field.len() != side.pow(mesh.dim() as u32) {
        return Err(Error::Validation(format!(
            "field has {} values, expected {}",
            field.len(),
            side.pow(mesh.dim() as u32)
        )));
    }
    let stride = 1usize << (grid_level - mesh.level() - 1);
    let n = mesh.cells_per_axis();
    let values = (0..mesh.element_count())
        .map(|e| {
            let (ex, ey) = (e % n, e / n);
            let gx = (2 * ex + 1) * stride;
            let gy = if mesh.dim() == 1 { 0 } else { (2 * ey + 1) * stride };
            field[gx + side * gy].exp()
        })
        .collect();
    CoefficientField::new(mesh, values)
}

/// Right-hand side of `−∇·(a∇u) = f`.
pub enum Source<'a> {
    Constant(f64),
    /// Integrated by 2-point (per axis) Gauss quadrature; for verification problems.
    Function(&'a dyn Fn([f64; MAX_DIM]) -> f64),
}

/// Assembled stiffness matrix and load vector over the interior nodes.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    mesh: UniformMesh,
    // 1D: [sub, diag, super]; 2D: 9-point stencil, offset (di, dj) at (di+1) + 3(dj+1)
    stencil: Vec<[f64; 9]>,
    rhs: Vec<f64>,
}

const GAUSS2: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

impl StiffnessSystem {
    pub fn assemble(coefficient: &CoefficientField, source: &Source<'_>) -> Self {
        let mesh = *coefficient.mesh();
        match mesh.dim() {
            1 => Self::assemble_1d(coefficient, source),
            _ => Self::assemble_2d(coefficient, source),
        }
        .with_mesh(mesh)
    }

    fn with_mesh(mut self, mesh: UniformMesh) -> Self {
        self.mesh = mesh;
        self
    }

    fn assemble_1d(coefficient: &CoefficientField, source: &Source<'_>) -> Self {
        let mesh = *coefficient.mesh();
        let n = mesh.cells_per_axis();
        let h = mesh.h();
        let a = coefficient.values();
        let mut stencil = vec![[0.0; 9]; n - 1];
        let mut rhs = vec![0.0; n - 1];
        for u in 0..n - 1 {
            // interior node u+1 sits between elements u and u+1
            stencil[u][3] = -a[u] / h;
            stencil[u][4] = (a[u] + a[u + 1]) / h;
            stencil[u][5] = -a[u + 1] / h;
        }
        match source {
            Source::Constant(f) => rhs.iter_mut().for_each(|r| *r = f * h),
            Source::Function(f) => {
                for e in 0..n {
                    for g in GAUSS2 {
                        let fx = f([(e as f64 + g) * h, 0.0]) * h / 2.0;
                        // hats of the left node (e) and right node (e+1)
                        if e >= 1 {
                            rhs[e - 1] += fx * (1.0 - g);
                        }
                        if e + 1 <= n - 1 {
                            rhs[e] += fx * g;
                        }
                    }
                }
            }
        }
        StiffnessSystem { mesh, stencil, rhs }
    }

    fn assemble_2d(coefficient: &CoefficientField, source: &Source<'_>) -> Self {
        let mesh = *coefficient.mesh();
        let n = mesh.cells_per_axis();
        let inner = n - 1;
        let h = mesh.h();
        let a = coefficient.values();
        let mut stencil = vec![[0.0; 9]; inner * inner];
        let mut rhs = vec![0.0; inner * inner];
        let unknown = |i: usize, j: usize| -> Option<usize> {
            (i >= 1 && i < n && j >= 1 && j < n).then(|| (i - 1) + inner * (j - 1))
        };
        for ey in 0..n {
            for ex in 0..n {
                let ae = a[ex + n * ey];
                for (r, &(rx, ry)) in Q1_CORNERS.iter().enumerate() {
                    let Some(row) = unknown(ex + rx, ey + ry) else { continue };
                    for (c, &(cx, cy)) in Q1_CORNERS.iter().enumerate() {
                        if unknown(ex + cx, ey + cy).is_none() {
                            continue;
                        }
                        let di = cx as isize - rx as isize;
                        let dj = cy as isize - ry as isize;
                        stencil[row][((di + 1) + 3 * (dj + 1)) as usize] += ae * Q1_STIFFNESS[r][c];
                    }
                }
            }
        }
        match source {
            Source::Constant(f) => rhs.iter_mut().for_each(|r| *r = f * h * h),
            Source::Function(f) => {
                for ey in 0..n {
                    for ex in 0..n {
                        for gy in GAUSS2 {
                            for gx in GAUSS2 {
                                let x = [(ex as f64 + gx) * h, (ey as f64 + gy) * h];
                                let fx = f(x) * h * h / 4.0;
                                for &(cx, cy) in &Q1_CORNERS {
                                    let Some(row) = unknown(ex + cx, ey + cy) else { continue };
                                    let wx = if cx == 0 { 1.0 - gx } else { gx };
                                    let wy = if cy == 0 { 1.0 - gy } else { gy };
                                    rhs[row] += fx * wx * wy;
                                }
                            }
                        }
                    }
                }
            }
        }
        StiffnessSystem { mesh, stencil, rhs }
    }

    pub fn mesh(&self) -> &UniformMesh {
        &self.mesh
    }

    pub fn unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn neighbour(&self, u: usize, slot: usize) -> Option<usize> {
        let di = (slot % 3) as isize - 1;
        let dj = (slot / 3) as isize - 1;
        let inner = (self.mesh.cells_per_axis() - 1) as isize;
        let (i, j) = if self.mesh.dim() == 1 {
            if dj != 0 {
                return None;
            }
            (u as isize, 0)
        } else {
            ((u as isize) % inner, (u as isize) / inner)
        };
        let (ni, nj) = (i + di, j + dj);
        let rows = if self.mesh.dim() == 1 { 1 } else { inner };
        (ni >= 0 && ni < inner && nj >= 0 && nj < rows).then(|| (ni + inner * nj) as usize)
    }

    /// Matrix entry `A[row][col]` (zero off the stencil).
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        (0..9)
            .find(|&s| self.neighbour(row, s) == Some(col))
            .map(|s| self.stencil[row][s])
            .unwrap_or(0.0)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let inner = self.mesh.cells_per_axis() - 1;
        if self.mesh.dim() == 1 {
            for u in 0..inner {
                let st = &self.stencil[u];
                let mut acc = st[4] * x[u];
                if u > 0 {
                    acc += st[3] * x[u - 1];
                }
                if u + 1 < inner {
                    acc += st[5] * x[u + 1];
                }
                y[u] = acc;
            }
            return;
        }
        for j in 0..inner {
            for i in 0..inner {
                let u = i + inner * j;
                let st = &self.stencil[u];
                let mut acc = 0.0;
                for dj in 0..3 {
                    let nj = j + dj;
                    if nj == 0 || nj > inner {
                        continue;
                    }
                    let base = (nj - 1) * inner;
                    for di in 0..3 {
                        let ni = i + di;
                        if ni == 0 || ni > inner {
                            continue;
                        }
                        acc += st[di + 3 * dj] * x[base + ni - 1];
                    }
                }
                y[u] = acc;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.stencil.iter().map(|s| s[4]).collect()
    }
}

/// Linear solver selection for the assembled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tolerance: f64,
    /// Largest number of unknowns handled by banded Cholesky in 2D;
    /// above it, Jacobi-preconditioned conjugate gradients.
    pub direct_limit: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-10, direct_limit: 127 * 127, max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Tridiagonal,
    BandedCholesky,
    ConjugateGradient { iterations: usize },
}

/// Nodal values of a Galerkin solution, boundary included (and zero).
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    mesh: UniformMesh,
    values: Vec<f64>,
    method: SolverMethod,
}

/// Solves `−∇·(a∇u) = f` with constant `f` and `u = 0` on the boundary.
pub fn solve(coefficient: &CoefficientField, f: f64) -> Result<FemSolution> {
    solve_with(coefficient, &Source::Constant(f), &SolverOptions::default())
}

pub fn solve_with(coefficient: &CoefficientField, source: &Source<'_>, options: &SolverOptions) -> Result<FemSolution> {
    let system = StiffnessSystem::assemble(coefficient, source);
    let mesh = *coefficient.mesh();
    let (interior, method) = if mesh.dim() == 1 {
        (solve_tridiagonal(&system)?, SolverMethod::Tridiagonal)
    } else if system.unknowns() <= options.direct_limit {
        (solve_banded_cholesky(&system)?, SolverMethod::BandedCholesky)
    } else {
        let (x, iterations) = solve_pcg(&system, options)?;
        (x, SolverMethod::ConjugateGradient { iterations })
    };
    let mut values = vec![0.0; mesh.node_count()];
    for (u, v) in interior.into_iter().enumerate() {
        values[mesh.unknown_to_node(u)] = v;
    }
    Ok(FemSolution { mesh, values, method })
}

fn solve_tridiagonal(system: &StiffnessSystem) -> Result<Vec<f64>> {
    let n = system.unknowns();
    let st = &system.stencil;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { st[i][3] } else { 0.0 };
        let denom = st[i][4] - if i > 0 { lower * c[i - 1] } else { 0.0 };
        if !(denom > 0.0) {
            return Err(Error::Numerical(format!("tridiagonal pivot {denom} at row {i}")));
        }
        c[i] = if i + 1 < n { st[i][5] / denom } else { 0.0 };
        d[i] = (system.rhs[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

fn solve_banded_cholesky(system: &StiffnessSystem) -> Result<Vec<f64>> {
    let n = system.unknowns();
    let inner = system.mesh.cells_per_axis() - 1;
    let bw = inner + 1;
    let width = bw + 1;
    // row r stores columns r-bw..=r at positions 0..=bw
    let mut band = vec![0.0; n * width];
    for r in 0..n {
        for slot in 0..9 {
            if let Some(c) = system.neighbour(r, slot) {
                if c <= r {
                    band[r * width + (c + bw - r)] = system.stencil[r][slot];
                }
            }
        }
    }
    for r in 0..n {
        let first = r.saturating_sub(bw);
        for c in first..=r {
            let k0 = first.max(c.saturating_sub(bw));
            let mut s = band[r * width + (c + bw - r)];
            let row_r = &band[r * width + (k0 + bw - r)..r * width + (c + bw - r)];
            let row_c = &band[c * width + (k0 + bw - c)..c * width + bw];
            s -= row_r.iter().zip(row_c).map(|(x, y)| x * y).sum::<f64>();
            if c == r {
                if !(s > 0.0) {
                    return Err(Error::Numerical(format!("Cholesky pivot {s} at row {r}")));
                }
                band[r * width + bw] = s.sqrt();
            } else {
                band[r * width + (c + bw - r)] = s / band[c * width + bw];
            }
        }
    }
    let mut y = system.rhs.clone();
    for r in 0..n {
        let first = r.saturating_sub(bw);
        let mut s = y[r];
        for c in first..r {
            s -= band[r * width + (c + bw - r)] * y[c];
        }
        y[r] = s / band[r * width + bw];
    }
    for r in (0..n).rev() {
        let mut s = y[r];
        for c in r + 1..(r + bw + 1).min(n) {
            s -= band[c * width + (r + bw - c)] * y[c];
        }
        y[r] = s / band[r * width + bw];
    }
    Ok(y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_pcg(system: &StiffnessSystem, options: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    let n = system.unknowns();
    let inv_diag: Vec<f64> = system.diagonal().iter().map(|d| 1.0 / d).collect();
    let b = &system.rhs;
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=options.max_iterations {
        system.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!("CG breakdown at iteration {it} (pAp = {pap})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res <= options.tolerance {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = {
        system.apply(&x, &mut ap);
        let r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
        dot(&r, &r).sqrt() / b_norm
    };
    Err(Error::NonConvergence { iterations: options.max_iterations, residual: res })
}

impl FemSolution {
    pub fn mesh(&self) -> &UniformMesh {
        &self.mesh
    }

    /// Nodal values, `x` fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> SolverMethod {
        self.method
    }

    /// Scales all nodal values by `c`.
    pub fn scaled(&self, c: f64) -> FemSolution {
        FemSolution {
            mesh: self.mesh,
            values: self.values.iter().map(|v| c * v).collect(),
            method: self.method,
        }
    }

    /// Builds a solution from nodal values; boundary entries are forced to zero.
    pub fn from_nodal(mesh: UniformMesh, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::Validation(format!(
                "expected {} nodal values, got {}",
                mesh.node_count(),
                values.len()
            )));
        }
        for (node, v) in values.iter_mut().enumerate() {
            if mesh.is_boundary(node) {
                *v = 0.0;
            }
        }
        Ok(FemSolution { mesh, values, method: SolverMethod::Tridiagonal })
    }

    /// Energy functional `(∫ ∇u·∇u dx)^{1/2}`, integrated exactly per element.
    pub fn energy_norm(&self) -> f64 {
        let n = self.mesh.cells_per_axis();
        let u = &self.values;
        let sum = if self.mesh.dim() == 1 {
            let h = self.mesh.h();
            (0..n).map(|e| (u[e + 1] - u[e]).powi(2) / h).sum::<f64>()
        } else {
            let np = n + 1;
            let mut acc = 0.0;
            for ey in 0..n {
                for ex in 0..n {
                    let local: [f64; 4] = Q1_CORNERS.map(|(cx, cy)| u[(ex + cx) + np * (ey + cy)]);
                    for r in 0..4 {
                        for c in 0..4 {
                            acc += local[r] * Q1_STIFFNESS[r][c] * local[c];
                        }
                    }
                }
            }
            acc
        };
        sum.max(0.0).sqrt()
    }

    /// Spatial mean `∫ u dx`, exact for the piecewise (multi)linear interpolant.
    pub fn mean(&self) -> f64 {
        let n = self.mesh.cells_per_axis();
        let h = self.mesh.h();
        let u = &self.values;
        if self.mesh.dim() == 1 {
            (0..n).map(|e| 0.5 * (u[e] + u[e + 1])).sum::<f64>() * h
        } else {
            let np = n + 1;
            let mut acc = 0.0;
            for ey in 0..n {
                for ex in 0..n {
                    acc += Q1_CORNERS.iter().map(|&(cx, cy)| u[(ex + cx) + np * (ey + cy)]).sum::<f64>();
                }
            }
            acc * h * h / 4.0
        }
    }

    fn locate(&self, x: &[f64]) -> Result<([usize; MAX_DIM], [f64; MAX_DIM])> {
        if x.len() != self.mesh.dim() {
            return Err(Error::Validation(format!(
                "point of dimension {} on a {}D mesh",
                x.len(),
                self.mesh.dim()
            )));
        }
        let n = self.mesh.cells_per_axis();
        let mut cell = [0usize; MAX_DIM];
        let mut local = [0.0; MAX_DIM];
        for (i, &xi) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&xi) {
                return Err(Error::Validation(format!("point coordinate {xi} outside [0, 1]")));
            }
            let scaled = xi * n as f64;
            let c = (scaled.floor() as usize).min(n - 1);
            cell[i] = c;
            local[i] = scaled - c as f64;
        }
        Ok((cell, local))
    }

    /// Value of the piecewise (multi)linear interpolant at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let (cell, t) = self.locate(x)?;
        let u = &self.values;
        Ok(if self.mesh.dim() == 1 {
            (1.0 - t[0]) * u[cell[0]] + t[0] * u[cell[0] + 1]
        } else {
            let np = self.mesh.nodes_per_axis();
            let at = |i: usize, j: usize| u[(cell[0] + i) + np * (cell[1] + j)];
            (1.0 - t[0]) * (1.0 - t[1]) * at(0, 0)
                + t[0] * (1.0 - t[1]) * at(1, 0)
                + t[0] * t[1] * at(1, 1)
                + (1.0 - t[0]) * t[1] * at(0, 1)
        })
    }

    /// Gradient of the interpolant at `x` (one-sided on element faces).
    pub fn gradient(&self, x: &[f64]) -> Result<[f64; MAX_DIM]> {
        let (cell, t) = self.locate(x)?;
        let u = &self.values;
        let n = self.mesh.cells_per_axis() as f64;
        Ok(if self.mesh.dim() == 1 {
            [(u[cell[0] + 1] - u[cell[0]]) * n, 0.0]
        } else {
            let np = self.mesh.nodes_per_axis();
            let at = |i: usize, j: usize| u[(cell[0] + i) + np * (cell[1] + j)];
            [
                ((1.0 - t[1]) * (at(1, 0) - at(0, 0)) + t[1] * (at(1, 1) - at(0, 1))) * n,
                ((1.0 - t[0]) * (at(0, 1) - at(0, 0)) + t[0] * (at(1, 1) - at(1, 0))) * n,
            ]
        })
    }

    /// Interpolant values at a list of points.
    pub fn point_eval(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.iter().map(|p| self.eval(p)).collect()
    }

    /// `(‖u − u_h‖_{L²}, |u − u_h|_{H¹})` against an exact solution, by
    /// 3-point Gauss quadrature per axis on every element.
    pub fn error_norms(
        &self,
        u: impl Fn([f64; MAX_DIM]) -> f64,
        grad: impl Fn([f64; MAX_DIM]) -> [f64; MAX_DIM],
    ) -> Result<(f64, f64)> {
        const NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
        const WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        let n = self.mesh.cells_per_axis();
        let h = self.mesh.h();
        let dim = self.mesh.dim();
        let (mut l2, mut h1) = (0.0, 0.0);
        let ny = if dim == 1 { 1 } else { n };
        let qy = if dim == 1 { 1 } else { 3 };
        for ey in 0..ny {
            for ex in 0..n {
                for (qx, wx) in NODES.iter().zip(WEIGHTS) {
                    for j in 0..qy {
                        let p = [(ex as f64 + qx) * h, if dim == 1 { 0.0 } else { (ey as f64 + NODES[j]) * h }];
                        let w = wx * if dim == 1 { 1.0 } else { WEIGHTS[j] };
                        let x = &p[..dim];
                        let e = u(p) - self.eval(x)?;
                        let (g, gh) = (grad(p), self.gradient(x)?);
                        l2 += w * e * e;
                        h1 += w * (0..dim).map(|i| (g[i] - gh[i]).powi(2)).sum::<f64>();
                    }
                }
            }
        }
        let vol = h.powi(dim as i32);
        Ok(((l2 * vol).sqrt(), (h1 * vol).sqrt()))
    }

    /// CSV dump: a `# dim=.. level=..` comment, then `x[,y],u` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# dim={} level={}", self.mesh.dim(), self.mesh.level())?;
        writeln!(out, "{}", if self.mesh.dim() == 1 { "x,u" } else { "x,y,u" })?;
        for (node, v) in self.values.iter().enumerate() {
            let x = self.mesh.node_coordinates(node);
            if self.mesh.dim() == 1 {
                writeln!(out, "{},{}", x[0], v)?;
            } else {
                writeln!(out, "{},{},{}", x[0], x[1], v)?;
            }
        }
        Ok(())
    }
}
