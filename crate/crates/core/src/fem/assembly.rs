//! P1 element integrals and global assembly of the elasticity, heat and damage systems.

use std::sync::Arc;

use rayon::prelude::*;

use super::quadrature::{MIDPOINT, SEVEN_POINT, VERTEX};
use super::solver::{cholesky, pcg, SolveStats, SolverMethod, SolverOptions, SymbolicCache};
use super::sparse::{CsrMatrix, Pattern};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::physics::{MaterialParams, Sym2};

/// Per-triangle area and barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeom {
    pub area: f64,
    pub grad: [[f64; 2]; 3],
}

impl ElementGeom {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let area = crate::mesh::signed_area(v[0], v[1], v[2]);
        let s = 1.0 / (2.0 * area);
        let mut grad = [[0.0; 2]; 3];
        for (k, g) in grad.iter_mut().enumerate() {
            let (p, q) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            *g = [(p[1] - q[1]) * s, (q[0] - p[0]) * s];
        }
        Self { area, grad }
    }
}

/// Degradation factor at the three midpoint-rule points of every triangle.
pub type QuadValues = Vec<[f64; 3]>;

/// Mesh plus cached geometry and sparsity patterns for scalar and vector P1 spaces.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Arc<Mesh>,
    geom: Vec<ElementGeom>,
    scalar: Pattern,
    vector: Pattern,
}

/// Constrained linear system. The matrix and right-hand side already have the
/// Dirichlet rows and columns eliminated.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub fixed: Vec<(usize, f64)>,
}

impl LinearSystem {
    pub fn new(mut matrix: CsrMatrix, mut rhs: Vec<f64>, fixed: Vec<(usize, f64)>) -> Self {
        matrix.apply_dirichlet(&mut rhs, &fixed);
        Self { matrix, rhs, fixed }
    }

    /// Solves in place, using `x` as the initial guess. Constrained entries
    /// come out exactly at their prescribed values.
    pub fn solve(&self, x: &mut [f64], opts: &SolverOptions) -> Result<SolveStats> {
        self.solve_cached(x, opts, None)
    }

    /// As [`LinearSystem::solve`], reusing a symbolic factorization across calls.
    pub fn solve_cached(&self, x: &mut [f64], opts: &SolverOptions, cache: Option<&SymbolicCache>) -> Result<SolveStats> {
        for &(j, v) in &self.fixed {
            x[j] = v;
        }
        let stats = match opts.method {
            SolverMethod::Cg => pcg(&self.matrix, &self.rhs, x, opts)?,
            SolverMethod::Cholesky => cholesky(&self.matrix, &self.rhs, x, opts, cache)?,
        };
        for &(j, v) in &self.fixed {
            x[j] = v;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Consistency("solve produced non-finite values".into()));
        }
        Ok(stats)
    }
}

impl FemSpace {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let geom = (0..mesh.num_triangles()).map(|t| ElementGeom::new(mesh.vertices(t))).collect();
        let scalar = Pattern::new(&mesh, 1);
        let vector = Pattern::new(&mesh, 2);
        Self { mesh, geom, scalar, vector }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn geom(&self, t: usize) -> &ElementGeom {
        &self.geom[t]
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn num_triangles(&self) -> usize {
        self.mesh.num_triangles()
    }

    /// Constant gradient of a scalar P1 field on triangle `t`.
    pub fn gradient(&self, t: usize, f: &[f64]) -> [f64; 2] {
        let tri = self.mesh.triangles()[t];
        let g = &self.geom[t].grad;
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += f[tri[k]] * g[k][0];
            out[1] += f[tri[k]] * g[k][1];
        }
        out
    }

    /// Displacement gradient `[[∂₁u₁, ∂₂u₁], [∂₁u₂, ∂₂u₂]]` on triangle `t`.
    pub fn displacement_gradient(&self, t: usize, u: &[f64]) -> [[f64; 2]; 2] {
        let tri = self.mesh.triangles()[t];
        let g = &self.geom[t].grad;
        let mut out = [[0.0; 2]; 2];
        for k in 0..3 {
            for c in 0..2 {
                let uc = u[2 * tri[k] + c];
                out[c][0] += uc * g[k][0];
                out[c][1] += uc * g[k][1];
            }
        }
        out
    }

    pub fn strain(&self, t: usize, u: &[f64]) -> Sym2 {
        Sym2::from_gradient(self.displacement_gradient(t, u))
    }

    pub fn divergence(&self, t: usize, u: &[f64]) -> f64 {
        let g = self.displacement_gradient(t, u);
        g[0][0] + g[1][1]
    }

    /// Value of a scalar P1 field at barycentric point `l` of triangle `t`.
    pub fn interpolate(&self, t: usize, f: &[f64], l: [f64; 3]) -> f64 {
        let tri = self.mesh.triangles()[t];
        l[0] * f[tri[0]] + l[1] * f[tri[1]] + l[2] * f[tri[2]]
    }

    /// `g(z)` at the vertices of every triangle.
    pub fn quad_values(&self, z: &[f64], g: impl Fn(f64) -> f64) -> QuadValues {
        self.mesh
            .triangles()
            .iter()
            .map(|tri| [g(z[tri[0]]), g(z[tri[1]]), g(z[tri[2]])])
            .collect()
    }

    /// Mean of a vertex field over its triangle (vertex rule).
    pub fn mean(values: &[f64; 3]) -> f64 {
        (values[0] + values[1] + values[2]) / 3.0
    }

    fn assemble(&self, pattern: &Pattern, local: impl Fn(usize, &mut [f64]) + Sync) -> CsrMatrix {
        let nl = 3 * pattern.block();
        let ll = nl * nl;
        let mut buf = vec![0.0; self.num_triangles() * ll];
        buf.par_chunks_mut(ll).enumerate().for_each(|(t, c)| local(t, c));
        let mut m = pattern.zero_matrix();
        for t in 0..self.num_triangles() {
            pattern.scatter(&mut m, t, &buf[t * ll..(t + 1) * ll]);
        }
        m
    }

    /// `∫ c φᵢ φⱼ` with `c` a nodal P1 coefficient (1 if absent).
    pub fn mass(&self, coef: Option<&[f64]>) -> CsrMatrix {
        self.assemble(&self.scalar, |t, m| {
            let area = self.geom[t].area;
            for (l, w) in MIDPOINT.points.iter().zip(MIDPOINT.weights) {
                let c = coef.map_or(1.0, |c| self.interpolate(t, c, *l));
                let s = area * w * c;
                for i in 0..3 {
                    for j in 0..3 {
                        m[3 * i + j] += s * l[i] * l[j];
                    }
                }
            }
        })
    }

    /// `∫ g ∇φᵢ·∇φⱼ` with `g` given at quadrature points (1 if absent).
    pub fn stiffness(&self, g: Option<&QuadValues>) -> CsrMatrix {
        self.assemble(&self.scalar, |t, m| {
            let ge = &self.geom[t];
            let s = ge.area * g.map_or(1.0, |g| Self::mean(&g[t]));
            for i in 0..3 {
                for j in 0..3 {
                    m[3 * i + j] = s * (ge.grad[i][0] * ge.grad[j][0] + ge.grad[i][1] * ge.grad[j][1]);
                }
            }
        })
    }

    /// `∫ g σ[u]:e[v]` for plane strain.
    pub fn elasticity(&self, mat: &MaterialParams, g: Option<&QuadValues>) -> CsrMatrix {
        let (l, mu) = (mat.lambda, mat.mu);
        let d = [[l + 2.0 * mu, l, 0.0], [l, l + 2.0 * mu, 0.0], [0.0, 0.0, mu]];
        self.assemble(&self.vector, |t, m| {
            let ge = &self.geom[t];
            let s = ge.area * g.map_or(1.0, |g| Self::mean(&g[t]));
            // strain-displacement columns in Voigt order (e11, e22, 2e12)
            let mut b = [[0.0; 3]; 6];
            for k in 0..3 {
                let [gx, gy] = ge.grad[k];
                b[2 * k] = [gx, 0.0, gy];
                b[2 * k + 1] = [0.0, gy, gx];
            }
            for i in 0..6 {
                let mut db = [0.0; 3];
                for r in 0..3 {
                    db[r] = d[r][0] * b[i][0] + d[r][1] * b[i][1] + d[r][2] * b[i][2];
                }
                for j in 0..6 {
                    m[6 * i + j] = s * (b[j][0] * db[0] + b[j][1] * db[1] + b[j][2] * db[2]);
                }
            }
        })
    }

    /// `β ∫ g θ div v` for every vector test function (vertex rule).
    pub fn thermal_load(&self, beta: f64, g: Option<&QuadValues>, theta: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; 2 * self.num_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let ge = &self.geom[t];
            let mut s = 0.0;
            for (q, (l, w)) in VERTEX.points.iter().zip(VERTEX.weights).enumerate() {
                s += w * g.map_or(1.0, |g| g[t][q]) * self.interpolate(t, theta, *l);
            }
            s *= beta * ge.area;
            for k in 0..3 {
                rhs[2 * tri[k]] += s * ge.grad[k][0];
                rhs[2 * tri[k] + 1] += s * ge.grad[k][1];
            }
        }
        rhs
    }

    /// `∫ g div(w) ψᵢ` for every scalar test function (vertex rule, the transpose of
    /// [`FemSpace::thermal_load`]).
    pub fn divergence_load(&self, g: Option<&QuadValues>, w: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.num_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let s = self.geom[t].area * self.divergence(t, w);
            for (q, (l, wq)) in VERTEX.points.iter().zip(VERTEX.weights).enumerate() {
                let gq = g.map_or(1.0, |g| g[t][q]);
                for k in 0..3 {
                    rhs[tri[k]] += s * wq * gq * l[k];
                }
            }
        }
        rhs
    }

    /// `∫ f ψᵢ` for a smooth scalar function, seven-point rule.
    pub fn load_vector(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut rhs = vec![0.0; self.num_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let a = self.geom[t].area;
            for (x, w, l) in SEVEN_POINT.map(&self.mesh.vertices(t)) {
                let v = a * w * f(x);
                for k in 0..3 {
                    rhs[tri[k]] += v * l[k];
                }
            }
        }
        rhs
    }

    /// `∫ f·v` for a smooth vector function, seven-point rule.
    pub fn vector_load(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut rhs = vec![0.0; 2 * self.num_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let a = self.geom[t].area;
            for (x, w, l) in SEVEN_POINT.map(&self.mesh.vertices(t)) {
                let v = f(x);
                for k in 0..3 {
                    rhs[2 * tri[k]] += a * w * v[0] * l[k];
                    rhs[2 * tri[k] + 1] += a * w * v[1] * l[k];
                }
            }
        }
        rhs
    }

    /// Diagonal of the lumped mass matrix.
    pub fn lumped_mass(&self) -> Vec<f64> {
        self.mesh.nodal_areas()
    }

    /// Integral of a scalar P1 field.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| self.geom[t].area * (f[tri[0]] + f[tri[1]] + f[tri[2]]) / 3.0)
            .sum()
    }

    /// Area-weighted nodal average of per-triangle values.
    pub fn average_to_nodes(&self, per_triangle: &[f64]) -> Vec<f64> {
        let mut num = vec![0.0; self.num_nodes()];
        let mut den = vec![0.0; self.num_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let a = self.geom[t].area;
            for &v in tri {
                num[v] += a * per_triangle[t];
                den[v] += a;
            }
        }
        num.iter().zip(&den).map(|(n, d)| n / d).collect()
    }
}

/// System for `u^k`: `∫ g σ[u]:e[v] = β ∫ g θ div v` (thermal term only when `theta` is given).
pub fn assemble_elasticity(
    space: &FemSpace,
    g: Option<&QuadValues>,
    theta: Option<&[f64]>,
    mat: &MaterialParams,
    fixed: Vec<(usize, f64)>,
) -> Result<LinearSystem> {
    if fixed.is_empty() {
        return Err(Error::Solvability(
            "elasticity needs Dirichlet data on a boundary part of positive length".into(),
        ));
    }
    let k = space.elasticity(mat, g);
    let rhs = match theta {
        Some(th) if mat.beta != 0.0 => space.thermal_load(mat.beta, g, th),
        _ => vec![0.0; 2 * space.num_nodes()],
    };
    Ok(LinearSystem::new(k, rhs, fixed))
}

/// Inputs of one implicit Euler heat step.
pub struct HeatStep<'a> {
    pub theta_prev: &'a [f64],
    /// Displacement increment `u^k − u^{k−1}`.
    pub du: Option<&'a [f64]>,
    /// Degraded conductivity/coupling factor at quadrature points.
    pub g: Option<&'a QuadValues>,
    pub dt: f64,
    /// Extra nodal load vector (already integrated), for manufactured sources.
    pub source: Option<&'a [f64]>,
}

/// System for `θ^k`:
/// `(χ/Δt) M θ^k + κ₀ K_g θ^k = (χ/Δt) M θ^{k−1} − (Θ₀β/Δt) ∫ g div(Δu) ψ`.
pub fn assemble_heat(space: &FemSpace, step: &HeatStep<'_>, mat: &MaterialParams, fixed: Vec<(usize, f64)>) -> Result<LinearSystem> {
    if !(step.dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {}", step.dt)));
    }
    let c = mat.chi / step.dt;
    let mut a = space.mass(None);
    let mut rhs = a.mul(step.theta_prev);
    rhs.iter_mut().for_each(|r| *r *= c);
    a.values_mut().iter_mut().for_each(|v| *v *= c);
    let k = space.stiffness(step.g);
    for (av, kv) in a.values_mut().iter_mut().zip(k.values()) {
        *av += mat.kappa0 * kv;
    }
    if let Some(du) = step.du {
        let coupling = mat.heat_coupling() / step.dt;
        if coupling != 0.0 {
            let load = space.divergence_load(step.g, du);
            for (r, l) in rhs.iter_mut().zip(load) {
                *r -= coupling * l;
            }
        }
    }
    if let Some(s) = step.source {
        for (r, l) in rhs.iter_mut().zip(s) {
            *r += l;
        }
    }
    Ok(LinearSystem::new(a, rhs, fixed))
}

/// System for `z̃^k` with lumped zero-order terms (`mᵢ` the lumped mass, `Wᵢ` nodal):
/// `mᵢ(α/Δt + γ*/ε + Wᵢ) zᵢ + εγ* (K z)ᵢ = mᵢ(α/Δt · z^{k−1}ᵢ + Wᵢ)`.
/// On non-obtuse meshes the matrix is an M-matrix, so `0 ≤ z̃ ≤ 1`.
pub fn assemble_damage(space: &FemSpace, z_prev: &[f64], w: &[f64], dt: f64, mat: &MaterialParams) -> Result<LinearSystem> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if let Some((i, v)) = w.iter().enumerate().find(|(_, &v)| v < -1e-12 || !v.is_finite()) {
        return Err(Error::Consistency(format!("energy density {v:e} at node {i} is negative")));
    }
    let r = mat.alpha / dt;
    let react = r + mat.gamma_star / mat.eps;
    let m = space.lumped_mass();
    let mut rhs = Vec::with_capacity(m.len());
    let mut diag = Vec::with_capacity(m.len());
    for ((mi, wi), zi) in m.iter().zip(w).zip(z_prev) {
        let wi = wi.max(0.0);
        rhs.push(mi * (r * zi + wi));
        diag.push(mi * (react + wi));
    }
    let mut a = space.stiffness(None);
    let diff = mat.eps * mat.gamma_star;
    a.values_mut().iter_mut().for_each(|v| *v *= diff);
    a.add_diagonal(&diag);
    Ok(LinearSystem::new(a, rhs, Vec::new()))
}
