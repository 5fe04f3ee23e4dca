//! Oracle checks and manufactured-solution convergence studies.

use std::sync::Arc;

use crate::analytic::{manufactured_solution, ManufacturedCase, ModeIField};
use crate::error::Result;
use crate::fem::quadrature::SEVEN_POINT;
use crate::fem::{assemble_damage, FemSpace, NodalField, SolverOptions};
use crate::mesh::{generate, DomainSpec, Mesh, Point, TagRule};
use crate::physics::{MaterialInput, MaterialParams};
use crate::steppers::{BoundarySpec, Model, Stepper, StepperOptions, ValueFn};

/// One scalar comparison against an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tol: f64,
}

impl Check {
    fn new(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        (self.value - self.expected).abs() <= self.tol
    }
}

/// Table 4 type material with the given coupling.
pub fn reference_material(delta: f64) -> Result<MaterialParams> {
    MaterialParams::from_input(&MaterialInput {
        young: 1.0,
        poisson: 0.3,
        a_l: 0.7,
        delta,
        gamma_star: 5.08,
        eps: 0.01,
        alpha: 0.001,
        lame_convention: Default::default(),
    })
}

/// Crack-tip field values at r = 1, θ = 0 for K_I = 5, E_Y = 1, ν_P = 0.3, v₀ = 0.05.
pub fn crack_tip_checks() -> Result<Vec<Check>> {
    let f = ModeIField::new(5.0, 1.0, 0.3, 0.05, [0.0, 0.0])?;
    Ok(vec![
        Check::new("mode I u1(r=1, θ=0)", f.displacement(1.0, 0.0)?[0], 2.074_499_9, 1e-6),
        Check::new("mode I u2(r=1, θ=0)", f.displacement(1.0, 0.0)?[1], 0.0, 0.0),
        Check::new("mode I div u(r=1, θ=0)", f.div_u(1.0, 0.0)?, 2.074_499_9, 1e-6),
        Check::new("mode I d/dt div u(r=1, θ=0)", f.ddt_div_u(1.0, 0.0)?, 0.051_862_5, 1e-6),
        Check::new("mode I d/dt div u(θ=π/3)", f.ddt_div_u(1.0, std::f64::consts::FRAC_PI_3)?, 0.0, 1e-15),
    ])
}

/// Square (−1, 1)² split into `n × n` cells with the whole boundary tagged `boundary`.
pub fn unit_square(n: usize) -> Result<Mesh> {
    generate(&DomainSpec::Square, 2.0 / n as f64, None)?.tag_boundary(&[TagRule::new("boundary", |_| true)])
}

/// The three element-level oracles of the assembly: the unit right triangle Laplacian
/// and the two spatially constant reductions of the damage system.
pub fn fem_checks() -> Result<Vec<Check>> {
    let tri = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])?;
    let k = FemSpace::new(Arc::new(tri)).stiffness(None).to_dense();
    let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    let stiff_err = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (k[i][j] - expect[i][j]).abs())
        .fold(0.0, f64::max);

    let mat = reference_material(0.5)?;
    let space = FemSpace::new(Arc::new(unit_square(4)?));
    let n = space.num_nodes();
    let dt = 1e-3;
    let opts = SolverOptions::default();
    let r = mat.alpha / dt;
    let react = r + mat.gamma_star / mat.eps;

    let c = 0.3;
    let mut z = vec![0.0; n];
    assemble_damage(&space, &vec![c; n], &vec![0.0; n], dt, &mat)?.solve(&mut z, &opts)?;
    let decay = c * r / react;
    let decay_err = z.iter().map(|v| (v - decay).abs()).fold(0.0, f64::max);

    let w = 250.0;
    assemble_damage(&space, &vec![0.0; n], &vec![w; n], dt, &mat)?.solve(&mut z, &opts)?;
    let growth = w / (react + w);
    let growth_err = z.iter().map(|v| (v - growth).abs()).fold(0.0, f64::max);

    Ok(vec![
        Check::new("unit triangle Laplacian, max entry error", stiff_err, 0.0, 1e-10),
        Check::new("damage decay from constant z, max error", decay_err, 0.0, 1e-10),
        Check::new("damage growth under constant W, max error", growth_err, 0.0, 1e-10),
    ])
}

/// L2 norm over the mesh of `f_h − f` with a quintic-exact rule.
pub fn l2_error(space: &FemSpace, values: &[f64], arity: usize, exact: impl Fn(Point) -> Vec<f64>) -> f64 {
    let mesh = space.mesh();
    let mut s = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let v = mesh.vertices(t);
        let area = space.geom(t).area;
        for (x, w, l) in SEVEN_POINT.map(&v) {
            let e = exact(x);
            for (c, ec) in e.iter().enumerate().take(arity) {
                let fh: f64 = (0..3).map(|a| l[a] * values[arity * tri[a] + c]).sum();
                s += area * w * (fh - ec).powi(2);
            }
        }
    }
    s.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub cells: Vec<usize>,
    pub err_u: Vec<f64>,
    pub err_theta: Vec<f64>,
}

fn orders(err: &[f64]) -> Vec<f64> {
    err.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

impl ConvergenceReport {
    /// Observed orders between successive halvings of h.
    pub fn orders_u(&self) -> Vec<f64> {
        orders(&self.err_u)
    }

    pub fn orders_theta(&self) -> Vec<f64> {
        orders(&self.err_theta)
    }
}

/// Runs the Biot stepper on the manufactured `case` for each `n × n` mesh in `cells`
/// and records the L2 errors of u and θ after `steps` steps of size `dt`.
pub fn convergence_study(case: ManufacturedCase, cells: &[usize], dt: f64, steps: usize) -> Result<ConvergenceReport> {
    let mat = reference_material(0.5)?;
    let ms = manufactured_solution(case, &mat, dt)?;
    let mut report = ConvergenceReport {
        cells: cells.to_vec(),
        err_u: Vec::new(),
        err_theta: Vec::new(),
    };
    for &n in cells {
        let mesh = Arc::new(unit_square(n)?);
        let space = Arc::new(FemSpace::new(mesh.clone()));
        let (u, th) = (ms.u.clone(), ms.theta.clone());
        let (u1, u2) = (u.clone(), u.clone());
        let comp = |f: Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>, c: usize| -> ValueFn { Arc::new(move |x, t| f(x, t)[c]) };
        let bc = BoundarySpec {
            displacement: vec![("boundary".into(), [Some(comp(u1, 0)), Some(comp(u2, 1))])],
            temperature: vec![("boundary".into(), {
                let th = th.clone();
                Arc::new(move |x, t| th(x, t))
            })],
        };
        let stepper = Stepper::new(space.clone(), mat.clone(), bc, Model::Biot, dt, StepperOptions::default())?.with_sources(ms.sources.clone());
        let z0 = NodalField::scalar_zeros(mesh.num_nodes());
        let th0 = NodalField::scalar_from_fn(&mesh, |p| th(p, 0.0));
        let mut s = stepper.initial_state(z0, th0)?;
        for _ in 0..steps {
            s = stepper.step(&s)?;
        }
        let t = s.t;
        report.err_u.push(l2_error(&space, s.u.values(), 2, |x| u(x, t).to_vec()));
        report.err_theta.push(l2_error(&space, s.theta.values(), 1, |x| vec![th(x, t)]));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_pass() {
        for c in crack_tip_checks().unwrap().into_iter().chain(fem_checks().unwrap()) {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn polynomial_case_is_reproduced() {
        let r = convergence_study(ManufacturedCase::Polynomial, &[2, 4], 0.1, 3).unwrap();
        for e in r.err_u.iter().chain(&r.err_theta) {
            assert!(*e < 1e-9, "{r:?}");
        }
    }
}
