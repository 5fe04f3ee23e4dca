//! Semi-implicit time stepping for Biot thermoelasticity and the three phase-field models.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::nodal_energy_density;
use crate::error::{Error, Result};
use crate::fem::{assemble_damage, assemble_elasticity, assemble_heat, FemSpace, HeatStep, NodalField, SolverOptions, SymbolicCache};
use crate::mesh::Point;
use crate::physics::{Degradation, MaterialParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Quasi-static linear elasticity, no temperature or damage evolution.
    Elasticity,
    Biot,
    Fpfm,
    Tfpfm1,
    Tfpfm2,
}

impl Model {
    pub fn has_damage(self) -> bool {
        matches!(self, Model::Fpfm | Model::Tfpfm1 | Model::Tfpfm2)
    }

    pub fn has_heat(self) -> bool {
        matches!(self, Model::Biot | Model::Tfpfm1 | Model::Tfpfm2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Elasticity => "elasticity",
            Model::Biot => "biot",
            Model::Fpfm => "fpfm",
            Model::Tfpfm1 => "tfpfm1",
            Model::Tfpfm2 => "tfpfm2",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "elasticity" => Model::Elasticity,
            "biot" => Model::Biot,
            "fpfm" => Model::Fpfm,
            "tfpfm1" => Model::Tfpfm1,
            "tfpfm2" => Model::Tfpfm2,
            other => return Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        })
    }
}

/// Boundary value as a function of position and time.
pub type ValueFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
/// Body force as a function of position and time.
pub type VectorFn = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;

pub fn constant(v: f64) -> ValueFn {
    Arc::new(move |_, _| v)
}

/// Dirichlet data per boundary tag. Tags without an entry are traction-free
/// (displacement) or insulated (temperature). Where tagged edges meet, the
/// entry listed first decides the shared node.
#[derive(Clone, Default)]
pub struct BoundarySpec {
    /// `(tag, [u₁ value, u₂ value])`; `None` leaves that component free.
    pub displacement: Vec<(String, [Option<ValueFn>; 2])>,
    /// `(tag, θ value)`
    pub temperature: Vec<(String, ValueFn)>,
}

impl std::fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d: Vec<_> = self
            .displacement
            .iter()
            .map(|(t, c)| (t.as_str(), c[0].is_some(), c[1].is_some()))
            .collect();
        let th: Vec<_> = self.temperature.iter().map(|(t, _)| t.as_str()).collect();
        f.debug_struct("BoundarySpec")
            .field("displacement", &d)
            .field("temperature", &th)
            .finish()
    }
}

impl BoundarySpec {
    /// Checks every referenced tag against the mesh.
    pub fn validate(&self, space: &FemSpace) -> Result<()> {
        let mesh = space.mesh();
        for tag in self.displacement.iter().map(|(t, _)| t).chain(self.temperature.iter().map(|(t, _)| t)) {
            if mesh.tag_id(tag).is_none() {
                return Err(Error::Config(format!(
                    "boundary condition refers to tag '{tag}', which the mesh does not have (tags: {:?})",
                    mesh.tag_names()
                )));
            }
        }
        Ok(())
    }

    pub fn displacement_dofs(&self, space: &FemSpace, t: f64) -> Vec<(usize, f64)> {
        let mesh = space.mesh();
        let mut seen = vec![false; 2 * mesh.num_nodes()];
        let mut out = Vec::new();
        for (tag, comps) in &self.displacement {
            let Some(id) = mesh.tag_id(tag) else { continue };
            for n in mesh.nodes_with_tag(id) {
                for (c, f) in comps.iter().enumerate() {
                    if let Some(f) = f {
                        let dof = 2 * n + c;
                        if !seen[dof] {
                            seen[dof] = true;
                            out.push((dof, f(mesh.nodes()[n], t)));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn temperature_dofs(&self, space: &FemSpace, t: f64) -> Vec<(usize, f64)> {
        let mesh = space.mesh();
        let mut seen = vec![false; mesh.num_nodes()];
        let mut out = Vec::new();
        for (tag, f) in &self.temperature {
            let Some(id) = mesh.tag_id(tag) else { continue };
            for n in mesh.nodes_with_tag(id) {
                if !seen[n] {
                    seen[n] = true;
                    out.push((n, f(mesh.nodes()[n], t)));
                }
            }
        }
        out
    }

    /// True if the displacement data do not depend on time over `[t0, t1]`
    /// (sampled at both ends).
    pub fn displacement_held(&self, space: &FemSpace, t0: f64, t1: f64) -> bool {
        self.displacement_dofs(space, t0) == self.displacement_dofs(space, t1)
    }
}

/// Optional volume sources, used by manufactured-solution tests.
#[derive(Clone, Default)]
pub struct Sources {
    pub body_force: Option<VectorFn>,
    pub heat: Option<ValueFn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct StepperOptions {
    pub solver: SolverOptions,
    pub degradation: Degradation,
    /// Skip the heat solve and keep θ at its initial value.
    pub freeze_temperature: bool,
}


/// Per-step solver and projection diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub iterations_u: usize,
    pub iterations_z: usize,
    pub iterations_theta: usize,
    /// `max(0, max z̃ − 1, −min z̃)` before projection and clamping.
    pub overshoot: f64,
}

/// Current and previous fields. Temperatures are increments over Θ₀.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    pub u: NodalField,
    pub theta: NodalField,
    pub z: NodalField,
    pub u_prev: NodalField,
    pub theta_prev: NodalField,
    pub z_prev: NodalField,
    pub diagnostics: StepDiagnostics,
}

/// One model on one mesh with fixed material, boundary data and time step.
#[derive(Clone)]
pub struct Stepper {
    pub space: Arc<FemSpace>,
    pub mat: MaterialParams,
    pub bc: BoundarySpec,
    pub model: Model,
    pub dt: f64,
    pub options: StepperOptions,
    pub sources: Sources,
    /// Symbolic factorizations of the displacement, damage and heat systems.
    caches: [SymbolicCache; 3],
}

impl Stepper {
    pub fn new(space: Arc<FemSpace>, mat: MaterialParams, bc: BoundarySpec, model: Model, dt: f64, options: StepperOptions) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        mat.validate()?;
        bc.validate(&space)?;
        if bc.displacement_dofs(&space, 0.0).is_empty() {
            return Err(Error::Solvability("no displacement Dirichlet data on the mesh".into()));
        }
        Ok(Self {
            space,
            mat,
            bc,
            model,
            dt,
            options,
            sources: Sources::default(),
            caches: Default::default(),
        })
    }

    pub fn with_sources(mut self, sources: Sources) -> Self {
        self.sources = sources;
        self
    }

    fn stiffness_factor(&self, z: &[f64]) -> Option<crate::fem::QuadValues> {
        let deg = self.options.degradation;
        self.model.has_damage().then(|| self.space.quad_values(z, |z| deg.stiffness(z)))
    }

    fn thermal_factor(&self, z: &[f64]) -> Option<crate::fem::QuadValues> {
        let deg = self.options.degradation;
        self.model.has_damage().then(|| self.space.quad_values(z, |z| deg.thermal(z)))
    }

    fn solve_displacement(&self, z: &[f64], theta: &[f64], t: f64, guess: &[f64]) -> Result<(Vec<f64>, usize)> {
        let g = self.stiffness_factor(z);
        let thermal = matches!(self.model, Model::Biot | Model::Tfpfm1 | Model::Tfpfm2).then_some(theta);
        let mut sys = assemble_elasticity(&self.space, g.as_ref(), thermal, &self.mat, self.bc.displacement_dofs(&self.space, t))?;
        if let Some(f) = &self.sources.body_force {
            let load = self.space.vector_load(|x| f(x, t));
            let fixed: std::collections::HashSet<usize> = sys.fixed.iter().map(|d| d.0).collect();
            for (i, l) in load.iter().enumerate() {
                if !fixed.contains(&i) {
                    sys.rhs[i] += l;
                }
            }
        }
        let mut u = guess.to_vec();
        let stats = sys.solve_cached(&mut u, &self.options.solver, Some(&self.caches[0]))?;
        Ok((u, stats.iterations))
    }

    /// Builds the state at t = 0: given damage and temperature, displacement
    /// from the elasticity solve with the t = 0 boundary data.
    pub fn initial_state(&self, z0: NodalField, theta0: NodalField) -> Result<SimState> {
        let mesh = self.space.mesh();
        z0.check_on(mesh, 1, "z")?;
        theta0.check_on(mesh, 1, "theta")?;
        if z0.values().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidInput("initial damage must lie in [0, 1]".into()));
        }
        if self.model == Model::Biot && z0.values().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidInput("the Biot model runs without damage".into()));
        }
        let zeros = vec![0.0; 2 * mesh.num_nodes()];
        let (u, it) = self.solve_displacement(z0.values(), theta0.values(), 0.0, &zeros)?;
        let u = NodalField::from_values(2, u)?;
        Ok(SimState {
            step: 0,
            t: 0.0,
            u_prev: u.clone(),
            u,
            theta_prev: theta0.clone(),
            theta: theta0,
            z_prev: z0.clone(),
            z: z0,
            diagnostics: StepDiagnostics {
                iterations_u: it,
                ..Default::default()
            },
        })
    }

    /// Advances one step: u^k, then z^k (from the lagged state), then θ^k.
    pub fn step(&self, s: &SimState) -> Result<SimState> {
        let k = s.step + 1;
        self.step_inner(s, k).map_err(|e| e.at_step(k))
    }

    fn step_inner(&self, s: &SimState, k: usize) -> Result<SimState> {
        let t = k as f64 * self.dt;
        let z_prev = s.z.values();
        let theta_prev = s.theta.values();
        let mut diag = StepDiagnostics::default();

        let (u, it) = self.solve_displacement(z_prev, theta_prev, t, s.u.values())?;
        diag.iterations_u = it;

        let z = if self.model.has_damage() {
            let w_theta = (self.model == Model::Tfpfm1).then_some(theta_prev);
            let w = nodal_energy_density(&self.space, &self.mat, s.u.values(), w_theta);
            let sys = assemble_damage(&self.space, z_prev, &w, self.dt, &self.mat)?;
            let mut zt = z_prev.to_vec();
            diag.iterations_z = sys.solve_cached(&mut zt, &self.options.solver, Some(&self.caches[1]))?.iterations;
            let mut over: f64 = 0.0;
            for (zn, &zo) in zt.iter_mut().zip(z_prev) {
                over = over.max(*zn - 1.0).max(-*zn);
                *zn = zn.max(zo).clamp(0.0, 1.0);
            }
            diag.overshoot = over;
            zt
        } else {
            z_prev.to_vec()
        };

        let theta = if self.model.has_heat() && !self.options.freeze_temperature {
            let du: Vec<f64> = u.iter().zip(s.u.values()).map(|(a, b)| a - b).collect();
            let g = self.thermal_factor(z_prev);
            let source = self.sources.heat.as_ref().map(|f| self.space.load_vector(|x| f(x, t)));
            let sys = assemble_heat(
                &self.space,
                &HeatStep {
                    theta_prev,
                    du: Some(&du),
                    g: g.as_ref(),
                    dt: self.dt,
                    source: source.as_deref(),
                },
                &self.mat,
                self.bc.temperature_dofs(&self.space, t),
            )?;
            let mut th = theta_prev.to_vec();
            diag.iterations_theta = sys.solve_cached(&mut th, &self.options.solver, Some(&self.caches[2]))?.iterations;
            th
        } else {
            theta_prev.to_vec()
        };

        Ok(SimState {
            step: k,
            t,
            u: NodalField::from_values(2, u)?,
            theta: NodalField::from_values(1, theta)?,
            z: NodalField::from_values(1, z)?,
            u_prev: s.u.clone(),
            theta_prev: s.theta.clone(),
            z_prev: s.z.clone(),
            diagnostics: diag,
        })
    }
}

/// Callback invoked on the initial state and after every step.
pub trait Observer {
    fn observe(&mut self, stepper: &Stepper, state: &SimState) -> Result<()>;

    /// Called once after the last step or after a failure.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Runs `steps` steps from `initial`, notifying observers. On failure the
/// observers are still finished (flushing partial output) and the error carries
/// the step index.
pub fn run(stepper: &Stepper, initial: SimState, steps: usize, observers: &mut [&mut dyn Observer]) -> Result<SimState> {
    let result = (|| {
        for o in observers.iter_mut() {
            o.observe(stepper, &initial)?;
        }
        let mut state = initial;
        for _ in 0..steps {
            let next = stepper.step(&state)?;
            for o in observers.iter_mut() {
                o.observe(stepper, &next).map_err(|e| e.at_step(next.step))?;
            }
            state = next;
        }
        Ok(state)
    })();
    for o in observers.iter_mut() {
        o.finish()?;
    }
    result
}

/// Tracks irreversibility and bounds of the damage field over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageMonitor {
    /// `min_k min_i (z^k_i − z^{k−1}_i)`; +∞ before the first step.
    pub min_increment: f64,
    pub min_z: f64,
    pub max_z: f64,
    /// Largest pre-projection overshoot of z̃ outside [0, 1].
    pub max_overshoot: f64,
    pub steps: usize,
}

impl Default for DamageMonitor {
    fn default() -> Self {
        Self {
            min_increment: f64::INFINITY,
            min_z: f64::INFINITY,
            max_z: f64::NEG_INFINITY,
            max_overshoot: 0.0,
            steps: 0,
        }
    }
}

impl DamageMonitor {
    /// Irreversibility held exactly and z stayed in [0, 1] up to `tol`.
    pub fn ok(&self, tol: f64) -> bool {
        self.min_increment >= 0.0 && self.min_z >= -tol && self.max_z <= 1.0 + tol
    }
}

impl Observer for DamageMonitor {
    fn observe(&mut self, _stepper: &Stepper, state: &SimState) -> Result<()> {
        let (z, zp) = (state.z.values(), state.z_prev.values());
        if state.step > 0 {
            self.steps += 1;
            let inc = z.iter().zip(zp).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
            self.min_increment = self.min_increment.min(inc);
            self.max_overshoot = self.max_overshoot.max(state.diagnostics.overshoot);
        }
        self.min_z = self.min_z.min(state.z.min());
        self.max_z = self.max_z.max(state.z.max());
        Ok(())
    }
}

/// Observer wrapping a closure.
pub struct FnObserver<F>(pub F);

impl<F: FnMut(&Stepper, &SimState) -> Result<()>> Observer for FnObserver<F> {
    fn observe(&mut self, stepper: &Stepper, state: &SimState) -> Result<()> {
        (self.0)(stepper, state)
    }
}
