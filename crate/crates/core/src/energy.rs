//! Energies, dissipation integrals and discrete energy-balance audits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::FemSpace;
use crate::physics::{Degradation, MaterialParams};
use crate::steppers::{Model, Observer, SimState, Stepper};

/// Per-triangle `W = σ[e]:e`.
pub fn triangle_w(space: &FemSpace, mat: &MaterialParams, u: &[f64]) -> Vec<f64> {
    (0..space.num_triangles()).map(|t| mat.energy_density(&space.strain(t, u))).collect()
}

/// Per-triangle mean of `W* = σ*:e*` over the vertex values of θ.
pub fn triangle_w_star(space: &FemSpace, mat: &MaterialParams, u: &[f64], theta: &[f64]) -> Vec<f64> {
    space
        .mesh()
        .triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let e = space.strain(t, u);
            tri.iter().map(|&v| mat.thermoelastic_energy_density(&e, theta[v])).sum::<f64>() / 3.0
        })
        .collect()
}

/// Nodal energy density `Wᵢ`: the area-weighted mean over the patch of node i of
/// `W(e_T)`, or of `W*(e_T, θᵢ)` when `theta` is given. This is the derivative of the
/// vertex-rule elastic energy with respect to the nodal damage, up to `−(1 − zᵢ)mᵢ`.
pub fn nodal_energy_density(space: &FemSpace, mat: &MaterialParams, u: &[f64], theta: Option<&[f64]>) -> Vec<f64> {
    let Some(th) = theta else {
        return space.average_to_nodes(&triangle_w(space, mat, u));
    };
    let n = space.num_nodes();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (t, tri) in space.mesh().triangles().iter().enumerate() {
        let a = space.geom(t).area;
        let e = space.strain(t, u);
        for &v in tri {
            num[v] += a * mat.thermoelastic_energy_density(&e, th[v]);
            den[v] += a;
        }
    }
    num.iter().zip(&den).map(|(a, b)| a / b).collect()
}

/// Energies and dissipation rates of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub e_el: f64,
    pub e_el_star: f64,
    pub e_th: f64,
    pub e_el_mod: f64,
    pub e_el_star_mod: f64,
    pub e_s: f64,
    pub d_theta: f64,
    pub d_z: f64,
    /// Discrete energy-balance residual with respect to the previous record (NaN for the first).
    pub residual: f64,
}

/// Which energy law a record series is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditModel {
    /// `E_el + E_th` with dissipation `D_θ`.
    Biot,
    /// `𝓔_el + E_s` with dissipation `D_z`.
    Fpfm,
    /// `𝓔*_el + E_s` with dissipation `D_z`; valid for a temperature frozen in time.
    Tfpfm1,
    /// `𝓔_el + E_s + E_th` with dissipation `D_θ + D_z`.
    Tfpfm2,
    /// `𝓔*_el + E_s + E_th` for coupled TF-PFM1. No energy law holds; informational only.
    Tfpfm1Coupled,
}

impl AuditModel {
    pub fn is_informational(self) -> bool {
        matches!(self, AuditModel::Tfpfm1Coupled)
    }
}

impl EnergyRecord {
    pub fn total(&self, model: AuditModel) -> f64 {
        match model {
            AuditModel::Biot => self.e_el + self.e_th,
            AuditModel::Fpfm => self.e_el_mod + self.e_s,
            AuditModel::Tfpfm1 => self.e_el_star_mod + self.e_s,
            AuditModel::Tfpfm2 => self.e_el_mod + self.e_s + self.e_th,
            AuditModel::Tfpfm1Coupled => self.e_el_star_mod + self.e_s + self.e_th,
        }
    }

    pub fn dissipation(&self, model: AuditModel) -> f64 {
        match model {
            AuditModel::Biot => self.d_theta,
            AuditModel::Fpfm | AuditModel::Tfpfm1 => self.d_z,
            AuditModel::Tfpfm2 | AuditModel::Tfpfm1Coupled => self.d_theta + self.d_z,
        }
    }

    /// `(E(k) − E(k−1))/Δt + D(k)`
    pub fn residual_from(&self, prev: &EnergyRecord, model: AuditModel) -> f64 {
        let dt = self.t - prev.t;
        (self.total(model) - prev.total(model)) / dt + self.dissipation(model)
    }
}

/// Evaluates every energy of `state` with the quadratures of the schemes: the
/// degradation and θ inside `W*` at vertices, the damage zero-order terms lumped.
/// `D_θ` uses the conductivity of the previous damage field, as in the heat solve
/// that produced the state.
pub fn compute_energies(space: &FemSpace, state: &SimState, mat: &MaterialParams, deg: &Degradation, dt: f64) -> EnergyRecord {
    let u = state.u.values();
    let theta = state.theta.values();
    let z = state.z.values();
    let z_prev = state.z_prev.values();
    let mut e_el = 0.0;
    let mut e_el_star = 0.0;
    let mut e_el_mod = 0.0;
    let mut e_el_star_mod = 0.0;
    let mut grad_z2 = 0.0;
    let mut d_theta = 0.0;
    for t in 0..space.num_triangles() {
        let area = space.geom(t).area;
        let e = space.strain(t, u);
        let w = mat.energy_density(&e);
        let mut gmean = 0.0;
        let mut ws = 0.0;
        let mut ws_mod = 0.0;
        let mut gth = 0.0;
        for &v in &space.mesh().triangles()[t] {
            let g = deg.stiffness(z[v]);
            let wstar = mat.thermoelastic_energy_density(&e, theta[v]);
            gmean += g / 3.0;
            ws += wstar / 3.0;
            ws_mod += g * wstar / 3.0;
            gth += deg.thermal(z_prev[v]) / 3.0;
        }
        e_el += area * w;
        e_el_mod += area * gmean * w;
        e_el_star += area * ws;
        e_el_star_mod += area * ws_mod;
        let gz = space.gradient(t, z);
        grad_z2 += area * (gz[0] * gz[0] + gz[1] * gz[1]);
        let gt = space.gradient(t, theta);
        d_theta += area * gth * (gt[0] * gt[0] + gt[1] * gt[1]);
    }
    let e_th = 0.5 * mat.chi / mat.theta0 * space.mass(None).bilinear(theta, theta);
    let ml = space.lumped_mass();
    let z2: f64 = ml.iter().zip(z).map(|(m, v)| m * v * v).sum();
    let dz2: f64 = ml.iter().zip(z).zip(z_prev).map(|((m, a), b)| m * (a - b) * (a - b)).sum();
    EnergyRecord {
        t: state.t,
        e_el: 0.5 * e_el,
        e_el_star: 0.5 * e_el_star,
        e_th,
        e_el_mod: 0.5 * e_el_mod,
        e_el_star_mod: 0.5 * e_el_star_mod,
        e_s: 0.5 * mat.gamma_star * (mat.eps * grad_z2 + z2 / mat.eps),
        d_theta: mat.kappa0 / mat.theta0 * d_theta,
        d_z: mat.alpha * dz2 / (dt * dt),
        residual: f64::NAN,
    }
}

/// The energy law a model is audited against. Coupled TF-PFM1 has none and maps
/// to the informational total; with a frozen temperature it obeys the `𝓔*_el + E_s` law.
pub fn audit_model_for(model: Model, frozen_temperature: bool) -> AuditModel {
    match model {
        Model::Elasticity | Model::Biot => AuditModel::Biot,
        Model::Fpfm => AuditModel::Fpfm,
        Model::Tfpfm1 if frozen_temperature => AuditModel::Tfpfm1,
        Model::Tfpfm1 => AuditModel::Tfpfm1Coupled,
        Model::Tfpfm2 => AuditModel::Tfpfm2,
    }
}

/// Observer collecting one [`EnergyRecord`] per state, residuals filled in
/// against `model`.
#[derive(Debug, Clone)]
pub struct EnergyLog {
    pub model: AuditModel,
    pub records: Vec<EnergyRecord>,
}

impl EnergyLog {
    pub fn new(model: AuditModel) -> Self {
        Self { model, records: Vec::new() }
    }
}

impl Observer for EnergyLog {
    fn observe(&mut self, stepper: &Stepper, state: &SimState) -> Result<()> {
        let mut r = compute_energies(&stepper.space, state, &stepper.mat, &stepper.options.degradation, stepper.dt);
        if let Some(prev) = self.records.last() {
            r.residual = r.residual_from(prev, self.model);
        }
        self.records.push(r);
        Ok(())
    }
}

/// Outcome of checking one energy law on a window of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model: AuditModel,
    /// Record indices `[start, end]`, inclusive.
    pub window: (usize, usize),
    pub max_abs_residual: f64,
    /// Steps `k` in the window where `E(k) − E(k−1)` exceeded the slack, with the excess.
    pub violations: Vec<(usize, f64)>,
    pub max_increase: f64,
    pub slack: f64,
    pub dissipation_nonnegative: bool,
    /// True when the total energy is nonincreasing within the slack and all
    /// dissipation terms are nonnegative. Always false-free for informational models.
    pub passed: bool,
    pub note: String,
}

/// Checks monotonicity and the balance residual over `window` (inclusive record indices).
/// The slack is `rel_slack · E_total(window start)`.
pub fn audit_dissipation(records: &[EnergyRecord], model: AuditModel, window: (usize, usize), rel_slack: f64) -> Result<AuditReport> {
    let (a, b) = window;
    if a >= b || b >= records.len() {
        return Err(Error::InvalidInput(format!(
            "audit window {window:?} does not lie inside a series of {} records",
            records.len()
        )));
    }
    let slack = rel_slack * records[a].total(model).abs();
    let mut violations = Vec::new();
    let mut max_abs_residual: f64 = 0.0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut dissipation_nonnegative = true;
    for k in a + 1..=b {
        let inc = records[k].total(model) - records[k - 1].total(model);
        max_increase = max_increase.max(inc);
        if inc > slack {
            violations.push((k, inc));
        }
        max_abs_residual = max_abs_residual.max(records[k].residual_from(&records[k - 1], model).abs());
        if records[k].d_theta < 0.0 || records[k].d_z < 0.0 {
            dissipation_nonnegative = false;
        }
    }
    let passed = violations.is_empty() && dissipation_nonnegative;
    let dt = records[a + 1].t - records[a].t;
    let note = if model.is_informational() {
        format!("informational only: no energy law holds for this model; residual is first order in dt = {dt:e}")
    } else {
        format!("residual uses backward differences and is first order in dt = {dt:e}")
    };
    Ok(AuditReport {
        model,
        window,
        max_abs_residual,
        violations,
        max_increase,
        slack,
        dissipation_nonnegative,
        passed,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, e: f64) -> EnergyRecord {
        EnergyRecord {
            t,
            e_el: e,
            e_el_star: e,
            e_th: 0.0,
            e_el_mod: e,
            e_el_star_mod: e,
            e_s: 0.0,
            d_theta: 0.0,
            d_z: 0.0,
            residual: f64::NAN,
        }
    }

    #[test]
    fn constant_series_has_zero_residual() {
        let r: Vec<_> = (0..5).map(|k| rec(k as f64 * 0.1, 2.0)).collect();
        let rep = audit_dissipation(&r, AuditModel::Biot, (0, 4), 1e-8).unwrap();
        assert_eq!(rep.max_abs_residual, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn increase_is_flagged() {
        let r = vec![rec(0.0, 1.0), rec(0.1, 1.0), rec(0.2, 1.5)];
        let rep = audit_dissipation(&r, AuditModel::Fpfm, (0, 2), 1e-8).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert!(!rep.passed);
    }

    #[test]
    fn bad_window_rejected() {
        let r = vec![rec(0.0, 1.0), rec(0.1, 1.0)];
        assert!(audit_dissipation(&r, AuditModel::Biot, (0, 5), 1e-8).is_err());
        assert!(audit_dissipation(&r, AuditModel::Biot, (1, 1), 1e-8).is_err());
    }
}
