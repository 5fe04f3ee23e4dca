//! Constitutive relations for isotropic plane-strain thermoelasticity,
//! energy densities, and the nondimensional scaling.
//!
//! Temperatures are carried as increments over the reference temperature,
//! so every formula below takes `theta = Θ − Θ₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension. Everything here is plane strain.
pub const DIM: f64 = 2.0;

/// Symmetric 2×2 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 1.0, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius inner product `A:B`.
    pub fn ddot(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.yy * s, self.xy * s)
    }

    /// `self + s·I`
    pub fn add_iso(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx + s, self.yy + s, self.xy)
    }

    /// Symmetric part of a displacement gradient `[[du1/dx1, du1/dx2], [du2/dx1, du2/dx2]]`.
    pub fn from_gradient(grad: [[f64; 2]; 2]) -> Sym2 {
        Sym2::new(grad[0][0], grad[1][1], 0.5 * (grad[0][1] + grad[1][0]))
    }
}

/// Which formula turns (E_Y, ν_P) into the shear modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LameConvention {
    /// μ = E/(2(1+ν)).
    #[default]
    Standard,
    /// μ = E/(2(1−ν)), as printed in the source table footnote.
    PaperFootnote,
}

/// Lamé constants from Young's modulus and Poisson's ratio (standard relation).
pub fn lame_from_engineering(young: f64, poisson: f64) -> Result<(f64, f64)> {
    lame_with_convention(young, poisson, LameConvention::Standard)
}

pub fn lame_with_convention(young: f64, poisson: f64, convention: LameConvention) -> Result<(f64, f64)> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(Error::InvalidInput(format!("Young's modulus must be positive, got {young}")));
    }
    if poisson == 0.5 {
        return Err(Error::InvalidInput(
            "Poisson ratio 1/2 is the incompressible limit; the Lamé constant λ is unbounded".into(),
        ));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(Error::InvalidInput(format!("Poisson ratio must lie in (-1, 1/2), got {poisson}")));
    }
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = match convention {
        LameConvention::Standard => young / (2.0 * (1.0 + poisson)),
        LameConvention::PaperFootnote => young / (2.0 * (1.0 - poisson)),
    };
    Ok((lambda, mu))
}

/// Nondimensional inputs as they appear in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialInput {
    pub young: f64,
    pub poisson: f64,
    pub a_l: f64,
    pub delta: f64,
    #[serde(default = "default_gamma_star")]
    pub gamma_star: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub lame_convention: LameConvention,
}

fn default_gamma_star() -> f64 {
    5.08
}
fn default_eps() -> f64 {
    0.01
}
fn default_alpha() -> f64 {
    0.001
}

/// Material constants used by the solvers.
///
/// The heat equation is `χ θ_t = div(κ₀ g ∇θ) − Θ₀β g div u_t` and the thermal
/// energy is `χ/(2Θ₀) ∫θ²`; with these two weights tied through the same Θ₀
/// the coupled energy balance closes for any β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub young: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
    pub a_l: f64,
    pub beta: f64,
    pub kappa0: f64,
    pub chi: f64,
    pub theta0: f64,
    pub delta: f64,
    pub gamma_star: f64,
    pub eps: f64,
    pub alpha: f64,
}

impl MaterialParams {
    /// Builds nondimensional parameters (χ = κ₀ = 1) from engineering inputs.
    ///
    /// The reference temperature is set to Θ₀ = χδ/β so that the heat-equation
    /// coupling Θ₀β/χ equals δ. For δ = 0 the systems are decoupled and Θ₀ = 1
    /// only weights the reported thermal energy.
    pub fn from_input(input: &MaterialInput) -> Result<Self> {
        let (lambda, mu) = lame_with_convention(input.young, input.poisson, input.lame_convention)?;
        let beta = input.a_l * (DIM * lambda + 2.0 * mu);
        if input.delta < 0.0 || !input.delta.is_finite() {
            return Err(Error::InvalidInput(format!("δ must be nonnegative, got {}", input.delta)));
        }
        if input.delta > 0.0 && beta == 0.0 {
            return Err(Error::InvalidInput("a positive coupling δ needs a nonzero thermal expansion a_L".into()));
        }
        let chi = 1.0;
        let theta0 = if input.delta > 0.0 { chi * input.delta / beta } else { 1.0 };
        let params = MaterialParams {
            young: input.young,
            poisson: input.poisson,
            lambda,
            mu,
            a_l: input.a_l,
            beta,
            kappa0: 1.0,
            chi,
            theta0,
            delta: input.delta,
            gamma_star: input.gamma_star,
            eps: input.eps,
            alpha: input.alpha,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.mu > 0.0) {
            return bad(format!("μ must be positive, got {}", self.mu));
        }
        if !(self.lambda > -2.0 * self.mu / DIM) {
            return bad(format!("λ must exceed −2μ/d, got λ = {}", self.lambda));
        }
        let beta = self.a_l * (DIM * self.lambda + 2.0 * self.mu);
        if (beta - self.beta).abs() > 1e-12 * beta.abs().max(1.0) {
            return bad(format!("β = {} does not equal a_L(dλ + 2μ) = {beta}", self.beta));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("δ must be nonnegative, got {}", self.delta));
        }
        for (name, v) in [
            ("γ*", self.gamma_star),
            ("ε", self.eps),
            ("α", self.alpha),
            ("Θ₀", self.theta0),
            ("χ", self.chi),
            ("κ₀", self.kappa0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Coefficient of `g div u_t` in the heat equation, `Θ₀β` (zero when δ = 0).
    pub fn heat_coupling(&self) -> f64 {
        if self.delta > 0.0 {
            self.theta0 * self.beta
        } else {
            0.0
        }
    }

    /// σ[e] = λ tr(e) I + 2μ e
    pub fn stress(&self, e: &Sym2) -> Sym2 {
        e.scale(2.0 * self.mu).add_iso(self.lambda * e.trace())
    }

    /// σ* = σ[e] − β θ I
    pub fn thermal_stress(&self, e: &Sym2, theta: f64) -> Sym2 {
        self.stress(e).add_iso(-self.beta * theta)
    }

    /// e* = e − a_L θ I
    pub fn thermal_strain(&self, e: &Sym2, theta: f64) -> Sym2 {
        e.add_iso(-self.a_l * theta)
    }

    /// W = σ[e]:e
    pub fn energy_density(&self, e: &Sym2) -> f64 {
        self.stress(e).ddot(e)
    }

    /// W* = σ*:e*
    pub fn thermoelastic_energy_density(&self, e: &Sym2, theta: f64) -> f64 {
        self.thermal_stress(e, theta).ddot(&self.thermal_strain(e, theta))
    }
}

/// Material constants in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionalParams {
    pub young: f64,
    pub poisson: f64,
    pub a_l: f64,
    pub kappa0: f64,
    pub chi: f64,
    pub theta0: f64,
    pub gamma_star: f64,
    pub eps: f64,
    pub alpha: f64,
    #[serde(default)]
    pub lame_convention: LameConvention,
}

impl DimensionalParams {
    pub fn lame(&self) -> Result<(f64, f64)> {
        lame_with_convention(self.young, self.poisson, self.lame_convention)
    }

    pub fn beta(&self) -> Result<f64> {
        let (lambda, mu) = self.lame()?;
        Ok(self.a_l * (DIM * lambda + 2.0 * mu))
    }
}

/// Characteristic scales. `c_t` and `c_u` are derived from the material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSet {
    pub c_x: f64,
    pub c_t: f64,
    pub c_u: f64,
    pub c_e: f64,
    pub c_theta: f64,
}

impl ScalingSet {
    /// c_t = c_x²χ/κ₀, c_u = c_Θ c_x β / c_e.
    pub fn new(c_x: f64, c_e: f64, c_theta: f64, params: &DimensionalParams) -> Result<Self> {
        for (name, v) in [("c_x", c_x), ("c_e", c_e), ("c_Θ", c_theta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("scale {name} must be positive, got {v}")));
            }
        }
        let beta = params.beta()?;
        if !(beta > 0.0) {
            return Err(Error::InvalidInput("scaling needs a positive stress thermal modulus β".into()));
        }
        Ok(Self {
            c_x,
            c_t: c_x * c_x * params.chi / params.kappa0,
            c_u: c_theta * c_x * beta / c_e,
            c_e,
            c_theta,
        })
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("c_x", self.c_x),
            ("c_t", self.c_t),
            ("c_u", self.c_u),
            ("c_e", self.c_e),
            ("c_Θ", self.c_theta),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("scale {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Maps physical constants to the nondimensional set used by the steppers (β̃ = 1).
pub fn nondimensionalize(dim: &DimensionalParams, scales: &ScalingSet) -> Result<MaterialParams> {
    scales.check()?;
    let (lambda, mu) = dim.lame()?;
    let beta = dim.a_l * (DIM * lambda + 2.0 * mu);
    if !(beta > 0.0) {
        return Err(Error::InvalidInput("nondimensionalization needs β > 0".into()));
    }
    let bc = beta * scales.c_theta;
    let delta = dim.theta0 * beta * beta / (scales.c_e * dim.chi);
    let lambda_nd = lambda / scales.c_e;
    let mu_nd = mu / scales.c_e;
    let a_l_nd = scales.c_x * scales.c_theta * dim.a_l / scales.c_u;
    let beta_nd = a_l_nd * (DIM * lambda_nd + 2.0 * mu_nd);
    let params = MaterialParams {
        young: dim.young / scales.c_e,
        poisson: dim.poisson,
        lambda: lambda_nd,
        mu: mu_nd,
        a_l: a_l_nd,
        beta: beta_nd,
        kappa0: 1.0,
        chi: 1.0,
        theta0: delta / beta_nd,
        delta,
        gamma_star: scales.c_e * dim.gamma_star / (scales.c_x * bc * bc),
        eps: dim.eps / scales.c_x,
        alpha: scales.c_e * dim.alpha / (scales.c_t * bc * bc),
    };
    params.validate()?;
    Ok(params)
}

/// Inverse of [`nondimensionalize`]. The heat capacity is not recoverable from
/// the scaled set and must be supplied.
pub fn dimensionalize(nd: &MaterialParams, scales: &ScalingSet, chi: f64, lame_convention: LameConvention) -> Result<DimensionalParams> {
    scales.check()?;
    let lambda = nd.lambda * scales.c_e;
    let mu = nd.mu * scales.c_e;
    let a_l = nd.a_l * scales.c_u / (scales.c_x * scales.c_theta);
    let beta = a_l * (DIM * lambda + 2.0 * mu);
    let bc = beta * scales.c_theta;
    Ok(DimensionalParams {
        young: nd.young * scales.c_e,
        poisson: nd.poisson,
        a_l,
        kappa0: scales.c_x * scales.c_x * chi / scales.c_t,
        chi,
        theta0: nd.delta * scales.c_e * chi / (beta * beta),
        gamma_star: nd.gamma_star * scales.c_x * bc * bc / scales.c_e,
        eps: nd.eps * scales.c_x,
        alpha: nd.alpha * scales.c_t * bc * bc / scales.c_e,
        lame_convention,
    })
}

/// Exponent applied to `(1 − z)` in the degraded conductivity and heat coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalExponent {
    #[default]
    Squared,
    Linear,
}

/// Degradation of stiffness and conductivity by the damage field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    /// Lower bound on the degradation factor; keeps the operators definite at z = 1.
    pub floor: f64,
    pub thermal_exponent: ThermalExponent,
}

impl Default for Degradation {
    fn default() -> Self {
        Self {
            floor: 1e-6,
            thermal_exponent: ThermalExponent::Squared,
        }
    }
}

impl Degradation {
    #[inline]
    pub fn stiffness(&self, z: f64) -> f64 {
        let s = 1.0 - z;
        (s * s).max(self.floor)
    }

    #[inline]
    pub fn thermal(&self, z: f64) -> f64 {
        let s = 1.0 - z;
        match self.thermal_exponent {
            ThermalExponent::Squared => (s * s).max(self.floor),
            ThermalExponent::Linear => s.max(self.floor),
        }
    }
}
