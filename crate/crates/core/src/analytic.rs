//! Closed-form Mode I crack-tip fields and manufactured solutions of the Biot system.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::physics::MaterialParams;
use crate::steppers::Sources;

/// Plane-strain Mode I near-tip field of a crack along the negative x₁ axis
/// from `tip`, moving with speed `v0` in the x₁ direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeIField {
    pub k_i: f64,
    pub mu: f64,
    pub xi: f64,
    pub v0: f64,
    pub tip: Point,
}

impl ModeIField {
    pub fn new(k_i: f64, young: f64, poisson: f64, v0: f64, tip: Point) -> Result<Self> {
        let (_, mu) = crate::physics::lame_from_engineering(young, poisson)?;
        Ok(Self {
            k_i,
            mu,
            xi: 3.0 - 4.0 * poisson,
            v0,
            tip,
        })
    }

    /// Tip-centred polar coordinates of `x`, with θ ∈ (−π, π].
    pub fn polar(&self, x: Point) -> (f64, f64) {
        let (dx, dy) = (x[0] - self.tip[0], x[1] - self.tip[1]);
        let r = dx.hypot(dy);
        let mut th = dy.atan2(dx);
        if th <= -PI {
            th += 2.0 * PI;
        }
        (r, th)
    }

    fn check_r(r: f64) -> Result<()> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("crack-tip fields need r > 0, got {r}")))
        }
    }

    pub fn displacement(&self, r: f64, theta: f64) -> Result<[f64; 2]> {
        Self::check_r(r)?;
        let a = self.k_i / (2.0 * self.mu) * (r / (2.0 * PI)).sqrt();
        let (s, c) = (theta / 2.0).sin_cos();
        Ok([a * c * (self.xi - 1.0 + 2.0 * s * s), a * s * (self.xi + 1.0 - 2.0 * c * c)])
    }

    pub fn div_u(&self, r: f64, theta: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.k_i * (self.xi - 1.0) / (2.0 * self.mu * (2.0 * PI * r).sqrt()) * (theta / 2.0).cos())
    }

    /// `∂/∂t div u` at t = 0 for the field translated with the tip, `−v₀ ∂₁ div u`.
    pub fn ddt_div_u(&self, r: f64, theta: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.v0 * self.k_i * (self.xi - 1.0) / (4.0 * self.mu * (2.0 * PI * r.powi(3)).sqrt()) * (1.5 * theta).cos())
    }

    pub fn displacement_at(&self, x: Point) -> Result<[f64; 2]> {
        let (r, th) = self.polar(x);
        self.displacement(r, th)
    }

    pub fn div_u_at(&self, x: Point) -> Result<f64> {
        let (r, th) = self.polar(x);
        self.div_u(r, th)
    }
}

/// Registered manufactured solutions on (−1, 1)² with Dirichlet data on the whole boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// Fields linear in space and time; P1 reproduces them exactly.
    Polynomial,
    /// Smooth trigonometric fields vanishing on the boundary, linear in time.
    Trig,
}

impl std::str::FromStr for ManufacturedCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polynomial" => Ok(Self::Polynomial),
            "trig" => Ok(Self::Trig),
            other => Err(Error::InvalidInput(format!("unknown manufactured case '{other}'"))),
        }
    }
}

type Scalar = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;

/// Exact fields and the sources that make them solve the time-discrete Biot system.
///
/// Both fields are `a(x) + t b(x)`, so backward differences are exact in time. The
/// body force at `t` is built with θ at `t − Δt`, the temperature the displacement
/// solve actually sees, so the discrete error is purely spatial.
#[derive(Clone)]
pub struct Manufactured {
    pub u: Vector,
    pub theta: Scalar,
    pub sources: Sources,
}

/// Spatial parts of a case: value, gradient and second derivatives.
struct Parts {
    /// `(u, ∇(div u), Δu, div u)` of the spatial displacement factor.
    u: fn(Point) -> ([f64; 2], [f64; 2], [f64; 2], f64),
    /// `(θ, ∇θ, Δθ)` of the spatial temperature factor.
    theta: fn(Point) -> (f64, [f64; 2], f64),
}

fn poly_u(x: Point) -> ([f64; 2], [f64; 2], [f64; 2], f64) {
    let u = [0.1 * x[0] + 0.05 * x[1], -0.02 * x[0] + 0.08 * x[1]];
    (u, [0.0, 0.0], [0.0, 0.0], 0.18)
}

fn poly_theta(x: Point) -> (f64, [f64; 2], f64) {
    (0.3 + 0.2 * x[0] - 0.1 * x[1], [0.2, -0.1], 0.0)
}

/// `u = 0.1 (s₁s₂, −s₁s₂)` with `sᵢ = sin(πxᵢ)`.
fn trig_u(x: Point) -> ([f64; 2], [f64; 2], [f64; 2], f64) {
    let (s1, c1) = (PI * x[0]).sin_cos();
    let (s2, c2) = (PI * x[1]).sin_cos();
    let a = 0.1;
    let p = a * s1 * s2;
    let div = a * PI * (c1 * s2 - s1 * c2);
    let grad_div = [a * PI * PI * (-s1 * s2 - c1 * c2), a * PI * PI * (c1 * c2 + s1 * s2)];
    let lap = [-2.0 * PI * PI * p, 2.0 * PI * PI * p];
    ([p, -p], grad_div, lap, div)
}

fn trig_theta(x: Point) -> (f64, [f64; 2], f64) {
    let k = PI / 2.0;
    let (s1, c1) = (k * x[0]).sin_cos();
    let (s2, c2) = (k * x[1]).sin_cos();
    (c1 * c2, [-k * s1 * c2, -k * c1 * s2], -2.0 * k * k * c1 * c2)
}

/// Builds the exact fields and sources of `case` for material `mat` and time step `dt`.
pub fn manufactured_solution(case: ManufacturedCase, mat: &MaterialParams, dt: f64) -> Result<Manufactured> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let parts = match case {
        ManufacturedCase::Polynomial => Parts {
            u: poly_u,
            theta: poly_theta,
        },
        ManufacturedCase::Trig => Parts {
            u: trig_u,
            theta: trig_theta,
        },
    };
    let (pu, pth) = (parts.u, parts.theta);
    // both fields are (1 + t)·spatial part
    let (lam, mu, beta) = (mat.lambda, mat.mu, mat.beta);
    let (chi, kappa, coupling) = (mat.chi, mat.kappa0, mat.heat_coupling());
    let u: Vector = Arc::new(move |x, t| {
        let v = pu(x).0;
        [(1.0 + t) * v[0], (1.0 + t) * v[1]]
    });
    let theta: Scalar = Arc::new(move |x, t| (1.0 + t) * pth(x).0);
    let body_force: Vector = Arc::new(move |x, t| {
        let (_, gd, lap, _) = pu(x);
        let lag = if t > 0.0 { t - dt } else { 0.0 };
        let gth = pth(x).1;
        let s = 1.0 + t;
        let sl = 1.0 + lag;
        [
            -s * ((lam + mu) * gd[0] + mu * lap[0]) + beta * sl * gth[0],
            -s * ((lam + mu) * gd[1] + mu * lap[1]) + beta * sl * gth[1],
        ]
    });
    let heat: Scalar = Arc::new(move |x, t| {
        let (th, _, lap) = pth(x);
        let div = pu(x).3;
        chi * th - kappa * (1.0 + t) * lap + coupling * div
    });
    Ok(Manufactured {
        u,
        theta,
        sources: Sources {
            body_force: Some(body_force),
            heat: Some(heat),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn appendix() -> ModeIField {
        ModeIField::new(5.0, 1.0, 0.3, 0.05, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn reference_values() {
        let f = appendix();
        assert!((f.xi - 1.8).abs() < 1e-15);
        let u = f.displacement(1.0, 0.0).unwrap();
        assert!((u[0] - 2.0744999).abs() < 1e-6, "{}", u[0]);
        assert_eq!(u[1], 0.0);
        assert!((f.div_u(1.0, 0.0).unwrap() - u[0]).abs() < 1e-12);
        assert!((f.ddt_div_u(1.0, 0.0).unwrap() - 0.0518625).abs() < 1e-6);
    }

    #[test]
    fn zeros_and_scaling() {
        let f = appendix();
        assert!(f.div_u(0.7, PI).unwrap().abs() < 1e-15);
        assert!(f.ddt_div_u(0.7, PI / 3.0).unwrap().abs() < 1e-15);
        let (a, b) = (f.displacement(4.0, 0.4).unwrap(), f.displacement(1.0, 0.4).unwrap());
        assert!((a[0] - 2.0 * b[0]).abs() < 1e-13 && (a[1] - 2.0 * b[1]).abs() < 1e-13);
        assert!((f.div_u(4.0, 0.4).unwrap() - 0.5 * f.div_u(1.0, 0.4).unwrap()).abs() < 1e-13);
        assert!((f.ddt_div_u(4.0, 0.4).unwrap() - f.ddt_div_u(1.0, 0.4).unwrap() / 8.0).abs() < 1e-13);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        let f = appendix();
        assert!(f.displacement(0.0, 0.0).is_err());
        assert!(f.div_u(-1.0, 0.0).is_err());
        assert!(f.ddt_div_u(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn polar_branch() {
        let f = appendix();
        let (r, th) = f.polar([-1.0, 0.0]);
        assert_eq!((r, th), (1.0, PI));
    }

    #[test]
    fn trig_parts_match_finite_differences() {
        let h = 1e-5;
        let x = [0.31, -0.47];
        let (_, gd, lap, _) = trig_u(x);
        let div = |p: Point| trig_u(p).3;
        let fd = [
            (div([x[0] + h, x[1]]) - div([x[0] - h, x[1]])) / (2.0 * h),
            (div([x[0], x[1] + h]) - div([x[0], x[1] - h])) / (2.0 * h),
        ];
        assert!((fd[0] - gd[0]).abs() < 1e-6 && (fd[1] - gd[1]).abs() < 1e-6);
        let u = |p: Point| trig_u(p).0;
        for c in 0..2 {
            let l = (u([x[0] + h, x[1]])[c] + u([x[0] - h, x[1]])[c] + u([x[0], x[1] + h])[c] + u([x[0], x[1] - h])[c] - 4.0 * u(x)[c]) / (h * h);
            assert!((l - lap[c]).abs() < 1e-4, "{l} {}", lap[c]);
        }
        let th = |p: Point| trig_theta(p).0;
        let l = (th([x[0] + h, x[1]]) + th([x[0] - h, x[1]]) + th([x[0], x[1] + h]) + th([x[0], x[1] - h]) - 4.0 * th(x)) / (h * h);
        assert!((l - trig_theta(x).2).abs() < 1e-4);
    }
}
