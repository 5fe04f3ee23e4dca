//! Scenario configurations, the builtin experiments and post-run diagnostics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{triangle_w, triangle_w_star};
use crate::error::{Error, Result};
use crate::fem::{FemSpace, NodalField, SolverOptions};
use crate::mesh::{generate, Corridor, DomainSpec, Hole, Mesh, Point, TagRule};
use crate::physics::{Degradation, MaterialInput, MaterialParams, ThermalExponent};
use crate::steppers::{BoundarySpec, Model, SimState, Stepper, StepperOptions, ValueFn};

const GEOM_TOL: f64 = 1e-9;

/// Boundary region selected by a test on edge midpoints and node positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// The vertical line x₁ = value.
    X1 {
        value: f64,
    },
    /// The horizontal line x₂ = value.
    X2 {
        value: f64,
    },
    /// Closed disk; selects a polygonal hole boundary.
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Rect {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    Any,
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::X1 { value } => (p[0] - value).abs() <= GEOM_TOL,
            Region::X2 { value } => (p[1] - value).abs() <= GEOM_TOL,
            Region::Disk { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) <= radius + GEOM_TOL,
            Region::Rect { x_min, x_max, y_min, y_max } => {
                p[0] >= x_min - GEOM_TOL && p[0] <= x_max + GEOM_TOL && p[1] >= y_min - GEOM_TOL && p[1] <= y_max + GEOM_TOL
            }
            Region::Any => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagConfig {
    pub name: String,
    pub region: Region,
}

/// `value + theta_d_scale·Θ_D + rate·min(t, t_ramp)`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default)]
    pub theta_d_scale: f64,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Self { value, ..Default::default() }
    }

    pub fn ramp(rate: f64) -> Self {
        Self { rate, ..Default::default() }
    }

    pub fn theta_d() -> Self {
        Self {
            theta_d_scale: 1.0,
            ..Default::default()
        }
    }

    pub fn eval(&self, t: f64, t_ramp: Option<f64>, theta_d: f64) -> f64 {
        let s = t_ramp.map_or(t, |r| t.min(r));
        self.value + self.theta_d_scale * theta_d + self.rate * s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementBc {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2: Option<Schedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureBc {
    pub tag: String,
    pub value: Schedule,
}

/// Closed-form initial damage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDamage {
    #[default]
    None,
    /// `exp(−(x₂/η)²) / (1 + exp((x₁ − tip)/η))`: a crack along x₂ = 0 entering from the left.
    EdgeCrack { tip: f64, eta: f64 },
    /// `exp(−(x₂/η)²) [1/(1 + exp((x₁ − right)/η)) − 1/(1 + exp((x₁ − left)/η))]`
    CenterCrack { left: f64, right: f64, eta: f64 },
}

fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + s.exp())
}

impl InitialDamage {
    pub fn eval(&self, p: Point) -> f64 {
        match *self {
            InitialDamage::None => 0.0,
            InitialDamage::EdgeCrack { tip, eta } => (-(p[1] / eta).powi(2)).exp() * logistic((p[0] - tip) / eta),
            InitialDamage::CenterCrack { left, right, eta } => {
                (-(p[1] / eta).powi(2)).exp() * (logistic((p[0] - right) / eta) - logistic((p[0] - left) / eta))
            }
        }
    }
}

/// Initial temperature increment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialTemperature {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `a + b·x₁ + c·x₂`
    Linear {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `amplitude · cos(πx₁/2) cos(πx₂/2)`
    Bump {
        amplitude: f64,
    },
}

impl InitialTemperature {
    pub fn eval(&self, p: Point) -> f64 {
        use std::f64::consts::FRAC_PI_2;
        match *self {
            InitialTemperature::Zero => 0.0,
            InitialTemperature::Constant { value } => value,
            InitialTemperature::Linear { a, b, c } => a + b * p[0] + c * p[1],
            InitialTemperature::Bump { amplitude } => amplitude * (FRAC_PI_2 * p[0]).cos() * (FRAC_PI_2 * p[1]).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    #[default]
    Coarse,
    Medium,
    Fine,
}

impl Resolution {
    pub fn h_min(self) -> f64 {
        match self {
            Resolution::Coarse => 2e-2,
            Resolution::Medium => 1e-2,
            Resolution::Fine => 5e-3,
        }
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Resolution::Coarse),
            "medium" => Ok(Resolution::Medium),
            "fine" => Ok(Resolution::Fine),
            _ => Err(Error::InvalidInput(format!("unknown resolution '{s}' (coarse, medium, fine)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub target_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corridor: Option<Corridor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ramp: Option<f64>,
    #[serde(default = "one")]
    pub output_every: usize,
}

fn one() -> usize {
    1
}

impl TimeConfig {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sweep {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: Model,
    pub domain: DomainSpec,
    pub mesh: MeshConfig,
    pub material: MaterialInput,
    #[serde(default)]
    pub thermal_exponent: ThermalExponent,
    pub time: TimeConfig,
    /// Boundary tagging rules, first match wins; must cover every boundary edge.
    pub tags: Vec<TagConfig>,
    pub displacement_bc: Vec<DisplacementBc>,
    #[serde(default)]
    pub temperature_bc: Vec<TemperatureBc>,
    /// Prescribed temperature Θ_D used by schedules with `theta_d_scale`.
    #[serde(default)]
    pub theta_d: f64,
    #[serde(default)]
    pub initial_damage: InitialDamage,
    #[serde(default)]
    pub initial_temperature: InitialTemperature,
    /// `[x_min, x_max, y_min, y_max]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation_area: Option<[f64; 4]>,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub freeze_temperature: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        let tc = &self.time;
        if !(tc.dt > 0.0 && tc.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", tc.dt));
        }
        if !(tc.t_end >= tc.dt) {
            return bad(format!("t_end = {} must be at least dt = {}", tc.t_end, tc.dt));
        }
        if let Some(r) = tc.t_ramp {
            if !(r > 0.0) {
                return bad(format!("t_ramp must be positive, got {r}"));
            }
        }
        if tc.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if !(self.mesh.target_h > 0.0) {
            return bad(format!("target_h must be positive, got {}", self.mesh.target_h));
        }
        self.domain.validate()?;
        MaterialParams::from_input(&self.material)?;
        if let Some(a) = self.observation_area {
            let b = self.domain.bbox();
            if !(a[0] < a[1] && a[2] < a[3]) || a[0] < b[0] || a[1] > b[1] || a[2] < b[2] || a[3] > b[3] {
                return bad(format!("observation area {a:?} is not a rectangle inside the domain {b:?}"));
            }
        }
        if self.displacement_bc.is_empty() {
            return Err(Error::Solvability("scenario has no displacement boundary condition".into()));
        }
        let tags: Vec<&str> = self.tags.iter().map(|t| t.name.as_str()).collect();
        for t in self
            .displacement_bc
            .iter()
            .map(|b| &b.tag)
            .chain(self.temperature_bc.iter().map(|b| &b.tag))
        {
            if !tags.contains(&t.as_str()) {
                return Err(Error::Config(format!("boundary condition refers to undefined tag '{t}'")));
            }
        }
        if self.model == Model::Biot && self.initial_damage != InitialDamage::None {
            return bad("the Biot model runs without damage".into());
        }
        Ok(())
    }

    pub fn material_params(&self) -> Result<MaterialParams> {
        MaterialParams::from_input(&self.material)
    }

    pub fn degradation(&self) -> Degradation {
        Degradation {
            thermal_exponent: self.thermal_exponent,
            ..Degradation::default()
        }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let raw = generate(&self.domain, self.mesh.target_h, self.mesh.corridor.as_ref())?;
        let rules: Vec<TagRule<'_>> = self
            .tags
            .iter()
            .map(|t| {
                let r = t.region.clone();
                TagRule::new(t.name.clone(), move |p| r.contains(p))
            })
            .collect();
        raw.tag_boundary(&rules)
    }

    pub fn boundary_spec(&self) -> BoundarySpec {
        let t_ramp = self.time.t_ramp;
        let theta_d = self.theta_d;
        let f = |s: Schedule| -> ValueFn { Arc::new(move |_, t| s.eval(t, t_ramp, theta_d)) };
        BoundarySpec {
            displacement: self.displacement_bc.iter().map(|b| (b.tag.clone(), [b.u1.map(f), b.u2.map(f)])).collect(),
            temperature: self.temperature_bc.iter().map(|b| (b.tag.clone(), f(b.value))).collect(),
        }
    }

    /// The single configurations of the sweep (δ × Θ_D); `self` alone if none.
    pub fn expand_sweep(&self) -> Vec<ScenarioConfig> {
        let deltas: Vec<Option<f64>> = if self.sweep.delta.is_empty() {
            vec![None]
        } else {
            self.sweep.delta.iter().copied().map(Some).collect()
        };
        let thetas: Vec<Option<f64>> = if self.sweep.theta_d.is_empty() {
            vec![None]
        } else {
            self.sweep.theta_d.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for d in &deltas {
            for th in &thetas {
                let mut c = self.clone();
                c.sweep = Sweep::default();
                let mut name = self.name.clone();
                if let Some(d) = d {
                    c.material.delta = *d;
                    name.push_str(&format!("_delta{d}"));
                }
                if let Some(th) = th {
                    c.theta_d = *th;
                    name.push_str(&format!("_thetad{th}"));
                }
                c.name = name;
                out.push(c);
            }
        }
        out
    }
}

/// A validated scenario ready to step.
pub struct Prepared {
    pub stepper: Stepper,
    pub initial: SimState,
    pub steps: usize,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mesh = Arc::new(cfg.build_mesh()?);
    let space = Arc::new(FemSpace::new(mesh.clone()));
    let options = StepperOptions {
        solver: cfg.solver,
        degradation: cfg.degradation(),
        freeze_temperature: cfg.freeze_temperature,
    };
    let stepper = Stepper::new(space, cfg.material_params()?, cfg.boundary_spec(), cfg.model, cfg.time.dt, options)?;
    let z0 = NodalField::scalar_from_fn(&mesh, |p| cfg.initial_damage.eval(p));
    let th0 = NodalField::scalar_from_fn(&mesh, |p| cfg.initial_temperature.eval(p));
    let initial = stepper.initial_state(z0, th0)?;
    Ok(Prepared {
        stepper,
        initial,
        steps: cfg.time.steps(),
    })
}

pub const BUILTIN_NAMES: [&str; 5] = ["lshape", "cracked_square", "straight_crack", "mode1_path", "mode12_path"];

fn tag(name: &str, region: Region) -> TagConfig {
    TagConfig { name: name.into(), region }
}

fn fixed(tag: &str) -> DisplacementBc {
    DisplacementBc {
        tag: tag.into(),
        u1: Some(Schedule::constant(0.0)),
        u2: Some(Schedule::constant(0.0)),
    }
}

fn corridor(x_min: f64, x_max: f64, y_min: f64, y_max: f64, res: Resolution) -> Option<Corridor> {
    Some(Corridor {
        x_min,
        x_max,
        y_min,
        y_max,
        h_min: res.h_min(),
    })
}

fn biot_material(delta: f64) -> MaterialInput {
    MaterialInput {
        young: 1.0,
        poisson: 0.32,
        a_l: 0.475,
        delta,
        gamma_star: 5.08,
        eps: 0.01,
        alpha: 0.001,
        lame_convention: Default::default(),
    }
}

fn pfm_material(delta: f64) -> MaterialInput {
    MaterialInput {
        young: 1.0,
        poisson: 0.3,
        a_l: 0.7,
        delta,
        gamma_star: 5.08,
        eps: 0.01,
        alpha: 0.001,
        lame_convention: Default::default(),
    }
}

/// Square tags shared by the phase-field scenarios.
fn square_tags() -> Vec<TagConfig> {
    vec![
        tag("top", Region::X2 { value: 1.0 }),
        tag("bottom", Region::X2 { value: -1.0 }),
        tag("sides", Region::Any),
    ]
}

/// Prescribed-temperature pair: Θ_D on top, 0 on the bottom.
fn gradient_bc() -> Vec<TemperatureBc> {
    vec![
        TemperatureBc {
            tag: "top".into(),
            value: Schedule::theta_d(),
        },
        TemperatureBc {
            tag: "bottom".into(),
            value: Schedule::constant(0.0),
        },
    ]
}

/// Load rate of the straight-crack opening, per face.
pub const STRAIGHT_CRACK_RATE: f64 = 4.0;

/// Speed of the mixed-mode load, applied at 60° from the crack normal.
pub const MODE12_RATE: f64 = 9.0;

pub fn builtin(name: &str, res: Resolution) -> Result<ScenarioConfig> {
    let base_time = TimeConfig {
        dt: 1e-3,
        t_end: 1.0,
        t_ramp: None,
        output_every: 50,
    };
    let cfg = match name {
        "lshape" => ScenarioConfig {
            name: name.into(),
            model: Model::Biot,
            domain: DomainSpec::LShape,
            mesh: MeshConfig {
                target_h: 0.125,
                corridor: corridor(-0.3, 0.3, -0.3, 0.3, res),
            },
            material: biot_material(0.1),
            thermal_exponent: ThermalExponent::Squared,
            time: TimeConfig {
                dt: 1e-4,
                t_end: 0.1,
                t_ramp: None,
                output_every: 100,
            },
            tags: vec![
                tag("left", Region::X1 { value: -1.0 }),
                tag("right", Region::X1 { value: 1.0 }),
                tag("rest", Region::Any),
            ],
            displacement_bc: vec![
                fixed("left"),
                DisplacementBc {
                    tag: "right".into(),
                    u1: None,
                    u2: Some(Schedule::ramp(-0.1)),
                },
            ],
            temperature_bc: vec![],
            theta_d: 0.0,
            initial_damage: InitialDamage::None,
            initial_temperature: InitialTemperature::Zero,
            observation_area: Some([-0.2, 0.2, -0.2, 0.2]),
            sweep: Sweep {
                delta: vec![0.0, 0.1, 0.5],
                theta_d: vec![],
            },
            freeze_temperature: false,
            solver: SolverOptions::default(),
        },
        "cracked_square" => ScenarioConfig {
            name: name.into(),
            model: Model::Biot,
            domain: DomainSpec::SlitSquare { tip_x: 0.5 },
            mesh: MeshConfig {
                target_h: 0.125,
                corridor: corridor(0.3, 0.8, -0.2, 0.2, res),
            },
            material: biot_material(0.1),
            thermal_exponent: ThermalExponent::Squared,
            time: TimeConfig {
                dt: 1e-4,
                t_end: 0.1,
                t_ramp: None,
                output_every: 100,
            },
            tags: square_tags(),
            displacement_bc: vec![
                DisplacementBc {
                    tag: "top".into(),
                    u1: Some(Schedule::constant(0.0)),
                    u2: Some(Schedule::ramp(1.0)),
                },
                DisplacementBc {
                    tag: "bottom".into(),
                    u1: Some(Schedule::constant(0.0)),
                    u2: Some(Schedule::ramp(-1.0)),
                },
            ],
            temperature_bc: vec![],
            theta_d: 0.0,
            initial_damage: InitialDamage::None,
            initial_temperature: InitialTemperature::Zero,
            observation_area: Some([0.45, 0.65, -0.1, 0.1]),
            sweep: Sweep {
                delta: vec![0.0, 0.1, 0.5],
                theta_d: vec![],
            },
            freeze_temperature: false,
            solver: SolverOptions::default(),
        },
        "straight_crack" => ScenarioConfig {
            name: name.into(),
            model: Model::Tfpfm1,
            domain: DomainSpec::Square,
            mesh: MeshConfig {
                target_h: 0.125,
                corridor: corridor(-1.0, 1.0, -0.08, 0.08, res),
            },
            material: pfm_material(0.5),
            thermal_exponent: ThermalExponent::Squared,
            time: base_time,
            tags: square_tags(),
            displacement_bc: vec![
                DisplacementBc {
                    tag: "top".into(),
                    u1: Some(Schedule::constant(0.0)),
                    u2: Some(Schedule::ramp(STRAIGHT_CRACK_RATE)),
                },
                DisplacementBc {
                    tag: "bottom".into(),
                    u1: Some(Schedule::constant(0.0)),
                    u2: Some(Schedule::ramp(-STRAIGHT_CRACK_RATE)),
                },
            ],
            temperature_bc: vec![
                TemperatureBc {
                    tag: "top".into(),
                    value: Schedule::constant(0.0),
                },
                TemperatureBc {
                    tag: "bottom".into(),
                    value: Schedule::constant(0.0),
                },
            ],
            theta_d: 0.0,
            initial_damage: InitialDamage::EdgeCrack { tip: 0.0, eta: 0.015 },
            initial_temperature: InitialTemperature::Zero,
            observation_area: None,
            sweep: Sweep {
                delta: vec![0.0, 0.1, 0.5],
                theta_d: vec![],
            },
            freeze_temperature: false,
            solver: SolverOptions::default(),
        },
        "mode1_path" => {
            let holes = vec![
                Hole {
                    center: [-0.5, 0.625],
                    radius: 0.15,
                },
                Hole {
                    center: [-0.5, -0.625],
                    radius: 0.15,
                },
            ];
            let disk = |h: &Hole| Region::Disk {
                center: h.center,
                radius: h.radius,
            };
            ScenarioConfig {
                name: name.into(),
                model: Model::Tfpfm1,
                tags: vec![
                    tag("hole_top", disk(&holes[0])),
                    tag("hole_bottom", disk(&holes[1])),
                    tag("right", Region::X1 { value: 1.0 }),
                    tag("top", Region::X2 { value: 1.0 }),
                    tag("bottom", Region::X2 { value: -1.0 }),
                    tag("left", Region::Any),
                ],
                domain: DomainSpec::SquareWithHoles { holes, segments: 32 },
                mesh: MeshConfig {
                    target_h: 0.0625,
                    corridor: corridor(-1.0, 1.0, -0.4, 0.4, res),
                },
                material: pfm_material(0.5),
                thermal_exponent: ThermalExponent::Squared,
                time: base_time,
                displacement_bc: vec![
                    DisplacementBc {
                        tag: "hole_top".into(),
                        u1: None,
                        u2: Some(Schedule::ramp(8.0)),
                    },
                    DisplacementBc {
                        tag: "hole_bottom".into(),
                        u1: None,
                        u2: Some(Schedule::ramp(-8.0)),
                    },
                    DisplacementBc {
                        tag: "right".into(),
                        u1: Some(Schedule::constant(0.0)),
                        u2: None,
                    },
                ],
                temperature_bc: gradient_bc(),
                theta_d: 10.0,
                initial_damage: InitialDamage::EdgeCrack { tip: -0.2, eta: 0.015 },
                initial_temperature: InitialTemperature::Zero,
                observation_area: None,
                sweep: Sweep {
                    delta: vec![],
                    theta_d: vec![0.0, 3.0, 5.0, 7.0, 10.0],
                },
                freeze_temperature: false,
                solver: SolverOptions::default(),
            }
        }
        "mode12_path" => {
            let (s, c) = (
                MODE12_RATE * (std::f64::consts::PI / 3.0).sin(),
                MODE12_RATE * (std::f64::consts::PI / 3.0).cos(),
            );
            ScenarioConfig {
                name: name.into(),
                model: Model::Tfpfm1,
                domain: DomainSpec::Square,
                mesh: MeshConfig {
                    target_h: 0.125,
                    corridor: corridor(-1.0, 1.0, -0.5, 0.5, res),
                },
                material: pfm_material(0.15),
                thermal_exponent: ThermalExponent::Squared,
                time: base_time,
                tags: square_tags(),
                displacement_bc: vec![
                    DisplacementBc {
                        tag: "top".into(),
                        u1: Some(Schedule::ramp(s)),
                        u2: Some(Schedule::ramp(c)),
                    },
                    DisplacementBc {
                        tag: "bottom".into(),
                        u1: Some(Schedule::ramp(-s)),
                        u2: Some(Schedule::ramp(-c)),
                    },
                ],
                temperature_bc: gradient_bc(),
                theta_d: 6.0,
                initial_damage: InitialDamage::CenterCrack {
                    left: -0.5,
                    right: 0.5,
                    eta: 0.015,
                },
                initial_temperature: InitialTemperature::Zero,
                observation_area: None,
                sweep: Sweep {
                    delta: vec![],
                    theta_d: vec![0.0, 2.0, 3.0, 5.0, 6.0],
                },
                freeze_temperature: false,
                solver: SolverOptions::default(),
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown scenario '{other}' (known: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

pub fn to_toml(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
}

pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
    toml::from_str(text).map_err(|e| Error::parse("scenario", e.to_string()))
}

/// Area averages `(𝒲(𝒜), 𝒲*(𝒜))` over triangles whose centroid lies in `area`.
pub fn observe_area_averages(space: &FemSpace, state: &SimState, mat: &MaterialParams, area: [f64; 4]) -> Result<(f64, f64)> {
    let mesh = space.mesh();
    let w = triangle_w(space, mat, state.u.values());
    let ws = triangle_w_star(space, mat, state.u.values(), state.theta.values());
    let (mut a, mut sw, mut sws) = (0.0, 0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        if c[0] >= area[0] && c[0] <= area[1] && c[1] >= area[2] && c[1] <= area[3] {
            let ar = space.geom(t).area;
            a += ar;
            sw += ar * w[t];
            sws += ar * ws[t];
        }
    }
    if a == 0.0 {
        return Err(Error::InvalidInput(format!("observation area {area:?} contains no triangle centroid")));
    }
    Ok((sw / a, sws / a))
}

/// Largest x₁ among nodes on the line x₂ = `line` with z above `threshold`;
/// −∞ when there is none.
pub fn crack_tip_tracker(mesh: &Mesh, z: &[f64], threshold: f64, line: f64) -> f64 {
    mesh.nodes()
        .iter()
        .zip(z)
        .filter(|(p, &zv)| (p[1] - line).abs() <= GEOM_TOL && zv > threshold)
        .map(|(p, _)| p[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackPath {
    /// Column centers and z-weighted centroid heights, left to right.
    pub points: Vec<[f64; 2]>,
    /// `max |x₂|` over the path.
    pub deviation: f64,
    /// Angle in radians between the two lines of the best two-segment fit; 0 for fewer than 4 points.
    pub kink_angle: f64,
}

/// Nodes with `z > threshold` connected through mesh edges to the above-threshold
/// node nearest `seed`. Empty if no node exceeds the threshold.
pub fn damaged_component(mesh: &Mesh, z: &[f64], threshold: f64, seed: Point) -> Vec<bool> {
    let n = mesh.num_nodes();
    let mut keep = vec![false; n];
    let d2 = |p: &Point| (p[0] - seed[0]).powi(2) + (p[1] - seed[1]).powi(2);
    let Some(start) = (0..n)
        .filter(|&i| z[i] > threshold)
        .min_by(|&a, &b| d2(&mesh.nodes()[a]).total_cmp(&d2(&mesh.nodes()[b])))
    else {
        return keep;
    };
    let mut adj = vec![Vec::new(); n];
    for t in mesh.triangles() {
        for k in 0..3 {
            adj[t[k]].push(t[(k + 1) % 3]);
            adj[t[(k + 1) % 3]].push(t[k]);
        }
    }
    let mut stack = vec![start];
    keep[start] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !keep[j] && z[j] > threshold {
                keep[j] = true;
                stack.push(j);
            }
        }
    }
    keep
}

/// Samples the crack as one point per column of width `column` over `[x_from, x_to]`.
/// With a `seed`, only the damaged component containing it counts, so that damage
/// elsewhere (near loaded holes, say) does not enter the path.
pub fn crack_path_extractor(mesh: &Mesh, z: &[f64], threshold: f64, x_from: f64, x_to: f64, column: f64, seed: Option<Point>) -> Result<CrackPath> {
    if !(column > 0.0) || !(x_to > x_from) {
        return Err(Error::InvalidInput("crack path needs a positive column width and x range".into()));
    }
    let keep = seed.map(|s| damaged_component(mesh, z, threshold, s));
    let ncol = ((x_to - x_from) / column).ceil() as usize;
    let mut wsum = vec![0.0; ncol];
    let mut ysum = vec![0.0; ncol];
    for (i, (p, &zv)) in mesh.nodes().iter().zip(z).enumerate() {
        if keep.as_ref().is_some_and(|k| !k[i]) {
            continue;
        }
        if zv > threshold && p[0] >= x_from && p[0] <= x_to {
            let c = (((p[0] - x_from) / column) as usize).min(ncol - 1);
            wsum[c] += zv;
            ysum[c] += zv * p[1];
        }
    }
    let points: Vec<[f64; 2]> = (0..ncol)
        .filter(|&c| wsum[c] > 0.0)
        .map(|c| [x_from + (c as f64 + 0.5) * column, ysum[c] / wsum[c]])
        .collect();
    let deviation = points.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
    Ok(CrackPath {
        kink_angle: two_segment_kink(&points),
        points,
        deviation,
    })
}

fn line_fit(p: &[[f64; 2]]) -> (f64, f64) {
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q[0]).sum::<f64>() / n;
    let my = p.iter().map(|q| q[1]).sum::<f64>() / n;
    let sxx: f64 = p.iter().map(|q| (q[0] - mx).powi(2)).sum();
    let sxy: f64 = p.iter().map(|q| (q[0] - mx) * (q[1] - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse = p.iter().map(|q| (q[1] - my - slope * (q[0] - mx)).powi(2)).sum();
    (slope, sse)
}

fn two_segment_kink(points: &[[f64; 2]]) -> f64 {
    if points.len() < 4 {
        return 0.0;
    }
    let mut best = (f64::INFINITY, 0.0);
    for b in 2..=points.len() - 2 {
        let (s1, e1) = line_fit(&points[..b]);
        let (s2, e2) = line_fit(&points[b..]);
        if e1 + e2 < best.0 {
            best = (e1 + e2, (s2.atan() - s1.atan()).abs());
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates_and_roundtrips() {
        for name in BUILTIN_NAMES {
            for res in [Resolution::Coarse, Resolution::Medium, Resolution::Fine] {
                let c = builtin(name, res).unwrap();
                c.validate().unwrap();
                let back = from_toml(&to_toml(&c).unwrap()).unwrap();
                assert_eq!(back, c, "{name}");
            }
        }
        assert!(builtin("nope", Resolution::Coarse).is_err());
    }

    #[test]
    fn schedule_ramps_then_holds() {
        let s = Schedule {
            value: 1.0,
            rate: 2.0,
            theta_d_scale: 0.5,
        };
        assert_eq!(s.eval(0.1, Some(0.2), 4.0), 1.0 + 2.0 + 0.2);
        assert_eq!(s.eval(0.5, Some(0.2), 4.0), 1.0 + 2.0 + 0.4);
        assert_eq!(s.eval(0.5, None, 0.0), 2.0);
    }

    #[test]
    fn logistic_profiles() {
        let e = InitialDamage::EdgeCrack { tip: 0.0, eta: 0.015 };
        assert!((e.eval([0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!(e.eval([-0.5, 0.0]) > 1.0 - 1e-12);
        assert_eq!(e.eval([50.0, 0.0]), 0.0);
        let c = InitialDamage::CenterCrack {
            left: -0.5,
            right: 0.5,
            eta: 0.015,
        };
        assert!(c.eval([0.0, 0.0]) > 1.0 - 1e-12);
        assert!(c.eval([0.9, 0.0]).abs() < 1e-10 && c.eval([-0.9, 0.0]).abs() < 1e-10);
        for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let v = c.eval([x, 0.001]);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn sweep_expansion() {
        let c = builtin("mode1_path", Resolution::Coarse).unwrap();
        let runs = c.expand_sweep();
        assert_eq!(runs.len(), 5);
        assert_eq!(runs[4].theta_d, 10.0);
        assert!(runs.iter().all(|r| r.sweep == Sweep::default()));
    }

    #[test]
    fn kink_of_a_bent_line() {
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|i| {
                let x = i as f64 * 0.05;
                [x, if x < 0.5 { 0.0 } else { x - 0.5 }]
            })
            .collect();
        let k = two_segment_kink(&pts);
        assert!((k - std::f64::consts::FRAC_PI_4).abs() < 0.1, "{k}");
        assert_eq!(two_segment_kink(&pts[..10]), 0.0);
    }
}
