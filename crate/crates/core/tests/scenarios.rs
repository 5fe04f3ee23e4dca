use std::sync::Arc;
use std::time::Instant;

use thermofrac::fem::{FemSpace, NodalField};
use thermofrac::mesh::{generate, Corridor, DomainSpec};
use thermofrac::scenarios::{
    builtin, crack_path_extractor, crack_tip_tracker, damaged_component, from_toml, observe_area_averages, prepare, to_toml, InitialDamage,
    Resolution, BUILTIN_NAMES,
};
use thermofrac::steppers::{SimState, StepDiagnostics};
use thermofrac::Error;

fn crack_mesh() -> thermofrac::mesh::Mesh {
    let c = Corridor {
        x_min: -1.0,
        x_max: 1.0,
        y_min: -0.1,
        y_max: 0.1,
        h_min: 0.01,
    };
    generate(&DomainSpec::Square, 0.125, Some(&c)).unwrap()
}

#[test]
fn every_builtin_takes_a_few_steps() {
    for name in BUILTIN_NAMES {
        let cfg = builtin(name, Resolution::Coarse).unwrap();
        let clock = Instant::now();
        let p = prepare(&cfg).unwrap();
        let mut s = p.initial;
        for _ in 0..3 {
            s = p.stepper.step(&s).unwrap();
        }
        let secs = clock.elapsed().as_secs_f64();
        assert_eq!(s.step, 3);
        assert!((s.t - 3.0 * cfg.time.dt).abs() < 1e-15);
        for f in [&s.u, &s.theta, &s.z] {
            assert!(f.values().iter().all(|v| v.is_finite()), "{name}");
        }
        assert!(secs < 10.0, "{name} took {secs:.1} s");
    }
}

#[test]
fn sweep_names_and_values() {
    let cfg = builtin("straight_crack", Resolution::Coarse).unwrap();
    let runs = cfg.expand_sweep();
    assert_eq!(runs.len(), 3);
    assert_eq!(runs.iter().map(|c| c.material.delta).collect::<Vec<_>>(), vec![0.0, 0.1, 0.5]);
    assert!(runs
        .iter()
        .all(|c| c.sweep.delta.is_empty() && c.name.starts_with("straight_crack_delta")));
    let m = builtin("mode1_path", Resolution::Coarse).unwrap().expand_sweep();
    assert_eq!(m.iter().map(|c| c.theta_d).collect::<Vec<_>>(), vec![0.0, 3.0, 5.0, 7.0, 10.0]);
}

#[test]
fn malformed_configs_are_rejected() {
    let mut cfg = builtin("lshape", Resolution::Coarse).unwrap();
    cfg.time.dt = -1.0;
    assert!(cfg.validate().is_err());
    let mut cfg = builtin("lshape", Resolution::Coarse).unwrap();
    cfg.displacement_bc[0].tag = "missing".into();
    assert!(matches!(prepare(&cfg), Err(Error::Config(_))));
    let text = to_toml(&builtin("lshape", Resolution::Coarse).unwrap()).unwrap();
    assert!(from_toml(&text.replace("model = \"biot\"", "model = \"other\"")).is_err());
    assert!(from_toml("name = 3").is_err());
}

#[test]
fn zero_state_area_averages_vanish() {
    let cfg = builtin("lshape", Resolution::Coarse).unwrap();
    let p = prepare(&cfg).unwrap();
    let (w, ws) = observe_area_averages(&p.stepper.space, &p.initial, &p.stepper.mat, cfg.observation_area.unwrap()).unwrap();
    assert_eq!((w, ws), (0.0, 0.0));
    assert!(observe_area_averages(&p.stepper.space, &p.initial, &p.stepper.mat, [5.0, 6.0, 5.0, 6.0]).is_err());
}

#[test]
fn area_average_of_a_uniform_strain() {
    let space = FemSpace::new(Arc::new(generate(&DomainSpec::Square, 0.25, None).unwrap()));
    let mat = builtin("lshape", Resolution::Coarse).unwrap().material_params().unwrap();
    let n = space.num_nodes();
    let u = NodalField::vector_from_fn(space.mesh(), |p| [0.01 * p[0], 0.0]);
    let s = SimState {
        step: 0,
        t: 0.0,
        u: u.clone(),
        theta: NodalField::scalar_from_fn(space.mesh(), |_| 0.5),
        z: NodalField::scalar_zeros(n),
        u_prev: u,
        theta_prev: NodalField::scalar_zeros(n),
        z_prev: NodalField::scalar_zeros(n),
        diagnostics: StepDiagnostics::default(),
    };
    let (w, ws) = observe_area_averages(&space, &s, &mat, [-0.5, 0.5, -0.5, 0.5]).unwrap();
    let e = 0.01;
    assert!((w - (mat.lambda + 2.0 * mat.mu) * e * e).abs() < 1e-15);
    let (a, b) = (e - mat.a_l * 0.5, -mat.a_l * 0.5);
    let expect = mat.lambda * (a + b).powi(2) + 2.0 * mat.mu * (a * a + b * b);
    assert!((ws - expect).abs() < 1e-12 * expect);
}

#[test]
fn tip_of_the_logistic_profile() {
    let mesh = crack_mesh();
    for tip in [-0.3, 0.0, 0.25] {
        let prof = InitialDamage::EdgeCrack { tip, eta: 0.015 };
        let z: Vec<f64> = mesh.nodes().iter().map(|p| prof.eval(*p)).collect();
        let found = crack_tip_tracker(&mesh, &z, 0.5, 0.0);
        assert!((found - tip).abs() <= 0.01 + 1e-12, "tip {tip}: {found}");
    }
    let z = vec![0.0; mesh.num_nodes()];
    assert_eq!(crack_tip_tracker(&mesh, &z, 0.5, 0.0), f64::NEG_INFINITY);
}

#[test]
fn straight_and_kinked_paths() {
    let mesh = crack_mesh();
    let prof = InitialDamage::CenterCrack {
        left: -0.8,
        right: 0.8,
        eta: 0.015,
    };
    let z: Vec<f64> = mesh.nodes().iter().map(|p| prof.eval(*p)).collect();
    let path = crack_path_extractor(&mesh, &z, 0.5, -0.7, 0.7, 0.05, Some([0.0, 0.0])).unwrap();
    assert!(path.points.len() >= 20);
    assert!(path.deviation < 1e-9, "{}", path.deviation);
    assert!(path.kink_angle < 1e-9);

    // a crack along x₂ = 0 for x₁ < 0 and along x₂ = 0.1 x₁ beyond
    let bent = |p: [f64; 2]| {
        let c = if p[0] < 0.0 { 0.0 } else { 0.1 * p[0] };
        (-((p[1] - c) / 0.015f64).powi(2)).exp()
    };
    let z: Vec<f64> = mesh.nodes().iter().map(|p| bent(*p)).collect();
    let path = crack_path_extractor(&mesh, &z, 0.5, -0.8, 0.8, 0.05, None).unwrap();
    assert!((path.deviation - 0.08).abs() < 0.01, "{}", path.deviation);
    assert!((path.kink_angle - 0.1f64.atan()).abs() < 0.02, "{}", path.kink_angle);
    assert!(crack_path_extractor(&mesh, &z, 0.5, 0.8, -0.8, 0.05, None).is_err());
}

#[test]
fn seeded_component_ignores_isolated_damage() {
    let mesh = crack_mesh();
    let prof = InitialDamage::CenterCrack {
        left: -0.5,
        right: 0.0,
        eta: 0.015,
    };
    let z: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|p| prof.eval(*p).max(if (p[0] - 0.6).hypot(p[1] - 0.5) < 0.1 { 1.0 } else { 0.0 }))
        .collect();
    let keep = damaged_component(&mesh, &z, 0.5, [-0.4, 0.0]);
    for (p, k) in mesh.nodes().iter().zip(&keep) {
        if *k {
            assert!(p[0] <= 0.05 && p[1].abs() < 0.05);
        }
    }
    let seeded = crack_path_extractor(&mesh, &z, 0.5, -1.0, 1.0, 0.05, Some([-0.4, 0.0])).unwrap();
    let unseeded = crack_path_extractor(&mesh, &z, 0.5, -1.0, 1.0, 0.05, None).unwrap();
    assert!(seeded.deviation < 1e-9);
    assert!(unseeded.deviation > 0.4);
}
