//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `THERMOFRAC_ACCEPTANCE=1,4,11` restricts the run to the listed criteria.
//! Criterion 6 aggregates over whatever damage runs the selected criteria made.
//! Failed criteria are listed at the end. The exit code is nonzero only when
//! `THERMOFRAC_ACCEPTANCE_STRICT` is set.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use thermofrac::analytic::ManufacturedCase;
use thermofrac::energy::{audit_dissipation, audit_model_for, AuditModel, EnergyLog, EnergyRecord};
use thermofrac::fem::SolverOptions;
use thermofrac::scenarios::{
    builtin, crack_path_extractor, crack_tip_tracker, observe_area_averages, prepare, InitialTemperature, Resolution, ScenarioConfig, Schedule,
    TemperatureBc,
};
use thermofrac::steppers::{run, DamageMonitor, FnObserver, Model, Observer, SimState, Stepper};
use thermofrac::verify::{convergence_study, fem_checks};
use thermofrac::Result;

/// Per-step slack of the energy audits, relative to the total at the window start.
const SLACK: f64 = 1e-8;
/// Damage threshold of the tip tracker and path extractor.
const CRACK: f64 = 0.9;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

struct RunResult {
    records: Vec<EnergyRecord>,
    /// States captured at the requested times.
    snapshots: Vec<SimState>,
    stepper: Stepper,
    last: SimState,
}

#[derive(Default)]
struct Suite {
    damage: Vec<(String, DamageMonitor)>,
}

impl Suite {
    /// Runs `cfg` to its end, logging energies against `model` and keeping the
    /// states closest to each time in `capture`.
    fn run(&mut self, label: &str, cfg: &ScenarioConfig, model: AuditModel, capture: &[f64]) -> Result<RunResult> {
        let p = prepare(cfg)?;
        let dt = p.stepper.dt;
        let mut log = EnergyLog::new(model);
        let mut mon = DamageMonitor::default();
        let mut snapshots = Vec::new();
        let mut grab = FnObserver(|_: &Stepper, s: &SimState| {
            if capture.iter().any(|&t| (s.t - t).abs() < 0.5 * dt) {
                snapshots.push(s.clone());
            }
            Ok(())
        });
        let last = run(&p.stepper, p.initial, p.steps, &mut [&mut log, &mut mon, &mut grab])?;
        if cfg.model.has_damage() {
            self.damage.push((label.to_string(), mon));
        }
        Ok(RunResult {
            records: log.records,
            snapshots,
            stepper: p.stepper,
            last,
        })
    }
}

fn hold_start(records: &[EnergyRecord], t_ramp: f64) -> usize {
    records.iter().position(|r| r.t >= t_ramp - 1e-12).expect("ramp ends inside the run")
}

/// Energy-law audit on the hold phase plus the sign of every dissipation term.
fn hold_audit(r: &RunResult, model: AuditModel, t_ramp: f64) -> Result<Outcome> {
    let a = hold_start(&r.records, t_ramp);
    let b = r.records.len() - 1;
    let rep = audit_dissipation(&r.records, model, (a, b), SLACK)?;
    let dissip_ok = r.records.iter().all(|x| x.d_theta >= 0.0 && x.d_z >= 0.0);
    let pass = rep.violations.is_empty() && dissip_ok;
    Ok(Outcome::new(
        pass,
        format!(
            "{:?} on t ∈ [{:.3}, {:.3}]: max increase {:.3e} vs slack {:.3e}, {} violations, dissipation ≥ 0: {}",
            model,
            r.records[a].t,
            r.records[b].t,
            rep.max_increase,
            rep.slack,
            rep.violations.len(),
            dissip_ok
        ),
    ))
}

fn straight_crack(res: Resolution, model: Model, delta: f64) -> ScenarioConfig {
    let mut c = builtin("straight_crack", res).unwrap();
    c.model = model;
    c.material.delta = delta;
    c.sweep = Default::default();
    c
}

fn c1(_: &mut Suite) -> Result<Outcome> {
    let t_ramp = 0.02;
    let mut cfg = builtin("cracked_square", Resolution::Coarse)?;
    cfg.mesh.target_h = 1.0 / 16.0;
    cfg.mesh.corridor = None;
    cfg.time.t_ramp = Some(t_ramp);
    cfg.time.t_end = 0.06;
    cfg.temperature_bc = ["top", "bottom"]
        .iter()
        .map(|t| TemperatureBc {
            tag: (*t).into(),
            value: Schedule::constant(0.0),
        })
        .collect();
    let mut res = Vec::new();
    let mut audit = None;
    for dt in [1e-3, 5e-4] {
        cfg.time.dt = dt;
        let r = Suite::default().run("c1", &cfg, AuditModel::Biot, &[])?;
        let a = hold_start(&r.records, t_ramp);
        let resid = r.records[a + 1..].iter().map(|x| x.residual.abs()).fold(0.0, f64::max);
        res.push(resid);
        if audit.is_none() {
            audit = Some(hold_audit(&r, AuditModel::Biot, t_ramp)?);
        }
    }
    let audit = audit.unwrap();
    let ratio = res[0] / res[1];
    Ok(Outcome::new(
        audit.pass && ratio >= 1.5,
        format!(
            "{}; max |residual| {:.3e} (Δt = 1e-3), {:.3e} (Δt = 5e-4), ratio {:.2} (need ≥ 1.5)",
            audit.detail, res[0], res[1], ratio
        ),
    ))
}

/// Straight-crack load is ramped to this time and then held.
const C2_RAMP: f64 = 0.6;
const C2_END: f64 = 0.9;

fn held_straight_crack(model: Model) -> ScenarioConfig {
    let mut cfg = straight_crack(Resolution::Coarse, model, 0.5);
    cfg.time.t_ramp = Some(C2_RAMP);
    cfg.time.t_end = C2_END;
    cfg
}

fn c2(s: &mut Suite) -> Result<Outcome> {
    let cfg = held_straight_crack(Model::Fpfm);
    let r = s.run("c2 fpfm held", &cfg, AuditModel::Fpfm, &[])?;
    let grow = r.records.last().unwrap().e_s - r.records[hold_start(&r.records, C2_RAMP)].e_s;
    let mut o = hold_audit(&r, AuditModel::Fpfm, C2_RAMP)?;
    o.detail.push_str(&format!("; E_s grew by {grow:.3} during the hold"));
    Ok(o)
}

fn c3(s: &mut Suite) -> Result<Outcome> {
    let mut cfg = held_straight_crack(Model::Tfpfm1);
    cfg.freeze_temperature = true;
    cfg.initial_temperature = InitialTemperature::Bump { amplitude: 2.0 };
    let model = audit_model_for(cfg.model, true);
    let r = s.run("c3 tfpfm1 frozen", &cfg, model, &[0.0])?;
    let frozen = r.last.theta == r.snapshots[0].theta;
    let mut o = hold_audit(&r, model, C2_RAMP)?;
    o.pass &= frozen;
    o.detail.push_str(&format!(
        "; θ unchanged: {frozen}, range [{:.2}, {:.2}]",
        r.last.theta.min(),
        r.last.theta.max()
    ));
    Ok(o)
}

fn c4(s: &mut Suite) -> Result<Outcome> {
    let cfg = held_straight_crack(Model::Tfpfm2);
    let r = s.run("c4 tfpfm2 held", &cfg, AuditModel::Tfpfm2, &[])?;
    hold_audit(&r, AuditModel::Tfpfm2, C2_RAMP)
}

fn c5(s: &mut Suite) -> Result<Outcome> {
    let mut runs = Vec::new();
    for model in [Model::Fpfm, Model::Tfpfm1, Model::Tfpfm2] {
        let cfg = straight_crack(Resolution::Coarse, model, 0.0);
        let p = prepare(&cfg)?;
        runs.push((model, p.stepper, p.initial, DamageMonitor::default()));
    }
    let tol = 10.0 * SolverOptions::default().rel_tol;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        for (_, stepper, state, mon) in runs.iter_mut() {
            *state = stepper.step(state)?;
            mon.observe(stepper, state)?;
        }
        let reference = &runs[0].2;
        for (_, _, other, _) in &runs[1..] {
            worst = worst
                .max(other.u.max_abs_diff(&reference.u))
                .max(other.z.max_abs_diff(&reference.z))
                .max(other.theta.max_abs_diff(&reference.theta));
        }
    }
    let zmax = runs[0].2.z.max();
    for (model, _, _, mon) in runs {
        s.damage.push((format!("c5 {}", model.name()), mon));
    }
    Ok(Outcome::new(
        worst <= tol,
        format!("max sup-norm difference over 100 steps {worst:.3e} (tol {tol:.1e}), max z {zmax:.3}"),
    ))
}

/// Runs of the crack-speed and δ studies, shared by criteria 7 and 8.
fn speed_runs(s: &mut Suite, cache: &mut Vec<(Model, f64, RunResult)>, model: Model, delta: f64) -> Result<usize> {
    if let Some(i) = cache.iter().position(|(m, d, _)| *m == model && *d == delta) {
        return Ok(i);
    }
    let mut cfg = straight_crack(Resolution::Medium, model, delta);
    cfg.time.t_end = 0.8;
    let r = s.run(
        &format!("straight_crack {} δ={delta}", model.name()),
        &cfg,
        audit_model_for(model, false),
        &[0.4, 0.6, 0.8],
    )?;
    cache.push((model, delta, r));
    Ok(cache.len() - 1)
}

fn c7(s: &mut Suite, cache: &mut Vec<(Model, f64, RunResult)>) -> Result<Outcome> {
    let h = Resolution::Medium.h_min();
    let mut tips = Vec::new();
    for model in [Model::Tfpfm1, Model::Tfpfm2, Model::Fpfm] {
        let i = speed_runs(s, cache, model, 0.5)?;
        let r = &cache[i].2;
        let mesh = r.stepper.space.mesh();
        tips.push(
            r.snapshots
                .iter()
                .map(|st| crack_tip_tracker(mesh, st.z.values(), CRACK, 0.0))
                .collect::<Vec<_>>(),
        );
    }
    let mut pass = true;
    let mut detail = String::new();
    for (k, t) in [0.4, 0.6, 0.8].iter().enumerate() {
        let (a, b, c) = (tips[0][k], tips[1][k], tips[2][k]);
        pass &= a >= b - h && b >= c - h;
        detail.push_str(&format!("t={t}: TF1 {a:.3} TF2 {b:.3} F {c:.3}; "));
    }
    detail.push_str(&format!("reversal allowance {h}"));
    Ok(Outcome::new(pass, detail))
}

fn c8(s: &mut Suite, cache: &mut Vec<(Model, f64, RunResult)>) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = String::new();
    for model in [Model::Tfpfm1, Model::Tfpfm2] {
        let mut es = Vec::new();
        for delta in [0.0, 0.1, 0.5] {
            let i = speed_runs(s, cache, model, delta)?;
            es.push(cache[i].2.records.last().unwrap().e_s);
        }
        pass &= es.windows(2).all(|w| w[1] >= w[0]);
        detail.push_str(&format!(
            "{} E_s(0.8) for δ = 0, 0.1, 0.5: {:.4} {:.4} {:.4}; ",
            model.name(),
            es[0],
            es[1],
            es[2]
        ));
    }
    Ok(Outcome::new(pass, detail.trim_end_matches("; ").to_string()))
}

fn c9(s: &mut Suite) -> Result<Outcome> {
    let mut averages = Vec::new();
    let mut detail = String::new();
    let mut pass = true;
    for delta in [0.1, 0.5, 0.0] {
        let mut cfg = builtin("lshape", Resolution::Coarse)?;
        cfg.material.delta = delta;
        let r = s.run(&format!("lshape δ={delta}"), &cfg, AuditModel::Biot, &[])?;
        let space = &r.stepper.space;
        let area = cfg.observation_area.unwrap();
        let (w, ws) = observe_area_averages(space, &r.last, &r.stepper.mat, area)?;
        averages.push((w, ws));
        if delta == 0.1 {
            // patch-mean div u at the extreme temperature nodes
            let mesh = space.mesh();
            let u = r.last.u.values();
            let div: Vec<f64> = (0..mesh.num_triangles()).map(|t| space.divergence(t, u)).collect();
            let nodal = space.average_to_nodes(&div);
            let th = r.last.theta.values();
            let argmin = (0..th.len()).min_by(|&a, &b| th[a].total_cmp(&th[b])).unwrap();
            let argmax = (0..th.len()).max_by(|&a, &b| th[a].total_cmp(&th[b])).unwrap();
            let ok = nodal[argmin] > 0.0 && nodal[argmax] < 0.0 && ws > w;
            pass &= ok;
            detail.push_str(&format!(
                "t={:.3}: min θ {:.3e} at {:?} (div u {:.3e}), max θ {:.3e} at {:?} (div u {:.3e}); 𝒲* {ws:.4e} vs 𝒲 {w:.4e}; ",
                r.last.t,
                th[argmin],
                mesh.nodes()[argmin],
                nodal[argmin],
                th[argmax],
                mesh.nodes()[argmax],
                nodal[argmax]
            ));
        }
    }
    let (w05, w0) = (averages[1].0, averages[2].0);
    pass &= w05 >= w0;
    detail.push_str(&format!("𝒲(δ=0.5) {w05:.6e} ≥ 𝒲(δ=0) {w0:.6e}"));
    Ok(Outcome::new(pass, detail))
}

fn c10(_: &mut Suite) -> Result<Outcome> {
    let mut cfg = builtin("cracked_square", Resolution::Medium)?;
    cfg.model = Model::Elasticity;
    cfg.time.t_end = cfg.time.dt;
    let p = prepare(&cfg)?;
    let st = p.stepper.step(&p.initial)?;
    let space = &p.stepper.space;
    let mesh = space.mesh();
    let tip = [0.5, 0.0];
    let (mut fg, mut gg, mut ff) = (0.0, 0.0, 0.0);
    let mut samples = Vec::new();
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let (dx, dy) = (c[0] - tip[0], c[1] - tip[1]);
        let r = dx.hypot(dy);
        if (0.05..=0.1).contains(&r) {
            let th = dy.atan2(dx);
            let g = (0.5 * th).cos() / r.sqrt();
            let f = space.divergence(t, st.u.values());
            let a = mesh.area(t);
            samples.push((f, g, a));
            fg += a * f * g;
            gg += a * g * g;
            ff += a * f * f;
        }
    }
    let amp = fg / gg;
    let misfit: f64 = samples.iter().map(|(f, g, a)| a * (f - amp * g).powi(2)).sum::<f64>();
    let rel = (misfit / ff).sqrt();
    Ok(Outcome::new(
        rel <= 0.2 && samples.len() > 20,
        format!(
            "{} ring triangles, fitted amplitude {amp:.4e}, relative RMS misfit {:.1}% (need ≤ 20%)",
            samples.len(),
            100.0 * rel
        ),
    ))
}

fn c11(_: &mut Suite) -> Result<Outcome> {
    let rep = convergence_study(ManufacturedCase::Trig, &[8, 16, 32, 64], 0.05, 4)?;
    let (ou, ot) = (rep.orders_u(), rep.orders_theta());
    let checks = fem_checks()?;
    let orders_ok = ou.iter().chain(&ot).all(|o| *o >= 1.9);
    let checks_ok = checks.iter().all(|c| c.passed());
    let worst = checks.iter().map(|c| (c.value - c.expected).abs()).fold(0.0, f64::max);
    let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ");
    Ok(Outcome::new(
        orders_ok && checks_ok,
        format!(
            "L2 orders u [{}], θ [{}] (need ≥ 1.9); {} element oracles, worst error {worst:.1e} (tol 1e-10)",
            fmt(&ou),
            fmt(&ot),
            checks.len()
        ),
    ))
}

fn c12(s: &mut Suite) -> Result<Outcome> {
    let mut pass = true;
    let mut detail = String::new();
    let mut dev10 = Vec::new();
    for model in [Model::Tfpfm1, Model::Tfpfm2] {
        let mut devs = Vec::new();
        for theta_d in [0.0, 5.0, 10.0] {
            let mut cfg = builtin("mode1_path", Resolution::Coarse)?;
            cfg.model = model;
            cfg.theta_d = theta_d;
            cfg.sweep = Default::default();
            let r = s.run(
                &format!("mode1_path {} Θ_D={theta_d}", model.name()),
                &cfg,
                audit_model_for(model, false),
                &[],
            )?;
            let path = crack_path_extractor(r.stepper.space.mesh(), r.last.z.values(), CRACK, -1.0, 1.0, 0.02, Some([-0.4, 0.0]))?;
            devs.push(path.deviation);
        }
        pass &= devs.windows(2).all(|w| w[1] > w[0]);
        dev10.push(devs[2]);
        detail.push_str(&format!(
            "mode1 {} deviation for Θ_D = 0, 5, 10: {:.3} {:.3} {:.3}; ",
            model.name(),
            devs[0],
            devs[1],
            devs[2]
        ));
    }
    pass &= dev10[1] >= dev10[0];
    let mut kinks = Vec::new();
    for theta_d in [0.0, 3.0, 6.0] {
        let mut cfg = builtin("mode12_path", Resolution::Coarse)?;
        cfg.theta_d = theta_d;
        cfg.sweep = Default::default();
        let r = s.run(&format!("mode12_path Θ_D={theta_d}"), &cfg, audit_model_for(cfg.model, false), &[])?;
        let path = crack_path_extractor(r.stepper.space.mesh(), r.last.z.values(), CRACK, 0.0, 1.0, 0.02, Some([0.4, 0.0]))?;
        kinks.push(path.kink_angle);
    }
    pass &= kinks.windows(2).all(|w| w[1] > w[0]);
    detail.push_str(&format!(
        "mode12 kink angle for Θ_D = 0, 3, 6: {:.1}° {:.1}° {:.1}°",
        kinks[0] * 180.0 / PI,
        kinks[1] * 180.0 / PI,
        kinks[2] * 180.0 / PI
    ));
    Ok(Outcome::new(pass, detail))
}

fn c6(s: &Suite) -> Outcome {
    let mut pass = !s.damage.is_empty();
    let mut worst_inc = f64::INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (label, m) in &s.damage {
        let ok = m.min_increment >= 0.0 && m.min_z >= -1e-12 && m.max_z <= 1.0 + 1e-12;
        if !ok {
            eprintln!("  irreversibility or bounds broken in {label}: {m:?}");
        }
        pass &= ok;
        worst_inc = worst_inc.min(m.min_increment);
        lo = lo.min(m.min_z);
        hi = hi.max(m.max_z);
    }
    Outcome::new(
        pass,
        format!("{} damage runs, min increment {worst_inc:.3e}, z ∈ [{lo:.3e}, {hi:.15}]", s.damage.len()),
    )
}

fn report(id: usize, name: &str, clock: Instant, out: Result<Outcome>) -> bool {
    let secs = clock.elapsed().as_secs_f64();
    match out {
        Ok(o) => {
            println!(
                "{} criterion {id:>2} ({name}): {} [{secs:.0} s]",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            o.pass
        }
        Err(e) => {
            println!("FAIL criterion {id:>2} ({name}): error: {e} [{secs:.0} s]");
            false
        }
    }
}

fn main() {
    let selected: Option<BTreeSet<usize>> = std::env::var("THERMOFRAC_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let want = |id: usize| selected.as_ref().is_none_or(|s| s.contains(&id));
    let mut suite = Suite::default();
    let mut cache = Vec::new();
    let mut failed = Vec::new();
    let mut go = |id: usize,
                  name: &str,
                  f: &mut dyn FnMut(&mut Suite, &mut Vec<(Model, f64, RunResult)>) -> Result<Outcome>,
                  suite: &mut Suite,
                  cache: &mut Vec<(Model, f64, RunResult)>| {
        if want(id) {
            let clock = Instant::now();
            if !report(id, name, clock, f(suite, cache)) {
                failed.push(id);
            }
        }
    };
    go(1, "Biot energy law", &mut |s, _| c1(s), &mut suite, &mut cache);
    go(2, "F-PFM energy law", &mut |s, _| c2(s), &mut suite, &mut cache);
    go(3, "TF-PFM1 energy law, frozen θ", &mut |s, _| c3(s), &mut suite, &mut cache);
    go(4, "TF-PFM2 energy law", &mut |s, _| c4(s), &mut suite, &mut cache);
    go(5, "decoupling at δ = 0", &mut |s, _| c5(s), &mut suite, &mut cache);
    go(7, "crack-speed ordering", &mut c7, &mut suite, &mut cache);
    go(8, "δ-monotonicity of E_s", &mut c8, &mut suite, &mut cache);
    go(9, "thermal sign pattern", &mut |s, _| c9(s), &mut suite, &mut cache);
    go(10, "crack-tip div u profile", &mut |s, _| c10(s), &mut suite, &mut cache);
    go(11, "convergence and element oracles", &mut |s, _| c11(s), &mut suite, &mut cache);
    go(12, "crack-path response", &mut |s, _| c12(s), &mut suite, &mut cache);
    if want(6) {
        let clock = Instant::now();
        if !report(6, "irreversibility and bounds", clock, Ok(c6(&suite))) {
            failed.push(6);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        // failures are reported, not fatal, unless strict mode asks for a nonzero exit
        if std::env::var_os("THERMOFRAC_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
