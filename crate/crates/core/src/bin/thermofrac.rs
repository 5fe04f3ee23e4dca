use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use thermofrac::analytic::ManufacturedCase;
use thermofrac::energy::{audit_dissipation, AuditModel};
use thermofrac::io::{read_energy_csv, run_to_dir, RunOptions};
use thermofrac::mesh::write_mesh;
use thermofrac::scenarios::{builtin, from_toml, to_toml, Resolution, ScenarioConfig, BUILTIN_NAMES};
use thermofrac::steppers::Model;
use thermofrac::verify::{convergence_study, crack_tip_checks, fem_checks};
use thermofrac::Error;

#[derive(Parser)]
#[command(
    name = "thermofrac",
    version,
    about = "Thermal fracturing simulator (Biot thermoelasticity and phase-field models)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct ScenarioArgs {
    /// Builtin scenario name or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// Mesh preset for builtin scenarios.
    #[arg(long, default_value = "coarse")]
    resolution: String,
    /// Override the model.
    #[arg(long)]
    model: Option<String>,
    /// Override the coupling δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Override the prescribed temperature Θ_D.
    #[arg(long = "theta-d")]
    theta_d: Option<f64>,
    /// Override the final time.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write energies, snapshots and a manifest.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        /// Skip VTK snapshots.
        #[arg(long)]
        no_snapshots: bool,
        /// Fixed manifest timestamps, so that repeated runs give identical files.
        #[arg(long)]
        seedless_deterministic: bool,
    },
    /// Run every configuration of the scenario's δ and Θ_D sweep lists.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_snapshots: bool,
        #[arg(long)]
        seedless_deterministic: bool,
    },
    /// Re-check an energy CSV against a discrete energy law.
    Audit {
        #[arg(long, value_enum)]
        model: AuditArg,
        csv: PathBuf,
        /// Start of the hold phase; defaults to the first record.
        #[arg(long)]
        hold_from: Option<f64>,
        /// Allowed per-step increase relative to the total energy at the window start.
        #[arg(long, default_value_t = 1e-8)]
        slack: f64,
    },
    /// Run the analytic-oracle and convergence checks.
    Verify,
    /// Write the mesh of a scenario in the plain-text mesh format.
    Mesh {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a builtin scenario to a TOML file (stdout without --out).
    ExportScenario {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditArg {
    Biot,
    Fpfm,
    Tfpfm1,
    Tfpfm2,
    Tfpfm1Coupled,
}

impl From<AuditArg> for AuditModel {
    fn from(a: AuditArg) -> Self {
        match a {
            AuditArg::Biot => AuditModel::Biot,
            AuditArg::Fpfm => AuditModel::Fpfm,
            AuditArg::Tfpfm1 => AuditModel::Tfpfm1,
            AuditArg::Tfpfm2 => AuditModel::Tfpfm2,
            AuditArg::Tfpfm1Coupled => AuditModel::Tfpfm1Coupled,
        }
    }
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type CliResult = Result<(), Failure>;

fn load(args: &ScenarioArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = if BUILTIN_NAMES.contains(&args.scenario.as_str()) {
        builtin(&args.scenario, args.resolution.parse::<Resolution>()?)?
    } else {
        let path = Path::new(&args.scenario);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        from_toml(&text)?
    };
    if let Some(m) = &args.model {
        cfg.model = m.parse::<Model>()?;
    }
    if let Some(d) = args.delta {
        cfg.material.delta = d;
    }
    if let Some(t) = args.theta_d {
        cfg.theta_d = t;
    }
    if let Some(t) = args.t_end {
        cfg.time.t_end = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(cfg: &ScenarioConfig, out: &Path, snapshots: bool, deterministic: bool) -> CliResult {
    let outcome = run_to_dir(cfg, out, RunOptions { snapshots, deterministic })?;
    let last = outcome.records.last().copied();
    println!("{}: {} steps written to {}", cfg.name, outcome.final_state.step, out.display());
    if let Some(r) = last {
        println!(
            "  t = {:.4}  E_el* = {:.6e}  E_s = {:.6e}  E_th = {:.6e}",
            r.t, r.e_el_star_mod, r.e_s, r.e_th
        );
    }
    if let Some(a) = &outcome.audit {
        println!(
            "  hold-phase audit ({:?}): {} (max increase {:.3e}, slack {:.3e})",
            a.model,
            if a.passed { "pass" } else { "fail" },
            a.max_increase,
            a.slack
        );
    }
    Ok(())
}

fn cmd_audit(model: AuditArg, csv: &Path, hold_from: Option<f64>, slack: f64) -> CliResult {
    let records = read_energy_csv(csv)?;
    let start = match hold_from {
        Some(t) => records
            .iter()
            .position(|r| r.t >= t - 1e-12)
            .ok_or_else(|| Failure::Validation(format!("no record at or after t = {t}")))?,
        None => 0,
    };
    let report = audit_dissipation(&records, model.into(), (start, records.len().saturating_sub(1)), slack)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| Failure::Validation(e.to_string()))?
    );
    if report.passed || report.model.is_informational() {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        Err(Failure::Numerical(format!("{} monotonicity violations", report.violations.len())))
    }
}

fn cmd_verify() -> CliResult {
    let mut ok = true;
    for c in crack_tip_checks()?.into_iter().chain(fem_checks()?) {
        let pass = c.passed();
        ok &= pass;
        println!(
            "{} {:<48} {:.6}  (expected {:.6}, tol {:.0e})",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.expected,
            c.tol
        );
    }
    let poly = convergence_study(ManufacturedCase::Polynomial, &[2, 4, 8], 0.1, 3)?;
    let exact = poly.err_u.iter().chain(&poly.err_theta).all(|e| *e < 1e-9);
    ok &= exact;
    println!(
        "{} polynomial manufactured solution reproduced (max error {:.2e})",
        if exact { "PASS" } else { "FAIL" },
        poly.err_u.iter().chain(&poly.err_theta).fold(0.0f64, |a, b| a.max(*b))
    );
    let trig = convergence_study(ManufacturedCase::Trig, &[8, 16, 32, 64], 0.05, 4)?;
    for (name, ord) in [("u", trig.orders_u()), ("theta", trig.orders_theta())] {
        let pass = ord.iter().all(|o| *o >= 1.9);
        ok &= pass;
        println!(
            "{} trig manufactured L2 orders for {name}: {:?}",
            if pass { "PASS" } else { "FAIL" },
            ord.iter().map(|o| (o * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Numerical("some verification checks failed".into()))
    }
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run {
            scenario,
            out,
            no_snapshots,
            seedless_deterministic,
        } => run_one(&load(&scenario)?, &out, !no_snapshots, seedless_deterministic),
        Command::Sweep {
            scenario,
            out,
            no_snapshots,
            seedless_deterministic,
        } => {
            let cfgs = load(&scenario)?.expand_sweep();
            let results: Vec<CliResult> = cfgs
                .par_iter()
                .map(|c| run_one(c, &out.join(&c.name), !no_snapshots, seedless_deterministic))
                .collect();
            results.into_iter().collect()
        }
        Command::Audit {
            model,
            csv,
            hold_from,
            slack,
        } => cmd_audit(model, &csv, hold_from, slack),
        Command::Verify => cmd_verify(),
        Command::Mesh { scenario, out } => {
            let mesh = load(&scenario)?.build_mesh()?;
            std::fs::write(&out, write_mesh(&mesh)).map_err(|e| Error::io(&out, e))?;
            println!(
                "{} nodes, {} triangles written to {}",
                mesh.num_nodes(),
                mesh.num_triangles(),
                out.display()
            );
            Ok(())
        }
        Command::ExportScenario { scenario, out } => {
            let text = to_toml(&load(&scenario)?)?;
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("THERMOFRAC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
