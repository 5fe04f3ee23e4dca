//! Snapshot files, the energy CSV log, run manifests and the run driver.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{audit_dissipation, audit_model_for, triangle_w, triangle_w_star, AuditReport, EnergyLog, EnergyRecord};
use crate::error::{Error, Result};
use crate::fem::FemSpace;
use crate::physics::MaterialParams;
use crate::scenarios::{prepare, to_toml, ScenarioConfig};
use crate::steppers::{run, DamageMonitor, Observer, SimState, Stepper};

/// Version of the energy CSV layout, written into its first line.
pub const ENERGY_SCHEMA_VERSION: u32 = 1;
pub const ENERGY_COLUMNS: [&str; 10] = [
    "t",
    "E_el",
    "E_el_star",
    "E_th",
    "E_el_mod",
    "E_el_star_mod",
    "E_s",
    "D_theta",
    "D_z",
    "residual",
];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK unstructured grid with θ, z, u at points and div u, W, W* on cells.
pub fn vtk_snapshot(space: &FemSpace, mat: &MaterialParams, state: &SimState) -> String {
    let mesh = space.mesh();
    let (n, m) = (mesh.num_nodes(), mesh.num_triangles());
    let u = state.u.values();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 2.0\n");
    let _ = writeln!(s, "thermofrac step {} t {}", state.step, num(state.t));
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(0.0));
    }
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    for (name, f) in [("theta", &state.theta), ("z", &state.z)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in f.values() {
            s.push_str(&num(*v));
            s.push('\n');
        }
    }
    s.push_str("VECTORS u double\n");
    for i in 0..n {
        let _ = writeln!(s, "{} {} {}", num(u[2 * i]), num(u[2 * i + 1]), num(0.0));
    }
    let div: Vec<f64> = (0..m).map(|t| space.divergence(t, u)).collect();
    let w = triangle_w(space, mat, u);
    let ws = triangle_w_star(space, mat, u, state.theta.values());
    let _ = writeln!(s, "CELL_DATA {m}");
    for (name, vals) in [("div_u", &div), ("W", &w), ("W_star", &ws)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in vals {
            s.push_str(&num(*v));
            s.push('\n');
        }
    }
    s
}

pub fn write_snapshot(path: &Path, space: &FemSpace, mat: &MaterialParams, state: &SimState) -> Result<()> {
    write_file(path, &vtk_snapshot(space, mat, state))
}

/// Contents of a legacy VTK file as written by [`vtk_snapshot`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkData {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
}

/// Parses the subset of legacy ASCII VTK used by the snapshot writer.
pub fn read_vtk(text: &str) -> Result<VtkData> {
    let err = |m: String| Error::parse("vtk", m);
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("# vtk DataFile Version 2.0") {
        return Err(err("missing legacy VTK header".into()));
    }
    let mut out = VtkData {
        title: lines.next().unwrap_or_default().to_string(),
        ..Default::default()
    };
    let mut tokens = lines.flat_map(str::split_whitespace);
    let mut next = |what: &str| tokens.next().ok_or_else(|| err(format!("unexpected end of file reading {what}")));
    fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| Error::parse("vtk", format!("bad {what} '{s}'")))
    }
    if next("format")? != "ASCII" {
        return Err(err("only ASCII files are supported".into()));
    }
    if (next("dataset")?, next("dataset")?) != ("DATASET", "UNSTRUCTURED_GRID") {
        return Err(err("expected DATASET UNSTRUCTURED_GRID".into()));
    }
    let mut section = "";
    let mut count = 0usize;
    while let Ok(key) = next("section") {
        match key {
            "POINTS" => {
                let n: usize = parse(next("count")?, "point count")?;
                next("type")?;
                for _ in 0..n {
                    out.points.push([
                        parse(next("x")?, "coordinate")?,
                        parse(next("y")?, "coordinate")?,
                        parse(next("z")?, "coordinate")?,
                    ]);
                }
            }
            "CELLS" => {
                let m: usize = parse(next("count")?, "cell count")?;
                next("size")?;
                for _ in 0..m {
                    let k: usize = parse(next("cell")?, "cell size")?;
                    let c = (0..k).map(|_| parse(next("index")?, "index")).collect::<Result<Vec<usize>>>()?;
                    out.cells.push(c);
                }
            }
            "CELL_TYPES" => {
                let m: usize = parse(next("count")?, "cell count")?;
                for _ in 0..m {
                    out.cell_types.push(parse(next("type")?, "cell type")?);
                }
            }
            "POINT_DATA" | "CELL_DATA" => {
                section = key;
                count = parse(next("count")?, "data count")?;
            }
            "SCALARS" => {
                let name = next("name")?.to_string();
                next("type")?;
                let ncomp = next("components")?;
                if ncomp != "1" {
                    return Err(err(format!("scalar '{name}' has {ncomp} components")));
                }
                if (next("lookup")?, next("lookup")?) != ("LOOKUP_TABLE", "default") {
                    return Err(err(format!("scalar '{name}' lacks LOOKUP_TABLE default")));
                }
                let vals = (0..count).map(|_| parse(next("value")?, "value")).collect::<Result<Vec<f64>>>()?;
                match section {
                    "POINT_DATA" => out.point_scalars.insert(name, vals),
                    "CELL_DATA" => out.cell_scalars.insert(name, vals),
                    _ => return Err(err(format!("scalar '{name}' outside a data section"))),
                };
            }
            "VECTORS" => {
                let name = next("name")?.to_string();
                next("type")?;
                if section != "POINT_DATA" {
                    return Err(err(format!("vector '{name}' outside POINT_DATA")));
                }
                let vals = (0..count)
                    .map(|_| Ok([parse(next("v")?, "value")?, parse(next("v")?, "value")?, parse(next("v")?, "value")?]))
                    .collect::<Result<Vec<[f64; 3]>>>()?;
                out.point_vectors.insert(name, vals);
            }
            other => return Err(err(format!("unknown keyword '{other}'"))),
        }
    }
    Ok(out)
}

/// Energy log in the frozen CSV layout.
pub fn energy_csv(records: &[EnergyRecord]) -> String {
    let mut s = format!("# thermofrac energy log, schema {ENERGY_SCHEMA_VERSION}\n");
    s.push_str(&ENERGY_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        let row = [
            r.t,
            r.e_el,
            r.e_el_star,
            r.e_th,
            r.e_el_mod,
            r.e_el_star_mod,
            r.e_s,
            r.d_theta,
            r.d_z,
            r.residual,
        ];
        s.push_str(&row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

pub fn parse_energy_csv(text: &str) -> Result<Vec<EnergyRecord>> {
    let err = |m: String| Error::parse("energy csv", m);
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| err("empty file".into()))?;
    let version = head
        .strip_prefix("# thermofrac energy log, schema ")
        .ok_or_else(|| err("missing schema header".into()))?;
    if version.trim() != ENERGY_SCHEMA_VERSION.to_string() {
        return Err(err(format!("unsupported schema version {version}")));
    }
    let cols: Vec<&str> = lines.next().ok_or_else(|| err("missing column header".into()))?.split(',').collect();
    if cols != ENERGY_COLUMNS {
        return Err(err(format!("unexpected columns {cols:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| err(format!("row {}: bad number '{f}'", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != ENERGY_COLUMNS.len() {
            return Err(err(format!("row {} has {} fields", i + 1, v.len())));
        }
        out.push(EnergyRecord {
            t: v[0],
            e_el: v[1],
            e_el_star: v[2],
            e_th: v[3],
            e_el_mod: v[4],
            e_el_star_mod: v[5],
            e_s: v[6],
            d_theta: v[7],
            d_z: v[8],
            residual: v[9],
        });
    }
    Ok(out)
}

pub fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    write_file(path, &energy_csv(records))
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRecord>> {
    parse_energy_csv(&read_file(path)?)
}

/// Writes a VTK snapshot of every `every`-th state into `dir`.
pub struct SnapshotWriter {
    pub dir: PathBuf,
    pub every: usize,
    pub files: Vec<String>,
}

impl SnapshotWriter {
    pub fn new(dir: impl Into<PathBuf>, every: usize) -> Self {
        Self {
            dir: dir.into(),
            every: every.max(1),
            files: Vec::new(),
        }
    }
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, stepper: &Stepper, state: &SimState) -> Result<()> {
        if state.step.is_multiple_of(self.every) {
            let name = format!("snapshot_{:06}.vtk", state.step);
            write_snapshot(&self.dir.join(&name), &stepper.space, &stepper.mat, state)?;
            self.files.push(name);
        }
        Ok(())
    }
}

/// Provenance of one run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    /// SHA-256 of the scenario TOML actually run.
    pub config_hash: String,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    pub status: String,
    pub energy_csv: String,
    pub snapshots: Vec<String>,
    pub audit_report: Option<String>,
    pub config_file: String,
}

impl RunManifest {
    /// Every listed file that is missing from `dir`.
    pub fn missing_files(&self, dir: &Path) -> Vec<String> {
        std::iter::once(&self.energy_csv)
            .chain(&self.snapshots)
            .chain(self.audit_report.iter())
            .chain(std::iter::once(&self.config_file))
            .filter(|f| !dir.join(f).is_file())
            .cloned()
            .collect()
    }
}

pub fn config_hash(cfg: &ScenarioConfig) -> Result<String> {
    let digest = Sha256::digest(to_toml(cfg)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Write a snapshot every `output_every` steps.
    pub snapshots: bool,
    /// Fixed timestamps in the manifest so that repeated runs are byte-identical.
    pub deterministic: bool,
}

pub struct RunOutcome {
    pub records: Vec<EnergyRecord>,
    pub audit: Option<AuditReport>,
    pub damage: DamageMonitor,
    pub final_state: SimState,
    pub manifest: RunManifest,
}

/// Index window `[first record with t ≥ t_ramp, last]`, or the whole series when
/// the displacement data never change.
pub fn hold_window(cfg: &ScenarioConfig, stepper: &Stepper, records: &[EnergyRecord]) -> Option<(usize, usize)> {
    let last = records.len().checked_sub(1)?;
    let start = match cfg.time.t_ramp {
        Some(r) => records.iter().position(|rec| rec.t >= r - 1e-12)?,
        None if stepper.bc.displacement_held(&stepper.space, 0.0, cfg.time.t_end) => 0,
        None => return None,
    };
    (start < last).then_some((start, last))
}

fn now(deterministic: bool) -> String {
    if deterministic {
        "1970-01-01T00:00:00Z".to_string()
    } else {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

/// Runs `cfg`, writing `energies.csv`, optional snapshots, `audit.json` (when the
/// run has a hold phase), `scenario.toml` and `manifest.json` into `out`.
/// Partial outputs are still written when stepping fails.
pub fn run_to_dir(cfg: &ScenarioConfig, out: &Path, opts: RunOptions) -> Result<RunOutcome> {
    let started = now(opts.deterministic);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let toml = to_toml(cfg)?;
    write_file(&out.join("scenario.toml"), &toml)?;
    let prepared = prepare(cfg)?;
    let mut log = EnergyLog::new(audit_model_for(cfg.model, cfg.freeze_temperature));
    let mut damage = DamageMonitor::default();
    let mut snaps = SnapshotWriter::new(out, cfg.time.output_every);
    let result = {
        let mut obs: Vec<&mut dyn Observer> = vec![&mut log, &mut damage];
        if opts.snapshots {
            obs.push(&mut snaps);
        }
        run(&prepared.stepper, prepared.initial, prepared.steps, &mut obs)
    };
    write_energy_csv(&out.join("energies.csv"), &log.records)?;
    let audit = match hold_window(cfg, &prepared.stepper, &log.records) {
        Some(w) if result.is_ok() => Some(audit_dissipation(&log.records, log.model, w, 1e-8)?),
        _ => None,
    };
    if let Some(a) = &audit {
        let text = serde_json::to_string_pretty(a).map_err(|e| Error::Config(e.to_string()))?;
        write_file(&out.join("audit.json"), &text)?;
    }
    let manifest = RunManifest {
        scenario: cfg.name.clone(),
        config_hash: config_hash(cfg)?,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(opts.deterministic),
        status: match &result {
            Ok(_) => "completed".into(),
            Err(e) => format!("failed: {e}"),
        },
        energy_csv: "energies.csv".into(),
        snapshots: snaps.files.clone(),
        audit_report: audit.as_ref().map(|_| "audit.json".to_string()),
        config_file: "scenario.toml".into(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&out.join("manifest.json"), &text)?;
    let final_state = result?;
    Ok(RunOutcome {
        records: log.records,
        audit,
        damage,
        final_state,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, -1.5, 1.0 / 3.0, 1e-300, f64::MAX, 2.0f64.sqrt()] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert!(num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        assert!(parse_energy_csv("t,E_el\n1,2\n").is_err());
        let bad = format!("# thermofrac energy log, schema 99\n{}\n", ENERGY_COLUMNS.join(","));
        assert!(parse_energy_csv(&bad).is_err());
    }
}
