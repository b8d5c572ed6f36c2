//! Recomputes references and invariants against a finished run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use impurity_vqe::ed::exact_moment_matrices;
use impurity_vqe::greens::{CMat, Pole, PoleRepresentation, SpectralMoments, SpectralSector};
use impurity_vqe::moments::{runs_to_moments, MomentRun};
use impurity_vqe::vqe::VqeProblem;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FitKind};
use crate::output::{write_json, ParsedTable};
use crate::pipeline::Setup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported for information; never fails the run.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub directory: PathBuf,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        });
    }

    fn info(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            status: Status::Info,
            detail: detail.into(),
        });
    }

    fn result(&mut self, name: &str, r: Result<String, String>) {
        match r {
            Ok(d) => self.push(name, true, d),
            Err(d) => self.push(name, false, d),
        }
    }
}

/// Energies are compared to this absolute tolerance (scaled by `max(1, |E|)`).
pub const ENERGY_TOLERANCE: f64 = 1e-9;
/// Relative tolerance of recomputed exact moments and pole round trips.
pub const MOMENT_TOLERANCE: f64 = 1e-6;
/// Width of the statistical bands in standard errors.
pub const SIGMA_BAND: f64 = 4.0;

#[derive(Deserialize)]
struct VqeFile {
    stages: Vec<VqeStageFile>,
}

#[derive(Deserialize)]
struct VqeStageFile {
    spec: impurity_vqe::ansatz::AnsatzSpec,
    result: impurity_vqe::vqe::VqeResult,
}

#[derive(Deserialize)]
struct MomentsFile {
    orbitals: Vec<usize>,
    particle: Vec<RunFile>,
    hole: Vec<RunFile>,
}

#[derive(Deserialize)]
struct RunFile {
    run: MomentRun,
}

#[derive(Deserialize)]
struct LanczosFile {
    n_mom: usize,
    source: String,
    hole: impurity_vqe::greens::LanczosInfo,
    particle: impurity_vqe::greens::LanczosInfo,
}

#[derive(Deserialize)]
struct MetadataFile {
    lanczos: Vec<LanczosFile>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        if let Ok(entries) = std::fs::read_dir(&d) {
            for e in entries.flatten() {
                let p = e.path();
                if p.is_dir() {
                    stack.push(p);
                } else if p.extension().is_some_and(|x| x == "csv") {
                    out.push(p);
                }
            }
        }
    }
    out.sort();
    out
}

fn sector_of(name: &str) -> Result<SpectralSector, String> {
    match name {
        "particle" => Ok(SpectralSector::Particle),
        "hole" => Ok(SpectralSector::Hole),
        other => Err(format!("unknown sector {other}")),
    }
}

fn max_abs_diff(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
}

/// Moment matrices from `moments.csv`, either the stored (`re`, `im`) or
/// the ED (`ed_re`, `ed_im`) columns.
fn read_moments(t: &ParsedTable, ed: bool) -> Result<SpectralMoments, String> {
    let (cre, cim) = if ed {
        (t.column("ed_re")?, t.column("ed_im")?)
    } else {
        (t.column("re")?, t.column("im")?)
    };
    let (cs, cm, ci, cj, coi) = (t.column("sector")?, t.column("m")?, t.column("i")?, t.column("j")?, t.column("orbital_i")?);
    let mut orbitals = BTreeMap::new();
    let (mut n, mut n_ord) = (0, 0);
    for r in 0..t.rows.len() {
        n = n.max(t.usize(r, ci)? + 1);
        n_ord = n_ord.max(t.usize(r, cm)? + 1);
        orbitals.insert(t.usize(r, ci)?, t.usize(r, coi)?);
    }
    let mut m = SpectralMoments {
        orbitals: orbitals.values().copied().collect(),
        hole: vec![DMatrix::zeros(n, n); n_ord],
        particle: vec![DMatrix::zeros(n, n); n_ord],
    };
    for r in 0..t.rows.len() {
        let z = Complex64::new(t.f64(r, cre)?, t.f64(r, cim)?);
        let mats = match sector_of(&t.rows[r][cs])? {
            SpectralSector::Particle => &mut m.particle,
            SpectralSector::Hole => &mut m.hole,
        };
        mats[t.usize(r, cm)?][(t.usize(r, ci)?, t.usize(r, cj)?)] = z;
    }
    Ok(m)
}

fn read_poles(t: &ParsedTable, orbitals: &[usize]) -> Result<BTreeMap<String, PoleRepresentation>, String> {
    let (csrc, cs, cp, ce, ci, cj, cre, cim) = (
        t.column("source")?,
        t.column("sector")?,
        t.column("pole")?,
        t.column("energy")?,
        t.column("i")?,
        t.column("j")?,
        t.column("re")?,
        t.column("im")?,
    );
    let n = orbitals.len();
    let mut grouped: BTreeMap<String, BTreeMap<usize, Pole>> = BTreeMap::new();
    for r in 0..t.rows.len() {
        let pole = grouped
            .entry(t.rows[r][csrc].clone())
            .or_default()
            .entry(t.usize(r, cp)?)
            .or_insert_with(|| Pole {
                energy: 0.0,
                residue: DMatrix::zeros(n, n),
                sector: SpectralSector::Particle,
            });
        pole.energy = t.f64(r, ce)?;
        pole.sector = sector_of(&t.rows[r][cs])?;
        let (i, j) = (t.usize(r, ci)?, t.usize(r, cj)?);
        if i >= n || j >= n {
            return Err(format!("pole residue index ({i}, {j}) out of range"));
        }
        pole.residue[(i, j)] = Complex64::new(t.f64(r, cre)?, t.f64(r, cim)?);
    }
    Ok(grouped
        .into_iter()
        .map(|(s, poles)| {
            (
                s,
                PoleRepresentation {
                    orbitals: orbitals.to_vec(),
                    poles: poles.into_values().collect(),
                },
            )
        })
        .collect())
}

fn pole_moments(p: &PoleRepresentation, sector: SpectralSector, n_ord: usize) -> Vec<CMat> {
    let n = p.n_orbitals();
    (0..n_ord)
        .map(|m| {
            p.poles
                .iter()
                .filter(|q| q.sector == sector)
                .fold(DMatrix::zeros(n, n), |acc, q| acc + q.residue.scale(q.energy.powi(m as i32)))
        })
        .collect()
}

/// Runs every check against `dir` and writes `verify_report.json` there.
pub fn verify(dir: &Path) -> Result<Report, String> {
    for required in ["resolved_config.json", "metadata.json", "energies.csv"] {
        if !dir.join(required).is_file() {
            return Err(format!("missing artifact {}", dir.join(required).display()));
        }
    }
    let cfg = ExperimentConfig::load(&dir.join("resolved_config.json"))?;
    let mut report = Report {
        directory: dir.to_path_buf(),
        passed: true,
        checks: Vec::new(),
    };

    let digest = cfg.digest();
    let mut tables = BTreeMap::new();
    for path in csv_files(dir) {
        let t = ParsedTable::read(&path)?;
        let rel = path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().to_string();
        tables.insert(rel, t);
    }
    let bad: Vec<&String> = tables.iter().filter(|(_, t)| t.meta("config_sha256") != Some(digest.as_str())).map(|(n, _)| n).collect();
    report.push(
        "config_digest",
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} files carry {digest}", tables.len())
        } else {
            format!("digest mismatch in {bad:?}")
        },
    );

    let setup = Setup::new(&cfg).map_err(|e| e.to_string())?;
    let e_ed = setup.ed.energy;
    let tol_e = ENERGY_TOLERANCE * e_ed.abs().max(1.0);
    let energies = &tables["energies.csv"];
    let (c_e, c_ed, c_label) = (energies.column("energy")?, energies.column("ed_energy")?, energies.column("label")?);
    let mut worst_ed: f64 = 0.0;
    let mut bound = Ok(String::new());
    for r in 0..energies.rows.len() {
        worst_ed = worst_ed.max((energies.f64(r, c_ed)? - e_ed).abs());
        let e = energies.f64(r, c_e)?;
        if e < e_ed - tol_e {
            bound = Err(format!("{} energy {e} below ED {e_ed}", energies.rows[r][c_label]));
        }
    }
    report.push("ed_reference", worst_ed <= tol_e, format!("recomputed E_ED = {e_ed:.12}, max deviation {worst_ed:.2e}"));
    report.result(
        "variational_bound",
        bound.map(|_| format!("{} energies >= E_ED - {tol_e:.0e}", energies.rows.len())),
    );

    if dir.join("vqe.json").is_file() {
        let vqe: VqeFile = read_json(&dir.join("vqe.json"))?;
        let reference = setup.reference().map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for s in &vqe.stages {
            let problem = VqeProblem::new(&s.spec, &setup.qubit_h, &reference).map_err(|e| e.to_string())?;
            let e = problem.energy(&s.result.params).map_err(|e| e.to_string())?;
            worst = worst.max((e - s.result.energy).abs());
        }
        report.push(
            "energy_recompute",
            worst <= tol_e,
            format!("{} stored parameter sets, max |ΔE| = {worst:.2e}", vqe.stages.len()),
        );
    }

    if let (Some(mcfg), Some(mt)) = (&cfg.moments, tables.get("moments.csv")) {
        check_moments(&mut report, dir, mcfg, &setup, mt)?;
        let orbitals = mcfg.orbitals.clone();
        let stored = read_moments(mt, false)?;
        let ed = read_moments(mt, true)?;
        let meta: MetadataFile = read_json(&dir.join("metadata.json"))?;
        for (name, t) in tables.iter().filter(|(n, _)| n.starts_with("poles_")) {
            let reps = read_poles(t, &orbitals)?;
            for (source, p) in &reps {
                report.result(
                    &format!("causality[{name}:{source}]"),
                    p.check_causality()
                        .map(|_| format!("{} poles, min residue eigenvalue {:.2e}", p.poles.len(), p.min_residue_eigenvalue()))
                        .map_err(|e| e.to_string()),
                );
            }
            let Some(n) = t.meta("n_mom").and_then(|s| s.parse::<usize>().ok()).filter(|_| name != "poles_exact.csv") else {
                continue;
            };
            if cfg.greens.pole_cut > 0.0 {
                report.info(format!("pole_moments[{name}]"), "skipped: pole cut removes weight");
                continue;
            }
            for (source, p) in &reps {
                let target = match source.as_str() {
                    "vqe" => &stored,
                    "ed_moments" => &ed,
                    _ => continue,
                };
                let dropped = meta
                    .lanczos
                    .iter()
                    .find(|l| l.n_mom == n && &l.source == source)
                    .is_some_and(|l| l.hole.dropped_directions + l.particle.dropped_directions > 0);
                let n_ord = if dropped { 2 } else { 2 * n.div_ceil(2) };
                let mut worst: f64 = 0.0;
                for sector in [SpectralSector::Particle, SpectralSector::Hole] {
                    let rec = pole_moments(p, sector, n_ord);
                    for (m, r) in rec.iter().enumerate() {
                        // reconstruction sees the Hermitian part of the stored moments
                        let raw = &target.sector(sector)[m];
                        let want = (raw + raw.adjoint()).scale(0.5);
                        let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
                        worst = worst.max((r - &want).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale);
                    }
                }
                report.push(
                    format!("pole_moments[{name}:{source}]"),
                    worst <= MOMENT_TOLERANCE,
                    format!("orders 0..{} reproduced to relative {worst:.2e}", n_ord - 1),
                );
            }
        }
        for (name, t) in tables.iter().filter(|(n, _)| n.starts_with("gtau_")) {
            let mut worst = f64::NEG_INFINITY;
            for r in 0..t.rows.len() {
                for c in 1..t.columns.len() {
                    worst = worst.max(t.f64(r, c)?);
                }
            }
            report.push(
                format!("gtau_sign[{name}]"),
                worst <= 1e-12,
                format!("max diagonal G(tau >= 0) = {worst:.3e}"),
            );
        }
    }

    if let Some(t) = tables.get("noise_summary.csv") {
        let (cn, cm, cs, cr) = (t.column("noiseless_re")?, t.column("mean_re")?, t.column("sigma_propagated")?, t.column("n_repeats")?);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for r in 0..t.rows.len() {
            let sigma = t.f64(r, cs)? / (t.usize(r, cr)? as f64).sqrt();
            let dev = (t.f64(r, cm)? - t.f64(r, cn)?).abs();
            if sigma > 0.0 {
                worst = worst.max(dev / sigma);
                count += 1;
            } else if dev > 1e-12 * t.f64(r, cn)?.abs().max(1.0) {
                worst = f64::INFINITY;
            }
        }
        report.push(
            "noise_moment_bands",
            worst <= SIGMA_BAND,
            format!("{count} entries, max |mean - noiseless| = {worst:.2} standard errors"),
        );
    }
    if let Some(t) = tables.get("noise_energies.csv") {
        let (ce, cn, cs) = (t.column("energy")?, t.column("noiseless_energy")?, t.column("sigma_propagated")?);
        let k = t.rows.len() as f64;
        let mean = (0..t.rows.len()).map(|r| t.f64(r, ce)).sum::<Result<f64, _>>()? / k;
        let sigma = t.f64(0, cs)? / k.sqrt();
        let dev = (mean - t.f64(0, cn)?).abs();
        report.push(
            "noise_energy_band",
            dev <= SIGMA_BAND * sigma + 1e-12,
            format!("|mean - noiseless| = {dev:.3e}, standard error {sigma:.3e}"),
        );
    }

    report.passed = report.checks.iter().all(|c| c.status != Status::Fail);
    write_json(&dir.join("verify_report.json"), &report).map_err(|e| e.to_string())?;
    Ok(report)
}

fn check_moments(
    report: &mut Report,
    dir: &Path,
    mcfg: &crate::config::MomentsConfig,
    setup: &Setup,
    mt: &ParsedTable,
) -> Result<(), String> {
    let stored = read_moments(mt, false)?;
    let ed_stored = read_moments(mt, true)?;
    let ed = exact_moment_matrices(&setup.fermion_h, &setup.ed, &mcfg.orbitals, mcfg.n_mom).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for s in [SpectralSector::Particle, SpectralSector::Hole] {
        for (a, b) in ed.sector(s).iter().zip(ed_stored.sector(s)) {
            let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
            worst = worst.max(max_abs_diff(std::slice::from_ref(a), std::slice::from_ref(b)) / scale);
        }
    }
    report.push("ed_moments", worst <= MOMENT_TOLERANCE, format!("recomputed exact moments, max relative deviation {worst:.2e}"));

    let n = stored.n_orbitals();
    let total = &stored.particle[0] + &stored.hole[0];
    let sum_err = (total - DMatrix::<Complex64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut sum_tol = 1e-8;
    if dir.join("moments.json").is_file() {
        let mf: MomentsFile = read_json(&dir.join("moments.json"))?;
        let p: Vec<MomentRun> = mf.particle.into_iter().map(|r| r.run).collect();
        let h: Vec<MomentRun> = mf.hole.into_iter().map(|r| r.run).collect();
        if mcfg.fit == FitKind::Variational {
            // zeroth-order fit infidelity bounds the sum-rule error
            let worst_gap = p
                .iter()
                .chain(&h)
                .filter_map(|r| r.steps.first())
                .map(|s| (2.0 * (1.0 - s.fidelity.sqrt()).max(0.0)).sqrt())
                .fold(0.0, f64::max);
            sum_tol += 2.0 * worst_gap;
        }
        let rebuilt = runs_to_moments(&mf.orbitals, &p, &h).map_err(|e| e.to_string())?;
        let diff = [SpectralSector::Particle, SpectralSector::Hole]
            .iter()
            .map(|&s| max_abs_diff(rebuilt.sector(s), stored.sector(s)))
            .fold(0.0, f64::max);
        report.push("moment_records", diff == 0.0, format!("moments.csv rebuilt from moments.json, max deviation {diff:.2e}"));
    }
    report.push("sum_rule", sum_err <= sum_tol, format!("max |M0_p + M0_h - I| = {sum_err:.2e} (tolerance {sum_tol:.2e})"));

    let dev = [SpectralSector::Particle, SpectralSector::Hole]
        .iter()
        .flat_map(|&s| stored.sector(s).iter().zip(ed.sector(s)))
        .map(|(a, b)| {
            let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
            (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
        })
        .fold(0.0, f64::max);
    report.info("moments_vs_ed", format!("max relative deviation of stored moments from ED {dev:.2e}"));
    Ok(())
}
