//! The experiment pipeline: model, ED reference, VQE, moments, Green's
//! functions and the optional shot-noise re-measurement.

use std::fmt::Display;
use std::time::Instant;

use impurity_vqe::ansatz::{reference_state, AnsatzFamily, AnsatzSpec};
use impurity_vqe::ed::{exact_ground_state, exact_lehmann_gf, exact_moment_matrices, GroundState};
use impurity_vqe::fermion::{jordan_wigner, FermionOperator, SpinOrbitalLayout};
use impurity_vqe::greens::{
    block_lanczos_with_info, filter_poles, imaginary_time_gf, spectral_function_diagonal, wasserstein_distance,
    wasserstein_spectral, LanczosInfo, PoleRepresentation, SpectralMoments, SpectralSector,
};
use impurity_vqe::moments::{moment_matrices, noisy_scalar_remeasure, propagated_row_errors, runs_to_moments, FitMode, MomentRun};
use impurity_vqe::pauli::QubitOperator;
use impurity_vqe::sampling::{expectation_standard_error, sample_expectation, ShotConfig};
use impurity_vqe::sector::Sector;
use impurity_vqe::statevector::StateVector;
use impurity_vqe::vqe::{warm_start_schedule, OptimizerConfig, VqeProblem, VqeResult};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, FitKind};
use crate::output::{fmt_f64, sha256_hex, Cell, OutputDir, Provenance};

/// Shot budgeting recorded in the run metadata.
pub const SHOT_BUDGETING: &str = "per_term";

#[derive(Debug, Clone, Serialize)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.message)
    }
}

pub type StageResult<T> = Result<T, StageError>;

fn at<T, E: Display>(stage: &'static str, r: Result<T, E>) -> StageResult<T> {
    r.map_err(|e| StageError {
        stage,
        message: e.to_string(),
    })
}

/// Model, operators and the exact ground state.
pub struct Setup {
    pub fermion_h: FermionOperator,
    pub qubit_h: QubitOperator,
    pub layout: SpinOrbitalLayout,
    pub sector: Sector,
    pub ed: GroundState,
    pub model: impurity_vqe::models::StarImpurityModel,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> StageResult<Self> {
        let model = at("model", cfg.model.build())?;
        let fermion_h = at("model", model.hamiltonian())?;
        let qubit_h = at("model", jordan_wigner(&fermion_h))?;
        let layout = model.layout();
        let sector = model.ground_sector();
        let ed = at("ed", exact_ground_state(&fermion_h, layout, sector))?;
        Ok(Self {
            fermion_h,
            qubit_h,
            layout,
            sector,
            ed,
            model,
        })
    }

    pub fn reference(&self) -> StageResult<StateVector> {
        let b = at("model", reference_state(&self.layout, self.sector))?;
        at("model", StateVector::basis(self.layout.n_modes(), b))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VqeStage {
    pub spec: AnsatzSpec,
    pub result: VqeResult,
}

#[derive(Debug, Clone, Serialize)]
struct VqeRecord<'a> {
    ed_energy: f64,
    sector: Sector,
    stages: &'a [VqeStage],
}

#[derive(Debug, Clone, Serialize)]
struct RunRecord<'a> {
    run: &'a MomentRun,
    /// SHA-256 of the `{:.16e}`-formatted parameters of each fit step.
    param_digests: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct MomentsRecord<'a> {
    n_mom: usize,
    orbitals: &'a [usize],
    fit: &'a str,
    particle: Vec<RunRecord<'a>>,
    hole: Vec<RunRecord<'a>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LanczosRecord {
    pub n_mom: usize,
    pub source: String,
    pub hole: LanczosInfo,
    pub particle: LanczosInfo,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseRecord {
    pub shots_per_term: u64,
    pub seeds: Vec<u64>,
    /// Seeds whose block-Lanczos reconstruction failed, per truncation.
    pub failed_reconstructions: Vec<(usize, u64, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool_version: &'static str,
    pub mode: &'static str,
    pub shot_budgeting: &'static str,
    pub ed_energy: f64,
    pub ground_sector: Sector,
    pub ground_degeneracy: usize,
    pub final_energy: Option<f64>,
    pub moment_run_sha256: Option<String>,
    pub lanczos: Vec<LanczosRecord>,
    pub noise: Option<NoiseRecord>,
    pub elapsed_seconds: f64,
}

/// Runs the pipeline; with `oracle_only` the VQE and fits are replaced by
/// exact diagonalization throughout.
pub fn run(cfg: &ExperimentConfig, oracle_only: bool) -> StageResult<Metadata> {
    let start = Instant::now();
    let out = at(
        "output",
        OutputDir::create(
            &cfg.output_dir,
            Provenance {
                config_sha256: cfg.digest(),
                vqe_seed: cfg.vqe.seed,
                noise_seed: cfg.noise.seed,
            },
        ),
    )?;
    at("output", crate::output::write_json(&out.path("resolved_config.json"), cfg))?;
    let setup = Setup::new(cfg)?;
    log::info!("ED ground energy {:.12} in sector {:?}", setup.ed.energy, setup.sector);

    let mut meta = Metadata {
        tool_version: env!("CARGO_PKG_VERSION"),
        mode: if oracle_only { "ed_reference" } else { "vqe" },
        shot_budgeting: SHOT_BUDGETING,
        ed_energy: setup.ed.energy,
        ground_sector: setup.sector,
        ground_degeneracy: setup.ed.multiplet.len(),
        final_energy: None,
        moment_run_sha256: None,
        lanczos: Vec::new(),
        noise: None,
        elapsed_seconds: 0.0,
    };

    let stages = if oracle_only {
        write_ed_energy(&out, &setup)?;
        Vec::new()
    } else {
        let stages = run_vqe(cfg, &setup)?;
        write_energies(&out, &setup, &stages)?;
        at(
            "output",
            out.json(
                "vqe.json",
                &VqeRecord {
                    ed_energy: setup.ed.energy,
                    sector: setup.sector,
                    stages: &stages,
                },
            ),
        )?;
        meta.final_energy = stages.last().map(|s| s.result.energy);
        stages
    };

    if let Some(mcfg) = &cfg.moments {
        let orbitals = &mcfg.orbitals;
        let ed_moments = at("moments", exact_moment_matrices(&setup.fermion_h, &setup.ed, orbitals, mcfg.n_mom))?;
        let vqe_part = match stages.last() {
            Some(last) => {
                let problem = at("moments", VqeProblem::new(&last.spec, &setup.qubit_h, &setup.reference()?))?;
                let ground = at("moments", problem.state(&last.result.params))?;
                let e_g = at("moments", problem.energy(&last.result.params))?;
                let fit = match mcfg.fit {
                    FitKind::Variational => FitMode::Variational {
                        spec: last.spec.clone(),
                        optimizer: OptimizerConfig {
                            restarts: mcfg.restarts.unwrap_or(cfg.vqe.restarts),
                            ..cfg.vqe.clone()
                        },
                    },
                    FitKind::Exact => FitMode::ExactNormalization,
                };
                let (m, p_runs, h_runs) = at(
                    "moments",
                    moment_matrices(&ground, e_g, &setup.qubit_h, setup.layout, orbitals, mcfg.n_mom, &fit),
                )?;
                Some((m, p_runs, h_runs, ground))
            }
            None => None,
        };
        let run_digest = match &vqe_part {
            Some((_, p_runs, h_runs, _)) => {
                let record = MomentsRecord {
                    n_mom: mcfg.n_mom,
                    orbitals,
                    fit: match mcfg.fit {
                        FitKind::Variational => "variational",
                        FitKind::Exact => "exact",
                    },
                    particle: p_runs.iter().map(run_record).collect(),
                    hole: h_runs.iter().map(run_record).collect(),
                };
                let digest = sha256_hex(at("output", serde_json::to_string(&record))?.as_bytes());
                at("output", out.json("moments.json", &record))?;
                digest
            }
            None => sha256_hex(format!("{:?}", moments_rows(&ed_moments)).as_bytes()),
        };
        meta.moment_run_sha256 = Some(run_digest.clone());
        write_moments(&out, vqe_part.as_ref().map(|v| &v.0), &ed_moments, &run_digest)?;

        let exact = at("greens", exact_lehmann_gf(&setup.fermion_h, &setup.ed, orbitals))?;
        write_poles(&out, "poles_exact.csv", &[("exact", &exact)], &greens_meta(cfg, mcfg.n_mom, &run_digest))?;
        let n_max = *cfg.greens.truncations.iter().max().unwrap_or(&mcfg.n_mom);
        let mut reconstructions: Vec<(usize, Vec<(&'static str, PoleRepresentation)>)> = Vec::new();
        for &n in &cfg.greens.truncations {
            let mut sources: Vec<(&'static str, &SpectralMoments)> = Vec::new();
            if let Some(v) = &vqe_part {
                sources.push(("vqe", &v.0));
            }
            sources.push(("ed_moments", &ed_moments));
            let mut reps = Vec::new();
            for (name, m) in sources {
                let (p, info) = reconstruct(m, n, cfg.greens.pole_cut)?;
                meta.lanczos.push(LanczosRecord {
                    n_mom: n,
                    source: name.to_string(),
                    hole: info[0].clone(),
                    particle: info[1].clone(),
                });
                reps.push((name, p));
            }
            let extra = greens_meta(cfg, n, &run_digest);
            let named: Vec<(&str, &PoleRepresentation)> = reps.iter().map(|(s, p)| (*s, p)).collect();
            write_poles(&out, &format!("poles_N{n}.csv"), &named, &extra)?;
            let mut curves = named.clone();
            curves.push(("exact", &exact));
            write_spectrum(&out, &format!("spectrum_N{n}.csv"), cfg, &curves, &extra)?;
            write_gtau(&out, &format!("gtau_N{n}.csv"), cfg, &curves, &extra)?;
            reconstructions.push((n, reps));
        }
        write_wasserstein(&out, cfg, &reconstructions, &exact, n_max, &run_digest)?;

        if cfg.noise.enabled {
            if let Some((m, p_runs, h_runs, ground)) = &vqe_part {
                meta.noise = Some(run_noise(cfg, &out, &setup, ground, m, p_runs, h_runs, &run_digest)?);
            }
        }
    }

    meta.elapsed_seconds = start.elapsed().as_secs_f64();
    at("output", out.json("metadata.json", &meta))?;
    Ok(meta)
}

fn run_record(run: &MomentRun) -> RunRecord<'_> {
    RunRecord {
        run,
        param_digests: run
            .steps
            .iter()
            .map(|s| {
                let text: Vec<String> = s.params.iter().map(|&x| fmt_f64(x)).collect();
                sha256_hex(text.join(",").as_bytes())
            })
            .collect(),
    }
}

fn moments_rows(m: &SpectralMoments) -> Vec<String> {
    [SpectralSector::Particle, SpectralSector::Hole]
        .iter()
        .flat_map(|&s| m.sector(s).iter().flat_map(|x| x.iter().map(|z| format!("{}:{}", fmt_f64(z.re), fmt_f64(z.im)))))
        .collect()
}

pub fn run_vqe(cfg: &ExperimentConfig, setup: &Setup) -> StageResult<Vec<VqeStage>> {
    let spec = cfg.ansatz.spec(&setup.model);
    let reference = setup.reference()?;
    if cfg.ansatz.family == AnsatzFamily::Kucj && cfg.ansatz.warm_start {
        let results = at("vqe", warm_start_schedule(&spec, &setup.qubit_h, &reference, cfg.ansatz.k, &cfg.vqe))?;
        Ok(results
            .into_iter()
            .enumerate()
            .map(|(i, result)| VqeStage {
                spec: spec.with_k(i + 1),
                result,
            })
            .collect())
    } else {
        let problem = at("vqe", VqeProblem::new(&spec, &setup.qubit_h, &reference))?;
        let result = at("vqe", problem.minimize(&cfg.vqe))?;
        log::info!("{}: E = {:.12}", result.label, result.energy);
        Ok(vec![VqeStage { spec, result }])
    }
}

const ENERGY_COLUMNS: [&str; 10] = [
    "label",
    "family",
    "sparse",
    "k",
    "n_params",
    "energy",
    "ed_energy",
    "abs_error",
    "best_restart",
    "best_seed",
];

fn write_energies(out: &OutputDir, setup: &Setup, stages: &[VqeStage]) -> StageResult<()> {
    let mut t = at("output", out.csv("energies.csv", &[], &ENERGY_COLUMNS))?;
    for s in stages {
        let r = &s.result;
        let family = match s.spec.family {
            AnsatzFamily::Uccgsd => "uccgsd",
            AnsatzFamily::Kucj => "kucj",
        };
        let k = if s.spec.family == AnsatzFamily::Kucj { s.spec.k } else { 0 };
        at(
            "output",
            t.row(vec![
                r.label.clone().into(),
                family.into(),
                (s.spec.sparse as usize).into(),
                k.into(),
                r.n_params.into(),
                r.energy.into(),
                setup.ed.energy.into(),
                (r.energy - setup.ed.energy).abs().into(),
                r.best_restart.into(),
                (r.restarts[r.best_restart].seed as usize).into(),
            ]),
        )?;
    }
    at("output", t.finish())
}

fn write_ed_energy(out: &OutputDir, setup: &Setup) -> StageResult<()> {
    let mut t = at("output", out.csv("energies.csv", &[], &ENERGY_COLUMNS))?;
    at(
        "output",
        t.row(vec![
            "ED".into(),
            "ed".into(),
            0usize.into(),
            0usize.into(),
            0usize.into(),
            setup.ed.energy.into(),
            setup.ed.energy.into(),
            0.0.into(),
            0usize.into(),
            0usize.into(),
        ]),
    )?;
    at("output", t.finish())
}

fn write_moments(out: &OutputDir, vqe: Option<&SpectralMoments>, ed: &SpectralMoments, digest: &str) -> StageResult<()> {
    let mut t = at(
        "output",
        out.csv(
            "moments.csv",
            &[("moment_run_sha256", digest.to_string())],
            &["sector", "m", "i", "j", "orbital_i", "orbital_j", "re", "im", "ed_re", "ed_im"],
        ),
    )?;
    for sector in [SpectralSector::Particle, SpectralSector::Hole] {
        for (m, em) in ed.sector(sector).iter().enumerate() {
            for i in 0..ed.n_orbitals() {
                for j in 0..ed.n_orbitals() {
                    let v = vqe.map_or(em[(i, j)], |v| v.sector(sector)[m][(i, j)]);
                    at(
                        "output",
                        t.row(vec![
                            sector.name().into(),
                            m.into(),
                            i.into(),
                            j.into(),
                            ed.orbitals[i].into(),
                            ed.orbitals[j].into(),
                            v.re.into(),
                            v.im.into(),
                            em[(i, j)].re.into(),
                            em[(i, j)].im.into(),
                        ]),
                    )?;
                }
            }
        }
    }
    at("output", t.finish())
}

fn greens_meta(cfg: &ExperimentConfig, n_mom: usize, digest: &str) -> Vec<(&'static str, String)> {
    vec![
        ("eta", fmt_f64(cfg.greens.eta)),
        ("pole_cut", fmt_f64(cfg.greens.pole_cut)),
        ("n_mom", n_mom.to_string()),
        ("moment_run_sha256", digest.to_string()),
    ]
}

fn reconstruct(m: &SpectralMoments, n: usize, cut: f64) -> StageResult<(PoleRepresentation, [LanczosInfo; 2])> {
    let (p, info) = at("greens", block_lanczos_with_info(&m.truncated(n)))?;
    let (p, _) = at("greens", filter_poles(&p, cut))?;
    Ok((p, info))
}

fn write_poles(out: &OutputDir, name: &str, reps: &[(&str, &PoleRepresentation)], extra: &[(&str, String)]) -> StageResult<()> {
    let mut t = at("output", out.csv(name, extra, &["source", "sector", "pole", "energy", "i", "j", "re", "im"]))?;
    for (source, p) in reps {
        for (k, pole) in p.poles.iter().enumerate() {
            for i in 0..p.n_orbitals() {
                for j in 0..p.n_orbitals() {
                    let w = pole.residue[(i, j)];
                    at(
                        "output",
                        t.row(vec![
                            (*source).into(),
                            pole.sector.name().into(),
                            k.into(),
                            pole.energy.into(),
                            i.into(),
                            j.into(),
                            w.re.into(),
                            w.im.into(),
                        ]),
                    )?;
                }
            }
        }
    }
    at("output", t.finish())
}

fn curve_columns(prefix: &str, axis: &str, curves: &[(&str, &PoleRepresentation)]) -> Vec<String> {
    let mut cols = vec![axis.to_string()];
    for (source, p) in curves {
        for o in &p.orbitals {
            cols.push(format!("{prefix}_{source}_o{o}"));
        }
    }
    cols
}

fn write_curves(out: &OutputDir, name: &str, axis: &[f64], cols: Vec<String>, data: Vec<Vec<f64>>, extra: &[(&str, String)]) -> StageResult<()> {
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = at("output", out.csv(name, extra, &col_refs))?;
    for (g, &x) in axis.iter().enumerate() {
        let mut row: Vec<Cell> = vec![x.into()];
        row.extend(data.iter().map(|c| Cell::F(c[g])));
        at("output", t.row(row))?;
    }
    at("output", t.finish())
}

fn write_spectrum(out: &OutputDir, name: &str, cfg: &ExperimentConfig, curves: &[(&str, &PoleRepresentation)], extra: &[(&str, String)]) -> StageResult<()> {
    let omega = cfg.greens.omega_grid();
    let data = curves
        .iter()
        .flat_map(|(_, p)| (0..p.n_orbitals()).map(move |i| (p, i)))
        .map(|(p, i)| at("greens", spectral_function_diagonal(p, i, &omega, cfg.greens.eta)))
        .collect::<StageResult<Vec<_>>>()?;
    write_curves(out, name, &omega, curve_columns("A", "omega", curves), data, extra)
}

fn write_gtau(out: &OutputDir, name: &str, cfg: &ExperimentConfig, curves: &[(&str, &PoleRepresentation)], extra: &[(&str, String)]) -> StageResult<()> {
    let tau = cfg.greens.tau_grid();
    let mut data = Vec::new();
    for (_, p) in curves {
        let g = at("greens", imaginary_time_gf(p, &tau))?;
        for i in 0..p.n_orbitals() {
            data.push(g.iter().map(|m| m[(i, i)].re).collect());
        }
    }
    write_curves(out, name, &tau, curve_columns("G", "tau", curves), data, extra)
}

#[allow(clippy::type_complexity)]
fn write_wasserstein(
    out: &OutputDir,
    cfg: &ExperimentConfig,
    reconstructions: &[(usize, Vec<(&'static str, PoleRepresentation)>)],
    exact: &PoleRepresentation,
    n_max: usize,
    digest: &str,
) -> StageResult<()> {
    let omega = cfg.greens.omega_grid();
    let extra = [
        ("eta", fmt_f64(cfg.greens.eta)),
        ("normalized", "true".to_string()),
        ("moment_run_sha256", digest.to_string()),
    ];
    let mut t = at(
        "output",
        out.csv("wasserstein.csv", &extra, &["n_mom", "source", "reference", "orbital", "w1_spectral", "w1_discrete"]),
    )?;
    let largest = reconstructions.iter().find(|(n, _)| *n == n_max).map(|(_, r)| r);
    for (n, reps) in reconstructions {
        for (source, p) in reps {
            let mut refs: Vec<(String, &PoleRepresentation)> = vec![("exact".into(), exact)];
            if let Some(l) = largest.and_then(|l| l.iter().find(|(s, _)| s == source)) {
                refs.push((format!("N{n_max}"), &l.1));
            }
            for (ref_name, r) in refs {
                for (i, &o) in p.orbitals.iter().enumerate() {
                    let ws = at("greens", wasserstein_spectral(p, r, i, &omega, cfg.greens.eta, true))?;
                    let wd = at("greens", wasserstein_distance(p, r, i, true))?;
                    at(
                        "output",
                        t.row(vec![
                            (*n).into(),
                            (*source).into(),
                            ref_name.clone().into(),
                            o.into(),
                            ws.into(),
                            wd.into(),
                        ]),
                    )?;
                }
            }
        }
    }
    at("output", t.finish())
}

/// Seeds of the noisy repeats, drawn from a ChaCha8 stream of the noise seed.
pub fn noise_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

type Grid = Vec<Vec<f64>>;

#[allow(clippy::too_many_arguments)]
fn run_noise(
    cfg: &ExperimentConfig,
    out: &OutputDir,
    setup: &Setup,
    ground: &StateVector,
    noiseless: &SpectralMoments,
    p_runs: &[MomentRun],
    h_runs: &[MomentRun],
    digest: &str,
) -> StageResult<NoiseRecord> {
    let shots = cfg.noise.shots_per_term;
    let seeds = noise_seeds(cfg.noise.seed, cfg.noise.n_seed_repeats);
    let orbitals = &noiseless.orbitals;
    let extra = [
        ("shots_per_term", shots.to_string()),
        ("shot_budgeting", SHOT_BUDGETING.to_string()),
        ("moment_run_sha256", digest.to_string()),
    ];

    let e_noiseless = at("noise", impurity_vqe::statevector::expectation(ground, &setup.qubit_h))?;
    let sigma_e = at("noise", expectation_standard_error(ground, &setup.qubit_h, shots))?;
    let repeats: Vec<(f64, SpectralMoments)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut stream = ChaCha8Rng::seed_from_u64(seed);
            let shot = |s: u64| ShotConfig {
                shots_per_term: shots,
                rng_seed: s,
            };
            let e = sample_expectation(ground, &setup.qubit_h, &shot(stream.next_u64()))?;
            let run_seeds: Vec<u64> = (0..p_runs.len() + h_runs.len()).map(|_| stream.next_u64()).collect();
            let noisy = |runs: &[MomentRun], offset: usize| {
                runs.iter()
                    .enumerate()
                    .map(|(k, r)| noisy_scalar_remeasure(r, ground, &setup.qubit_h, setup.layout, &shot(run_seeds[offset + k])))
                    .collect::<impurity_vqe::Result<Vec<_>>>()
            };
            let p = noisy(p_runs, 0)?;
            let h = noisy(h_runs, p_runs.len())?;
            Ok((e, runs_to_moments(orbitals, &p, &h)?))
        })
        .collect::<impurity_vqe::Result<_>>()
        .map_err(|e: impurity_vqe::Error| StageError {
            stage: "noise",
            message: e.to_string(),
        })?;

    let mut t = at(
        "output",
        out.csv(
            "noise_energies.csv",
            &extra,
            &["repeat", "seed", "energy", "noiseless_energy", "sigma_propagated"],
        ),
    )?;
    for (k, ((e, _), &seed)) in repeats.iter().zip(&seeds).enumerate() {
        at(
            "output",
            t.row(vec![
                k.into(),
                Cell::S(seed.to_string()),
                (*e).into(),
                e_noiseless.into(),
                sigma_e.into(),
            ]),
        )?;
    }
    at("output", t.finish())?;

    for (k, ((_, m), &seed)) in repeats.iter().zip(&seeds).enumerate() {
        let mut extra_k = extra.to_vec();
        extra_k.push(("seed", seed.to_string()));
        let mut t = at(
            "output",
            out.csv(&format!("noise/moments_seed_{k}.csv"), &extra_k, &["sector", "m", "i", "j", "re", "im"]),
        )?;
        for sector in [SpectralSector::Particle, SpectralSector::Hole] {
            for (order, mat) in m.sector(sector).iter().enumerate() {
                for i in 0..m.n_orbitals() {
                    for j in 0..m.n_orbitals() {
                        let v = mat[(i, j)];
                        at(
                            "output",
                            t.row(vec![sector.name().into(), order.into(), i.into(), j.into(), v.re.into(), v.im.into()]),
                        )?;
                    }
                }
            }
        }
        at("output", t.finish())?;
    }

    let sigma_rows = |runs: &[MomentRun]| -> StageResult<Vec<Grid>> {
        runs.iter()
            .map(|r| at("noise", propagated_row_errors(r, ground, &setup.qubit_h, setup.layout, shots)))
            .collect()
    };
    let p_sigma = sigma_rows(p_runs)?;
    let h_sigma = sigma_rows(h_runs)?;
    let mut t = at(
        "output",
        out.csv(
            "noise_summary.csv",
            &extra,
            &["sector", "m", "i", "j", "noiseless_re", "mean_re", "std_re", "sigma_propagated", "n_repeats"],
        ),
    )?;
    let n_rep = repeats.len() as f64;
    for sector in [SpectralSector::Particle, SpectralSector::Hole] {
        for (order, mat) in noiseless.sector(sector).iter().enumerate() {
            for i in 0..noiseless.n_orbitals() {
                for j in 0..noiseless.n_orbitals() {
                    let vals: Vec<f64> = repeats.iter().map(|(_, m)| m.sector(sector)[order][(i, j)].re).collect();
                    let mean = vals.iter().sum::<f64>() / n_rep;
                    let var = if vals.len() > 1 {
                        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_rep - 1.0)
                    } else {
                        0.0
                    };
                    // particle (i, j) is row entry orbitals[i] of source j; hole (i, j)
                    // is row entry orbitals[j] of source i
                    let sigma = match sector {
                        SpectralSector::Particle => p_sigma[j][order][orbitals[i]],
                        SpectralSector::Hole => h_sigma[i][order][orbitals[j]],
                    };
                    at(
                        "output",
                        t.row(vec![
                            sector.name().into(),
                            order.into(),
                            i.into(),
                            j.into(),
                            mat[(i, j)].re.into(),
                            mean.into(),
                            var.sqrt().into(),
                            sigma.into(),
                            repeats.len().into(),
                        ]),
                    )?;
                }
            }
        }
    }
    at("output", t.finish())?;

    let mut failed = Vec::new();
    let omega = cfg.greens.omega_grid();
    for &n in &cfg.greens.truncations {
        let mut curves: Vec<Vec<Vec<f64>>> = Vec::new();
        for ((_, m), &seed) in repeats.iter().zip(&seeds) {
            let rep = reconstruct(m, n, cfg.greens.pole_cut).and_then(|(p, _)| {
                (0..p.n_orbitals())
                    .map(|i| at("greens", spectral_function_diagonal(&p, i, &omega, cfg.greens.eta)))
                    .collect::<StageResult<Vec<_>>>()
            });
            match rep {
                Ok(c) => curves.push(c),
                Err(e) => failed.push((n, seed, e.message)),
            }
        }
        let mut cols = vec!["omega".to_string()];
        let mut data = Vec::new();
        for (i, o) in orbitals.iter().enumerate() {
            cols.push(format!("A_mean_o{o}"));
            cols.push(format!("A_std_o{o}"));
            let k = curves.len() as f64;
            let mean: Vec<f64> = (0..omega.len()).map(|g| curves.iter().map(|c| c[i][g]).sum::<f64>() / k).collect();
            let std: Vec<f64> = (0..omega.len())
                .map(|g| {
                    if curves.len() < 2 {
                        return 0.0;
                    }
                    (curves.iter().map(|c| (c[i][g] - mean[g]).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
                })
                .collect();
            data.push(mean);
            data.push(std);
        }
        let mut extra_n = greens_meta(cfg, n, digest);
        extra_n.push(("n_successful", curves.len().to_string()));
        write_curves(out, &format!("noise_spectrum_N{n}.csv"), &omega, cols, data, &extra_n)?;
    }

    Ok(NoiseRecord {
        shots_per_term: shots,
        seeds,
        failed_reconstructions: failed,
    })
}

/// Rows of `(label, model, k, n_params)` for the standard ansatz families.
pub fn parameter_table() -> Vec<(String, String, usize)> {
    use impurity_vqe::ansatz::parameter_count;
    use impurity_vqe::models::{metallic_single_site, two_site};
    let mut rows = Vec::new();
    for (name, model) in [("single_site", metallic_single_site()), ("two_site", two_site(0.5))] {
        for sparse in [false, true] {
            let spec = AnsatzSpec::uccgsd(&model, sparse);
            rows.push((spec.label(), name.to_string(), parameter_count(&spec)));
        }
        for k in 1..=5 {
            for sparse in [false, true] {
                let spec = AnsatzSpec::kucj(&model, k, sparse);
                rows.push((spec.label(), name.to_string(), parameter_count(&spec)));
            }
        }
    }
    rows
}
