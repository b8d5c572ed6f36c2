//! Recursive spectral moments from repeated state fitting.
//!
//! Starting from `c†_s|G⟩` (particle) or `c_s|G⟩` (hole), each step writes
//! the current vector as `d_m |φ^m⟩` with `|φ^m⟩` an ansatz state, then
//! applies `H_N = H - E_G`. The moment row for source orbital `s` at order
//! `m` is `(∏_{j≤m} d_j) ⟨G| c_r |φ^m⟩` (`c†_r` for holes).

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{reference_state, AnsatzSpec, CompiledAnsatz};
use crate::ed::{dot, moments_from_rows, norm};
use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionOperator};
use crate::greens::{SpectralMoments, SpectralSector};
use crate::optimize::bfgs;
use crate::pauli::QubitOperator;
use crate::sampling::{expectation_standard_error, sample_expectation, sample_transition_amplitude, transition_standard_error, ShotConfig};
use crate::sector::{ladder_matrix, qubit_matrix, shifted_sector, Sector, SectorBasis, SparseMatrix};
use crate::statevector::{expectation, StateVector};
use crate::vqe::{random_parameters, OptimizerConfig};

/// Targets with norm below this cannot be fitted.
pub const MIN_TARGET_NORM: f64 = 1e-12;
/// A coefficient below this ends the recursion.
pub const COLLAPSE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitMode {
    Variational { spec: AnsatzSpec, optimizer: OptimizerConfig },
    /// Replaces the fit by exact normalization of the target.
    ExactNormalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// `|⟨φ(θ*)|target⟩|`.
    pub d: f64,
    /// `-d²`.
    pub cost: f64,
    /// Global phase `α` with `e^{iα}|φ(θ*)⟩` the stored state.
    pub phase: f64,
    pub best_restart: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentStep {
    pub order: usize,
    pub d: f64,
    pub cost: f64,
    pub phase: f64,
    pub params: Vec<f64>,
    /// `|⟨φ^m|t̂⟩|²` for the normalized target.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRun {
    pub sector: SpectralSector,
    pub source: usize,
    pub n_mom: usize,
    pub e_g: f64,
    pub target_sector: Sector,
    pub steps: Vec<MomentStep>,
    /// `rows[m][r]`: particle `⟨G|c_r H_N^m c†_s|G⟩`, hole
    /// `⟨G|c†_r H_N^m c_s|G⟩`, for every mode `r`.
    pub rows: Vec<Vec<Complex64>>,
    /// Order at which the coefficient collapsed, if any.
    pub truncated_at: Option<usize>,
    /// Transition amplitudes `⟨G|c_r|φ^m⟩` (resp. `c†_r`), `amplitudes[m][r]`.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Fitted states `|φ^m⟩` as amplitudes over the target sector.
    #[serde(skip)]
    pub states: Vec<Vec<Complex64>>,
}

impl MomentRun {
    pub fn coefficients(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.d).collect()
    }
}

/// Fits `d e^{iα}|φ(θ)⟩` to a target given as sector amplitudes.
pub fn fit_in_sector(circuit: &CompiledAnsatz, target: &[Complex64], cfg: &OptimizerConfig) -> Result<FitResult> {
    cfg.validate()?;
    let tn = norm(target);
    if tn < MIN_TARGET_NORM {
        return Err(Error::DegenerateFit(tn));
    }
    let t: Vec<Complex64> = target.iter().map(|x| x / tn).collect();
    let cost = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let phi = circuit.state(x)?;
        let o = dot(&t, &phi);
        let chi: Vec<Complex64> = t.iter().map(|v| v * o).collect();
        let g = circuit.gradient_re_overlap(x, &phi, &chi)?;
        Ok((-o.norm_sqr(), g.into_iter().map(|v| -2.0 * v).collect()))
    };
    let bcfg = cfg.bfgs();
    let runs: Vec<Option<(f64, Vec<f64>)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = random_parameters(circuit.n_params(), cfg.init_range, cfg.restart_seed(r));
            bfgs(cost, &x0, &bcfg).ok().map(|res| (res.f, res.x))
        })
        .collect();
    let (best, (_, params)) = runs
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .ok_or(Error::NonFinite("fit cost in every restart"))?;
    let phi = circuit.state(&params)?;
    let overlap = dot(&phi, target);
    Ok(FitResult {
        params,
        d: overlap.norm(),
        cost: -overlap.norm_sqr(),
        phase: overlap.arg(),
        best_restart: best,
    })
}

/// Fits a full-register target with the ansatz prepared from
/// `sector_reference`.
pub fn fit_target_state(target: &StateVector, spec: &AnsatzSpec, sector_reference: &StateVector, cfg: &OptimizerConfig) -> Result<FitResult> {
    let n = spec.layout.n_modes();
    for q in [target.n_qubits(), sector_reference.n_qubits()] {
        if q != n {
            return Err(Error::DimensionMismatch { expected: n, got: q });
        }
    }
    if target.norm() < MIN_TARGET_NORM {
        return Err(Error::DegenerateFit(target.norm()));
    }
    let b = sector_reference.as_basis_state(1e-12).ok_or(Error::InvalidReference)?;
    let basis = SectorBasis::new(spec.layout, Sector::of_state(&spec.layout, b))?;
    let circuit = CompiledAnsatz::new(spec, &basis, b)?;
    let (amps, _) = basis.restrict(target)?;
    if norm(&amps) < MIN_TARGET_NORM {
        return Ok(FitResult {
            params: vec![0.0; circuit.n_params()],
            d: 0.0,
            cost: 0.0,
            phase: 0.0,
            best_restart: 0,
        });
    }
    fit_in_sector(&circuit, &amps, cfg)
}

/// Ground state given on the full register, restricted to its sector.
struct Ground {
    basis: SectorBasis,
    amps: Vec<Complex64>,
}

fn restrict_ground(ground: &StateVector, layout: crate::fermion::SpinOrbitalLayout) -> Result<Ground> {
    let lead = ground
        .amplitudes()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i as u64)
        .ok_or(Error::EmptySector)?;
    let basis = SectorBasis::new(layout, Sector::of_state(&layout, lead))?;
    let (amps, outside) = basis.restrict(ground)?;
    if outside > 1e-10 {
        return Err(Error::Config(format!(
            "ground state is not confined to one sector (outside weight {outside:e})"
        )));
    }
    Ok(Ground { basis, amps })
}

/// Excited-sector setup shared by the recursion and re-measurement.
struct Excitation {
    basis: SectorBasis,
    h_ex: SparseMatrix,
    e_g: f64,
    start: Vec<Complex64>,
    back: Vec<Option<SparseMatrix>>,
}

fn excitation(g: &Ground, h: &QubitOperator, e_g: f64, s: usize, sector: SpectralSector) -> Result<Option<Excitation>> {
    let layout = *g.basis.layout();
    let dagger = sector == SpectralSector::Particle;
    let Some(ex) = shifted_sector(&layout, g.basis.sector(), s, dagger) else {
        return Ok(None);
    };
    let Ok(basis) = SectorBasis::new(layout, ex) else {
        return Ok(None);
    };
    let h_ex = qubit_matrix(h, &basis)?;
    let start = ladder_matrix(s, dagger, &g.basis, &basis).matvec(&g.amps);
    let back = (0..layout.n_modes())
        .map(|r| {
            (shifted_sector(&layout, ex, r, !dagger) == Some(g.basis.sector()))
                .then(|| ladder_matrix(r, !dagger, &basis, &g.basis))
        })
        .collect();
    Ok(Some(Excitation {
        basis,
        h_ex,
        e_g,
        start,
        back,
    }))
}

fn ladder_qubit(mode: usize, dagger: bool, n_modes: usize) -> Result<QubitOperator> {
    jordan_wigner(&FermionOperator::from_term(n_modes, vec![(mode, dagger)], Complex64::new(1.0, 0.0))?)
}

/// Runs the recursion for source orbital `s` up to order `n_mom`.
#[allow(clippy::too_many_arguments)]
pub fn recursive_moments(
    ground: &StateVector,
    e_g: f64,
    h: &QubitOperator,
    layout: crate::fermion::SpinOrbitalLayout,
    s: usize,
    sector: SpectralSector,
    n_mom: usize,
    fit: &FitMode,
) -> Result<MomentRun> {
    let n_modes = layout.n_modes();
    if s >= n_modes {
        return Err(Error::ModeOutOfRange { index: s, n_modes });
    }
    if (ground.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Config("ground state must be normalized".into()));
    }
    let e_check = expectation(ground, h)?;
    if (e_check - e_g).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "E_G = {e_g} inconsistent with ⟨G|H|G⟩ = {e_check}"
        )));
    }
    let g = restrict_ground(ground, layout)?;
    let zeros = vec![vec![Complex64::default(); n_modes]; n_mom + 1];
    let Some(ex) = excitation(&g, h, e_g, s, sector)? else {
        return Ok(MomentRun {
            sector,
            source: s,
            n_mom,
            e_g,
            target_sector: g.basis.sector(),
            steps: Vec::new(),
            rows: zeros.clone(),
            truncated_at: Some(0),
            amplitudes: zeros,
            states: Vec::new(),
        });
    };
    let circuit = match fit {
        FitMode::Variational { spec, .. } => {
            if spec.layout != layout {
                return Err(Error::Config("ansatz layout differs from model layout".into()));
            }
            let b = reference_state(&layout, ex.basis.sector())?;
            Some(CompiledAnsatz::new(spec, &ex.basis, b)?)
        }
        FitMode::ExactNormalization => None,
    };
    let mut run = MomentRun {
        sector,
        source: s,
        n_mom,
        e_g,
        target_sector: ex.basis.sector(),
        steps: Vec::new(),
        rows: zeros.clone(),
        truncated_at: None,
        amplitudes: zeros,
        states: Vec::new(),
    };
    let mut target = ex.start.clone();
    let mut prefactor = 1.0;
    for m in 0..=n_mom {
        let tn = norm(&target);
        if tn < COLLAPSE_THRESHOLD {
            run.truncated_at = Some(m);
            break;
        }
        let (phi, step) = match (&circuit, fit) {
            (Some(c), FitMode::Variational { optimizer, .. }) => {
                let f = fit_in_sector(c, &target, optimizer)?;
                let rot = Complex64::from_polar(1.0, f.phase);
                let phi: Vec<Complex64> = c.state(&f.params)?.into_iter().map(|a| a * rot).collect();
                let step = MomentStep {
                    order: m,
                    d: f.d,
                    cost: f.cost,
                    phase: f.phase,
                    params: f.params,
                    fidelity: (f.d / tn).powi(2),
                };
                (phi, step)
            }
            _ => {
                let phi: Vec<Complex64> = target.iter().map(|a| a / tn).collect();
                let step = MomentStep {
                    order: m,
                    d: tn,
                    cost: -tn * tn,
                    phase: 0.0,
                    params: Vec::new(),
                    fidelity: 1.0,
                };
                (phi, step)
            }
        };
        if step.d < COLLAPSE_THRESHOLD {
            run.truncated_at = Some(m);
            break;
        }
        prefactor *= step.d;
        for (r, b) in ex.back.iter().enumerate() {
            if let Some(b) = b {
                let a = dot(&g.amps, &b.matvec(&phi));
                run.amplitudes[m][r] = a;
                run.rows[m][r] = a * prefactor;
            }
        }
        log::debug!("{} s={} m={}: d={:.6e} fidelity={:.3e}", sector.name(), s, m, step.d, step.fidelity);
        run.steps.push(step);
        target = ex.h_ex.matvec(&phi);
        target.iter_mut().zip(&phi).for_each(|(t, p)| *t -= p * ex.e_g);
        run.states.push(phi);
    }
    Ok(run)
}

/// Moment matrices over `orbitals` from one particle and one hole run per
/// orbital (in the same order).
pub fn runs_to_moments(orbitals: &[usize], particle: &[MomentRun], hole: &[MomentRun]) -> Result<SpectralMoments> {
    if particle.len() != orbitals.len() || hole.len() != orbitals.len() {
        return Err(Error::LengthMismatch {
            what: "moment runs",
            expected: orbitals.len(),
            got: particle.len().min(hole.len()),
        });
    }
    for (i, &o) in orbitals.iter().enumerate() {
        if particle[i].source != o || hole[i].source != o {
            return Err(Error::Config("moment runs out of orbital order".into()));
        }
    }
    let p: Vec<_> = particle.iter().map(|r| r.rows.clone()).collect();
    let h: Vec<_> = hole.iter().map(|r| r.rows.clone()).collect();
    Ok(moments_from_rows(orbitals, &p, &h))
}

/// Particle and hole runs for every tracked orbital, then the moment
/// matrices. Runs are independent and evaluated in parallel.
#[allow(clippy::too_many_arguments)]
pub fn moment_matrices(
    ground: &StateVector,
    e_g: f64,
    h: &QubitOperator,
    layout: crate::fermion::SpinOrbitalLayout,
    orbitals: &[usize],
    n_mom: usize,
    fit: &FitMode,
) -> Result<(SpectralMoments, Vec<MomentRun>, Vec<MomentRun>)> {
    let jobs: Vec<(usize, SpectralSector)> = [SpectralSector::Particle, SpectralSector::Hole]
        .iter()
        .flat_map(|&sec| orbitals.iter().map(move |&s| (s, sec)))
        .collect();
    let runs: Vec<MomentRun> = jobs
        .par_iter()
        .map(|&(s, sec)| recursive_moments(ground, e_g, h, layout, s, sec, n_mom, fit))
        .collect::<Result<_>>()?;
    let (p, hole) = runs.split_at(orbitals.len());
    Ok((runs_to_moments(orbitals, p, hole)?, p.to_vec(), hole.to_vec()))
}

fn sub_identity(h: &QubitOperator, e: f64) -> Result<QubitOperator> {
    h.sub(&QubitOperator::identity(h.n_qubits()).scale(Complex64::new(e, 0.0)))
}

/// Re-measures `E_G`, every `d_m` and every transition amplitude with shot
/// noise, then rebuilds the moment rows from the noisy scalars.
pub fn noisy_scalar_remeasure(run: &MomentRun, ground: &StateVector, h: &QubitOperator, layout: crate::fermion::SpinOrbitalLayout, cfg: &ShotConfig) -> Result<MomentRun> {
    cfg.validate()?;
    let n_modes = layout.n_modes();
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut next = || cfg.with_seed(seeds.next_u64());
    let e_g = sample_expectation(ground, h, &next())?;
    let mut out = run.clone();
    out.e_g = e_g;
    if run.states.is_empty() {
        return Ok(out);
    }
    let basis = SectorBasis::new(layout, run.target_sector)?;
    let phis: Vec<StateVector> = run.states.iter().map(|a| basis.embed(a)).collect();
    let dagger = run.sector == SpectralSector::Particle;
    let g_sector = restrict_ground(ground, layout)?.basis.sector();
    let h_n = sub_identity(h, e_g)?;
    let up = ladder_qubit(run.source, dagger, n_modes)?;
    let back: Vec<Option<QubitOperator>> = (0..n_modes)
        .map(|r| {
            (shifted_sector(&layout, run.target_sector, r, !dagger) == Some(g_sector))
                .then(|| ladder_qubit(r, !dagger, n_modes))
                .transpose()
        })
        .collect::<Result<_>>()?;
    let mut prefactor = 1.0;
    for (m, phi) in phis.iter().enumerate() {
        let d = if m == 0 {
            sample_transition_amplitude(phi, &up, ground, &next())?.norm()
        } else {
            sample_transition_amplitude(phi, &h_n, &phis[m - 1], &next())?.norm()
        };
        out.steps[m].d = d;
        prefactor *= d;
        for (r, b) in back.iter().enumerate() {
            if let Some(b) = b {
                let a = sample_transition_amplitude(ground, b, phi, &next())?;
                out.amplitudes[m][r] = a;
                out.rows[m][r] = a * prefactor;
            }
        }
    }
    Ok(out)
}

/// Analytic standard deviation of the real part of each moment row entry
/// under [`noisy_scalar_remeasure`], by first-order error propagation.
pub fn propagated_row_errors(run: &MomentRun, ground: &StateVector, h: &QubitOperator, layout: crate::fermion::SpinOrbitalLayout, shots_per_term: u64) -> Result<Vec<Vec<f64>>> {
    let n_modes = layout.n_modes();
    let mut out = vec![vec![0.0; n_modes]; run.n_mom + 1];
    if run.states.is_empty() {
        return Ok(out);
    }
    let sigma_e = expectation_standard_error(ground, h, shots_per_term)?;
    let basis = SectorBasis::new(layout, run.target_sector)?;
    let phis: Vec<StateVector> = run.states.iter().map(|a| basis.embed(a)).collect();
    let dagger = run.sector == SpectralSector::Particle;
    let h_n = sub_identity(h, run.e_g)?;
    let mut rel_var = 0.0;
    for (m, phi) in phis.iter().enumerate() {
        let d = run.steps[m].d;
        let sd = if m == 0 {
            transition_standard_error(phi, &ladder_qubit(run.source, dagger, n_modes)?, ground, shots_per_term)?.0
        } else {
            let (s, _) = transition_standard_error(phi, &h_n, &phis[m - 1], shots_per_term)?;
            let overlap = phi.inner(&phis[m - 1])?.re;
            (s * s + (sigma_e * overlap).powi(2)).sqrt()
        };
        rel_var += (sd / d).powi(2);
        let prefactor: f64 = run.steps[..=m].iter().map(|s| s.d).product();
        for r in 0..n_modes {
            let a = run.amplitudes[m][r];
            if a.norm() == 0.0 && run.rows[m][r].norm() == 0.0 {
                continue;
            }
            let (sa, _) = transition_standard_error(ground, &ladder_qubit(r, !dagger, n_modes)?, phi, shots_per_term)?;
            let row = run.rows[m][r].re;
            out[m][r] = (row * row * rel_var + (prefactor * sa).powi(2)).sqrt();
        }
    }
    Ok(out)
}
