//! Ground-state energy minimization with random restarts and the k-uCJ
//! warm-start schedule.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{kucj_blocks, prepare_state, AnsatzFamily, AnsatzSpec, CompiledAnsatz};
use crate::error::{Error, Result};
use crate::optimize::{bfgs, central_difference, BfgsConfig};
use crate::pauli::QubitOperator;
use crate::sector::{qubit_matrix, Sector, SectorBasis, SparseMatrix};
use crate::statevector::{expectation, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GradientMode {
    /// Exact gradient from one reverse sweep through the circuit.
    Adjoint,
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub gradient: GradientMode,
    pub gtol: f64,
    pub ftol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Initial parameters are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gradient: GradientMode::Adjoint,
            gtol: 1e-7,
            ftol: 1e-13,
            restarts: 50,
            seed: 0,
            init_range: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if let GradientMode::FiniteDifference { step } = self.gradient {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::Config("finite-difference step must be positive".into()));
            }
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return Err(Error::Config("init_range must be nonnegative".into()));
        }
        if !(self.gtol >= 0.0 && self.ftol >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn bfgs(&self) -> BfgsConfig {
        BfgsConfig {
            max_iterations: self.max_iterations,
            gtol: self.gtol,
            ftol: self.ftol,
        }
    }

    pub fn restart_seed(&self, restart: usize) -> u64 {
        self.seed.wrapping_add(restart as u64)
    }
}

/// Uniform random vector in `[-range, range]` from a seeded stream.
pub fn random_parameters(n: usize, range: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0) * range).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub seed: u64,
    /// `None` when the restart aborted on a non-finite energy.
    pub energy: Option<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub label: String,
    pub n_params: usize,
    pub params: Vec<f64>,
    pub energy: f64,
    pub best_restart: usize,
    pub restarts: Vec<RestartRecord>,
}

impl VqeResult {
    pub fn restart_energies(&self) -> Vec<Option<f64>> {
        self.restarts.iter().map(|r| r.energy).collect()
    }
}

/// An ansatz compiled against the sector of its reference, together with
/// the sector-projected Hamiltonian.
#[derive(Debug, Clone)]
pub struct VqeProblem {
    pub circuit: CompiledAnsatz,
    pub basis: SectorBasis,
    pub hamiltonian: SparseMatrix,
    qubit_hamiltonian: QubitOperator,
}

impl VqeProblem {
    pub fn new(spec: &AnsatzSpec, h: &QubitOperator, reference: &StateVector) -> Result<Self> {
        let n = spec.layout.n_modes();
        if reference.n_qubits() != n || h.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if h.n_qubits() != n { h.n_qubits() } else { reference.n_qubits() },
            });
        }
        let b = reference.as_basis_state(1e-12).ok_or(Error::InvalidReference)?;
        let basis = SectorBasis::new(spec.layout, Sector::of_state(&spec.layout, b))?;
        let hamiltonian = qubit_matrix(h, &basis)?;
        if hamiltonian.hermiticity_error() > 1e-10 {
            return Err(Error::NotHermitian {
                imag: hamiltonian.hermiticity_error(),
            });
        }
        Ok(Self {
            circuit: CompiledAnsatz::new(spec, &basis, b)?,
            basis,
            hamiltonian,
            qubit_hamiltonian: h.clone(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        let psi = self.circuit.state(params)?;
        Ok(self.hamiltonian.quadratic_form(&psi).re)
    }

    pub fn energy_and_gradient(&self, params: &[f64], mode: GradientMode) -> Result<(f64, Vec<f64>)> {
        match mode {
            GradientMode::Adjoint => {
                let psi = self.circuit.state(params)?;
                let chi = self.hamiltonian.matvec(&psi);
                let e: Complex64 = psi.iter().zip(&chi).map(|(a, b)| a.conj() * b).sum();
                let g = self.circuit.gradient_re_overlap(params, &psi, &chi)?;
                Ok((e.re, g.into_iter().map(|v| 2.0 * v).collect()))
            }
            GradientMode::FiniteDifference { step } => {
                let e = self.energy(params)?;
                let g = central_difference(|x| self.energy(x), params, step)?;
                Ok((e, g))
            }
        }
    }

    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        Ok(self.basis.embed(&self.circuit.state(params)?))
    }

    pub fn qubit_hamiltonian(&self) -> &QubitOperator {
        &self.qubit_hamiltonian
    }

    /// One optimization per starting point; failures are recorded, not
    /// propagated.
    pub fn minimize_from(&self, starts: &[(u64, Vec<f64>)], cfg: &OptimizerConfig, label: String) -> Result<VqeResult> {
        cfg.validate()?;
        let bcfg = cfg.bfgs();
        let runs: Vec<(RestartRecord, Vec<f64>)> = starts
            .par_iter()
            .map(|(seed, x0)| {
                match bfgs(|x| self.energy_and_gradient(x, cfg.gradient), x0, &bcfg) {
                    Ok(r) => (
                        RestartRecord {
                            seed: *seed,
                            energy: Some(r.f),
                            iterations: r.iterations,
                            evaluations: r.evaluations,
                            converged: r.converged,
                            error: None,
                        },
                        r.x,
                    ),
                    Err(e) => (
                        RestartRecord {
                            seed: *seed,
                            energy: None,
                            iterations: 0,
                            evaluations: 0,
                            converged: false,
                            error: Some(e.to_string()),
                        },
                        Vec::new(),
                    ),
                }
            })
            .collect();
        let best = runs
            .iter()
            .enumerate()
            .filter_map(|(i, (r, _))| r.energy.map(|e| (i, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .ok_or_else(|| Error::NonFinite("energy in every restart"))?;
        let (records, mut params): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
        Ok(VqeResult {
            label,
            n_params: self.n_params(),
            params: std::mem::take(&mut params[best.0]),
            energy: best.1,
            best_restart: best.0,
            restarts: records,
        })
    }

    pub fn minimize(&self, cfg: &OptimizerConfig) -> Result<VqeResult> {
        cfg.validate()?;
        let starts: Vec<(u64, Vec<f64>)> = (0..cfg.restarts)
            .map(|r| {
                let seed = cfg.restart_seed(r);
                (seed, random_parameters(self.n_params(), cfg.init_range, seed))
            })
            .collect();
        self.minimize_from(&starts, cfg, self.circuit.spec().label())
    }
}

/// `⟨ψ(θ)|H|ψ(θ)⟩` on the full register.
pub fn energy(spec: &AnsatzSpec, params: &[f64], h: &QubitOperator, reference: &StateVector) -> Result<f64> {
    expectation(&prepare_state(spec, params, reference)?, h)
}

pub fn minimize_energy(spec: &AnsatzSpec, h: &QubitOperator, reference: &StateVector, cfg: &OptimizerConfig) -> Result<VqeResult> {
    VqeProblem::new(spec, h, reference)?.minimize(cfg)
}

/// Initial k-uCJ parameters for `k` layers from an optimized `k - 1`
/// result: the orbital block is copied, old layers `1..k-1` move to
/// `2..k`, and the new layer 1 is `fresh`.
pub fn warm_start_parameters(prev_spec: &AnsatzSpec, prev: &[f64], fresh_block: &[f64]) -> Result<Vec<f64>> {
    let spec = prev_spec.with_k(prev_spec.k + 1);
    let old = kucj_blocks(prev_spec);
    let new = kucj_blocks(&spec);
    let n = crate::ansatz::parameter_count(&spec);
    let block_len = new[1].1 - new[1].0;
    if fresh_block.len() != block_len {
        return Err(Error::LengthMismatch {
            what: "layer block",
            expected: block_len,
            got: fresh_block.len(),
        });
    }
    let mut x = vec![0.0; n];
    x[new[0].0..new[0].1].copy_from_slice(&prev[old[0].0..old[0].1]);
    x[new[1].0..new[1].1].copy_from_slice(fresh_block);
    for i in 1..=prev_spec.k {
        x[new[i + 1].0..new[i + 1].1].copy_from_slice(&prev[old[i].0..old[i].1]);
    }
    Ok(x)
}

/// Optimizes k-uCJ for `k = 1..=k_max`, warm-starting each `k` from the
/// best `k - 1` result with a randomized new layer 1 per restart.
pub fn warm_start_schedule(spec: &AnsatzSpec, h: &QubitOperator, reference: &StateVector, k_max: usize, cfg: &OptimizerConfig) -> Result<Vec<VqeResult>> {
    if spec.family != AnsatzFamily::Kucj {
        return Err(Error::Config("warm start requires the k-uCJ family".into()));
    }
    if k_max == 0 {
        return Err(Error::Config("k_max must be at least 1".into()));
    }
    cfg.validate()?;
    let mut out: Vec<VqeResult> = Vec::new();
    for k in 1..=k_max {
        let sk = spec.with_k(k);
        let problem = VqeProblem::new(&sk, h, reference)?;
        let result = match out.last() {
            None => problem.minimize(cfg)?,
            Some(prev) => {
                let prev_spec = spec.with_k(k - 1);
                let blocks = kucj_blocks(&sk);
                let len = blocks[1].1 - blocks[1].0;
                let starts = (0..cfg.restarts)
                    .map(|r| {
                        let seed = cfg.restart_seed(r);
                        let fresh = random_parameters(len, cfg.init_range, seed);
                        Ok((seed, warm_start_parameters(&prev_spec, &prev.params, &fresh)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                problem.minimize_from(&starts, cfg, sk.label())?
            }
        };
        log::info!("{}: E = {:.12}", result.label, result.energy);
        out.push(result);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{embed_parameters, parameter_count, reference_state};
    use crate::ed::exact_ground_state;
    use crate::fermion::jordan_wigner;
    use crate::models::{insulating_single_site, StarImpurityModel};
    use crate::optimize::five_point_difference;

    fn setup(model: &StarImpurityModel) -> (QubitOperator, StateVector) {
        let h = jordan_wigner(&model.hamiltonian().unwrap()).unwrap();
        let b = reference_state(&model.layout(), model.ground_sector()).unwrap();
        (h, StateVector::basis(model.n_modes(), b).unwrap())
    }

    #[test]
    fn adjoint_gradient_matches_differences() {
        let m = insulating_single_site();
        let (h, r) = setup(&m);
        for spec in [AnsatzSpec::kucj(&m, 2, true), AnsatzSpec::uccgsd(&m, true)] {
            let p = VqeProblem::new(&spec, &h, &r).unwrap();
            let x = random_parameters(p.n_params(), 0.5, 11);
            let (e, g) = p.energy_and_gradient(&x, GradientMode::Adjoint).unwrap();
            assert!((e - energy(&spec, &x, &h, &r).unwrap()).abs() < 1e-10);
            let fd = five_point_difference(|y| p.energy(y), &x, 1e-3).unwrap();
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-7, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_iterations_return_initial_energy() {
        let m = insulating_single_site();
        let (h, r) = setup(&m);
        let spec = AnsatzSpec::kucj(&m, 1, false);
        let cfg = OptimizerConfig {
            max_iterations: 0,
            restarts: 1,
            seed: 5,
            ..Default::default()
        };
        let res = minimize_energy(&spec, &h, &r, &cfg).unwrap();
        let x0 = random_parameters(64, 0.1, 5);
        assert_eq!(res.params, x0);
        assert!((res.energy - energy(&spec, &x0, &h, &r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn restarts_are_deterministic_and_variational() {
        let m = insulating_single_site();
        let (h, r) = setup(&m);
        let e_ed = exact_ground_state(&m.hamiltonian().unwrap(), m.layout(), m.ground_sector())
            .unwrap()
            .energy;
        let spec = AnsatzSpec::kucj(&m, 1, true);
        let cfg = OptimizerConfig {
            restarts: 3,
            max_iterations: 200,
            seed: 9,
            ..Default::default()
        };
        let a = minimize_energy(&spec, &h, &r, &cfg).unwrap();
        let b = minimize_energy(&spec, &h, &r, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.restarts.iter().all(|x| x.energy.unwrap() >= e_ed - 1e-9));
        assert_eq!(a.energy, a.restarts.iter().filter_map(|x| x.energy).fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn warm_start_with_zero_layer_keeps_energy() {
        let m = insulating_single_site();
        let (h, r) = setup(&m);
        let s1 = AnsatzSpec::kucj(&m, 1, false);
        let x1 = random_parameters(parameter_count(&s1), 0.3, 1);
        let x2 = warm_start_parameters(&s1, &x1, &[0.0; 32]).unwrap();
        let e1 = energy(&s1, &x1, &h, &r).unwrap();
        let e2 = energy(&s1.with_k(2), &x2, &h, &r).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn sparse_is_full_with_removed_slots_zeroed() {
        let m = insulating_single_site();
        let (_, r) = setup(&m);
        for (full, sparse) in [
            (AnsatzSpec::kucj(&m, 2, false), AnsatzSpec::kucj(&m, 2, true)),
            (AnsatzSpec::uccgsd(&m, false), AnsatzSpec::uccgsd(&m, true)),
        ] {
            let xs = random_parameters(parameter_count(&sparse), 0.4, 3);
            let xf = embed_parameters(&sparse, &xs, &full).unwrap();
            let a = prepare_state(&sparse, &xs, &r).unwrap();
            let b = prepare_state(&full, &xf, &r).unwrap();
            let d: f64 = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
    }
}
