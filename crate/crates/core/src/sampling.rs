//! Shot-noise measurement model.
//!
//! Each Pauli term is measured with its own budget of `shots_per_term`
//! projective measurements; outcome counts are drawn from the exact
//! binomial distribution implied by the state.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::QubitOperator;
use crate::statevector::{pauli_transition, StateVector, EXPECTATION_IMAG_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots_per_term: u64,
    pub rng_seed: u64,
}

impl ShotConfig {
    pub fn new(shots_per_term: u64, rng_seed: u64) -> Result<Self> {
        let cfg = Self {
            shots_per_term,
            rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_term == 0 {
            return Err(Error::Config("shots_per_term must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self { rng_seed, ..*self }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }
}

/// Estimate of a ±1-valued observable with mean `v` from `shots` draws.
fn sample_signal(rng: &mut ChaCha8Rng, shots: u64, v: f64) -> f64 {
    let p = ((1.0 + v) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p).expect("probability clamped to [0, 1]").sample(rng);
    2.0 * k as f64 / shots as f64 - 1.0
}

/// Sampled `<psi|O|psi>`. Identity terms contribute exactly.
pub fn sample_expectation(state: &StateVector, op: &QubitOperator, cfg: &ShotConfig) -> Result<f64> {
    cfg.validate()?;
    check_hermitian(state, op)?;
    let mut rng = cfg.rng();
    let mut total = 0.0;
    for (p, c) in op.terms() {
        if p.is_identity() {
            total += c.re;
            continue;
        }
        let e = pauli_transition(state, p, state).re;
        total += c.re * sample_signal(&mut rng, cfg.shots_per_term, e);
    }
    Ok(total)
}

/// Analytic standard error of [`sample_expectation`].
pub fn expectation_standard_error(state: &StateVector, op: &QubitOperator, shots_per_term: u64) -> Result<f64> {
    check_hermitian(state, op)?;
    let var: f64 = op
        .terms()
        .filter(|(p, _)| !p.is_identity())
        .map(|(p, c)| {
            let e = pauli_transition(state, p, state).re;
            c.norm_sqr() * (1.0 - e * e).max(0.0)
        })
        .sum();
    Ok((var / shots_per_term as f64).sqrt())
}

fn check_hermitian(state: &StateVector, op: &QubitOperator) -> Result<()> {
    if state.n_qubits() != op.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits(),
            got: op.n_qubits(),
        });
    }
    let imag = op.max_imag();
    if imag > EXPECTATION_IMAG_TOL {
        return Err(Error::NotHermitian { imag });
    }
    Ok(())
}

/// Sampled `<bra|O|ket>` emulating the ancilla interference circuit: per
/// term, the `φ = 0` setting measures `Re<bra|P|ket>` and `φ = π/2`
/// measures `-Im<bra|P|ket>`.
pub fn sample_transition_amplitude(
    bra: &StateVector,
    op: &QubitOperator,
    ket: &StateVector,
    cfg: &ShotConfig,
) -> Result<Complex64> {
    cfg.validate()?;
    check_pair(bra, op, ket)?;
    let mut rng = cfg.rng();
    let mut total = Complex64::default();
    for (p, c) in op.terms() {
        let a = pauli_transition(bra, p, ket);
        let re = sample_signal(&mut rng, cfg.shots_per_term, a.re);
        let im = -sample_signal(&mut rng, cfg.shots_per_term, -a.im);
        total += c * Complex64::new(re, im);
    }
    Ok(total)
}

/// Analytic standard errors `(σ_re, σ_im)` of [`sample_transition_amplitude`].
pub fn transition_standard_error(
    bra: &StateVector,
    op: &QubitOperator,
    ket: &StateVector,
    shots_per_term: u64,
) -> Result<(f64, f64)> {
    check_pair(bra, op, ket)?;
    let (mut var_re, mut var_im) = (0.0, 0.0);
    for (p, c) in op.terms() {
        let a = pauli_transition(bra, p, ket);
        let (vr, vi) = ((1.0 - a.re * a.re).max(0.0), (1.0 - a.im * a.im).max(0.0));
        // Re(c (x + iy)) = c_re x - c_im y; Im = c_im x + c_re y
        var_re += c.re * c.re * vr + c.im * c.im * vi;
        var_im += c.im * c.im * vr + c.re * c.re * vi;
    }
    let n = shots_per_term as f64;
    Ok(((var_re / n).sqrt(), (var_im / n).sqrt()))
}

fn check_pair(bra: &StateVector, op: &QubitOperator, ket: &StateVector) -> Result<()> {
    for n in [ket.n_qubits(), op.n_qubits()] {
        if bra.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: bra.n_qubits(),
                got: n,
            });
        }
    }
    Ok(())
}
