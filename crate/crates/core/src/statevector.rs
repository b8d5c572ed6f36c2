//! Dense state vectors over `2^n` computational basis states.
//!
//! Every operation here is a pure function of its inputs and returns a new
//! state. Qubit `j` is bit `j` of the amplitude index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, QubitOperator};

/// Tolerance on the imaginary part of an expectation value of a Hermitian
/// operator.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: u64) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index as usize >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index as usize,
            });
        }
        let mut amplitudes = vec![Complex64::default(); dim];
        amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("index 0 always valid")
    }

    /// Wraps raw amplitudes; the length must be a power of two. No
    /// normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two(),
                got: len,
            });
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            amplitudes: self.amplitudes.iter().map(|a| a * s).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_dim(other.n_qubits)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// If the state is a single computational basis state (up to phase),
    /// returns its index.
    pub fn as_basis_state(&self, tol: f64) -> Option<u64> {
        let mut found = None;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let n = a.norm();
            if n > tol {
                if found.is_some() || (n - 1.0).abs() > tol {
                    return None;
                }
                found = Some(i as u64);
            }
        }
        found
    }

    fn check_dim(&self, n_qubits: usize) -> Result<()> {
        if n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: n_qubits,
            });
        }
        Ok(())
    }
}

/// `P|psi>`.
pub fn apply_pauli_string(state: &StateVector, p: &PauliString) -> Result<StateVector> {
    p.check_range(state.n_qubits)?;
    let mut out = vec![Complex64::default(); state.dim()];
    for (b, a) in state.amplitudes.iter().enumerate() {
        let (t, phase) = p.apply_to_basis(b as u64);
        out[t as usize] = phase * a;
    }
    Ok(StateVector {
        n_qubits: state.n_qubits,
        amplitudes: out,
    })
}

/// `exp(-i angle P / 2)|psi> = cos(angle/2)|psi> - i sin(angle/2) P|psi>`.
pub fn apply_pauli_rotation(
    state: &StateVector,
    p: &PauliString,
    angle: f64,
) -> Result<StateVector> {
    if !angle.is_finite() {
        return Err(Error::NonFinite("rotation angle"));
    }
    let rotated = apply_pauli_string(state, p)?;
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(angle / 2.0).sin());
    let amplitudes = state
        .amplitudes
        .iter()
        .zip(&rotated.amplitudes)
        .map(|(a, pa)| c * a + s * pa)
        .collect();
    Ok(StateVector {
        n_qubits: state.n_qubits,
        amplitudes,
    })
}

/// Applies `exp(G)` for a diagonal anti-Hermitian generator `G` (Z/identity
/// strings with purely imaginary coefficients) as an exact per-basis-state
/// phase.
pub fn apply_number_diagonal(
    state: &StateVector,
    diag_generator: &QubitOperator,
) -> Result<StateVector> {
    state.check_dim(diag_generator.n_qubits())?;
    for (p, c) in diag_generator.terms() {
        if !p.is_diagonal() {
            return Err(Error::InvalidDiagonalGenerator(format!(
                "term [{p}] contains X or Y"
            )));
        }
        if c.re.abs() > 1e-12 {
            return Err(Error::InvalidDiagonalGenerator(format!(
                "term [{p}] has real coefficient {:e}",
                c.re
            )));
        }
    }
    let terms: Vec<(u64, f64)> = diag_generator
        .terms()
        .map(|(p, c)| (p.z_mask(), c.im))
        .collect();
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(b, a)| {
            let theta: f64 = terms
                .iter()
                .map(|&(z, w)| {
                    if (b as u64 & z).count_ones() % 2 == 0 {
                        w
                    } else {
                        -w
                    }
                })
                .sum();
            a * Complex64::from_polar(1.0, theta)
        })
        .collect();
    Ok(StateVector {
        n_qubits: state.n_qubits,
        amplitudes,
    })
}

/// `O|psi>` for an arbitrary (not necessarily Hermitian) operator.
pub fn apply_operator(state: &StateVector, op: &QubitOperator) -> Result<StateVector> {
    state.check_dim(op.n_qubits())?;
    let mut out = vec![Complex64::default(); state.dim()];
    for (p, c) in op.terms() {
        for (b, a) in state.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (t, phase) = p.apply_to_basis(b as u64);
            out[t as usize] += c * phase * a;
        }
    }
    Ok(StateVector {
        n_qubits: state.n_qubits,
        amplitudes: out,
    })
}

/// `<bra|P|ket>` for a single string.
pub(crate) fn pauli_transition(bra: &StateVector, p: &PauliString, ket: &StateVector) -> Complex64 {
    let mut acc = Complex64::default();
    for (b, a) in ket.amplitudes.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let (t, phase) = p.apply_to_basis(b as u64);
        acc += bra.amplitudes[t as usize].conj() * phase * a;
    }
    acc
}

/// `<bra|O|ket>`, exact.
pub fn transition_amplitude(
    bra: &StateVector,
    op: &QubitOperator,
    ket: &StateVector,
) -> Result<Complex64> {
    bra.check_dim(ket.n_qubits)?;
    bra.check_dim(op.n_qubits())?;
    Ok(op
        .terms()
        .map(|(p, c)| c * pauli_transition(bra, p, ket))
        .sum())
}

/// `<psi|O|psi>` for Hermitian `O`.
pub fn expectation(state: &StateVector, op: &QubitOperator) -> Result<f64> {
    let imag = op.max_imag();
    if imag > EXPECTATION_IMAG_TOL {
        return Err(Error::NotHermitian { imag });
    }
    let v = transition_amplitude(state, op, state)?;
    if v.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(Error::NotHermitian { imag: v.im });
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bit_flip_and_eigenstate() {
        let zero = StateVector::zero_state(1);
        let flipped = apply_pauli_string(&zero, &PauliString::single(0, Pauli::X)).unwrap();
        assert_eq!(flipped.as_basis_state(1e-12), Some(1));
        let same = apply_pauli_string(&zero, &PauliString::single(0, Pauli::Z)).unwrap();
        assert_eq!(same, zero);
    }

    #[test]
    fn half_rotation() {
        let zero = StateVector::zero_state(1);
        let out = apply_pauli_rotation(&zero, &PauliString::single(0, Pauli::X), PI).unwrap();
        assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!(out.amplitudes()[0].norm() < 1e-15);
    }

    #[test]
    fn rotation_rejects_nan() {
        let zero = StateVector::zero_state(1);
        let err = apply_pauli_rotation(&zero, &PauliString::single(0, Pauli::X), f64::NAN);
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    #[test]
    fn out_of_range_string() {
        let zero = StateVector::zero_state(2);
        let err = apply_pauli_string(&zero, &PauliString::single(2, Pauli::X));
        assert!(matches!(err, Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn expectation_basics() {
        let one = StateVector::basis(1, 1).unwrap();
        let z = QubitOperator::from_term(1, PauliString::single(0, Pauli::Z), c(1.0, 0.0)).unwrap();
        assert_eq!(expectation(&one, &z).unwrap(), -1.0);
        assert_eq!(expectation(&one, &QubitOperator::identity(1)).unwrap(), 1.0);
        let bad = QubitOperator::from_term(1, PauliString::single(0, Pauli::Z), c(0.0, 1.0)).unwrap();
        assert!(matches!(expectation(&one, &bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn number_diagonal_phase() {
        let one = StateVector::basis(1, 1).unwrap();
        let theta = 0.37;
        // i theta (1 - Z0)/2
        let gen = QubitOperator::from_terms(
            1,
            [
                (PauliString::identity(), c(0.0, theta / 2.0)),
                (PauliString::single(0, Pauli::Z), c(0.0, -theta / 2.0)),
            ],
        )
        .unwrap();
        let out = apply_number_diagonal(&one, &gen).unwrap();
        assert!((out.amplitudes()[1] - Complex64::from_polar(1.0, theta)).norm() < 1e-15);

        let not_diag = QubitOperator::from_term(1, PauliString::single(0, Pauli::X), c(0.0, 1.0)).unwrap();
        assert!(apply_number_diagonal(&one, &not_diag).is_err());
        let not_anti = QubitOperator::from_term(1, PauliString::single(0, Pauli::Z), c(1.0, 0.0)).unwrap();
        assert!(apply_number_diagonal(&one, &not_anti).is_err());
    }

    #[test]
    fn transition_of_orthogonal_states() {
        let a = StateVector::basis(2, 1).unwrap();
        let b = StateVector::basis(2, 2).unwrap();
        let id = QubitOperator::identity(2);
        assert_eq!(transition_amplitude(&a, &id, &b).unwrap(), c(0.0, 0.0));
        assert_eq!(transition_amplitude(&a, &id, &a).unwrap(), c(1.0, 0.0));
        let wrong = StateVector::basis(3, 0).unwrap();
        assert!(transition_amplitude(&a, &id, &wrong).is_err());
    }
}
