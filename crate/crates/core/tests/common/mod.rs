//! Dense reference matrices built by explicit Kronecker products.

#![allow(dead_code)]

use impurity_vqe::fermion::{jordan_wigner, FermionOperator, Ladder};
use impurity_vqe::pauli::{Pauli, PauliString, QubitOperator};
use impurity_vqe::statevector::StateVector;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<Complex64>;

pub const TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single_qubit(p: Option<Pauli>) -> M {
    let (o, z, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match p {
        None => M::from_row_slice(2, 2, &[z, o, o, z]),
        Some(Pauli::X) => M::from_row_slice(2, 2, &[o, z, z, o]),
        Some(Pauli::Y) => M::from_row_slice(2, 2, &[o, -i, i, o]),
        Some(Pauli::Z) => M::from_row_slice(2, 2, &[z, o, o, -z]),
    }
}

/// Qubit 0 is the least significant bit, so it is the rightmost factor.
pub fn kron_pauli(p: &PauliString, n: usize) -> M {
    (0..n).rev().fold(M::identity(1, 1), |acc, q| acc.kronecker(&single_qubit(p.get(q))))
}

pub fn dense_op(op: &QubitOperator) -> M {
    let n = op.n_qubits();
    op.terms().fold(M::zeros(1 << n, 1 << n), |acc, (p, w)| acc + kron_pauli(p, n) * *w)
}

pub fn dense_fermion(op: &FermionOperator) -> M {
    dense_op(&jordan_wigner(op).unwrap())
}

pub fn ladder(n: usize, ops: Vec<Ladder>) -> FermionOperator {
    FermionOperator::from_term(n, ops, c(1.0, 0.0)).unwrap()
}

pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let amps: Vec<Complex64> = (0..1 << n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    StateVector::from_amplitudes(amps).unwrap().normalized()
}

pub fn vec_of(s: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

pub fn max_diff(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_strings(n: usize) -> Vec<PauliString> {
    let ops = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
    (0..4usize.pow(n as u32))
        .map(|mut k| {
            let mut p = PauliString::identity();
            for q in 0..n {
                if let Some(o) = ops[k % 4] {
                    p = p.with(q, o);
                }
                k /= 4;
            }
            p
        })
        .collect()
}
