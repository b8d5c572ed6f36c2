//! Pauli strings and weighted sums of them.
//!
//! A [`PauliString`] is stored in symplectic form: bit `j` of `x` is set when
//! qubit `j` carries X or Y, bit `j` of `z` when it carries Z or Y. The string
//! denotes the Hermitian operator `i^{|x & z|} X^x Z^z`, so `Y = i X Z` and the
//! string itself never carries a phase. Qubit `j` is bit `j` of a basis-state
//! index (little-endian).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with modulus below this are dropped on canonicalization.
pub const DROP_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

/// `i^k` for `k` taken mod 4.
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self::identity().with(qubit, p)
    }

    /// Builds a string from `(qubit, pauli)` pairs. Later entries on the same
    /// qubit overwrite earlier ones.
    pub fn from_ops<I: IntoIterator<Item = (usize, Pauli)>>(ops: I) -> Self {
        ops.into_iter()
            .fold(Self::identity(), |acc, (q, p)| acc.with(q, p))
    }

    pub fn with(mut self, qubit: usize, p: Pauli) -> Self {
        assert!(qubit < 64, "qubit index {qubit} exceeds 64-qubit limit");
        let bit = 1u64 << qubit;
        self.x &= !bit;
        self.z &= !bit;
        match p {
            Pauli::X => self.x |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit;
            }
            Pauli::Z => self.z |= bit,
        }
        self
    }

    pub fn from_masks(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Contains only Z factors (diagonal in the computational basis).
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Highest qubit touched plus one, or 0 for the identity.
    pub fn min_qubits(&self) -> usize {
        let m = self.x | self.z;
        64 - m.leading_zeros() as usize
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
        }
    }

    /// Non-identity factors in ascending qubit order.
    pub fn ops(&self) -> Vec<(usize, Pauli)> {
        (0..self.min_qubits())
            .filter_map(|q| self.get(q).map(|p| (q, p)))
            .collect()
    }

    /// Action on a basis state: `P|b> = phase |b ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        let sign = (b & self.z).count_ones() & 1;
        (b ^ self.x, i_pow(self.y_count() + 2 * sign))
    }

    /// Product `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        // X^x1 Z^z1 X^x2 Z^z2 = (-1)^{|z1 & x2|} X^{x1^x2} Z^{z1^z2}
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let swaps = (self.z & other.x).count_ones();
        let y3 = (x & z).count_ones();
        // i^{y1+y2+2*swaps-y3}; add 4*64 to stay non-negative
        let k = self.y_count() + other.y_count() + 2 * swaps + 256 - y3;
        (i_pow(k), PauliString { x, z })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub(crate) fn check_range(&self, n_qubits: usize) -> Result<()> {
        let needed = self.min_qubits();
        if needed > n_qubits {
            return Err(Error::QubitOutOfRange {
                index: needed - 1,
                n_qubits,
            });
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self
            .ops()
            .into_iter()
            .map(|(q, p)| format!("{p:?}{q}"))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Weighted sum of Pauli strings on a fixed number of qubits, kept in
/// canonical form: one entry per string, no negligible coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOperator {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl QubitOperator {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(n_qubits, PauliString::identity(), Complex64::new(1.0, 0.0))
            .expect("identity is always in range")
    }

    pub fn from_term(n_qubits: usize, p: PauliString, coeff: Complex64) -> Result<Self> {
        let mut op = Self::zero(n_qubits);
        op.add_term(p, coeff)?;
        Ok(op)
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut op = Self::zero(n_qubits);
        for (p, c) in terms {
            op.add_term(p, c)?;
        }
        Ok(op)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical (sorted) order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) -> Result<()> {
        p.check_range(self.n_qubits)?;
        let entry = self.terms.entry(p).or_default();
        *entry += coeff;
        if entry.norm() < DROP_TOLERANCE {
            self.terms.remove(&p);
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(*p, c * s).expect("same register");
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*p, *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.n_qubits);
        for (p1, c1) in &self.terms {
            for (p2, c2) in &other.terms {
                let (phase, p) = p1.mul(p2);
                out.add_term(p, c1 * c2 * phase)?;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(*p, c.conj()).expect("same register");
        }
        out
    }

    /// Largest imaginary part among coefficients. Pauli strings are
    /// Hermitian, so a canonical operator is Hermitian iff this is ~0.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Drops terms whose coefficient modulus is at most `tol`.
    pub fn chop(&self, tol: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(p, c)| (*p, *c))
                .collect(),
        }
    }

    /// Same operator on a register of `n_qubits` (which must cover every term).
    pub fn widen(&self, n_qubits: usize) -> Result<Self> {
        Self::from_terms(n_qubits, self.terms.iter().map(|(p, c)| (*p, *c)))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(())
    }
}

impl fmt::Display for QubitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(p, c)| format!("({:+.6}{:+.6}i) [{p}]", c.re, c.im))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
