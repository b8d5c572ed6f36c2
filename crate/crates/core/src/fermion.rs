//! Second-quantized operators on spin-orbitals and the Jordan-Wigner map.
//!
//! A term is a product of ladder operators read left to right, so
//! `[(2, true), (0, false)]` is `c†_2 c_0`. Mode `j` becomes qubit `j`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, QubitOperator, DROP_TOLERANCE};

/// One ladder operator: `(mode, is_creation)`.
pub type Ladder = (usize, bool);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }
}

/// Interleaved spin-orbital ordering: spatial orbital `p` with spin up is
/// mode `2p`, spin down is mode `2p + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinOrbitalLayout {
    pub n_spatial: usize,
}

impl SpinOrbitalLayout {
    pub fn new(n_spatial: usize) -> Self {
        Self { n_spatial }
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn mode(&self, spatial: usize, spin: Spin) -> usize {
        debug_assert!(spatial < self.n_spatial);
        match spin {
            Spin::Up => 2 * spatial,
            Spin::Down => 2 * spatial + 1,
        }
    }

    pub fn spatial(&self, mode: usize) -> usize {
        mode / 2
    }

    pub fn spin(&self, mode: usize) -> Spin {
        if mode % 2 == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    /// Bit mask of all spin-up modes.
    pub fn up_mask(&self) -> u64 {
        (0..self.n_spatial).fold(0, |m, p| m | 1 << (2 * p))
    }

    pub fn down_mask(&self) -> u64 {
        self.up_mask() << 1
    }

    /// `2 S_z` of a basis state.
    pub fn twice_sz(&self, b: u64) -> i32 {
        (b & self.up_mask()).count_ones() as i32 - (b & self.down_mask()).count_ones() as i32
    }
}

/// Applies a product of ladder operators (rightmost first) to basis state
/// `b`. Returns the resulting state and its sign, or `None` if annihilated.
pub fn apply_ladders(ops: &[Ladder], mut b: u64) -> Option<(u64, f64)> {
    let mut sign = 1.0;
    for &(mode, dagger) in ops.iter().rev() {
        let bit = 1u64 << mode;
        let occupied = b & bit != 0;
        if occupied == dagger {
            return None;
        }
        if (b & (bit - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        b ^= bit;
    }
    Some((b, sign))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    n_modes: usize,
    terms: Vec<(Vec<Ladder>, Complex64)>,
}

impl FermionOperator {
    pub fn zero(n_modes: usize) -> Self {
        Self {
            n_modes,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            terms: vec![(Vec::new(), Complex64::new(1.0, 0.0))],
        }
    }

    pub fn from_term(n_modes: usize, ops: Vec<Ladder>, coeff: Complex64) -> Result<Self> {
        let mut f = Self::zero(n_modes);
        f.add_term(ops, coeff)?;
        Ok(f)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[(Vec<Ladder>, Complex64)] {
        &self.terms
    }

    pub fn add_term(&mut self, ops: Vec<Ladder>, coeff: Complex64) -> Result<()> {
        for &(m, _) in &ops {
            if m >= self.n_modes {
                return Err(Error::ModeOutOfRange {
                    index: m,
                    n_modes: self.n_modes,
                });
            }
        }
        self.terms.push((ops, coeff));
        Ok(())
    }

    /// Adds `coeff * (term + term†)`.
    pub fn add_hermitian_pair(&mut self, ops: Vec<Ladder>, coeff: Complex64) -> Result<()> {
        let adj = adjoint_ladders(&ops);
        self.add_term(ops, coeff)?;
        self.add_term(adj, coeff.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n_modes: self.n_modes,
            terms: self.terms.iter().map(|(o, c)| (o.clone(), c * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.n_modes);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut ops = a.clone();
                ops.extend_from_slice(b);
                out.terms.push((ops, ca * cb));
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|(o, c)| (adjoint_ladders(o), c.conj()))
                .collect(),
        }
    }

    /// Canonical normal-ordered form: within each term creation operators
    /// precede annihilation operators, each group sorted by descending mode.
    /// Equal products are merged and negligible coefficients dropped.
    pub fn normal_ordered(&self) -> Self {
        let mut acc: BTreeMap<Vec<Ladder>, Complex64> = BTreeMap::new();
        for (ops, c) in &self.terms {
            normal_order_into(ops.clone(), *c, &mut acc);
        }
        Self {
            n_modes: self.n_modes,
            terms: acc
                .into_iter()
                .filter(|(_, c)| c.norm() >= DROP_TOLERANCE)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.normal_ordered().terms.is_empty()
    }

    /// Whether `self - self†` vanishes in normal-ordered form.
    pub fn is_hermitian(&self) -> bool {
        self.sub(&self.adjoint()).expect("same register").is_zero()
    }

    /// Action on a computational basis state as a list of `(state, amplitude)`
    /// contributions (unmerged).
    pub fn apply_to_basis(&self, b: u64) -> Vec<(u64, Complex64)> {
        self.terms
            .iter()
            .filter_map(|(ops, c)| apply_ladders(ops, b).map(|(t, s)| (t, c * s)))
            .collect()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: other.n_modes,
            });
        }
        Ok(())
    }
}

impl fmt::Display for FermionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (ops, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (m, d) in ops {
                write!(f, " {}{}", m, if *d { "^" } else { "" })?;
            }
        }
        Ok(())
    }
}

fn adjoint_ladders(ops: &[Ladder]) -> Vec<Ladder> {
    ops.iter().rev().map(|&(m, d)| (m, !d)).collect()
}

fn ladder_rank(a: Ladder, b: Ladder) -> bool {
    // true when `a` should stand to the right of `b`
    match (a.1, b.1) {
        (false, true) => true,
        (true, false) => false,
        _ => a.0 < b.0,
    }
}

fn normal_order_into(mut ops: Vec<Ladder>, mut coeff: Complex64, acc: &mut BTreeMap<Vec<Ladder>, Complex64>) {
    for i in 1..ops.len() {
        let mut j = i;
        while j > 0 && ladder_rank(ops[j - 1], ops[j]) {
            let (left, right) = (ops[j - 1], ops[j]);
            if left.0 == right.0 && left.1 != right.1 {
                // c_m c†_m = 1 - c†_m c_m
                let mut contracted = ops[..j - 1].to_vec();
                contracted.extend_from_slice(&ops[j + 1..]);
                normal_order_into(contracted, coeff, acc);
            }
            ops.swap(j - 1, j);
            coeff = -coeff;
            j -= 1;
        }
    }
    for w in ops.windows(2) {
        if w[0] == w[1] {
            return;
        }
    }
    *acc.entry(ops).or_default() += coeff;
}

pub fn number_operator(mode: usize, n_modes: usize) -> Result<FermionOperator> {
    FermionOperator::from_term(n_modes, vec![(mode, true), (mode, false)], Complex64::new(1.0, 0.0))
}

pub fn total_number(n_modes: usize) -> FermionOperator {
    let mut f = FermionOperator::zero(n_modes);
    for m in 0..n_modes {
        f.add_term(vec![(m, true), (m, false)], Complex64::new(1.0, 0.0))
            .expect("mode in range");
    }
    f
}

pub fn total_sz(layout: &SpinOrbitalLayout) -> FermionOperator {
    let n = layout.n_modes();
    let mut f = FermionOperator::zero(n);
    for m in 0..n {
        let w = layout.spin(m).sz();
        f.add_term(vec![(m, true), (m, false)], Complex64::new(w, 0.0))
            .expect("mode in range");
    }
    f
}

fn ladder_image(n_qubits: usize, mode: usize, dagger: bool) -> QubitOperator {
    let z_string = (0..mode).fold(PauliString::identity(), |s, q| s.with(q, Pauli::Z));
    let y_sign = if dagger { -0.5 } else { 0.5 };
    QubitOperator::from_terms(
        n_qubits,
        [
            (z_string.with(mode, Pauli::X), Complex64::new(0.5, 0.0)),
            (z_string.with(mode, Pauli::Y), Complex64::new(0.0, y_sign)),
        ],
    )
    .expect("mode checked against register")
}

/// Jordan-Wigner image: `c†_j -> (X_j - iY_j)/2 · Z_0 ... Z_{j-1}` and
/// `c_j -> (X_j + iY_j)/2 · Z_0 ... Z_{j-1}`.
pub fn jordan_wigner(f: &FermionOperator) -> Result<QubitOperator> {
    let n = f.n_modes();
    let images: Vec<[QubitOperator; 2]> = (0..n)
        .map(|m| [ladder_image(n, m, false), ladder_image(n, m, true)])
        .collect();
    let mut out = QubitOperator::zero(n);
    for (ops, c) in f.terms() {
        let mut term = QubitOperator::from_term(n, PauliString::identity(), *c)?;
        for &(m, dagger) in ops {
            if m >= n {
                return Err(Error::ModeOutOfRange { index: m, n_modes: n });
            }
            term = term.mul(&images[m][dagger as usize])?;
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn first_mode_has_no_z_string() {
        let f = FermionOperator::from_term(2, vec![(0, true)], one()).unwrap();
        let q = jordan_wigner(&f).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q.coefficient(&PauliString::single(0, Pauli::X)), Complex64::new(0.5, 0.0));
        assert_eq!(q.coefficient(&PauliString::single(0, Pauli::Y)), Complex64::new(0.0, -0.5));
    }

    #[test]
    fn second_mode_carries_z_string() {
        let f = FermionOperator::from_term(2, vec![(1, true)], one()).unwrap();
        let q = jordan_wigner(&f).unwrap();
        let zx = PauliString::from_ops([(0, Pauli::Z), (1, Pauli::X)]);
        let zy = PauliString::from_ops([(0, Pauli::Z), (1, Pauli::Y)]);
        assert_eq!(q.coefficient(&zx), Complex64::new(0.5, 0.0));
        assert_eq!(q.coefficient(&zy), Complex64::new(0.0, -0.5));
    }

    #[test]
    fn number_operator_image() {
        let q = jordan_wigner(&number_operator(0, 1).unwrap()).unwrap();
        assert_eq!(q.coefficient(&PauliString::identity()), Complex64::new(0.5, 0.0));
        assert_eq!(q.coefficient(&PauliString::single(0, Pauli::Z)), Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn anticommutator_is_identity() {
        let mut f = FermionOperator::zero(3);
        f.add_term(vec![(1, false), (1, true)], one()).unwrap();
        f.add_term(vec![(1, true), (1, false)], one()).unwrap();
        assert_eq!(jordan_wigner(&f).unwrap(), QubitOperator::identity(3));
        let no = f.normal_ordered();
        assert_eq!(no.terms(), &[(vec![], one())]);
    }

    #[test]
    fn normal_ordering_sign() {
        let f = FermionOperator::from_term(3, vec![(0, false), (2, true)], one()).unwrap();
        let no = f.normal_ordered();
        assert_eq!(no.terms(), &[(vec![(2, true), (0, false)], -one())]);
        let sq = FermionOperator::from_term(3, vec![(1, true), (1, true)], one()).unwrap();
        assert!(sq.is_zero());
    }

    #[test]
    fn basis_action_sign() {
        // c†_2 on |0b011> passes two occupied modes
        assert_eq!(apply_ladders(&[(2, true)], 0b011), Some((0b111, 1.0)));
        assert_eq!(apply_ladders(&[(2, true)], 0b001), Some((0b101, -1.0)));
        assert_eq!(apply_ladders(&[(0, false)], 0b010), None);
    }

    #[test]
    fn layout_round_trip() {
        let l = SpinOrbitalLayout::new(3);
        for m in 0..6 {
            assert_eq!(l.mode(l.spatial(m), l.spin(m)), m);
        }
        assert_eq!(l.twice_sz(0b000111), 1);
    }

    #[test]
    fn mode_out_of_range() {
        let err = FermionOperator::from_term(2, vec![(2, true)], one());
        assert!(matches!(err, Err(Error::ModeOutOfRange { .. })));
    }
}
