//! Fixed particle-number, fixed `S_z` subspaces and sparse operators on them.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{apply_ladders, FermionOperator, SpinOrbitalLayout};
use crate::pauli::QubitOperator;
use crate::statevector::StateVector;

/// Quantum numbers of a sector. `S_z` is stored doubled so it stays integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub n_particles: usize,
    pub twice_sz: i32,
}

impl Sector {
    pub fn new(n_particles: usize, twice_sz: i32) -> Self {
        Self {
            n_particles,
            twice_sz,
        }
    }

    pub fn of_state(layout: &SpinOrbitalLayout, b: u64) -> Self {
        Self::new(b.count_ones() as usize, layout.twice_sz(b))
    }
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    layout: SpinOrbitalLayout,
    sector: Sector,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl SectorBasis {
    /// All basis states of the sector in ascending integer order.
    pub fn new(layout: SpinOrbitalLayout, sector: Sector) -> Result<Self> {
        let n = layout.n_modes();
        let n_up = sector.n_particles as i32 + sector.twice_sz;
        if n_up < 0 || n_up % 2 != 0 || sector.n_particles > n {
            return Err(Error::EmptySector);
        }
        let n_up = (n_up / 2) as usize;
        let n_dn = sector.n_particles - n_up.min(sector.n_particles);
        if n_up > layout.n_spatial || n_dn > layout.n_spatial || n_up > sector.n_particles {
            return Err(Error::EmptySector);
        }
        let ups = combinations(layout.n_spatial, n_up);
        let dns = combinations(layout.n_spatial, n_dn);
        let mut states = Vec::with_capacity(ups.len() * dns.len());
        for &u in &ups {
            for &d in &dns {
                states.push(interleave(u, d, layout.n_spatial));
            }
        }
        states.sort_unstable();
        if states.is_empty() {
            return Err(Error::EmptySector);
        }
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self {
            layout,
            sector,
            states,
            index,
        })
    }

    pub fn layout(&self) -> &SpinOrbitalLayout {
        &self.layout
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> u64 {
        self.states[i]
    }

    pub fn index_of(&self, b: u64) -> Option<usize> {
        self.index.get(&b).copied()
    }

    /// Embeds sector amplitudes into a full `2^n` state vector.
    pub fn embed(&self, amps: &[Complex64]) -> StateVector {
        let mut full = vec![Complex64::default(); 1usize << self.layout.n_modes()];
        for (a, &b) in amps.iter().zip(&self.states) {
            full[b as usize] = *a;
        }
        StateVector::from_amplitudes(full).expect("power-of-two length")
    }

    /// Restricts a full state vector to this sector, also returning the
    /// squared norm of the discarded part.
    pub fn restrict(&self, state: &StateVector) -> Result<(Vec<Complex64>, f64)> {
        if state.n_qubits() != self.layout.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n_modes(),
                got: state.n_qubits(),
            });
        }
        let amps = state.amplitudes();
        let inside: Vec<Complex64> = self.states.iter().map(|&b| amps[b as usize]).collect();
        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let kept: f64 = inside.iter().map(|a| a.norm_sqr()).sum();
        Ok((inside, (total - kept).max(0.0)))
    }
}

/// Lowest `k` of `n` bits set, in every combination, as bit masks.
fn combinations(n: usize, k: usize) -> Vec<u64> {
    (0u64..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .collect()
}

fn interleave(up: u64, dn: u64, n_spatial: usize) -> u64 {
    let mut b = 0;
    for p in 0..n_spatial {
        b |= ((up >> p) & 1) << (2 * p);
        b |= ((dn >> p) & 1) << (2 * p + 1);
    }
    b
}

/// Compressed-sparse-row complex matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c as u32);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k].norm() > 1e-14 {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        }
    }

    /// `x† A x`.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::default();
        for (r, xr) in x.iter().enumerate() {
            let mut row = Complex64::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * x[self.cols[k] as usize];
            }
            acc += xr.conj() * row;
        }
        acc
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im.abs() < 1e-14)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }

    fn get(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&(c as u32)) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => Complex64::default(),
        }
    }

    /// Largest deviation from Hermiticity, `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                let t = if c < self.n_rows { self.get(c, r) } else { Complex64::default() };
                worst = worst.max((self.vals[k] - t.conj()).norm());
            }
        }
        worst
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        (0..self.n_rows)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Matrix of a number- and `S_z`-conserving fermion operator restricted to a
/// sector. Terms that leave the sector are an error.
pub fn fermion_matrix(op: &FermionOperator, basis: &SectorBasis) -> Result<SparseMatrix> {
    let mut trip = Vec::new();
    for (col, &b) in basis.states().iter().enumerate() {
        for (t, amp) in op.apply_to_basis(b) {
            let row = basis.index_of(t).ok_or_else(|| {
                Error::Config(format!("operator leaves sector {:?}", basis.sector()))
            })?;
            trip.push((row, col, amp));
        }
    }
    Ok(SparseMatrix::from_triplets(basis.dim(), basis.dim(), trip))
}

/// Matrix of a qubit operator restricted to a sector; the operator must map
/// the sector into itself.
pub fn qubit_matrix(op: &QubitOperator, basis: &SectorBasis) -> Result<SparseMatrix> {
    if op.n_qubits() != basis.layout().n_modes() {
        return Err(Error::DimensionMismatch {
            expected: basis.layout().n_modes(),
            got: op.n_qubits(),
        });
    }
    let mut trip = Vec::new();
    // Individual strings may leave the sector while their sum does not, so
    // only the summed out-of-sector amplitude of each column is checked.
    let mut leak: HashMap<(u64, usize), Complex64> = HashMap::new();
    for (col, &b) in basis.states().iter().enumerate() {
        for (p, c) in op.terms() {
            let (t, phase) = p.apply_to_basis(b);
            match basis.index_of(t) {
                Some(row) => trip.push((row, col, c * phase)),
                None => *leak.entry((t, col)).or_default() += c * phase,
            }
        }
    }
    if leak.values().any(|v| v.norm() > 1e-12) {
        return Err(Error::Config(format!(
            "operator leaves sector {:?}",
            basis.sector()
        )));
    }
    Ok(SparseMatrix::from_triplets(basis.dim(), basis.dim(), trip))
}

/// Matrix of a single ladder operator between two sectors.
pub fn ladder_matrix(mode: usize, dagger: bool, from: &SectorBasis, to: &SectorBasis) -> SparseMatrix {
    let mut trip = Vec::new();
    for (col, &b) in from.states().iter().enumerate() {
        if let Some((t, s)) = apply_ladders(&[(mode, dagger)], b) {
            if let Some(row) = to.index_of(t) {
                trip.push((row, col, Complex64::new(s, 0.0)));
            }
        }
    }
    SparseMatrix::from_triplets(to.dim(), from.dim(), trip)
}

/// Sector reached from `sector` by applying one ladder operator on `mode`.
pub fn shifted_sector(layout: &SpinOrbitalLayout, sector: Sector, mode: usize, dagger: bool) -> Option<Sector> {
    let ds = if mode % 2 == 0 { 1 } else { -1 } * if dagger { 1 } else { -1 };
    let n = if dagger {
        sector.n_particles + 1
    } else {
        sector.n_particles.checked_sub(1)?
    };
    if n > layout.n_modes() {
        return None;
    }
    Some(Sector::new(n, sector.twice_sz + ds))
}
