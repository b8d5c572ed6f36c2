//! Spectral moments, their causal pole representation, and the Green's
//! functions derived from it.
//!
//! Moments follow the spectral convention `M^{(m)} = ∫ A(ω) ω^m dω`, with the
//! hole sector integrating over `ω ≤ 0` and the particle sector over `ω ≥ 0`.
//! Residues are Hermitian matrices over a fixed list of tracked orbitals.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Default Lorentzian broadening for spectral functions.
pub const DEFAULT_ETA: f64 = 0.05;
/// Relative eigenvalue threshold below which overlap directions are dropped.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Allowed sign violation of pole energies, and of residue eigenvalues.
pub const CAUSALITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralSector {
    Particle,
    Hole,
}

impl SpectralSector {
    pub fn name(self) -> &'static str {
        match self {
            SpectralSector::Particle => "particle",
            SpectralSector::Hole => "hole",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMoments {
    /// Spin-orbital labels of the matrix rows/columns.
    pub orbitals: Vec<usize>,
    pub hole: Vec<CMat>,
    pub particle: Vec<CMat>,
}

impl SpectralMoments {
    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn sector(&self, s: SpectralSector) -> &[CMat] {
        match s {
            SpectralSector::Particle => &self.particle,
            SpectralSector::Hole => &self.hole,
        }
    }

    /// Keeps orders `0..=m_max` in both sectors.
    pub fn truncated(&self, m_max: usize) -> Self {
        Self {
            orbitals: self.orbitals.clone(),
            hole: self.hole.iter().take(m_max + 1).cloned().collect(),
            particle: self.particle.iter().take(m_max + 1).cloned().collect(),
        }
    }

    /// `M^{h,(0)} + M^{p,(0)}`.
    pub fn zeroth_total(&self) -> CMat {
        &self.hole[0] + &self.particle[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub energy: f64,
    pub residue: CMat,
    pub sector: SpectralSector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleRepresentation {
    pub orbitals: Vec<usize>,
    pub poles: Vec<Pole>,
}

impl PoleRepresentation {
    pub fn empty(orbitals: Vec<usize>) -> Self {
        Self {
            orbitals,
            poles: Vec::new(),
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn total_weight(&self) -> CMat {
        let n = self.n_orbitals();
        self.poles
            .iter()
            .fold(CMat::zeros(n, n), |acc, p| acc + &p.residue)
    }

    /// Position of a spin-orbital label among the tracked orbitals.
    pub fn orbital_index(&self, orbital: usize) -> Option<usize> {
        self.orbitals.iter().position(|&o| o == orbital)
    }

    /// Smallest residue eigenvalue over all poles (0 when there are none).
    pub fn min_residue_eigenvalue(&self) -> f64 {
        self.poles
            .iter()
            .map(|p| min_eigenvalue(&p.residue))
            .fold(0.0, f64::min)
    }

    /// Poles sitting on the wrong side of zero for their sector, or residues
    /// that are not positive semidefinite.
    pub fn check_causality(&self) -> Result<()> {
        for p in &self.poles {
            let wrong_side = match p.sector {
                SpectralSector::Particle => p.energy < -CAUSALITY_TOLERANCE,
                SpectralSector::Hole => p.energy > CAUSALITY_TOLERANCE,
            };
            if wrong_side || !p.energy.is_finite() {
                return Err(Error::Causality {
                    energy: p.energy,
                    sector: p.sector.name(),
                });
            }
        }
        let scale = self
            .poles
            .iter()
            .map(|p| p.residue.norm())
            .fold(1.0, f64::max);
        let worst = self.min_residue_eigenvalue();
        if worst < -CAUSALITY_TOLERANCE * scale {
            return Err(Error::InvalidMoments(format!(
                "residue with negative eigenvalue {worst:e}"
            )));
        }
        Ok(())
    }

    /// `(energy, weight)` pairs of one diagonal element.
    pub fn diagonal_measure(&self, orbital_index: usize) -> Vec<(f64, f64)> {
        self.poles
            .iter()
            .map(|p| (p.energy, p.residue[(orbital_index, orbital_index)].re))
            .collect()
    }
}

fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
pub(crate) fn hermitian_eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Diagnostics of one block-Lanczos run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosInfo {
    /// Rank retained from the zeroth moment.
    pub rank: usize,
    /// Width of each Lanczos block.
    pub block_widths: Vec<usize>,
    /// Number of overlap directions dropped as numerically null or negative.
    pub dropped_directions: usize,
}

/// Lanczos vectors stored as matrix polynomials in the implicit Hamiltonian
/// acting on the orthonormalized first block: `q = Σ_k H^k q_0 C[k]`.
struct PolyBlock {
    coeffs: Vec<CMat>,
}

impl PolyBlock {
    fn width(&self) -> usize {
        self.coeffs[0].ncols()
    }

    /// `q_a† H^shift q_b` from normalized moments `t[m] = q_0† H^m q_0`.
    fn inner(a: &PolyBlock, b: &PolyBlock, shift: usize, t: &[CMat]) -> CMat {
        let mut out = CMat::zeros(a.width(), b.width());
        for (k, ca) in a.coeffs.iter().enumerate() {
            for (l, cb) in b.coeffs.iter().enumerate() {
                out += ca.adjoint() * &t[k + l + shift] * cb;
            }
        }
        out
    }

    fn times_h(&self) -> PolyBlock {
        let zero = CMat::zeros(self.coeffs[0].nrows(), self.width());
        let mut coeffs = vec![zero];
        coeffs.extend(self.coeffs.iter().cloned());
        PolyBlock { coeffs }
    }

    fn sub_times(&mut self, other: &PolyBlock, m: &CMat) {
        while self.coeffs.len() < other.coeffs.len() {
            self.coeffs
                .push(CMat::zeros(self.coeffs[0].nrows(), self.width()));
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            self.coeffs[k] -= c * m;
        }
    }

    fn times(&self, m: &CMat) -> PolyBlock {
        PolyBlock {
            coeffs: self.coeffs.iter().map(|c| c * m).collect(),
        }
    }
}

/// Poles of a single sector from its moments `M^{(0..)}`. Uses
/// `L = len / 2` blocks, so orders `0..2L-1` are reproduced exactly.
pub fn block_lanczos_sector(moments: &[CMat]) -> Result<(Vec<(f64, CMat)>, LanczosInfo)> {
    if moments.is_empty() {
        return Err(Error::InvalidMoments("no moments supplied".into()));
    }
    let n = moments[0].nrows();
    for m in moments {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::InvalidMoments("moment matrices differ in shape".into()));
        }
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("spectral moment"));
        }
    }
    let n_blocks = moments.len() / 2;
    let (lam, vecs) = hermitian_eigh(&moments[0]);
    let scale0 = lam.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if lam.first().copied().unwrap_or(0.0) < -1e-6 * scale0.max(1.0) {
        return Err(Error::InvalidMoments(format!(
            "zeroth moment is not positive semidefinite (eigenvalue {:e})",
            lam[0]
        )));
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| lam[i] > RANK_TOLERANCE * scale0.max(1e-300))
        .collect();
    let rank = keep.len();
    let mut info = LanczosInfo {
        rank,
        block_widths: Vec::new(),
        dropped_directions: 0,
    };
    if rank == 0 || n_blocks == 0 {
        return Ok((Vec::new(), info));
    }
    // M0 ≈ X X†, S = pseudo-inverse square root, t[m] = S† M[m] S.
    let x = CMat::from_fn(n, rank, |r, c| vecs[(r, keep[c])] * lam[keep[c]].sqrt());
    let s = CMat::from_fn(n, rank, |r, c| vecs[(r, keep[c])] / lam[keep[c]].sqrt());
    let t: Vec<CMat> = moments
        .iter()
        .map(|m| hermitize(&(s.adjoint() * m * &s)))
        .collect();

    let mut blocks: Vec<PolyBlock> = vec![PolyBlock {
        coeffs: vec![CMat::identity(rank, rank)],
    }];
    let mut a_blocks: Vec<CMat> = Vec::new();
    let mut b_blocks: Vec<CMat> = Vec::new();
    for j in 0..n_blocks {
        let q = &blocks[j];
        let a = hermitize(&PolyBlock::inner(q, q, 1, &t));
        a_blocks.push(a.clone());
        info.block_widths.push(q.width());
        if j + 1 == n_blocks {
            break;
        }
        let mut r = q.times_h();
        r.sub_times(q, &a);
        if j > 0 {
            r.sub_times(&blocks[j - 1], &b_blocks[j - 1].adjoint());
        }
        let overlap = hermitize(&PolyBlock::inner(&r, &r, 0, &t));
        let (mu, v) = hermitian_eigh(&overlap);
        let scale = mu
            .iter()
            .fold(a.norm().powi(2).max(1.0), |acc, &m| acc.max(m.abs()));
        let kept: Vec<usize> = (0..mu.len())
            .filter(|&i| mu[i] > RANK_TOLERANCE * scale)
            .collect();
        info.dropped_directions += mu.len() - kept.len();
        if kept.is_empty() {
            break;
        }
        let w = q.width();
        let b = CMat::from_fn(kept.len(), w, |r_, c| v[(c, kept[r_])].conj() * mu[kept[r_]].sqrt());
        let inv = CMat::from_fn(w, kept.len(), |r_, c| v[(r_, kept[c])] / mu[kept[c]].sqrt());
        b_blocks.push(b);
        blocks.push(r.times(&inv));
    }

    let widths: Vec<usize> = a_blocks.iter().map(|a| a.nrows()).collect();
    let offsets: Vec<usize> = widths
        .iter()
        .scan(0, |acc, &w| {
            let o = *acc;
            *acc += w;
            Some(o)
        })
        .collect();
    let dim: usize = widths.iter().sum();
    let mut h = CMat::zeros(dim, dim);
    for (j, a) in a_blocks.iter().enumerate() {
        h.view_mut((offsets[j], offsets[j]), (widths[j], widths[j]))
            .copy_from(a);
    }
    for (j, b) in b_blocks.iter().enumerate().take(a_blocks.len() - 1) {
        let (r0, c0) = (offsets[j + 1], offsets[j]);
        h.view_mut((r0, c0), (widths[j + 1], widths[j])).copy_from(b);
        h.view_mut((c0, r0), (widths[j], widths[j + 1]))
            .copy_from(&b.adjoint());
    }
    let (energies, u) = hermitian_eigh(&h);
    let poles = energies
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let first = u.view((0, i), (rank, 1)).clone_owned();
            let v = &x * first;
            (e, &v * v.adjoint())
        })
        .collect();
    Ok((poles, info))
}

/// Both sectors, concatenated hole first.
pub fn block_lanczos(m: &SpectralMoments) -> Result<PoleRepresentation> {
    Ok(block_lanczos_with_info(m)?.0)
}

pub fn block_lanczos_with_info(m: &SpectralMoments) -> Result<(PoleRepresentation, [LanczosInfo; 2])> {
    let (hole, hi) = block_lanczos_sector(&m.hole)?;
    let (particle, pi) = block_lanczos_sector(&m.particle)?;
    let mut poles = Vec::with_capacity(hole.len() + particle.len());
    for (energy, residue) in hole {
        poles.push(Pole {
            energy,
            residue,
            sector: SpectralSector::Hole,
        });
    }
    for (energy, residue) in particle {
        poles.push(Pole {
            energy,
            residue,
            sector: SpectralSector::Particle,
        });
    }
    Ok((
        PoleRepresentation {
            orbitals: m.orbitals.clone(),
            poles,
        },
        [hi, pi],
    ))
}

/// `Σ_i w_i ε_i^m` per sector for `m = 0..=m_max`.
pub fn reconstruct_moments(p: &PoleRepresentation, m_max: usize) -> SpectralMoments {
    let n = p.n_orbitals();
    let mut hole = vec![CMat::zeros(n, n); m_max + 1];
    let mut particle = vec![CMat::zeros(n, n); m_max + 1];
    for pole in &p.poles {
        let target = match pole.sector {
            SpectralSector::Hole => &mut hole,
            SpectralSector::Particle => &mut particle,
        };
        let mut pow = 1.0;
        for m in target.iter_mut() {
            *m += pole.residue.scale(pow);
            pow *= pole.energy;
        }
    }
    SpectralMoments {
        orbitals: p.orbitals.clone(),
        hole,
        particle,
    }
}

/// Lorentzian-broadened `A(ω)` at every grid point.
pub fn spectral_function(p: &PoleRepresentation, omega: &[f64], eta: f64) -> Result<Vec<CMat>> {
    if !(eta > 0.0) {
        return Err(Error::Config(format!("broadening must be positive, got {eta}")));
    }
    let n = p.n_orbitals();
    Ok(omega
        .iter()
        .map(|&w| {
            p.poles.iter().fold(CMat::zeros(n, n), |acc, pole| {
                let l = eta / std::f64::consts::PI / ((w - pole.energy).powi(2) + eta * eta);
                acc + pole.residue.scale(l)
            })
        })
        .collect())
}

/// Diagonal element `A_ii(ω)` of [`spectral_function`].
pub fn spectral_function_diagonal(p: &PoleRepresentation, orbital_index: usize, omega: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return Err(Error::Config(format!("broadening must be positive, got {eta}")));
    }
    if orbital_index >= p.n_orbitals() {
        return Err(Error::DimensionMismatch {
            expected: p.n_orbitals(),
            got: orbital_index,
        });
    }
    let measure = p.diagonal_measure(orbital_index);
    Ok(omega
        .iter()
        .map(|&w| {
            measure
                .iter()
                .map(|&(e, wt)| wt * eta / std::f64::consts::PI / ((w - e).powi(2) + eta * eta))
                .sum()
        })
        .collect())
}

/// Zero-temperature imaginary-time Green's function. For `τ > 0` only
/// particle poles contribute, `-Σ w e^{-ετ}`; for `τ < 0` only hole poles,
/// `+Σ w e^{-ετ}` (decaying, since `ε ≤ 0`). `τ = 0` is taken as `0⁺`.
pub fn imaginary_time_gf(p: &PoleRepresentation, tau: &[f64]) -> Result<Vec<CMat>> {
    p.check_causality()?;
    let n = p.n_orbitals();
    Ok(tau
        .iter()
        .map(|&t| {
            p.poles.iter().fold(CMat::zeros(n, n), |acc, pole| {
                match (pole.sector, t >= 0.0) {
                    (SpectralSector::Particle, true) => acc - pole.residue.scale((-pole.energy * t).exp()),
                    (SpectralSector::Hole, false) => acc + pole.residue.scale((-pole.energy * t).exp()),
                    _ => acc,
                }
            })
        })
        .collect())
}

/// `G(iω_n) = Σ_i w_i / (iω_n - ε_i)` for the given real `ω_n`.
pub fn matsubara_gf(p: &PoleRepresentation, frequencies: &[f64]) -> Result<Vec<CMat>> {
    let n = p.n_orbitals();
    frequencies
        .iter()
        .map(|&w| {
            if w == 0.0 || !w.is_finite() {
                return Err(Error::Config(format!("Matsubara frequency must be nonzero and finite, got {w}")));
            }
            Ok(p.poles.iter().fold(CMat::zeros(n, n), |acc, pole| {
                acc + pole.residue.map(|r| r / Complex64::new(-pole.energy, w))
            }))
        })
        .collect()
}

/// Drops poles with `|ε| ≤ cut`. Returns the filtered set and the total
/// residue that was removed; surviving weights are untouched.
pub fn filter_poles(p: &PoleRepresentation, omega_cut: f64) -> Result<(PoleRepresentation, CMat)> {
    if !(omega_cut >= 0.0) {
        return Err(Error::Config(format!("pole cut must be non-negative, got {omega_cut}")));
    }
    let n = p.n_orbitals();
    let mut removed = CMat::zeros(n, n);
    let mut kept = Vec::new();
    for pole in &p.poles {
        if pole.energy.abs() <= omega_cut && omega_cut > 0.0 {
            removed += &pole.residue;
        } else {
            kept.push(pole.clone());
        }
    }
    Ok((
        PoleRepresentation {
            orbitals: p.orbitals.clone(),
            poles: kept,
        },
        removed,
    ))
}

/// `W₁` between two discrete measures on the real line given as
/// `(position, mass)` pairs, via the integral of the CDF difference.
/// With `normalize`, both are scaled to unit mass first.
pub fn wasserstein_1d(a: &[(f64, f64)], b: &[(f64, f64)], normalize: bool) -> Result<f64> {
    let total = |m: &[(f64, f64)]| m.iter().map(|x| x.1).sum::<f64>();
    let (ta, tb) = (total(a), total(b));
    if ta <= 0.0 || tb <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let (sa, sb) = if normalize { (1.0 / ta, 1.0 / tb) } else { (1.0, 1.0) };
    let mut events: Vec<(f64, f64)> = a
        .iter()
        .map(|&(x, w)| (x, w * sa))
        .chain(b.iter().map(|&(x, w)| (x, -w * sb)))
        .collect();
    if events.iter().any(|e| !e.0.is_finite() || !e.1.is_finite()) {
        return Err(Error::NonFinite("measure support"));
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cdf_diff = 0.0;
    let mut dist = 0.0;
    for w in 0..events.len() {
        cdf_diff += events[w].1;
        if w + 1 < events.len() {
            dist += cdf_diff.abs() * (events[w + 1].0 - events[w].0);
        }
    }
    Ok(dist)
}

/// `W₁` between the diagonal spectral measures of one orbital.
pub fn wasserstein_distance(a: &PoleRepresentation, b: &PoleRepresentation, orbital_index: usize, normalize: bool) -> Result<f64> {
    if orbital_index >= a.n_orbitals() || orbital_index >= b.n_orbitals() {
        return Err(Error::DimensionMismatch {
            expected: a.n_orbitals().min(b.n_orbitals()),
            got: orbital_index,
        });
    }
    wasserstein_1d(
        &a.diagonal_measure(orbital_index),
        &b.diagonal_measure(orbital_index),
        normalize,
    )
}

/// `W₁` between the broadened diagonal spectral functions of one orbital
/// on a uniform grid, by a Riemann sum of the CDF
/// difference. With `normalize`, each curve is scaled to unit area first.
pub fn wasserstein_spectral(
    a: &PoleRepresentation,
    b: &PoleRepresentation,
    orbital_index: usize,
    omega: &[f64],
    eta: f64,
    normalize: bool,
) -> Result<f64> {
    if omega.len() < 2 {
        return Err(Error::Config("frequency grid needs at least two points".into()));
    }
    let dw = omega[1] - omega[0];
    if !(dw > 0.0) || omega.windows(2).any(|w| ((w[1] - w[0]) - dw).abs() > 1e-9 * dw.max(1.0)) {
        return Err(Error::Config("frequency grid must be uniform and increasing".into()));
    }
    let fa = spectral_function_diagonal(a, orbital_index, omega, eta)?;
    let fb = spectral_function_diagonal(b, orbital_index, omega, eta)?;
    let (sa, sb) = (fa.iter().sum::<f64>() * dw, fb.iter().sum::<f64>() * dw);
    if sa <= 0.0 || sb <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let (ka, kb) = if normalize { (1.0 / sa, 1.0 / sb) } else { (1.0, 1.0) };
    let mut cdf = 0.0;
    let mut dist = 0.0;
    for (x, y) in fa.iter().zip(&fb) {
        cdf += (x * ka - y * kb) * dw;
        dist += cdf.abs() * dw;
    }
    Ok(dist)
}
