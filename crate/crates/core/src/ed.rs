//! Exact diagonalization in fixed-(N, S_z) sectors: ground states, spectral
//! moments by repeated application of `H - E_G`, and Lehmann poles.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{FermionOperator, SpinOrbitalLayout};
use crate::greens::{hermitian_eigh, Pole, PoleRepresentation, SpectralMoments, SpectralSector};
use crate::sector::{fermion_matrix, ladder_matrix, shifted_sector, Sector, SectorBasis, SparseMatrix};

/// Sectors up to this dimension are diagonalized densely.
pub const DENSE_LIMIT: usize = 1500;
/// Eigenvalues this close to the ground energy count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub basis: SectorBasis,
    /// Amplitudes over `basis`; the first member of the ground multiplet.
    pub vector: Vec<Complex64>,
    /// All degenerate ground states (including `vector`).
    pub multiplet: Vec<Vec<Complex64>>,
    pub residual: f64,
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(h: &SparseMatrix, v: &[Complex64], e: f64) -> f64 {
    let hv = h.matvec(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Full eigendecomposition of a Hermitian sparse matrix, ascending.
pub fn dense_eigh(h: &SparseMatrix) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = h.n_rows();
    if h.is_real() {
        let d = h.to_dense();
        let real = DMatrix::from_fn(n, n, |r, c| 0.5 * (d[(r, c)].re + d[(c, r)].re));
        let eig = SymmetricEigen::new(real);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = order
            .iter()
            .map(|&i| {
                eig.eigenvectors
                    .column(i)
                    .iter()
                    .map(|&x| Complex64::new(x, 0.0))
                    .collect()
            })
            .collect();
        (vals, vecs)
    } else {
        let (vals, vecs) = hermitian_eigh(&h.to_dense());
        let cols = (0..n).map(|i| vecs.column(i).iter().copied().collect()).collect();
        (vals, cols)
    }
}

/// Lowest eigenpair by Lanczos with full reorthogonalization, restarted from
/// the current Ritz vector until the residual drops below `tol`.
pub fn lanczos_ground(h: &SparseMatrix, tol: f64) -> Result<(f64, Vec<Complex64>)> {
    let n = h.n_rows();
    if n == 0 {
        return Err(Error::EmptySector);
    }
    let krylov = n.min(120);
    let mut start: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * ((i as f64) * 0.7).sin(), 0.0))
        .collect();
    let mut best = (f64::INFINITY, start.clone(), f64::INFINITY);
    for _ in 0..40 {
        let s = norm(&start);
        start.iter_mut().for_each(|x| *x /= s);
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = h.matvec(&basis[j]);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            if j + 1 == krylov || b < 1e-12 {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let i0 = (0..m)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .expect("nonempty");
        let e = eig.eigenvalues[i0];
        let mut v = vec![Complex64::default(); n];
        for (k, q) in basis.iter().take(m).enumerate() {
            let c = eig.eigenvectors[(k, i0)];
            v.iter_mut().zip(q).for_each(|(x, y)| *x += y * c);
        }
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        let r = residual(h, &v, e);
        if r < best.2 {
            best = (e, v.clone(), r);
        }
        if r <= tol {
            return Ok((e, v));
        }
        start = v;
    }
    if best.2 <= tol * 1e3 {
        return Ok((best.0, best.1));
    }
    Err(Error::Eigensolver(format!(
        "Lanczos residual {:e} above tolerance {tol:e}",
        best.2
    )))
}

/// Lowest eigenpair (and degenerate multiplet, for dense sectors) of `h`
/// restricted to `sector`.
pub fn exact_ground_state(h: &FermionOperator, layout: SpinOrbitalLayout, sector: Sector) -> Result<GroundState> {
    let basis = SectorBasis::new(layout, sector)?;
    let m = fermion_matrix(h, &basis)?;
    ground_of_matrix(&m, basis)
}

pub fn ground_of_matrix(m: &SparseMatrix, basis: SectorBasis) -> Result<GroundState> {
    if basis.dim() <= DENSE_LIMIT {
        let (vals, vecs) = dense_eigh(m);
        let e0 = vals[0];
        let multiplet: Vec<Vec<Complex64>> = vals
            .iter()
            .zip(&vecs)
            .take_while(|(v, _)| **v - e0 <= DEGENERACY_TOLERANCE)
            .map(|(_, v)| v.clone())
            .collect();
        let vector = fix_phase(multiplet[0].clone());
        let r = residual(m, &vector, e0);
        Ok(GroundState {
            energy: e0,
            basis,
            multiplet: std::iter::once(vector.clone())
                .chain(multiplet.into_iter().skip(1))
                .collect(),
            vector,
            residual: r,
        })
    } else {
        let (e0, v) = lanczos_ground(m, 1e-10)?;
        let vector = fix_phase(v);
        let r = residual(m, &vector, e0);
        Ok(GroundState {
            energy: e0,
            basis,
            multiplet: vec![vector.clone()],
            vector,
            residual: r,
        })
    }
}

/// Rotates the global phase so the largest amplitude is real positive.
pub(crate) fn fix_phase(mut v: Vec<Complex64>) -> Vec<Complex64> {
    if let Some(big) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    {
        if big.norm() > 0.0 {
            let ph = big.conj() / big.norm();
            v.iter_mut().for_each(|x| *x *= ph);
        }
    }
    v
}

/// Raw moment rows exactly as defined by repeated application of
/// `H_N = H - E_G`:
/// particle `⟨G| c_r H_N^m c†_s |G⟩`, hole `⟨G| c†_r H_N^m c_s |G⟩`,
/// for `m = 0..=n_mom` and every mode `r`. Returns `rows[m][r]`.
pub fn exact_moments(h: &FermionOperator, ground: &GroundState, s: usize, sector: SpectralSector, n_mom: usize) -> Result<Vec<Vec<Complex64>>> {
    raw_moments_for_state(h, ground, &ground.vector, s, sector, n_mom)
}

fn raw_moments_for_state(
    h: &FermionOperator,
    ground: &GroundState,
    gvec: &[Complex64],
    s: usize,
    sector: SpectralSector,
    n_mom: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let layout = *ground.basis.layout();
    let n_modes = layout.n_modes();
    if s >= n_modes {
        return Err(Error::ModeOutOfRange {
            index: s,
            n_modes,
        });
    }
    let dagger = sector == SpectralSector::Particle;
    let mut rows = vec![vec![Complex64::default(); n_modes]; n_mom + 1];
    let Some(ex_sector) = shifted_sector(&layout, ground.basis.sector(), s, dagger) else {
        return Ok(rows);
    };
    let Ok(ex_basis) = SectorBasis::new(layout, ex_sector) else {
        return Ok(rows);
    };
    let hm = fermion_matrix(h, &ex_basis)?;
    let mut phi = ladder_matrix(s, dagger, &ground.basis, &ex_basis).matvec(gvec);
    let back: Vec<Option<SparseMatrix>> = (0..n_modes)
        .map(|r| {
            (shifted_sector(&layout, ex_sector, r, !dagger) == Some(ground.basis.sector()))
                .then(|| ladder_matrix(r, !dagger, &ex_basis, &ground.basis))
        })
        .collect();
    for row in rows.iter_mut() {
        for (r, b) in back.iter().enumerate() {
            if let Some(b) = b {
                row[r] = dot(gvec, &b.matvec(&phi));
            }
        }
        let mut next = hm.matvec(&phi);
        next.iter_mut()
            .zip(&phi)
            .for_each(|(x, y)| *x -= y * ground.energy);
        phi = next;
    }
    Ok(rows)
}

/// Converts raw rows for source orbitals into spectral-convention moment
/// matrices over `orbitals`. Hole moments pick up `(-1)^m` and a transpose
/// because hole poles sit at `ε = E_G - E_n`.
pub fn moments_from_rows(
    orbitals: &[usize],
    particle_rows: &[Vec<Vec<Complex64>>],
    hole_rows: &[Vec<Vec<Complex64>>],
) -> SpectralMoments {
    let n = orbitals.len();
    let build = |rows: &[Vec<Vec<Complex64>>], hole: bool| -> Vec<DMatrix<Complex64>> {
        let n_orders = rows.first().map_or(0, |r| r.len());
        (0..n_orders)
            .map(|m| {
                let sign = if hole && m % 2 == 1 { -1.0 } else { 1.0 };
                DMatrix::from_fn(n, n, |i, j| {
                    // column j comes from source orbital j
                    if hole {
                        rows[i][m][orbitals[j]] * sign
                    } else {
                        rows[j][m][orbitals[i]]
                    }
                })
            })
            .collect()
    };
    SpectralMoments {
        orbitals: orbitals.to_vec(),
        hole: build(hole_rows, true),
        particle: build(particle_rows, false),
    }
}

/// Exact spectral moments (spectral convention) for the tracked orbitals,
/// averaged over the ground multiplet.
pub fn exact_moment_matrices(h: &FermionOperator, ground: &GroundState, orbitals: &[usize], n_mom: usize) -> Result<SpectralMoments> {
    let mut acc: Option<SpectralMoments> = None;
    for g in &ground.multiplet {
        let p: Vec<_> = orbitals
            .iter()
            .map(|&s| raw_moments_for_state(h, ground, g, s, SpectralSector::Particle, n_mom))
            .collect::<Result<_>>()?;
        let hh: Vec<_> = orbitals
            .iter()
            .map(|&s| raw_moments_for_state(h, ground, g, s, SpectralSector::Hole, n_mom))
            .collect::<Result<_>>()?;
        let m = moments_from_rows(orbitals, &p, &hh);
        acc = Some(match acc {
            None => m,
            Some(mut a) => {
                for (x, y) in a.hole.iter_mut().zip(&m.hole) {
                    *x += y;
                }
                for (x, y) in a.particle.iter_mut().zip(&m.particle) {
                    *x += y;
                }
                a
            }
        });
    }
    let mut m = acc.expect("multiplet is nonempty");
    let k = ground.multiplet.len() as f64;
    m.hole.iter_mut().chain(m.particle.iter_mut()).for_each(|x| *x /= Complex64::new(k, 0.0));
    Ok(m)
}

/// Exact zero-temperature Lehmann poles for the tracked orbitals. Excited
/// sectors are diagonalized densely; a degenerate ground multiplet is
/// averaged.
pub fn exact_lehmann_gf(h: &FermionOperator, ground: &GroundState, orbitals: &[usize]) -> Result<PoleRepresentation> {
    let layout = *ground.basis.layout();
    let n = orbitals.len();
    let mut poles: Vec<Pole> = Vec::new();
    let k = ground.multiplet.len() as f64;
    for sector_kind in [SpectralSector::Hole, SpectralSector::Particle] {
        let dagger = sector_kind == SpectralSector::Particle;
        let mut targets: Vec<Sector> = orbitals
            .iter()
            .filter_map(|&o| shifted_sector(&layout, ground.basis.sector(), o, dagger))
            .collect();
        targets.sort_by_key(|s| (s.n_particles, s.twice_sz));
        targets.dedup();
        for target in targets {
            let Ok(ex_basis) = SectorBasis::new(layout, target) else {
                continue;
            };
            let hm = fermion_matrix(h, &ex_basis)?;
            let (vals, vecs) = dense_eigh(&hm);
            // amplitude[o][state] = ⟨n| c†_o |G⟩ (particle) or ⟨n| c_o |G⟩ (hole)
            let ladders: Vec<Option<SparseMatrix>> = orbitals
                .iter()
                .map(|&o| {
                    (shifted_sector(&layout, ground.basis.sector(), o, dagger) == Some(target))
                        .then(|| ladder_matrix(o, dagger, &ground.basis, &ex_basis))
                })
                .collect();
            let mut res = vec![DMatrix::<Complex64>::zeros(n, n); vals.len()];
            for g in &ground.multiplet {
                let applied: Vec<Option<Vec<Complex64>>> = ladders
                    .iter()
                    .map(|l| l.as_ref().map(|l| l.matvec(g)))
                    .collect();
                for (idx, v) in vecs.iter().enumerate() {
                    let amp: Vec<Complex64> = applied
                        .iter()
                        .map(|a| a.as_ref().map_or(Complex64::default(), |a| dot(v, a)))
                        .collect();
                    for i in 0..n {
                        for j in 0..n {
                            // particle: ⟨G|c_i|n⟩⟨n|c†_j|G⟩; hole: ⟨G|c†_j|n⟩⟨n|c_i|G⟩
                            let w = if dagger {
                                amp[i].conj() * amp[j]
                            } else {
                                amp[i] * amp[j].conj()
                            };
                            res[idx][(i, j)] += w / k;
                        }
                    }
                }
            }
            for (e, w) in vals.iter().zip(res) {
                if w.norm() < 1e-14 {
                    continue;
                }
                let energy = if dagger { e - ground.energy } else { ground.energy - e };
                poles.push(Pole {
                    energy,
                    residue: w,
                    sector: sector_kind,
                });
            }
        }
    }
    Ok(PoleRepresentation {
        orbitals: orbitals.to_vec(),
        poles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_single_site, METALLIC_EPS};

    #[test]
    fn free_model_energy() {
        let (h, _) = build_single_site(0.0, 0.0, &[0.0; 3], &METALLIC_EPS).unwrap();
        let g = exact_ground_state(&h, SpinOrbitalLayout::new(4), Sector::new(4, 0)).unwrap();
        // two electrons in the -1.11919 level, two in zero-energy modes
        assert!((g.energy + 2.0 * 1.11919).abs() < 1e-12);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let (h, _) = build_single_site(4.0, 2.0, &[-1.26264, 0.07702, -1.26264], &METALLIC_EPS).unwrap();
        let basis = SectorBasis::new(SpinOrbitalLayout::new(4), Sector::new(4, 0)).unwrap();
        let m = fermion_matrix(&h, &basis).unwrap();
        let (vals, _) = dense_eigh(&m);
        let (e, v) = lanczos_ground(&m, 1e-10).unwrap();
        assert!((e - vals[0]).abs() < 1e-10);
        assert!(residual(&m, &v, e) < 1e-9);
    }

    #[test]
    fn zeroth_sum_rule() {
        let (h, _) = build_single_site(4.0, 2.0, &[-1.26264, 0.07702, -1.26264], &METALLIC_EPS).unwrap();
        let g = exact_ground_state(&h, SpinOrbitalLayout::new(4), Sector::new(4, 0)).unwrap();
        for s in 0..8 {
            let p = exact_moments(&h, &g, s, SpectralSector::Particle, 0).unwrap();
            let hh = exact_moments(&h, &g, s, SpectralSector::Hole, 0).unwrap();
            for r in 0..8 {
                let want = if r == s { 1.0 } else { 0.0 };
                assert!((p[0][r] + hh[0][r] - want).norm() < 1e-12);
            }
        }
    }
}
