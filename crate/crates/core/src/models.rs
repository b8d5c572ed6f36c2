//! Star-geometry impurity Hamiltonians.
//!
//! Spatial orbitals are numbered impurities first, then baths. Every bath
//! orbital couples to exactly one impurity orbital and to nothing else.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionOperator, Spin, SpinOrbitalLayout};
use crate::sector::Sector;

const SPINS: [Spin; 2] = [Spin::Up, Spin::Down];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SitePartition {
    pub impurity_spatial: Vec<usize>,
    pub bath_spatial: Vec<usize>,
    pub impurity_modes: Vec<usize>,
    pub bath_modes: Vec<usize>,
}

impl SitePartition {
    pub fn new(layout: &SpinOrbitalLayout, n_imp: usize) -> Self {
        let impurity_spatial: Vec<usize> = (0..n_imp).collect();
        let bath_spatial: Vec<usize> = (n_imp..layout.n_spatial).collect();
        let modes = |sp: &[usize]| {
            let mut m: Vec<usize> = sp
                .iter()
                .flat_map(|&p| SPINS.map(|s| layout.mode(p, s)))
                .collect();
            m.sort_unstable();
            m
        };
        Self {
            impurity_modes: modes(&impurity_spatial),
            bath_modes: modes(&bath_spatial),
            impurity_spatial,
            bath_spatial,
        }
    }

    pub fn is_bath_spatial(&self, p: usize) -> bool {
        self.bath_spatial.contains(&p)
    }

    pub fn is_bath_mode(&self, m: usize) -> bool {
        self.bath_modes.contains(&m)
    }

    pub fn n_spatial(&self) -> usize {
        self.impurity_spatial.len() + self.bath_spatial.len()
    }

    /// Disjoint and jointly covering `0..n_spatial` (and the modes likewise).
    pub fn is_valid(&self, layout: &SpinOrbitalLayout) -> bool {
        let sp: BTreeSet<usize> = self
            .impurity_spatial
            .iter()
            .chain(&self.bath_spatial)
            .copied()
            .collect();
        let modes: BTreeSet<usize> = self
            .impurity_modes
            .iter()
            .chain(&self.bath_modes)
            .copied()
            .collect();
        sp.len() == self.n_spatial()
            && sp == (0..layout.n_spatial).collect()
            && modes.len() == self.impurity_modes.len() + self.bath_modes.len()
            && modes == (0..layout.n_modes()).collect()
    }
}

/// Parameters of a star impurity model with density-density on-site
/// repulsion on each impurity orbital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarImpurityModel {
    pub n_imp_spatial: usize,
    pub n_bath_spatial: usize,
    pub u: f64,
    pub mu: f64,
    pub t: f64,
    /// Hybridization of bath `k` with its impurity (`-v[k]` enters the
    /// Hamiltonian).
    pub v: Vec<f64>,
    pub eps: Vec<f64>,
    /// Impurity spatial orbital each bath orbital couples to.
    pub bath_attachment: Vec<usize>,
}

impl StarImpurityModel {
    pub fn single_site(u: f64, mu: f64, v: &[f64], eps: &[f64]) -> Result<Self> {
        check_len("hybridization", 3, v.len())?;
        check_len("bath energies", 3, eps.len())?;
        Ok(Self {
            n_imp_spatial: 1,
            n_bath_spatial: 3,
            u,
            mu,
            t: 0.0,
            v: v.to_vec(),
            eps: eps.to_vec(),
            bath_attachment: vec![0; 3],
        })
    }

    pub fn two_site(u: f64, mu: f64, t: f64, v: f64, eps: &[f64]) -> Result<Self> {
        check_len("bath energies", 6, eps.len())?;
        Ok(Self {
            n_imp_spatial: 2,
            n_bath_spatial: 6,
            u,
            mu,
            t,
            v: vec![v; 6],
            eps: eps.to_vec(),
            bath_attachment: vec![0, 0, 0, 1, 1, 1],
        })
    }

    pub fn layout(&self) -> SpinOrbitalLayout {
        SpinOrbitalLayout::new(self.n_imp_spatial + self.n_bath_spatial)
    }

    pub fn partition(&self) -> SitePartition {
        SitePartition::new(&self.layout(), self.n_imp_spatial)
    }

    pub fn n_modes(&self) -> usize {
        self.layout().n_modes()
    }

    /// Half filling, `S_z = 0`.
    pub fn ground_sector(&self) -> Sector {
        Sector::new(self.layout().n_spatial, 0)
    }

    pub fn hamiltonian(&self) -> Result<FermionOperator> {
        check_len("hybridization", self.n_bath_spatial, self.v.len())?;
        check_len("bath energies", self.n_bath_spatial, self.eps.len())?;
        check_len("bath attachment", self.n_bath_spatial, self.bath_attachment.len())?;
        for (&f, what) in [self.u, self.mu, self.t]
            .iter()
            .chain(&self.v)
            .chain(&self.eps)
            .zip(std::iter::repeat("model parameter"))
        {
            if !f.is_finite() {
                return Err(Error::NonFinite(what));
            }
        }
        let layout = self.layout();
        let n = layout.n_modes();
        let mut h = FermionOperator::zero(n);
        let re = |x: f64| Complex64::new(x, 0.0);
        for i in 0..self.n_imp_spatial {
            let (up, dn) = (layout.mode(i, Spin::Up), layout.mode(i, Spin::Down));
            h.add_term(vec![(up, true), (up, false), (dn, true), (dn, false)], re(self.u))?;
            for s in SPINS {
                let m = layout.mode(i, s);
                h.add_term(vec![(m, true), (m, false)], re(-self.mu))?;
            }
        }
        if self.t != 0.0 {
            for i in 0..self.n_imp_spatial {
                for j in i + 1..self.n_imp_spatial {
                    for s in SPINS {
                        let (a, b) = (layout.mode(i, s), layout.mode(j, s));
                        h.add_hermitian_pair(vec![(a, true), (b, false)], re(-self.t))?;
                    }
                }
            }
        }
        for k in 0..self.n_bath_spatial {
            let bath = self.n_imp_spatial + k;
            let imp = self.bath_attachment[k];
            if imp >= self.n_imp_spatial {
                return Err(Error::Config(format!(
                    "bath {k} attached to missing impurity {imp}"
                )));
            }
            for s in SPINS {
                let (d, c) = (layout.mode(imp, s), layout.mode(bath, s));
                if self.v[k] != 0.0 {
                    h.add_hermitian_pair(vec![(d, true), (c, false)], re(-self.v[k]))?;
                }
                if self.eps[k] != 0.0 {
                    h.add_term(vec![(c, true), (c, false)], re(self.eps[k]))?;
                }
            }
        }
        Ok(h)
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Single impurity with three bath orbitals; spatial orbital 0 is the
/// impurity.
pub fn build_single_site(u: f64, mu: f64, v: &[f64], eps: &[f64]) -> Result<(FermionOperator, SitePartition)> {
    let model = StarImpurityModel::single_site(u, mu, v, eps)?;
    Ok((model.hamiltonian()?, model.partition()))
}

/// Two coupled impurities (spatial orbitals 0 and 1), each with three bath
/// orbitals (2-4 on impurity 0, 5-7 on impurity 1), uniform hybridization.
pub fn build_two_site(u: f64, mu: f64, t: f64, v: f64, eps: &[f64]) -> Result<(FermionOperator, SitePartition)> {
    let model = StarImpurityModel::two_site(u, mu, t, v, eps)?;
    Ok((model.hamiltonian()?, model.partition()))
}

/// Bath parameters of the metallic single-site model (`U = 4`).
pub const METALLIC_V: [f64; 3] = [-1.26264, 0.07702, -1.26264];
pub const METALLIC_EPS: [f64; 3] = [1.11919, 0.0, -1.11919];
/// Bath parameters of the insulating single-site model (`U = 9`).
pub const INSULATING_V: [f64; 3] = [1.31098, 0.07658, -1.38519];
pub const INSULATING_EPS: [f64; 3] = [-3.26141, 0.0, 3.26141];
/// Bath energies of the two-site model.
pub const TWO_SITE_EPS: [f64; 6] = [1.0, 0.0, -1.0, 1.0, 0.0, -1.0];

pub fn metallic_single_site() -> StarImpurityModel {
    StarImpurityModel::single_site(4.0, 2.0, &METALLIC_V, &METALLIC_EPS).expect("fixed sizes")
}

pub fn insulating_single_site() -> StarImpurityModel {
    StarImpurityModel::single_site(9.0, 4.5, &INSULATING_V, &INSULATING_EPS).expect("fixed sizes")
}

pub fn two_site(v: f64) -> StarImpurityModel {
    StarImpurityModel::two_site(4.0, 2.0, 1.0, v, &TWO_SITE_EPS).expect("fixed sizes")
}
