//! UCCGSD and k-uCJ ansatzes with their sparse variants.
//!
//! Every complex amplitude is split into a real and an imaginary slot, and
//! each slot drives one exactly-exponentiated gate:
//! `exp(θ (A - A†))` for a real slot and `exp(iθ (A + A†))` for an
//! imaginary slot, where `A` is a fermionic excitation. Number-operator
//! generators become diagonal phases. Gates are applied in enumeration
//! order, which fixes the (single-step) Trotter ordering.
//!
//! Circuits are compiled against a [`SectorBasis`], so state vectors only
//! carry the amplitudes of the conserved (N, S_z) sector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{apply_ladders, Ladder, Spin, SpinOrbitalLayout};
use crate::models::{SitePartition, StarImpurityModel};
use crate::sector::{Sector, SectorBasis};
use crate::statevector::StateVector;

const SPINS: [Spin; 2] = [Spin::Up, Spin::Down];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzFamily {
    Uccgsd,
    Kucj,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub family: AnsatzFamily,
    pub sparse: bool,
    /// Number of (K, J) layers; ignored for UCCGSD.
    pub k: usize,
    pub layout: SpinOrbitalLayout,
    pub partition: SitePartition,
}

impl AnsatzSpec {
    pub fn uccgsd(model: &StarImpurityModel, sparse: bool) -> Self {
        Self {
            family: AnsatzFamily::Uccgsd,
            sparse,
            k: 1,
            layout: model.layout(),
            partition: model.partition(),
        }
    }

    pub fn kucj(model: &StarImpurityModel, k: usize, sparse: bool) -> Self {
        Self {
            family: AnsatzFamily::Kucj,
            sparse,
            k,
            layout: model.layout(),
            partition: model.partition(),
        }
    }

    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn label(&self) -> String {
        match (self.family, self.sparse) {
            (AnsatzFamily::Uccgsd, false) => "UCCGSD".into(),
            (AnsatzFamily::Uccgsd, true) => "UCCGSD(S)".into(),
            (AnsatzFamily::Kucj, false) => format!("{}-uCJ", self.k),
            (AnsatzFamily::Kucj, true) => format!("{}-uCJ(S)", self.k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == AnsatzFamily::Kucj && self.k == 0 {
            return Err(Error::Config("k-uCJ needs k >= 1".into()));
        }
        if self.layout.n_modes() > 63 {
            return Err(Error::Config("at most 63 spin-orbitals are supported".into()));
        }
        if !self.partition.is_valid(&self.layout) {
            return Err(Error::Config("site partition does not match layout".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamRole {
    Real,
    Imag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamSlot {
    pub index: usize,
    pub role: ParamRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JChannel {
    SameSpin,
    OppositeSpin,
}

/// Identity of a generator, independent of where its parameters live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorKind {
    /// `c†_p c_q` on spin-orbitals; `p == q` is a number-operator phase.
    Single { p: usize, q: usize },
    /// `c†_p c†_q c_s c_r` on spin-orbitals with `p < q`, `r < s`.
    Double { p: usize, q: usize, r: usize, s: usize },
    /// Element `(p, q)`, `p <= q`, of the spin-independent orbital generator
    /// of layer `layer` (1-based).
    UcjK { layer: usize, p: usize, q: usize },
    /// Element `(p, q)` of the Jastrow matrix of layer `layer`.
    UcjJ { layer: usize, p: usize, q: usize, channel: JChannel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorTerm {
    pub kind: GeneratorKind,
    pub slots: Vec<ParamSlot>,
}

impl GeneratorTerm {
    /// Spin-orbitals the generator acts on (with repetition).
    pub fn modes(&self, layout: &SpinOrbitalLayout) -> Vec<usize> {
        match self.kind {
            GeneratorKind::Single { p, q } => vec![p, q],
            GeneratorKind::Double { p, q, r, s } => vec![p, q, r, s],
            GeneratorKind::UcjK { p, q, .. } => SPINS
                .iter()
                .flat_map(|&s| [layout.mode(p, s), layout.mode(q, s)])
                .collect(),
            GeneratorKind::UcjJ { p, q, channel, .. } => match channel {
                JChannel::SameSpin => SPINS
                    .iter()
                    .flat_map(|&s| [layout.mode(p, s), layout.mode(q, s)])
                    .collect(),
                JChannel::OppositeSpin => vec![
                    layout.mode(p, Spin::Up),
                    layout.mode(q, Spin::Down),
                    layout.mode(p, Spin::Down),
                    layout.mode(q, Spin::Up),
                ],
            },
        }
    }
}

struct Enumerator {
    next: usize,
    out: Vec<GeneratorTerm>,
}

impl Enumerator {
    fn push(&mut self, kind: GeneratorKind, roles: &[ParamRole]) {
        let slots = roles
            .iter()
            .map(|&role| {
                let s = ParamSlot {
                    index: self.next,
                    role,
                };
                self.next += 1;
                s
            })
            .collect();
        self.out.push(GeneratorTerm { kind, slots });
    }
}

const COMPLEX: [ParamRole; 2] = [ParamRole::Real, ParamRole::Imag];
const IMAG: [ParamRole; 1] = [ParamRole::Imag];

fn push_singles(e: &mut Enumerator, layout: &SpinOrbitalLayout) {
    let n = layout.n_spatial;
    for s in SPINS {
        for a in 0..n {
            for b in a..n {
                let (p, q) = (layout.mode(a, s), layout.mode(b, s));
                let roles: &[ParamRole] = if a == b { &IMAG } else { &COMPLEX };
                e.push(GeneratorKind::Single { p, q }, roles);
            }
        }
    }
}

/// Deterministic, parameter-ordered generator list.
///
/// UCCGSD: spin-conserving generalized singles (per spin, `p <= q`), then
/// `S_z`-conserving doubles over ordered pairs `(p<q) < (r<s)`. The sparse
/// variant keeps doubles touching at most two bath spin-orbitals.
///
/// k-uCJ: the same singles as an orbital-rotation block, then for each layer
/// the spatial `K` elements (`p <= q`) and the `J` elements (same-spin
/// `p < q`, opposite-spin `p <= q`). The sparse variant drops bath-bath `J`
/// elements in both channels.
pub fn enumerate_generators(spec: &AnsatzSpec) -> Vec<GeneratorTerm> {
    let layout = &spec.layout;
    let part = &spec.partition;
    let mut e = Enumerator {
        next: 0,
        out: Vec::new(),
    };
    push_singles(&mut e, layout);
    match spec.family {
        AnsatzFamily::Uccgsd => {
            let n = layout.n_modes();
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .collect();
            let twice_sz = |m: usize| if m % 2 == 0 { 1 } else { -1 };
            for (i, &(p, q)) in pairs.iter().enumerate() {
                for &(r, s) in &pairs[i + 1..] {
                    if twice_sz(p) + twice_sz(q) != twice_sz(r) + twice_sz(s) {
                        continue;
                    }
                    if spec.sparse {
                        let n_bath = [p, q, r, s]
                            .iter()
                            .filter(|&&m| part.is_bath_mode(m))
                            .count();
                        if n_bath > 2 {
                            continue;
                        }
                    }
                    e.push(GeneratorKind::Double { p, q, r, s }, &COMPLEX);
                }
            }
        }
        AnsatzFamily::Kucj => {
            let n = layout.n_spatial;
            for layer in 1..=spec.k {
                for p in 0..n {
                    for q in p..n {
                        let roles: &[ParamRole] = if p == q { &IMAG } else { &COMPLEX };
                        e.push(GeneratorKind::UcjK { layer, p, q }, roles);
                    }
                }
                let bath_pair = |p: usize, q: usize| {
                    p != q && part.is_bath_spatial(p) && part.is_bath_spatial(q)
                };
                for p in 0..n {
                    for q in p + 1..n {
                        if spec.sparse && bath_pair(p, q) {
                            continue;
                        }
                        e.push(
                            GeneratorKind::UcjJ {
                                layer,
                                p,
                                q,
                                channel: JChannel::SameSpin,
                            },
                            &IMAG,
                        );
                    }
                }
                for p in 0..n {
                    for q in p..n {
                        if spec.sparse && bath_pair(p, q) {
                            continue;
                        }
                        e.push(
                            GeneratorKind::UcjJ {
                                layer,
                                p,
                                q,
                                channel: JChannel::OppositeSpin,
                            },
                            &IMAG,
                        );
                    }
                }
            }
        }
    }
    e.out
}

pub fn parameter_count(spec: &AnsatzSpec) -> usize {
    enumerate_generators(spec)
        .iter()
        .map(|g| g.slots.len())
        .sum()
}

/// Parameter index ranges `(start, end)` of each k-uCJ layer (1-based
/// layers at positions `1..=k`; position 0 is the orbital-rotation block).
pub fn kucj_blocks(spec: &AnsatzSpec) -> Vec<(usize, usize)> {
    let gens = enumerate_generators(spec);
    let mut blocks = vec![(usize::MAX, 0usize); spec.k + 1];
    for g in &gens {
        let b = match g.kind {
            GeneratorKind::UcjK { layer, .. } | GeneratorKind::UcjJ { layer, .. } => layer,
            _ => 0,
        };
        for s in &g.slots {
            blocks[b].0 = blocks[b].0.min(s.index);
            blocks[b].1 = blocks[b].1.max(s.index + 1);
        }
    }
    blocks
}

/// Maps a parameter vector of `from` onto `to` by generator identity; slots
/// of `to` without a counterpart are zero.
pub fn embed_parameters(from: &AnsatzSpec, params: &[f64], to: &AnsatzSpec) -> Result<Vec<f64>> {
    let src = enumerate_generators(from);
    check_len(params, parameter_count(from))?;
    let dst = enumerate_generators(to);
    let lookup: std::collections::HashMap<GeneratorKind, &GeneratorTerm> =
        src.iter().map(|g| (g.kind, g)).collect();
    let mut out = vec![0.0; parameter_count(to)];
    for g in &dst {
        if let Some(s) = lookup.get(&g.kind) {
            for (a, b) in g.slots.iter().zip(&s.slots) {
                out[a.index] = params[b.index];
            }
        }
    }
    Ok(out)
}

fn check_len(params: &[f64], want: usize) -> Result<()> {
    if params.len() != want {
        return Err(Error::LengthMismatch {
            what: "parameter vector",
            expected: want,
            got: params.len(),
        });
    }
    Ok(())
}

/// Computational basis state filling spin-up modes of spatial orbitals
/// `0..n_up` and spin-down modes of `0..n_dn`.
pub fn reference_state(layout: &SpinOrbitalLayout, sector: Sector) -> Result<u64> {
    let n = sector.n_particles as i32;
    let (n_up, n_dn) = ((n + sector.twice_sz) / 2, (n - sector.twice_sz) / 2);
    if (n + sector.twice_sz) % 2 != 0
        || n_up < 0
        || n_dn < 0
        || n_up as usize > layout.n_spatial
        || n_dn as usize > layout.n_spatial
    {
        return Err(Error::EmptySector);
    }
    let mut b = 0u64;
    for p in 0..n_up as usize {
        b |= 1 << layout.mode(p, Spin::Up);
    }
    for p in 0..n_dn as usize {
        b |= 1 << layout.mode(p, Spin::Down);
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// `exp(θ (A - A†))` over pair pattern.
    Real(usize),
    /// `exp(iθ (A + A†))` over pair pattern.
    Imag(usize),
    /// `exp(iθ D)` over diagonal pattern.
    Phase(usize),
}

#[derive(Debug, Clone, Copy)]
struct Gate {
    param: usize,
    coef: f64,
    op: Op,
}

#[derive(Debug, Clone)]
enum Step {
    Gate(Gate),
    /// Commuting diagonal phases `exp(i Σ θ_j D_j)`.
    Diagonal(Vec<(usize, usize)>),
}

/// A circuit compiled against one sector: a sequence of exactly applied
/// gates acting on sector amplitudes.
#[derive(Debug, Clone)]
pub struct CompiledAnsatz {
    spec: AnsatzSpec,
    dim: usize,
    reference: usize,
    n_params: usize,
    steps: Vec<Step>,
    /// `(a, b, σ)` with `A|a⟩ = σ|b⟩`.
    pairs: Vec<Vec<(u32, u32, f64)>>,
    /// `(x, d_x)` with `D|x⟩ = d_x|x⟩`, nonzero entries only.
    diags: Vec<Vec<(u32, f64)>>,
}

struct Builder<'a> {
    basis: &'a SectorBasis,
    pairs: Vec<Vec<(u32, u32, f64)>>,
    diags: Vec<Vec<(u32, f64)>>,
}

impl Builder<'_> {
    fn pair_pattern(&mut self, ops: &[Ladder]) -> usize {
        let mut v = Vec::new();
        for (a, &b) in self.basis.states().iter().enumerate() {
            if let Some((t, sign)) = apply_ladders(ops, b) {
                if let Some(bi) = self.basis.index_of(t) {
                    v.push((a as u32, bi as u32, sign));
                }
            }
        }
        self.pairs.push(v);
        self.pairs.len() - 1
    }

    fn diag_pattern(&mut self, f: impl Fn(u64) -> f64) -> usize {
        let v = self
            .basis
            .states()
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| {
                let d = f(b);
                (d != 0.0).then_some((i as u32, d))
            })
            .collect();
        self.diags.push(v);
        self.diags.len() - 1
    }

    /// Gates of one excitation generator (`ops` is `A`); `p == q` singles
    /// are handled by the caller.
    fn excitation(&mut self, ops: &[Ladder], slots: &[ParamSlot], out: &mut Vec<Gate>) {
        let pat = self.pair_pattern(ops);
        for s in slots {
            let op = match s.role {
                ParamRole::Real => Op::Real(pat),
                ParamRole::Imag => Op::Imag(pat),
            };
            out.push(Gate {
                param: s.index,
                coef: 1.0,
                op,
            });
        }
    }
}

fn occ(b: u64, m: usize) -> f64 {
    ((b >> m) & 1) as f64
}

impl CompiledAnsatz {
    /// Compiles `spec` for the sector of `reference`, a basis state given by
    /// its bit pattern.
    pub fn new(spec: &AnsatzSpec, basis: &SectorBasis, reference: u64) -> Result<Self> {
        spec.validate()?;
        if basis.layout() != &spec.layout {
            return Err(Error::Config("sector layout differs from ansatz layout".into()));
        }
        let reference = basis.index_of(reference).ok_or(Error::InvalidReference)?;
        let gens = enumerate_generators(spec);
        let n_params = gens.iter().map(|g| g.slots.len()).sum();
        let layout = spec.layout;
        let mut bld = Builder {
            basis,
            pairs: Vec::new(),
            diags: Vec::new(),
        };
        let mut steps = Vec::new();
        let mut orbital: Vec<Gate> = Vec::new();
        let mut doubles: Vec<Gate> = Vec::new();
        let mut k_layers: Vec<Vec<Gate>> = vec![Vec::new(); spec.k + 1];
        let mut j_layers: Vec<Vec<(usize, usize)>> = vec![Vec::new(); spec.k + 1];
        for g in &gens {
            match g.kind {
                GeneratorKind::Single { p, q } if p == q => {
                    let pat = bld.diag_pattern(|b| occ(b, p));
                    orbital.push(Gate {
                        param: g.slots[0].index,
                        coef: 1.0,
                        op: Op::Phase(pat),
                    });
                }
                GeneratorKind::Single { p, q } => {
                    bld.excitation(&[(p, true), (q, false)], &g.slots, &mut orbital);
                }
                GeneratorKind::Double { p, q, r, s } => {
                    bld.excitation(&[(p, true), (q, true), (s, false), (r, false)], &g.slots, &mut doubles);
                }
                GeneratorKind::UcjK { layer, p, q } if p == q => {
                    let (u, d) = (layout.mode(p, Spin::Up), layout.mode(p, Spin::Down));
                    let pat = bld.diag_pattern(|b| occ(b, u) + occ(b, d));
                    k_layers[layer].push(Gate {
                        param: g.slots[0].index,
                        coef: 1.0,
                        op: Op::Phase(pat),
                    });
                }
                GeneratorKind::UcjK { layer, p, q } => {
                    for s in SPINS {
                        let ops = [(layout.mode(p, s), true), (layout.mode(q, s), false)];
                        bld.excitation(&ops, &g.slots, &mut k_layers[layer]);
                    }
                }
                GeneratorKind::UcjJ { layer, p, q, channel } => {
                    let (pu, pd) = (layout.mode(p, Spin::Up), layout.mode(p, Spin::Down));
                    let (qu, qd) = (layout.mode(q, Spin::Up), layout.mode(q, Spin::Down));
                    let pat = match channel {
                        JChannel::SameSpin => {
                            bld.diag_pattern(|b| occ(b, pu) * occ(b, qu) + occ(b, pd) * occ(b, qd))
                        }
                        JChannel::OppositeSpin if p == q => bld.diag_pattern(|b| occ(b, pu) * occ(b, pd)),
                        JChannel::OppositeSpin => {
                            bld.diag_pattern(|b| occ(b, pu) * occ(b, qd) + occ(b, pd) * occ(b, qu))
                        }
                    };
                    j_layers[layer].push((g.slots[0].index, pat));
                }
            }
        }
        steps.extend(orbital.into_iter().map(Step::Gate));
        match spec.family {
            AnsatzFamily::Uccgsd => steps.extend(doubles.into_iter().map(Step::Gate)),
            AnsatzFamily::Kucj => {
                // ∏_{i=1..k} e^{K_i} e^{J_i} e^{-K_i}: layer k acts first.
                for layer in (1..=spec.k).rev() {
                    for g in k_layers[layer].iter().rev() {
                        steps.push(Step::Gate(Gate { coef: -1.0, ..*g }));
                    }
                    steps.push(Step::Diagonal(std::mem::take(&mut j_layers[layer])));
                    steps.extend(k_layers[layer].iter().map(|g| Step::Gate(*g)));
                }
            }
        }
        Ok(Self {
            spec: spec.clone(),
            dim: basis.dim(),
            reference,
            n_params,
            steps,
            pairs: bld.pairs,
            diags: bld.diags,
        })
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reference_index(&self) -> usize {
        self.reference
    }

    pub fn n_gates(&self) -> usize {
        self.steps.len()
    }

    fn apply_gate(&self, g: &Gate, angle: f64, psi: &mut [Complex64]) {
        match g.op {
            Op::Real(pat) => {
                let (s, c) = angle.sin_cos();
                for &(a, b, sg) in &self.pairs[pat] {
                    let (a, b) = (a as usize, b as usize);
                    let (pa, pb) = (psi[a], psi[b]);
                    psi[a] = pa * c - pb * (sg * s);
                    psi[b] = pb * c + pa * (sg * s);
                }
            }
            Op::Imag(pat) => {
                let (s, c) = angle.sin_cos();
                for &(a, b, sg) in &self.pairs[pat] {
                    let (a, b) = (a as usize, b as usize);
                    let (pa, pb) = (psi[a], psi[b]);
                    let is = Complex64::new(0.0, sg * s);
                    psi[a] = pa * c + pb * is;
                    psi[b] = pb * c + pa * is;
                }
            }
            Op::Phase(pat) => {
                for &(x, d) in &self.diags[pat] {
                    psi[x as usize] *= Complex64::from_polar(1.0, angle * d);
                }
            }
        }
    }

    fn apply_diagonal(&self, terms: &[(usize, usize)], params: &[f64], sign: f64, psi: &mut [Complex64]) {
        let mut theta = vec![0.0; psi.len()];
        for &(param, pat) in terms {
            let t = params[param];
            if t == 0.0 {
                continue;
            }
            for &(x, d) in &self.diags[pat] {
                theta[x as usize] += t * d;
            }
        }
        for (p, th) in psi.iter_mut().zip(theta) {
            if th != 0.0 {
                *p *= Complex64::from_polar(1.0, sign * th);
            }
        }
    }

    /// Applies the circuit to arbitrary sector amplitudes.
    pub fn apply(&self, params: &[f64], psi: &mut [Complex64]) -> Result<()> {
        check_len(params, self.n_params)?;
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("ansatz parameter"));
        }
        for step in &self.steps {
            match step {
                Step::Gate(g) => {
                    let angle = g.coef * params[g.param];
                    if angle != 0.0 {
                        self.apply_gate(g, angle, psi);
                    }
                }
                Step::Diagonal(terms) => self.apply_diagonal(terms, params, 1.0, psi),
            }
        }
        Ok(())
    }

    /// Prepared state from the reference, as sector amplitudes.
    pub fn state(&self, params: &[f64]) -> Result<Vec<Complex64>> {
        let mut psi = vec![Complex64::default(); self.dim];
        psi[self.reference] = Complex64::new(1.0, 0.0);
        self.apply(params, &mut psi)?;
        Ok(psi)
    }

    /// `g_j = Re⟨χ| ∂ψ/∂θ_j⟩` for `ψ = U(θ)|ref⟩`, by one backward sweep.
    /// `psi` must be the prepared state for `params`.
    pub fn gradient_re_overlap(&self, params: &[f64], psi: &[Complex64], chi: &[Complex64]) -> Result<Vec<f64>> {
        check_len(params, self.n_params)?;
        let mut grad = vec![0.0; self.n_params];
        let mut psi = psi.to_vec();
        let mut lam = chi.to_vec();
        for step in self.steps.iter().rev() {
            match step {
                Step::Gate(g) => {
                    grad[g.param] += g.coef * self.generator_overlap(g, &lam, &psi);
                    let angle = -g.coef * params[g.param];
                    if angle != 0.0 {
                        self.apply_gate(g, angle, &mut psi);
                        self.apply_gate(g, angle, &mut lam);
                    }
                }
                Step::Diagonal(terms) => {
                    // Re⟨λ| i D ψ⟩ = Σ_x d_x Re(i conj(λ_x) ψ_x)
                    let w: Vec<f64> = lam
                        .iter()
                        .zip(&psi)
                        .map(|(l, p)| -(l.conj() * p).im)
                        .collect();
                    for &(param, pat) in terms {
                        grad[param] += self.diags[pat]
                            .iter()
                            .map(|&(x, d)| d * w[x as usize])
                            .sum::<f64>();
                    }
                    self.apply_diagonal(terms, params, -1.0, &mut psi);
                    self.apply_diagonal(terms, params, -1.0, &mut lam);
                }
            }
        }
        Ok(grad)
    }

    /// `Re⟨λ|G ψ⟩` for the anti-Hermitian generator of a gate.
    fn generator_overlap(&self, g: &Gate, lam: &[Complex64], psi: &[Complex64]) -> f64 {
        match g.op {
            Op::Real(pat) => self.pairs[pat]
                .iter()
                .map(|&(a, b, s)| {
                    let (a, b) = (a as usize, b as usize);
                    s * (lam[b].conj() * psi[a] - lam[a].conj() * psi[b]).re
                })
                .sum(),
            Op::Imag(pat) => self.pairs[pat]
                .iter()
                .map(|&(a, b, s)| {
                    let (a, b) = (a as usize, b as usize);
                    -s * (lam[a].conj() * psi[b] + lam[b].conj() * psi[a]).im
                })
                .sum(),
            Op::Phase(pat) => self.diags[pat]
                .iter()
                .map(|&(x, d)| -d * (lam[x as usize].conj() * psi[x as usize]).im)
                .sum(),
        }
    }
}

/// Prepares the ansatz state on a full register from a computational basis
/// reference state.
pub fn prepare_state(spec: &AnsatzSpec, params: &[f64], reference: &StateVector) -> Result<StateVector> {
    if reference.n_qubits() != spec.layout.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: spec.layout.n_modes(),
            got: reference.n_qubits(),
        });
    }
    let b = reference.as_basis_state(1e-12).ok_or(Error::InvalidReference)?;
    let phase = reference.amplitudes()[b as usize];
    let basis = SectorBasis::new(spec.layout, Sector::of_state(&spec.layout, b))?;
    let circuit = CompiledAnsatz::new(spec, &basis, b)?;
    let psi: Vec<Complex64> = circuit.state(params)?.into_iter().map(|a| a * phase).collect();
    Ok(basis.embed(&psi))
}

/// As [`prepare_state`], additionally requiring the reference to lie in
/// `sector`.
pub fn prepare_state_in_sector(spec: &AnsatzSpec, params: &[f64], reference: &StateVector, sector: Sector) -> Result<StateVector> {
    let b = reference.as_basis_state(1e-12).ok_or(Error::InvalidReference)?;
    if Sector::of_state(&spec.layout, b) != sector {
        return Err(Error::InvalidReference);
    }
    prepare_state(spec, params, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{insulating_single_site, two_site};

    #[test]
    fn kucj_counts() {
        let m = insulating_single_site();
        let full: Vec<usize> = (1..=5).map(|k| parameter_count(&AnsatzSpec::kucj(&m, k, false))).collect();
        let sparse: Vec<usize> = (1..=5).map(|k| parameter_count(&AnsatzSpec::kucj(&m, k, true))).collect();
        assert_eq!(full, vec![64, 96, 128, 160, 192]);
        assert_eq!(sparse, vec![58, 84, 110, 136, 162]);
        assert_eq!(parameter_count(&AnsatzSpec::kucj(&two_site(0.5), 3, true)), 422);
    }

    #[test]
    fn uccgsd_counts() {
        let m = insulating_single_site();
        assert_eq!(parameter_count(&AnsatzSpec::uccgsd(&m, false)), 332);
        assert_eq!(parameter_count(&AnsatzSpec::uccgsd(&m, true)), 104);
    }

    #[test]
    fn reference_fills_lowest_orbitals() {
        let l = SpinOrbitalLayout::new(4);
        assert_eq!(reference_state(&l, Sector::new(4, 0)).unwrap(), 0b1111);
        assert_eq!(reference_state(&l, Sector::new(5, 1)).unwrap(), 0b11111);
        assert_eq!(reference_state(&l, Sector::new(3, -1)).unwrap(), 0b1011);
    }

    #[test]
    fn zero_parameters_give_reference() {
        let m = insulating_single_site();
        let spec = AnsatzSpec::kucj(&m, 2, false);
        let reference = StateVector::basis(8, 0b1111).unwrap();
        let out = prepare_state(&spec, &vec![0.0; 96], &reference).unwrap();
        assert_eq!(out, reference);
        assert!(matches!(
            prepare_state(&spec, &[0.0; 3], &reference),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn non_basis_reference_rejected() {
        let m = insulating_single_site();
        let spec = AnsatzSpec::uccgsd(&m, true);
        let amps = vec![Complex64::new(0.5f64.sqrt(), 0.0); 2]
            .into_iter()
            .chain(std::iter::repeat(Complex64::default()).take(254))
            .collect();
        let r = StateVector::from_amplitudes(amps).unwrap();
        assert!(matches!(prepare_state(&spec, &[0.0; 104], &r), Err(Error::InvalidReference)));
    }
}
