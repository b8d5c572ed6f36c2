//! Checks against dense matrices built independently by explicit Kronecker
//! products and dense matrix exponentials.

mod common;

use common::{all_strings, c, dense_fermion, dense_op, kron_pauli, ladder, max_diff, random_state, vec_of, M, TOL};
use impurity_vqe::ansatz::{enumerate_generators, parameter_count, prepare_state, reference_state, AnsatzSpec, GeneratorKind, JChannel, ParamRole};
use impurity_vqe::fermion::{jordan_wigner, FermionOperator, Ladder, Spin, SpinOrbitalLayout};
use impurity_vqe::models::insulating_single_site;
use impurity_vqe::pauli::{Pauli, PauliString, QubitOperator};
use impurity_vqe::statevector::{apply_number_diagonal, apply_operator, apply_pauli_rotation, apply_pauli_string, expectation, transition_amplitude, StateVector};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn pauli_strings_match_kronecker_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=4 {
        for p in all_strings(n) {
            let psi = random_state(n, &mut rng);
            let got = vec_of(&apply_pauli_string(&psi, &p).unwrap());
            let want = kron_pauli(&p, n) * vec_of(&psi);
            assert!(max_diff(&got, &want) < TOL, "{p} on {n} qubits");
        }
    }
}

#[test]
fn basis_phase_table_on_two_qubits() {
    // Y0 Z1 |01> with qubit 0 set: Y|1> = -i|0>, Z|0> = |0>
    let p = PauliString::from_ops([(0, Pauli::Y), (1, Pauli::Z)]);
    assert_eq!(p.apply_to_basis(0b01), (0b00, c(0.0, -1.0)));
    assert_eq!(p.apply_to_basis(0b00), (0b01, c(0.0, 1.0)));
    assert_eq!(p.apply_to_basis(0b10), (0b11, c(0.0, -1.0)));
    let dense = kron_pauli(&p, 2);
    for b in 0..4u64 {
        let (t, ph) = p.apply_to_basis(b);
        assert!((dense[(t as usize, b as usize)] - ph).norm() < TOL);
    }
}

#[test]
fn rotations_match_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in all_strings(3).into_iter().skip(1) {
        let theta = rng.random_range(-3.0..3.0);
        let psi = random_state(3, &mut rng);
        let u = (kron_pauli(&p, 3) * c(0.0, -theta / 2.0)).exp();
        let got = vec_of(&apply_pauli_rotation(&psi, &p, theta).unwrap());
        assert!(max_diff(&got, &(u * vec_of(&psi))) < TOL, "{p}");
    }
}

#[test]
fn operators_expectations_and_transitions_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4;
    let strings = all_strings(n);
    let mut h = QubitOperator::zero(n);
    for _ in 0..12 {
        let p = strings[rng.random_range(0..strings.len())];
        h.add_term(p, c(rng.random_range(-1.0..1.0), 0.0)).unwrap();
    }
    let hd = dense_op(&h);
    let (a, b) = (random_state(n, &mut rng), random_state(n, &mut rng));
    let got = vec_of(&apply_operator(&a, &h).unwrap());
    assert!(max_diff(&got, &(&hd * vec_of(&a))) < TOL);
    let e = (vec_of(&a).adjoint() * &hd * vec_of(&a))[(0, 0)];
    assert!((expectation(&a, &h).unwrap() - e.re).abs() < TOL);
    let t = (vec_of(&a).adjoint() * &hd * vec_of(&b))[(0, 0)];
    assert!((transition_amplitude(&a, &h, &b).unwrap() - t).norm() < TOL);
}

#[test]
fn number_diagonal_matches_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 4;
    let mut g = FermionOperator::zero(n);
    for p in 0..n {
        for q in p..n {
            let w = rng.random_range(-1.0..1.0);
            let ops = if p == q { vec![(p, true), (p, false)] } else { vec![(p, true), (p, false), (q, true), (q, false)] };
            g.add_term(ops, c(0.0, w)).unwrap();
        }
    }
    let gq = jordan_wigner(&g).unwrap();
    let psi = random_state(n, &mut rng);
    let got = vec_of(&apply_number_diagonal(&psi, &gq).unwrap());
    let want = dense_op(&gq).exp() * vec_of(&psi);
    assert!(max_diff(&got, &want) < TOL);
}

#[test]
fn jordan_wigner_satisfies_canonical_anticommutation() {
    let n = 4;
    let dim = 1 << n;
    let a: Vec<M> = (0..n).map(|p| dense_fermion(&ladder(n, vec![(p, false)]))).collect();
    let ad: Vec<M> = (0..n).map(|p| dense_fermion(&ladder(n, vec![(p, true)]))).collect();
    for p in 0..n {
        assert!((&ad[p] - a[p].adjoint()).norm() < TOL);
        for q in 0..n {
            let anti = &a[p] * &ad[q] + &ad[q] * &a[p];
            let want = if p == q { M::identity(dim, dim) } else { M::zeros(dim, dim) };
            assert!((anti - want).norm() < TOL, "{{a_{p}, a†_{q}}}");
            assert!((&a[p] * &a[q] + &a[q] * &a[p]).norm() < TOL, "{{a_{p}, a_{q}}}");
        }
    }
}

#[test]
fn jordan_wigner_matches_direct_fermion_action() {
    let n = 4;
    let ops = [
        vec![(2, true), (0, false)],
        vec![(3, true), (1, true), (0, false), (2, false)],
        vec![(1, true), (1, false)],
        vec![(0, true), (3, false)],
    ];
    for o in ops {
        let f = ladder(n, o.clone());
        let dense = dense_fermion(&f);
        for b in 0..(1u64 << n) {
            let mut col = DVector::zeros(1 << n);
            for (t, w) in f.apply_to_basis(b) {
                col[t as usize] += w;
            }
            let diff = (dense.column(b as usize) - col).norm();
            assert!(diff < TOL, "{o:?} on {b:04b}");
        }
    }
}

/// Generator `G` such that a lone nonzero parameter `θ` prepares `e^{θG}`
/// (for k-uCJ, `e^{K}` or the `J` phase).
fn generator_matrix(layout: &SpinOrbitalLayout, kind: GeneratorKind, role: ParamRole) -> M {
    let n = layout.n_modes();
    let excitation = |ops: Vec<Ladder>| {
        let a = dense_fermion(&ladder(n, ops));
        match role {
            ParamRole::Real => &a - a.adjoint(),
            ParamRole::Imag => (&a + a.adjoint()) * c(0.0, 1.0),
        }
    };
    let number = |m: usize| dense_fermion(&ladder(n, vec![(m, true), (m, false)]));
    let i = c(0.0, 1.0);
    let spins = [Spin::Up, Spin::Down];
    match kind {
        GeneratorKind::Single { p, q } if p == q => number(p) * i,
        GeneratorKind::Single { p, q } => excitation(vec![(p, true), (q, false)]),
        GeneratorKind::Double { p, q, r, s } => excitation(vec![(p, true), (q, true), (s, false), (r, false)]),
        GeneratorKind::UcjK { p, q, .. } if p == q => (number(layout.mode(p, Spin::Up)) + number(layout.mode(p, Spin::Down))) * i,
        GeneratorKind::UcjK { p, q, .. } => spins
            .iter()
            .map(|&s| excitation(vec![(layout.mode(p, s), true), (layout.mode(q, s), false)]))
            .fold(M::zeros(1 << n, 1 << n), |a, b| a + b),
        GeneratorKind::UcjJ { p, q, channel, .. } => {
            let (pu, pd, qu, qd) = (
                number(layout.mode(p, Spin::Up)),
                number(layout.mode(p, Spin::Down)),
                number(layout.mode(q, Spin::Up)),
                number(layout.mode(q, Spin::Down)),
            );
            let d = match channel {
                JChannel::SameSpin => &pu * &qu + &pd * &qd,
                JChannel::OppositeSpin if p == q => &pu * &pd,
                JChannel::OppositeSpin => &pu * &qd + &pd * &qu,
            };
            d * i
        }
    }
}

#[test]
fn uccgsd_factors_match_dense_exponentials() {
    let model = insulating_single_site();
    let spec = AnsatzSpec::uccgsd(&model, false);
    let layout = spec.layout;
    let n = layout.n_modes();
    let reference = StateVector::basis(n, reference_state(&layout, model.ground_sector()).unwrap()).unwrap();
    let gens = enumerate_generators(&spec);
    let n_params = parameter_count(&spec);
    let mut checked = 0;
    for g in gens.iter().step_by(5) {
        for slot in &g.slots {
            let theta = 0.37 + 0.01 * slot.index as f64;
            let mut params = vec![0.0; n_params];
            params[slot.index] = theta;
            let got = vec_of(&prepare_state(&spec, &params, &reference).unwrap());
            let want = (generator_matrix(&layout, g.kind, slot.role) * c(theta, 0.0)).exp() * vec_of(&reference);
            assert!(max_diff(&got, &want) < TOL, "{:?} {:?}", g.kind, slot.role);
            checked += 1;
        }
    }
    assert!(checked > 60);
}

#[test]
fn kucj_layer_matches_dense_conjugation() {
    let model = insulating_single_site();
    let spec = AnsatzSpec::kucj(&model, 1, false);
    let layout = spec.layout;
    let n = layout.n_modes();
    let reference = StateVector::basis(n, reference_state(&layout, model.ground_sector()).unwrap()).unwrap();
    let gens = enumerate_generators(&spec);
    let n_params = parameter_count(&spec);
    let ks: Vec<_> = gens
        .iter()
        .filter(|g| matches!(g.kind, GeneratorKind::UcjK { p, q, .. } if p != q))
        .collect();
    let js: Vec<_> = gens.iter().filter(|g| matches!(g.kind, GeneratorKind::UcjJ { .. })).collect();
    assert!(!ks.is_empty() && !js.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..6 {
        let k = ks[rng.random_range(0..ks.len())];
        let slot = k.slots[trial % k.slots.len()];
        let jgen = js[rng.random_range(0..js.len())];
        let (tk, tj) = (rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0));
        let mut params = vec![0.0; n_params];
        params[slot.index] = tk;
        params[jgen.slots[0].index] = tj;
        let kmat = generator_matrix(&layout, k.kind, slot.role) * c(tk, 0.0);
        let jmat = generator_matrix(&layout, jgen.kind, ParamRole::Real) * c(tj, 0.0);
        let want = kmat.exp() * jmat.exp() * (-kmat).exp() * vec_of(&reference);
        let got = vec_of(&prepare_state(&spec, &params, &reference).unwrap());
        assert!(max_diff(&got, &want) < TOL, "{:?} with {:?}", k.kind, jgen.kind);
    }
}
