//! Quantum-channel construction, verification, composition, the Choi
//! transform, and Lindblad generators/propagators.

use aotoc::channel::{
    dephasing_qubit, depolarizing, lindblad_superop, lindblad_superop_csr, pinching, propagate,
    Channel, LindbladSpec,
};
use aotoc::numerics::{complex_normal, csr_to_dense, haar_unitary, matexp, seeded_rng, Prng};
use aotoc::{C64, CMat, Error};

fn cn(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_matrix(d: usize, rng: &mut Prng) -> CMat {
    CMat::from_fn(d, d, |_, _| complex_normal(rng))
}

fn random_hermitian(d: usize, rng: &mut Prng) -> CMat {
    let m = random_matrix(d, rng);
    (&m + m.adjoint()) * C64::from(0.5)
}

/// A random unital channel: a convex mixture of a few Haar unitaries.
fn mixed_unitary(d: usize, n: usize, rng: &mut Prng) -> Channel {
    let mut weights: Vec<f64> = (0..n).map(|_| 0.2 + 0.8 * (rng.random_range(0.0..1.0))).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let kraus: Vec<CMat> = weights
        .iter()
        .map(|&w| haar_unitary(d, rng) * C64::from(w.sqrt()))
        .collect();
    Channel::from_kraus(&kraus).expect("mixture is a channel")
}

use rand::RngExt;

// --- constructors and verification -------------------------------------------

#[test]
fn identity_channel_fixes_everything() {
    let mut rng = seeded_rng(1);
    let e = Channel::identity(4);
    let x = random_matrix(4, &mut rng);
    assert!((e.apply(&x).unwrap() - &x).camax() < 1e-15);
    let check = e.verify();
    assert!(check.all_ok());
    assert!(check.min_choi_eig >= -1e-12);
}

#[test]
fn unitary_channel_conjugates() {
    let mut rng = seeded_rng(2);
    let u = haar_unitary(3, &mut rng);
    let e = Channel::from_unitary(&u).unwrap();
    let x = random_matrix(3, &mut rng);
    let expect = &u * &x * u.adjoint();
    assert!((e.apply(&x).unwrap() - expect).camax() < 1e-12);
    assert!(e.verify().all_ok());
}

#[test]
fn from_unitary_rejects_nonunitary() {
    let m = CMat::identity(2, 2) * cn(1.5, 0.0);
    assert!(matches!(
        Channel::from_unitary(&m),
        Err(Error::NotUnitary { .. })
    ));
}

#[test]
fn kraus_must_resolve_identity_both_ways() {
    // Trace-preserving but not unital: the amplitude-damping channel.
    let g: f64 = 0.3;
    let k0 = CMat::from_row_slice(2, 2, &[cn(1.0, 0.0), cn(0.0, 0.0), cn(0.0, 0.0), cn((1.0 - g).sqrt(), 0.0)]);
    let k1 = CMat::from_row_slice(2, 2, &[cn(0.0, 0.0), cn(g.sqrt(), 0.0), cn(0.0, 0.0), cn(0.0, 0.0)]);
    assert!(Channel::from_kraus(&[k0, k1]).is_err());

    let mut rng = seeded_rng(3);
    let u = haar_unitary(4, &mut rng);
    let half = u * cn(0.5f64.sqrt(), 0.0);
    let e = Channel::from_kraus(&[half.clone(), half]).unwrap();
    assert!(e.verify().all_ok());
}

#[test]
fn depolarizing_contracts_toward_the_maximally_mixed_state() {
    let mut rng = seeded_rng(4);
    let d = 3;
    let p = 0.4;
    let e = depolarizing(d, p).unwrap();
    let x = random_hermitian(d, &mut rng);
    let out = e.apply(&x).unwrap();
    let expect = &x * cn(1.0 - p, 0.0)
        + CMat::identity(d, d) * cn(p * x.trace().re / d as f64, 0.0);
    assert!((out - expect).camax() < 1e-12);
    assert!(e.verify().all_ok());
    assert!(depolarizing(d, 1.5).is_err());
    assert!(depolarizing(d, -0.1).is_err());
}

#[test]
fn qubit_dephasing_damps_coherences() {
    let p = 0.25;
    let e = dephasing_qubit(p).unwrap();
    let x = CMat::from_row_slice(2, 2, &[cn(0.5, 0.0), cn(0.3, 0.1), cn(0.3, -0.1), cn(0.5, 0.0)]);
    let out = e.apply(&x).unwrap();
    assert!((out[(0, 0)] - x[(0, 0)]).norm() < 1e-14);
    assert!((out[(1, 1)] - x[(1, 1)]).norm() < 1e-14);
    let shrink = cn(1.0 - 2.0 * p, 0.0);
    assert!((out[(0, 1)] - x[(0, 1)] * shrink).norm() < 1e-14);
    assert!(e.verify().all_ok());
}

#[test]
fn pinching_projects_block_diagonally() {
    let mut p0 = CMat::zeros(3, 3);
    p0[(0, 0)] = cn(1.0, 0.0);
    let mut p1 = CMat::zeros(3, 3);
    p1[(1, 1)] = cn(1.0, 0.0);
    p1[(2, 2)] = cn(1.0, 0.0);
    let e = pinching(&[p0.clone(), p1.clone()]).unwrap();
    let mut rng = seeded_rng(5);
    let x = random_matrix(3, &mut rng);
    let expect = &p0 * &x * &p0 + &p1 * &x * &p1;
    assert!((e.apply(&x).unwrap() - expect).camax() < 1e-12);
    assert!(e.verify().all_ok());
    // Idempotent.
    let twice = e.compose(&e).unwrap();
    assert!((twice.superop() - e.superop()).camax() < 1e-12);
}

#[test]
fn verify_flags_a_positive_but_not_completely_positive_map() {
    // The transpose map: unital and trace-preserving, Choi has a -1 eigenvalue.
    let d = 3;
    let mut sw = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            sw[(i * d + j, j * d + i)] = cn(1.0, 0.0);
        }
    }
    let e = Channel::from_superop(sw).unwrap();
    let check = e.verify();
    assert!(check.unital && check.trace_preserving);
    assert!(!check.cp);
    assert!(check.min_choi_eig < -0.5);
    assert!(!check.all_ok());
}

#[test]
fn from_superop_rejects_non_square_superoperators() {
    assert!(Channel::from_superop(CMat::zeros(3, 3)).is_err());
}

// --- algebraic structure ------------------------------------------------------

#[test]
fn compose_matches_sequential_application() {
    let mut rng = seeded_rng(6);
    let d = 4;
    let e1 = mixed_unitary(d, 3, &mut rng);
    let e2 = mixed_unitary(d, 2, &mut rng);
    let x = random_matrix(d, &mut rng);
    let seq = e2.apply(&e1.apply(&x).unwrap()).unwrap();
    let combined = e2.compose(&e1).unwrap().apply(&x).unwrap();
    assert!((seq - combined).camax() < 1e-12);

    let wrong = Channel::identity(3);
    assert!(e1.compose(&wrong).is_err());
}

#[test]
fn adjoint_is_the_heisenberg_picture() {
    let mut rng = seeded_rng(7);
    let d = 3;
    let e = mixed_unitary(d, 3, &mut rng);
    let x = random_matrix(d, &mut rng);
    let y = random_matrix(d, &mut rng);
    let lhs = y.dotc(&e.apply(&x).unwrap());
    let rhs = e.adjoint().apply(&y).unwrap().dotc(&x);
    assert!((lhs - rhs).norm() < 1e-12);
}

#[test]
fn choi_of_a_unitary_is_rank_one() {
    let mut rng = seeded_rng(8);
    let d = 3;
    let u = haar_unitary(d, &mut rng);
    let e = Channel::from_unitary(&u).unwrap();
    let c = e.choi();
    let herm_dev = (&c - c.adjoint()).camax();
    assert!(herm_dev < 1e-12);
    let eig = c.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert!((vals[0] - d as f64).abs() < 1e-10, "top eigenvalue is d");
    assert!(vals[1].abs() < 1e-10, "all other eigenvalues vanish");
}

#[test]
fn choi_trace_equals_dimension() {
    let mut rng = seeded_rng(9);
    for d in [2usize, 3, 5] {
        let e = mixed_unitary(d, 3, &mut rng);
        let tr = e.choi().trace();
        assert!((tr - cn(d as f64, 0.0)).norm() < 1e-10);
    }
}

// --- Lindblad generators and propagation ----------------------------------------

#[test]
fn lindblad_spec_requires_hermitian_hamiltonian() {
    let mut rng = seeded_rng(10);
    let h = random_matrix(3, &mut rng);
    assert!(LindbladSpec::new(h, vec![]).is_err());
    let ok = LindbladSpec::new(random_hermitian(3, &mut rng), vec![random_matrix(3, &mut rng)]);
    assert!(ok.is_ok());
}

#[test]
fn dense_and_sparse_generators_agree() {
    let mut rng = seeded_rng(11);
    let d = 4;
    let spec = LindbladSpec::new(
        random_hermitian(d, &mut rng),
        vec![random_matrix(d, &mut rng), random_matrix(d, &mut rng)],
    )
    .unwrap();
    let dense = lindblad_superop(&spec);
    let sparse = csr_to_dense(&lindblad_superop_csr(&spec));
    assert!((dense - sparse).camax() < 1e-13);
}

#[test]
fn closed_system_propagation_is_heisenberg_conjugation() {
    // The generator evolves observables: X -> exp(+iHt) X exp(-iHt).
    let mut rng = seeded_rng(12);
    let d = 3;
    let h = random_hermitian(d, &mut rng);
    let t = 0.8;
    let e = propagate(&LindbladSpec::new(h.clone(), vec![]).unwrap(), t).unwrap();
    let u = matexp(&(h * cn(0.0, 1.0)), t);
    let x = random_matrix(d, &mut rng);
    let expect = &u * &x * u.adjoint();
    assert!((e.apply(&x).unwrap() - expect).camax() < 1e-10);
    assert!(e.verify().all_ok());
}

#[test]
fn propagation_is_a_semigroup() {
    let mut rng = seeded_rng(13);
    let d = 3;
    let spec = LindbladSpec::new(
        random_hermitian(d, &mut rng),
        vec![random_matrix(d, &mut rng) * cn(0.4, 0.0)],
    )
    .unwrap();
    let whole = propagate(&spec, 1.2).unwrap();
    let halves = propagate(&spec, 0.6)
        .unwrap()
        .compose(&propagate(&spec, 0.6).unwrap())
        .unwrap();
    assert!((whole.superop() - halves.superop()).camax() < 1e-9);
    assert!(propagate(&spec, -0.5).is_err(), "negative time is rejected");
}

#[test]
fn hermitian_jumps_give_unital_channels() {
    // L = L† makes the generator unital as well as trace-preserving.
    let mut rng = seeded_rng(14);
    let d = 4;
    let spec = LindbladSpec::new(
        random_hermitian(d, &mut rng),
        vec![random_hermitian(d, &mut rng), random_hermitian(d, &mut rng)],
    )
    .unwrap();
    let e = propagate(&spec, 0.7).unwrap();
    let check = e.verify();
    assert!(check.all_ok(), "unital dev {}, tp dev {}", check.unital_dev, check.tp_dev);
}

#[test]
fn dephasing_semigroup_matches_the_discrete_channel() {
    // With jump sqrt(a) sigma_z, coherences decay as exp(-2at); the discrete
    // channel with flip weight p shrinks them by 1-2p, so the two maps meet
    // at p = (1 - exp(-2at))/2.
    let a = 0.15f64;
    let t = 0.5;
    let mut sz = CMat::identity(2, 2);
    sz[(1, 1)] = cn(-1.0, 0.0);
    let spec = LindbladSpec::new(CMat::zeros(2, 2), vec![sz * cn(a.sqrt(), 0.0)]).unwrap();
    let e = propagate(&spec, t).unwrap();
    let p = 0.5 * (1.0 - (-2.0 * a * t).exp());
    let discrete = dephasing_qubit(p).unwrap();
    assert!((e.superop() - discrete.superop()).camax() < 1e-12);
}
