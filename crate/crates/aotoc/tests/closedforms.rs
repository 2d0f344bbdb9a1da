//! Analytic reference values and their agreement with the generic correlator:
//! the basis-coherence form, the two solvable qubit semigroups, the echo
//! algebra, Pauli-word arithmetic, and stabilizer-sector dephasing.

use aotoc::algebra::AlgebraHandle;
use aotoc::aotoc::aotoc;
use aotoc::channel::{depolarizing, propagate, Channel};
use aotoc::closedforms::{
    build_stabilizer, cgp, dephasing_chi, example1, example2, hadamard_all, loschmidt_g,
    stabilizer_formula, stabilizer_overlap_form, PauliString,
};
use aotoc::numerics::{haar_unitary, seeded_rng, Prng};
use aotoc::{C64, CMat, Error};
use rand::RngExt;

fn cn(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mixed_unitary(d: usize, n: usize, rng: &mut Prng) -> Channel {
    let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let kraus: Vec<CMat> = weights
        .iter()
        .map(|&w| haar_unitary(d, rng) * C64::from(w.sqrt()))
        .collect();
    Channel::from_kraus(&kraus).unwrap()
}

// --- basis-coherence form ------------------------------------------------------

#[test]
fn coherence_form_equals_the_correlator_on_diagonal_algebras() {
    let mut rng = seeded_rng(201);
    for d in [2usize, 3, 5] {
        let basis = haar_unitary(d, &mut rng);
        let e = mixed_unitary(d, 3, &mut rng);
        let direct = cgp(&basis, &e).unwrap();
        let a = AlgebraHandle::maximal_abelian(&basis).unwrap();
        let general = aotoc(&a, &e).unwrap().g;
        assert!((direct - general).abs() < 1e-10, "d = {d}");
    }
}

#[test]
fn hadamard_reaches_the_qubit_maximum() {
    let e = Channel::from_unitary(&hadamard_all(1)).unwrap();
    let g = cgp(&CMat::identity(2, 2), &e).unwrap();
    assert!((g - 0.5).abs() < 1e-12);
    // And the identity channel produces no coherence at all.
    let id = Channel::identity(4);
    assert!(cgp(&CMat::identity(4, 4), &id).unwrap().abs() < 1e-13);
}

#[test]
fn coherence_form_rejects_bad_bases() {
    let skew = CMat::from_element(2, 2, cn(0.8, 0.0));
    let e = Channel::identity(2);
    assert!(matches!(cgp(&skew, &e), Err(Error::NotUnitary { .. })));
    assert!(cgp(&CMat::identity(3, 3), &e).is_err());
}

// --- solvable semigroups ---------------------------------------------------------

#[test]
fn mixing_semigroup_matches_its_formula() {
    for n in [1usize, 2] {
        let d = 1usize << n;
        let diag = AlgebraHandle::maximal_abelian(&CMat::identity(d, d)).unwrap();
        for &t in &[0.0, 0.3, 1.0, 2.5] {
            let (spec, expect) = example1(n, t).unwrap();
            let e = propagate(&spec, t).unwrap();
            let got = aotoc(&diag, &e).unwrap().g;
            assert!(
                (got - expect).abs() < 1e-8,
                "n = {n}, t = {t}: {got} vs {expect}"
            );
        }
    }
}

#[test]
fn mixing_semigroup_limits() {
    // Starts at zero and saturates at (1/4)(1 - 1/d).
    let (_, g0) = example1(3, 0.0).unwrap();
    assert_eq!(g0, 0.0);
    let (_, ginf) = example1(3, 60.0).unwrap();
    assert!((ginf - 0.25 * (1.0 - 1.0 / 8.0)).abs() < 1e-12);
    assert!(example1(0, 1.0).is_err());
    assert!(example1(2, -0.1).is_err());
}

#[test]
fn damped_oscillation_matches_its_formula() {
    for (n, lambda) in [(1usize, 0.0f64), (1, 0.5), (2, 1.0)] {
        let d = 1usize << n;
        let diag = AlgebraHandle::maximal_abelian(&CMat::identity(d, d)).unwrap();
        for &t in &[0.0, 0.4, 1.1, 2.0] {
            let (spec, expect) = example2(n, lambda, t).unwrap();
            let e = propagate(&spec, t).unwrap();
            let got = aotoc(&diag, &e).unwrap().g;
            assert!(
                (got - expect).abs() < 1e-8,
                "n = {n}, λ = {lambda}, t = {t}: {got} vs {expect}"
            );
        }
    }
}

#[test]
fn damped_oscillation_structure() {
    // Without damping the value is periodic with period π/2 and peaks at 1/2.
    let (_, a) = example2(2, 0.0, 0.3).unwrap();
    let (_, b) = example2(2, 0.0, 0.3 + std::f64::consts::PI / 2.0).unwrap();
    assert!((a - b).abs() < 1e-12);
    let (_, peak) = example2(1, 0.0, std::f64::consts::FRAC_PI_4).unwrap();
    assert!((peak - 0.5).abs() < 1e-12);
    // Damping multiplies by exp(-2λt).
    let (_, damped) = example2(1, 0.7, 1.3).unwrap();
    let (_, undamped) = example2(1, 0.0, 1.3).unwrap();
    assert!((damped - undamped * (-2.0f64 * 0.7 * 1.3).exp()).abs() < 1e-14);
    assert!(example2(1, -0.5, 1.0).is_err());
}

// --- echo algebra -----------------------------------------------------------------

#[test]
fn echo_form_equals_the_projector_algebra_correlator() {
    let mut rng = seeded_rng(202);
    for d in [4usize, 6] {
        let u = haar_unitary(d, &mut rng);
        let state = u.column(0).into_owned();
        let proj = &state * state.adjoint();
        let e = mixed_unitary(d, 3, &mut rng);
        let direct = loschmidt_g(&e, &proj).unwrap();
        let a = AlgebraHandle::projector_state(&state).unwrap();
        let general = aotoc(&a, &e).unwrap().g;
        assert!((direct - general).abs() < 1e-10, "d = {d}");
    }
}

#[test]
fn echo_form_endpoint_values() {
    let d = 4;
    let mut proj = CMat::zeros(d, d);
    proj[(0, 0)] = cn(1.0, 0.0);
    // Identity: no echo decay, no scrambling.
    assert!(loschmidt_g(&Channel::identity(d), &proj).unwrap().abs() < 1e-13);
    // A permutation moving the state to an orthogonal one: overlap L drops to
    // zero and the value reaches 2(d-2)/(d(d-1)).
    let mut perm = CMat::zeros(d, d);
    for j in 0..d {
        perm[((j + 1) % d, j)] = cn(1.0, 0.0);
    }
    let e = Channel::from_unitary(&perm).unwrap();
    let got = loschmidt_g(&e, &proj).unwrap();
    let expect = 2.0 * (d as f64 - 2.0) / (d as f64 * (d as f64 - 1.0));
    assert!((got - expect).abs() < 1e-12);
}

#[test]
fn echo_form_rejects_bad_projectors() {
    let e = Channel::identity(3);
    let not_idem = CMat::identity(3, 3) * cn(0.5, 0.0);
    assert!(loschmidt_g(&e, &not_idem).is_err());
    let rank2 = CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&[
        cn(1.0, 0.0),
        cn(1.0, 0.0),
        cn(0.0, 0.0),
    ]));
    assert!(loschmidt_g(&e, &rank2).is_err());
    assert!(loschmidt_g(&e, &CMat::identity(4, 4)).is_err());
}

// --- Pauli words -------------------------------------------------------------------

#[test]
fn pauli_word_roundtrip_and_matrices() {
    for w in ["I", "X", "Y", "Z", "XZ", "IYXZ"] {
        let p = PauliString::from_word(w).unwrap();
        assert_eq!(p.word(), w);
        assert_eq!(p.n(), w.len());
    }
    let x = PauliString::from_word("X").unwrap().matrix();
    assert_eq!(x[(0, 1)], cn(1.0, 0.0));
    assert_eq!(x[(1, 0)], cn(1.0, 0.0));
    let y = PauliString::from_word("Y").unwrap().matrix();
    assert_eq!(y[(0, 1)], cn(0.0, -1.0));
    assert_eq!(y[(1, 0)], cn(0.0, 1.0));
    let z = PauliString::from_word("Z").unwrap().matrix();
    assert_eq!(z[(1, 1)], cn(-1.0, 0.0));
    // Multi-qubit words are tensor products, first character leftmost.
    let xz = PauliString::from_word("XZ").unwrap().matrix();
    let expect = PauliString::from_word("X")
        .unwrap()
        .matrix()
        .kronecker(&PauliString::from_word("Z").unwrap().matrix());
    assert!((xz - expect).camax() < 1e-15);

    assert!(PauliString::from_word("").is_err());
    assert!(PauliString::from_word("XQ").is_err());
}

#[test]
fn pauli_products_track_phases() {
    let words = ["XI", "ZZ", "YX", "IZ", "YY", "XZ"];
    for a in words {
        for b in words {
            let pa = PauliString::from_word(a).unwrap();
            let pb = PauliString::from_word(b).unwrap();
            let prod = pa.mul(&pb);
            let dev = (prod.matrix() - pa.matrix() * pb.matrix()).camax();
            assert!(dev < 1e-15, "{a}·{b}");
            let commute_matrix = (pa.matrix() * pb.matrix() - pb.matrix() * pa.matrix()).camax()
                < 1e-15;
            assert_eq!(pa.commutes_with(&pb), commute_matrix, "{a} vs {b}");
        }
    }
    // Hermitian squares: S·S = +1.
    for w in words {
        let p = PauliString::from_word(w).unwrap();
        let sq = p.mul(&p);
        assert_eq!(sq.sign().unwrap(), 1.0);
        assert!((sq.matrix() - CMat::identity(4, 4)).camax() < 1e-15);
    }
    // Y·X = -iZ: the product picks up an explicitly imaginary prefactor.
    let y = PauliString::from_word("Y").unwrap();
    let x = PauliString::from_word("X").unwrap();
    let yx = y.mul(&x);
    assert!(yx.sign().is_err());
    let z = PauliString::from_word("Z").unwrap();
    assert!((yx.matrix() - z.matrix() * cn(0.0, -1.0)).camax() < 1e-15);
}

// --- stabilizer sectors ---------------------------------------------------------------

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn three_qubit_chain_group_structure() {
    let group = build_stabilizer(3, 1, &words(&["ZZI", "IZZ"])).unwrap();
    assert_eq!(group.n(), 3);
    assert_eq!(group.k(), 1);
    assert_eq!(group.elements().len(), 4);
    let mut elem_words: Vec<String> = group.elements().iter().map(|p| p.word()).collect();
    elem_words.sort();
    assert_eq!(elem_words, vec!["III", "IZZ", "ZIZ", "ZZI"]);

    // Four orthogonal rank-2 sector projectors resolving the identity, each
    // matching the sign-pattern product (1 ± ZZI)(1 ± IZZ)/4.
    let projs = group.sector_projectors();
    assert_eq!(projs.len(), 4);
    let mut total = CMat::zeros(8, 8);
    let zzi = PauliString::from_word("ZZI").unwrap().matrix();
    let izz = PauliString::from_word("IZZ").unwrap().matrix();
    let eye = CMat::identity(8, 8);
    for p in projs {
        assert!((p * p - p).camax() < 1e-12, "idempotent");
        assert!((p.trace() - cn(2.0, 0.0)).norm() < 1e-12, "rank 2");
        total += p;
        let found = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .any(|&(s1, s2)| {
                let hand = (&eye + &zzi * cn(s1, 0.0)) * (&eye + &izz * cn(s2, 0.0))
                    * cn(0.25, 0.0);
                (p - hand).camax() < 1e-12
            });
        assert!(found, "projector matches a sign pattern");
    }
    assert!((total - &eye).camax() < 1e-12);

    // Sector bases are orthonormal and supported inside their sector.
    for (p, b) in projs.iter().zip(group.sector_bases()) {
        assert!((b.adjoint() * b - CMat::identity(2, 2)).camax() < 1e-12);
        assert!((p * b - b).camax() < 1e-12);
    }

    let a = group.algebra().unwrap();
    assert_eq!(a.spec().blocks(), &[(1, 2), (1, 2), (1, 2), (1, 2)]);
    let db = a.dims_and_bounds();
    assert_eq!((db.dim_algebra, db.dim_commutant), (16, 4));
}

#[test]
fn group_construction_rejects_bad_generators() {
    assert!(build_stabilizer(3, 1, &words(&["ZZI"])).is_err(), "wrong count");
    assert!(
        build_stabilizer(2, 0, &words(&["XI", "ZI"])).is_err(),
        "anticommuting pair"
    );
    assert!(
        build_stabilizer(3, 1, &words(&["ZZI", "ZZI"])).is_err(),
        "dependent pair"
    );
    assert!(
        build_stabilizer(3, 1, &words(&["ZZ", "IZZ"])).is_err(),
        "wrong word length"
    );
    assert!(build_stabilizer(2, 3, &words(&[])).is_err(), "k beyond n");
}

#[test]
fn sector_dephasing_reproduces_the_closed_formula() {
    let group = build_stabilizer(3, 1, &words(&["ZZI", "IZZ"])).unwrap();
    let a = group.algebra().unwrap();
    for chi in 0..=2usize {
        let e = dephasing_chi(&group, chi, None).unwrap();
        assert!(e.verify().all_ok());
        let got = aotoc(&a, &e).unwrap();
        let expect = stabilizer_formula(3, 1, chi).unwrap();
        assert!(
            (got.g - expect).abs() < 1e-9,
            "χ = {chi}: {} vs {expect}",
            got.g
        );
        let overlap = stabilizer_overlap_form(&group, &e).unwrap();
        assert!((overlap - expect).abs() < 1e-9);
    }
    // The midpoint value is an exact dyadic: (1-1/4)(1/2)(1/2).
    assert_eq!(stabilizer_formula(3, 1, 1).unwrap(), 0.1875);
    assert!(stabilizer_formula(3, 1, 3).is_err());
    assert!(dephasing_chi(&group, 3, None).is_err());
}

#[test]
fn sector_rotation_leaves_the_value_unchanged() {
    let group = build_stabilizer(3, 1, &words(&["ZZI", "IZZ"])).unwrap();
    let a = group.algebra().unwrap();
    let expect = stabilizer_formula(3, 1, 1).unwrap();
    for seed in [1u64, 2, 3] {
        let e = dephasing_chi(&group, 1, Some(seed)).unwrap();
        let got = aotoc(&a, &e).unwrap().g;
        assert!(
            (got - expect).abs() < 1e-9,
            "seed {seed}: {got} vs {expect}"
        );
    }
}

#[test]
fn endpoint_dephasing_identities() {
    // χ = 2^k: every projector is in-sector, the channel preserves the
    // sector structure completely and the difference term cancels: g1 = g2 = 1.
    let group = build_stabilizer(4, 2, &words(&["ZZII", "IZZI"])).unwrap();
    let a = group.algebra().unwrap();
    let full = dephasing_chi(&group, 4, None).unwrap();
    let r = aotoc(&a, &full).unwrap();
    assert!(r.g.abs() < 1e-10);
    assert!((r.g1 - 1.0).abs() < 1e-10);
    // χ = 0: cross-sector superpositions wash both terms down to 2^k/2^n.
    let zero = dephasing_chi(&group, 0, None).unwrap();
    let r = aotoc(&a, &zero).unwrap();
    assert!(r.g.abs() < 1e-10);
    assert!((r.g1 - 0.25).abs() < 1e-10);
    assert!((r.g2 - 0.25).abs() < 1e-10);
}

#[test]
fn mixed_generator_letters_work() {
    // An XX-type generator exercises the phase bookkeeping end to end.
    let group = build_stabilizer(2, 1, &words(&["XX"])).unwrap();
    let a = group.algebra().unwrap();
    let e = dephasing_chi(&group, 1, None).unwrap();
    let got = aotoc(&a, &e).unwrap().g;
    let expect = stabilizer_formula(2, 1, 1).unwrap();
    assert!((got - expect).abs() < 1e-9);
    // Depolarizing is sector-agnostic; the correlator vanishes only at p=0.
    let dep = depolarizing(4, 0.5).unwrap();
    let r = aotoc(&a, &dep).unwrap();
    assert!(r.g >= -1e-12);
}
