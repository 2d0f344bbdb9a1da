//! Spin-chain model builders: constrained-space construction, product
//! states, collective-noise chains, zero-spin subspaces, time series and
//! the quadratic response fit.

use aotoc::algebra::AlgebraHandle;
use aotoc::aotoc::{AotocReport, Method};
use aotoc::models::{
    dfs_subspace, perturbation_unitary, perturbed_dfs_algebra, product_state, pxp_model,
    pxp_space, run_series, time_average_quadratic_fit, time_grid, total_spin_squared, xxx_model,
    ExperimentSeries, ModelKind, ProductPattern, SeriesMeta, SpinChainSpec,
};
use aotoc::{C64, CMat};

fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Single-site operator M acting on site j of an n-site register, with the
/// convention that bit j of a basis index addresses site j.
fn on_site(m: &CMat, j: usize, n: usize) -> CMat {
    let left = CMat::identity(1 << (n - 1 - j), 1 << (n - 1 - j));
    let right = CMat::identity(1 << j, 1 << j);
    left.kronecker(m).kronecker(&right)
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

fn pauli_y() -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[cr(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), cr(0.0)],
    )
}

/// Diagonal in the (down, up) index order used by the basis enumeration:
/// an up site (bit 1) carries eigenvalue +1.
fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(-1.0), cr(0.0), cr(0.0), cr(1.0)])
}

fn raise() -> CMat {
    // |up><down|, i.e. row index 1, column index 0
    CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(1.0), cr(0.0)])
}

fn project_down() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)])
}

/// Isometry from the constrained space into the full register, one column
/// per retained configuration.
fn space_isometry(space: &[usize], n: usize) -> CMat {
    let mut v = CMat::zeros(1 << n, space.len());
    for (i, &b) in space.iter().enumerate() {
        v[(b, i)] = cr(1.0);
    }
    v
}

fn compress(op: &CMat, iso: &CMat) -> CMat {
    iso.adjoint() * op * iso
}

/// Match two operator lists up to reordering; every entry must find an
/// unused partner within tolerance.
fn assert_operator_multiset_eq(got: &[CMat], want: &[CMat], tol: f64, what: &str) {
    assert_eq!(got.len(), want.len(), "{what}: operator counts differ");
    let mut used = vec![false; want.len()];
    for (i, g) in got.iter().enumerate() {
        let hit = want
            .iter()
            .enumerate()
            .position(|(k, w)| !used[k] && (g - w).camax() <= tol);
        match hit {
            Some(k) => used[k] = true,
            None => panic!("{what}: operator {i} has no partner in the expected list"),
        }
    }
}

fn lucas(n: usize) -> usize {
    // 2, 1, 3, 4, 7, 11, ...
    let (mut a, mut b) = (2usize, 1usize);
    for _ in 0..n {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

#[test]
fn blockade_space_matches_brute_force_and_lucas_counts() {
    let three = pxp_space(3).unwrap();
    assert_eq!(three, vec![0b000, 0b001, 0b010, 0b100]);
    assert_eq!(pxp_space(4).unwrap().len(), 7);
    assert_eq!(pxp_space(8).unwrap().len(), 47);

    for n in 3..=12 {
        let space = pxp_space(n).unwrap();
        assert_eq!(space.len(), lucas(n), "count at n = {n}");
        assert!(space.windows(2).all(|w| w[0] < w[1]), "ordering at n = {n}");
        // independent filter: no configuration may hold two cyclically
        // adjacent up sites
        let ok = |b: usize| (0..n).all(|j| (b >> j) & 1 == 0 || (b >> ((j + 1) % n)) & 1 == 0);
        let brute: Vec<usize> = (0..1usize << n).filter(|&b| ok(b)).collect();
        assert_eq!(space, brute, "membership at n = {n}");
    }
}

#[test]
fn blockade_space_rejects_out_of_range_sizes() {
    assert!(pxp_space(2).is_err());
    assert!(pxp_space(25).is_err());
}

#[test]
fn constrained_hamiltonian_matches_full_space_compression() {
    let n = 5;
    let coupling = 1.3;
    let spec = SpinChainSpec::new(n, coupling, 0.0, 0.0, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let space = pxp_space(n).unwrap();
    assert_eq!(model.dim(), space.len());
    assert!(model.jumps.is_empty());

    // oracle: build P_{j-1} X_j P_{j+1} on the full register, then compress
    let iso = space_isometry(&space, n);
    let mut full = CMat::zeros(1 << n, 1 << n);
    for j in 0..n {
        let left = on_site(&project_down(), (j + n - 1) % n, n);
        let right = on_site(&project_down(), (j + 1) % n, n);
        full += &left * on_site(&pauli_x(), j, n) * &right * cr(coupling);
    }
    let oracle = compress(&full, &iso);
    assert!((&model.hamiltonian - &oracle).camax() < 1e-12);

    // structure: Hermitian, zero diagonal, off-diagonal entries are 0 or 𝒥
    assert!((&model.hamiltonian - model.hamiltonian.adjoint()).camax() < 1e-14);
    for i in 0..model.dim() {
        assert_eq!(model.hamiltonian[(i, i)], cr(0.0));
        for k in 0..model.dim() {
            let v = model.hamiltonian[(i, k)];
            assert!(v.im == 0.0 && (v.re == 0.0 || (v.re - coupling).abs() < 1e-15));
        }
    }
}

#[test]
fn constrained_jumps_match_full_space_compression() {
    let n = 4;
    let (alpha, gamma) = (0.3, 0.2);
    let spec = SpinChainSpec::new(n, 1.0, alpha, gamma, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let space = pxp_space(n).unwrap();
    let iso = space_isometry(&space, n);

    let mut expected = Vec::new();
    for j in 0..n {
        expected.push(compress(&(on_site(&pauli_z(), j, n) * cr(alpha.sqrt())), &iso));
    }
    for j in 0..n {
        let sp = on_site(&raise(), j, n);
        expected.push(compress(&(&sp * cr(gamma.sqrt())), &iso));
        expected.push(compress(&(sp.adjoint() * cr(gamma.sqrt())), &iso));
    }
    assert_eq!(model.jumps.len(), 3 * n);
    assert_operator_multiset_eq(&model.jumps, &expected, 1e-12, "constrained jumps");

    // rate toggles drop the corresponding families
    let deph_only = SpinChainSpec::new(n, 1.0, alpha, 0.0, ModelKind::Pxp).unwrap();
    assert_eq!(pxp_model(&deph_only).unwrap().jumps.len(), n);
    let drive_only = SpinChainSpec::new(n, 1.0, 0.0, gamma, ModelKind::Pxp).unwrap();
    assert_eq!(pxp_model(&drive_only).unwrap().jumps.len(), 2 * n);
}

#[test]
fn product_states_pick_the_right_configurations() {
    let space = pxp_space(4).unwrap();

    let ferro = product_state(4, ProductPattern::Ferro).unwrap();
    assert_eq!(ferro.len(), space.len());
    let fi = space.iter().position(|&b| b == 0b0000).unwrap();
    assert_eq!(ferro[fi], cr(1.0));
    assert!((ferro.norm() - 1.0).abs() < 1e-15);
    assert_eq!(ferro.iter().filter(|c| c.norm() > 0.0).count(), 1);

    // alternating with site 0 up: bits 0 and 2 set
    let neel = product_state(4, ProductPattern::Neel).unwrap();
    let ni = space.iter().position(|&b| b == 0b0101).unwrap();
    assert_eq!(neel[ni], cr(1.0));
    assert_eq!(neel.iter().filter(|c| c.norm() > 0.0).count(), 1);

    assert!(product_state(5, ProductPattern::Neel).is_err());
    assert!(product_state(5, ProductPattern::Ferro).is_ok());
}

#[test]
fn spec_validation_and_kind_mismatch() {
    assert!(SpinChainSpec::new(1, 1.0, 0.0, 0.0, ModelKind::Pxp).is_err());
    assert!(SpinChainSpec::new(4, 1.0, -0.1, 0.0, ModelKind::Pxp).is_err());
    assert!(SpinChainSpec::new(4, 1.0, 0.0, -0.1, ModelKind::Xxx).is_err());

    let as_xxx = SpinChainSpec::new(4, 1.0, 0.0, 0.0, ModelKind::Xxx).unwrap();
    assert!(pxp_model(&as_xxx).is_err());
    let as_pxp = SpinChainSpec::new(4, 1.0, 0.0, 0.0, ModelKind::Pxp).unwrap();
    assert!(xxx_model(&as_pxp).is_err());
}

#[test]
fn exchange_hamiltonian_matches_full_space_oracle() {
    let n = 3;
    let coupling = 0.9;
    let spec = SpinChainSpec::new(n, coupling, 0.0, 0.0, ModelKind::Xxx).unwrap();
    let model = xxx_model(&spec).unwrap();
    assert_eq!(model.dim(), 1 << n);

    let mut oracle = CMat::zeros(1 << n, 1 << n);
    for j in 0..n {
        let k = (j + 1) % n;
        for m in [pauli_x(), pauli_y(), pauli_z()] {
            oracle += on_site(&m, j, n) * on_site(&m, k, n) * cr(coupling);
        }
    }
    assert!((&model.hamiltonian - &oracle).camax() < 1e-12);
}

#[test]
fn two_site_exchange_spectrum_is_triplet_plus_singlet() {
    // with 2 sites the periodic sum visits the single bond twice
    let coupling = 0.7;
    let spec = SpinChainSpec::new(2, coupling, 0.0, 0.0, ModelKind::Xxx).unwrap();
    let model = xxx_model(&spec).unwrap();
    let eig = nalgebra::SymmetricEigen::new(model.hamiltonian.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expect = [-6.0 * coupling, 2.0 * coupling, 2.0 * coupling, 2.0 * coupling];
    for (got, want) in vals.iter().zip(expect) {
        assert!((got - want).abs() < 1e-12, "eigenvalue {got} vs {want}");
    }
}

#[test]
fn exchange_model_commutes_with_its_conserved_quantities() {
    let n = 4;
    let spec = SpinChainSpec::new(n, 1.0, 0.0, 0.0, ModelKind::Xxx).unwrap();
    let h = xxx_model(&spec).unwrap().hamiltonian;

    let s2 = total_spin_squared(n);
    assert!((&h * &s2 - &s2 * &h).camax() < 1e-10);

    let mut sz = CMat::zeros(1 << n, 1 << n);
    for j in 0..n {
        sz += on_site(&pauli_z(), j, n);
    }
    assert!((&h * &sz - &sz * &h).camax() < 1e-10);
}

#[test]
fn collective_jumps_match_their_definitions() {
    let n = 3;
    let (alpha, gamma) = (0.4, 0.15);
    let spec = SpinChainSpec::new(n, 1.0, alpha, gamma, ModelKind::Xxx).unwrap();
    let model = xxx_model(&spec).unwrap();

    let mut z_total = CMat::zeros(1 << n, 1 << n);
    let mut plus_total = CMat::zeros(1 << n, 1 << n);
    for j in 0..n {
        z_total += on_site(&pauli_z(), j, n);
        plus_total += on_site(&raise(), j, n);
    }
    let expected = vec![
        &z_total * cr(alpha.sqrt()),
        &plus_total * cr(gamma.sqrt()),
        plus_total.adjoint() * cr(gamma.sqrt()),
    ];
    assert_operator_multiset_eq(&model.jumps, &expected, 1e-12, "collective jumps");

    // raising/lowering come as an adjoint pair, so the semigroup is unital
    let channel = aotoc::channel::propagate(&model, 0.4).unwrap();
    let check = channel.verify();
    assert!(check.all_ok(), "{check:?}");
}

#[test]
fn zero_spin_sector_dimensions_follow_the_catalan_sequence() {
    for (n, dim) in [(2usize, 1usize), (4, 2), (6, 5)] {
        let basis = dfs_subspace(n).unwrap();
        assert_eq!(basis.nrows(), 1 << n);
        assert_eq!(basis.ncols(), dim, "sector dimension at n = {n}");

        let gram = basis.adjoint() * &basis;
        assert!((&gram - CMat::identity(dim, dim)).camax() < 1e-10);
        assert!((total_spin_squared(n) * &basis).camax() < 1e-7);
    }
    assert!(dfs_subspace(3).is_err());
    assert!(dfs_subspace(14).is_err());
}

#[test]
fn two_site_zero_spin_vector_is_the_singlet() {
    let basis = dfs_subspace(2).unwrap();
    let mut singlet = aotoc::CVec::zeros(4);
    singlet[0b01] = cr(1.0 / 2.0f64.sqrt());
    singlet[0b10] = cr(-1.0 / 2.0f64.sqrt());
    let overlap = basis.column(0).dotc(&singlet).norm();
    assert!((overlap - 1.0).abs() < 1e-10);
}

#[test]
fn perturbation_rotations_are_unitary_and_axis_stable() {
    let n = 3;
    let d = 1 << n;

    assert!((perturbation_unitary(n, 0.0, 9) - CMat::identity(d, d)).camax() < 1e-15);

    let u = perturbation_unitary(n, 0.3, 9);
    assert!((u.adjoint() * &u - CMat::identity(d, d)).camax() < 1e-12);
    assert!((&u - perturbation_unitary(n, 0.3, 9)).camax() == 0.0);
    assert!((&u - perturbation_unitary(n, 0.3, 10)).camax() > 1e-3);

    // the rotation axes depend only on the seed, so strengths compose
    let composed = perturbation_unitary(n, 0.2, 9) * perturbation_unitary(n, 0.1, 9);
    assert!((perturbation_unitary(n, 0.3, 9) - composed).camax() < 1e-12);
}

#[test]
fn perturbed_subspace_algebra_reduces_to_the_plain_one_at_zero_strength() {
    let n = 4;
    let plain = AlgebraHandle::dfs(&dfs_subspace(n).unwrap()).unwrap();
    let at_zero = perturbed_dfs_algebra(n, 0.0, 5).unwrap();
    assert_eq!(at_zero.spec().blocks(), plain.spec().blocks());
    assert_eq!(at_zero.spec().blocks(), &[(1, 14), (2, 1)]);
    assert!((at_zero.spec().embedding() - plain.spec().embedding()).camax() < 1e-14);

    let tilted = perturbed_dfs_algebra(n, 0.2, 5).unwrap();
    assert_eq!(tilted.spec().blocks(), plain.spec().blocks());
    assert!((tilted.spec().embedding() - plain.spec().embedding()).camax() > 1e-4);

    assert!(perturbed_dfs_algebra(n, -0.1, 5).is_err());
}

#[test]
fn series_at_time_zero_reports_the_identity_channel() {
    let spec = SpinChainSpec::new(4, 1.0, 0.1, 0.1, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let state = product_state(4, ProductPattern::Neel).unwrap();
    let algebra = AlgebraHandle::projector_state(&state).unwrap();

    let series = run_series(&model, &algebra, &[0.0]).unwrap();
    assert_eq!(series.times, vec![0.0]);
    assert_eq!(series.rows.len(), 1);
    assert!(series.rows[0].g.abs() < 1e-12);
    assert!((series.rows[0].g1 - 1.0).abs() < 1e-12);
    assert!(series.meta.wall_seconds >= 0.0);
}

#[test]
fn series_rejects_bad_grids_and_mismatched_dimensions() {
    let spec = SpinChainSpec::new(4, 1.0, 0.0, 0.0, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let state = product_state(4, ProductPattern::Ferro).unwrap();
    let algebra = AlgebraHandle::projector_state(&state).unwrap();

    assert!(run_series(&model, &algebra, &[]).is_err());
    assert!(run_series(&model, &algebra, &[-0.5, 0.0]).is_err());
    assert!(run_series(&model, &algebra, &[0.0, 1.0, 1.0]).is_err());
    assert!(run_series(&model, &algebra, &[0.0, 1.0, 0.5]).is_err());

    let wrong = AlgebraHandle::bipartite(2, 4).unwrap();
    assert!(run_series(&model, &wrong, &[0.0, 1.0]).is_err());
}

#[test]
fn closed_chain_series_keeps_the_decoherence_term_at_one() {
    let spec = SpinChainSpec::new(4, 1.0, 0.0, 0.0, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let state = product_state(4, ProductPattern::Neel).unwrap();
    let algebra = AlgebraHandle::projector_state(&state).unwrap();

    let series = run_series(&model, &algebra, &[0.0, 0.7, 1.4, 2.8]).unwrap();
    for (t, row) in series.times.iter().zip(&series.rows) {
        assert!((row.g1 - 1.0).abs() < 1e-9, "g1 = {} at t = {t}", row.g1);
        assert!(row.g >= -1e-12 && row.g <= row.bound + 1e-9);
        assert!(row.g2 <= row.g1 + 1e-12);
    }
    assert!(series.rows[0].g.abs() < 1e-12);
}

#[test]
fn noisy_chain_series_shrinks_monotonically() {
    let spec = SpinChainSpec::new(4, 1.0, 0.05, 0.05, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let state = product_state(4, ProductPattern::Neel).unwrap();
    let algebra = AlgebraHandle::projector_state(&state).unwrap();

    let series = run_series(&model, &algebra, &[0.0, 1.0, 2.0]).unwrap();
    let g1: Vec<f64> = series.rows.iter().map(|r| r.g1).collect();
    // the generator is unital, so the basis images contract in norm
    assert!(g1[0] >= g1[1] - 1e-12 && g1[1] >= g1[2] - 1e-12, "{g1:?}");
    assert!(g1[2] < 1.0 - 1e-3, "expected a visible drop, got {}", g1[2]);
    for row in &series.rows {
        assert!(row.g2 <= row.g1 + 1e-12);
    }
}

#[test]
fn repeated_series_runs_are_bitwise_identical() {
    let spec = SpinChainSpec::new(4, 1.0, 0.05, 0.0, ModelKind::Pxp).unwrap();
    let model = pxp_model(&spec).unwrap();
    let state = product_state(4, ProductPattern::Ferro).unwrap();
    let algebra = AlgebraHandle::projector_state(&state).unwrap();

    let a = run_series(&model, &algebra, &[0.0, 0.5, 1.0]).unwrap();
    let b = run_series(&model, &algebra, &[0.0, 0.5, 1.0]).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(ra.g.to_bits(), rb.g.to_bits());
        assert_eq!(ra.g1.to_bits(), rb.g1.to_bits());
        assert_eq!(ra.g2.to_bits(), rb.g2.to_bits());
    }
}

#[test]
fn time_grid_conventions() {
    let grid = time_grid(1.0, 0.25).unwrap();
    assert_eq!(grid, vec![0.0, 0.25, 0.5, 0.75, 1.0]);

    // roundoff near an exact multiple still lands the endpoint
    let grid = time_grid(0.3, 0.1).unwrap();
    assert_eq!(grid.len(), 4);
    assert!((grid[3] - 0.3).abs() < 1e-12);

    assert_eq!(time_grid(0.0, 0.5).unwrap(), vec![0.0]);
    assert_eq!(time_grid(0.4, 0.5).unwrap(), vec![0.0]);

    assert!(time_grid(1.0, 0.0).is_err());
    assert!(time_grid(1.0, -0.1).is_err());
    assert!(time_grid(-1.0, 0.1).is_err());
    assert!(time_grid(1.0, f64::NAN).is_err());
}

fn synthetic_series(times: &[f64], g2: impl Fn(f64) -> f64) -> ExperimentSeries {
    let rows = times
        .iter()
        .map(|&t| {
            let v = g2(t);
            AotocReport {
                method: Method::Correlator,
                g: 1.0 - v,
                g1: 1.0,
                g2: v,
                bound: 0.75,
                typical: 0.6,
                mc_stderr: None,
            }
        })
        .collect();
    ExperimentSeries {
        times: times.to_vec(),
        rows,
        meta: SeriesMeta::default(),
    }
}

#[test]
fn quadratic_fit_recovers_a_planted_coefficient() {
    let times = [0.0, 1.0, 2.0, 3.0];
    let (base, planted) = (0.5, 0.3);
    let series: Vec<(f64, ExperimentSeries)> = [0.0, 0.1, 0.2, 0.3]
        .iter()
        .map(|&l| {
            // junk outside the window must be ignored by the average
            let s = synthetic_series(&times, |t| {
                if (1.0..=2.0).contains(&t) {
                    base - planted * l * l
                } else {
                    1e6
                }
            });
            (l, s)
        })
        .collect();

    let fit = time_average_quadratic_fit(&series, (1.0, 2.0)).unwrap();
    assert_eq!(fit.lambdas, vec![0.0, 0.1, 0.2, 0.3]);
    assert!((fit.coefficient - planted).abs() < 1e-12, "{}", fit.coefficient);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    for (l, dev) in fit.lambdas.iter().zip(&fit.deviations) {
        assert!((dev - planted * l * l).abs() < 1e-12);
    }
    for m in &fit.mean_g2 {
        assert!(*m <= base + 1e-12, "window leaked: {m}");
    }
}

#[test]
fn quadratic_fit_handles_flat_data_and_rejects_bad_input() {
    let times = [0.0, 1.0, 2.0];
    let flat: Vec<(f64, ExperimentSeries)> = [0.0, 0.1, 0.2]
        .iter()
        .map(|&l| (l, synthetic_series(&times, |_| 0.4)))
        .collect();
    let fit = time_average_quadratic_fit(&flat, (0.0, 2.0)).unwrap();
    assert_eq!(fit.coefficient, 0.0);
    assert_eq!(fit.r_squared, 1.0);

    assert!(time_average_quadratic_fit(&flat[..2], (0.0, 2.0)).is_err());

    let no_zero: Vec<(f64, ExperimentSeries)> = [0.1, 0.2, 0.3]
        .iter()
        .map(|&l| (l, synthetic_series(&times, |_| 0.4)))
        .collect();
    assert!(time_average_quadratic_fit(&no_zero, (0.0, 2.0)).is_err());

    assert!(time_average_quadratic_fit(&flat, (10.0, 11.0)).is_err());
}
