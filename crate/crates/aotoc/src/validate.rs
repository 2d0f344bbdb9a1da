//! Self-contained validation suite: one check per advertised guarantee of the
//! library, shared between the CLI `validate` subcommand and the integration
//! tests. Every check is deterministic (fixed seeds), reports its worst
//! deviation, and carries a pinned tolerance.

use rand::RngExt;

use crate::algebra::{AlgebraHandle, BlockSpec, Projection};
use crate::aotoc::{
    aotoc, aotoc_montecarlo, aotoc_otoc4pt, aotoc_overlap_form, aotoc_replica, gaac,
    haar_typical_mc, is_commutant_invariant, sample_algebra_unitary,
};
use crate::channel::{dephasing_qubit, depolarizing, pinching, propagate, Channel};
use crate::closedforms::{
    build_stabilizer, cgp, dephasing_chi, example1, example2, hadamard_all, loschmidt_g,
    stabilizer_formula,
};
use crate::models::{
    perturbed_dfs_algebra, product_state, pxp_model, run_series, time_average_quadratic_fit,
    time_grid, ModelKind, ProductPattern, SpinChainSpec,
};
use crate::models::xxx_model;
use crate::numerics::{complex_normal, haar_unitary, stream_rng, Prng, Stopwatch};
use crate::{algebra, tol, C64, CMat, Error, Result};

/// Absolute tolerance for the analytic mixed-unitary closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Absolute tolerance for the stabilizer dephasing formula.
pub const STABILIZER_TOL: f64 = 1e-9;
/// Agreement tolerance between independent evaluation routes.
pub const ROUTE_TOL: f64 = 1e-10;
/// Slack allowed above the dimension bound.
pub const BOUND_SLACK: f64 = 1e-9;
/// Tolerance for series values that must vanish identically.
pub const SERIES_ZERO_TOL: f64 = 1e-9;
/// Monte-Carlo agreement window in standard errors.
pub const MC_SIGMAS: f64 = 3.0;
/// Minimum relative dip depth that counts as a revival.
pub const REVIVAL_CONTRAST: f64 = 0.3;
/// Maximum dip depth for a curve that must stay flat.
pub const FLAT_CONTRAST: f64 = 0.1;
/// Required number of qualifying revivals in the alternating-pattern run.
pub const MIN_REVIVALS: usize = 3;
/// Required goodness of the quadratic perturbation fit.
pub const FIT_R2_MIN: f64 = 0.99;

/// Workload size for the validation suite. `Fast` keeps every check at desk
/// scale; `Full` repeats the spin-chain checks at the larger sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Fast,
    Full,
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Fast => "fast",
            Profile::Full => "full",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Profile::Fast),
            "full" => Ok(Profile::Full),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (expected 'fast' or 'full')"
            ))),
        }
    }
}

/// Result of one validation check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub worst_dev: f64,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    /// One-line rendering: PASS/FAIL, name, worst deviation, wall time, note.
    pub fn line(&self) -> String {
        format!(
            "{}  {:<24} worst dev {:9.3e}  [{:6.1} s]  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst_dev,
            self.seconds,
            self.detail
        )
    }
}

/// Accumulates deviations and failure notes inside one check.
struct Tracker {
    worst: f64,
    failures: Vec<String>,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            worst: 0.0,
            failures: Vec::new(),
        }
    }

    /// Record a deviation that must stay within `limit`.
    fn dev(&mut self, dev: f64, limit: f64, what: impl FnOnce() -> String) {
        if dev.is_nan() || dev > self.worst {
            self.worst = if dev.is_nan() { f64::NAN } else { dev };
        }
        if !(dev <= limit) {
            self.failures
                .push(format!("{} (dev {:.3e} > {:.1e})", what(), dev, limit));
        }
    }

    /// Record a plain condition.
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn run_check(
    name: &'static str,
    body: impl FnOnce(&mut Tracker) -> Result<String>,
) -> CheckOutcome {
    let started = Stopwatch::start();
    let mut tr = Tracker::new();
    let detail_ok = match body(&mut tr) {
        Ok(detail) => detail,
        Err(e) => {
            tr.failures.push(format!("error: {e}"));
            String::new()
        }
    };
    let passed = tr.failures.is_empty();
    let detail = if passed {
        detail_ok
    } else {
        let shown: Vec<&String> = tr.failures.iter().take(3).collect();
        let extra = tr.failures.len().saturating_sub(shown.len());
        let mut msg = shown
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        if extra > 0 {
            msg.push_str(&format!("; … and {extra} more"));
        }
        msg
    };
    CheckOutcome {
        name,
        passed,
        worst_dev: tr.worst,
        detail,
        seconds: started.seconds(),
    }
}

// ---------------------------------------------------------------------------
// Randomized case generators (fixed-seed reproducible).
// ---------------------------------------------------------------------------

/// All block structures with 1–3 blocks and total dimension in 2..=max_dim,
/// used as the sampling pool for randomized checks.
pub fn block_structure_pool(max_dim: usize) -> Vec<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for n in 1..=max_dim {
        for dj in 1..=max_dim {
            if n * dj <= max_dim {
                pairs.push((n, dj));
            }
        }
    }
    let mut pool = Vec::new();
    for (i, &a) in pairs.iter().enumerate() {
        let ta = a.0 * a.1;
        if ta >= 2 {
            pool.push(vec![a]);
        }
        for (j, &b) in pairs.iter().enumerate().skip(i) {
            let tb = ta + b.0 * b.1;
            if tb > max_dim {
                continue;
            }
            pool.push(vec![a, b]);
            for &c in pairs.iter().skip(j) {
                if tb + c.0 * c.1 <= max_dim {
                    pool.push(vec![a, b, c]);
                }
            }
        }
    }
    pool
}

/// A random block structure embedded by a Haar unitary.
pub fn random_algebra(max_dim: usize, rng: &mut Prng) -> Result<AlgebraHandle> {
    let pool = block_structure_pool(max_dim);
    let blocks = pool[rng.random_range(0..pool.len())].clone();
    let d: usize = blocks.iter().map(|(n, dj)| n * dj).sum();
    let w = haar_unitary(d, rng);
    Ok(AlgebraHandle::from_spec(BlockSpec::new(blocks, Some(w))?))
}

/// A random unital channel: a mixture of 2–4 Haar unitary conjugations.
pub fn random_unital_channel(d: usize, rng: &mut Prng) -> Result<Channel> {
    let m = rng.random_range(2..=4usize);
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let kraus: Vec<CMat> = weights
        .iter()
        .map(|w| haar_unitary(d, rng) * C64::from((w / total).sqrt()))
        .collect();
    Channel::from_kraus(&kraus)
}

fn blocks_are_collinear(blocks: &[(usize, usize)]) -> bool {
    let (n0, d0) = blocks[0];
    if d0 % n0 != 0 {
        return false;
    }
    let lambda = d0 / n0;
    blocks.iter().all(|&(n, dj)| dj == lambda * n)
}

// ---------------------------------------------------------------------------
// Series shape analysis (revivals, flatness, window averages).
// ---------------------------------------------------------------------------

/// An interior local extremum of a sampled curve.
#[derive(Clone, Copy, Debug)]
pub struct Extremum {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub is_minimum: bool,
}

/// Strict sign-change extrema; plateaus attach to the point where the slope
/// next becomes nonzero.
pub fn local_extrema(times: &[f64], values: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    let mut last_sign = 0i8;
    for i in 1..values.len() {
        let diff = values[i] - values[i - 1];
        let sign = if diff > 0.0 {
            1
        } else if diff < 0.0 {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if last_sign == 1 && sign == -1 {
            out.push(Extremum {
                index: i - 1,
                time: times[i - 1],
                value: values[i - 1],
                is_minimum: false,
            });
        } else if last_sign == -1 && sign == 1 {
            out.push(Extremum {
                index: i - 1,
                time: times[i - 1],
                value: values[i - 1],
                is_minimum: true,
            });
        }
        last_sign = sign;
    }
    out
}

/// Each local minimum with its relative contrast (max − min)/max against the
/// most recent preceding maximum (the initial value if none came before).
pub fn dip_contrasts(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut last_max = values.first().copied().unwrap_or(0.0);
    for e in local_extrema(times, values) {
        if e.is_minimum {
            let contrast = if last_max > 0.0 {
                (last_max - e.value) / last_max
            } else {
                0.0
            };
            out.push((e.time, contrast));
        } else {
            last_max = e.value;
        }
    }
    out
}

/// Means over consecutive windows [k·width, (k+1)·width); the final grid
/// point joins the last window.
pub fn window_means(times: &[f64], values: &[f64], width: f64) -> Vec<f64> {
    let t_end = times.last().copied().unwrap_or(0.0);
    let n_win = ((t_end / width - 1e-9).floor() as usize) + 1;
    let mut sums = vec![0.0; n_win];
    let mut counts = vec![0usize; n_win];
    for (&t, &v) in times.iter().zip(values) {
        let k = ((t / width).floor() as usize).min(n_win - 1);
        sums[k] += v;
        counts[k] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect()
}

// ---------------------------------------------------------------------------
// The checks.
// ---------------------------------------------------------------------------

/// Hadamard-mixing semigroup against its analytic value
/// β(t)²·(1 − 2⁻ⁿ) with β = (1 − e^{−2t})/2, for n ∈ {1,2,3}.
pub fn check_example1() -> CheckOutcome {
    run_check("example1-closed-form", |tr| {
        let grid = time_grid(3.0, 0.05)?;
        for n in 1..=3usize {
            let d = 1usize << n;
            let alg = AlgebraHandle::maximal_abelian(&CMat::identity(d, d))?;
            for &t in &grid {
                let (spec, exact) = example1(n, t)?;
                let e = propagate(&spec, t)?;
                let r = aotoc(&alg, &e)?;
                tr.dev((r.g - exact).abs(), CLOSED_FORM_TOL, || {
                    format!("n = {n}, t = {t}")
                });
            }
        }
        Ok(format!(
            "n in 1..=3, {} time points each, vs analytic value",
            grid.len()
        ))
    })
}

/// Driven product-eigenbasis semigroup against its analytic value
/// e^{−2λt}·sin²(2t)/2, for n ∈ {1,2} and λ ∈ {0, 0.5, 1}.
pub fn check_example2() -> CheckOutcome {
    run_check("example2-closed-form", |tr| {
        let grid = time_grid(3.0, 0.05)?;
        for n in [1usize, 2] {
            let d = 1usize << n;
            let alg = AlgebraHandle::maximal_abelian(&CMat::identity(d, d))?;
            for lambda in [0.0, 0.5, 1.0] {
                for &t in &grid {
                    let (spec, exact) = example2(n, lambda, t)?;
                    let e = propagate(&spec, t)?;
                    let r = aotoc(&alg, &e)?;
                    tr.dev((r.g - exact).abs(), CLOSED_FORM_TOL, || {
                        format!("n = {n}, rate = {lambda}, t = {t}")
                    });
                }
            }
        }
        Ok(format!(
            "n in {{1,2}} x 3 rates x {} time points vs analytic value",
            grid.len()
        ))
    })
}

/// Nearest-neighbour Z-chain generators for an (n, k) stabilizer group.
pub fn chain_generators(n: usize, k: usize) -> Vec<String> {
    let m = n - k;
    (0..m)
        .map(|i| {
            let mut w = vec![b'I'; n];
            w[i] = b'Z';
            if i + 1 < n {
                w[i + 1] = b'Z';
            }
            String::from_utf8(w).expect("ASCII word")
        })
        .collect()
}

/// Sector-coherence dephasing against its closed formula
/// (1 − 2^{k−n})·(χ/2^k)·(1 − χ/2^k) for every (n ≤ 5, k < n, χ ≤ 2^k),
/// including the endpoint identities at χ = 0 and χ = 2^k.
pub fn check_stabilizer() -> CheckOutcome {
    run_check("stabilizer-closed-form", |tr| {
        let mut cases = 0usize;
        for n in 1..=5usize {
            for k in 0..n {
                let words = chain_generators(n, k);
                let group = build_stabilizer(n, k, &words)?;
                let alg = group.algebra()?;
                for chi in 0..=(1usize << k) {
                    let e = dephasing_chi(&group, chi, None)?;
                    let r = aotoc(&alg, &e)?;
                    let exact = stabilizer_formula(n, k, chi)?;
                    tr.dev((r.g - exact).abs(), STABILIZER_TOL, || {
                        format!("(n,k,chi) = ({n},{k},{chi})")
                    });
                    if chi == 1usize << k {
                        tr.dev((r.g1 - 1.0).abs(), STABILIZER_TOL, || {
                            format!("g1 at full coherence, (n,k) = ({n},{k})")
                        });
                        tr.dev((r.g2 - 1.0).abs(), STABILIZER_TOL, || {
                            format!("g2 at full coherence, (n,k) = ({n},{k})")
                        });
                    }
                    if chi == 0 {
                        let limit = (1u64 << k) as f64 / (1u64 << n) as f64;
                        tr.dev((r.g1 - limit).abs(), STABILIZER_TOL, || {
                            format!("g1 at zero coherence, (n,k) = ({n},{k})")
                        });
                        tr.dev((r.g2 - limit).abs(), STABILIZER_TOL, || {
                            format!("g2 at zero coherence, (n,k) = ({n},{k})")
                        });
                    }
                    cases += 1;
                }
            }
        }
        Ok(format!("{cases} (n,k,chi) dephasing cases vs closed formula"))
    })
}

/// Monte-Carlo mean over Haar unitaries against the dimension-only typical
/// value, for three block structures.
pub fn check_haar_typical() -> CheckOutcome {
    run_check("haar-typical-mean", |tr| {
        let cases: [(&str, Vec<(usize, usize)>); 3] = [
            ("[(2,4)]", vec![(2, 4)]),
            ("[(2,2)]", vec![(2, 2)]),
            ("[(1,1),(1,3)]", vec![(1, 1), (1, 3)]),
        ];
        for (i, (label, blocks)) in cases.iter().enumerate() {
            let alg = AlgebraHandle::from_spec(BlockSpec::new(blocks.clone(), None)?);
            let typical = alg.dims_and_bounds().typical;
            let (mean, stderr) = haar_typical_mc(&alg, 2000, 41_000 + i as u64)?;
            let sigmas = (mean - typical).abs() / stderr.max(1e-15);
            tr.dev(sigmas, MC_SIGMAS, || {
                format!(
                    "blocks {label}: mean {mean:.6} vs typical {typical:.6} (stderr {stderr:.2e})"
                )
            });
        }
        Ok("3 block structures x 2000 Haar unitaries; deviation in standard errors".into())
    })
}

/// Four deterministic evaluation routes pairwise, plus direct Monte-Carlo
/// sampling, on 50 random (algebra, unital channel) pairs with d ≤ 8.
pub fn check_route_agreement() -> CheckOutcome {
    run_check("route-agreement", |tr| {
        for case in 0..50u64 {
            let mut rng = stream_rng(50_000, case);
            let alg = random_algebra(8, &mut rng)?;
            let e = random_unital_channel(alg.dim(), &mut rng)?;
            let corr = aotoc(&alg, &e)?;
            let routes = [
                ("split", corr.g),
                ("overlap", aotoc_overlap_form(&alg, &e)?),
                ("replica", aotoc_replica(&alg, &e)?.g),
                ("4pt", aotoc_otoc4pt(&alg, &e)?.g),
            ];
            for i in 0..routes.len() {
                for j in i + 1..routes.len() {
                    tr.dev((routes[i].1 - routes[j].1).abs(), ROUTE_TOL, || {
                        format!("case {case}: {} vs {}", routes[i].0, routes[j].0)
                    });
                }
            }
            let mc = aotoc_montecarlo(&alg, &e, 10_000, 51_000 + case)?;
            let stderr = mc.mc_stderr.unwrap_or(0.0).max(1e-12);
            let sigmas = (mc.g - corr.g).abs() / stderr;
            tr.require(sigmas <= MC_SIGMAS, || {
                format!(
                    "case {case}: Monte-Carlo {:.6} vs {:.6} is {sigmas:.2} standard errors",
                    mc.g, corr.g
                )
            });
        }
        Ok("50 random pairs, d <= 8: 4 deterministic routes pairwise + sampling at 3 sigma".into())
    })
}

/// Core algebraic properties: commutant invariance iff vanishing value
/// (positive and negative cases), the dimension bound, the unitary duality,
/// and the rotation-distance equality on proportional block shapes.
pub fn check_algebra_properties() -> CheckOutcome {
    run_check("algebra-properties", |tr| {
        let mut bound_checked = 0usize;
        let bound = |tr: &mut Tracker, label: String, g: f64, b: f64| {
            if !(g >= -BOUND_SLACK && g <= b + BOUND_SLACK) {
                tr.failures
                    .push(format!("{label}: g = {g} outside [0, bound = {b}]"));
            }
        };

        // Invariance => vanishing value, on four kinds of invariant channels.
        for case in 0..8u64 {
            let mut rng = stream_rng(60_000, case);
            let alg = random_algebra(8, &mut rng)?;
            let d = alg.dim();
            let e = match case % 4 {
                0 => Channel::identity(d),
                1 => depolarizing(d, 1.0)?,
                2 => Channel::from_unitary(&sample_algebra_unitary(&alg.commutant(), &mut rng))?,
                _ => depolarizing(d, rng.random_range(0.2..0.9))?,
            };
            let (flag, leak) = is_commutant_invariant(&alg, &e, 1e-8)?;
            let r = aotoc(&alg, &e)?;
            tr.require(flag, || {
                format!("invariant case {case}: leakage {leak:.3e} above tolerance")
            });
            tr.dev(r.g.abs(), ROUTE_TOL, || {
                format!("invariant case {case}: value should vanish")
            });
            bound(tr, format!("invariant case {case}"), r.g, r.bound);
            bound_checked += 1;
        }

        // Non-invariance => strictly positive value.
        let diag2 = AlgebraHandle::maximal_abelian(&CMat::identity(2, 2))?;
        let e_had = Channel::from_unitary(&hadamard_all(1))?;
        let (flag, leak) = is_commutant_invariant(&diag2, &e_had, 1e-8)?;
        let r = aotoc(&diag2, &e_had)?;
        tr.require(!flag && leak > 1e-3, || {
            format!("Hadamard mixing should leak, got leakage {leak:.3e}")
        });
        tr.dev((r.g - 0.5).abs(), ROUTE_TOL, || {
            "Hadamard mixing on the diagonal pair should give exactly 1/2".into()
        });
        for case in 0..8u64 {
            let mut rng = stream_rng(61_000, case);
            let alg = loop {
                let cand = random_algebra(8, &mut rng)?;
                let dims = cand.dims_and_bounds();
                if dims.dim_algebra > 1 && dims.dim_commutant > 1 {
                    break cand;
                }
            };
            let e = Channel::from_unitary(&haar_unitary(alg.dim(), &mut rng))?;
            let (flag, leak) = is_commutant_invariant(&alg, &e, 1e-8)?;
            let r = aotoc(&alg, &e)?;
            tr.require(!flag, || {
                format!("generic case {case}: leakage {leak:.3e} unexpectedly tiny")
            });
            tr.require(r.g > 1e-6, || {
                format!("generic case {case}: value {:.3e} unexpectedly tiny", r.g)
            });
            tr.require((r.g <= ROUTE_TOL) == flag, || {
                format!("generic case {case}: vanishing value and invariance flag disagree")
            });
            bound(tr, format!("generic case {case}"), r.g, r.bound);
            bound_checked += 1;
        }

        // Duality: the value for (A, U) equals the value for (A', U†).
        for case in 0..25u64 {
            let mut rng = stream_rng(62_000, case);
            let alg = random_algebra(8, &mut rng)?;
            let u = haar_unitary(alg.dim(), &mut rng);
            let r1 = aotoc(&alg, &Channel::from_unitary(&u)?)?;
            let r2 = aotoc(&alg.commutant(), &Channel::from_unitary(&u.adjoint())?)?;
            tr.dev((r1.g - r2.g).abs(), ROUTE_TOL, || format!("duality case {case}"));
            bound(tr, format!("duality case {case}"), r1.g, r1.bound);
            bound_checked += 1;
        }

        // Rotation-distance equality on proportional block shapes.
        let coll_pool: Vec<Vec<(usize, usize)>> = block_structure_pool(8)
            .into_iter()
            .filter(|b| blocks_are_collinear(b))
            .collect();
        for case in 0..25u64 {
            let mut rng = stream_rng(63_000, case);
            let blocks = coll_pool[rng.random_range(0..coll_pool.len())].clone();
            let d: usize = blocks.iter().map(|(n, dj)| n * dj).sum();
            let w = haar_unitary(d, &mut rng);
            let alg = AlgebraHandle::from_spec(BlockSpec::new(blocks, Some(w))?);
            let u = haar_unitary(d, &mut rng);
            let gv = gaac(&alg, &u)?;
            let r = aotoc(&alg, &Channel::from_unitary(&u)?)?;
            tr.require(gv.collinear, || {
                format!("distance case {case}: block shapes should register as proportional")
            });
            tr.dev((gv.value - r.g).abs(), ROUTE_TOL, || {
                format!("distance case {case}: rotation distance vs correlator")
            });
            bound(tr, format!("distance case {case}"), r.g, r.bound);
            bound_checked += 1;
        }

        Ok(format!(
            "invariance both ways, duality x25, rotation distance x25; bound on {bound_checked} values"
        ))
    })
}

/// Reduction to the basis-coherence power formula on maximal abelian
/// algebras, including exact saturation by the Hadamard at d = 2.
pub fn check_cgp_reduction() -> CheckOutcome {
    run_check("cgp-reduction", |tr| {
        let mut cases = 0usize;
        for d in 2..=6usize {
            for rep in 0..2u64 {
                let mut rng = stream_rng(70_000 + d as u64, rep);
                let basis = haar_unitary(d, &mut rng);
                let alg = AlgebraHandle::maximal_abelian(&basis)?;
                let e = random_unital_channel(d, &mut rng)?;
                let direct = cgp(&basis, &e)?;
                let r = aotoc(&alg, &e)?;
                tr.dev((r.g - direct).abs(), ROUTE_TOL, || {
                    format!("d = {d}, repeat {rep}")
                });
                cases += 1;
            }
        }
        let e_had = Channel::from_unitary(&hadamard_all(1))?;
        let alg2 = AlgebraHandle::maximal_abelian(&CMat::identity(2, 2))?;
        let r = aotoc(&alg2, &e_had)?;
        tr.dev((r.g - 0.5).abs(), ROUTE_TOL, || {
            "Hadamard at d = 2 should saturate 1 − 1/d".into()
        });
        Ok(format!(
            "{cases} random abelian cases + Hadamard saturation at d = 2"
        ))
    })
}

/// Reduction to the state-projector (Loschmidt-echo style) formula on 25
/// random unital channels at d ∈ {4, 6}.
pub fn check_loschmidt_reduction() -> CheckOutcome {
    run_check("loschmidt-reduction", |tr| {
        for case in 0..25u64 {
            let d = if case < 13 { 4 } else { 6 };
            let mut rng = stream_rng(80_000, case);
            let psi = haar_unitary(d, &mut rng).column(0).into_owned();
            let proj = &psi * psi.adjoint();
            let e = random_unital_channel(d, &mut rng)?;
            let direct = loschmidt_g(&e, &proj)?;
            let alg = AlgebraHandle::projector_state(&psi)?;
            let r = aotoc(&alg, &e)?;
            tr.dev((r.g - direct).abs(), ROUTE_TOL, || {
                format!("case {case} at d = {d}")
            });
        }
        Ok("25 random channels at d in {4,6} vs projector formula".into())
    })
}

fn pxp_series(
    n: usize,
    alpha: f64,
    gamma: f64,
    pattern: ProductPattern,
    times: &[f64],
) -> Result<crate::models::ExperimentSeries> {
    let spec = SpinChainSpec::new(n, 1.0, alpha, gamma, ModelKind::Pxp)?;
    let model = pxp_model(&spec)?;
    let psi = product_state(n, pattern)?;
    let alg = AlgebraHandle::projector_state(&psi)?;
    run_series(&model, &alg, times)
}

/// Constrained-chain dynamics: the alternating initial pattern shows deep
/// periodic returns while the polarized pattern stays flat, and weak noise
/// produces an ordered, closing split between the two report terms.
pub fn check_pxp_dynamics(profile: Profile) -> CheckOutcome {
    run_check("pxp-dynamics", |tr| {
        let times = time_grid(30.0, 0.075)?;
        let sizes: &[usize] = match profile {
            Profile::Fast => &[8],
            Profile::Full => &[8, 10],
        };
        for &n in sizes {
            // Closed dynamics: deep periodic returns for the alternating pattern.
            let neel = pxp_series(n, 0.0, 0.0, ProductPattern::Neel, &times)?;
            let g1_dev = neel
                .rows
                .iter()
                .map(|r| (r.g1 - 1.0).abs())
                .fold(0.0f64, f64::max);
            tr.dev(g1_dev, SERIES_ZERO_TOL, || {
                format!("N = {n} closed run: g1 must stay at 1")
            });
            let gvals: Vec<f64> = neel.rows.iter().map(|r| r.g).collect();
            let deep = dip_contrasts(&times, &gvals)
                .into_iter()
                .filter(|(_, c)| *c >= REVIVAL_CONTRAST)
                .count();
            tr.require(deep >= MIN_REVIVALS, || {
                format!(
                    "N = {n} alternating pattern: {deep} deep returns (need >= {MIN_REVIVALS})"
                )
            });

            // Closed dynamics: the polarized pattern must stay flat after the ramp.
            let ferro = pxp_series(n, 0.0, 0.0, ProductPattern::Ferro, &times)?;
            let fvals: Vec<f64> = ferro.rows.iter().map(|r| r.g).collect();
            let worst_late = dip_contrasts(&times, &fvals)
                .into_iter()
                .filter(|(t, _)| *t > 5.0)
                .map(|(_, c)| c)
                .fold(0.0f64, f64::max);
            tr.require(worst_late < FLAT_CONTRAST, || {
                format!("N = {n} polarized pattern: late dip contrast {worst_late:.3} >= {FLAT_CONTRAST}")
            });

            // Weak noise: ordered terms with a monotonically closing window-mean gap.
            let noisy = pxp_series(n, 0.05, 0.05, ProductPattern::Neel, &times)?;
            let order_dev = noisy
                .rows
                .iter()
                .map(|r| r.g2 - r.g1)
                .fold(f64::MIN, f64::max);
            tr.require(order_dev <= 1e-12, || {
                format!("N = {n} noisy run: g2 exceeds g1 by {order_dev:.3e}")
            });
            let gaps: Vec<f64> = noisy.rows.iter().map(|r| r.g1 - r.g2).collect();
            let means = window_means(&times, &gaps, 5.0);
            for w in 1..means.len() {
                tr.require(means[w] <= means[w - 1] + 1e-12, || {
                    format!(
                        "N = {n} noisy run: window {w} mean gap {:.6e} above window {} ({:.6e})",
                        means[w],
                        w - 1,
                        means[w - 1]
                    )
                });
            }
        }
        Ok(format!(
            "sizes {sizes:?}: deep returns, flat polarized curve, ordered closing gap"
        ))
    })
}

/// Protected-subspace stability: the unperturbed algebra is exactly
/// preserved, and the time-averaged response grows as c·λ².
pub fn check_dfs_stability(profile: Profile) -> CheckOutcome {
    run_check("dfs-stability", |tr| {
        let times = time_grid(30.0, 0.075)?;
        let lambdas = [0.0, 0.05, 0.1, 0.15, 0.2];
        let sizes: &[usize] = match profile {
            Profile::Fast => &[4],
            Profile::Full => &[4, 6],
        };
        for &n in sizes {
            let spec = SpinChainSpec::new(n, 1.0, 0.05, 0.05, ModelKind::Xxx)?;
            let model = xxx_model(&spec)?;
            let mut collected = Vec::with_capacity(lambdas.len());
            for &lambda in &lambdas {
                let alg = perturbed_dfs_algebra(n, lambda, 7_700 + n as u64)?;
                let series = run_series(&model, &alg, &times)?;
                if lambda == 0.0 {
                    let worst = series
                        .rows
                        .iter()
                        .map(|r| r.g.abs())
                        .fold(0.0f64, f64::max);
                    tr.dev(worst, SERIES_ZERO_TOL, || {
                        format!("N = {n}: unperturbed run must stay at zero")
                    });
                }
                collected.push((lambda, series));
            }
            let fit = time_average_quadratic_fit(&collected, (0.0, 30.0))?;
            tr.require(fit.r_squared >= FIT_R2_MIN, || {
                format!(
                    "N = {n}: quadratic fit R² = {:.5} below {FIT_R2_MIN}",
                    fit.r_squared
                )
            });
            tr.require(fit.coefficient > 0.0, || {
                format!(
                    "N = {n}: fitted coefficient {:.3e} not positive",
                    fit.coefficient
                )
            });
        }
        Ok(format!(
            "sizes {sizes:?}: zero response unperturbed, quadratic response fit"
        ))
    })
}

/// Structural invariants: projector idempotence/self-adjointness and route
/// agreement, the block form of the doubled-space operator, invariance of the
/// value under basis remixing, the normalized-identity expansion, and full
/// channel verification including a non-CP control.
pub fn check_structural() -> CheckOutcome {
    run_check("structural-invariants", |tr| {
        // Projector properties on random embedded structures.
        for case in 0..12u64 {
            let mut rng = stream_rng(90_000, case);
            let alg = random_algebra(8, &mut rng)?;
            let d = alg.dim();
            let x = CMat::from_fn(d, d, |_, _| complex_normal(&mut rng));
            let y = CMat::from_fn(d, d, |_, _| complex_normal(&mut rng));
            let px = alg.project_commutant(&x, Projection::Osr)?;
            let ppx = alg.project_commutant(&px, Projection::Osr)?;
            tr.dev((&ppx - &px).camax(), ROUTE_TOL, || {
                format!("case {case}: projector idempotence")
            });
            let py = alg.project_commutant(&y, Projection::Osr)?;
            let lhs = py.dotc(&x);
            let rhs = y.dotc(&px);
            tr.dev((lhs - rhs).norm(), ROUTE_TOL, || {
                format!("case {case}: projector self-adjointness")
            });
            let gram = alg.project_commutant(&x, Projection::Gram)?;
            tr.dev((&gram - &px).camax(), ROUTE_TOL, || {
                format!("case {case}: Gram vs operator-sum projection")
            });
        }

        // Doubled-space operator block form, identity and embedded frames.
        for case in 0..8u64 {
            let mut rng = stream_rng(91_000, case);
            let pool = block_structure_pool(8);
            let blocks = pool[rng.random_range(0..pool.len())].clone();
            let d: usize = blocks.iter().map(|(nj, dj)| nj * dj).sum();
            let plain = AlgebraHandle::from_spec(BlockSpec::new(blocks.clone(), None)?);
            let expected = omega_block_form(&blocks);
            let got = algebra::omega(plain.e_basis());
            tr.dev((&got - &expected).camax(), 10.0 * tol::STRUCTURAL, || {
                format!("case {case}: doubled-space block form, identity frame")
            });
            let w = haar_unitary(d, &mut rng);
            let emb = AlgebraHandle::from_spec(BlockSpec::new(blocks, Some(w.clone()))?);
            let ww = w.kronecker(&w);
            let rotated = &ww * &expected * ww.adjoint();
            let got_emb = algebra::omega(emb.e_basis());
            tr.dev((&got_emb - &rotated).camax(), 10.0 * tol::STRUCTURAL, || {
                format!("case {case}: doubled-space block form, embedded frame")
            });
        }

        // Value invariance under block-respecting remixing of the basis.
        for case in 0..8u64 {
            let mut rng = stream_rng(92_000, case);
            let alg = random_algebra(8, &mut rng)?;
            let e = random_unital_channel(alg.dim(), &mut rng)?;
            let canonical = aotoc(&alg, &e)?;
            let (g1, g2) = remixed_split(&alg, &e, &mut rng)?;
            tr.dev((g1 - canonical.g1).abs(), ROUTE_TOL, || {
                format!("case {case}: first term under remixing")
            });
            tr.dev((g2 - canonical.g2).abs(), ROUTE_TOL, || {
                format!("case {case}: second term under remixing")
            });
            tr.dev(((g1 - g2) - canonical.g).abs(), ROUTE_TOL, || {
                format!("case {case}: value under remixing")
            });
        }

        // Normalized-identity expansion from the canonical basis.
        for case in 0..8u64 {
            let mut rng = stream_rng(93_000, case);
            let alg = random_algebra(8, &mut rng)?;
            let d = alg.dim();
            let da = alg.dims_and_bounds().dim_algebra as f64;
            let mut ehat = CMat::zeros(d, d);
            let mut off = 0usize;
            for &(_, dj) in alg.spec().blocks() {
                let scale = C64::from((dj as f64 / da).sqrt());
                for k in 0..dj {
                    ehat += &alg.e_basis()[off + k * dj + k] * scale;
                }
                off += dj * dj;
            }
            let target = CMat::identity(d, d) * C64::from(1.0 / da.sqrt());
            tr.dev((&ehat - &target).camax(), 10.0 * tol::STRUCTURAL, || {
                format!("case {case}: normalized-identity expansion")
            });
        }

        // Channel verification on every constructed kind, plus a non-CP control.
        let mut rng = stream_rng(94_000, 0);
        let (spec1, _) = example1(1, 0.7)?;
        let (spec2, _) = example2(1, 0.5, 0.7)?;
        let p0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let p1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let group = build_stabilizer(2, 1, &chain_generators(2, 1))?;
        let constructed: Vec<(&str, Channel)> = vec![
            ("identity", Channel::identity(4)),
            ("depolarizing", depolarizing(4, 0.3)?),
            ("qubit dephasing", dephasing_qubit(0.25)?),
            ("pinching", pinching(&[p0, p1])?),
            ("unitary", Channel::from_unitary(&haar_unitary(5, &mut rng))?),
            ("mixed unitary", random_unital_channel(4, &mut rng)?),
            ("semigroup 1", propagate(&spec1, 0.7)?),
            ("semigroup 2", propagate(&spec2, 0.7)?),
            ("sector dephasing", dephasing_chi(&group, 1, None)?),
        ];
        for (label, ch) in &constructed {
            let check = ch.verify();
            tr.require(check.all_ok(), || {
                format!(
                    "{label} channel failed verification (unital dev {:.2e}, tp dev {:.2e}, min Choi eig {:.2e})",
                    check.unital_dev, check.tp_dev, check.min_choi_eig
                )
            });
        }
        let transpose = Channel::from_superop(algebra::swap_operator(3))?;
        let check = transpose.verify();
        tr.require(
            check.unital && check.trace_preserving && !check.cp,
            || {
                format!(
                    "transpose control should fail only complete positivity (min Choi eig {:.2e})",
                    check.min_choi_eig
                )
            },
        );
        tr.require(check.min_choi_eig < -tol::CHOI_NEG, || {
            format!(
                "transpose control Choi minimum {:.2e} not clearly negative",
                check.min_choi_eig
            )
        });

        Ok("projectors, doubled-space form, remix invariance, identity expansion, channel verification".into())
    })
}

/// The doubled-space operator of the identity-frame structure, written
/// entrywise: rows/columns pair two copies of the same block, matching paired
/// inner factors and swapped outer factors, weighted by 1/d_J.
fn omega_block_form(blocks: &[(usize, usize)]) -> CMat {
    let d: usize = blocks.iter().map(|(nj, dj)| nj * dj).sum();
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut acc = 0usize;
    for &(nj, dj) in blocks {
        offsets.push(acc);
        acc += nj * dj;
    }
    let locate = |idx: usize| -> (usize, usize, usize) {
        for (j, &(nj, dj)) in blocks.iter().enumerate() {
            let off = offsets[j];
            if idx < off + nj * dj {
                let rel = idx - off;
                return (j, rel / dj, rel % dj);
            }
        }
        unreachable!("index inside total dimension");
    };
    let mut m = CMat::zeros(d * d, d * d);
    for r1 in 0..d {
        let (jr1, pr1, kr1) = locate(r1);
        for r2 in 0..d {
            let (jr2, pr2, kr2) = locate(r2);
            if jr2 != jr1 {
                continue;
            }
            for c1 in 0..d {
                let (jc1, pc1, kc1) = locate(c1);
                if jc1 != jr1 || pc1 != pr1 || kc1 != kr2 {
                    continue;
                }
                for c2 in 0..d {
                    let (jc2, pc2, kc2) = locate(c2);
                    if jc2 != jr1 || pc2 != pr2 || kc2 != kr1 {
                        continue;
                    }
                    m[(r1 * d + r2, c1 * d + c2)] =
                        C64::from(1.0 / blocks[jr1].1 as f64);
                }
            }
        }
    }
    m
}

/// Split terms recomputed from a block-respecting Haar remix of the
/// normalized commutant basis, for the invariance check.
fn remixed_split(alg: &AlgebraHandle, e: &Channel, rng: &mut Prng) -> Result<(f64, f64)> {
    let d = alg.dim() as f64;
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    let mut f_off = 0usize;
    for &(nj, dj) in alg.spec().blocks() {
        let m = nj * nj;
        let weight = dj as f64 / nj as f64;
        let mix = haar_unitary(m, rng);
        for i in 0..m {
            let mut remixed = CMat::zeros(alg.dim(), alg.dim());
            for l in 0..m {
                remixed += alg.f_normalized(f_off + l) * mix[(i, l)];
            }
            let img = e.apply(&remixed)?;
            g1 += weight * img.norm_squared();
            let proj = alg.project_commutant(&img, Projection::Osr)?;
            g2 += weight * proj.norm_squared();
        }
        f_off += m;
    }
    Ok((g1 / d, g2 / d))
}

/// Run every check under the given profile, in the advertised order.
pub fn run_all(profile: Profile) -> Vec<CheckOutcome> {
    vec![
        check_example1(),
        check_example2(),
        check_stabilizer(),
        check_haar_typical(),
        check_route_agreement(),
        check_algebra_properties(),
        check_cgp_reduction(),
        check_loschmidt_reduction(),
        check_pxp_dynamics(profile),
        check_dfs_stability(profile),
        check_structural(),
    ]
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}
