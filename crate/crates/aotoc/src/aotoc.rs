//! The averaged algebraic out-of-time-order correlator and its
//! decoherence/scrambling split, with four independent evaluation routes,
//! the corresponding algebra-rotation distance for unitary channels, the
//! commutant-invariance test, and Haar-typical sampling.
//!
//! Default route: for the canonical commutant basis {f},
//! `g1 = (1/d)·Σ ‖E(f)‖₂²` and `g2 = (1/d)·Σ ‖P(E(f))‖₂²` with `P` the
//! conditional expectation onto the commutant, and `g = g1 − g2`. The other
//! routes (doubled-space trace, basis-overlap double sum, four-point trace)
//! are validation paths kept deliberately independent of the default one.

use crate::algebra::{omega, swap_operator, AlgebraHandle, Projection};
use crate::channel::Channel;
use crate::numerics::{stream_rng, tree_sum_c64, tree_sum_f64, Prng};
use crate::{tol, C64, CMat, Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which evaluation route produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Correlator,
    Replica,
    MonteCarlo,
    Otoc4pt,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Correlator => "correlator",
            Method::Replica => "replica",
            Method::MonteCarlo => "montecarlo",
            Method::Otoc4pt => "otoc4pt",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlator" => Ok(Method::Correlator),
            "replica" => Ok(Method::Replica),
            "montecarlo" => Ok(Method::MonteCarlo),
            "otoc4pt" => Ok(Method::Otoc4pt),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected correlator|replica|montecarlo|otoc4pt)"
            ))),
        }
    }
}

/// One evaluation of the correlator together with its split and the two
/// dimension-only benchmarks. Stored values are never clamped, so bound
/// violations stay visible.
#[derive(Clone, Copy, Debug)]
pub struct AotocReport {
    pub method: Method,
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub bound: f64,
    pub typical: f64,
    pub mc_stderr: Option<f64>,
}

fn check_dims(a: &AlgebraHandle, e: &Channel) -> Result<()> {
    if a.dim() != e.dim() {
        return Err(Error::Dimension {
            context: "algebra vs channel",
            expected: a.dim(),
            got: e.dim(),
        });
    }
    Ok(())
}

fn check_channel(e: &Channel) -> Result<()> {
    let check = e.quick_check();
    if !check.trace_preserving {
        return Err(Error::NotTracePreserving { dev: check.tp_dev });
    }
    if !check.unital {
        return Err(Error::NotUnital {
            dev: check.unital_dev,
        });
    }
    if !check.cp {
        return Err(Error::NotCompletelyPositive {
            min_eig: check.min_choi_eig,
        });
    }
    Ok(())
}

/// Map every canonical commutant basis element through `apply` in a fixed
/// order (parallel when enabled, reduced deterministically by the caller).
fn map_f_basis<T, F>(a: &AlgebraHandle, apply: F) -> Vec<T>
where
    T: Send,
    F: Fn(&CMat) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        a.f_basis().par_iter().map(|f| apply(f)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        a.f_basis().iter().map(|f| apply(f)).collect()
    }
}

fn finish_report(
    a: &AlgebraHandle,
    method: Method,
    g: f64,
    g1: f64,
    g2: f64,
    mc_stderr: Option<f64>,
) -> AotocReport {
    let dims = a.dims_and_bounds();
    AotocReport {
        method,
        g,
        g1,
        g2,
        bound: dims.bound,
        typical: dims.typical,
        mc_stderr,
    }
}

/// Correlator split without channel verification; used by the sampling and
/// time-series paths where the channel is unitary or already validated.
pub(crate) fn correlator_core(a: &AlgebraHandle, e: &Channel) -> AotocReport {
    let d = a.dim() as f64;
    let terms: Vec<(f64, f64)> = map_f_basis(a, |f| {
        let img = e.apply(f).expect("dims were checked");
        let proj = a
            .project_commutant(&img, Projection::Osr)
            .expect("dims were checked");
        (img.norm_squared(), proj.norm_squared())
    });
    let g1 = tree_sum_f64(&terms.iter().map(|t| t.0).collect::<Vec<_>>()) / d;
    let g2 = tree_sum_f64(&terms.iter().map(|t| t.1).collect::<Vec<_>>()) / d;
    finish_report(a, Method::Correlator, g1 - g2, g1, g2, None)
}

/// Default evaluation: decoherence term g1 = (1/d)Σ‖E(f)‖₂², scrambling term
/// g2 = (1/d)Σ‖P(E(f))‖₂² over the canonical commutant basis, g = g1 − g2.
/// The channel must pass structural verification.
pub fn aotoc(a: &AlgebraHandle, e: &Channel) -> Result<AotocReport> {
    check_dims(a, e)?;
    check_channel(e)?;
    Ok(correlator_core(a, e))
}

/// Basis-overlap double sum: g = (1/d)Σ‖E(f)‖₂² − (1/d)ΣΣ |⟨f̃†, E(f')⟩|².
/// Validation route; returns g only.
pub fn aotoc_overlap_form(a: &AlgebraHandle, e: &Channel) -> Result<f64> {
    check_dims(a, e)?;
    let d = a.dim() as f64;
    let m = a.f_basis().len();
    let images: Vec<CMat> = map_f_basis(a, |f| e.apply(f).expect("dims were checked"));
    let g1_terms: Vec<f64> = images.iter().map(|img| img.norm_squared()).collect();
    let g1 = tree_sum_f64(&g1_terms) / d;
    let mut overlap_terms = Vec::with_capacity(m * m);
    for gi in 0..m {
        let f_dag_normalized = {
            let f = &a.f_basis()[gi];
            f.adjoint() / C64::from(f.norm())
        };
        for img in &images {
            overlap_terms.push(f_dag_normalized.dotc(img).norm_sqr());
        }
    }
    let g2 = tree_sum_f64(&overlap_terms) / d;
    Ok(g1 - g2)
}

/// Doubled-space route: g = (1/d)·Tr[S·(1 − Ω_A)·Σ E(f)⊗E(f†)] with
/// Ω_A = Σ e⊗e† and S the swap. Needs d⁴ memory, so it is gated by a size
/// limit (default 12).
pub fn aotoc_replica(a: &AlgebraHandle, e: &Channel) -> Result<AotocReport> {
    aotoc_replica_with_limit(a, e, 12)
}

pub fn aotoc_replica_with_limit(
    a: &AlgebraHandle,
    e: &Channel,
    limit: usize,
) -> Result<AotocReport> {
    check_dims(a, e)?;
    let d = a.dim();
    if d > limit {
        return Err(Error::InvalidInput(format!(
            "doubled-space route needs d ≤ {limit}, got {d}"
        )));
    }
    let df = d as f64;
    let mut m = CMat::zeros(d * d, d * d);
    for f in a.f_basis() {
        let img = e.apply(f)?;
        let img_dag = e.apply(&f.adjoint())?;
        m += img.kronecker(&img_dag);
    }
    let s = swap_operator(d);
    let omega_a = omega(a.e_basis());
    let sm = &s * &m;
    let som = &s * &omega_a * &m;
    let g1 = sm.trace().re / df;
    let g2 = som.trace().re / df;
    Ok(finish_report(a, Method::Replica, g1 - g2, g1, g2, None))
}

/// Four-point trace route for the scrambling term only:
/// g2 = (1/d)·ΣΣ Tr[E(f)†·e†·E(f)·e].
pub fn scrambling_otoc4pt(a: &AlgebraHandle, e: &Channel) -> Result<f64> {
    check_dims(a, e)?;
    let d = a.dim() as f64;
    let terms: Vec<C64> = map_f_basis(a, |f| {
        let img = e.apply(f).expect("dims were checked");
        let img_dag = img.adjoint();
        let per: Vec<C64> = a
            .e_basis()
            .iter()
            .map(|ea| (&img_dag * ea.adjoint() * &img * ea).trace())
            .collect();
        tree_sum_c64(&per)
    });
    Ok(tree_sum_c64(&terms).re / d)
}

/// Report built on the four-point scrambling term (g1 from the plain
/// decoherence sum, which has a single form).
pub fn aotoc_otoc4pt(a: &AlgebraHandle, e: &Channel) -> Result<AotocReport> {
    check_dims(a, e)?;
    let d = a.dim() as f64;
    let g1_terms: Vec<f64> = map_f_basis(a, |f| {
        e.apply(f).expect("dims were checked").norm_squared()
    });
    let g1 = tree_sum_f64(&g1_terms) / d;
    let g2 = scrambling_otoc4pt(a, e)?;
    Ok(finish_report(a, Method::Otoc4pt, g1 - g2, g1, g2, None))
}

/// Draw a Haar-random element of the algebra's unitary subgroup: an
/// independent Haar unitary on each block's algebra factor, identity on the
/// multiplicity factor.
pub fn sample_algebra_unitary(a: &AlgebraHandle, rng: &mut Prng) -> CMat {
    let d = a.dim();
    let w = a.spec().embedding();
    let offsets = a.spec().offsets();
    let mut x = CMat::zeros(d, d);
    for (bi, &(nj, dj)) in a.spec().blocks().iter().enumerate() {
        let off = offsets[bi];
        let u = crate::numerics::haar_unitary(dj, rng);
        for p in 0..nj {
            for k in 0..dj {
                for l in 0..dj {
                    let ukl = u[(k, l)];
                    if ukl != C64::new(0.0, 0.0) {
                        let col_k = w.column(off + p * dj + k);
                        let col_l = w.column(off + p * dj + l);
                        // x += ukl * |col_k><col_l|
                        for (r, ck) in col_k.iter().enumerate() {
                            if *ck != C64::new(0.0, 0.0) {
                                for (c, cl) in col_l.iter().enumerate() {
                                    x[(r, c)] += ukl * ck * cl.conj();
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

/// Direct sampling of the defining average: X Haar on the algebra's unitary
/// subgroup, Y on the commutant's, sample value (1/2d)·‖[X, E(Y)]‖₂².
/// The g1/g2 fields hold the per-sample means of ‖E(Y)‖₂²/d and
/// Re Tr[E(Y)†X†E(Y)X]/d; g is the commutator mean itself.
pub fn aotoc_montecarlo(
    a: &AlgebraHandle,
    e: &Channel,
    n_samples: usize,
    rng_seed: u64,
) -> Result<AotocReport> {
    check_dims(a, e)?;
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let commutant = a.commutant();
    let d = a.dim() as f64;
    let sample = |i: usize| -> (f64, f64, f64) {
        let mut rng = stream_rng(rng_seed, i as u64);
        let x = sample_algebra_unitary(a, &mut rng);
        let y = sample_algebra_unitary(&commutant, &mut rng);
        let ey = e.apply(&y).expect("dims were checked");
        let comm = &x * &ey - &ey * &x;
        let g_s = comm.norm_squared() / (2.0 * d);
        let g1_s = ey.norm_squared() / d;
        let g2_s = (ey.adjoint() * x.adjoint() * &ey * &x).trace().re / d;
        (g_s, g1_s, g2_s)
    };
    #[cfg(feature = "parallel")]
    let samples: Vec<(f64, f64, f64)> = (0..n_samples).into_par_iter().map(sample).collect();
    #[cfg(not(feature = "parallel"))]
    let samples: Vec<(f64, f64, f64)> = (0..n_samples).map(sample).collect();

    let gs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let g1s: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let g2s: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let n = n_samples as f64;
    let mean = tree_sum_f64(&gs) / n;
    let devs: Vec<f64> = gs.iter().map(|g| (g - mean) * (g - mean)).collect();
    let var = tree_sum_f64(&devs) / (n - 1.0);
    let stderr = (var / n).sqrt();
    let g1 = tree_sum_f64(&g1s) / n;
    let g2 = tree_sum_f64(&g2s) / n;
    Ok(finish_report(
        a,
        Method::MonteCarlo,
        mean,
        g1,
        g2,
        Some(stderr),
    ))
}

/// Unified entry point across routes.
pub fn aotoc_with_method(
    a: &AlgebraHandle,
    e: &Channel,
    method: Method,
    mc_samples: usize,
    mc_seed: u64,
) -> Result<AotocReport> {
    match method {
        Method::Correlator => aotoc(a, e),
        Method::Replica => aotoc_replica(a, e),
        Method::Otoc4pt => aotoc_otoc4pt(a, e),
        Method::MonteCarlo => aotoc_montecarlo(a, e, mc_samples, mc_seed),
    }
}

/// Result of the algebra-rotation distance for a unitary channel: the
/// superoperator-projector value, the doubled-space reduced value used as a
/// self-check, and whether the algebra has proportional block shapes (the
/// regime where this distance equals the correlator).
#[derive(Clone, Copy, Debug)]
pub struct GaacValue {
    pub value: f64,
    pub reduced: f64,
    pub collinear: bool,
    pub lambda: Option<usize>,
}

/// Distance 1 − ⟨P, P_U⟩/d(A') between the commutant projector P and its
/// conjugation P_U by the unitary, computed from d²×d² superoperator
/// matrices, with an independent doubled-space evaluation
/// 1 − ⟨Ω_A, (U⊗U)·Ω_A·(U⊗U)†⟩/d(A') as a self-check.
pub fn gaac(a: &AlgebraHandle, u: &CMat) -> Result<GaacValue> {
    let d = a.dim();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::Dimension {
            context: "gaac unitary",
            expected: d,
            got: u.nrows(),
        });
    }
    let udev = (u.adjoint() * u - CMat::identity(d, d)).camax();
    if udev > tol::STRUCTURAL {
        return Err(Error::NotUnitary { dev: udev });
    }
    let dc = a.dims_and_bounds().dim_commutant as f64;
    let p = a.commutant_projector_superop();
    let su = u.conjugate().kronecker(u);
    let pu = &su * &p * su.adjoint();
    let value = 1.0 - (p.adjoint() * &pu).trace().re / dc;

    let omega_a = omega(a.e_basis());
    let uu = u.kronecker(u);
    let rotated = &uu * &omega_a * uu.adjoint();
    let reduced = 1.0 - omega_a.dotc(&rotated).re / dc;
    if (value - reduced).abs() > tol::NUMERICAL {
        return Err(Error::Numerical(format!(
            "projector-overlap value {value} disagrees with doubled-space value {reduced}"
        )));
    }
    let (collinear, lambda) = a.is_collinear();
    Ok(GaacValue {
        value,
        reduced,
        collinear,
        lambda,
    })
}

/// Does the channel map the commutant into itself? Returns the flag and the
/// worst leakage max ‖(1 − P)·E(f)‖₂ over the canonical commutant basis.
pub fn is_commutant_invariant(
    a: &AlgebraHandle,
    e: &Channel,
    tol: f64,
) -> Result<(bool, f64)> {
    check_dims(a, e)?;
    let leaks: Vec<f64> = map_f_basis(a, |f| {
        let img = e.apply(f).expect("dims were checked");
        let proj = a
            .project_commutant(&img, Projection::Gram)
            .expect("dims were checked");
        (img - proj).norm()
    });
    let max_leakage = leaks.iter().cloned().fold(0.0_f64, f64::max);
    Ok((max_leakage <= tol, max_leakage))
}

/// Monte-Carlo average of the correlator over globally Haar-random unitary
/// channels; converges to the dimension-only typical value.
pub fn haar_typical_mc(
    a: &AlgebraHandle,
    n_unitaries: usize,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    if n_unitaries < 10 {
        return Err(Error::InvalidInput(format!(
            "need at least 10 unitaries, got {n_unitaries}"
        )));
    }
    let d = a.dim();
    let sample = |i: usize| -> f64 {
        let mut rng = stream_rng(rng_seed, i as u64);
        let u = crate::numerics::haar_unitary(d, &mut rng);
        let e = Channel::from_unitary(&u).expect("sampled matrix is unitary");
        correlator_core(a, &e).g
    };
    #[cfg(feature = "parallel")]
    let gs: Vec<f64> = (0..n_unitaries).into_par_iter().map(sample).collect();
    #[cfg(not(feature = "parallel"))]
    let gs: Vec<f64> = (0..n_unitaries).map(sample).collect();
    let n = n_unitaries as f64;
    let mean = tree_sum_f64(&gs) / n;
    let devs: Vec<f64> = gs.iter().map(|g| (g - mean) * (g - mean)).collect();
    let var = tree_sum_f64(&devs) / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Haar-random unitary drawn via the algebra's block structure; exposed for
/// the sampling tests.
pub fn haar_block_unitary(a: &AlgebraHandle, seed: u64, stream: u64) -> CMat {
    let mut rng = stream_rng(seed, stream);
    sample_algebra_unitary(a, &mut rng)
}
