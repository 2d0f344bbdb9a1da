//! Periodic spin-1/2 chains used in the experiments: the kinetically
//! constrained PXP chain with bulk dephasing/driving (on its blockade
//! subspace) and the Heisenberg XXX chain with collective decoherence, plus
//! the spin-0 decoherence-free subspace, its λ-perturbed rotations, and a
//! time-series driver that evolves the commutant basis directly.
//!
//! Conventions: site j of a configuration is bit j (site 0 is the least
//! significant bit); ↑ means bit 1 and σ^z eigenvalue +1;
//! σ^± = (σ^x ± i σ^y)/2.

use crate::algebra::AlgebraHandle;
use crate::aotoc::{AotocReport, Method};
use crate::channel::{lindblad_superop_csr, LindbladSpec};
use crate::numerics::{
    matexp_apply, stream_rng, tree_sum_f64, unit_sphere_vector, vec_op, Stopwatch,
};
use crate::{C64, CMat, CVec, Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Pxp,
    Xxx,
}

/// Parameters of a periodic chain: site count, exchange energy, dephasing
/// rate α and driving rate γ.
#[derive(Clone, Copy, Debug)]
pub struct SpinChainSpec {
    pub n_sites: usize,
    pub coupling: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub model: ModelKind,
}

impl SpinChainSpec {
    pub fn new(
        n_sites: usize,
        coupling: f64,
        alpha: f64,
        gamma: f64,
        model: ModelKind,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 sites, got {n_sites}"
            )));
        }
        if alpha < 0.0 || gamma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "rates must be ≥ 0, got α = {alpha}, γ = {gamma}"
            )));
        }
        Ok(Self {
            n_sites,
            coupling,
            alpha,
            gamma,
            model,
        })
    }
}

/// All length-n configurations with no two cyclically adjacent ↑ sites,
/// in increasing integer order.
pub fn pxp_space(n: usize) -> Result<Vec<usize>> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "the blockade constraint needs at least 3 sites, got {n}"
        )));
    }
    if n > 24 {
        return Err(Error::InvalidInput(format!(
            "site count {n} is beyond the dense-representation range"
        )));
    }
    let mask = (1usize << n) - 1;
    let rotl = |b: usize| ((b << 1) | (b >> (n - 1))) & mask;
    Ok((0..=mask).filter(|&b| b & rotl(b) == 0).collect())
}

/// Does flipping site j of configuration b stay inside the blockade space?
/// True exactly when both cyclic neighbors of j are ↓.
fn pxp_flip_allowed(b: usize, j: usize, n: usize) -> bool {
    let left = (j + n - 1) % n;
    let right = (j + 1) % n;
    (b >> left) & 1 == 0 && (b >> right) & 1 == 0
}

/// Constrained-space generator data for the PXP chain:
/// H = 𝒥 Σ_j P_{j−1} σ_j^x P_{j+1}, with per-site jump operators
/// √α σ_j^z and √γ σ_j^± compressed to the blockade space.
pub fn pxp_model(spec: &SpinChainSpec) -> Result<LindbladSpec> {
    if spec.model != ModelKind::Pxp {
        return Err(Error::InvalidInput(
            "spec.model must be pxp for pxp_model".into(),
        ));
    }
    let n = spec.n_sites;
    let space = pxp_space(n)?;
    let dim = space.len();
    let index_of = {
        let mut map = vec![usize::MAX; 1 << n];
        for (i, &b) in space.iter().enumerate() {
            map[b] = i;
        }
        map
    };
    let mut h = CMat::zeros(dim, dim);
    for (i, &b) in space.iter().enumerate() {
        for j in 0..n {
            if pxp_flip_allowed(b, j, n) {
                let flipped = b ^ (1 << j);
                let ip = index_of[flipped];
                debug_assert_ne!(ip, usize::MAX);
                h[(ip, i)] += C64::from(spec.coupling);
            }
        }
    }
    let mut jumps = Vec::new();
    if spec.alpha > 0.0 {
        let root = spec.alpha.sqrt();
        for j in 0..n {
            let mut l = CMat::zeros(dim, dim);
            for (i, &b) in space.iter().enumerate() {
                let zval = if (b >> j) & 1 == 1 { 1.0 } else { -1.0 };
                l[(i, i)] = C64::from(root * zval);
            }
            jumps.push(l);
        }
    }
    if spec.gamma > 0.0 {
        let root = spec.gamma.sqrt();
        for j in 0..n {
            // raising part |1><0| at site j, kept only when the image stays
            // in the blockade space
            let mut lp = CMat::zeros(dim, dim);
            let mut lm = CMat::zeros(dim, dim);
            for (i, &b) in space.iter().enumerate() {
                if (b >> j) & 1 == 0 {
                    if pxp_flip_allowed(b, j, n) {
                        lp[(index_of[b | (1 << j)], i)] = C64::from(root);
                    }
                } else {
                    lm[(index_of[b & !(1 << j)], i)] = C64::from(root);
                }
            }
            jumps.push(lp);
            jumps.push(lm);
        }
    }
    LindbladSpec::new(h, jumps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductPattern {
    Neel,
    Ferro,
}

/// The indicated basis vector of the blockade space: alternating ↑↓↑↓…
/// (site 0 up) or all-down.
pub fn product_state(n: usize, pattern: ProductPattern) -> Result<CVec> {
    let space = pxp_space(n)?;
    let target = match pattern {
        ProductPattern::Ferro => 0usize,
        ProductPattern::Neel => {
            if n % 2 != 0 {
                return Err(Error::InvalidInput(format!(
                    "the alternating pattern needs an even site count, got {n}"
                )));
            }
            (0..n).step_by(2).fold(0usize, |acc, j| acc | (1 << j))
        }
    };
    let idx = space
        .iter()
        .position(|&b| b == target)
        .ok_or_else(|| Error::InvalidInput("pattern not in the blockade space".into()))?;
    let mut v = CVec::zeros(space.len());
    v[idx] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Full-space generator data for the periodic XXX chain:
/// H = 𝒥 Σ_j (σ_j^xσ_{j+1}^x + σ_j^yσ_{j+1}^y + σ_j^zσ_{j+1}^z) with
/// collective jumps √α Σ_j σ_j^z, √γ Σ_j σ_j^+, √γ Σ_j σ_j^−.
pub fn xxx_model(spec: &SpinChainSpec) -> Result<LindbladSpec> {
    if spec.model != ModelKind::Xxx {
        return Err(Error::InvalidInput(
            "spec.model must be xxx for xxx_model".into(),
        ));
    }
    let n = spec.n_sites;
    if n > 12 {
        return Err(Error::InvalidInput(format!(
            "site count {n} is beyond the dense-representation range"
        )));
    }
    let d = 1usize << n;
    let jc = spec.coupling;
    let mut h = CMat::zeros(d, d);
    for b in 0..d {
        for j in 0..n {
            let jn = (j + 1) % n;
            let bj = (b >> j) & 1;
            let bn = (b >> jn) & 1;
            // σ^z σ^z
            let zz = if bj == bn { 1.0 } else { -1.0 };
            h[(b, b)] += C64::from(jc * zz);
            // σ^x σ^x + σ^y σ^y = 2(σ^+σ^− + σ^−σ^+): swaps antiparallel pairs
            if bj != bn {
                let flipped = b ^ (1 << j) ^ (1 << jn);
                h[(flipped, b)] += C64::from(2.0 * jc);
            }
        }
    }
    let mut jumps = Vec::new();
    if spec.alpha > 0.0 {
        let root = spec.alpha.sqrt();
        let mut l = CMat::zeros(d, d);
        for b in 0..d {
            let up = (b as u64).count_ones() as f64;
            l[(b, b)] = C64::from(root * (2.0 * up - n as f64));
        }
        jumps.push(l);
    }
    if spec.gamma > 0.0 {
        let root = spec.gamma.sqrt();
        let mut lp = CMat::zeros(d, d);
        let mut lm = CMat::zeros(d, d);
        for b in 0..d {
            for j in 0..n {
                if (b >> j) & 1 == 0 {
                    lp[(b | (1 << j), b)] += C64::from(root);
                } else {
                    lm[(b & !(1 << j), b)] += C64::from(root);
                }
            }
        }
        jumps.push(lp);
        jumps.push(lm);
    }
    LindbladSpec::new(h, jumps)
}

/// Total-spin-squared operator Σ_a (Σ_j σ_j^a)² on n sites.
pub fn total_spin_squared(n: usize) -> CMat {
    let d = 1usize << n;
    let mut sx = CMat::zeros(d, d);
    let mut sy = CMat::zeros(d, d);
    let mut sz = CMat::zeros(d, d);
    let i = C64::new(0.0, 1.0);
    for b in 0..d {
        sz[(b, b)] = C64::from(2.0 * (b as u64).count_ones() as f64 - n as f64);
        for j in 0..n {
            let flipped = b ^ (1 << j);
            sx[(flipped, b)] += C64::new(1.0, 0.0);
            sy[(flipped, b)] += if (b >> j) & 1 == 0 { i } else { -i };
        }
    }
    &sx * &sx + &sy * &sy + &sz * &sz
}

/// Orthonormal basis of the zero eigenspace of the total-spin-squared
/// operator (the decoherence-free subspace for collective jumps).
pub fn dfs_subspace(n: usize) -> Result<CMat> {
    if n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "the zero-spin sector needs an even site count, got {n}"
        )));
    }
    if n > 12 {
        return Err(Error::InvalidInput(format!(
            "site count {n} is beyond the dense-representation range"
        )));
    }
    let s2 = total_spin_squared(n);
    let herm = (&s2 + s2.adjoint()) * C64::from(0.5);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let d = 1usize << n;
    let mut cols: Vec<CVec> = Vec::new();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= 1e-8 {
            cols.push(eig.eigenvectors.column(idx).into_owned());
        }
    }
    if cols.is_empty() {
        return Err(Error::Numerical("no zero-spin eigenvectors found".into()));
    }
    let ortho = crate::numerics::mgs_orthonormalize(&cols, crate::tol::RANK_CUT);
    if ortho.len() != cols.len() {
        return Err(Error::Numerical(
            "zero-spin eigenvectors failed to orthonormalize".into(),
        ));
    }
    let mut basis = CMat::zeros(d, ortho.len());
    for (c, v) in ortho.iter().enumerate() {
        basis.set_column(c, v);
    }
    Ok(basis)
}

/// Product of single-site rotations exp{i λ η⃗_j·σ⃗_j} with each η⃗_j drawn
/// uniformly from the unit sphere; the directions depend only on the seed,
/// not on λ.
pub fn perturbation_unitary(n: usize, lambda: f64, seed: u64) -> CMat {
    let (c, s) = (lambda.cos(), lambda.sin());
    let i = C64::new(0.0, 1.0);
    let mut u = CMat::identity(1, 1);
    for j in 0..n {
        let mut rng = stream_rng(seed, j as u64);
        let eta = unit_sphere_vector(&mut rng);
        // exp(iλ η·σ) = cos λ · 1 + i sin λ · η·σ on one site
        let mut site = CMat::zeros(2, 2);
        site[(0, 0)] = C64::from(c) + i * C64::from(s * eta[2]);
        site[(1, 1)] = C64::from(c) - i * C64::from(s * eta[2]);
        site[(0, 1)] = i * C64::from(s) * C64::new(eta[0], -eta[1]);
        site[(1, 0)] = i * C64::from(s) * C64::new(eta[0], eta[1]);
        u = u.kronecker(&site);
    }
    u
}

/// Two-block algebra around the λ-rotated zero-spin subspace; at λ = 0 this
/// is exactly the unperturbed subspace algebra.
pub fn perturbed_dfs_algebra(n: usize, lambda: f64, seed: u64) -> Result<AlgebraHandle> {
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "perturbation strength must be ≥ 0, got {lambda}"
        )));
    }
    let basis = dfs_subspace(n)?;
    if lambda == 0.0 {
        return AlgebraHandle::dfs(&basis);
    }
    let u = perturbation_unitary(n, lambda, seed);
    AlgebraHandle::dfs(&(&u * &basis))
}

#[derive(Clone, Debug, Default)]
pub struct SeriesMeta {
    pub label: String,
    pub seed: Option<u64>,
    pub wall_seconds: f64,
}

/// A correlator report per time point, over a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct ExperimentSeries {
    pub times: Vec<f64>,
    pub rows: Vec<AotocReport>,
    pub meta: SeriesMeta,
}

/// Uniform grid 0, Δt, 2Δt, … up to and including the largest multiple
/// ≤ t_max (+ tiny slack for roundoff).
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need Δt > 0 and t_max ≥ 0, got Δt = {dt}, t_max = {t_max}"
        )));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

/// Evolve the canonical commutant basis through e^{tL} column-by-column in
/// vectorized form and assemble a correlator report per time point. The
/// sparse generator is applied incrementally between grid points, so cost
/// scales with d(A')·nnz(L)·steps rather than any dense exponential.
pub fn run_series(
    model: &LindbladSpec,
    algebra: &AlgebraHandle,
    times: &[f64],
) -> Result<ExperimentSeries> {
    let started = Stopwatch::start();
    let d = algebra.dim();
    if model.dim() != d {
        return Err(Error::Dimension {
            context: "run_series model vs algebra",
            expected: d,
            got: model.dim(),
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times[0] < 0.0 {
        return Err(Error::InvalidInput(format!(
            "times must be ≥ 0, got {}",
            times[0]
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }
    let gen = lindblad_superop_csr(model);
    let n_f = algebra.f_basis().len();
    let fn_vecs: Vec<CVec> = (0..n_f)
        .map(|g| vec_op(&algebra.f_normalized(g)))
        .collect();

    // Per column: walk the grid once, recording ‖E_t(f)‖² and the overlap
    // row against the normalized basis at each stop.
    let evolve_column = |gamma: usize| -> Result<Vec<(f64, Vec<C64>)>> {
        let mut col = vec_op(&algebra.f_basis()[gamma]);
        let init_norm = col.norm();
        let mut out = Vec::with_capacity(times.len());
        let mut t_prev = 0.0;
        for &t in times {
            let gap = t - t_prev;
            if gap > 0.0 {
                col = matexp_apply(&gen, gap, &col)
                    .map_err(|e| Error::Numerical(format!("at t = {t}: {e}")))?;
            }
            t_prev = t;
            let norm = col.norm();
            if !norm.is_finite() || norm > init_norm * (1.0 + 1e-6) + 1e-9 {
                return Err(Error::Numerical(format!(
                    "at t = {t}: basis image norm grew to {norm} (started at {init_norm})"
                )));
            }
            let overlaps: Vec<C64> = fn_vecs.iter().map(|fv| fv.dotc(&col)).collect();
            out.push((norm * norm, overlaps));
        }
        Ok(out)
    };

    #[cfg(feature = "parallel")]
    let per_column: Vec<Vec<(f64, Vec<C64>)>> = (0..n_f)
        .into_par_iter()
        .map(evolve_column)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let per_column: Vec<Vec<(f64, Vec<C64>)>> =
        (0..n_f).map(evolve_column).collect::<Result<_>>()?;

    let dims = algebra.dims_and_bounds();
    let df = d as f64;
    let mut rows = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let g1_terms: Vec<f64> = (0..n_f).map(|g| per_column[g][ti].0).collect();
        let g2_terms: Vec<f64> = (0..n_f)
            .map(|g| {
                let per: Vec<f64> = per_column[g][ti]
                    .1
                    .iter()
                    .map(|ov| ov.norm_sqr())
                    .collect();
                tree_sum_f64(&per)
            })
            .collect();
        let g1 = tree_sum_f64(&g1_terms) / df;
        let g2 = tree_sum_f64(&g2_terms) / df;
        rows.push(AotocReport {
            method: Method::Correlator,
            g: g1 - g2,
            g1,
            g2,
            bound: dims.bound,
            typical: dims.typical,
            mc_stderr: None,
        });
    }
    Ok(ExperimentSeries {
        times: times.to_vec(),
        rows,
        meta: SeriesMeta {
            label: String::new(),
            seed: None,
            wall_seconds: started.seconds(),
        },
    })
}

/// Least-squares fit of the time-averaged scrambling-term deviation from the
/// λ = 0 series against λ², through the origin.
#[derive(Clone, Debug)]
pub struct QuadraticFit {
    pub lambdas: Vec<f64>,
    pub mean_g2: Vec<f64>,
    pub deviations: Vec<f64>,
    pub coefficient: f64,
    pub r_squared: f64,
}

pub fn time_average_quadratic_fit(
    series: &[(f64, ExperimentSeries)],
    window: (f64, f64),
) -> Result<QuadraticFit> {
    if series.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 perturbation strengths, got {}",
            series.len()
        )));
    }
    let zero_pos = series
        .iter()
        .position(|(l, _)| *l == 0.0)
        .ok_or_else(|| Error::InvalidInput("λ = 0 series is required".into()))?;
    let mut lambdas = Vec::with_capacity(series.len());
    let mut mean_g2 = Vec::with_capacity(series.len());
    for (lambda, s) in series {
        let vals: Vec<f64> = s
            .times
            .iter()
            .zip(&s.rows)
            .filter(|(t, _)| **t >= window.0 && **t <= window.1)
            .map(|(_, r)| r.g2)
            .collect();
        if vals.is_empty() {
            return Err(Error::InvalidInput(format!(
                "series for λ = {lambda} has no points inside the window"
            )));
        }
        lambdas.push(*lambda);
        mean_g2.push(tree_sum_f64(&vals) / vals.len() as f64);
    }
    let base = mean_g2[zero_pos];
    let deviations: Vec<f64> = mean_g2.iter().map(|m| base - m).collect();
    let num: f64 = lambdas
        .iter()
        .zip(&deviations)
        .map(|(l, d)| d * l * l)
        .sum();
    let den: f64 = lambdas.iter().map(|l| l.powi(4)).sum();
    let coefficient = if den > 0.0 { num / den } else { 0.0 };
    let ss_res: f64 = lambdas
        .iter()
        .zip(&deviations)
        .map(|(l, d)| (d - coefficient * l * l).powi(2))
        .sum();
    let ss_tot: f64 = deviations.iter().map(|d| d * d).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(QuadraticFit {
        lambdas,
        mean_g2,
        deviations,
        coefficient,
        r_squared,
    })
}
