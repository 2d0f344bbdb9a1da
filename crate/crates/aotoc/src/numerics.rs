//! Numerical kernels shared by the rest of the crate.
//!
//! Everything here is deterministic: random sampling goes through explicitly
//! seeded ChaCha streams, and reductions over parallel work use a fixed
//! pairwise tree so results do not depend on thread schedule.

use crate::{C64, CMat, CVec, Error, Result};
use nalgebra_sparse::coo::CooMatrix;
use nalgebra_sparse::csr::CsrMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Prng = ChaCha8Rng;

/// Monotonic wall-clock timer that degrades to zero on targets without a
/// system clock (the browser/WebAssembly build).
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    started: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            started: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.started.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Root generator for a run.
pub fn seeded_rng(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for parallel task `stream` of the run with `seed`.
/// Streams of the same seed never overlap, so per-task draws are reproducible
/// regardless of scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> Prng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_normal(rng: &mut Prng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the R-diagonal
/// phase fix, which makes the distribution exactly invariant.
pub fn haar_unitary(d: usize, rng: &mut Prng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            u[(i, k)] *= phase;
        }
    }
    u
}

/// Uniform point on the unit 2-sphere.
pub fn unit_sphere_vector(rng: &mut Prng) -> [f64; 3] {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let n = (x * x + y * y + z * z).sqrt();
        if n > 1e-12 {
            return [x / n, y / n, z / n];
        }
    }
}

/// Column-stacking vectorization, so that vec(A X B) = (B^T (x) A) vec(X).
pub fn vec_op(x: &CMat) -> CVec {
    CVec::from_column_slice(x.as_slice())
}

pub fn unvec(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "unvec length must be d^2");
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Kronecker product of CSR matrices, matching the dense `kronecker` layout.
pub fn sparse_kron(a: &CsrMatrix<C64>, b: &CsrMatrix<C64>) -> CsrMatrix<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut coo = CooMatrix::new(ar * br, ac * bc);
    for (ai, aj, av) in a.triplet_iter() {
        for (bi, bj, bv) in b.triplet_iter() {
            coo.push(ai * br + bi, aj * bc + bj, av * bv);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn csr_from_triplets(
    nrows: usize,
    ncols: usize,
    triplets: &[(usize, usize, C64)],
) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(nrows, ncols);
    for &(i, j, v) in triplets {
        coo.push(i, j, v);
    }
    CsrMatrix::from(&coo)
}

/// Fixed pairwise tree sum: deterministic and better conditioned than a
/// left-to-right fold, independent of how the slice was produced.
pub fn tree_sum_f64(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (lo, hi) = xs.split_at(n / 2);
            tree_sum_f64(lo) + tree_sum_f64(hi)
        }
    }
}

pub fn tree_sum_c64(xs: &[C64]) -> C64 {
    match xs.len() {
        0 => C64::new(0.0, 0.0),
        1 => xs[0],
        n => {
            let (lo, hi) = xs.split_at(n / 2);
            tree_sum_c64(lo) + tree_sum_c64(hi)
        }
    }
}

/// Induced 1-norm (max absolute column sum).
pub fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

fn pade_uv(a: &CMat, powers: &[&CMat], b: &[f64]) -> (CMat, CMat) {
    // powers = [A^2, A^4, A^6, ...] as needed by the degree; U collects odd
    // coefficients (then one multiply by A), V the even ones.
    let d = a.nrows();
    let id = CMat::identity(d, d);
    let mut even = &id * C64::from(b[0]);
    let mut odd = &id * C64::from(b[1]);
    for (k, p) in powers.iter().enumerate() {
        let e = 2 * (k + 1);
        even += *p * C64::from(b[e]);
        if e + 1 < b.len() {
            odd += *p * C64::from(b[e + 1]);
        }
    }
    (a * odd, even)
}

/// Dense matrix exponential exp(t A) by Pade approximation with scaling and
/// squaring.
pub fn matexp(a: &CMat, t: f64) -> CMat {
    assert_eq!(a.nrows(), a.ncols(), "matexp needs a square matrix");
    let d = a.nrows();
    if d == 0 {
        return a.clone();
    }
    let a = a * C64::from(t);
    let a = &a;
    let norm = one_norm(a);

    const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
    const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
    const B7: [f64; 8] = [
        17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
    ];
    const B9: [f64; 10] = [
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ];
    const B13: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let (u, v, squarings) = if norm < 1.495585217958292e-2 {
        let a2 = a * a;
        let (u, v) = pade_uv(a, &[&a2], &B3);
        (u, v, 0u32)
    } else if norm < 2.539398330063230e-1 {
        let a2 = a * a;
        let a4 = &a2 * &a2;
        let (u, v) = pade_uv(a, &[&a2, &a4], &B5);
        (u, v, 0)
    } else if norm < 9.504178996162932e-1 {
        let a2 = a * a;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let (u, v) = pade_uv(a, &[&a2, &a4, &a6], &B7);
        (u, v, 0)
    } else if norm < 2.097847961257068 {
        let a2 = a * a;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let a8 = &a6 * &a2;
        let (u, v) = pade_uv(a, &[&a2, &a4, &a6, &a8], &B9);
        (u, v, 0)
    } else {
        const THETA13: f64 = 5.371920351148152;
        let squarings = if norm > THETA13 {
            (norm / THETA13).log2().ceil() as u32
        } else {
            0
        };
        let scaled = a * C64::from(0.5f64.powi(squarings as i32));
        let a2 = &scaled * &scaled;
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        // Degree 13 factors the polynomial: highest three even powers are
        // grouped through an extra multiply by A^6.
        let id = CMat::identity(d, d);
        let w1 = &a6 * C64::from(B13[13]) + &a4 * C64::from(B13[11]) + &a2 * C64::from(B13[9]);
        let w2 = &a6 * C64::from(B13[7])
            + &a4 * C64::from(B13[5])
            + &a2 * C64::from(B13[3])
            + &id * C64::from(B13[1]);
        let u = &scaled * (&a6 * &w1 + w2);
        let z1 = &a6 * C64::from(B13[12]) + &a4 * C64::from(B13[10]) + &a2 * C64::from(B13[8]);
        let v = &a6 * &z1
            + &a6 * C64::from(B13[6])
            + &a4 * C64::from(B13[4])
            + &a2 * C64::from(B13[2])
            + &id * C64::from(B13[0]);
        (u, v, squarings)
    };

    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is singular; input norm out of range");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Abstraction over dense and sparse operators for the action-based
/// exponential. `one_norm` may overestimate; it only controls step selection.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, v: &CVec) -> CVec;
    fn trace(&self) -> C64;
    fn one_norm_est(&self) -> f64;
}

impl LinearOp for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, v: &CVec) -> CVec {
        self * v
    }
    fn trace(&self) -> C64 {
        CMat::trace(self)
    }
    fn one_norm_est(&self) -> f64 {
        one_norm(self)
    }
}

impl LinearOp for CsrMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, v: &CVec) -> CVec {
        self * v
    }
    fn trace(&self) -> C64 {
        self.triplet_iter()
            .filter(|(i, j, _)| i == j)
            .map(|(_, _, v)| *v)
            .fold(C64::new(0.0, 0.0), |a, b| a + b)
    }
    fn one_norm_est(&self) -> f64 {
        let mut col_sums = vec![0.0f64; self.ncols()];
        for (_, j, v) in self.triplet_iter() {
            col_sums[j] += v.norm();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }
}

/// Truncation thresholds for the shifted Taylor action at double precision:
/// with ||tA||_1 below theta(m), degree m reaches unit roundoff backward error.
const ACTION_THETA: &[(usize, f64)] = &[
    (5, 2.40e-3),
    (10, 1.44e-1),
    (15, 6.41e-1),
    (20, 1.44),
    (25, 2.43),
    (30, 3.54),
    (35, 4.70),
    (40, 6.00),
    (45, 7.20),
    (50, 8.50),
    (55, 9.90),
];

const ACTION_MAX_STEPS: usize = 2_000_000;

/// Computes exp(tA) v without forming exp(tA), by substepped truncated Taylor
/// series on the trace-shifted operator.
pub fn matexp_apply<O: LinearOp + ?Sized>(op: &O, t: f64, v: &CVec) -> Result<CVec> {
    let d = op.dim();
    if v.len() != d {
        return Err(Error::Dimension {
            context: "matexp_apply",
            expected: d,
            got: v.len(),
        });
    }
    if t == 0.0 {
        return Ok(v.clone());
    }
    let mu = op.trace() / C64::from(d as f64);
    // 1-norm of the shifted operator, bounded without forming A - mu I.
    let shifted_norm = (op.one_norm_est() + mu.norm()) * t.abs();

    let (mut m_star, mut s) = (ACTION_THETA[0].0, usize::MAX);
    let mut best_cost = f64::INFINITY;
    for &(m, theta) in ACTION_THETA {
        let steps = (shifted_norm / theta).ceil().max(1.0);
        let cost = steps * m as f64;
        if cost < best_cost {
            best_cost = cost;
            m_star = m;
            s = steps as usize;
        }
    }
    if s > ACTION_MAX_STEPS {
        return Err(Error::Numerical(format!(
            "matexp_apply needs {s} substeps (norm {shifted_norm:.3e}); refusing"
        )));
    }

    let tau = C64::from(t / s as f64);
    let phase = (mu * tau).exp();
    let mut f = v.clone();
    for _ in 0..s {
        let mut term = f.clone();
        let mut acc = f.clone();
        let mut prev_norm = term.iter().map(|z| z.norm()).sum::<f64>();
        for k in 1..=m_star {
            let w = op.apply(&term);
            term = (w - &term * mu) * (tau / C64::from(k as f64));
            acc += &term;
            let term_norm = term.iter().map(|z| z.norm()).sum::<f64>();
            let acc_norm = acc.iter().map(|z| z.norm()).sum::<f64>();
            if prev_norm + term_norm <= f64::EPSILON * acc_norm {
                break;
            }
            prev_norm = term_norm;
        }
        f = acc * phase;
        if !f.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Numerical(
                "matexp_apply diverged (non-finite entries)".into(),
            ));
        }
    }
    Ok(f)
}

/// Modified Gram–Schmidt with re-orthogonalization. Input columns are taken in
/// order; columns whose residual drops below `tol` are discarded, which makes
/// the output basis deterministic.
pub fn mgs_orthonormalize(cols: &[CVec], tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    for c in cols {
        let mut w = c.clone();
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&w);
                w -= b * overlap;
            }
        }
        let n = w.norm();
        if n > tol {
            basis.push(w / C64::from(n));
        }
    }
    basis
}

/// Dense matrix from a CSR one (small dimensions only).
pub fn csr_to_dense(a: &CsrMatrix<C64>) -> CMat {
    let mut m = CMat::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        m[(i, j)] += *v;
    }
    m
}
