//! Block-decomposed operator algebras, their commutants and conditional
//! expectations.
//!
//! A finite-dimensional unital *-algebra splits the Hilbert space into
//! orthogonal blocks, each a tensor product of a multiplicity factor (size
//! `n_J`) and an algebra factor (size `d_J`). The algebra acts as
//! `1_{n_J} (x) full` on each block, its commutant as `full (x) 1_{d_J}`.
//! A `BlockSpec` records the block sizes and the unitary mapping block
//! coordinates into the ambient space; the in-block basis order is row-major
//! over (multiplicity, algebra) indices.

use crate::numerics::mgs_orthonormalize;
use crate::{tol, C64, CMat, CVec, Error, Result};

#[derive(Clone, Debug)]
pub struct BlockSpec {
    blocks: Vec<(usize, usize)>,
    embedding: CMat,
}

impl BlockSpec {
    /// `blocks` lists (n_J, d_J); `embedding` is a global unitary whose
    /// columns give each block's |p> (x) |k> basis vectors, blocks in order,
    /// in-block index p·d_J + k. `None` means block-diagonal coordinates.
    pub fn new(blocks: Vec<(usize, usize)>, embedding: Option<CMat>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("block list is empty".into()));
        }
        if blocks.iter().any(|&(n, d)| n == 0 || d == 0) {
            return Err(Error::InvalidInput(
                "block sizes must be at least 1".into(),
            ));
        }
        let d: usize = blocks.iter().map(|&(n, dj)| n * dj).sum();
        let embedding = match embedding {
            Some(w) => {
                if w.nrows() != d || w.ncols() != d {
                    return Err(Error::Dimension {
                        context: "BlockSpec embedding",
                        expected: d,
                        got: w.nrows(),
                    });
                }
                let dev = (&w.adjoint() * &w - CMat::identity(d, d)).norm();
                if dev > tol::STRUCTURAL {
                    return Err(Error::NotUnitary { dev });
                }
                w
            }
            None => CMat::identity(d, d),
        };
        Ok(Self { blocks, embedding })
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|&(n, d)| n * d).sum()
    }

    pub fn embedding(&self) -> &CMat {
        &self.embedding
    }

    /// Starting column of each block within the embedding.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for &(n, d) in &self.blocks {
            out.push(acc);
            acc += n * d;
        }
        out
    }

    /// Structured-text form: a `blocks:` line of NxD pairs, then either
    /// `embedding: identity` or `embedding:` followed by d² row-major
    /// `re,im` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::from("blocks:");
        for &(n, d) in &self.blocks {
            out.push_str(&format!(" {n}x{d}"));
        }
        out.push('\n');
        let d = self.dim();
        if self.embedding == CMat::identity(d, d) {
            out.push_str("embedding: identity\n");
        } else {
            out.push_str("embedding:\n");
            for r in 0..d {
                for c in 0..d {
                    let v = self.embedding[(r, c)];
                    out.push_str(&format!("{},{}\n", v.re, v.im));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Config("empty block-spec text".into()))?;
        let body = first
            .strip_prefix("blocks:")
            .ok_or_else(|| Error::Config("line 1: expected 'blocks:'".into()))?;
        let mut blocks = Vec::new();
        for tok in body.split_whitespace() {
            let (n, d) = tok
                .split_once('x')
                .ok_or_else(|| Error::Config(format!("line 1: bad block '{tok}'")))?;
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("line 1: bad block '{tok}'")))?;
            let d: usize = d
                .parse()
                .map_err(|_| Error::Config(format!("line 1: bad block '{tok}'")))?;
            blocks.push((n, d));
        }
        let dim: usize = blocks.iter().map(|&(n, d)| n * d).sum();
        let (ln, second) = lines
            .next()
            .ok_or_else(|| Error::Config("missing 'embedding:' line".into()))?;
        let rest = second
            .strip_prefix("embedding:")
            .ok_or_else(|| Error::Config(format!("line {}: expected 'embedding:'", ln + 1)))?;
        let embedding = if rest.trim() == "identity" {
            None
        } else {
            let mut w = CMat::zeros(dim, dim);
            let mut idx = 0usize;
            for (ln, line) in lines {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let (re, im) = line.split_once(',').ok_or_else(|| {
                    Error::Config(format!("line {}: expected 're,im'", ln + 1))
                })?;
                let re: f64 = re
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("line {}: bad real part", ln + 1)))?;
                let im: f64 = im
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("line {}: bad imaginary part", ln + 1)))?;
                if idx >= dim * dim {
                    return Err(Error::Config("too many embedding entries".into()));
                }
                w[(idx / dim, idx % dim)] = C64::new(re, im);
                idx += 1;
            }
            if idx != dim * dim {
                return Err(Error::Config(format!(
                    "embedding has {idx} entries, expected {}",
                    dim * dim
                )));
            }
            Some(w)
        };
        Self::new(blocks, embedding)
    }
}

/// Dimension data and the two scalar benchmarks derived from it: the
/// attainable upper bound and the Haar-typical value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimsAndBounds {
    pub dim_total: usize,
    pub dim_algebra: usize,
    pub dim_commutant: usize,
    pub bound: f64,
    pub typical: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Operator-sum form over the algebra basis: sum_a e_a X e_a†.
    Osr,
    /// Gram form over the normalized commutant basis: sum_c f~_c <f~_c, X>.
    Gram,
}

#[derive(Clone, Debug)]
pub struct AlgebraHandle {
    spec: BlockSpec,
    e_basis: Vec<CMat>,
    f_basis: Vec<CMat>,
}

impl AlgebraHandle {
    /// Builds the canonical orthogonal bases of the algebra (`e_basis`,
    /// one element per block and matrix-unit pair, norm² = n_J/d_J) and of the
    /// commutant (`f_basis`, norm² = d_J/n_J).
    pub fn from_spec(spec: BlockSpec) -> Self {
        let d = spec.dim();
        let offsets = spec.offsets();
        let w = spec.embedding();
        let mut e_basis = Vec::new();
        let mut f_basis = Vec::new();
        for (bi, &(nj, dj)) in spec.blocks().iter().enumerate() {
            let off = offsets[bi];
            let col = |p: usize, k: usize| w.column(off + p * dj + k);
            // e = (1_n / sqrt(d_J)) (x) |k><l|
            let scale_e = C64::from(1.0 / (dj as f64).sqrt());
            for k in 0..dj {
                for l in 0..dj {
                    let mut m = CMat::zeros(d, d);
                    for p in 0..nj {
                        m += col(p, k) * col(p, l).adjoint();
                    }
                    e_basis.push(m * scale_e);
                }
            }
            // f = |p><q| (x) (1_d / sqrt(n_J))
            let scale_f = C64::from(1.0 / (nj as f64).sqrt());
            for p in 0..nj {
                for q in 0..nj {
                    let mut m = CMat::zeros(d, d);
                    for k in 0..dj {
                        m += col(p, k) * col(q, k).adjoint();
                    }
                    f_basis.push(m * scale_f);
                }
            }
        }
        Self {
            spec,
            e_basis,
            f_basis,
        }
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn e_basis(&self) -> &[CMat] {
        &self.e_basis
    }

    pub fn f_basis(&self) -> &[CMat] {
        &self.f_basis
    }

    /// Normalized commutant basis element.
    pub fn f_normalized(&self, idx: usize) -> CMat {
        let f = &self.f_basis[idx];
        f / C64::from(f.norm())
    }

    /// The commutant as a block algebra: per-block roles swap (n_J, d_J) ->
    /// (d_J, n_J), with in-block embedding columns re-ordered to the swapped
    /// row-major convention. Double application returns the original spec.
    pub fn commutant(&self) -> Self {
        let blocks: Vec<(usize, usize)> =
            self.spec.blocks().iter().map(|&(n, d)| (d, n)).collect();
        let d = self.dim();
        let offsets = self.spec.offsets();
        let w = self.spec.embedding();
        let mut w2 = CMat::zeros(d, d);
        for (bi, &(nj, dj)) in self.spec.blocks().iter().enumerate() {
            let off = offsets[bi];
            for p in 0..nj {
                for k in 0..dj {
                    w2.set_column(off + k * nj + p, &w.column(off + p * dj + k));
                }
            }
        }
        let spec = BlockSpec::new(blocks, Some(w2)).expect("commutant embedding stays unitary");
        Self::from_spec(spec)
    }

    /// Conditional expectation onto the commutant.
    pub fn project_commutant(&self, x: &CMat, method: Projection) -> Result<CMat> {
        let d = self.dim();
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::Dimension {
                context: "project_commutant",
                expected: d,
                got: x.nrows(),
            });
        }
        Ok(match method {
            Projection::Osr => {
                let mut acc = CMat::zeros(d, d);
                for e in &self.e_basis {
                    acc += e * x * e.adjoint();
                }
                acc
            }
            Projection::Gram => {
                let mut acc = CMat::zeros(d, d);
                for f in &self.f_basis {
                    let n2 = C64::from(f.norm_squared());
                    let overlap = f.dotc(x);
                    acc += f * (overlap / n2);
                }
                acc
            }
        })
    }

    pub fn dims_and_bounds(&self) -> DimsAndBounds {
        let d = self.dim();
        let da: usize = self.spec.blocks().iter().map(|&(_, dj)| dj * dj).sum();
        let dc: usize = self.spec.blocks().iter().map(|&(n, _)| n * n).sum();
        let bound = (1.0 - 1.0 / da as f64).min(1.0 - 1.0 / dc as f64);
        let d2 = (d * d) as f64;
        let typical = if d == 1 {
            0.0
        } else {
            (d2 - da as f64) * (d2 - dc as f64) / (d2 * (d2 - 1.0))
        };
        DimsAndBounds {
            dim_total: d,
            dim_algebra: da,
            dim_commutant: dc,
            bound,
            typical,
        }
    }

    /// True with the common ratio when every block satisfies d_J = λ·n_J for
    /// one integer λ.
    pub fn is_collinear(&self) -> (bool, Option<usize>) {
        let &(n0, d0) = &self.spec.blocks()[0];
        if d0 % n0 != 0 {
            return (false, None);
        }
        let lambda = d0 / n0;
        for &(n, d) in self.spec.blocks() {
            if d != lambda * n {
                return (false, None);
            }
        }
        (true, Some(lambda))
    }

    /// Algebra of operators diagonal in the given orthonormal basis.
    pub fn maximal_abelian(basis: &CMat) -> Result<Self> {
        let d = basis.nrows();
        if basis.ncols() != d {
            return Err(Error::Dimension {
                context: "maximal_abelian basis",
                expected: d,
                got: basis.ncols(),
            });
        }
        let spec = BlockSpec::new(vec![(1, 1); d], Some(basis.clone()))?;
        Ok(Self::from_spec(spec))
    }

    /// One block (dA, dB) in computational coordinates: the algebra is
    /// 1_A (x) full on the B factor.
    pub fn bipartite(da: usize, db: usize) -> Result<Self> {
        let spec = BlockSpec::new(vec![(da, db)], None)?;
        Ok(Self::from_spec(spec))
    }

    /// Two blocks (1,1), (1, d-1): the commutant is spanned by the state
    /// projector and its complement.
    pub fn projector_state(state: &CVec) -> Result<Self> {
        let d = state.len();
        if d < 2 {
            return Err(Error::InvalidInput(
                "projector algebra needs dimension at least 2".into(),
            ));
        }
        let nrm = state.norm();
        if (nrm - 1.0).abs() > tol::STRUCTURAL {
            return Err(Error::InvalidInput(format!(
                "state is not normalized (norm {nrm})"
            )));
        }
        // Complete the state to an orthonormal basis deterministically.
        let mut cols: Vec<CVec> = vec![state.clone()];
        for j in 0..d {
            let mut e = CVec::zeros(d);
            e[j] = C64::new(1.0, 0.0);
            cols.push(e);
        }
        let basis = mgs_orthonormalize(&cols, tol::RANK_CUT);
        if basis.len() != d {
            return Err(Error::Numerical(
                "basis completion around the state failed".into(),
            ));
        }
        let mut w = CMat::zeros(d, d);
        for (j, b) in basis.iter().enumerate() {
            w.set_column(j, b);
        }
        let spec = BlockSpec::new(vec![(1, 1), (1, d - 1)], Some(w))?;
        Ok(Self::from_spec(spec))
    }

    /// Blocks (1, d-d_D), (d_D, 1) around a decoherence-free subspace given by
    /// orthonormal columns; the commutant basis is the complement identity
    /// plus all matrix units inside the subspace.
    pub fn dfs(subspace: &CMat) -> Result<Self> {
        let d = subspace.nrows();
        let dd = subspace.ncols();
        if dd == 0 || dd >= d {
            return Err(Error::InvalidInput(format!(
                "subspace dimension {dd} must satisfy 0 < d_D < {d}"
            )));
        }
        let ortho_dev = (subspace.adjoint() * subspace - CMat::identity(dd, dd)).norm();
        if ortho_dev > tol::RANK_CUT {
            return Err(Error::InvalidInput(format!(
                "subspace columns are not orthonormal (deviation {ortho_dev:.3e})"
            )));
        }
        // Complement basis first (block 1), then the subspace columns.
        let mut cols: Vec<CVec> = (0..dd).map(|j| subspace.column(j).into_owned()).collect();
        for j in 0..d {
            let mut e = CVec::zeros(d);
            e[j] = C64::new(1.0, 0.0);
            cols.push(e);
        }
        let full = mgs_orthonormalize(&cols, tol::RANK_CUT);
        if full.len() != d {
            return Err(Error::Numerical(
                "basis completion around the subspace failed".into(),
            ));
        }
        let mut w = CMat::zeros(d, d);
        for (j, b) in full.iter().skip(dd).enumerate() {
            w.set_column(j, b);
        }
        for j in 0..dd {
            w.set_column(d - dd + j, &subspace.column(j));
        }
        let spec = BlockSpec::new(vec![(1, d - dd), (dd, 1)], Some(w))?;
        Ok(Self::from_spec(spec))
    }

    /// Column-stacked superoperator matrix of the commutant projector.
    pub fn commutant_projector_superop(&self) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d * d, d * d);
        for e in &self.e_basis {
            m += e.conjugate().kronecker(e);
        }
        m
    }
}

/// Replica-space average sum(b (x) b†) over a basis list.
pub fn omega(basis: &[CMat]) -> CMat {
    let d = basis[0].nrows();
    let mut acc = CMat::zeros(d * d, d * d);
    for b in basis {
        acc += b.kronecker(&b.adjoint());
    }
    acc
}

/// Swap operator on the doubled space, matching the kronecker index order.
pub fn swap_operator(d: usize) -> CMat {
    let mut s = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
        }
    }
    s
}
