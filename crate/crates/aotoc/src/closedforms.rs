//! Analytic reference values: the coherence-generating-power form on a
//! maximal abelian algebra, two exactly-solvable qubit Lindbladians, the
//! rank-1-projector (echo) algebra, and stabilizer-group dephasing with a
//! tunable number χ of in-sector projectors.

use crate::algebra::{AlgebraHandle, BlockSpec};
use crate::channel::{Channel, LindbladSpec};
use crate::numerics::{haar_unitary, mgs_orthonormalize, stream_rng, tree_sum_c64, tree_sum_f64};
use crate::{tol, C64, CMat, CVec, Error, Result};

/// Basis-averaged coherence production of a unital channel:
/// (1/d)(Σ_μ ‖E(P_μ)‖₂² − Σ_{μμ'} |Tr[P_μ' E(P_μ)]|²) over the rank-1
/// projectors P_μ of the given orthonormal basis. Equals the correlator of
/// the maximal abelian algebra of that basis.
pub fn cgp(basis: &CMat, e: &Channel) -> Result<f64> {
    let d = basis.nrows();
    if basis.ncols() != d {
        return Err(Error::Dimension {
            context: "cgp basis",
            expected: d,
            got: basis.ncols(),
        });
    }
    if e.dim() != d {
        return Err(Error::Dimension {
            context: "cgp channel",
            expected: d,
            got: e.dim(),
        });
    }
    let ortho_dev = (basis.adjoint() * basis - CMat::identity(d, d)).camax();
    if ortho_dev > tol::STRUCTURAL {
        return Err(Error::NotUnitary { dev: ortho_dev });
    }
    let images: Vec<CMat> = (0..d)
        .map(|mu| {
            let v = basis.column(mu);
            e.apply(&(&v * v.adjoint()))
        })
        .collect::<Result<_>>()?;
    let term1: Vec<f64> = images.iter().map(|m| m.norm_squared()).collect();
    let mut term2 = Vec::with_capacity(d * d);
    for mu_p in 0..d {
        let v = basis.column(mu_p);
        for img in &images {
            // Tr[P E(P')] = <v| E(P') |v>
            term2.push((v.adjoint() * img * v)[(0, 0)].norm_sqr());
        }
    }
    Ok((tree_sum_f64(&term1) - tree_sum_f64(&term2)) / d as f64)
}

/// Walsh–Hadamard transform on n qubits, entries ±2^{-n/2}.
pub fn hadamard_all(n: usize) -> CMat {
    let d = 1usize << n;
    let scale = 1.0 / (d as f64).sqrt();
    CMat::from_fn(d, d, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        C64::from(sign * scale)
    })
}

/// n-qubit mixing semigroup: zero Hamiltonian, single unitary jump equal to
/// the Walsh–Hadamard transform, so the generator acts as conjugation minus
/// identity. Returns the generator data and the exact correlator value of the
/// computational-basis maximal abelian algebra at time t:
/// β(t)²·(1 − 2^{−n}) with β(t) = (1 − e^{−2t})/2.
pub fn example1(n: usize, t: f64) -> Result<(LindbladSpec, f64)> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one qubit".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be ≥ 0, got {t}")));
    }
    let d = 1usize << n;
    let spec = LindbladSpec::new(CMat::zeros(d, d), vec![hadamard_all(n)])?;
    let beta = (1.0 - (-2.0 * t).exp()) / 2.0;
    let g = beta * beta * (1.0 - 1.0 / d as f64);
    Ok((spec, g))
}

/// n-qubit damped-oscillation model: Hamiltonian X^{⊗n}, dephasing jumps
/// √λ·Π onto its rank-1 product eigenbasis (the ± product states). The exact
/// correlator of the computational-basis maximal abelian algebra is
/// e^{−2λt}·sin²(2t)/2 at every n.
pub fn example2(n: usize, lambda: f64, t: f64) -> Result<(LindbladSpec, f64)> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one qubit".into()));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "rate must be ≥ 0, got {lambda}"
        )));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be ≥ 0, got {t}")));
    }
    let d = 1usize << n;
    // X^{⊗n} maps |b> to |complement of b>.
    let mut h = CMat::zeros(d, d);
    for b in 0..d {
        h[(b ^ (d - 1), b)] = C64::new(1.0, 0.0);
    }
    // Its rank-1 eigenprojectors: the ± product states, i.e. the columns of
    // the Walsh–Hadamard transform.
    let had = hadamard_all(n);
    let root = lambda.sqrt();
    let jumps: Vec<CMat> = (0..d)
        .map(|s| {
            let v = had.column(s);
            (&v * v.adjoint()) * C64::from(root)
        })
        .collect();
    let spec = LindbladSpec::new(h, jumps)?;
    let s2 = (2.0 * t).sin();
    let g = (-2.0 * lambda * t).exp() * s2 * s2 / 2.0;
    Ok((spec, g))
}

/// Echo-algebra value for a rank-1 projector Π:
/// (2/d)(‖E(Π)‖₂² − (L(dL−2)+1)/(d−1)) with L = Tr[Π E(Π)]. Equals the
/// correlator of the two-block algebra split by Π.
pub fn loschmidt_g(e: &Channel, proj: &CMat) -> Result<f64> {
    let d = e.dim();
    if proj.nrows() != d || proj.ncols() != d {
        return Err(Error::Dimension {
            context: "loschmidt projector",
            expected: d,
            got: proj.nrows(),
        });
    }
    if d < 2 {
        return Err(Error::InvalidInput("need dimension at least 2".into()));
    }
    let idem_dev = (proj * proj - proj).camax();
    if idem_dev > tol::NUMERICAL {
        return Err(Error::InvalidInput(format!(
            "projector is not idempotent (deviation {idem_dev:.3e})"
        )));
    }
    let tr = proj.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol::NUMERICAL {
        return Err(Error::InvalidInput(format!(
            "projector must have rank 1, got trace {tr}"
        )));
    }
    let img = e.apply(proj)?;
    let l2 = (proj.adjoint() * &img).trace().re;
    let df = d as f64;
    Ok((2.0 / df) * (img.norm_squared() - (l2 * (df * l2 - 2.0) + 1.0) / (df - 1.0)))
}

/// A signed n-qubit Pauli word in symplectic form: the operator is
/// i^{phase_pow} · X(x) · Z(z), where bit (n−1−j) of each mask belongs to
/// qubit j (leftmost word character).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase_pow: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: 0,
            z: 0,
            phase_pow: 0,
        }
    }

    /// Parse a word over {I, X, Y, Z}; the first character is qubit 0.
    pub fn from_word(word: &str) -> Result<Self> {
        let n = word.len();
        if n == 0 || n > 16 {
            return Err(Error::InvalidInput(format!(
                "Pauli word length must be in 1..=16, got {n}"
            )));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        let mut phase_pow = 0u8;
        for (j, ch) in word.chars().enumerate() {
            let bit = 1u64 << (n - 1 - j);
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    // Y = i·X·Z
                    x |= bit;
                    z |= bit;
                    phase_pow = (phase_pow + 1) % 4;
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "invalid Pauli character '{other}' (expected I, X, Y or Z)"
                    )))
                }
            }
        }
        Ok(Self { n, x, z, phase_pow })
    }

    pub fn word(&self) -> String {
        (0..self.n)
            .map(|j| {
                let bit = 1u64 << (self.n - 1 - j);
                match ((self.x & bit) != 0, (self.z & bit) != 0) {
                    (false, false) => 'I',
                    (true, false) => 'X',
                    (false, true) => 'Z',
                    (true, true) => 'Y',
                }
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Group product with phase tracking: Z(z₁)X(x₂) = (−1)^{|z₁∧x₂|}X(x₂)Z(z₁).
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let swaps = (self.z & other.x).count_ones() as u8;
        Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase_pow: (self.phase_pow + other.phase_pow + 2 * (swaps % 2)) % 4,
        }
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let a = (self.z & other.x).count_ones();
        let b = (self.x & other.z).count_ones();
        (a + b) % 2 == 0
    }

    /// ±1 for Hermitian strings; error when the phase is imaginary.
    pub fn sign(&self) -> Result<f64> {
        match self.phase_pow {
            0 => Ok(1.0),
            2 => Ok(-1.0),
            _ => Err(Error::InvalidInput(format!(
                "Pauli string {} carries an imaginary phase",
                self.word()
            ))),
        }
    }

    /// GF(2) symplectic coordinates, for independence checks.
    fn symplectic(&self) -> u128 {
        ((self.x as u128) << 64) | self.z as u128
    }

    pub fn matrix(&self) -> CMat {
        let d = 1usize << self.n;
        let phase = match self.phase_pow {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        let mut m = CMat::zeros(d, d);
        for b in 0..d {
            let sign = if (self.z & b as u64).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(b ^ self.x as usize, b)] = phase * C64::from(sign);
        }
        m
    }
}

/// An abelian group of 2^{n−k} commuting self-inverse Pauli strings, with the
/// simultaneous-eigenspace (sector) projectors and a fixed orthonormal basis
/// of each 2^k-dimensional sector.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    n: usize,
    k: usize,
    generators: Vec<PauliString>,
    elements: Vec<PauliString>,
    projectors: Vec<CMat>,
    bases: Vec<CMat>,
}

/// Builds the group from n−k generator words, enumerating all subset
/// products, the sign table of the sectors, and per-sector projectors
/// Q_J = 2^{−(n−k)} Σ_μ χ_J(S_μ)·S_μ.
pub fn build_stabilizer(n: usize, k: usize, generator_words: &[String]) -> Result<StabilizerGroup> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidInput(format!(
            "qubit count must be in 1..=16, got {n}"
        )));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "logical count k = {k} exceeds qubit count n = {n}"
        )));
    }
    if generator_words.len() != n - k {
        return Err(Error::InvalidInput(format!(
            "expected {} generators for (n={n}, k={k}), got {}",
            n - k,
            generator_words.len()
        )));
    }
    let mut generators = Vec::with_capacity(n - k);
    for w in generator_words {
        let p = PauliString::from_word(w)?;
        if p.n() != n {
            return Err(Error::InvalidInput(format!(
                "generator '{w}' has length {} but n = {n}",
                p.n()
            )));
        }
        let sq = p.mul(&p);
        if sq.x != 0 || sq.z != 0 || sq.phase_pow != 0 {
            return Err(Error::InvalidInput(format!(
                "generator '{w}' does not square to the identity"
            )));
        }
        if p.x == 0 && p.z == 0 {
            return Err(Error::InvalidInput(format!(
                "generator '{w}' is the identity and cannot be independent"
            )));
        }
        generators.push(p);
    }
    for i in 0..generators.len() {
        for j in (i + 1)..generators.len() {
            if !generators[i].commutes_with(&generators[j]) {
                return Err(Error::InvalidInput(format!(
                    "generators '{}' and '{}' do not commute",
                    generators[i].word(),
                    generators[j].word()
                )));
            }
        }
    }
    // GF(2) independence by Gaussian elimination on symplectic coordinates.
    let mut pivots: Vec<u128> = Vec::new();
    for g in &generators {
        let mut v = g.symplectic();
        for p in &pivots {
            let lead = 127 - p.leading_zeros() as usize;
            if (v >> lead) & 1 == 1 {
                v ^= p;
            }
        }
        if v == 0 {
            return Err(Error::InvalidInput(format!(
                "generator '{}' is a product of earlier generators",
                g.word()
            )));
        }
        pivots.push(v);
        pivots.sort_unstable_by(|a, b| b.cmp(a));
    }
    let n_sectors = 1usize << (n - k);
    // Subset-product enumeration; commuting factors make the order immaterial.
    let mut elements = vec![PauliString::identity(n); n_sectors];
    for m in 1..n_sectors {
        let low = m.trailing_zeros() as usize;
        let rest = elements[m & (m - 1)];
        elements[m] = generators[low].mul(&rest);
        elements[m].sign()?; // must stay Hermitian (±1)
    }
    // Sector J's sign for generator g is read from bit (n−k−1−g) of J, so the
    // last generator's sign alternates fastest.
    let d = 1usize << n;
    let element_mats: Vec<CMat> = elements.iter().map(|p| p.matrix()).collect();
    let mut projectors = Vec::with_capacity(n_sectors);
    let norm = 1.0 / n_sectors as f64;
    for j_idx in 0..n_sectors {
        let mut jm = 0usize;
        for g in 0..(n - k) {
            if (j_idx >> (n - k - 1 - g)) & 1 == 1 {
                jm |= 1 << g;
            }
        }
        let mut q = CMat::zeros(d, d);
        for (m, mat) in element_mats.iter().enumerate() {
            let chi = if (m & jm).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            q += mat * C64::from(chi * norm);
        }
        let idem_dev = (&q * &q - &q).camax();
        if idem_dev > tol::NUMERICAL {
            return Err(Error::Numerical(format!(
                "sector projector {j_idx} is not idempotent (deviation {idem_dev:.3e})"
            )));
        }
        let rank = q.trace().re;
        if (rank - (1usize << k) as f64).abs() > tol::NUMERICAL {
            return Err(Error::Numerical(format!(
                "sector projector {j_idx} has rank {rank}, expected {}",
                1usize << k
            )));
        }
        projectors.push(q);
    }
    let mut total = CMat::zeros(d, d);
    for q in &projectors {
        total += q;
    }
    if (total - CMat::identity(d, d)).camax() > tol::NUMERICAL {
        return Err(Error::Numerical(
            "sector projectors do not sum to the identity".into(),
        ));
    }
    // Deterministic per-sector bases: orthonormalize the projector's columns
    // in index order.
    let sector_dim = 1usize << k;
    let mut bases = Vec::with_capacity(n_sectors);
    for q in &projectors {
        let cols: Vec<CVec> = (0..d).map(|c| q.column(c).into_owned()).collect();
        let ortho = mgs_orthonormalize(&cols, tol::RANK_CUT);
        if ortho.len() != sector_dim {
            return Err(Error::Numerical(format!(
                "sector basis has {} vectors, expected {sector_dim}",
                ortho.len()
            )));
        }
        let mut b = CMat::zeros(d, sector_dim);
        for (c, v) in ortho.iter().enumerate() {
            b.set_column(c, v);
        }
        bases.push(b);
    }
    Ok(StabilizerGroup {
        n,
        k,
        generators,
        elements,
        projectors,
        bases,
    })
}

impl StabilizerGroup {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn sector_projectors(&self) -> &[CMat] {
        &self.projectors
    }

    pub fn sector_bases(&self) -> &[CMat] {
        &self.bases
    }

    /// The algebra whose commutant is spanned by the group elements: one
    /// (1, 2^k) block per sector, embedded by the sector bases, so the
    /// canonical commutant basis is exactly the sector identities.
    pub fn algebra(&self) -> Result<AlgebraHandle> {
        let d = 1usize << self.n;
        let sector_dim = 1usize << self.k;
        let n_sectors = 1usize << (self.n - self.k);
        let mut w = CMat::zeros(d, d);
        for (j, b) in self.bases.iter().enumerate() {
            for c in 0..sector_dim {
                w.set_column(j * sector_dim + c, &b.column(c));
            }
        }
        let spec = BlockSpec::new(vec![(1, sector_dim); n_sectors], Some(w))?;
        Ok(AlgebraHandle::from_spec(spec))
    }
}

/// Rank-1 dephasing adapted to the group's sectors: χ projectors inside each
/// sector (onto its first χ basis states), and discrete-Fourier cross-sector
/// superpositions for the remaining 2^k − χ basis slots, 2^n projectors in
/// total. A seed rotates each sector basis by an independent Haar unitary
/// first; `None` keeps the canonical bases.
pub fn dephasing_chi(group: &StabilizerGroup, chi: usize, seed: Option<u64>) -> Result<Channel> {
    let sector_dim = 1usize << group.k;
    let n_sectors = 1usize << (group.n - group.k);
    let d = 1usize << group.n;
    if chi > sector_dim {
        return Err(Error::InvalidInput(format!(
            "χ = {chi} exceeds the sector dimension {sector_dim}"
        )));
    }
    let bases: Vec<CMat> = match seed {
        None => group.bases.clone(),
        Some(s) => group
            .bases
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let mut rng = stream_rng(s, j as u64);
                b * haar_unitary(sector_dim, &mut rng)
            })
            .collect(),
    };
    let mut projectors = Vec::with_capacity(d);
    for b in &bases {
        for j in 0..chi {
            let v = b.column(j);
            projectors.push(&v * v.adjoint());
        }
    }
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / n_sectors as f64);
    let weight = C64::from(1.0 / (n_sectors as f64).sqrt());
    for j in chi..sector_dim {
        for alpha in 0..n_sectors {
            let mut v = CVec::zeros(d);
            for (jj, b) in bases.iter().enumerate() {
                v += b.column(j) * (omega.powu((alpha * jj) as u32) * weight);
            }
            projectors.push(&v * v.adjoint());
        }
    }
    let mut total = CMat::zeros(d, d);
    for p in &projectors {
        total += p;
    }
    let dev = (total - CMat::identity(d, d)).camax();
    if dev > tol::NUMERICAL {
        return Err(Error::Numerical(format!(
            "dephasing projectors do not resolve the identity (deviation {dev:.3e})"
        )));
    }
    Channel::from_kraus(&projectors)
}

/// Closed-form sector-dephasing value (1 − 2^k/2^n)·(χ/2^k)·(1 − χ/2^k).
pub fn stabilizer_formula(n: usize, k: usize, chi: usize) -> Result<f64> {
    if k > n {
        return Err(Error::InvalidInput(format!(
            "logical count k = {k} exceeds qubit count n = {n}"
        )));
    }
    let sector_dim = (1usize << k) as f64;
    let d = (1usize << n) as f64;
    let chi_f = chi as f64;
    if chi_f > sector_dim {
        return Err(Error::InvalidInput(format!(
            "χ = {chi} exceeds the sector dimension {sector_dim}"
        )));
    }
    Ok((1.0 - sector_dim / d) * (chi_f / sector_dim) * (1.0 - chi_f / sector_dim))
}

/// Group-element route: evaluates the correlator over the normalized element
/// basis, 2^k/2^{2n}·Σ⟨S, E(S)⟩ − 2^k/2^{3n}·ΣΣ|⟨S', E(S)⟩|². Validation
/// path against `stabilizer_formula` and the block route.
pub fn stabilizer_overlap_form(group: &StabilizerGroup, e: &Channel) -> Result<f64> {
    let d = 1usize << group.n;
    if e.dim() != d {
        return Err(Error::Dimension {
            context: "stabilizer channel",
            expected: d,
            got: e.dim(),
        });
    }
    let mats: Vec<CMat> = group.elements.iter().map(|p| p.matrix()).collect();
    let images: Vec<CMat> = mats.iter().map(|m| e.apply(m)).collect::<Result<_>>()?;
    let diag: Vec<C64> = mats
        .iter()
        .zip(&images)
        .map(|(s, img)| s.dotc(img))
        .collect();
    let mut cross = Vec::with_capacity(mats.len() * mats.len());
    for s_p in &mats {
        for img in &images {
            cross.push(s_p.dotc(img).norm_sqr());
        }
    }
    let sector_dim = (1usize << group.k) as f64;
    let df = d as f64;
    let term1 = sector_dim / (df * df) * tree_sum_c64(&diag).re;
    let term2 = sector_dim / (df * df * df) * tree_sum_f64(&cross);
    Ok(term1 - term2)
}
