//! Quantum channels as column-stacked superoperator matrices, plus Lindblad
//! generators and time propagation.
//!
//! Everything uses the column-stacking convention vec(A X B) = (Bᵀ ⊗ A) vec X,
//! which matches the column-major layout of the dense matrix type, so
//! `vec_op`/`unvec` are zero-cost reshapes.

use nalgebra::SymmetricEigen;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::numerics::{matexp, unvec, vec_op};
use crate::{tol, C64, CMat, Error, Result};

/// A channel acting on d×d operators, stored as its d²×d² superoperator.
#[derive(Clone, Debug)]
pub struct Channel {
    dim: usize,
    superop: CMat,
    /// True when the construction itself guarantees complete positivity
    /// (Kraus or unitary built), letting hot paths skip the Choi spectrum.
    structurally_cp: bool,
}

/// Structural report on a superoperator: whether it is unital and
/// trace-preserving (to within `tol::NUMERICAL`), whether its Choi matrix is
/// positive semidefinite (to within `tol::CHOI_NEG`), and the smallest Choi
/// eigenvalue found.
#[derive(Clone, Copy, Debug)]
pub struct ChannelCheck {
    pub unital: bool,
    pub trace_preserving: bool,
    pub cp: bool,
    pub unital_dev: f64,
    pub tp_dev: f64,
    pub min_choi_eig: f64,
}

impl ChannelCheck {
    pub fn all_ok(&self) -> bool {
        self.unital && self.trace_preserving && self.cp
    }
}

/// Lindblad data in the Schrödinger convention: a Hermitian Hamiltonian and a
/// list of jump operators, all d×d.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub hamiltonian: CMat,
    pub jumps: Vec<CMat>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: CMat, jumps: Vec<CMat>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d {
            return Err(Error::Dimension {
                context: "LindbladSpec hamiltonian",
                expected: d,
                got: hamiltonian.ncols(),
            });
        }
        let herm_dev = (&hamiltonian - hamiltonian.adjoint()).camax();
        if herm_dev > tol::STRUCTURAL {
            return Err(Error::NotHermitian { dev: herm_dev });
        }
        for l in &jumps {
            if l.nrows() != d || l.ncols() != d {
                return Err(Error::Dimension {
                    context: "LindbladSpec jump operator",
                    expected: d,
                    got: if l.nrows() != d { l.nrows() } else { l.ncols() },
                });
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

impl Channel {
    /// Channel from Kraus operators, required to be unital and
    /// trace-preserving: both sum K†K and sum K K† must equal the identity.
    pub fn from_kraus(kraus: &[CMat]) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidInput("empty Kraus list".into()));
        }
        let d = kraus[0].nrows();
        for k in kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::Dimension {
                    context: "Kraus operator",
                    expected: d,
                    got: if k.nrows() != d { k.nrows() } else { k.ncols() },
                });
            }
        }
        let eye = CMat::identity(d, d);
        let mut tp = CMat::zeros(d, d);
        let mut un = CMat::zeros(d, d);
        for k in kraus {
            tp += k.adjoint() * k;
            un += k * k.adjoint();
        }
        let tp_dev = (&tp - &eye).camax();
        if tp_dev > tol::NUMERICAL {
            return Err(Error::NotTracePreserving { dev: tp_dev });
        }
        let un_dev = (&un - &eye).camax();
        if un_dev > tol::NUMERICAL {
            return Err(Error::NotUnital { dev: un_dev });
        }
        let mut superop = CMat::zeros(d * d, d * d);
        for k in kraus {
            superop += k.conjugate().kronecker(k);
        }
        Ok(Self {
            dim: d,
            superop,
            structurally_cp: true,
        })
    }

    /// Conjugation X -> U X U†.
    pub fn from_unitary(u: &CMat) -> Result<Self> {
        let d = u.nrows();
        if u.ncols() != d {
            return Err(Error::Dimension {
                context: "from_unitary",
                expected: d,
                got: u.ncols(),
            });
        }
        let dev = (u.adjoint() * u - CMat::identity(d, d)).camax();
        if dev > tol::STRUCTURAL {
            return Err(Error::NotUnitary { dev });
        }
        Ok(Self {
            dim: d,
            superop: u.conjugate().kronecker(u),
            structurally_cp: true,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            superop: CMat::identity(d * d, d * d),
            structurally_cp: true,
        }
    }

    pub fn from_superop(superop: CMat) -> Result<Self> {
        let n = superop.nrows();
        if superop.ncols() != n {
            return Err(Error::Dimension {
                context: "from_superop",
                expected: n,
                got: superop.ncols(),
            });
        }
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::InvalidInput(format!(
                "superoperator size {n} is not a perfect square"
            )));
        }
        Ok(Self {
            dim: d,
            superop,
            structurally_cp: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superop(&self) -> &CMat {
        &self.superop
    }

    /// Apply the channel to an operator.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::Dimension {
                context: "Channel::apply",
                expected: self.dim,
                got: x.nrows(),
            });
        }
        Ok(unvec(&(&self.superop * vec_op(x)), self.dim))
    }

    /// Compose: (self ∘ other)(X) = self(other(X)).
    pub fn compose(&self, other: &Channel) -> Result<Channel> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                context: "Channel::compose",
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Channel {
            dim: self.dim,
            superop: &self.superop * &other.superop,
            structurally_cp: self.structurally_cp && other.structurally_cp,
        })
    }

    /// Adjoint channel with respect to the Hilbert–Schmidt inner product.
    pub fn adjoint(&self) -> Channel {
        Channel {
            dim: self.dim,
            superop: self.superop.adjoint(),
            structurally_cp: self.structurally_cp,
        }
    }

    /// Choi matrix C[(i,k),(j,l)] = sum over the superoperator reshuffle
    /// M[(l,k),(j,i)]; positive semidefinite exactly when the map is CP.
    pub fn choi(&self) -> CMat {
        let d = self.dim;
        let mut c = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    for l in 0..d {
                        c[(i * d + k, j * d + l)] = self.superop[(l * d + k, j * d + i)];
                    }
                }
            }
        }
        c
    }

    /// Structural verification: unitality, trace preservation, complete
    /// positivity via the Choi spectrum.
    pub fn verify(&self) -> ChannelCheck {
        let d = self.dim;
        let eye_vec = vec_op(&CMat::identity(d, d));
        let unital_dev = (&self.superop * &eye_vec - &eye_vec).camax();
        let tp_dev = (self.superop.adjoint() * &eye_vec - &eye_vec).camax();
        let choi = self.choi();
        // Hermitize before the symmetric eigensolver to shed roundoff.
        let herm = (&choi + choi.adjoint()) * C64::from(0.5);
        let eig = SymmetricEigen::new(herm);
        let min_choi_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        ChannelCheck {
            unital: unital_dev <= tol::NUMERICAL,
            trace_preserving: tp_dev <= tol::NUMERICAL,
            cp: min_choi_eig >= -tol::CHOI_NEG,
            unital_dev,
            tp_dev,
            min_choi_eig,
        }
    }

    /// Verification gate for correlator hot paths: unitality and trace
    /// preservation are always measured; complete positivity reuses the
    /// construction guarantee when one exists, falling back to the full
    /// Choi spectrum otherwise.
    pub(crate) fn quick_check(&self) -> ChannelCheck {
        if !self.structurally_cp {
            return self.verify();
        }
        let d = self.dim;
        let eye_vec = vec_op(&CMat::identity(d, d));
        let unital_dev = (&self.superop * &eye_vec - &eye_vec).camax();
        let tp_dev = (self.superop.adjoint() * &eye_vec - &eye_vec).camax();
        ChannelCheck {
            unital: unital_dev <= tol::NUMERICAL,
            trace_preserving: tp_dev <= tol::NUMERICAL,
            cp: true,
            unital_dev,
            tp_dev,
            min_choi_eig: 0.0,
        }
    }
}

/// Heisenberg-picture generator as a superoperator:
/// X -> i[H,X] + sum(L†XL − ½{L†L, X}).
pub fn lindblad_superop(spec: &LindbladSpec) -> CMat {
    let d = spec.dim();
    let eye = CMat::identity(d, d);
    let h = &spec.hamiltonian;
    let i = C64::new(0.0, 1.0);
    let mut m = (eye.kronecker(h) - h.transpose().kronecker(&eye)) * i;
    for l in &spec.jumps {
        let ldl = l.adjoint() * l;
        m += l.transpose().kronecker(&l.adjoint());
        m -= eye.kronecker(&ldl) * C64::from(0.5);
        m -= ldl.transpose().kronecker(&eye) * C64::from(0.5);
    }
    m
}

/// Append scale·A⊗B to the triplet list, skipping zero entries.
fn push_kron(coo: &mut CooMatrix<C64>, a: &CMat, b: &CMat, scale: C64) {
    let (br, bc) = (b.nrows(), b.ncols());
    let zero = C64::new(0.0, 0.0);
    for ja in 0..a.ncols() {
        for ia in 0..a.nrows() {
            let av = a[(ia, ja)];
            if av == zero {
                continue;
            }
            for jb in 0..bc {
                for ib in 0..br {
                    let bv = b[(ib, jb)];
                    if bv == zero {
                        continue;
                    }
                    coo.push(ia * br + ib, ja * bc + jb, scale * av * bv);
                }
            }
        }
    }
}

/// Sparse form of `lindblad_superop`, for large systems where the generator
/// is applied to vectors rather than exponentiated densely.
pub fn lindblad_superop_csr(spec: &LindbladSpec) -> CsrMatrix<C64> {
    let d = spec.dim();
    let eye = CMat::identity(d, d);
    let mut coo = CooMatrix::new(d * d, d * d);
    let i = C64::new(0.0, 1.0);
    push_kron(&mut coo, &eye, &spec.hamiltonian, i);
    push_kron(&mut coo, &spec.hamiltonian.transpose(), &eye, -i);
    let half = C64::from(-0.5);
    for l in &spec.jumps {
        let ldl = l.adjoint() * l;
        push_kron(&mut coo, &l.transpose(), &l.adjoint(), C64::new(1.0, 0.0));
        push_kron(&mut coo, &eye, &ldl, half);
        push_kron(&mut coo, &ldl.transpose(), &eye, half);
    }
    CsrMatrix::from(&coo)
}

/// Channel e^{t L} from a Lindblad generator, dense matrix exponential.
pub fn propagate(spec: &LindbladSpec, t: f64) -> Result<Channel> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!(
            "propagation time must be nonnegative, got {t}"
        )));
    }
    let gen = lindblad_superop(spec);
    let superop = matexp(&gen, t);
    Channel::from_superop(superop)
}

/// Convenience: qubit dephasing with flip probability p on the given basis.
pub fn dephasing_qubit(p: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "dephasing probability must lie in [0,1], got {p}"
        )));
    }
    let sz = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ],
    );
    let k0 = CMat::identity(2, 2) * C64::from((1.0 - p).sqrt());
    let k1 = sz * C64::from(p.sqrt());
    Channel::from_kraus(&[k0, k1])
}

/// Convenience: d-dimensional depolarizing channel with mixing weight p,
/// X -> (1-p) X + p Tr[X]/d · 1.
pub fn depolarizing(d: usize, p: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "depolarizing weight must lie in [0,1], got {p}"
        )));
    }
    let n = d * d;
    let eye_vec = vec_op(&CMat::identity(d, d));
    let mut superop = CMat::identity(n, n) * C64::from(1.0 - p);
    superop += (&eye_vec * eye_vec.adjoint()) * C64::from(p / d as f64);
    let mut ch = Channel::from_superop(superop)?;
    // A convex mixture of the identity map and the maximally mixing map.
    ch.structurally_cp = true;
    Ok(ch)
}

/// Convenience: pinching over a list of orthogonal projectors that sum to 1.
pub fn pinching(projectors: &[CMat]) -> Result<Channel> {
    Channel::from_kraus(projectors)
}
