//! Algebraic out-of-time-order correlators (A-OTOC) for finite-dimensional
//! quantum systems evolving under unital quantum channels.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: seeded RNG streams, Haar sampling, vectorization, dense and
//!   action-based matrix exponentials, deterministic reductions.
//! * [`algebra`]: block-decomposed operator algebras, their commutants,
//!   canonical orthogonal bases and conditional expectations.
//! * [`channel`]: unital quantum channels as superoperators, with Kraus,
//!   unitary and Lindblad constructors plus CPTP verification.
//! * [`aotoc`]: the correlator itself, through several independent routes
//!   (split/correlator, replica, Monte Carlo, 4-point, GAAC).
//! * [`closedforms`]: exactly solvable families used as oracles, including
//!   stabilizer dephasing and two analytic Lindblad flows.
//! * [`models`]: constrained PXP and periodic Heisenberg spin chains, series
//!   evaluation over time grids, and quadratic stability fits.
//! * [`config`]: run configuration, matrix file I/O and CSV output.
//! * [`validate`]: the acceptance checks shared by the test suite and the
//!   `validate` CLI subcommand.

pub mod algebra;
pub mod aotoc;
pub mod channel;
pub mod closedforms;
pub mod config;
pub mod models;
pub mod numerics;
pub mod validate;

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;

/// Centralized tolerances. Structural checks (unitarity of embeddings,
/// Hermiticity, basis orthonormality) sit near machine precision; numerical
/// checks (route agreement, channel invariants after a matrix exponential)
/// allow for accumulated roundoff.
pub mod tol {
    /// Exact-by-construction properties: embeddings, projector algebra, bases.
    pub const STRUCTURAL: f64 = 1e-12;
    /// Properties that survive one numerical pipeline (matexp, QR, sums).
    pub const NUMERICAL: f64 = 1e-10;
    /// Most negative admissible Choi eigenvalue for a CP verdict.
    pub const CHOI_NEG: f64 = 1e-10;
    /// Rank / null-space decisions on eigenvalues and Gram residuals.
    pub const RANK_CUT: f64 = 1e-8;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not unitary (deviation {dev:.3e})")]
    NotUnitary { dev: f64 },
    #[error("matrix is not Hermitian (deviation {dev:.3e})")]
    NotHermitian { dev: f64 },
    #[error("map is not trace preserving (deviation {dev:.3e})")]
    NotTracePreserving { dev: f64 },
    #[error("map is not unital (deviation {dev:.3e})")]
    NotUnital { dev: f64 },
    #[error("map is not completely positive (min Choi eigenvalue {min_eig:.3e})")]
    NotCompletelyPositive { min_eig: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
