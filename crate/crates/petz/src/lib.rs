//! Numerical toolkit for deciding when a quantum coarse-graining (a
//! trace-preserving completely positive map) is *sufficient* for a pair of
//! density matrices, and for extracting the algebraic structure that
//! sufficiency forces.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] — dense complex matrices, Hermitian eigendecomposition and
//!   functional calculus, tensor products and partial traces;
//! * [`channels`] — Kraus maps, Choi matrices, superoperators, the transpose
//!   map and the Petz dual of a channel;
//! * [`algebra`] — finite-dimensional *-algebras: fixed-point algebras of
//!   unital maps, Artin–Wedderburn block structure, modular stability,
//!   conditional expectations, and factorization of tensor-product unitaries;
//! * [`sufficiency`] — the sufficiency decision itself (recovery criterion and
//!   the modular/cocycle criterion), structure extraction and pull-back, and a
//!   generator for synthetic sufficient instances;
//! * [`entropy`] — von Neumann and relative entropy, the strong-subadditivity
//!   gap, and the decomposition of states saturating it;
//! * [`io`] / [`report`] — the JSON document format and deterministic reports
//!   used by the `petz` command-line tool.
//!
//! All computations are deterministic: randomised constructions take explicit
//! seeds, eigenbases are ordered and phase-fixed by convention, and reports
//! are byte-stable across runs.

pub mod algebra;
pub mod channels;
pub mod entropy;
pub mod io;
pub mod linalg;
pub mod random;
pub mod report;
pub mod sufficiency;

/// Default tolerances, from strictest (construction identities) to loosest
/// (verdict thresholds). Entry points that make a decision take an explicit
/// tolerance and default to these.
pub mod tol {
    /// Identities that hold by construction (e.g. eigendecomposition
    /// reconstruction, unitarity of accumulated transforms).
    pub const CONSTRUCTION: f64 = 1e-12;
    /// Algebraic closure and projection identities (span membership,
    /// projection defects, commutators inside an extracted algebra).
    pub const ALGEBRAIC: f64 = 1e-9;
    /// Verdict thresholds: sufficiency decisions, equality-case decisions.
    pub const VERDICT: f64 = 1e-8;
    /// Trace preservation / unitality checks on Kraus maps.
    pub const CHANNEL: f64 = 1e-10;
    /// Relative eigenvalue-gap threshold under which eigenvalues are grouped
    /// as degenerate (scaled by the spectral diameter).
    pub const DEGENERACY_REL: f64 = 1e-9;
    /// Relative threshold (scaled by the largest eigenvalue) below which a
    /// positive semidefinite matrix counts as non-invertible.
    pub const INVERTIBILITY_REL: f64 = 1e-10;
}

/// Default grid of modular-flow parameters `t` used by the cocycle criterion
/// and the stability checks.
pub const DEFAULT_T_GRID: [f64; 8] = [
    std::f64::consts::FRAC_1_PI,
    -std::f64::consts::FRAC_1_PI,
    0.5,
    -0.5,
    1.0,
    -1.0,
    2.0,
    -2.0,
];

/// Errors reported by the library.
///
/// The variants distinguish *invalid input* (dimension mismatches, failed
/// matrix-class validation) from *numerical breakdown* (iteration failure,
/// ambiguous rank decisions, internally inconsistent criteria). The CLI maps
/// the former to exit code 2 and the latter to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("matrix is not a density matrix: {0}")]
    NotDensity(String),
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("{what} is numerically singular (eigenvalue {eigenvalue:.3e} below threshold {threshold:.3e})")]
    NotInvertible {
        what: String,
        eigenvalue: f64,
        threshold: f64,
    },
    #[error("matrix function `{function}` undefined at eigenvalue {eigenvalue:.3e}")]
    FunctionDomain { function: &'static str, eigenvalue: f64 },
    #[error("eigenvalue iteration failed to converge")]
    EigenFailed,
    #[error("Kraus map is not trace preserving (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotTracePreserving { defect: f64, tol: f64 },
    #[error("map is not unital (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotUnital { defect: f64, tol: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("linear span is not closed as a *-algebra: {what} leaves the span (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotClosed { defect: f64, tol: f64, what: String },
    #[error("ambiguous numerical rank: eigenvalue {above:.3e} sits too close to the kernel window {window:.3e}")]
    AmbiguousKernel { above: f64, window: f64 },
    #[error("block dimensions are not integral: {0}")]
    NonIntegralBlocks(String),
    #[error("factorization residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    FactorizationResidual { residual: f64, tol: f64 },
    #[error(
        "sufficiency criteria disagree: cocycle deviation {ns_deviation:.3e} vs recovery deviation {recovery_deviation:.3e} at tolerance {tol:.3e}"
    )]
    CriteriaDisagreement {
        ns_deviation: f64,
        recovery_deviation: f64,
        tol: f64,
    },
    /// An identity that holds exactly in theory failed numerically on input
    /// that passed all preconditions.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid instance specification: {0}")]
    InvalidSpec(String),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CriteriaDisagreement { .. }
            | Error::EigenFailed
            | Error::AmbiguousKernel { .. }
            | Error::NonIntegralBlocks(..)
            | Error::FactorizationResidual { .. }
            | Error::NumericalBreakdown(..)
            | Error::NotClosed { .. } => 3,
            _ => 2,
        }
    }
}
