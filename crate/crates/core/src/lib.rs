//! Numerical toolkit for variance-based uncertainty relations on
//! finite-dimensional quantum systems.
//!
//! The crate verifies, at machine precision, a family of statements about a
//! pair of observables `A`, `B` and a pure state |ψ⟩:
//!
//! * two *equalities* that decompose ΔA² + ΔB² and ΔA²·ΔB² over an
//!   orthonormal basis of the orthogonal complement of |ψ⟩,
//! * seven classical *inequalities* (Heisenberg-Robertson, Schrödinger,
//!   the Maccone-Pati sum bounds, and their phase-aligned refinements),
//! * an uncertainty relation for the non-Hermitian operators A_w = Π_φA/p
//!   arising in pre- and post-selected (weak-measurement) ensembles.
//!
//! Modules follow the data flow: [`numkernel`] is the dense complex
//! linear-algebra layer, [`ensembles`] generates seeded random states and
//! observables, [`relations`] evaluates the equalities and bounds, and
//! [`weakmeas`] covers the weak-measurement side.

pub mod ensembles;
pub mod numkernel;
pub mod relations;
pub mod weakmeas;

pub use numkernel::{CMatrix, CVector, ComplementBasis, C64};

/// Tolerances used across the crate.
///
/// Input validation is deliberately looser than identity checks: data that
/// arrives from outside (states, observables) is accepted within `INPUT`,
/// while quantities we construct ourselves must hold to `IDENTITY`.
pub mod tol {
    /// Normalization / Hermiticity tolerance for user-supplied inputs.
    pub const INPUT: f64 = 1e-10;
    /// Residual tolerance for identities that hold by construction
    /// (orthonormality, completeness, idempotence).
    pub const IDENTITY: f64 = 1e-12;
    /// Default relative tolerance for equality residuals.
    pub const RESIDUAL: f64 = 1e-9;
    /// Default relative tolerance for inequality gap violations.
    pub const GAP: f64 = 1e-8;
    /// Default post-selection overlap floor; keeps 1/p terms conditioned.
    pub const MIN_OVERLAP: f64 = 1e-3;
    /// Below this magnitude ⟨ĀB̄⟩ is treated as exactly zero and the phase
    /// α defaults to 0 (any phase is then valid).
    pub const CORR_DEGENERATE: f64 = 1e-14;
    /// Denominator collapse threshold for the quotient-form bounds.
    pub const DENOM_DEGENERATE: f64 = 1e-12;
    /// Variance floor below which the normalized-operator relations are
    /// not applicable.
    pub const VARIANCE_FLOOR: f64 = 1e-16;
    /// Relative gap below which a bound counts as saturated.
    pub const SATURATION: f64 = 1e-9;
    /// Tolerance for matching a complement basis to its anchor state.
    pub const ANCHOR: f64 = 1e-9;
}

/// Errors reported by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("dimension must be at least 2 (got {0})")]
    DimTooSmall(usize),
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("vector norm {norm:e} is not 1 within {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("state is not orthogonal to |psi>: |<psi|x>| = {overlap:e} exceeds {tol:e}")]
    NotOrthogonal { overlap: f64, tol: f64 },
    #[error("complement basis is not anchored at the supplied state")]
    BasisAnchorMismatch,
    #[error("variances too small for this relation: dA*dB = {0:e}")]
    DegenerateVariance(f64),
    #[error("post-selection overlap p = {p:e} below threshold {min:e}")]
    OverlapBelowThreshold { p: f64, min: f64 },
    #[error("term count {index} out of range 0..={max}")]
    TermOutOfRange { index: usize, max: usize },
    #[error("probe state coincides with |psi> (lambda = {lambda:e}) while k = {k} != 0")]
    DegenerateProbe { lambda: f64, k: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown operator name '{0}'")]
    UnknownOperator(String),
}

pub type Result<T> = std::result::Result<T, Error>;
