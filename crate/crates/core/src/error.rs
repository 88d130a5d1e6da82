//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the spectral-geometry pipelines.
#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("dimension d = {0} is outside the supported range {1}")]
    UnsupportedDimension(usize, &'static str),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("operator is not certified self-adjoint: adjoint residual {0:.3e}")]
    NotSelfAdjoint(f64),

    #[error("operation requires a constant-coefficient operator")]
    NonConstantOperator,

    #[error("dense eigenproblem of size {size} exceeds the configured limit {limit}")]
    EigensizeLimit { size: usize, limit: usize },

    #[error("invalid rotation plane ({0}, {1}) for dimension {2}")]
    InvalidPlane(usize, usize, usize),

    #[error("frame angle must be periodic: linear coefficient {0} rejected")]
    NonPeriodicAngle(f64),

    #[error("grade decomposition residual {residual:.3e} exceeds tolerance {tol:.3e}; module is not irreducible")]
    GradeResidual { residual: f64, tol: f64 },

    #[error("classical symbol needs depth >= {needed}, has {depth}")]
    SymbolDepth { needed: usize, depth: usize },

    #[error("symbol orders {0} and {1} do not satisfy the required relation (sum {2})")]
    OrderMismatch(f64, f64, f64),

    #[error("homogeneity check failed: relative deviation {0:.3e}")]
    HomogeneityFailed(f64),

    #[error("evaluation grid reaches {reach:.3} but spectral data is only complete to {safe:.3}")]
    GridBeyondCutoff { reach: f64, safe: f64 },

    #[error("sample t = {t:.3e} is truncation-dominated: tail estimate {tail:.3e} vs tolerance {tol:.3e}")]
    TruncationDominated { t: f64, tail: f64, tol: f64 },

    #[error("scaling ladder enters the non-expandable region: lambda_min {lambda_min:.3} <= validity radius {radius:.3}")]
    LadderInsideRadius { lambda_min: f64, radius: f64 },

    #[error("homogeneous expansion residual {0:.3e} exceeds tolerance {1:.3e}")]
    ExpansionResidual(f64, f64),

    #[error("{count} heat-subtraction terms are too few to regularize the Mellin integral at s0 = {s0}")]
    RegularizationDepth { count: usize, s0: f64 },

    #[error("mollifier delta = {0:.3} exceeds the shortest closed geodesic 2π; periodic-orbit terms pollute coefficients")]
    MollifierSupport(f64),

    #[error("least-squares fit is ill-conditioned: condition number {0:.3e}")]
    IllConditionedFit(f64),

    #[error("residue route for k = {0} not implemented (expansion depth becomes unstable)")]
    ResidueDepth(usize),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, SpectraError>;
