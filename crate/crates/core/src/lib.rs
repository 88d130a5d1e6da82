//! Spectral-coefficient computations for Dirac and Laplace type operators on
//! flat tori with twisted bundles.
//!
//! The torus `T^d` (side `2π` per axis, flat metric) carries operators of the
//! form `D = γ^j(∂_j + b_j) + ψ` acting on sections of a trivial bundle
//! `T^d × C^r`, with `γ^j` a complex Clifford module and `b_j`, `ψ`
//! matrix-valued trigonometric polynomials. Exact Fourier arithmetic and
//! per-mode diagonalization make every asymptotic-coefficient claim checkable
//! against independent routes:
//!
//! * mollified eigenvalue counting and least-squares coefficient fits,
//! * heat / resolvent trace ladders and Mellin-split zeta/eta residues,
//! * Wodzicki residues of symbol data on the cosphere bundle,
//! * closed forms from the hat map `ψ̂ = Σ_k γ^k ψ γ^k` and the
//!   Bochner–Weitzenböck decomposition `D² = Δ^{∇_ψ} + V_ψ`.
//!
//! Modules follow the pipeline: [`clifford`] (algebra), [`frames`]
//! (orthonormal frames and massless Dirac operators), [`operators`] (operator
//! model, symbols, subprincipal symbols), [`spectral`] (eigendata),
//! [`asymptotics`] (coefficient extraction), [`residue`] (noncommutative
//! residues).

pub mod asymptotics;
pub mod clifford;
pub mod error;
pub mod fields;
pub mod frames;
pub mod numeric;
pub mod operators;
pub mod residue;
pub mod spectral;
pub mod symbols;

pub use error::SpectraError;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;

/// Torus period per axis. Everything in the crate assumes side-2π tori.
pub const TORUS_PERIOD: f64 = 2.0 * std::f64::consts::PI;
