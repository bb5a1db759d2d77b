//! Solvers for large generalized Sylvester equations
//!
//! ```text
//! A X + X Bᵀ + Σᵢ Nᵢ X Mᵢᵀ = C₁ C₂ᵀ
//! ```
//!
//! whose coefficients satisfy low-rank commutation relations
//! `[A, Nᵢ] = Uᵢ Ũᵢᵀ`, `[B, Mᵢ] = Qᵢ Q̃ᵢᵀ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`dense`]: real Schur form, Bartels–Stewart, block Gram–Schmidt, factor
//!   truncation and the dense Kronecker oracle.
//! * [`operators`]: structured matrix operators, the problem type, residual
//!   factors, commutator factorization and spectral-radius estimation.
//! * [`neumann`]: Neumann-series solver for small dense problems.
//! * [`krylov`]: extended Krylov projection with commutator-aware starting
//!   blocks.
//! * [`diagnostics`]: low-rank approximability measurements.
//! * [`problems`]: benchmark generators (MIMO, low-rank, Helmholtz).

pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod krylov;
pub mod neumann;
pub mod operators;
pub mod problems;

pub use error::{Error, Result};

/// Dense column-major matrix used throughout the crate.
pub type Mat = nalgebra::DMatrix<f64>;
