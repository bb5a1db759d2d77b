//! Extended Krylov projection for generalized Sylvester equations.
//!
//! The approximation `X ≈ 𝒱 Z 𝒲ᵀ` lives in extended Krylov spaces
//! `EK_k(A, C̄₁) = K_k(A, C̄₁) + K_k(A⁻¹, A⁻¹C̄₁)` (and likewise for `B`),
//! where the starting blocks `C̄` are enriched with the commutator factors
//! (or the factors of low-rank `Nᵢ`) so that the `Nᵢ`-images of the basis stay
//! close to the space. The small coefficient `Z` solves the Galerkin
//! projected equation.

mod basis;
mod gk;
mod inner;
mod projected;
mod solve;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use basis::{BlockInfo, ExtendedKrylovBasis};
pub use gk::{
    build_starting_blocks, build_starting_blocks_commutator, build_starting_blocks_lowrank,
    gk_basis, StartingBlockSet,
};
pub use inner::{gmres, solve_projected, GmresOutcome, InnerMethod, InnerState};
pub use projected::{
    cheap_residual_norm, check_projected_solvability, ProjectedProblem, ProjectedSide,
    SolvabilityCheck, SOLVABILITY_LIMIT,
};
pub use solve::{solve, solve_observed, IterationView};

/// How the starting blocks `C̄₁`, `C̄₂` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum StartingBlocks {
    /// `orth(GK_ℓ(N; C₁) + GK_{ℓ−1}(N; U))` from the commutator factors.
    Commutator { ell: usize },
    /// `orth(C₁, 𝒰₁, …, 𝒰ₘ)` from the factors of low-rank `Nᵢ`.
    LowRank,
    /// `orth(C₁)`, `orth(C₂)`.
    Plain,
    /// Commutator mode (ℓ = 1) when factors are attached, else low-rank mode
    /// when the terms are low rank, else plain.
    Auto,
}

/// Which residual norm drives the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMode {
    /// From the Arnoldi-like relations; cost independent of n.
    Cheap,
    /// From the residual factors via thin QR.
    True,
    /// Both; the true residual decides.
    Both,
    /// Cheap for Lyapunov-symmetric or structured-start runs, true otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    /// Relative residual target of the projected solve.
    pub tol: f64,
    /// Cap on Neumann terms.
    pub neumann_max_terms: usize,
    /// Largest projected dimension solved through the dense Kronecker system.
    pub kron_limit: usize,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            neumann_max_terms: crate::neumann::DEFAULT_MAX_TERMS,
            kron_limit: 40,
            gmres_restart: 60,
            gmres_max_iters: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Relative residual target `‖R‖_F / ‖C₁C₂ᵀ‖_F`.
    pub tol: f64,
    /// Maximum number of iterations.
    pub max_iters: usize,
    pub blocks: StartingBlocks,
    pub inner: InnerConfig,
    pub residual: ResidualMode,
    /// Initial relative truncation tolerance for the returned factors; it is
    /// tightened when truncation would push the residual above the target.
    pub truncation_tol: f64,
    /// Largest starting-block width; wider blocks are cut to their leading
    /// columns.
    pub max_block_width: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 100,
            blocks: StartingBlocks::Auto,
            inner: InnerConfig::default(),
            residual: ResidualMode::Auto,
            truncation_tol: 1e-8,
            max_block_width: 20,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.tol > 0.0) {
            return Err(crate::Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(crate::Error::Config("max_iters must be at least 1".into()));
        }
        if self.max_block_width == 0 {
            return Err(crate::Error::Config("max_block_width must be at least 1".into()));
        }
        if self.truncation_tol < 0.0 {
            return Err(crate::Error::Config("truncation_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// One row of the residual history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Relative cheap residual.
    pub cheap: Option<f64>,
    /// Relative true residual.
    pub true_res: Option<f64>,
    pub inner: InnerMethod,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerUsage {
    pub sylvester: usize,
    pub neumann: usize,
    pub kronecker: usize,
    pub gmres: usize,
    /// Outer iteration at which the Neumann series first diverged.
    #[serde(default)]
    pub neumann_diverged_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Stored length-n basis vectors: one space for Lyapunov-symmetric runs,
    /// both spaces otherwise.
    pub memory: usize,
    pub memory_left: usize,
    pub memory_right: usize,
    /// Rank of the truncated solution.
    pub rank: usize,
    /// Columns to which `A⁻¹` or `B⁻¹` was applied (same convention as
    /// `memory`).
    pub linear_solves: usize,
    pub linear_solves_left: usize,
    pub linear_solves_right: usize,
    /// Starting-block widths `r̄` of the two spaces.
    pub block_width_left: usize,
    pub block_width_right: usize,
    /// A single space was built and reused for both sides.
    pub symmetric: bool,
    /// The basis stopped growing before convergence.
    pub breakdown: bool,
    pub residual_mode: ResidualMode,
    pub history: Vec<IterationRecord>,
    /// Relative true residual of the returned (truncated) factors.
    pub final_residual: f64,
    pub inner: InnerUsage,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}
