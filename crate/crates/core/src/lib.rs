//! Linear-operator view of distributed ADMM and gradient descent for graph
//! consensus quadratics.
//!
//! For `f(z) = ½ Σ q_ij (z_i − z_j)²` over a connected graph, over-relaxed
//! ADMM iterates `nᵗ⁺¹ = T_A nᵗ` on edge copies and gradient descent iterates
//! `zᵗ⁺¹ = T_G zᵗ` on vertices. The crate builds both maps, checks that the
//! ADMM matrix lifts the GD matrix in the Markov chain sense, tunes both
//! methods for their spectral rates, and sweeps graph families to compare
//! the resulting convergence times.
//!
//! Matrix construction is generic over [`scalar::Scalar`], so the same code
//! runs in `f64`, `f32` or exact rationals; eigenvalues are computed in `f64`.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod export;
pub mod graphs;
pub mod lifting;
pub mod operators;
pub mod scalar;
pub mod spectral;
pub mod tuning;

pub use error::{Error, Result};
pub use scalar::{rational, Rational, Scalar};

pub type GraphF64 = graphs::Graph<f64>;
pub type GraphF32 = graphs::Graph<f32>;
pub type GraphExact = graphs::Graph<Rational>;
pub type FactorGraphF64 = graphs::FactorGraph<f64>;
pub type FactorGraphExact = graphs::FactorGraph<Rational>;
pub type LiftingPairF64 = operators::LiftingPair<f64>;
pub type LiftingPairExact = operators::LiftingPair<Rational>;
pub type AdmmParamsF64 = operators::AdmmParams<f64>;
pub type AdmmParamsExact = operators::AdmmParams<Rational>;
