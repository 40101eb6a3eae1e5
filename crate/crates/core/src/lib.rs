//! Pseudo-spectral laboratory for the stochastically forced, fractionally
//! dissipated 2D Euler equation in vorticity form,
//!
//! ```text
//! dω + (Λ^γ ω + u·∇ω) dt = σ dW,    ∇^⊥·u = ω,    on [-π, π]²,
//! ```
//!
//! together with the numerical checks built on it: moment growth,
//! exponential moments, smoothing, control-equation decay, shifted-equation
//! decay and the fractional Poincaré / commutator inequalities.

pub mod checkpoint;
pub mod dynamics;
pub mod error;
pub mod forcing;
pub mod inequalities;
pub mod observables;
pub mod rng;
pub mod runner;
pub mod special;
pub mod spectral;
pub mod stats;

pub use dynamics::{Dynamics, SimParams, TrajectoryState};
pub use error::{FelabError, Result};
pub use forcing::{ForcingConfig, ForcingSpec};
pub use spectral::{Grid2D, MultiplierSymbol, PhysicalField, SpectralField};
