//! Numerical ergodic theory for holomorphic endomorphisms of P².
//!
//! The crate samples the equilibrium measure of a map by backward
//! iteration, estimates Lyapunov exponents and entropy, builds Oseledec
//! frames and local normal-form charts, computes slices of the Green
//! current on grids, and estimates pointwise and directional dimensions.
//! [`verify`] compares all of this with the known dimension inequalities.

pub mod current_slices;
pub mod dimension_estimators;
pub mod entropy_tools;
pub mod ergodic_sampler;
pub mod error;
pub mod green_potential;
pub mod linalg;
pub mod map_zoo;
pub mod oseledec_frames;
pub mod preimage_solver;
pub mod projective_core;
pub mod verify;

pub use error::{Error, Result};
pub use projective_core::{ChartPoint, HomogeneousMap, HomogeneousPoint, C64};
