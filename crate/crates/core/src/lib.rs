//! Tolerance-guided policy learning for pin-in-hole insertion.
//!
//! The crate is `no_std` (with `alloc`) so the numerical pieces can be embedded
//! anywhere; enable the `parallel` feature to fan rollouts and particle
//! weighting out over a rayon pool.
//!
//! Module map:
//!
//! - [`geometry`]: workpiece layouts, the tolerance set and its θ-surface raster.
//! - [`sim`]: the discrete-time insertion environment.
//! - [`experts`]: scripted safe and efficient demonstrators.
//! - [`nn`]: dense networks with reverse-mode gradients, the two-part policy.
//! - [`cmaes`]: covariance matrix adaptation evolution strategy.
//! - [`learning`]: behaviour cloning, RS-GAIL and the two-phase curriculum.
//! - [`embedding`]: the convolutional tolerance autoencoder.
//! - [`inference`]: particle posterior over pin defects and goal re-optimisation.
//! - [`eval`]: batch evaluation and summary statistics.
#![cfg_attr(not(feature = "std"), no_std)]
// Range checks are written `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cmaes;
pub mod embedding;
pub mod eval;
pub mod experts;
pub mod geometry;
pub mod inference;
pub mod learning;
pub mod math;
pub mod nn;
pub mod par;
pub mod rng;
pub mod sim;

pub use geometry::{DefectParams, PinShape, PlanarPose, ToleranceMap, WorkpieceSpec};
pub use sim::{Action, EnvConfig, EnvState, Observation, Policy};
