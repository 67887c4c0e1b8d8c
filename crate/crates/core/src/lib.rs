//! Occlusion-aware driving on urban roads with parked cars and hidden
//! pedestrians: visibility, emergence estimation, risk zones, a
//! finite-state speed policy with jerk-limited LQR tracking, baselines and
//! a seeded Monte Carlo harness.

// Range checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod control;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod perception;
pub mod riskzones;
pub mod visibility;
pub mod world;

pub use config::RunConfig;
pub use control::{ControllerKind, FsmState};
pub use world::{Family, WorldState};
