//! Jerk-limited state-feedback tracking of a velocity or stand-off target.

use serde::{Deserialize, Serialize};

use super::lqr::GainSet;
use super::ControlCommand;
use crate::world::EgoState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrackingTarget {
    /// Track `v_ref` with state `[v; a]`.
    Cruise { v_ref: f64 },
    /// Close the gap `d` down to `d_ref` and stop, state `[d; v; a]`.
    Yield { d: f64, d_ref: f64 },
}

/// Accelerations reachable from `a_prev` in one tick with jerk `j_limit`,
/// intersected with `[-a_limit, a_limit]` when that intersection is not
/// empty. The jerk window always wins.
pub fn limit_acceleration(candidate: f64, a_prev: f64, a_limit: f64, j_limit: f64, dt: f64) -> f64 {
    let lo = a_prev - j_limit * dt;
    let hi = a_prev + j_limit * dt;
    candidate.clamp(-a_limit, a_limit).clamp(lo, hi)
}

/// One tracking step.
///
/// The feedback input `u = -K (x - x_ref)` is clamped to
/// `[-j_limit, j_limit]`, scaled by the model's jerk scale and integrated
/// over `dt`; the resulting physical jerk is clamped to `j_limit` as well,
/// so `|accel_out - a_prev| <= j_limit * dt` always holds.
pub fn track(command: &ControlCommand, ego: &EgoState, target: &TrackingTarget, gains: &GainSet, dt: f64) -> f64 {
    let a_prev = ego.acceleration;
    let (u, scale) = match *target {
        TrackingTarget::Cruise { v_ref } => {
            let [kv, ka] = gains.cruise;
            (-(kv * (ego.velocity - v_ref) + ka * a_prev), gains.j_cruise)
        }
        TrackingTarget::Yield { d, d_ref } => {
            let [kd, kv, ka] = gains.yielding;
            (-(kd * (d - d_ref) + kv * ego.velocity + ka * a_prev), gains.j_yield)
        }
    };
    let j = command.j_limit;
    let u = if u.is_finite() { u.clamp(-j, j) } else { 0.0 };
    let jerk = (scale * u).clamp(-j, j);
    limit_acceleration(a_prev + dt * jerk, a_prev, command.a_limit, j, dt)
}
