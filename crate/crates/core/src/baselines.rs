//! Occlusion-unaware baseline speed rules. They share the yield and
//! emergency sub-machine with the proposed controller and never look at
//! emergence probabilities.

use serde::{Deserialize, Serialize};

use crate::control::policy::{DriveChoice, PolicyThresholds};
use crate::control::FsmState;
use crate::perception::Perception;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineId {
    B1,
    B2,
    B3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub id: BaselineId,
    /// Fraction of the speed limit when slowed (B2 always, B3 near a
    /// crosswalk).
    pub fraction: f64,
    /// B3 slows when a visible crosswalk begins within this distance ahead.
    pub crosswalk_slow_distance: f64,
}

impl BaselineSpec {
    pub fn new(id: BaselineId, crosswalk_slow_distance: f64) -> Self {
        let fraction = match id {
            BaselineId::B1 => 1.0,
            BaselineId::B2 => 2.0 / 3.0,
            BaselineId::B3 => 1.0 / 3.0,
        };
        Self {
            id,
            fraction,
            crosswalk_slow_distance,
        }
    }
}

fn crosswalk_near(p: &Perception, slow_distance: f64) -> bool {
    p.crosswalk
        .is_some_and(|(lo, hi)| hi >= p.ego_front && lo - p.ego_front <= slow_distance)
}

/// Reference speed of a baseline; the state is always NormalDrive.
pub fn baseline_drive(spec: &BaselineSpec, p: &Perception, thresholds: &PolicyThresholds) -> DriveChoice {
    let fraction = match spec.id {
        BaselineId::B1 => 1.0,
        BaselineId::B2 => spec.fraction,
        BaselineId::B3 if crosswalk_near(p, spec.crosswalk_slow_distance) => spec.fraction,
        BaselineId::B3 => 1.0,
    };
    DriveChoice {
        state: FsmState::NormalDrive,
        v_ref: fraction * p.speed_limit,
        a_limit: thresholds.normal_a_limit,
        j_limit: thresholds.normal_j_limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::EgoState;

    fn perception(crosswalk: Option<(f64, f64)>) -> Perception {
        Perception {
            ego: EgoState {
                longitudinal_position: 0.0,
                velocity: 8.0,
                acceleration: 0.0,
                previous_jerk: 0.0,
            },
            ego_front: 2.25,
            ego_rear: -2.25,
            ego_lateral_span: (0.6, 2.4),
            speed_limit: 30.0 / 3.6,
            a_max: 0.8 * 9.81,
            r_visible: 40.0,
            pedestrians: vec![],
            parked_cars: vec![],
            crosswalk,
        }
    }

    #[test]
    fn empty_road_speeds() {
        let th = PolicyThresholds::default();
        let p = perception(None);
        let v = |id| baseline_drive(&BaselineSpec::new(id, 20.0), &p, &th).v_ref;
        assert!((v(BaselineId::B1) - 8.333).abs() < 1e-3);
        assert!((v(BaselineId::B2) - 5.556).abs() < 1e-3);
        assert!((v(BaselineId::B3) - 8.333).abs() < 1e-3);
    }

    #[test]
    fn b3_slows_for_near_crosswalk() {
        let th = PolicyThresholds::default();
        let near = perception(Some((17.25, 21.25)));
        let far = perception(Some((40.0, 44.0)));
        let spec = BaselineSpec::new(BaselineId::B3, 20.0);
        assert!((baseline_drive(&spec, &near, &th).v_ref - 2.778).abs() < 1e-3);
        assert!((baseline_drive(&spec, &far, &th).v_ref - 8.333).abs() < 1e-3);
    }
}
