//! Risk scan over the look-ahead and the yield / emergency supervisor.

use serde::{Deserialize, Serialize};

use super::fsm::FsmState;
use super::ttc::PathConflict;
use crate::error::ConfigError;
use crate::estimator::{emergence_probability, observe_at, EmergenceWeights, ObservationParams};
use crate::perception::Perception;
use crate::riskzones::{RiskZones, Zone};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneThresholds {
    pub l_cautious: f64,
    pub l_steady: f64,
    pub a_limit: f64,
    pub j_limit: f64,
}

impl ZoneThresholds {
    fn validate(&self, zone: &str) -> Result<(), ConfigError> {
        let ok = (0.0..=1.0).contains(&self.l_cautious)
            && (0.0..=1.0).contains(&self.l_steady)
            && self.l_cautious < self.l_steady
            && self.a_limit > 0.0
            && self.j_limit > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ConfigError::invalid(format!(
                "{zone} thresholds need 0 <= l_cautious < l_steady <= 1 and positive limits, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyThresholds {
    pub danger: ZoneThresholds,
    pub discomfort: ZoneThresholds,
    /// Speed fraction in SteadyDrive (highest risk).
    pub alpha1: f64,
    /// Speed fraction in CautiousDrive.
    pub alpha2: f64,
    pub ttc_stop: f64,
    pub ttc_emergency: f64,
    /// Scan resolution in meters.
    pub delta_d: f64,
    /// Distance kept to a pedestrian's crossing line when yielding.
    pub yield_standoff: f64,
    /// Widening of the ego's lateral band for the in-path test.
    pub lateral_margin: f64,
    pub normal_a_limit: f64,
    pub normal_j_limit: f64,
    pub yield_j_limit: f64,
    /// Jerk bound of emergency braking.
    pub emergency_j_limit: f64,
}

impl Default for PolicyThresholds {
    fn default() -> Self {
        Self {
            danger: ZoneThresholds {
                l_cautious: 0.3,
                l_steady: 0.5,
                a_limit: 3.0,
                j_limit: 0.9,
            },
            discomfort: ZoneThresholds {
                l_cautious: 0.5,
                l_steady: 0.7,
                a_limit: 2.0,
                j_limit: 0.9,
            },
            alpha1: 1.0 / 3.0,
            alpha2: 2.0 / 3.0,
            ttc_stop: 1.5,
            ttc_emergency: 1.0,
            delta_d: 0.5,
            yield_standoff: 3.0,
            lateral_margin: 0.5,
            normal_a_limit: 2.0,
            normal_j_limit: 0.9,
            yield_j_limit: 2.0,
            emergency_j_limit: 2.0,
        }
    }
}

impl PolicyThresholds {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.danger.validate("danger-zone")?;
        self.discomfort.validate("discomfort-zone")?;
        if !(self.alpha1 > 0.0 && self.alpha1 < self.alpha2 && self.alpha2 <= 1.0) {
            return Err(ConfigError::invalid(format!(
                "speed fractions need 0 < alpha1 < alpha2 <= 1, got alpha1 = {}, alpha2 = {}",
                self.alpha1, self.alpha2
            )));
        }
        if !(self.ttc_emergency > 0.0 && self.ttc_emergency <= self.ttc_stop) {
            return Err(ConfigError::invalid("need 0 < ttc_emergency <= ttc_stop"));
        }
        if !(self.delta_d > 0.0) {
            return Err(ConfigError::invalid("delta_d must be positive"));
        }
        if !(self.yield_standoff >= 0.0 && self.lateral_margin >= 0.0) {
            return Err(ConfigError::invalid("yield_standoff and lateral_margin must be non-negative"));
        }
        if !(self.normal_a_limit > 0.0 && self.normal_j_limit > 0.0 && self.yield_j_limit > 0.0 && self.emergency_j_limit > 0.0) {
            return Err(ConfigError::invalid("acceleration and jerk limits must be positive"));
        }
        Ok(())
    }

    pub fn zone(&self, zone: Zone) -> &ZoneThresholds {
        match zone {
            Zone::Danger => &self.danger,
            _ => &self.discomfort,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub state: FsmState,
    /// Zone and running maximum at the last threshold crossing that set
    /// `state`; `None` when no threshold was exceeded.
    pub decisive: Option<(Zone, f64)>,
    pub danger_max: f64,
    pub discomfort_max: Option<f64>,
    pub samples: usize,
}

/// Scans look-ahead distances `k * delta_d` from 0 while below
/// `d_stop_comfort` (always at least once), evaluating the emergence
/// probability at `ego_front + d`.
///
/// The zone is danger until `d > d_stop_min`, where the running maximum is
/// reset once for the discomfort zone. After every sample the running
/// maximum is compared with the current zone's thresholds and the state is
/// overwritten on each crossing, so the last crossing decides.
pub fn scan_risk(
    perception: &Perception,
    zones: &RiskZones,
    thresholds: &PolicyThresholds,
    weights: &EmergenceWeights,
    params: &ObservationParams,
) -> ScanResult {
    let mut zone = Zone::Danger;
    let mut max_risk = 0.0_f64;
    let mut danger_max = 0.0_f64;
    let mut state = FsmState::NormalDrive;
    let mut decisive = None;
    let mut k = 0usize;
    loop {
        let d = k as f64 * thresholds.delta_d;
        if zone == Zone::Danger && d > zones.d_stop_min {
            zone = Zone::Discomfort;
            max_risk = 0.0;
        }
        let obs = observe_at(perception, params, perception.ego_front + d);
        let risk = emergence_probability(&obs, weights);
        if max_risk < risk {
            max_risk = risk;
        }
        if zone == Zone::Danger {
            danger_max = max_risk;
        }
        let th = thresholds.zone(zone);
        if max_risk > th.l_steady {
            state = FsmState::SteadyDrive;
            decisive = Some((zone, max_risk));
        } else if max_risk > th.l_cautious {
            state = FsmState::CautiousDrive;
            decisive = Some((zone, max_risk));
        }
        k += 1;
        if k as f64 * thresholds.delta_d >= zones.d_stop_comfort {
            break;
        }
    }
    ScanResult {
        state,
        decisive,
        danger_max,
        discomfort_max: (zone == Zone::Discomfort).then_some(max_risk),
        samples: k,
    }
}

/// Reference speed and limits of a drive state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveChoice {
    pub state: FsmState,
    pub v_ref: f64,
    pub a_limit: f64,
    pub j_limit: f64,
}

pub fn drive_from_scan(scan: &ScanResult, thresholds: &PolicyThresholds, speed_limit: f64) -> DriveChoice {
    match (scan.state, scan.decisive) {
        (FsmState::SteadyDrive, Some((zone, _))) | (FsmState::CautiousDrive, Some((zone, _))) => {
            let th = thresholds.zone(zone);
            let alpha = if scan.state == FsmState::SteadyDrive {
                thresholds.alpha1
            } else {
                thresholds.alpha2
            };
            DriveChoice {
                state: scan.state,
                v_ref: alpha * speed_limit,
                a_limit: th.a_limit,
                j_limit: th.j_limit,
            }
        }
        _ => DriveChoice {
            state: FsmState::NormalDrive,
            v_ref: speed_limit,
            a_limit: thresholds.normal_a_limit,
            j_limit: thresholds.normal_j_limit,
        },
    }
}

/// State chosen by the yield / emergency sub-machine, or `None` when a
/// drive state should be chosen.
pub fn supervise(prev: FsmState, conflict: Option<&PathConflict>, thresholds: &PolicyThresholds) -> Option<FsmState> {
    use FsmState::*;
    match (prev, conflict) {
        (Emergency, Some(c)) if c.ttc < thresholds.ttc_stop => Some(Emergency),
        (Emergency, _) => Some(Yielding),
        (Yielding, Some(c)) if c.ttc < thresholds.ttc_emergency => Some(Emergency),
        (Yielding, Some(_)) => Some(Yielding),
        (_, Some(c)) if c.ttc < thresholds.ttc_stop => Some(Emergency),
        (_, Some(_)) => Some(Yielding),
        (_, None) => None,
    }
}
