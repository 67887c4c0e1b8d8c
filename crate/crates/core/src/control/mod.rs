//! The driving controllers: the occlusion-aware policy and the baselines,
//! both layered on the same yield / emergency supervisor and jerk-limited
//! tracking.

pub mod fsm;
pub mod lqr;
pub mod policy;
pub mod tracking;
pub mod ttc;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_drive, BaselineId, BaselineSpec};
use crate::error::{ConfigError, RiskZoneError};
use crate::estimator::{EmergenceWeights, ObservationParams};
use crate::perception::Perception;
use crate::riskzones::{compute_risk_zones, BrakingProfile, RiskParams, RiskZones};

pub use fsm::{edge_event, Event, FsmState, IllegalTransition};
pub use lqr::GainSet;
pub use policy::{DriveChoice, PolicyThresholds, ScanResult, ZoneThresholds};
pub use tracking::{track, TrackingTarget};
pub use ttc::{governing_conflict, time_to_collision, PathConflict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub fsm_state: FsmState,
    pub v_ref: f64,
    pub a_limit: f64,
    pub j_limit: f64,
    pub accel_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Proposed,
    B1,
    B2,
    B3,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [Self::Proposed, Self::B1, Self::B2, Self::B3];

    pub fn name(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::B1 => "b1",
            Self::B2 => "b2",
            Self::B3 => "b3",
        }
    }

    fn baseline(self) -> Option<BaselineId> {
        match self {
            Self::Proposed => None,
            Self::B1 => Some(BaselineId::B1),
            Self::B2 => Some(BaselineId::B2),
            Self::B3 => Some(BaselineId::B3),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Self::Proposed),
            "b1" => Ok(Self::B1),
            "b2" => Ok(Self::B2),
            "b3" => Ok(Self::B3),
            _ => Err(ConfigError::UnknownController(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub thresholds: PolicyThresholds,
    pub weights: EmergenceWeights,
    pub observation: ObservationParams,
    pub risk: RiskParams,
    pub gains: GainSet,
    pub b3_crosswalk_distance: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            thresholds: PolicyThresholds::default(),
            weights: EmergenceWeights::default(),
            observation: ObservationParams::default(),
            risk: RiskParams::default(),
            gains: GainSet::default(),
            b3_crosswalk_distance: 20.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self, friction_mu: f64) -> Result<(), ConfigError> {
        self.thresholds.validate()?;
        self.weights.validate()?;
        self.observation.validate()?;
        self.risk.validate(friction_mu)?;
        if !(self.b3_crosswalk_distance >= 0.0) {
            return Err(ConfigError::invalid("b3_crosswalk_distance must be non-negative"));
        }
        let g = &self.gains;
        if !(g.j_cruise > 0.0 && g.j_yield > 0.0) || g.cruise.iter().chain(&g.yielding).any(|k| !k.is_finite()) {
            return Err(ConfigError::invalid("gains must be finite with positive jerk scales"));
        }
        Ok(())
    }
}

/// Everything a controller decided at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub command: ControlCommand,
    pub zones: RiskZones,
    pub conflict: Option<ConflictRecord>,
    pub scan: Option<ScanResult>,
    pub target: Option<TrackingTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictRecord {
    pub pedestrian: u32,
    pub gap: f64,
    #[serde(with = "ttc::infinite_as_null")]
    pub ttc: f64,
}

impl From<&PathConflict> for ConflictRecord {
    fn from(c: &PathConflict) -> Self {
        Self {
            pedestrian: c.pedestrian,
            gap: c.gap,
            ttc: c.ttc,
        }
    }
}

fn physical_profile(p: &Perception, risk: &RiskParams) -> BrakingProfile {
    BrakingProfile {
        a_level: p.a_max,
        t_ramp: risk.t_ramp_min,
    }
}

/// One decision of the occlusion-aware controller given the previous
/// state: the yield / emergency supervisor first, then the risk scan.
pub fn propose_action(p: &Perception, prev: FsmState, cfg: &ControllerConfig, dt: f64) -> Result<Decision, RiskZoneError> {
    decide(ControllerKind::Proposed, p, prev, cfg, dt)
}

/// One decision of controller `kind`.
pub fn decide(kind: ControllerKind, p: &Perception, prev: FsmState, cfg: &ControllerConfig, dt: f64) -> Result<Decision, RiskZoneError> {
    let th = &cfg.thresholds;
    let zones = compute_risk_zones(p.ego.velocity, cfg.risk.comfort(), physical_profile(p, &cfg.risk), p.r_visible)?;
    let conflict = governing_conflict(p, th.lateral_margin);
    let a_prev = p.ego.acceleration;

    let (command, target, scan) = match policy::supervise(prev, conflict.as_ref(), th) {
        Some(FsmState::Emergency) => {
            let j = th.emergency_j_limit;
            let accel = (a_prev - j * dt).max(-p.a_max);
            let cmd = ControlCommand {
                fsm_state: FsmState::Emergency,
                v_ref: 0.0,
                a_limit: p.a_max,
                j_limit: j,
                accel_out: accel,
            };
            (cmd, None, None)
        }
        Some(state) => {
            let d_ref = th.yield_standoff;
            let d = conflict.as_ref().map_or(d_ref, |c| c.gap);
            let target = TrackingTarget::Yield { d, d_ref };
            let mut cmd = ControlCommand {
                fsm_state: state,
                v_ref: 0.0,
                a_limit: p.a_max,
                j_limit: th.yield_j_limit,
                accel_out: 0.0,
            };
            cmd.accel_out = track(&cmd, &p.ego, &target, &cfg.gains, dt);
            (cmd, Some(target), None)
        }
        None => {
            let (choice, scan) = match kind.baseline() {
                None => {
                    let scan = policy::scan_risk(p, &zones, th, &cfg.weights, &cfg.observation);
                    (policy::drive_from_scan(&scan, th, p.speed_limit), Some(scan))
                }
                Some(id) => {
                    let spec = BaselineSpec::new(id, cfg.b3_crosswalk_distance);
                    (baseline_drive(&spec, p, th), None)
                }
            };
            let target = TrackingTarget::Cruise { v_ref: choice.v_ref };
            let mut cmd = ControlCommand {
                fsm_state: choice.state,
                v_ref: choice.v_ref,
                a_limit: choice.a_limit,
                j_limit: choice.j_limit,
                accel_out: 0.0,
            };
            cmd.accel_out = track(&cmd, &p.ego, &target, &cfg.gains, dt);
            (cmd, Some(target), scan)
        }
    };
    Ok(Decision {
        command,
        zones,
        conflict: conflict.as_ref().map(ConflictRecord::from),
        scan,
        target,
    })
}

/// A controller instance for one episode.
#[derive(Debug, Clone)]
pub struct Controller {
    pub kind: ControllerKind,
    pub state: FsmState,
    config: ControllerConfig,
}

impl Controller {
    pub fn new(kind: ControllerKind, config: ControllerConfig) -> Self {
        Self {
            kind,
            state: FsmState::NormalDrive,
            config,
        }
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn step(&mut self, p: &Perception, dt: f64) -> Result<Decision, RiskZoneError> {
        let d = decide(self.kind, p, self.state, &self.config, dt)?;
        self.state = d.command.fsm_state;
        Ok(d)
    }
}
