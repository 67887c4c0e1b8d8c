//! One closed-loop episode: sense, assess, command, step.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::control::{edge_event, ConflictRecord, ControlCommand, Controller, ControllerConfig, ControllerKind, Event, FsmState};
use crate::perception::Perception;
use crate::riskzones::Zone;
use crate::visibility::{compute_visibility, SensorSpec};
use crate::world::{step_world, EgoState, Family, PedestrianState, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Collision { pedestrian: u32 },
    Timeout,
    Fault { diagnostic: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Collision { .. } => "collision",
            Outcome::Timeout => "timeout",
            Outcome::Fault { .. } => "fault",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeParams {
    /// Ticks between a command and its application; 0 applies it at once.
    pub actuation_delay_ticks: usize,
    /// Episode time budget in seconds; `None` uses three times the time
    /// to traverse the road at the slowest cruise fraction.
    pub timeout: Option<f64>,
    pub record_trace: bool,
}


/// One traced tick. `ego` is the state the decision was taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub time: f64,
    pub ego: EgoState,
    pub ego_front: f64,
    pub previous_state: FsmState,
    pub command: ControlCommand,
    pub applied_accel: f64,
    pub event: Option<Event>,
    pub conflict: Option<ConflictRecord>,
    pub d_stop_min: f64,
    pub d_stop_comfort: f64,
    pub decisive_zone: Option<Zone>,
    pub max_risk: Option<f64>,
    pub danger_max_risk: Option<f64>,
    pub discomfort_max_risk: Option<f64>,
    pub visible_pedestrians: Vec<u32>,
    pub visible_parked_cars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldRecord {
    pub pedestrian: u32,
    pub first_tick: u64,
    pub emergency: bool,
    pub collided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub family: Family,
    pub seed: u64,
    pub controller: ControllerKind,
    pub outcome: Outcome,
    pub ticks: u64,
    pub dt: f64,
    pub duration: f64,
    pub successful_yields: u64,
    pub unsuccessful_yields: u64,
    pub yields: Vec<YieldRecord>,
    /// Realized decelerations `(v[k+1] - v[k]) / dt` of ticks that slowed
    /// the ego, in m/s^2 (negative).
    pub decel_samples: Vec<f64>,
    pub emergency_time: f64,
    pub trace: Option<Vec<TickRecord>>,
}

impl EpisodeRecord {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

pub fn default_timeout(world: &WorldState, cfg: &ControllerConfig) -> f64 {
    let th = &cfg.thresholds;
    let fraction = th.alpha1.min(th.alpha2).min(1.0 / 3.0);
    3.0 * world.road.length / (fraction * world.road.speed_limit)
}

fn finite_ego(e: &EgoState) -> bool {
    e.longitudinal_position.is_finite() && e.velocity.is_finite() && e.acceleration.is_finite()
}

/// Runs `kind` on a copy of `world` until the ego front reaches the road
/// end, a collision, the time budget, or an internal fault.
pub fn run_episode(
    world: &WorldState,
    kind: ControllerKind,
    controller_cfg: &ControllerConfig,
    sensor: &SensorSpec,
    params: &EpisodeParams,
    dt: f64,
) -> EpisodeRecord {
    let mut world = world.clone();
    let mut controller = Controller::new(kind, controller_cfg.clone());
    let timeout = params.timeout.unwrap_or_else(|| default_timeout(&world, controller_cfg));
    let max_ticks = (timeout / dt).ceil() as u64;
    let mut pending: VecDeque<f64> = std::iter::repeat_n(world.ego.acceleration, params.actuation_delay_ticks).collect();

    let mut yields: BTreeMap<u32, YieldRecord> = BTreeMap::new();
    let mut decel_samples = Vec::new();
    let mut emergency_ticks = 0u64;
    let mut trace = params.record_trace.then(Vec::new);
    let mut ticks = 0u64;

    let outcome = loop {
        if world.ego_front() >= world.road.length {
            break Outcome::Success;
        }
        if ticks >= max_ticks {
            break Outcome::Timeout;
        }
        let vis = compute_visibility(&world, sensor);
        let perception = Perception::observe(&world, &vis, sensor.r_visible);
        let prev_state = controller.state;
        let decision = match controller.step(&perception, dt) {
            Ok(d) => d,
            Err(e) => break Outcome::Fault { diagnostic: format!("tick {ticks}: {e}") },
        };
        let cmd = decision.command;
        let event = match edge_event(prev_state, cmd.fsm_state) {
            Ok(ev) => ev,
            Err(e) => break Outcome::Fault { diagnostic: format!("tick {ticks}: {e}") },
        };
        if !cmd.accel_out.is_finite() {
            break Outcome::Fault {
                diagnostic: format!("tick {ticks}: non-finite acceleration command"),
            };
        }

        pending.push_back(cmd.accel_out);
        let applied = pending.pop_front().unwrap_or(cmd.accel_out);
        let next = step_world(&world, applied, dt);
        if !finite_ego(&next.ego) {
            break Outcome::Fault {
                diagnostic: format!("tick {ticks}: non-finite ego state"),
            };
        }

        let dv = (next.ego.velocity - world.ego.velocity) / dt;
        if dv < 0.0 {
            decel_samples.push(dv);
        }
        let in_emergency = cmd.fsm_state == FsmState::Emergency;
        if in_emergency {
            emergency_ticks += 1;
        }
        if let Some(c) = &decision.conflict {
            if matches!(cmd.fsm_state, FsmState::Yielding | FsmState::Emergency) {
                let rec = yields.entry(c.pedestrian).or_insert(YieldRecord {
                    pedestrian: c.pedestrian,
                    first_tick: ticks,
                    emergency: false,
                    collided: false,
                });
                rec.emergency |= in_emergency;
            }
        }

        if let Some(t) = trace.as_mut() {
            let scan = decision.scan.as_ref();
            t.push(TickRecord {
                tick: world.tick,
                time: world.time,
                ego: world.ego,
                ego_front: world.ego_front(),
                previous_state: prev_state,
                command: cmd,
                applied_accel: applied,
                event,
                conflict: decision.conflict,
                d_stop_min: decision.zones.d_stop_min,
                d_stop_comfort: decision.zones.d_stop_comfort,
                decisive_zone: scan.and_then(|s| s.decisive.map(|d| d.0)),
                max_risk: scan.and_then(|s| s.decisive.map(|d| d.1)),
                danger_max_risk: scan.map(|s| s.danger_max),
                discomfort_max_risk: scan.and_then(|s| s.discomfort_max),
                visible_pedestrians: vis.visible_pedestrian_ids.clone(),
                visible_parked_cars: vis.visible_parked_car_indices.clone(),
            });
        }

        world = next;
        ticks += 1;
        if let Some(hit) = world.pedestrians.iter().find(|p| p.state == PedestrianState::Hit) {
            let id = hit.id;
            yields
                .entry(id)
                .or_insert(YieldRecord {
                    pedestrian: id,
                    first_tick: ticks,
                    emergency: false,
                    collided: false,
                })
                .collided = true;
            break Outcome::Collision { pedestrian: id };
        }
    };

    let collided = matches!(outcome, Outcome::Collision { .. });
    let yields: Vec<YieldRecord> = yields.into_values().collect();
    let unsuccessful = yields.iter().filter(|y| y.emergency || y.collided).count() as u64;
    let successful = if collided {
        0
    } else {
        yields.len() as u64 - unsuccessful
    };
    EpisodeRecord {
        family: world.family,
        seed: world.seed,
        controller: kind,
        outcome,
        ticks,
        dt,
        duration: ticks as f64 * dt,
        successful_yields: successful,
        unsuccessful_yields: unsuccessful,
        yields,
        decel_samples,
        emergency_time: emergency_ticks as f64 * dt,
        trace,
    }
}
