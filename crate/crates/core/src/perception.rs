//! What a controller is allowed to know at one tick: its own state, the
//! road constants it can measure, and the objects the sensor currently
//! sees. Hidden pedestrians and cars never appear here.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::visibility::VisibilityResult;
use crate::world::{EgoState, PedestrianState, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeenPedestrian {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    pub ego: EgoState,
    pub ego_front: f64,
    pub ego_rear: f64,
    /// Lateral span of the ego footprint.
    pub ego_lateral_span: (f64, f64),
    pub speed_limit: f64,
    /// `friction_mu * g`.
    pub a_max: f64,
    pub r_visible: f64,
    pub pedestrians: Vec<SeenPedestrian>,
    /// Longitudinal spans of the visible parked cars.
    pub parked_cars: Vec<(f64, f64)>,
    /// Longitudinal span of the crosswalk, when visible.
    pub crosswalk: Option<(f64, f64)>,
}

impl Perception {
    pub fn observe(world: &WorldState, vis: &VisibilityResult, r_visible: f64) -> Self {
        let pedestrians = world
            .pedestrians
            .iter()
            .filter(|p| vis.pedestrian_visible(p.id) && p.state != PedestrianState::Hit)
            .map(|p| SeenPedestrian {
                id: p.id,
                position: p.position,
                velocity: p.velocity(),
            })
            .collect();
        let parked_cars = vis
            .visible_parked_car_indices
            .iter()
            .map(|&i| world.parked_cars[i].x_span())
            .collect();
        Self {
            ego: world.ego,
            ego_front: world.ego_front(),
            ego_rear: world.ego_rear(),
            ego_lateral_span: world.ego_lateral_span(),
            speed_limit: world.road.speed_limit,
            a_max: world.road.a_max(),
            r_visible,
            pedestrians,
            parked_cars,
            crosswalk: vis.crosswalk_visible.then(|| world.road.crosswalk_span()),
        }
    }
}
