//! Ground-truth scenario: road layout, parked cars, pedestrians and the ego
//! vehicle, plus scenario generation and the per-tick world step.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::geometry::{Rect, Vec2};

pub const GRAVITY: f64 = 9.81;

/// 30 km/h.
pub const DEFAULT_SPEED_LIMIT: f64 = 30.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sc1,
    Sc2,
    Sc3,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Sc1, Family::Sc2, Family::Sc3];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Sc1 => "sc1",
            Family::Sc2 => "sc2",
            Family::Sc3 => "sc3",
        }
    }

    /// Default pedestrian count range for the family.
    pub fn default_pedestrians(self) -> CountRange {
        match self {
            Family::Sc1 => CountRange::new(1, 2),
            Family::Sc2 => CountRange::new(4, 8),
            Family::Sc3 => CountRange::new(6, 10),
        }
    }

    /// Default parked-car count range; `None` means every slot is filled.
    pub fn default_parked_cars(self) -> Option<CountRange> {
        match self {
            Family::Sc1 => Some(CountRange::new(1, 2)),
            Family::Sc2 => Some(CountRange::new(6, 12)),
            Family::Sc3 => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sc1" => Ok(Family::Sc1),
            "sc2" => Ok(Family::Sc2),
            "sc3" => Ok(Family::Sc3),
            _ => Err(ConfigError::UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Straight multi-lane road with a parking strip and a sidewalk on each
/// side. Lanes span `0 <= y <= lane_count * lane_width`; the right parking
/// strip and sidewalk lie below `y = 0`, the left ones above the far edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub length: f64,
    pub lane_count: u32,
    pub lane_width: f64,
    pub speed_limit: f64,
    pub friction_mu: f64,
    pub crosswalk_position: f64,
    pub crosswalk_width: f64,
    pub parking_strip_width: f64,
    pub sidewalk_width: f64,
    pub slot_length: f64,
}

impl Road {
    pub fn width(&self) -> f64 {
        f64::from(self.lane_count) * self.lane_width
    }

    pub fn a_max(&self) -> f64 {
        self.friction_mu * GRAVITY
    }

    pub fn lane_center(&self, lane: u32) -> f64 {
        (f64::from(lane) + 0.5) * self.lane_width
    }

    /// Lateral span `(lo, hi)` of the parking strip on `side`.
    pub fn parking_strip(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Right => (-self.parking_strip_width, 0.0),
            Side::Left => (self.width(), self.width() + self.parking_strip_width),
        }
    }

    /// Lateral span `(lo, hi)` of the sidewalk on `side`.
    pub fn sidewalk(&self, side: Side) -> (f64, f64) {
        let (lo, hi) = self.parking_strip(side);
        match side {
            Side::Right => (lo - self.sidewalk_width, lo),
            Side::Left => (hi, hi + self.sidewalk_width),
        }
    }

    /// Lateral coordinate of the sidewalk center line on `side`.
    pub fn sidewalk_center(&self, side: Side) -> f64 {
        let (lo, hi) = self.sidewalk(side);
        0.5 * (lo + hi)
    }

    /// Longitudinal span of the crosswalk.
    pub fn crosswalk_span(&self) -> (f64, f64) {
        let h = self.crosswalk_width / 2.0;
        (self.crosswalk_position - h, self.crosswalk_position + h)
    }

    /// Rear edges of the parking slots available on each side. Slots that
    /// would touch the crosswalk (with 1 m clearance) are dropped.
    pub fn slot_starts(&self) -> Vec<f64> {
        let (cw_lo, cw_hi) = self.crosswalk_span();
        let n = (self.length / self.slot_length).floor() as usize;
        (0..n)
            .map(|k| k as f64 * self.slot_length)
            .filter(|&s| s + self.slot_length <= cw_lo - 1.0 || s >= cw_hi + 1.0)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.length > 0.0) || self.lane_count < 1 || !(self.lane_width > 0.0) {
            return Err(ConfigError::invalid(
                "road needs length > 0, lane_count >= 1, lane_width > 0",
            ));
        }
        if !(0.0..=self.length).contains(&self.crosswalk_position) {
            return Err(ConfigError::invalid("crosswalk position outside the road"));
        }
        if !(self.friction_mu > 0.0 && self.friction_mu <= 1.2) {
            return Err(ConfigError::invalid("friction_mu must lie in (0, 1.2]"));
        }
        if !(self.speed_limit > 0.0)
            || !(self.crosswalk_width > 0.0)
            || !(self.parking_strip_width > 0.0)
            || !(self.sidewalk_width > 0.0)
            || !(self.slot_length > 0.0)
        {
            return Err(ConfigError::invalid("road dimensions must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkedCar {
    /// Rear edge.
    pub longitudinal_position: f64,
    pub length: f64,
    pub width: f64,
    pub side: Side,
    /// Gap between the road edge and the near side of the car.
    pub lateral_offset: f64,
}

impl ParkedCar {
    pub fn rect(&self, road: &Road) -> Rect {
        let (y0, y1) = match self.side {
            Side::Right => (-self.lateral_offset - self.width, -self.lateral_offset),
            Side::Left => (
                road.width() + self.lateral_offset,
                road.width() + self.lateral_offset + self.width,
            ),
        };
        Rect::new(
            Vec2::new(self.longitudinal_position, y0),
            Vec2::new(self.longitudinal_position + self.length, y1),
        )
    }

    pub fn x_span(&self) -> (f64, f64) {
        (self.longitudinal_position, self.longitudinal_position + self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrossingTrigger {
    /// Start crossing once the ego front is at most this far before the
    /// pedestrian's longitudinal position (or has fully passed it).
    EgoGap { meters: f64 },
    /// Start crossing at a fixed simulation time.
    Time { seconds: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PedestrianState {
    Waiting,
    Crossing,
    Crossed,
    Hit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Vec2,
    pub walking_speed: f64,
    pub will_cross: bool,
    pub crossing_trigger: CrossingTrigger,
    pub state: PedestrianState,
    /// Sidewalk the pedestrian starts on.
    pub side: Side,
}

impl Pedestrian {
    /// +1 when crossing toward larger `y`, -1 otherwise.
    pub fn crossing_direction(&self) -> f64 {
        match self.side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        match self.state {
            PedestrianState::Crossing => {
                Vec2::new(0.0, self.crossing_direction() * self.walking_speed)
            }
            _ => Vec2::new(0.0, 0.0),
        }
    }

    fn reached_far_side(&self, road: &Road) -> bool {
        match self.side {
            Side::Right => self.position.y >= road.parking_strip(Side::Left).1,
            Side::Left => self.position.y <= road.parking_strip(Side::Right).0,
        }
    }
}

/// Ego footprint and lane placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoBody {
    pub length: f64,
    pub width: f64,
    pub lane: u32,
}

impl Default for EgoBody {
    fn default() -> Self {
        Self {
            length: 4.5,
            width: 1.8,
            lane: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    /// Longitudinal position of the footprint center.
    pub longitudinal_position: f64,
    pub velocity: f64,
    /// Actuated (commanded) acceleration of the last step.
    pub acceleration: f64,
    pub previous_jerk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub family: Family,
    pub seed: u64,
    pub road: Road,
    pub parked_cars: Vec<ParkedCar>,
    pub pedestrians: Vec<Pedestrian>,
    pub ego: EgoState,
    pub ego_body: EgoBody,
    pub time: f64,
    pub tick: u64,
}

impl WorldState {
    pub fn ego_front(&self) -> f64 {
        self.ego.longitudinal_position + self.ego_body.length / 2.0
    }

    pub fn ego_rear(&self) -> f64 {
        self.ego.longitudinal_position - self.ego_body.length / 2.0
    }

    pub fn ego_lane_y(&self) -> f64 {
        self.road.lane_center(self.ego_body.lane)
    }

    pub fn ego_footprint(&self) -> Rect {
        Rect::from_center(
            Vec2::new(self.ego.longitudinal_position, self.ego_lane_y()),
            self.ego_body.length,
            self.ego_body.width,
        )
    }

    /// Lateral span of the ego footprint.
    pub fn ego_lateral_span(&self) -> (f64, f64) {
        let y = self.ego_lane_y();
        (y - self.ego_body.width / 2.0, y + self.ego_body.width / 2.0)
    }

    pub fn parked_car_rects(&self) -> Vec<Rect> {
        self.parked_cars.iter().map(|c| c.rect(&self.road)).collect()
    }

    pub fn pedestrian(&self, id: u32) -> Option<&Pedestrian> {
        self.pedestrians.iter().find(|p| p.id == id)
    }

    /// Checks the structural invariants of a (possibly hand-edited) world.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.road.validate()?;
        if self.ego_body.lane >= self.road.lane_count
            || !(self.ego_body.length > 0.0 && self.ego_body.width > 0.0)
        {
            return Err(ConfigError::invalid("ego body must have positive size and a valid lane"));
        }
        if !(self.ego.velocity >= 0.0) {
            return Err(ConfigError::invalid("ego velocity must be non-negative"));
        }
        for side in [Side::Left, Side::Right] {
            let (lo, hi) = self.road.parking_strip(side);
            let mut spans: Vec<(f64, f64)> = Vec::new();
            for car in self.parked_cars.iter().filter(|c| c.side == side) {
                let r = car.rect(&self.road);
                if !(r.area() > 0.0) {
                    return Err(ConfigError::invalid("degenerate parked car"));
                }
                if r.min.y < lo - 1e-9 || r.max.y > hi + 1e-9 || r.min.x < 0.0 || r.max.x > self.road.length {
                    return Err(ConfigError::invalid("parked car outside its parking strip"));
                }
                spans.push(car.x_span());
            }
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            if spans.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(ConfigError::invalid("parked cars overlap on the same side"));
            }
        }
        for p in &self.pedestrians {
            if !(p.walking_speed > 0.0) {
                return Err(ConfigError::invalid(format!("pedestrian {} has non-positive speed", p.id)));
            }
        }
        Ok(())
    }
}

fn default_road_length() -> f64 {
    96.0
}

/// Road parameters used for generation (crosswalk is placed randomly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadLayout {
    #[serde(default = "default_road_length")]
    pub length: f64,
    pub lane_count: u32,
    pub lane_width: f64,
    pub speed_limit: f64,
    pub friction_mu: f64,
    pub crosswalk_width: f64,
    /// Range of the crosswalk center.
    pub crosswalk_range: (f64, f64),
    pub parking_strip_width: f64,
    pub sidewalk_width: f64,
    pub slot_length: f64,
}

impl Default for RoadLayout {
    fn default() -> Self {
        Self {
            length: 96.0,
            lane_count: 3,
            lane_width: 3.0,
            speed_limit: DEFAULT_SPEED_LIMIT,
            friction_mu: 0.8,
            crosswalk_width: 4.0,
            crosswalk_range: (25.0, 80.0),
            parking_strip_width: 2.4,
            sidewalk_width: 2.0,
            slot_length: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub family: Family,
    pub seed: u64,
    /// Overrides the family's pedestrian count range.
    pub pedestrian_count: Option<CountRange>,
    /// Overrides the family's parked-car count range (ignored for sc3,
    /// which fills every slot).
    pub parked_car_count: Option<CountRange>,
    pub non_crossing_fraction: f64,
    /// Probability that a crossing pedestrian uses the crosswalk.
    pub crosswalk_preference: f64,
    pub tick: f64,
    /// Initial ego speed; `None` starts at the speed limit.
    pub initial_speed: Option<f64>,
    /// Uniform band of ego gaps at which crossing pedestrians start.
    pub trigger_gap: (f64, f64),
    pub pedestrian_speed_mean: f64,
    pub pedestrian_speed_std: f64,
    /// Pedestrians are placed no closer than this to the road start.
    pub pedestrian_min_x: f64,
    pub car_length: f64,
    pub car_width: f64,
    pub car_lateral_offset: f64,
    pub road: RoadLayout,
    pub ego: EgoBody,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            family: Family::Sc2,
            seed: 0,
            pedestrian_count: None,
            parked_car_count: None,
            non_crossing_fraction: 0.3,
            crosswalk_preference: 0.35,
            tick: 0.1,
            initial_speed: None,
            trigger_gap: (10.0, 30.0),
            pedestrian_speed_mean: 1.5,
            pedestrian_speed_std: 0.6,
            pedestrian_min_x: 15.0,
            car_length: 4.6,
            car_width: 1.8,
            car_lateral_offset: 0.3,
            road: RoadLayout::default(),
            ego: EgoBody::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn for_family(family: Family, seed: u64) -> Self {
        Self {
            family,
            seed,
            ..Self::default()
        }
    }

    pub fn pedestrian_range(&self) -> CountRange {
        self.pedestrian_count
            .unwrap_or_else(|| self.family.default_pedestrians())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.road;
        let peds = self.pedestrian_range();
        if peds.min > peds.max {
            return Err(ConfigError::invalid("pedestrian count range is empty"));
        }
        if let Some(c) = self.parked_car_count {
            if c.min > c.max {
                return Err(ConfigError::invalid("parked-car count range is empty"));
            }
        }
        if !(0.0..=1.0).contains(&self.non_crossing_fraction)
            || !(0.0..=1.0).contains(&self.crosswalk_preference)
        {
            return Err(ConfigError::invalid("fractions must lie in [0, 1]"));
        }
        if !(self.tick > 0.0) {
            return Err(ConfigError::invalid("tick must be positive"));
        }
        if !(self.trigger_gap.0 >= 0.0 && self.trigger_gap.0 <= self.trigger_gap.1) {
            return Err(ConfigError::invalid("trigger gap band is invalid"));
        }
        if !(self.pedestrian_speed_mean > 0.0) || !(self.pedestrian_speed_std >= 0.0) {
            return Err(ConfigError::invalid("pedestrian speed distribution is invalid"));
        }
        if let Some(v) = self.initial_speed {
            if !(v >= 0.0) {
                return Err(ConfigError::invalid("initial speed must be non-negative"));
            }
        }
        if !(self.car_length > 0.0 && self.car_length <= r.slot_length)
            || !(self.car_width > 0.0)
            || !(self.car_lateral_offset >= 0.0)
            || self.car_lateral_offset + self.car_width > r.parking_strip_width
        {
            return Err(ConfigError::invalid("parked car does not fit its slot"));
        }
        let (cw_lo, cw_hi) = r.crosswalk_range;
        if !(cw_lo <= cw_hi && cw_lo >= 0.0 && cw_hi <= r.length) {
            return Err(ConfigError::invalid("crosswalk range outside the road"));
        }
        if !(self.pedestrian_min_x >= 0.0 && self.pedestrian_min_x < r.length) {
            return Err(ConfigError::invalid("pedestrian_min_x outside the road"));
        }
        if self.ego.lane >= r.lane_count || !(self.ego.length > 0.0 && self.ego.width > 0.0) {
            return Err(ConfigError::invalid("ego body must have positive size and a valid lane"));
        }
        self.road_at(cw_lo).validate()
    }

    fn road_at(&self, crosswalk_position: f64) -> Road {
        let r = &self.road;
        Road {
            length: r.length,
            lane_count: r.lane_count,
            lane_width: r.lane_width,
            speed_limit: r.speed_limit,
            friction_mu: r.friction_mu,
            crosswalk_position,
            crosswalk_width: r.crosswalk_width,
            parking_strip_width: r.parking_strip_width,
            sidewalk_width: r.sidewalk_width,
            slot_length: r.slot_length,
        }
    }
}

/// Draws a walking speed from the configured Gaussian, rejecting
/// non-positive draws.
pub fn sample_walking_speed<R: Rng + ?Sized>(rng: &mut R, normal: &Normal<f64>) -> f64 {
    loop {
        let v = normal.sample(rng);
        if v > 0.0 {
            return v;
        }
    }
}

/// Builds the initial world for `config`. Identical configs produce
/// identical worlds.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<WorldState, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (cw_lo, cw_hi) = config.road.crosswalk_range;
    let road = config.road_at(rng.random_range(cw_lo..=cw_hi));

    // Parking slots, identical grid on both sides.
    let starts = road.slot_starts();
    let all_slots: Vec<(Side, f64)> = [Side::Right, Side::Left]
        .into_iter()
        .flat_map(|s| starts.iter().map(move |&x| (s, x)))
        .collect();
    let chosen: Vec<usize> = match (config.family, config.parked_car_count.or(config.family.default_parked_cars())) {
        (Family::Sc3, _) | (_, None) => (0..all_slots.len()).collect(),
        (_, Some(range)) => {
            if range.max > all_slots.len() {
                return Err(ConfigError::invalid(format!(
                    "parked-car range max {} exceeds the {} available slots",
                    range.max,
                    all_slots.len()
                )));
            }
            let k = rng.random_range(range.min..=range.max);
            let mut idx = sample(&mut rng, all_slots.len(), k).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    let slack = road.slot_length - config.car_length;
    let mut parked_cars: Vec<ParkedCar> = chosen
        .into_iter()
        .map(|i| {
            let (side, start) = all_slots[i];
            let jitter = if slack > 0.0 {
                rng.random_range(-0.25 * slack..=0.25 * slack)
            } else {
                0.0
            };
            ParkedCar {
                longitudinal_position: start + 0.5 * slack + jitter,
                length: config.car_length,
                width: config.car_width,
                side,
                lateral_offset: config.car_lateral_offset,
            }
        })
        .collect();
    parked_cars.sort_by(|a, b| {
        (a.side == Side::Left, a.longitudinal_position)
            .partial_cmp(&(b.side == Side::Left, b.longitudinal_position))
            .unwrap()
    });

    // Pedestrians.
    let normal = Normal::new(config.pedestrian_speed_mean, config.pedestrian_speed_std)
        .map_err(|e| ConfigError::invalid(format!("pedestrian speed distribution: {e}")))?;
    let peds = config.pedestrian_range();
    let n_peds = rng.random_range(peds.min..=peds.max);
    let x_lo = config.pedestrian_min_x;
    let x_hi = (road.length - 3.0).max(x_lo);
    let blocked = |x: f64| {
        parked_cars.iter().any(|c| {
            let (a, b) = c.x_span();
            x >= a - 0.4 && x <= b + 0.4
        })
    };
    let mut pedestrians = Vec::with_capacity(n_peds);
    for id in 0..n_peds {
        let will_cross = rng.random::<f64>() >= config.non_crossing_fraction;
        let side = if rng.random::<bool>() { Side::Right } else { Side::Left };
        let walking_speed = sample_walking_speed(&mut rng, &normal);
        let use_crosswalk = will_cross && rng.random::<f64>() < config.crosswalk_preference;
        let x = if use_crosswalk {
            let h = (road.crosswalk_width / 2.0 - 0.5).max(0.0);
            road.crosswalk_position + rng.random_range(-h..=h)
        } else if will_cross {
            let mut x = None;
            for _ in 0..10_000 {
                let c = rng.random_range(x_lo..=x_hi);
                if !blocked(c) {
                    x = Some(c);
                    break;
                }
            }
            x.unwrap_or(road.crosswalk_position)
        } else {
            rng.random_range(x_lo..=x_hi)
        };
        let (sw_lo, sw_hi) = road.sidewalk(side);
        let y = rng.random_range((sw_lo + 0.5)..=(sw_hi - 0.5).max(sw_lo + 0.5));
        let gap = rng.random_range(config.trigger_gap.0..=config.trigger_gap.1);
        pedestrians.push(Pedestrian {
            id: id as u32,
            position: Vec2::new(x, y),
            walking_speed,
            will_cross,
            crossing_trigger: CrossingTrigger::EgoGap { meters: gap },
            state: PedestrianState::Waiting,
            side,
        });
    }

    let initial_speed = config.initial_speed.unwrap_or(road.speed_limit);
    Ok(WorldState {
        family: config.family,
        seed: config.seed,
        road,
        parked_cars,
        pedestrians,
        ego: EgoState {
            longitudinal_position: 0.0,
            velocity: initial_speed,
            acceleration: 0.0,
            previous_jerk: 0.0,
        },
        ego_body: config.ego.clone(),
        time: 0.0,
        tick: 0,
    })
}

/// Advances the world by one tick: forward-Euler ego integration with the
/// command clamped to `[-a_max, a_max]` and velocity clamped at zero,
/// pedestrian motion, crossing triggers and collision marking.
pub fn step_world(world: &WorldState, ego_accel_command: f64, dt: f64) -> WorldState {
    let mut next = world.clone();
    let a_max = world.road.a_max();
    let accel = if ego_accel_command.is_finite() {
        ego_accel_command.clamp(-a_max, a_max)
    } else {
        0.0
    };
    let ego = &world.ego;
    next.ego = EgoState {
        longitudinal_position: ego.longitudinal_position + dt * ego.velocity,
        velocity: (ego.velocity + dt * accel).max(0.0),
        acceleration: accel,
        previous_jerk: (accel - ego.acceleration) / dt,
    };
    next.time = world.time + dt;
    next.tick = world.tick + 1;

    // Pedestrians already crossing move first; triggers fire against the
    // updated ego and take effect from the next step.
    let road = &world.road;
    for p in next.pedestrians.iter_mut() {
        if p.state == PedestrianState::Crossing {
            p.position.y += p.crossing_direction() * p.walking_speed * dt;
            if p.reached_far_side(road) {
                p.state = PedestrianState::Crossed;
            }
        }
    }
    let front = next.ego_front();
    let rear = next.ego_rear();
    let time = next.time;
    for p in next.pedestrians.iter_mut() {
        if p.state != PedestrianState::Waiting || !p.will_cross {
            continue;
        }
        let fire = match p.crossing_trigger {
            CrossingTrigger::EgoGap { meters } => {
                let gap = p.position.x - front;
                (0.0..=meters).contains(&gap) || p.position.x < rear - 1.0
            }
            CrossingTrigger::Time { seconds } => time >= seconds,
        };
        if fire {
            p.state = PedestrianState::Crossing;
        }
    }
    if let Some(id) = detect_collision(&next) {
        if let Some(p) = next.pedestrians.iter_mut().find(|p| p.id == id) {
            p.state = PedestrianState::Hit;
        }
    }
    next
}

/// Lowest id of a pedestrian inside the ego footprint.
pub fn detect_collision(world: &WorldState) -> Option<u32> {
    let footprint = world.ego_footprint();
    world
        .pedestrians
        .iter()
        .filter(|p| footprint.contains(p.position))
        .map(|p| p.id)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare_world(v: f64) -> WorldState {
        let mut w = generate_scenario(&ScenarioConfig::for_family(Family::Sc1, 1)).unwrap();
        w.pedestrians.clear();
        w.parked_cars.clear();
        w.ego.velocity = v;
        w
    }

    fn ped(id: u32, x: f64, y: f64) -> Pedestrian {
        Pedestrian {
            id,
            position: Vec2::new(x, y),
            walking_speed: 1.5,
            will_cross: true,
            crossing_trigger: CrossingTrigger::EgoGap { meters: 10.0 },
            state: PedestrianState::Waiting,
            side: Side::Right,
        }
    }

    #[test]
    fn euler_step() {
        let w = bare_world(10.0);
        let n = step_world(&w, -2.0, 0.1);
        assert!((n.ego.velocity - 9.8).abs() < 1e-12);
        assert!((n.ego.longitudinal_position - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_reversing() {
        let w = bare_world(0.1);
        let n = step_world(&w, -2.0, 0.1);
        assert_eq!(n.ego.velocity, 0.0);
    }

    #[test]
    fn acceleration_is_clamped_to_friction_limit() {
        let w = bare_world(5.0);
        let n = step_world(&w, -100.0, 0.1);
        assert!((n.ego.acceleration + w.road.a_max()).abs() < 1e-12);
    }

    #[test]
    fn triggered_pedestrian_moves_next_tick() {
        let mut w = bare_world(0.0);
        let mut p = ped(0, 20.0, -3.0);
        p.crossing_trigger = CrossingTrigger::Time { seconds: 0.05 };
        w.pedestrians.push(p);
        let k = step_world(&w, 0.0, 0.1);
        assert_eq!(k.pedestrians[0].state, PedestrianState::Crossing);
        assert_eq!(k.pedestrians[0].position.y, -3.0);
        let k1 = step_world(&k, 0.0, 0.1);
        assert!((k1.pedestrians[0].position.y - (-3.0 + 0.15)).abs() < 1e-12);
    }

    #[test]
    fn collision_tie_break_lowest_id() {
        let mut w = bare_world(0.0);
        let y = w.ego_lane_y();
        let x = w.ego.longitudinal_position;
        w.pedestrians.push(ped(8, x + 0.5, y));
        w.pedestrians.push(ped(3, x - 0.5, y));
        w.pedestrians.push(ped(1, x + 10.0, y));
        assert_eq!(detect_collision(&w), Some(3));
        w.pedestrians.retain(|p| p.id == 1);
        assert_eq!(detect_collision(&w), None);
    }

    #[test]
    fn collision_at_center() {
        let mut w = bare_world(0.0);
        let c = w.ego_footprint().center();
        w.pedestrians.push(ped(5, c.x, c.y));
        assert_eq!(detect_collision(&w), Some(5));
    }

    #[test]
    fn sc1_counts() {
        let w = generate_scenario(&ScenarioConfig::for_family(Family::Sc1, 42)).unwrap();
        assert!((1..=2).contains(&w.pedestrians.len()));
        assert!((1..=2).contains(&w.parked_cars.len()));
        w.validate().unwrap();
    }

    #[test]
    fn sc3_fills_every_slot() {
        let w = generate_scenario(&ScenarioConfig::for_family(Family::Sc3, 7)).unwrap();
        assert_eq!(w.parked_cars.len(), 2 * w.road.slot_starts().len());
        w.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let c = ScenarioConfig::for_family(Family::Sc2, 99);
        let a = serde_json::to_string(&generate_scenario(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_scenario(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pedestrians_start_off_the_roadway() {
        for seed in 0..50 {
            let w = generate_scenario(&ScenarioConfig::for_family(Family::Sc3, seed)).unwrap();
            for p in &w.pedestrians {
                assert!(p.position.y < 0.0 || p.position.y > w.road.width());
            }
        }
    }

    #[test]
    fn degenerate_range_is_rejected() {
        let mut c = ScenarioConfig::for_family(Family::Sc2, 1);
        c.pedestrian_count = Some(CountRange::new(5, 2));
        assert!(generate_scenario(&c).is_err());
        let mut c = ScenarioConfig::for_family(Family::Sc2, 1);
        c.parked_car_count = Some(CountRange::new(1, 1000));
        assert!(generate_scenario(&c).is_err());
    }

    #[test]
    fn family_parse() {
        assert_eq!("SC2".parse::<Family>().unwrap(), Family::Sc2);
        assert!("sc4".parse::<Family>().is_err());
    }
}
