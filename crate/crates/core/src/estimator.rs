//! Pedestrian-emergence estimation: a logistic model over a six-component
//! observation of contextual cues (parked-car and pedestrian densities,
//! distances to the crosswalk, nearest parked car and nearest pedestrian).

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::perception::Perception;
use crate::visibility::VisibilityResult;
use crate::world::WorldState;

/// `[1, n1, n2, d1, d2, d3]`, every component in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub bias: f64,
    /// Normalized density of visible parked cars.
    pub n1: f64,
    /// Normalized density of visible pedestrians.
    pub n2: f64,
    /// Normalized distance to the crosswalk.
    pub d1: f64,
    /// Normalized distance to the closest visible parked car.
    pub d2: f64,
    /// Normalized distance to the closest visible pedestrian.
    pub d3: f64,
}

impl Observation {
    /// Observation when nothing is observable.
    pub const UNOBSERVED: Observation = Observation {
        bias: 1.0,
        n1: 0.0,
        n2: 0.0,
        d1: 1.0,
        d2: 1.0,
        d3: 1.0,
    };

    pub fn to_array(self) -> [f64; 6] {
        [self.bias, self.n1, self.n2, self.d1, self.d2, self.d3]
    }

    pub fn from_array(z: [f64; 6]) -> Self {
        Self {
            bias: z[0],
            n1: z[1],
            n2: z[2],
            d1: z[3],
            d2: z[4],
            d3: z[5],
        }
    }
}

/// Weights of the logistic emergence model, in observation order.
///
/// The defaults keep the sign structure densities `+`, distances `-` and
/// were set by hand against four anchor observations (see
/// `docs/configuration.md`):
///
/// | cue                                   | logit | probability |
/// |---------------------------------------|-------|-------------|
/// | nothing observed                      | -3.5  | 0.029       |
/// | at the crosswalk, nothing else seen   | +0.2  | 0.550       |
/// | one parked car alongside              | -0.3  | 0.426       |
/// | four or more parked cars at crosswalk | +6.1  | 0.998       |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmergenceWeights {
    pub w: [f64; 6],
}

impl Default for EmergenceWeights {
    fn default() -> Self {
        Self {
            w: [3.5, 3.6, 2.0, -3.7, -2.3, -1.0],
        }
    }
}

impl EmergenceWeights {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.w.iter().all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(ConfigError::invalid("emergence weights must be finite"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationParams {
    /// Half-width of the window around the query point used for densities.
    pub density_window: f64,
    pub car_saturation: f64,
    pub pedestrian_saturation: f64,
}

impl Default for ObservationParams {
    fn default() -> Self {
        Self {
            density_window: 10.0,
            car_saturation: 4.0,
            pedestrian_saturation: 4.0,
        }
    }
}

impl ObservationParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.density_window > 0.0 && self.car_saturation > 0.0 && self.pedestrian_saturation > 0.0 {
            Ok(())
        } else {
            Err(ConfigError::invalid("observation window and saturation counts must be positive"))
        }
    }
}

fn span_distance((lo, hi): (f64, f64), x: f64) -> f64 {
    (lo - x).max(0.0).max(x - hi)
}

/// Builds the observation at longitudinal position `query` from what the
/// ego currently perceives.
pub fn observe_at(perception: &Perception, params: &ObservationParams, query: f64) -> Observation {
    let r = perception.r_visible;
    let w = params.density_window;
    let norm_dist = |d: Option<f64>| d.map_or(1.0, |d| (d.min(r) / r).clamp(0.0, 1.0));

    let cars_in_window = perception
        .parked_cars
        .iter()
        .filter(|&&s| span_distance(s, query) <= w)
        .count() as f64;
    let peds_in_window = perception
        .pedestrians
        .iter()
        .filter(|p| (p.position.x - query).abs() <= w)
        .count() as f64;
    let nearest_car = perception
        .parked_cars
        .iter()
        .map(|&s| span_distance(s, query))
        .min_by(f64::total_cmp);
    let nearest_ped = perception
        .pedestrians
        .iter()
        .map(|p| (p.position.x - query).abs())
        .min_by(f64::total_cmp);

    Observation {
        bias: 1.0,
        n1: (cars_in_window / params.car_saturation).min(1.0),
        n2: (peds_in_window / params.pedestrian_saturation).min(1.0),
        d1: norm_dist(perception.crosswalk.map(|s| span_distance(s, query))),
        d2: norm_dist(nearest_car),
        d3: norm_dist(nearest_ped),
    }
}

/// Observation at `query` straight from a visibility result.
pub fn build_observation(
    visibility: &VisibilityResult,
    world: &WorldState,
    query: f64,
    r_visible: f64,
    params: &ObservationParams,
) -> Observation {
    observe_at(&Perception::observe(world, visibility, r_visible), params, query)
}

/// Logistic of `w . z`.
pub fn emergence_probability(obs: &Observation, weights: &EmergenceWeights) -> f64 {
    let s: f64 = obs
        .to_array()
        .iter()
        .zip(weights.w.iter())
        .map(|(z, w)| z * w)
        .sum();
    1.0 / (1.0 + (-s).exp())
}
