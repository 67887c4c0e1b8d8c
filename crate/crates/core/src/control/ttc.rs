//! Path prediction for visible pedestrians and time to collision.

use crate::perception::{Perception, SeenPedestrian};

/// Longitudinal gap from the ego front to the pedestrian's crossing line
/// divided by the ego speed.
///
/// Infinite for a stationary ego and for a crossing line at or behind the
/// ego front: braking cannot keep the ego off a line it already overlaps.
pub fn time_to_collision(ego_front: f64, velocity: f64, pedestrian_x: f64) -> f64 {
    let gap = pedestrian_x - ego_front;
    if gap <= 0.0 || velocity <= 0.0 {
        return f64::INFINITY;
    }
    gap / velocity
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConflict {
    pub pedestrian: u32,
    /// Gap from the ego front to the crossing line.
    pub gap: f64,
    pub ttc: f64,
    /// Seconds until the pedestrian reaches the ego's lateral band.
    pub time_to_enter: f64,
}

/// Whether `ped` is predicted to be inside the ego's path: ahead of the
/// ego front, standing in or walking toward the widened lateral band of
/// the ego, and reaching it before the ego rear has passed its crossing
/// line at current speed.
pub fn path_conflict(p: &Perception, ped: &SeenPedestrian, lateral_margin: f64) -> Option<PathConflict> {
    let x = ped.position.x;
    if x <= p.ego_front {
        return None;
    }
    let (lo, hi) = p.ego_lateral_span;
    let (lo, hi) = (lo - lateral_margin, hi + lateral_margin);
    let y = ped.position.y;
    let vy = ped.velocity.y;
    let time_to_enter = if (lo..=hi).contains(&y) {
        0.0
    } else if y < lo && vy > 0.0 {
        (lo - y) / vy
    } else if y > hi && vy < 0.0 {
        (y - hi) / -vy
    } else {
        return None;
    };
    let v = p.ego.velocity;
    let time_to_clear = if v > 0.0 { (x - p.ego_rear) / v } else { f64::INFINITY };
    if time_to_enter >= time_to_clear {
        return None;
    }
    Some(PathConflict {
        pedestrian: ped.id,
        gap: x - p.ego_front,
        ttc: time_to_collision(p.ego_front, v, x),
        time_to_enter,
    })
}

/// The in-path pedestrian with the smallest gap; ties go to the lower id.
pub fn governing_conflict(p: &Perception, lateral_margin: f64) -> Option<PathConflict> {
    p.pedestrians
        .iter()
        .filter_map(|ped| path_conflict(p, ped, lateral_margin))
        .min_by(|a, b| a.gap.total_cmp(&b.gap).then(a.pedestrian.cmp(&b.pedestrian)))
}

/// Serde adapter for times that may be infinite: JSON has no infinity, so
/// it is written as `null` and read back as `+inf`.
pub mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        if t.is_finite() {
            s.serialize_f64(*t)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
