//! Stopping distances under ramped braking and the danger / discomfort /
//! safety partition of the look-ahead.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, RiskZoneError, StoppingError};
use crate::world::GRAVITY;

/// Deceleration whose magnitude rises linearly from zero to `a_level` over
/// `t_ramp`, then stays constant until standstill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakingProfile {
    pub a_level: f64,
    pub t_ramp: f64,
}

impl BrakingProfile {
    pub fn ramp_jerk(&self) -> f64 {
        if self.t_ramp > 0.0 {
            self.a_level / self.t_ramp
        } else {
            f64::INFINITY
        }
    }
}

/// Distance covered from speed `v0` to standstill under `profile`.
///
/// With `j = a / t_ramp` the speed during the ramp is `v0 - j t^2 / 2`.
/// If the vehicle is still moving when the ramp ends the distance is
/// `v0 t_r - a t_r^2 / 6 + (v0 - a t_r / 2)^2 / (2 a)`; otherwise it stops
/// at `t* = sqrt(2 v0 / j)` after `v0 t* - j t*^3 / 6`.
pub fn stopping_distance(v0: f64, profile: BrakingProfile) -> Result<f64, StoppingError> {
    let BrakingProfile { a_level, t_ramp } = profile;
    if !(v0 >= 0.0) || !v0.is_finite() {
        return Err(StoppingError::Invalid(format!("initial speed {v0}")));
    }
    if !(a_level >= 0.0) || !(t_ramp >= 0.0) || !t_ramp.is_finite() {
        return Err(StoppingError::Invalid(format!(
            "profile a_level={a_level}, t_ramp={t_ramp}"
        )));
    }
    if v0 == 0.0 {
        return Ok(0.0);
    }
    if a_level == 0.0 {
        return Err(StoppingError::NeverStops { v0 });
    }
    if t_ramp == 0.0 {
        return Ok(v0 * v0 / (2.0 * a_level));
    }
    let v_after_ramp = v0 - 0.5 * a_level * t_ramp;
    if v_after_ramp > 0.0 {
        Ok(v0 * t_ramp - a_level * t_ramp * t_ramp / 6.0
            + v_after_ramp * v_after_ramp / (2.0 * a_level))
    } else {
        let j = a_level / t_ramp;
        let t_stop = (2.0 * v0 / j).sqrt();
        Ok(v0 * t_stop - j * t_stop.powi(3) / 6.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskParams {
    pub a_comfort: f64,
    pub t_ramp_comfort: f64,
    pub t_ramp_min: f64,
    pub gravity: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            a_comfort: 2.0,
            t_ramp_comfort: 0.9,
            t_ramp_min: 0.3,
            gravity: GRAVITY,
        }
    }
}

impl RiskParams {
    pub fn comfort(&self) -> BrakingProfile {
        BrakingProfile {
            a_level: self.a_comfort,
            t_ramp: self.t_ramp_comfort,
        }
    }

    /// Full-friction braking with the shortest physical ramp.
    pub fn physical(&self, friction_mu: f64) -> BrakingProfile {
        BrakingProfile {
            a_level: friction_mu * self.gravity,
            t_ramp: self.t_ramp_min,
        }
    }

    /// Checks `d_stop_min <= d_stop_comfort` can hold for every speed:
    /// stronger deceleration and a shorter ramp on the physical side.
    pub fn validate(&self, friction_mu: f64) -> Result<(), ConfigError> {
        if !(self.a_comfort > 0.0) || !(self.t_ramp_comfort >= 0.0) || !(self.t_ramp_min >= 0.0) || !(self.gravity > 0.0) {
            return Err(ConfigError::invalid("braking parameters must be positive"));
        }
        let phys = self.physical(friction_mu);
        if phys.a_level < self.a_comfort || self.t_ramp_min > self.t_ramp_comfort {
            return Err(ConfigError::invalid(format!(
                "physical braking (a_max = {:.3}, t_ramp_min = {}) must dominate comfort braking (a = {}, t_ramp = {})",
                phys.a_level, self.t_ramp_min, self.a_comfort, self.t_ramp_comfort
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Zone {
    Danger,
    Discomfort,
    Safety,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskZones {
    pub d_stop_min: f64,
    pub d_stop_comfort: f64,
    pub r_visible: f64,
    /// Set when `d_stop_comfort > r_visible`; the safety span is empty.
    pub safety_clamped: bool,
}

impl RiskZones {
    pub fn danger(&self) -> (f64, f64) {
        (0.0, self.d_stop_min.min(self.r_visible))
    }

    pub fn discomfort(&self) -> (f64, f64) {
        (self.d_stop_min.min(self.r_visible), self.d_stop_comfort.min(self.r_visible))
    }

    pub fn safety(&self) -> (f64, f64) {
        let lo = self.d_stop_comfort.min(self.r_visible);
        (lo, self.r_visible)
    }

    pub fn zone_of(&self, d: f64) -> Zone {
        if d <= self.d_stop_min {
            Zone::Danger
        } else if d <= self.d_stop_comfort {
            Zone::Discomfort
        } else {
            Zone::Safety
        }
    }
}

pub fn compute_risk_zones(
    v0: f64,
    comfort: BrakingProfile,
    physical: BrakingProfile,
    r_visible: f64,
) -> Result<RiskZones, RiskZoneError> {
    let d_stop_min = stopping_distance(v0, physical)?;
    let d_stop_comfort = stopping_distance(v0, comfort)?;
    if d_stop_min > d_stop_comfort {
        return Err(RiskZoneError::Ordering {
            d_min: d_stop_min,
            d_comfort: d_stop_comfort,
        });
    }
    Ok(RiskZones {
        d_stop_min,
        d_stop_comfort,
        r_visible,
        safety_clamped: d_stop_comfort > r_visible,
    })
}

/// Comfortable stopping distance from the speed limit. Reported only; the
/// policy uses the distance at the current speed.
pub fn d_stop_comfort_min(speed_limit: f64, params: &RiskParams) -> Result<f64, StoppingError> {
    stopping_distance(speed_limit, params.comfort())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stationary_is_zero() {
        let p = BrakingProfile { a_level: 2.0, t_ramp: 0.9 };
        assert_eq!(stopping_distance(0.0, p).unwrap(), 0.0);
    }

    #[test]
    fn constant_deceleration_limit() {
        let p = BrakingProfile { a_level: 5.0, t_ramp: 0.0 };
        assert!((stopping_distance(10.0, p).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_deceleration_never_stops() {
        let p = BrakingProfile { a_level: 0.0, t_ramp: 0.5 };
        assert!(matches!(stopping_distance(3.0, p), Err(StoppingError::NeverStops { .. })));
    }

    #[test]
    fn branches_agree_at_ramp_end() {
        // v0 = a * t_r / 2 stops exactly at the end of the ramp
        let p = BrakingProfile { a_level: 4.0, t_ramp: 0.5 };
        let v0 = 1.0;
        let expect = 4.0 * 0.25 / 3.0;
        assert!((stopping_distance(v0, p).unwrap() - expect).abs() < 1e-12);
        assert!((stopping_distance(v0 + 1e-9, p).unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn stationary_zones() {
        let rp = RiskParams::default();
        let z = compute_risk_zones(0.0, rp.comfort(), rp.physical(0.8), 40.0).unwrap();
        assert_eq!(z.danger(), (0.0, 0.0));
        assert_eq!(z.discomfort(), (0.0, 0.0));
        assert_eq!(z.safety(), (0.0, 40.0));
    }

    #[test]
    fn equal_profiles_give_empty_discomfort() {
        let p = BrakingProfile { a_level: 3.0, t_ramp: 0.5 };
        let z = compute_risk_zones(8.0, p, p, 40.0).unwrap();
        assert_eq!(z.d_stop_min, z.d_stop_comfort);
        let (a, b) = z.discomfort();
        assert_eq!(a, b);
    }

    #[test]
    fn inverted_profiles_are_rejected() {
        let comfort = BrakingProfile { a_level: 8.0, t_ramp: 0.1 };
        let physical = BrakingProfile { a_level: 2.0, t_ramp: 0.9 };
        assert!(matches!(
            compute_risk_zones(8.0, comfort, physical, 40.0),
            Err(RiskZoneError::Ordering { .. })
        ));
    }

    #[test]
    fn clamped_safety_span_is_flagged() {
        let rp = RiskParams::default();
        let z = compute_risk_zones(20.0, rp.comfort(), rp.physical(0.8), 30.0).unwrap();
        assert!(z.safety_clamped);
        let (a, b) = z.safety();
        assert_eq!(a, b);
    }

    #[test]
    fn low_friction_config_rejected() {
        assert!(RiskParams::default().validate(0.1).is_err());
        assert!(RiskParams::default().validate(0.8).is_ok());
    }

    proptest! {
        #[test]
        fn strictly_increasing_in_speed(v in 0.0f64..20.0, dv in 1e-3f64..5.0, a in 1.0f64..10.0, t in 0.0f64..1.5) {
            let p = BrakingProfile { a_level: a, t_ramp: t };
            prop_assert!(stopping_distance(v + dv, p).unwrap() > stopping_distance(v, p).unwrap());
        }

        #[test]
        fn strictly_decreasing_in_deceleration(v in 0.01f64..20.0, a in 1.0f64..10.0, da in 1e-3f64..3.0, t in 0.0f64..1.5) {
            let p = BrakingProfile { a_level: a, t_ramp: t };
            let q = BrakingProfile { a_level: a + da, t_ramp: t };
            prop_assert!(stopping_distance(v, q).unwrap() < stopping_distance(v, p).unwrap());
        }

        #[test]
        fn zones_partition_look_ahead(v in 0.0f64..12.0) {
            let rp = RiskParams::default();
            let z = compute_risk_zones(v, rp.comfort(), rp.physical(0.8), 40.0).unwrap();
            prop_assert_eq!(z.danger().0, 0.0);
            prop_assert_eq!(z.danger().1, z.discomfort().0);
            prop_assert_eq!(z.discomfort().1, z.safety().0);
            prop_assert_eq!(z.safety().1, 40.0);
        }
    }
}
