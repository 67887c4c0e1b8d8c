//! Independent reference implementations shared by the integration tests.
//! They deliberately avoid the library's numerics and geometry.

#![allow(dead_code)]

use occlusim::geometry::Vec2;
use occlusim::harness::TickRecord;
use occlusim::control::{Event, FsmState, PolicyThresholds};
use occlusim::world::{
    generate_scenario, CrossingTrigger, Family, ParkedCar, Pedestrian, PedestrianState, ScenarioConfig, Side, WorldState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn mul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, p);
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            out[j][i] = *x;
        }
    }
    out
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for x in m[col].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (x, p) in m[r].iter_mut().zip(&pivot_row) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Infinite-horizon LQR gain by value iteration on the Joseph-form cost
/// update `P <- Q + K'RK + (A - BK)' P (A - BK)`, run to machine precision.
pub fn lqr_value_iteration(q: &Mat, r: &Mat, a: &Mat, b: &Mat) -> Mat {
    let bt = transpose(b);
    let gain = |p: &Mat| {
        let s = add(r, &mul(&mul(&bt, p), b));
        mul(&inverse(&s), &mul(&mul(&bt, p), a))
    };
    let mut p = q.clone();
    for _ in 0..2_000_000 {
        let k = gain(&p);
        let acl = sub(a, &mul(b, &k));
        let next = add(&add(q, &mul(&mul(&transpose(&k), r), &k)), &mul(&mul(&transpose(&acl), &p), &acl));
        let next: Mat = (0..next.len())
            .map(|i| (0..next.len()).map(|j| 0.5 * (next[i][j] + next[j][i])).collect())
            .collect();
        let change = max_abs(&sub(&next, &p));
        p = next;
        if change <= 1e-15 * max_abs(&p).max(1.0) {
            break;
        }
    }
    gain(&p)
}

/// Distance to standstill by trapezoidal integration of a deceleration
/// that ramps linearly to `a` over `t_ramp`, with the final partial step
/// cut at the zero crossing of the speed.
pub fn stopping_distance_numeric(v0: f64, a: f64, t_ramp: f64, dt: f64) -> f64 {
    let decel = |t: f64| if t_ramp > 0.0 { a * (t / t_ramp).min(1.0) } else { a };
    let (mut t, mut v, mut x) = (0.0_f64, v0, 0.0_f64);
    if v0 <= 0.0 {
        return 0.0;
    }
    loop {
        let (d0, d1) = (decel(t), decel(t + dt));
        let v_next = v - 0.5 * (d0 + d1) * dt;
        if v_next <= 0.0 {
            // Speed is close to linear over the last step.
            let frac = v / (v - v_next);
            x += 0.5 * v * frac * dt;
            return x;
        }
        x += 0.5 * (v + v_next) * dt;
        v = v_next;
        t += dt;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub min: (f64, f64),
    pub max: (f64, f64),
}

/// Entry distance of the ray `origin + t * dir` (unit `dir`) into the
/// open box, by the slab method; `None` if the ray misses it.
pub fn ray_entry(origin: (f64, f64), dir: (f64, f64), b: &Aabb) -> Option<f64> {
    let mut t0 = 0.0_f64;
    let mut t1 = f64::INFINITY;
    for (o, d, lo, hi) in [(origin.0, dir.0, b.min.0, b.max.0), (origin.1, dir.1, b.min.1, b.max.1)] {
        if d.abs() < 1e-15 {
            if o <= lo || o >= hi {
                return None;
            }
        } else {
            let (mut ta, mut tb) = ((lo - o) / d, (hi - o) / d);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    (t1 > t0).then_some(t0)
}

/// Visible pedestrian ids and parked-car indices by casting one ray per
/// object from the sensor: an object is visible when it is within range and
/// field of view and no other car box is entered first along the ray.
pub fn raycast_visible(world: &WorldState, apex: (f64, f64), range: f64, half_angle: f64) -> (Vec<u32>, Vec<usize>) {
    let boxes: Vec<Aabb> = world
        .parked_cars
        .iter()
        .map(|c| {
            let r = c.rect(&world.road);
            Aabb {
                min: (r.min.x, r.min.y),
                max: (r.max.x, r.max.y),
            }
        })
        .collect();
    let sees = |target: (f64, f64), own: Option<usize>| {
        let (dx, dy) = (target.0 - apex.0, target.1 - apex.1);
        let dist = dx.hypot(dy);
        if dist > range || dy.atan2(dx).abs() > half_angle {
            return false;
        }
        let dir = (dx / dist, dy / dist);
        let reach = match own {
            Some(i) => match ray_entry(apex, dir, &boxes[i]) {
                Some(t) => t,
                None => return false,
            },
            None => dist,
        };
        !boxes
            .iter()
            .enumerate()
            .any(|(j, b)| Some(j) != own && ray_entry(apex, dir, b).is_some_and(|t| t < reach))
    };
    let peds = world
        .pedestrians
        .iter()
        .filter(|p| sees((p.position.x, p.position.y), None))
        .map(|p| p.id)
        .collect();
    let cars = (0..boxes.len())
        .filter(|&i| {
            let b = boxes[i];
            sees((0.5 * (b.min.0 + b.max.0), 0.5 * (b.min.1 + b.max.1)), Some(i))
        })
        .collect();
    (peds, cars)
}

/// A sc1 road with nothing on it and the ego at the road start.
pub fn empty_world(seed: u64) -> WorldState {
    let mut w = generate_scenario(&ScenarioConfig::for_family(Family::Sc1, seed)).unwrap();
    w.parked_cars.clear();
    w.pedestrians.clear();
    w
}

pub fn standing_pedestrian(id: u32, x: f64, y: f64, side: Side) -> Pedestrian {
    Pedestrian {
        id,
        position: Vec2::new(x, y),
        walking_speed: 1.4,
        will_cross: false,
        crossing_trigger: CrossingTrigger::EgoGap { meters: 0.0 },
        state: PedestrianState::Waiting,
        side,
    }
}

/// A small random world: up to six parked cars in distinct slots, a few
/// pedestrians on the sidewalks and the ego somewhere along its lane.
pub fn random_small_world(seed: u64) -> WorldState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = empty_world(seed);
    let slots = w.road.slot_starts();
    let n_cars = rng.random_range(0..=6usize);
    let mut used = Vec::new();
    while used.len() < n_cars {
        let side = if rng.random::<bool>() { Side::Right } else { Side::Left };
        let i = rng.random_range(0..slots.len());
        if used.contains(&(side, i)) {
            continue;
        }
        used.push((side, i));
        let slack = w.road.slot_length - 4.6;
        w.parked_cars.push(ParkedCar {
            longitudinal_position: slots[i] + rng.random_range(0.0..=slack.max(0.0)),
            length: 4.6,
            width: 1.8,
            side,
            lateral_offset: rng.random_range(0.0..0.4),
        });
    }
    for id in 0..rng.random_range(0..=6u32) {
        let side = if rng.random::<bool>() { Side::Right } else { Side::Left };
        let (lo, hi) = w.road.sidewalk(side);
        let x = rng.random_range(0.0..w.road.length);
        let y = rng.random_range(lo..hi);
        w.pedestrians.push(standing_pedestrian(id, x, y, side));
    }
    w.ego.longitudinal_position = rng.random_range(0.0..w.road.length * 0.7);
    w
}

/// First jerk or acceleration violation in a trace, as text.
pub fn bound_violation(trace: &[TickRecord], dt: f64, a_max: f64) -> Option<String> {
    for t in trace {
        let jerk = (t.applied_accel - t.ego.acceleration).abs() / dt;
        if jerk > t.command.j_limit + 1e-9 {
            return Some(format!(
                "tick {}: jerk {jerk:.6} above {} in {}",
                t.tick, t.command.j_limit, t.command.fsm_state
            ));
        }
        if t.applied_accel.abs() > a_max + 1e-9 {
            return Some(format!("tick {}: |a| = {} above a_max {a_max}", t.tick, t.applied_accel.abs()));
        }
    }
    None
}

/// First transition whose guard does not hold on the traced inputs, or
/// an Emergency tick that does not brake at the full ramp.
pub fn guard_violation(trace: &[TickRecord], th: &PolicyThresholds, dt: f64, a_max: f64) -> Option<String> {
    use FsmState::*;
    for t in trace {
        let (from, to) = (t.previous_state, t.command.fsm_state);
        let ttc = t.conflict.map(|c| c.ttc);
        let ok = match t.event {
            None => from == to,
            Some(Event::E8) if from == Yielding => ttc.is_some_and(|x| x < th.ttc_emergency),
            Some(Event::E8) => from.is_drive() && ttc.is_some_and(|x| x < th.ttc_stop),
            Some(Event::E7) => from == Emergency && ttc.is_none_or(|x| x >= th.ttc_stop),
            Some(Event::E5) => from.is_drive() && ttc.is_some_and(|x| x >= th.ttc_stop),
            Some(Event::E6) => from == Yielding && ttc.is_none(),
            Some(Event::E1) => {
                let z = t.decisive_zone.map(|z| th.zone(z).l_steady);
                ttc.is_none() && z.zip(t.max_risk).is_some_and(|(l, r)| r > l)
            }
            Some(Event::E3) => {
                let z = t.decisive_zone.map(|z| th.zone(z).l_cautious);
                ttc.is_none() && z.zip(t.max_risk).is_some_and(|(l, r)| r > l)
            }
            Some(Event::E2) | Some(Event::E4) => ttc.is_none() && to.is_drive(),
        };
        if !ok {
            return Some(format!("tick {}: {from} -> {to} via {:?} with ttc {ttc:?}", t.tick, t.event));
        }
        if to == Emergency {
            let expected = (t.ego.acceleration - th.emergency_j_limit * dt).max(-a_max);
            if (t.command.accel_out - expected).abs() > 1e-12 {
                return Some(format!("tick {}: emergency command {} instead of {expected}", t.tick, t.command.accel_out));
            }
        }
    }
    None
}