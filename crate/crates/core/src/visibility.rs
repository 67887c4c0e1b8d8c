//! Ego visibility: an angular sweep over occluder edges, clipped to the
//! sensor range disc and field-of-view wedge.
//!
//! The visible region is kept as a list of angular sectors around the
//! sensor. Inside each sector the boundary is either one occluder edge or
//! the range arc, so point membership is exact. [`VisibilityResult::polygon`]
//! is the same region flattened to a vertex list (arcs densified) for
//! dumps and plotting.
//!
//! Geometric ties (a ray grazing an occluder corner or edge) resolve to
//! visible, with a tolerance of [`GEOM_EPS`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::ConfigError;
use crate::geometry::{Rect, Segment, Vec2, GEOM_EPS};
use crate::world::{PedestrianState, Side, WorldState};

const ANGLE_EPS: f64 = 1e-12;
/// Sectors are split at least this finely so every sector is convex.
const MAX_SECTOR_SPAN: f64 = PI / 4.0;
/// Arc densification step for the vertex-list polygon.
const ARC_STEP: f64 = PI / 180.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorSpec {
    pub r_visible: f64,
    pub fov_half_angle: f64,
    /// Mount point relative to the ego footprint center.
    pub mount_point: Vec2,
    /// Whether crossing pedestrians block the view.
    pub pedestrians_occlude: bool,
    /// Side of the square used for a pedestrian occluder.
    pub pedestrian_occluder_size: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            r_visible: 40.0,
            fov_half_angle: 70f64.to_radians(),
            mount_point: Vec2::new(2.25, 0.0),
            pedestrians_occlude: false,
            pedestrian_occluder_size: 0.5,
        }
    }
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.r_visible > 0.0) {
            return Err(ConfigError::invalid("r_visible must be positive"));
        }
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle <= PI) {
            return Err(ConfigError::invalid("fov_half_angle must lie in (0, pi]"));
        }
        if self.pedestrians_occlude && !(self.pedestrian_occluder_size > 0.0) {
            return Err(ConfigError::invalid("pedestrian occluder size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Occluder {
    ParkedCar(usize),
    Pedestrian(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Arc,
    Edge { segment: Segment, occluder: Occluder },
}

/// Angular interval `[start, end]` (world-frame radians) and what bounds
/// the view inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub start: f64,
    pub end: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleRegion {
    pub apex: Vec2,
    pub range: f64,
    pub half_angle: f64,
    pub sectors: Vec<Sector>,
}

impl VisibleRegion {
    /// Sectors whose closed angular interval contains `phi`.
    fn sectors_at(&self, phi: f64) -> impl Iterator<Item = &Sector> {
        let i = self.sectors.partition_point(|s| s.end < phi - ANGLE_EPS);
        self.sectors[i..]
            .iter()
            .take_while(move |s| s.start <= phi + ANGLE_EPS)
    }

    fn in_fov(&self, phi: f64) -> bool {
        phi.abs() <= self.half_angle + ANGLE_EPS
    }

    /// Boundary distance of `sector` along unit direction `dir`.
    fn reach(&self, sector: &Sector, dir: Vec2) -> f64 {
        match sector.boundary {
            Boundary::Arc => self.range,
            Boundary::Edge { segment, .. } => segment
                .line_distance(self.apex, dir)
                .unwrap_or(self.range)
                .min(self.range),
        }
    }

    /// Exact membership of `p` in the visible region.
    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.apex;
        let rho = d.norm();
        if rho <= GEOM_EPS {
            return true;
        }
        if rho > self.range + GEOM_EPS {
            return false;
        }
        let phi = d.angle();
        if !self.in_fov(phi) {
            return false;
        }
        let dir = d * (1.0 / rho);
        self.sectors_at(phi)
            .any(|s| rho <= self.reach(s, dir) + GEOM_EPS)
    }

    /// Whether the first thing the ray toward `p` meets is `occluder`
    /// itself (used for objects whose reference point lies inside their own
    /// occluding shape), with `p` in range and field of view.
    fn first_hit_is(&self, p: Vec2, occluder: Occluder) -> bool {
        let d = p - self.apex;
        let rho = d.norm();
        if rho > self.range + GEOM_EPS {
            return false;
        }
        let phi = d.angle();
        if !self.in_fov(phi) {
            return false;
        }
        self.sectors_at(phi).any(|s| match s.boundary {
            Boundary::Edge { occluder: o, .. } => o == occluder,
            Boundary::Arc => false,
        })
    }

    /// Vertex list of the region (arcs densified). Star-shaped about the
    /// apex; the apex itself is included unless the view is a full circle.
    pub fn polygon(&self) -> Vec<Vec2> {
        let mut out: Vec<Vec2> = Vec::new();
        let full_circle = self.half_angle >= PI - ANGLE_EPS;
        if !full_circle {
            out.push(self.apex);
        }
        let push = |v: Vec2, out: &mut Vec<Vec2>| {
            if out.last().is_none_or(|l| (*l - v).norm() > 1e-9) {
                out.push(v);
            }
        };
        for s in &self.sectors {
            match s.boundary {
                Boundary::Arc => {
                    let n = ((s.end - s.start) / ARC_STEP).ceil().max(1.0) as usize;
                    for k in 0..=n {
                        let t = s.start + (s.end - s.start) * k as f64 / n as f64;
                        push(self.apex + Vec2::from_polar(self.range, t), &mut out);
                    }
                }
                Boundary::Edge { .. } => {
                    for t in [s.start, s.end] {
                        let dir = Vec2::from_polar(1.0, t);
                        push(self.apex + dir * self.reach(s, dir), &mut out);
                    }
                }
            }
        }
        if full_circle && out.len() > 1 && (out[0] - *out.last().unwrap()).norm() <= 1e-9 {
            out.pop();
        }
        out
    }

    /// Visible `x` intervals of the horizontal line `y`, restricted to
    /// `[x_min, x_max]`, sorted and merged.
    pub fn visible_on_line(&self, y: f64, x_min: f64, x_max: f64) -> Vec<(f64, f64)> {
        let dy = y - self.apex.y;
        if dy.abs() <= GEOM_EPS {
            return Vec::new();
        }
        let mut spans: Vec<(f64, f64)> = Vec::new();
        for s in &self.sectors {
            let Some((mut lo, mut hi)) = wedge_on_line(self.apex, dy, s.start, s.end) else {
                continue;
            };
            match s.boundary {
                Boundary::Arc => {
                    let h2 = self.range * self.range - dy * dy;
                    if h2 < 0.0 {
                        continue;
                    }
                    let h = h2.sqrt();
                    lo = lo.max(self.apex.x - h);
                    hi = hi.min(self.apex.x + h);
                }
                Boundary::Edge { segment, .. } => {
                    match halfplane_on_line(segment, self.apex, y) {
                        Some((a, b)) => {
                            lo = lo.max(a);
                            hi = hi.min(b);
                        }
                        None => continue,
                    }
                }
            }
            lo = lo.max(x_min);
            hi = hi.min(x_max);
            if hi - lo > GEOM_EPS {
                spans.push((lo, hi));
            }
        }
        merge_spans(spans)
    }
}

/// `x` range of points on the line `apex.y + dy` whose bearing from `apex`
/// lies in `[a, b]`.
fn wedge_on_line(apex: Vec2, dy: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    // Bearings reaching the line: (-pi, 0) below the apex, (0, pi) above.
    let (lo_b, hi_b) = if dy < 0.0 { (-PI, 0.0) } else { (0.0, PI) };
    let a = a.max(lo_b);
    let b = b.min(hi_b);
    if b - a <= ANGLE_EPS {
        return None;
    }
    let x_at = |phi: f64| -> f64 {
        let s = phi.sin();
        if s.abs() < 1e-300 {
            if (phi.cos() > 0.0) == (dy * s >= 0.0) {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            apex.x + dy * phi.cos() / s
        }
    };
    let xa = if (a - lo_b).abs() <= ANGLE_EPS {
        if dy < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY }
    } else {
        x_at(a)
    };
    let xb = if (hi_b - b).abs() <= ANGLE_EPS {
        if dy < 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }
    } else {
        x_at(b)
    };
    Some((xa.min(xb), xa.max(xb)))
}

/// `x` range of the line `y` lying on the apex side of the supporting line
/// of `seg` (closed half-plane).
fn halfplane_on_line(seg: Segment, apex: Vec2, y: f64) -> Option<(f64, f64)> {
    let e = seg.b - seg.a;
    let s0 = e.cross(apex - seg.a).signum();
    // side(x) = e.x * (y - a.y) - e.y * (x - a.x)
    let c0 = e.x * (y - seg.a.y) + e.y * seg.a.x;
    if e.y.abs() < 1e-15 {
        return (s0 * c0 >= -GEOM_EPS).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let root = c0 / e.y;
    // s0 * (c0 - e.y * x) >= 0
    if s0 * e.y > 0.0 {
        Some((f64::NEG_INFINITY, root))
    } else {
        Some((root, f64::INFINITY))
    }
}

fn merge_spans(mut spans: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (lo, hi) in spans {
        match out.last_mut() {
            Some(last) if lo <= last.1 + GEOM_EPS => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidewalkInterval {
    pub side: Side,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub polygon: Vec<Vec2>,
    /// Sorted ascending.
    pub visible_pedestrian_ids: Vec<u32>,
    /// Sorted ascending; indices into `WorldState::parked_cars`.
    pub visible_parked_car_indices: Vec<usize>,
    /// Right side first, each side sorted and disjoint.
    pub occluded_sidewalk_intervals: Vec<SidewalkInterval>,
    pub crosswalk_visible: bool,
    pub region: VisibleRegion,
}

impl VisibilityResult {
    pub fn pedestrian_visible(&self, id: u32) -> bool {
        self.visible_pedestrian_ids.binary_search(&id).is_ok()
    }
}

fn facing_edges(rect: &Rect, apex: Vec2) -> impl Iterator<Item = Segment> + '_ {
    // Counter-clockwise corners: the outward normal of edge (a, b) is on
    // its right. An edge faces the apex when the apex is strictly outside.
    rect.edges()
        .into_iter()
        .filter(move |e| (e.b - e.a).cross(apex - e.a) < -GEOM_EPS * 1e-3)
}

fn rect_distance(rect: &Rect, p: Vec2) -> f64 {
    let dx = (rect.min.x - p.x).max(0.0).max(p.x - rect.max.x);
    let dy = (rect.min.y - p.y).max(0.0).max(p.y - rect.max.y);
    dx.hypot(dy)
}

/// Bearings at which `seg` crosses the circle of radius `r` around `apex`.
fn circle_crossings(seg: Segment, apex: Vec2, r: f64) -> impl Iterator<Item = f64> {
    let d = seg.b - seg.a;
    let f = seg.a - apex;
    let a = d.dot(d);
    let b = 2.0 * f.dot(d);
    let c = f.dot(f) - r * r;
    let disc = b * b - 4.0 * a * c;
    let mut out = [None, None];
    if a > 0.0 && disc >= 0.0 {
        let sq = disc.sqrt();
        for (k, t) in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)].into_iter().enumerate() {
            if (0.0..=1.0).contains(&t) {
                out[k] = Some((seg.a + d * t - apex).angle());
            }
        }
    }
    out.into_iter().flatten()
}

/// Builds the visible region around `apex` for the given occluders.
pub fn sweep(
    apex: Vec2,
    range: f64,
    half_angle: f64,
    occluders: &[(Occluder, Rect)],
) -> VisibleRegion {
    let (lo, hi) = (-half_angle, half_angle);
    let mut edges: Vec<(Segment, Occluder)> = Vec::new();
    for (occ, rect) in occluders {
        if rect.contains(apex) || rect_distance(rect, apex) > range {
            continue;
        }
        edges.extend(facing_edges(rect, apex).map(|s| (s, *occ)));
    }

    let mut angles: Vec<f64> = Vec::with_capacity(4 * edges.len() + 16);
    let n_base = ((hi - lo) / MAX_SECTOR_SPAN).ceil().max(1.0) as usize;
    angles.extend((0..=n_base).map(|k| lo + (hi - lo) * k as f64 / n_base as f64));
    for (seg, _) in &edges {
        for v in [seg.a, seg.b] {
            angles.push((v - apex).angle());
        }
        angles.extend(circle_crossings(*seg, apex, range));
    }
    angles.retain(|t| *t >= lo && *t <= hi);
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_EPS);

    let mut sectors: Vec<Sector> = Vec::with_capacity(angles.len());
    for w in angles.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dir = Vec2::from_polar(1.0, 0.5 * (a + b));
        let mut best: Option<(f64, Segment, Occluder)> = None;
        for (seg, occ) in &edges {
            if let Some(t) = seg.ray_hit(apex, dir) {
                if t < range && best.is_none_or(|(bt, _, _)| t < bt) {
                    best = Some((t, *seg, *occ));
                }
            }
        }
        let boundary = match best {
            Some((_, segment, occluder)) => Boundary::Edge { segment, occluder },
            None => Boundary::Arc,
        };
        match sectors.last_mut() {
            Some(last)
                if last.boundary == boundary
                    && (b - last.start) <= MAX_SECTOR_SPAN + ANGLE_EPS =>
            {
                last.end = b;
            }
            _ => sectors.push(Sector {
                start: a,
                end: b,
                boundary,
            }),
        }
    }
    VisibleRegion {
        apex,
        range,
        half_angle,
        sectors,
    }
}

/// Sensor position in world coordinates.
pub fn sensor_position(world: &WorldState, sensor: &SensorSpec) -> Vec2 {
    Vec2::new(
        world.ego.longitudinal_position + sensor.mount_point.x,
        world.ego_lane_y() + sensor.mount_point.y,
    )
}

/// Occluding shapes in the world under `sensor`'s occlusion settings.
pub fn occluders(world: &WorldState, sensor: &SensorSpec) -> Vec<(Occluder, Rect)> {
    let mut occ: Vec<(Occluder, Rect)> = world
        .parked_cars
        .iter()
        .enumerate()
        .map(|(i, c)| (Occluder::ParkedCar(i), c.rect(&world.road)))
        .collect();
    if sensor.pedestrians_occlude {
        occ.extend(
            world
                .pedestrians
                .iter()
                .filter(|p| p.state == PedestrianState::Crossing)
                .map(|p| {
                    let s = sensor.pedestrian_occluder_size;
                    (Occluder::Pedestrian(p.id), Rect::from_center(p.position, s, s))
                }),
        );
    }
    occ
}

/// Computes what the ego sensor sees in `world`.
///
/// Reference point of every object is its centroid. A parked car (or an
/// occluding pedestrian) counts as visible when the ray toward its centroid
/// meets the object itself before any other occluder.
pub fn compute_visibility(world: &WorldState, sensor: &SensorSpec) -> VisibilityResult {
    let apex = sensor_position(world, sensor);
    let occ = occluders(world, sensor);
    let region = sweep(apex, sensor.r_visible, sensor.fov_half_angle, &occ);

    let visible_pedestrian_ids: Vec<u32> = {
        let mut ids: Vec<u32> = world
            .pedestrians
            .iter()
            .filter(|p| {
                region.contains(p.position)
                    || (sensor.pedestrians_occlude
                        && p.state == PedestrianState::Crossing
                        && region.first_hit_is(p.position, Occluder::Pedestrian(p.id)))
            })
            .map(|p| p.id)
            .collect();
        ids.sort_unstable();
        ids
    };
    let visible_parked_car_indices: Vec<usize> = world
        .parked_cars
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            region.first_hit_is(c.rect(&world.road).center(), Occluder::ParkedCar(*i))
        })
        .map(|(i, _)| i)
        .collect();

    let mut occluded_sidewalk_intervals = Vec::new();
    for side in [Side::Right, Side::Left] {
        let y = world.road.sidewalk_center(side);
        let visible = region.visible_on_line(y, 0.0, world.road.length);
        let mut cursor = 0.0;
        for (lo, hi) in visible.into_iter().chain([(world.road.length, world.road.length)]) {
            if lo - cursor > GEOM_EPS {
                occluded_sidewalk_intervals.push(SidewalkInterval {
                    side,
                    start: cursor,
                    end: lo,
                });
            }
            cursor = cursor.max(hi);
        }
    }

    let crosswalk_visible =
        region.contains(Vec2::new(world.road.crosswalk_position, world.ego_lane_y()));

    VisibilityResult {
        polygon: region.polygon(),
        visible_pedestrian_ids,
        visible_parked_car_indices,
        occluded_sidewalk_intervals,
        crosswalk_visible,
        region,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polygon_contains, segments_properly_intersect};
    use crate::world::{
        generate_scenario, CrossingTrigger, Family, ParkedCar, Pedestrian, ScenarioConfig,
    };

    fn empty_world() -> WorldState {
        let mut w = generate_scenario(&ScenarioConfig::for_family(Family::Sc1, 3)).unwrap();
        w.parked_cars.clear();
        w.pedestrians.clear();
        w
    }

    fn ped(id: u32, x: f64, y: f64) -> Pedestrian {
        Pedestrian {
            id,
            position: Vec2::new(x, y),
            walking_speed: 1.4,
            will_cross: false,
            crossing_trigger: CrossingTrigger::EgoGap { meters: 10.0 },
            state: PedestrianState::Waiting,
            side: Side::Right,
        }
    }

    #[test]
    fn empty_world_gives_clipped_wedge() {
        let mut w = empty_world();
        let s = SensorSpec::default();
        let apex = sensor_position(&w, &s);
        w.pedestrians.push(ped(0, apex.x + 20.0, apex.y - 3.0));
        w.pedestrians.push(ped(1, apex.x + 45.0, apex.y));
        w.pedestrians.push(ped(2, apex.x - 5.0, apex.y));
        let v = compute_visibility(&w, &s);
        assert!(v.region.sectors.iter().all(|s| s.boundary == Boundary::Arc));
        assert_eq!(v.visible_pedestrian_ids, vec![0]);
        assert_eq!(v.polygon[0], apex);
        for p in &v.polygon[1..] {
            assert!(((*p - apex).norm() - s.r_visible).abs() < 1e-9);
            assert!((*p - apex).angle().abs() <= s.fov_half_angle + 1e-9);
        }
    }

    #[test]
    fn car_between_ego_and_pedestrian_blocks() {
        let mut w = empty_world();
        let s = SensorSpec::default();
        let apex = sensor_position(&w, &s);
        w.parked_cars.push(ParkedCar {
            longitudinal_position: 15.0,
            length: 4.6,
            width: 1.8,
            side: Side::Right,
            lateral_offset: 0.3,
        });
        let rc = w.parked_cars[0].rect(&w.road).center();
        // on the ray through the car's center, beyond it
        let dir = rc - apex;
        let behind = apex + dir * 1.4;
        w.pedestrians.push(ped(4, behind.x, behind.y));
        let v = compute_visibility(&w, &s);
        assert!(v.visible_pedestrian_ids.is_empty());
        assert_eq!(v.visible_parked_car_indices, vec![0]);
        assert!(!v.occluded_sidewalk_intervals.is_empty());
    }

    #[test]
    fn polygon_is_simple_and_star_shaped() {
        for seed in 0..30 {
            let w = generate_scenario(&ScenarioConfig::for_family(Family::Sc3, seed)).unwrap();
            let s = SensorSpec::default();
            let v = compute_visibility(&w, &s);
            let poly = &v.polygon;
            let n = poly.len();
            for i in 0..n {
                let e = Segment::new(poly[i], poly[(i + 1) % n]);
                for j in (i + 2)..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    let f = Segment::new(poly[j], poly[(j + 1) % n]);
                    assert!(!segments_properly_intersect(e, f), "seed {seed}: edges {i},{j} cross");
                }
            }
            // star-shaped: bearings of successive vertices are non-decreasing
            let bearings: Vec<f64> = poly[1..].iter().map(|p| (*p - v.region.apex).angle()).collect();
            assert!(bearings.windows(2).all(|b| b[1] >= b[0] - 1e-9));
        }
    }

    #[test]
    fn visible_pedestrians_lie_inside_polygon() {
        for seed in 0..30 {
            let w = generate_scenario(&ScenarioConfig::for_family(Family::Sc2, seed)).unwrap();
            let v = compute_visibility(&w, &SensorSpec::default());
            for p in &w.pedestrians {
                let inside_region = v.region.contains(p.position);
                assert_eq!(inside_region, v.pedestrian_visible(p.id));
                // the flattened polygon agrees away from the arc band
                let near_arc = ((p.position - v.region.apex).norm() - v.region.range).abs() < 0.01;
                if !near_arc {
                    assert_eq!(polygon_contains(&v.polygon, p.position), inside_region, "seed {seed} ped {}", p.id);
                }
            }
        }
    }

    #[test]
    fn occluded_intervals_sorted_and_disjoint() {
        let w = generate_scenario(&ScenarioConfig::for_family(Family::Sc3, 5)).unwrap();
        let v = compute_visibility(&w, &SensorSpec::default());
        for side in [Side::Right, Side::Left] {
            let iv: Vec<_> = v.occluded_sidewalk_intervals.iter().filter(|i| i.side == side).collect();
            assert!(iv.iter().all(|i| i.end > i.start));
            assert!(iv.windows(2).all(|w| w[0].end < w[1].start));
        }
    }

    #[test]
    fn full_circle_fov() {
        let w = empty_world();
        let s = SensorSpec {
            fov_half_angle: PI,
            ..SensorSpec::default()
        };
        let v = compute_visibility(&w, &s);
        let apex = v.region.apex;
        assert!(v.region.contains(apex + Vec2::new(-10.0, 0.0)));
        assert!(v.region.contains(apex + Vec2::new(0.0, -39.0)));
        assert!(!v.region.contains(apex + Vec2::new(0.0, -41.0)));
    }
}
