//! Radar measurement generation and ground truth.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::SensorFrame;
use crate::geometry::{wrap_angle, Vec2};
use crate::grid::{CellIndex, GridSpec};
use crate::sensor_models::doppler_predict_frame;
use crate::types::{Detection, EgoPose, NoiseStd, SensorMount};

use super::world::WorldModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Arc-length spacing of candidate reflection points along edges (m).
    pub point_spacing: f64,
    /// Azimuth resolution cell (rad). Each edge yields at most one detection
    /// per cell and sensor; 0 disables the limit.
    pub azimuth_resolution: f64,
    /// Randomize the sampling phase along each edge per scan.
    pub jitter: bool,
    /// Standard deviations reported with every detection.
    pub noise: NoiseStd,
    /// Draw Gaussian noise with the reported standard deviations.
    pub add_noise: bool,
    pub delta_range: f64,
    pub delta_azimuth: f64,
    pub delta_range_rate: f64,
    pub k_pos: u32,
    pub k_range_rate: u32,
    /// Binomial parameter of the alias shift law.
    pub alias_p: f64,
    /// Probability that a detection is subject to the alias shift law at all.
    pub alias_rate: f64,
    /// Inject range / azimuth shifts.
    pub position_aliasing: bool,
    /// Inject range-rate shifts.
    pub range_rate_aliasing: bool,
    /// Mean false detections per scan and sensor.
    pub clutter_rate: f64,
    /// Range-rate bound of clutter detections (m/s).
    pub clutter_range_rate: f64,
    /// Clutter is produced for `clutter_start <= t < clutter_end`.
    pub clutter_start: f64,
    pub clutter_end: Option<f64>,
    /// Detections closer than this are discarded (m).
    pub min_range: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            point_spacing: 0.5,
            azimuth_resolution: 0.02,
            jitter: true,
            noise: NoiseStd::default(),
            add_noise: true,
            delta_range: 15.0,
            delta_azimuth: 0.35,
            delta_range_rate: 12.5,
            k_pos: 1,
            k_range_rate: 1,
            alias_p: 0.5,
            alias_rate: 1.0,
            position_aliasing: false,
            range_rate_aliasing: false,
            clutter_rate: 2.0,
            clutter_range_rate: 20.0,
            clutter_start: 0.0,
            clutter_end: None,
            min_range: 0.5,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.point_spacing > 0.0) {
            return Err(Error::invalid("point_spacing", "must be > 0"));
        }
        if !(self.azimuth_resolution >= 0.0) {
            return Err(Error::invalid("azimuth_resolution", "must be >= 0"));
        }
        if !(self.clutter_rate >= 0.0 && self.clutter_range_rate >= 0.0) {
            return Err(Error::invalid("clutter_rate", "rates must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.alias_p) {
            return Err(Error::invalid("alias_p", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.alias_rate) {
            return Err(Error::invalid("alias_rate", "must lie in [0, 1]"));
        }
        if !(self.noise.range > 0.0 && self.noise.azimuth > 0.0 && self.noise.range_rate > 0.0) {
            return Err(Error::invalid("noise", "reported standard deviations must be > 0"));
        }
        if !(self.delta_range > 0.0 && self.delta_azimuth > 0.0 && self.delta_range_rate > 0.0) {
            return Err(Error::invalid("delta", "ambiguity intervals must be > 0"));
        }
        Ok(())
    }

    /// No noise, no aliasing, no clutter.
    pub fn ideal() -> Self {
        Self {
            jitter: false,
            add_noise: false,
            clutter_rate: 0.0,
            ..Self::default()
        }
    }

    fn clutter_active(&self, t: f64) -> bool {
        t >= self.clutter_start && self.clutter_end.is_none_or(|e| t < e)
    }
}

/// Draws an alias index from `Binomial(2k, p) - k`.
pub fn sample_shift<R: Rng + ?Sized>(k: u32, p: f64, rng: &mut R) -> i32 {
    if k == 0 {
        return 0;
    }
    let b = Binomial::new(2 * k as u64, p).expect("alias_p validated");
    b.sample(rng) as i32 - k as i32
}

/// Parameter of the first crossing of ray `o → o + d` (`t ∈ (0, 1)`) with segment `a–b`.
fn ray_hit(o: Vec2, d: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = d.cross(e);
    if denom.abs() < 1e-12 {
        return None;
    }
    let w = a - o;
    let t = w.cross(e) / denom;
    let u = w.cross(d) / denom;
    (t > 1e-9 && t < 1.0 - 1e-9 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
}

fn visible(from: Vec2, to: Vec2, own: Option<usize>, edges: &[(Vec2, Vec2, f64)]) -> bool {
    let d = to - from;
    edges
        .iter()
        .enumerate()
        .all(|(k, &(a, b, _))| Some(k) == own || ray_hit(from, d, a, b).is_none())
}

/// True reflection points of one scan: `(position, velocity, detection_prob, edge)`.
fn reflection_points<R: Rng + ?Sized>(
    world: &WorldModel,
    edges: &[(Vec2, Vec2, f64)],
    sim: &SimParams,
    rng: &mut R,
) -> Vec<(Vec2, Vec2, f64, Option<usize>)> {
    let n_static = world.segments.len();
    let mut out = Vec::new();
    for (k, &(a, b, prob)) in edges.iter().enumerate() {
        let velocity = if k < n_static {
            Vec2::ZERO
        } else {
            world.boxes[(k - n_static) / 4].velocity
        };
        let len = (b - a).norm();
        let dir = (b - a) * (1.0 / len);
        let phase = if sim.jitter { rng.random::<f64>() * sim.point_spacing } else { 0.5 * sim.point_spacing };
        let mut s = phase.min(0.5 * len);
        while s <= len {
            out.push((a + dir * s, velocity, prob, Some(k)));
            s += sim.point_spacing;
        }
    }
    for p in &world.points {
        out.push((p.position, p.velocity, p.detection_prob, None));
    }
    out
}

/// Generates the detections of every mount for the scan at time `t`.
pub fn simulate_scan<R: Rng + ?Sized>(
    world: &WorldModel,
    t: f64,
    mounts: &[SensorMount],
    pose: &EgoPose,
    sim: &SimParams,
    rng: &mut R,
) -> Vec<Detection> {
    let edges = world.edges_at(t);
    let points = reflection_points(world, &edges, sim, rng);
    let noise = |std: f64, rng: &mut R| -> f64 {
        if sim.add_noise {
            Normal::new(0.0, std).expect("noise validated").sample(rng)
        } else {
            0.0
        }
    };
    let mut out = Vec::new();
    for mount in mounts {
        let frame = SensorFrame::new(mount, pose);
        let mut occupied_bins = HashSet::new();
        let make = |range: f64, azimuth: f64, range_rate: f64| Detection {
            sensor_id: mount.sensor_id,
            timestamp: t,
            range,
            azimuth,
            range_rate,
            sigma_range: sim.noise.range,
            sigma_azimuth: sim.noise.azimuth,
            sigma_range_rate: sim.noise.range_rate,
        };
        for &(p, v, prob, own) in &points {
            let (r, phi) = frame.world_to_polar(p);
            if r < sim.min_range || r > mount.max_range || !mount.in_fov(phi) {
                continue;
            }
            if !visible(frame.position, p, own, &edges) {
                continue;
            }
            if rng.random::<f64>() >= prob {
                continue;
            }
            if let (Some(edge), true) = (own, sim.azimuth_resolution > 0.0) {
                if !occupied_bins.insert((edge, (phi / sim.azimuth_resolution).floor() as i64)) {
                    continue;
                }
            }
            let Ok(rr) = doppler_predict_frame(p, v, &frame) else { continue };
            let mut r = r + noise(sim.noise.range, rng);
            let mut phi = phi + noise(sim.noise.azimuth, rng);
            let mut rr = rr + noise(sim.noise.range_rate, rng);
            if sim.position_aliasing && rng.random::<f64>() < sim.alias_rate {
                r += sample_shift(sim.k_pos, sim.alias_p, rng) as f64 * sim.delta_range;
                phi += sample_shift(sim.k_pos, sim.alias_p, rng) as f64 * sim.delta_azimuth;
            }
            if sim.range_rate_aliasing && rng.random::<f64>() < sim.alias_rate {
                rr += sample_shift(sim.k_range_rate, sim.alias_p, rng) as f64 * sim.delta_range_rate;
            }
            let phi = wrap_angle(phi);
            // aliases that leave the sensor's coverage are not reported
            if r < sim.min_range || r > mount.max_range || !mount.in_fov(phi) {
                continue;
            }
            out.push(make(r, phi, rr));
        }
        if sim.clutter_rate > 0.0 && sim.clutter_active(t) {
            let n = Poisson::new(sim.clutter_rate).expect("rate validated").sample(rng) as usize;
            for _ in 0..n {
                let r_min = sim.min_range.min(mount.max_range);
                let u: f64 = rng.random();
                let r = (r_min * r_min + u * (mount.max_range.powi(2) - r_min * r_min)).sqrt();
                let phi = (2.0 * rng.random::<f64>() - 1.0) * mount.fov_azimuth;
                let rr = (2.0 * rng.random::<f64>() - 1.0) * sim.clutter_range_rate;
                out.push(make(r, phi, rr));
            }
        }
    }
    out
}

/// World-frame state of one moving object.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectTruth {
    pub id: u32,
    pub center: Vec2,
    pub heading: f64,
    pub velocity: Vec2,
    pub length: f64,
    pub width: f64,
}

/// Occupied-cell mask (row-major over `spec`) and moving objects at `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub mask: Vec<bool>,
    pub objects: Vec<ObjectTruth>,
}

impl GroundTruth {
    pub fn occupied_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

fn project(points: &[Vec2], axis: Vec2) -> (f64, f64) {
    points
        .iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Positive-area overlap of two convex polygons (separating axis test).
fn polygons_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    const EPS: f64 = 1e-9;
    for poly in [a, b] {
        for k in 0..poly.len() {
            let e = poly[(k + 1) % poly.len()] - poly[k];
            let axis = e.perp();
            let (a0, a1) = project(a, axis);
            let (b0, b1) = project(b, axis);
            if a1 <= b0 + EPS * axis.norm() || b1 <= a0 + EPS * axis.norm() {
                return false;
            }
        }
    }
    true
}

fn mark_segment(spec: &GridSpec, a: Vec2, b: Vec2, mask: &mut [bool]) {
    let len = (b - a).norm();
    let steps = ((len / (0.125 * spec.cell_size)).ceil() as usize).max(1);
    for s in 0..=steps {
        let p = a + (b - a) * (s as f64 / steps as f64);
        if let Some(c) = spec.world_to_cell(p) {
            mask[spec.linear(c)] = true;
        }
    }
}

/// Cells of `spec` intersecting the world geometry at time `t`. Boxes mark
/// every cell they overlap with positive area; segments and point targets mark
/// the cells they pass through.
pub fn ground_truth(world: &WorldModel, t: f64, spec: &GridSpec) -> GroundTruth {
    let mut mask = vec![false; spec.cell_count()];
    for s in &world.segments {
        mark_segment(spec, s.a, s.b, &mut mask);
    }
    for p in &world.points {
        if let Some(c) = spec.world_to_cell(p.position) {
            mask[spec.linear(c)] = true;
        }
    }
    let mut objects = Vec::new();
    for b in &world.boxes {
        let corners = b.corners_at(t);
        let (x0, x1) = project(&corners, Vec2::new(1.0, 0.0));
        let (y0, y1) = project(&corners, Vec2::new(0.0, 1.0));
        let (cx0, cy0) = spec.signed_cell(Vec2::new(x0, y0));
        let (cx1, cy1) = spec.signed_cell(Vec2::new(x1, y1));
        let (nx, ny) = (spec.nx() as i64, spec.ny() as i64);
        for iy in cy0.max(0)..=cy1.min(ny - 1) {
            for ix in cx0.max(0)..=cx1.min(nx - 1) {
                let c = CellIndex::new(ix as usize, iy as usize);
                let center = spec.cell_center(c);
                let h = 0.5 * spec.cell_size;
                let square = [
                    center + Vec2::new(-h, -h),
                    center + Vec2::new(h, -h),
                    center + Vec2::new(h, h),
                    center + Vec2::new(-h, h),
                ];
                if polygons_overlap(&corners, &square) {
                    mask[spec.linear(c)] = true;
                }
            }
        }
        objects.push(ObjectTruth {
            id: b.id,
            center: b.center_at(t),
            heading: b.heading,
            velocity: b.velocity,
            length: b.length,
            width: b.width,
        });
    }
    GroundTruth { mask, objects }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::sim::world::{DynamicBox, PointTarget, Segment};

    fn point_world(position: Vec2, velocity: Vec2) -> WorldModel {
        WorldModel {
            points: vec![PointTarget {
                position,
                velocity,
                detection_prob: 1.0,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_point_target() {
        let w = point_world(Vec2::new(80.0, 0.0), Vec2::ZERO);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = simulate_scan(
            &w,
            0.0,
            &[SensorMount::identity(0)],
            &EgoPose::at_origin(0.0),
            &SimParams::ideal(),
            &mut rng,
        );
        assert_eq!(z.len(), 1);
        assert_eq!((z[0].range, z[0].azimuth, z[0].range_rate), (80.0, 0.0, 0.0));
    }

    #[test]
    fn receding_target_range_rate() {
        let w = point_world(Vec2::new(50.0, 0.0), Vec2::new(15.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = simulate_scan(
            &w,
            0.0,
            &[SensorMount::identity(0)],
            &EgoPose::at_origin(0.0),
            &SimParams::ideal(),
            &mut rng,
        );
        assert_eq!(z[0].range_rate, 15.0);
    }

    #[test]
    fn wall_occludes_target() {
        let mut w = point_world(Vec2::new(40.0, 0.0), Vec2::ZERO);
        w.segments.push(Segment {
            a: Vec2::new(20.0, -5.0),
            b: Vec2::new(20.0, 5.0),
            detection_prob: 0.0,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = simulate_scan(
            &w,
            0.0,
            &[SensorMount::identity(0)],
            &EgoPose::at_origin(0.0),
            &SimParams::ideal(),
            &mut rng,
        );
        assert!(z.is_empty());
    }

    #[test]
    fn box_mask_counts_cells() {
        let spec = GridSpec::new(0.5, 10.0, 10.0, 10.0, Vec2::new(-10.0, -10.0));
        let w = WorldModel {
            boxes: vec![DynamicBox {
                id: 0,
                center: Vec2::new(1.0, 1.0),
                heading: 0.0,
                length: 2.0,
                width: 2.0,
                velocity: Vec2::ZERO,
                t0: 0.0,
                detection_prob: 1.0,
            }],
            ..Default::default()
        };
        assert_eq!(ground_truth(&w, 0.0, &spec).occupied_count(), 16);
        assert_eq!(ground_truth(&WorldModel::default(), 0.0, &spec).occupied_count(), 0);
    }

    #[test]
    fn shift_law_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut h = [0usize; 3];
        for _ in 0..40_000 {
            h[(sample_shift(1, 0.5, &mut rng) + 1) as usize] += 1;
        }
        let f: Vec<f64> = h.iter().map(|&c| c as f64 / 40_000.0).collect();
        assert!((f[0] - 0.25).abs() < 0.01 && (f[1] - 0.5).abs() < 0.01 && (f[2] - 0.25).abs() < 0.01);
    }
}
