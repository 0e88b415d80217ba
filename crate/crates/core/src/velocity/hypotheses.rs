//! Hypotheses manager: seeds fast particles from clustered dynamic detections.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::SensorFrame;
use crate::geometry::Vec2;
use crate::grid::{CellIndex, GridSpec};
use crate::rig::SensorRig;
use crate::sensor_models::SensorModel;
use crate::types::{Detection, EgoPose};

use super::particle::Particle;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesesParams {
    /// Minimum ego-compensated radial speed (over every alias hypothesis) for a
    /// detection to count as dynamic (m/s).
    pub v_dyn: f64,
    /// Linking distance for clustering dynamic detections (m).
    pub cluster_radius: f64,
    /// Half-width of the uniform cross-radial velocity spread of spawns (m/s).
    pub v_cross: f64,
    /// Cells whose centers lie within this distance of a cluster member receive spawns (m).
    pub spawn_radius: f64,
    pub spawn_per_cell: usize,
    /// Weight of a spawned particle relative to the mean weight of the
    /// particles already in its cell.
    pub spawn_weight: f64,
    /// Cycles a cell stays marked dynamic after a spawn.
    pub dynamic_ttl: u8,
}

impl Default for HypothesesParams {
    fn default() -> Self {
        Self {
            v_dyn: 1.0,
            cluster_radius: 2.0,
            v_cross: 5.0,
            spawn_radius: 1.5,
            spawn_per_cell: 16,
            spawn_weight: 0.1,
            dynamic_ttl: 10,
        }
    }
}

impl HypothesesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_dyn >= 0.0 && self.cluster_radius > 0.0 && self.v_cross >= 0.0 && self.spawn_radius >= 0.0) {
            return Err(Error::invalid("hypotheses", "thresholds and radii must be >= 0"));
        }
        if !(self.spawn_weight > 0.0 && self.spawn_weight.is_finite()) {
            return Err(Error::invalid("spawn_weight", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Range rate with the sensor's own motion removed (radial speed of the target over ground).
pub fn compensated_range_rate(z: &Detection, frame: &SensorFrame) -> f64 {
    z.range_rate + frame.line_of_sight(z.azimuth).dot(frame.velocity)
}

/// Dynamic when no range-rate alias hypothesis explains the detection as static.
pub fn is_dynamic(compensated: f64, model: &SensorModel, v_dyn: f64) -> bool {
    let delta = model.params().delta_range_rate;
    model
        .weights()
        .range_rate_indices()
        .all(|l| (compensated - l as f64 * delta).abs() > v_dyn)
}

/// Dynamic when no pair of azimuth and range-rate alias hypotheses explains
/// the detection as static. An aliased azimuth points the ego-motion
/// compensation along the wrong line of sight, so every azimuth hypothesis is
/// compensated separately.
pub fn is_dynamic_detection(z: &Detection, frame: &SensorFrame, model: &SensorModel, v_dyn: f64) -> bool {
    let delta = model.params().delta_azimuth;
    model.weights().position_indices().all(|j| {
        let los = frame.line_of_sight(z.azimuth - j as f64 * delta);
        is_dynamic(z.range_rate + los.dot(frame.velocity), model, v_dyn)
    })
}

/// Representative range rate of a cluster. Without range-rate ambiguity this
/// is the arithmetic mean. With ambiguity it is the circular mean modulo
/// `delta` (invariant to alias shifts of individual members), unwrapped to
/// the candidate nearest the members' median.
pub fn cluster_range_rate(values: &[f64], delta: f64, ambiguous: bool) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if !ambiguous {
        return values.iter().sum::<f64>() / values.len() as f64;
    }
    let scale = 2.0 * std::f64::consts::PI / delta;
    let (s, c) = values
        .iter()
        .fold((0.0, 0.0), |(s, c), v| (s + (v * scale).sin(), c + (v * scale).cos()));
    let base = s.atan2(c) / scale;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    base + ((median - base) / delta).round() * delta
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clusters of points closer than `radius`, found through a
/// spatial hash with bucket size `radius`. Clusters are ordered by their
/// smallest member; members ascend.
pub fn cluster_points(points: &[Vec2], radius: f64) -> Vec<Vec<usize>> {
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Vec2| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    for (i, &p) in points.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let mut parent: Vec<usize> = (0..points.len()).collect();
    for (i, &p) in points.iter().enumerate() {
        let (kx, ky) = key(p);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                    for &j in list {
                        if j > i && (points[j] - p).norm() <= radius {
                            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                            if a != b {
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..points.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// A cluster of dynamic detections.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicCluster {
    /// Scan indices of the member detections.
    pub members: Vec<usize>,
    /// Representative ego-compensated range rate (m/s), see [`cluster_range_rate`].
    pub mean_range_rate: f64,
    pub centroid: Vec2,
    /// Mean world position of the observing sensors.
    pub sensor_origin: Vec2,
}

/// Particles to add to one velocity cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Spawn {
    pub cell: usize,
    pub particles: Vec<Particle>,
}

/// Classifies and clusters the dynamic detections of a scan.
pub fn dynamic_clusters(
    scan: &[Detection],
    pose: &EgoPose,
    rig: &SensorRig,
    params: &HypothesesParams,
) -> Result<Vec<DynamicCluster>> {
    let mut dynamic = Vec::new();
    let mut ambiguity = Vec::new();
    for (k, z) in scan.iter().enumerate() {
        let sensor = rig.get(z.sensor_id)?;
        let frame = SensorFrame::new(&sensor.mount, pose);
        let comp = compensated_range_rate(z, &frame);
        if is_dynamic_detection(z, &frame, &sensor.model, params.v_dyn) {
            dynamic.push((k, frame.polar_to_world(z.range, z.azimuth), frame.position, comp));
            let p = sensor.model.params();
            ambiguity.push((p.delta_range_rate, p.k_range_rate > 0));
        }
    }
    let points: Vec<Vec2> = dynamic.iter().map(|d| d.1).collect();
    Ok(cluster_points(&points, params.cluster_radius)
        .into_iter()
        .map(|group| {
            let n = group.len() as f64;
            let mut centroid = Vec2::ZERO;
            let mut origin = Vec2::ZERO;
            for &g in &group {
                centroid += dynamic[g].1;
                origin += dynamic[g].2;
            }
            let rates: Vec<f64> = group.iter().map(|&g| dynamic[g].3).collect();
            let (delta, ambiguous) = ambiguity[group[0]];
            DynamicCluster {
                members: group.iter().map(|&g| dynamic[g].0).collect(),
                mean_range_rate: cluster_range_rate(&rates, delta, ambiguous),
                centroid: centroid * (1.0 / n),
                sensor_origin: origin * (1.0 / n),
            }
        })
        .collect())
}

fn sample_index<R: Rng + ?Sized>(probs: &[(f64, f64)], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, (_, p)) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Spawns particles on the Doppler-consistent velocity line of each cluster.
/// Radial components are drawn from the range-rate alias hypotheses in
/// proportion to their probabilities; the cross-radial component is uniform
/// in `±v_cross`.
pub fn hypotheses_manager<R: Rng + ?Sized>(
    scan: &[Detection],
    pose: &EgoPose,
    rig: &SensorRig,
    spec: &GridSpec,
    params: &HypothesesParams,
    rng: &mut R,
) -> Result<Vec<Spawn>> {
    let clusters = dynamic_clusters(scan, pose, rig, params)?;
    let mut spawns: BTreeMap<usize, Vec<Particle>> = BTreeMap::new();
    for cluster in &clusters {
        let model = &rig.get(scan[cluster.members[0]].sensor_id)?.model;
        let hypotheses = model.range_rate_hypotheses(cluster.mean_range_rate);
        let mut cells = std::collections::BTreeSet::new();
        let reach = (params.spawn_radius / spec.cell_size).ceil() as i64 + 1;
        let (nx, ny) = (spec.nx() as i64, spec.ny() as i64);
        for &m in &cluster.members {
            let z = &scan[m];
            let frame = rig.frame(z.sensor_id, pose)?;
            let p = frame.polar_to_world(z.range, z.azimuth);
            let (cx, cy) = spec.signed_cell(p);
            for iy in (cy - reach).max(0)..=(cy + reach).min(ny - 1) {
                for ix in (cx - reach).max(0)..=(cx + reach).min(nx - 1) {
                    let c = CellIndex::new(ix as usize, iy as usize);
                    if (spec.cell_center(c) - p).norm() <= params.spawn_radius {
                        cells.insert(spec.linear(c));
                    }
                }
            }
        }
        for cell in cells {
            let center = spec.cell_center(spec.from_linear(cell));
            let lower = center - Vec2::new(0.5 * spec.cell_size, 0.5 * spec.cell_size);
            let list = spawns.entry(cell).or_default();
            for _ in 0..params.spawn_per_cell {
                let pos = lower
                    + Vec2::new(
                        rng.random::<f64>() * spec.cell_size,
                        rng.random::<f64>() * spec.cell_size,
                    );
                let los = pos - cluster.sensor_origin;
                let dist = los.norm();
                if dist < crate::sensor_models::ORIGIN_EPSILON {
                    continue;
                }
                let los = los * (1.0 / dist);
                let radial = hypotheses[sample_index(&hypotheses, rng)].0;
                let cross = (2.0 * rng.random::<f64>() - 1.0) * params.v_cross;
                list.push(Particle::new(pos, los * radial + los.perp() * cross, 1.0));
            }
        }
    }
    Ok(spawns
        .into_iter()
        .map(|(cell, particles)| Spawn { cell, particles })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_range_rate_ignores_alias_shifts() {
        let d = 12.5;
        let clean = [-9.6, -9.8, -9.7, -9.5, -9.9];
        let shifted = [-9.6 + d, -9.8 + d, -9.7, -9.5 + d, -9.9 - d];
        let a = cluster_range_rate(&clean, d, true);
        let b = cluster_range_rate(&shifted, d, true);
        assert!((a + 9.7).abs() < 1e-9);
        // majority of members at +1 alias: representative follows the median
        assert!((b - (-9.7 + d)).abs() < 1e-9);
        assert!((cluster_range_rate(&clean, d, false) + 9.7).abs() < 1e-12);
        assert_eq!(cluster_range_rate(&[], d, true), 0.0);
    }

    #[test]
    fn azimuth_aliased_static_return_is_not_dynamic() {
        let model = SensorModel::new(crate::types::SensorModelParams::default()).unwrap();
        let frame = SensorFrame {
            position: Vec2::ZERO,
            heading: 0.0,
            velocity: Vec2::new(5.0, 0.0),
        };
        // static point at azimuth 0.6, reported one azimuth interval further out
        let true_az: f64 = 0.6;
        let z = Detection {
            sensor_id: 0,
            timestamp: 0.0,
            range: 30.0,
            azimuth: true_az + model.params().delta_azimuth,
            range_rate: -5.0 * true_az.cos(),
            sigma_range: 0.25,
            sigma_azimuth: 0.015,
            sigma_range_rate: 0.1,
        };
        assert!(is_dynamic(compensated_range_rate(&z, &frame), &model, 1.0));
        assert!(!is_dynamic_detection(&z, &frame, &model, 1.0));
        let moving = Detection { range_rate: z.range_rate - 6.0, ..z };
        assert!(is_dynamic_detection(&moving, &frame, &model, 1.0));
    }

    #[test]
    fn clusters_link_transitively() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.5, 0.0),
            Vec2::new(3.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(-1.9, 0.1),
        ];
        let c = cluster_points(&pts, 2.0);
        assert_eq!(c, vec![vec![0, 1, 2, 4], vec![3]]);
        assert!(cluster_points(&[], 2.0).is_empty());
    }
}
