//! Sensor-frame / platform-frame / world-frame conversions.

use crate::geometry::{wrap_angle, Vec2};
use crate::grid::{CellIndex, GridSpec};
use crate::types::{Detection, EgoPose, SensorMount};

/// World-frame placement of a mounted sensor at a given platform pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorFrame {
    pub position: Vec2,
    pub heading: f64,
    /// Rigid-body velocity of the mount; platform yaw rate is not modelled.
    pub velocity: Vec2,
}

impl SensorFrame {
    pub fn new(mount: &SensorMount, pose: &EgoPose) -> Self {
        Self {
            position: pose.position + mount.offset.rotated(pose.heading),
            heading: wrap_angle(pose.heading + mount.yaw),
            velocity: pose.velocity,
        }
    }

    pub fn polar_to_world(&self, range: f64, azimuth: f64) -> Vec2 {
        self.position + Vec2::from_polar(range, self.heading + azimuth)
    }

    /// Range and azimuth (wrapped to (−π, π]) of a world point seen from this sensor.
    pub fn world_to_polar(&self, p: Vec2) -> (f64, f64) {
        let d = p - self.position;
        (d.norm(), wrap_angle(d.angle() - self.heading))
    }

    /// Unit line-of-sight vector (world frame) for a sensor-frame azimuth.
    pub fn line_of_sight(&self, azimuth: f64) -> Vec2 {
        Vec2::from_polar(1.0, self.heading + azimuth)
    }
}

/// World-frame Cartesian position of a detection.
pub fn polar_to_world(d: &Detection, mount: &SensorMount, pose: &EgoPose) -> Vec2 {
    SensorFrame::new(mount, pose).polar_to_world(d.range, d.azimuth)
}

/// Polar coordinates `(r_c, φ_c)` of a cell center in the given sensor's frame.
pub fn cell_center_polar(
    cell: CellIndex,
    spec: &GridSpec,
    mount: &SensorMount,
    pose: &EgoPose,
) -> (f64, f64) {
    SensorFrame::new(mount, pose).world_to_polar(spec.cell_center(cell))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn det(range: f64, azimuth: f64) -> Detection {
        Detection {
            sensor_id: 0,
            timestamp: 0.0,
            range,
            azimuth,
            range_rate: 0.0,
            sigma_range: 0.1,
            sigma_azimuth: 0.01,
            sigma_range_rate: 0.1,
        }
    }

    #[test]
    fn identity_chain() {
        let p = polar_to_world(&det(10.0, 0.0), &SensorMount::identity(0), &EgoPose::at_origin(0.0));
        assert_eq!(p, Vec2::new(10.0, 0.0));
    }

    #[test]
    fn pure_rotation() {
        let pose = EgoPose::new(Vec2::ZERO, PI / 2.0, Vec2::ZERO, 0.0);
        let p = polar_to_world(&det(10.0, 0.0), &SensorMount::identity(0), &pose);
        assert!(p.x.abs() < 1e-12 && (p.y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn offset_mount() {
        let mut m = SensorMount::identity(0);
        m.offset = Vec2::new(1.0, 0.0);
        let p = polar_to_world(&det(5.0, PI / 2.0), &m, &EgoPose::at_origin(0.0));
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cell_center_polar_examples() {
        let m = SensorMount::identity(0);
        let pose = EgoPose::at_origin(0.0);
        let spec = GridSpec::new(1.0, 100.0, 100.0, 100.0, Vec2::new(-100.5, -100.5));
        let c = spec.world_to_cell(Vec2::new(80.0, 0.0)).unwrap();
        let (r, phi) = cell_center_polar(c, &spec, &m, &pose);
        assert!((r - 80.0).abs() < 1e-9 && phi.abs() < 1e-12);
        let c = spec.world_to_cell(Vec2::new(0.0, 80.0)).unwrap();
        let (r, phi) = cell_center_polar(c, &spec, &m, &pose);
        assert!((r - 80.0).abs() < 1e-9 && (phi - PI / 2.0).abs() < 1e-12);
        let c = spec.world_to_cell(Vec2::new(3.0, 4.0)).unwrap();
        let (r, phi) = cell_center_polar(c, &spec, &m, &pose);
        assert!((r - 5.0).abs() < 1e-9);
        assert!((phi - 4f64.atan2(3.0)).abs() < 1e-12);
    }
}
