//! Synthetic 2D world: static segments, point targets, moving boxes and the
//! platform trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};
use crate::types::EgoPose;

fn default_detection_prob() -> f64 {
    0.9
}

/// A wall or curb.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
    #[serde(default = "default_detection_prob")]
    pub detection_prob: f64,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Self {
            a,
            b,
            detection_prob: default_detection_prob(),
        }
    }
}

/// A reflector with no extent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointTarget {
    pub position: Vec2,
    #[serde(default)]
    pub velocity: Vec2,
    #[serde(default = "default_detection_prob")]
    pub detection_prob: f64,
}

/// A rectangular object moving at constant velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicBox {
    pub id: u32,
    /// Center at `t0`.
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub velocity: Vec2,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_detection_prob")]
    pub detection_prob: f64,
}

impl DynamicBox {
    pub fn center_at(&self, t: f64) -> Vec2 {
        self.center + self.velocity * (t - self.t0)
    }

    /// Corners at time `t`, counter-clockwise.
    pub fn corners_at(&self, t: f64) -> [Vec2; 4] {
        let c = self.center_at(t);
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        [
            Vec2::new(hl, -hw),
            Vec2::new(hl, hw),
            Vec2::new(-hl, hw),
            Vec2::new(-hl, -hw),
        ]
        .map(|p| c + p.rotated(self.heading))
    }

    pub fn edges_at(&self, t: f64) -> [(Vec2, Vec2); 4] {
        let k = self.corners_at(t);
        [(k[0], k[1]), (k[1], k[2]), (k[2], k[3]), (k[3], k[0])]
    }
}

/// Platform pose keyframe; poses between keyframes are linearly interpolated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldModel {
    pub segments: Vec<Segment>,
    pub points: Vec<PointTarget>,
    pub boxes: Vec<DynamicBox>,
    pub trajectory: Vec<Waypoint>,
}

impl WorldModel {
    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            if (s.b - s.a).norm() <= 0.0 {
                return Err(Error::invalid("segments", "degenerate segment (a == b)"));
            }
        }
        let probs = self
            .segments
            .iter()
            .map(|s| s.detection_prob)
            .chain(self.points.iter().map(|p| p.detection_prob))
            .chain(self.boxes.iter().map(|b| b.detection_prob));
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("detection_prob", "must lie in [0, 1]"));
            }
        }
        for b in &self.boxes {
            if !(b.length > 0.0 && b.width > 0.0) {
                return Err(Error::invalid("boxes", "length and width must be > 0"));
            }
        }
        if self.trajectory.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("trajectory", "waypoint times must be strictly increasing"));
        }
        Ok(())
    }

    /// Interpolated platform pose at `t`; holds the end poses (at rest) outside the span.
    pub fn pose_at(&self, t: f64) -> EgoPose {
        let tr = &self.trajectory;
        let Some(first) = tr.first() else {
            return EgoPose::at_origin(t);
        };
        let last = tr[tr.len() - 1];
        if tr.len() == 1 || t < first.t || t > last.t {
            let w = if t < first.t { *first } else { last };
            return EgoPose::new(Vec2::new(w.x, w.y), w.heading, Vec2::ZERO, t);
        }
        let k = (tr.partition_point(|w| w.t <= t) - 1).min(tr.len() - 2);
        let (a, b) = (tr[k], tr[k + 1]);
        let u = (t - a.t) / (b.t - a.t);
        let pos = Vec2::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y));
        let heading = a.heading + u * wrap_angle(b.heading - a.heading);
        let velocity = Vec2::new((b.x - a.x) / (b.t - a.t), (b.y - a.y) / (b.t - a.t));
        EgoPose::new(pos, heading, velocity, t)
    }

    /// Every static or moving edge at time `t`, tagged with its detection rate.
    pub fn edges_at(&self, t: f64) -> Vec<(Vec2, Vec2, f64)> {
        let mut out: Vec<(Vec2, Vec2, f64)> = self.segments.iter().map(|s| (s.a, s.b, s.detection_prob)).collect();
        for b in &self.boxes {
            out.extend(b.edges_at(t).into_iter().map(|(p, q)| (p, q, b.detection_prob)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_interpolation() {
        let w = WorldModel {
            trajectory: vec![
                Waypoint { t: 0.0, x: 0.0, y: 0.0, heading: 0.0 },
                Waypoint { t: 10.0, x: 100.0, y: 0.0, heading: 0.0 },
            ],
            ..Default::default()
        };
        let p = w.pose_at(2.5);
        assert_eq!(p.position, Vec2::new(25.0, 0.0));
        assert_eq!(p.velocity, Vec2::new(10.0, 0.0));
        assert_eq!(w.pose_at(20.0).position, Vec2::new(100.0, 0.0));
    }

    #[test]
    fn box_corners() {
        let b = DynamicBox {
            id: 1,
            center: Vec2::new(1.0, 1.0),
            heading: 0.0,
            length: 2.0,
            width: 2.0,
            velocity: Vec2::new(1.0, 0.0),
            t0: 0.0,
            detection_prob: 1.0,
        };
        assert_eq!(b.corners_at(1.0)[0], Vec2::new(3.0, 0.0));
    }

    #[test]
    fn rejects_bad_trajectory() {
        let w = WorldModel {
            trajectory: vec![
                Waypoint { t: 1.0, x: 0.0, y: 0.0, heading: 0.0 },
                Waypoint { t: 1.0, x: 1.0, y: 0.0, heading: 0.0 },
            ],
            ..Default::default()
        };
        assert!(w.validate().is_err());
    }
}
