//! CSV emitters and scoring metrics.

use std::fmt::Write as _;

use crate::geometry::Vec2;
use crate::grid::GridSpec;
use crate::manager::{CycleReport, Snapshot, PHASES};
use crate::sim::{ground_truth, ObjectTruth, WorldModel};
use crate::velocity::CellVelocityStats;

pub fn cycle_csv_header() -> String {
    let mut h = String::from("cycle,timestamp,detections,particles,transfers,spawned,clusters,updated_cells,total_ms");
    for p in PHASES {
        let _ = write!(h, ",{p}_ms");
    }
    h
}

pub fn cycle_csv_row(r: &CycleReport) -> String {
    let mut row = format!(
        "{},{},{},{},{},{},{},{},{:.4}",
        r.cycle,
        r.timestamp,
        r.detections,
        r.particles,
        r.transfers,
        r.spawned,
        r.clusters,
        r.updated_cells,
        r.total_ms()
    );
    for ms in r.phase_ms {
        let _ = write!(row, ",{ms:.4}");
    }
    row
}

/// Per-cell velocity statistics of every cell holding weight.
pub fn stats_csv(stats: &[CellVelocityStats], spec: &GridSpec) -> String {
    let mut out = String::from("ix,iy,x,y,mean_vx,mean_vy,cov_xx,cov_xy,cov_yy,particles,weight_sum,supported\n");
    for (i, s) in stats.iter().enumerate() {
        if !s.valid {
            continue;
        }
        let c = spec.from_linear(i);
        let p = spec.cell_center(c);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.ix,
            c.iy,
            p.x,
            p.y,
            s.mean.x,
            s.mean.y,
            s.cov[0],
            s.cov[1],
            s.cov[2],
            s.particle_count,
            s.weight_sum,
            s.supported as u8
        );
    }
    out
}

/// Area under the ROC curve (rank-sum form, ties get mid ranks). `None`
/// when either class is empty.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return None;
    }
    Some((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// AUC of the occupancy probabilities against the geometry at `t`, over the
/// cells that have left the prior.
pub fn occupancy_auc(snapshot: &Snapshot, world: &WorldModel, t: f64) -> Option<f64> {
    if snapshot.probabilities.is_empty() {
        return None;
    }
    let truth = ground_truth(world, t, &snapshot.occupancy_spec);
    let (scores, labels): (Vec<f64>, Vec<bool>) = snapshot
        .probabilities
        .iter()
        .zip(&truth.mask)
        .filter(|(p, _)| **p != 0.5)
        .map(|(p, m)| (*p, *m))
        .unzip();
    roc_auc(&scores, &labels)
}

/// Velocity estimate of one object: the mean of the weighted per-cell means
/// over the object's cells that received measurement support, and the number
/// of cells used.
pub fn object_velocity(stats: &[CellVelocityStats], spec: &GridSpec, object: &ObjectTruth) -> Option<(Vec2, usize)> {
    let only = WorldModel {
        boxes: vec![crate::sim::DynamicBox {
            id: object.id,
            center: object.center,
            heading: object.heading,
            length: object.length,
            width: object.width,
            velocity: object.velocity,
            t0: 0.0,
            detection_prob: 1.0,
        }],
        ..Default::default()
    };
    let mask = ground_truth(&only, 0.0, spec).mask;
    let mut sum = Vec2::ZERO;
    let mut cells = 0;
    for (s, _) in stats.iter().zip(&mask).filter(|(s, m)| **m && s.valid && s.supported) {
        sum += s.mean;
        cells += 1;
    }
    (cells > 0).then(|| (sum * (1.0 / cells as f64), cells))
}

/// Velocity estimate of one ground-truth object.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectScore {
    pub id: u32,
    pub truth: Vec2,
    pub estimate: Option<Vec2>,
}

impl ObjectScore {
    pub fn error(&self) -> Option<f64> {
        self.estimate.map(|e| (e - self.truth).norm())
    }
}

pub fn score_objects(snapshot: &Snapshot, world: &WorldModel, t: f64) -> Vec<ObjectScore> {
    if snapshot.velocity.is_empty() {
        return Vec::new();
    }
    ground_truth(world, t, &snapshot.velocity_spec)
        .objects
        .iter()
        .map(|o| ObjectScore {
            id: o.id,
            truth: o.velocity,
            estimate: object_velocity(&snapshot.velocity, &snapshot.velocity_spec, o).map(|(v, _)| v),
        })
        .collect()
}

/// Root mean square of the object velocity errors (objects without an estimate are skipped).
pub fn velocity_rmse(scores: &[ObjectScore]) -> Option<f64> {
    let errs: Vec<f64> = scores.iter().filter_map(ObjectScore::error).collect();
    (!errs.is_empty()).then(|| (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt())
}
