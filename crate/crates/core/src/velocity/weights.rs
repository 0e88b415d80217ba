use crate::frames::SensorFrame;
use crate::grid::GridSpec;
use crate::sensor_models::SensorModel;
use crate::types::Detection;

use super::particle::Particle;

/// Relative survival floor added to every likelihood before reweighting.
pub const SURVIVAL_FLOOR: f64 = 1e-3;

/// Everything needed to score particles against the detections of one scan.
pub struct ScoringContext<'a> {
    pub detections: &'a [Detection],
    /// Sensor frame of each detection (same indexing as `detections`).
    pub frames: &'a [SensorFrame],
    pub models: &'a [&'a SensorModel],
    /// Occupancy grid whose cell centers stand in for particle positions in the
    /// occupancy likelihood; `None` uses the particle position directly.
    pub occupancy_spec: Option<&'a GridSpec>,
    pub floor: f64,
}

impl ScoringContext<'_> {
    /// Joint occupancy × range-rate likelihood of `p` for detection `k`.
    pub fn likelihood(&self, p: &Particle, k: usize) -> f64 {
        let z = &self.detections[k];
        let frame = &self.frames[k];
        let model = self.models[k];
        let anchor = self
            .occupancy_spec
            .and_then(|s| s.world_to_cell(p.position).map(|c| s.cell_center(c)))
            .unwrap_or(p.position);
        let occ = model.occupancy_unchecked(frame.world_to_polar(anchor), z);
        if occ == 0.0 {
            return 0.0;
        }
        match model.velocity_likelihood(p.position, p.velocity, z, frame) {
            Ok(v) => occ * v,
            Err(_) => 0.0,
        }
    }

    /// Best likelihood over the candidate detections.
    pub fn best(&self, p: &Particle, candidates: &[usize]) -> f64 {
        candidates
            .iter()
            .map(|&k| self.likelihood(p, k))
            .fold(0.0, f64::max)
    }
}

/// Multiplies each particle's weight by `floor + Λ_best`, where `Λ_best` is the
/// largest joint likelihood over the cell's candidates. No candidates: no change.
/// Returns whether any particle's likelihood exceeded the floor.
pub fn update_cell_weights(particles: &mut [Particle], candidates: &[usize], ctx: &ScoringContext<'_>) -> bool {
    if candidates.is_empty() {
        return false;
    }
    let mut informative = false;
    for p in particles {
        let l = ctx.best(p, candidates);
        informative |= l > ctx.floor;
        p.weight *= ctx.floor + l;
    }
    informative
}

/// Relaxes cells without any supporting detection toward rest: moving
/// hypotheses are down-weighted, `w ← w · max(floor, exp(-½ (|v| / sigma)²))`,
/// and every velocity is scaled by `damping`.
pub fn decay_unsupported(particles: &mut [Particle], sigma: f64, floor: f64, damping: f64) {
    for p in particles {
        if sigma > 0.0 && sigma.is_finite() {
            let u = p.velocity.norm() / sigma;
            p.weight *= (-0.5 * u * u).exp().max(floor);
        }
        p.velocity = p.velocity * damping;
    }
}
