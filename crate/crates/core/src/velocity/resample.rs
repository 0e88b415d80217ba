use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

use super::particle::Particle;

/// Bounds and growth response of per-cell resampling.
///
/// The new particle count of a cell is `clamp(round(n_old * g), n_min, n_max)`
/// with `g = clamp(w̄ / w_ref, g_min, g_max)` and `w̄` the cell's average
/// weight. For cells that received a measurement update this cycle
/// `w_ref = reference_likelihood / n_old`; otherwise `w_ref = 1 / n_old` and
/// `g` is additionally capped at one, so cells only grow on evidence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResampleParams {
    pub n_min: usize,
    pub n_max: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub reference_likelihood: f64,
    /// Global particle budget; per-cell targets are scaled down to respect it.
    pub max_total: usize,
}

impl Default for ResampleParams {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 96,
            g_min: 0.5,
            g_max: 2.0,
            reference_likelihood: 0.02,
            max_total: 200_000,
        }
    }
}

impl ResampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_min > 0 && self.n_min <= self.n_max) {
            return Err(Error::invalid("n_min", "need 0 < n_min <= n_max"));
        }
        if !(self.g_min > 0.0 && self.g_min <= 1.0 && self.g_max >= 1.0) {
            return Err(Error::invalid("g_min", "need 0 < g_min <= 1 <= g_max"));
        }
        if !(self.reference_likelihood > 0.0) {
            return Err(Error::invalid("reference_likelihood", "must be > 0"));
        }
        Ok(())
    }

    /// Growth response for a cell's total weight.
    pub fn growth(&self, weight_sum: f64, updated: bool) -> f64 {
        if updated {
            (weight_sum / self.reference_likelihood).clamp(self.g_min, self.g_max)
        } else {
            weight_sum.clamp(self.g_min, 1.0)
        }
    }

    /// Target particle count for a cell.
    pub fn target_count(&self, n_old: usize, weight_sum: f64, updated: bool) -> usize {
        if n_old == 0 {
            return self.n_min;
        }
        let g = self.growth(weight_sum, updated);
        let raw = (n_old as f64 * g).round();
        (raw.min(self.n_max as f64) as usize).clamp(self.n_min, self.n_max)
    }
}

/// Systematic resampling of `n_out` particles proportional to weight; the
/// output carries uniform weights `1 / n_out`. All-zero input weights are
/// treated as uniform.
pub fn systematic_resample<R: Rng + ?Sized>(particles: &[Particle], n_out: usize, rng: &mut R) -> Vec<Particle> {
    if particles.is_empty() || n_out == 0 {
        return Vec::new();
    }
    let total: f64 = particles.iter().map(|p| p.weight.max(0.0)).sum();
    let uniform = !(total > 0.0) || !total.is_finite();
    let w_out = 1.0 / n_out as f64;
    let step = if uniform {
        particles.len() as f64 / n_out as f64
    } else {
        total / n_out as f64
    };
    let mut u = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n_out);
    let mut idx = 0;
    let mut cum = if uniform { 1.0 } else { particles[0].weight.max(0.0) };
    for _ in 0..n_out {
        while u >= cum && idx + 1 < particles.len() {
            idx += 1;
            cum += if uniform { 1.0 } else { particles[idx].weight.max(0.0) };
        }
        let mut p = particles[idx];
        p.weight = w_out;
        out.push(p);
        u += step;
    }
    out
}

/// Resamples one cell: new count from the growth response, then systematic
/// resampling with uniform output weights.
pub fn resample_cell<R: Rng + ?Sized>(
    particles: &[Particle],
    rp: &ResampleParams,
    updated: bool,
    rng: &mut R,
) -> Vec<Particle> {
    let weight_sum: f64 = particles.iter().map(|p| p.weight).sum();
    let n_out = rp.target_count(particles.len(), weight_sum, updated);
    systematic_resample(particles, n_out, rng)
}

/// `count` particles uniform over the axis-aligned cell at `lower_left` with
/// velocities uniform in the disk of radius `speed_range`, weights `1 / count`.
pub fn init_cell_particles<R: Rng + ?Sized>(
    lower_left: Vec2,
    cell_size: f64,
    count: usize,
    speed_range: f64,
    rng: &mut R,
) -> Vec<Particle> {
    let w = 1.0 / count.max(1) as f64;
    (0..count)
        .map(|_| {
            let pos = lower_left + Vec2::new(rng.random::<f64>() * cell_size, rng.random::<f64>() * cell_size);
            let r = speed_range * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            Particle::new(pos, Vec2::from_polar(r, a), w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn particles(ws: &[f64]) -> Vec<Particle> {
        ws.iter()
            .enumerate()
            .map(|(i, &w)| Particle::new(Vec2::new(i as f64, 0.0), Vec2::new(i as f64, 0.0), w))
            .collect()
    }

    #[test]
    fn neutral_resample_keeps_multiset() {
        let rp = ResampleParams::default();
        let ps = particles(&[0.25; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = resample_cell(&ps, &rp, false, &mut rng);
        assert_eq!(out.len(), 4);
        let mut xs: Vec<f64> = out.iter().map(|p| p.position.x).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(out.iter().all(|p| p.weight == 0.25));
    }

    #[test]
    fn clamp_to_bounds() {
        let rp = ResampleParams {
            n_max: 500,
            ..Default::default()
        };
        assert_eq!(rp.target_count(1_000_000, 1e6, true), 500);
        assert_eq!(rp.target_count(3, 0.0, true), rp.n_min);
        assert_eq!(rp.target_count(0, 0.0, false), rp.n_min);
    }

    #[test]
    fn zero_weights_resample_uniformly() {
        let ps = particles(&[0.0; 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = systematic_resample(&ps, 5, &mut rng);
        let mut xs: Vec<f64> = out.iter().map(|p| p.position.x).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn init_counts_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ps = init_cell_particles(Vec2::new(2.0, -3.0), 1.0, 10_000, 2.0, &mut rng);
        assert_eq!(ps.len(), 10_000);
        let mut max_speed: f64 = 0.0;
        for p in &ps {
            assert!(p.position.x >= 2.0 && p.position.x < 3.0);
            assert!(p.position.y >= -3.0 && p.position.y < -2.0);
            assert!(p.velocity.norm() <= 2.0);
            max_speed = max_speed.max(p.velocity.norm());
        }
        // P(max < 1.98) = (1.98/2)^(2·10⁴) ≈ 0
        assert!(max_speed > 1.98);
    }
}
