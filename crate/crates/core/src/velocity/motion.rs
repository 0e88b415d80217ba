use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

use super::particle::Particle;

/// Constant-velocity motion model with additive Gaussian process noise
/// (standard deviations applied once per prediction step).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionParams {
    pub sigma_pos: f64,
    pub sigma_vel: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            sigma_pos: 0.05,
            sigma_vel: 0.3,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_pos >= 0.0 && self.sigma_vel >= 0.0) {
            return Err(Error::invalid("sigma", "process noise must be >= 0"));
        }
        Ok(())
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Propagates particles by `dt` seconds. Weights are unchanged.
pub fn predict_particles<R: Rng + ?Sized>(particles: &mut [Particle], mp: &MotionParams, dt: f64, rng: &mut R) {
    for p in particles {
        p.position += p.velocity * dt;
        p.position += Vec2::new(gaussian(rng, mp.sigma_pos), gaussian(rng, mp.sigma_pos));
        p.velocity += Vec2::new(gaussian(rng, mp.sigma_vel), gaussian(rng, mp.sigma_vel));
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn noiseless_constant_velocity() {
        let mp = MotionParams {
            sigma_pos: 0.0,
            sigma_vel: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = [
            Particle::new(Vec2::ZERO, Vec2::new(10.0, 0.0), 0.3),
            Particle::new(Vec2::new(2.0, 3.0), Vec2::ZERO, 0.7),
        ];
        predict_particles(&mut ps, &mp, 0.1, &mut rng);
        assert_eq!(ps[0], Particle::new(Vec2::new(1.0, 0.0), Vec2::new(10.0, 0.0), 0.3));
        assert_eq!(ps[1], Particle::new(Vec2::new(2.0, 3.0), Vec2::ZERO, 0.7));
    }

    #[test]
    fn velocity_noise_std() {
        let mp = MotionParams {
            sigma_pos: 0.0,
            sigma_vel: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ps = vec![Particle::new(Vec2::ZERO, Vec2::ZERO, 1.0); 100_000];
        predict_particles(&mut ps, &mp, 0.1, &mut rng);
        let n = ps.len() as f64;
        let mean = ps.iter().map(|p| p.velocity.x).sum::<f64>() / n;
        let var = ps.iter().map(|p| (p.velocity.x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() / 0.5 - 1.0).abs() < 0.02);
    }
}
