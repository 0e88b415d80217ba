use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

use super::particle::Particle;

/// Weighted velocity mean and covariance of one velocity cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellVelocityStats {
    pub mean: Vec2,
    /// Covariance entries `[xx, xy, yy]` (m²/s²).
    pub cov: [f64; 3],
    pub particle_count: usize,
    pub weight_sum: f64,
    /// False when the cell carried no weight; mean and covariance are zero then.
    pub valid: bool,
    /// Some particle of the cell scored above the survival floor against an
    /// associated detection in the cycle the statistics belong to.
    pub supported: bool,
}

impl CellVelocityStats {
    pub fn trace(&self) -> f64 {
        self.cov[0] + self.cov[2]
    }

    pub fn speed(&self) -> f64 {
        self.mean.norm()
    }

    /// Eigenvalues of the covariance, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let [a, b, c] = self.cov;
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mid - rad, mid + rad)
    }
}

/// Weighted mean and covariance in a single pass (weighted incremental update).
pub fn cell_statistics(particles: &[Particle]) -> CellVelocityStats {
    let mut wsum = 0.0;
    let mut mean = Vec2::ZERO;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in particles {
        let w = p.weight;
        if w <= 0.0 {
            continue;
        }
        wsum += w;
        let d = p.velocity - mean;
        mean += d * (w / wsum);
        let d2 = p.velocity - mean;
        sxx += w * d.x * d2.x;
        sxy += w * d.x * d2.y;
        syy += w * d.y * d2.y;
    }
    if !(wsum > 0.0) || !wsum.is_finite() {
        return CellVelocityStats {
            particle_count: particles.len(),
            ..Default::default()
        };
    }
    CellVelocityStats {
        mean,
        cov: [sxx / wsum, sxy / wsum, syy / wsum],
        particle_count: particles.len(),
        weight_sum: wsum,
        valid: true,
        supported: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(vx: f64, vy: f64, w: f64) -> Particle {
        Particle::new(Vec2::ZERO, Vec2::new(vx, vy), w)
    }

    #[test]
    fn midpoint() {
        let s = cell_statistics(&[p(10.0, 0.0, 1.0), p(20.0, 0.0, 1.0)]);
        assert_eq!(s.mean, Vec2::new(15.0, 0.0));
        assert!((s.cov[0] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn single_particle() {
        let s = cell_statistics(&[p(3.0, -4.0, 0.2)]);
        assert_eq!(s.mean, Vec2::new(3.0, -4.0));
        assert_eq!(s.cov, [0.0; 3]);
        assert!(s.valid);
    }

    #[test]
    fn zero_weight_is_invalid_not_nan() {
        let s = cell_statistics(&[p(3.0, -4.0, 0.0)]);
        assert!(!s.valid);
        assert_eq!(s.mean, Vec2::ZERO);
        assert_eq!(s.particle_count, 1);
        assert!(!cell_statistics(&[]).valid);
    }
}
