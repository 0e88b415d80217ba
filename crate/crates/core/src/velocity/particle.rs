use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::grid::GridSpec;

/// A velocity hypothesis: world position, world velocity and a nonnegative weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec2,
    pub velocity: Vec2,
    pub weight: f64,
}

impl Particle {
    pub fn new(position: Vec2, velocity: Vec2, weight: f64) -> Self {
        Self {
            position,
            velocity,
            weight,
        }
    }
}

/// Particles grouped contiguously by velocity cell (logical row-major index).
#[derive(Clone, Debug, Default)]
pub struct ParticleStore {
    particles: Vec<Particle>,
    starts: Vec<usize>,
}

impl ParticleStore {
    pub fn empty(cell_count: usize) -> Self {
        Self {
            particles: Vec::new(),
            starts: vec![0; cell_count + 1],
        }
    }

    /// Builds a store from per-cell particle lists (index = linear cell index).
    pub fn from_cells(cells: Vec<Vec<Particle>>) -> Self {
        let mut starts = Vec::with_capacity(cells.len() + 1);
        let total = cells.iter().map(Vec::len).sum();
        let mut particles = Vec::with_capacity(total);
        starts.push(0);
        for c in cells {
            particles.extend(c);
            starts.push(particles.len());
        }
        Self { particles, starts }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn count(&self, cell: usize) -> usize {
        self.starts[cell + 1] - self.starts[cell]
    }

    pub fn cell(&self, cell: usize) -> &[Particle] {
        &self.particles[self.starts[cell]..self.starts[cell + 1]]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [Particle] {
        let (a, b) = (self.starts[cell], self.starts[cell + 1]);
        &mut self.particles[a..b]
    }

    pub fn all(&self) -> &[Particle] {
        &self.particles
    }

    pub fn all_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    /// Mutable per-cell slices, in cell order.
    pub fn cells_mut(&mut self) -> Vec<&mut [Particle]> {
        let mut out = Vec::with_capacity(self.cell_count());
        let mut rest: &mut [Particle] = &mut self.particles;
        for w in self.starts.windows(2) {
            let (head, tail) = rest.split_at_mut(w[1] - w[0]);
            out.push(head);
            rest = tail;
        }
        out
    }

    /// Re-groups particles by the cell containing their position under `spec`
    /// (stable within a cell). Particles outside the window are dropped and
    /// counted in the return value.
    pub fn rebin(&mut self, spec: &GridSpec) -> usize {
        let n_cells = spec.cell_count();
        let keys: Vec<Option<usize>> = self
            .particles
            .iter()
            .map(|p| spec.world_to_cell(p.position).map(|c| spec.linear(c)))
            .collect();
        let mut counts = vec![0usize; n_cells + 1];
        for k in keys.iter().flatten() {
            counts[k + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let kept = counts[n_cells];
        let dropped = self.particles.len() - kept;
        let mut out = vec![Particle::new(Vec2::ZERO, Vec2::ZERO, 0.0); kept];
        let mut cursor = counts.clone();
        for (p, k) in self.particles.iter().zip(&keys) {
            if let Some(k) = k {
                out[cursor[*k]] = *p;
                cursor[*k] += 1;
            }
        }
        self.particles = out;
        self.starts = counts;
        dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rebin_groups_and_drops() {
        let spec = GridSpec::new(1.0, 1.0, 1.0, 1.0, Vec2::ZERO);
        let mut s = ParticleStore::empty(spec.cell_count());
        s.particles = vec![
            Particle::new(Vec2::new(1.5, 0.5), Vec2::ZERO, 1.0),
            Particle::new(Vec2::new(0.5, 0.5), Vec2::ZERO, 2.0),
            Particle::new(Vec2::new(9.0, 0.5), Vec2::ZERO, 3.0),
            Particle::new(Vec2::new(0.2, 1.2), Vec2::ZERO, 4.0),
            Particle::new(Vec2::new(1.9, 0.1), Vec2::ZERO, 5.0),
        ];
        assert_eq!(s.rebin(&spec), 1);
        assert_eq!(s.len(), 4);
        let w = |c: usize| s.cell(c).iter().map(|p| p.weight).collect::<Vec<_>>();
        assert_eq!(w(0), vec![2.0]);
        assert_eq!(w(1), vec![1.0, 5.0]);
        assert_eq!(w(2), vec![4.0]);
        assert_eq!(w(3), Vec::<f64>::new());
        assert_eq!(s.cells_mut().len(), 4);
    }
}
