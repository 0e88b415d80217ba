//! Particle-based per-cell velocity estimation.
//!
//! Each velocity cell owns a bounded set of particles. A cycle runs predict →
//! re-bin → associate → weight update → statistics → resample → spawn, each
//! phase partitioned by cell with no cross-cell writes.

mod association;
mod hypotheses;
mod motion;
mod particle;
mod resample;
mod stats;
mod transfer;
mod weights;

pub use association::{associate_measurements, Candidates, WorldDetection};
pub use hypotheses::{
    cluster_points, compensated_range_rate, dynamic_clusters, hypotheses_manager, is_dynamic, is_dynamic_detection,
    DynamicCluster,
    HypothesesParams, Spawn,
};
pub use motion::{predict_particles, MotionParams};
pub use particle::{Particle, ParticleStore};
pub use resample::{init_cell_particles, resample_cell, systematic_resample, ResampleParams};
pub use stats::{cell_statistics, CellVelocityStats};
pub use transfer::{emit_mass_transfers, TRANSFER_GAIN};
pub use weights::{decay_unsupported, update_cell_weights, ScoringContext, SURVIVAL_FLOOR};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::SensorFrame;
use crate::geometry::Vec2;
use crate::grid::{GridSpec, ScrollGrid};
use crate::occupancy::MassTransfer;
use crate::rig::SensorRig;
use crate::sensor_models::SensorModel;
use crate::types::{Detection, EgoPose};

const PREDICT_CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VelocityParams {
    pub motion: MotionParams,
    pub resample: ResampleParams,
    pub hypotheses: HypothesesParams,
    /// Radius of the velocity disk newly initialized cells sample from (m/s).
    pub init_speed: f64,
    /// Detections kept per cell and sensor during association.
    pub n_closest: usize,
    /// Association gate around each cell center (m).
    pub gate_radius: f64,
    pub survival_floor: f64,
    /// Speed scale of the decay applied to cells without any candidate (m/s).
    pub unsupported_sigma: f64,
    /// Velocity scale applied per cycle to particles of cells without any
    /// candidate detection (1 keeps them unchanged).
    pub unsupported_damping: f64,
    pub transfer_gain: f64,
}

impl Default for VelocityParams {
    fn default() -> Self {
        Self {
            motion: MotionParams::default(),
            resample: ResampleParams::default(),
            hypotheses: HypothesesParams::default(),
            init_speed: 2.0,
            n_closest: 1,
            gate_radius: 2.0,
            survival_floor: SURVIVAL_FLOOR,
            unsupported_sigma: 4.0,
            unsupported_damping: 0.5,
            transfer_gain: TRANSFER_GAIN,
        }
    }
}

impl VelocityParams {
    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.resample.validate()?;
        self.hypotheses.validate()?;
        if self.n_closest == 0 {
            return Err(Error::invalid("n_closest", "must be >= 1"));
        }
        if !(self.gate_radius > 0.0) {
            return Err(Error::invalid("gate_radius", "must be > 0"));
        }
        if !(self.survival_floor > 0.0) {
            return Err(Error::invalid("survival_floor", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.unsupported_damping) {
            return Err(Error::invalid("unsupported_damping", "must lie in [0, 1]"));
        }
        if !(self.transfer_gain >= 0.0 && self.transfer_gain <= 1.0) {
            return Err(Error::invalid("transfer_gain", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Counters from one velocity cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VelocityReport {
    pub dropped: usize,
    pub updated_cells: usize,
    pub spawned: usize,
    pub clusters: usize,
}

fn mix_seed(base: u64, k: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The velocity layer: particle store, per-cell statistics and dynamic-cell marks.
#[derive(Clone, Debug)]
pub struct VelocityLayer {
    params: VelocityParams,
    marks: ScrollGrid<u8>,
    store: ParticleStore,
    stats: Vec<CellVelocityStats>,
    updated: Vec<bool>,
    rng: ChaCha8Rng,
}

impl VelocityLayer {
    /// Allocates the layer and fills every cell with `n_min` slow particles.
    pub fn new(spec: GridSpec, params: VelocityParams, seed: u64) -> Result<Self> {
        spec.validate()?;
        params.validate()?;
        let marks = ScrollGrid::new(spec, 0u8);
        let n = marks.spec().cell_count();
        let mut layer = Self {
            params,
            marks,
            store: ParticleStore::empty(n),
            stats: vec![CellVelocityStats::default(); n],
            updated: vec![false; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        layer.fill_empty_cells();
        Ok(layer)
    }

    pub fn params(&self) -> &VelocityParams {
        &self.params
    }

    pub fn spec(&self) -> &GridSpec {
        self.marks.spec()
    }

    pub fn store(&self) -> &ParticleStore {
        &self.store
    }

    pub fn stats(&self) -> &[CellVelocityStats] {
        &self.stats
    }

    pub fn particle_count(&self) -> usize {
        self.store.len()
    }

    pub fn allocated_cells(&self) -> usize {
        self.marks.allocated()
    }

    /// Remaining cycles a cell stays marked dynamic (linear index).
    pub fn dynamic_mark(&self, cell: usize) -> u8 {
        self.marks.get(self.spec().from_linear(cell))
    }

    fn fill_empty_cells(&mut self) {
        let spec = *self.spec();
        let n = spec.cell_count();
        if (0..n).all(|c| self.store.count(c) > 0) {
            return;
        }
        let base: u64 = self.rng.random();
        let rp = self.params.resample;
        let speed = self.params.init_speed;
        let cells: Vec<Vec<Particle>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let existing = self.store.cell(c);
                if !existing.is_empty() {
                    return existing.to_vec();
                }
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base, c as u64));
                let center = spec.cell_center(spec.from_linear(c));
                let lower = center - Vec2::new(0.5 * spec.cell_size, 0.5 * spec.cell_size);
                init_cell_particles(lower, spec.cell_size, rp.n_min, speed, &mut rng)
            })
            .collect();
        self.store = ParticleStore::from_cells(cells);
    }

    /// Propagates all particles by `dt` and re-bins them. When an occupancy
    /// grid is given, returns the mass transfers of particles from dynamic
    /// cells that changed occupancy cell.
    pub fn predict(&mut self, dt: f64, occupancy: Option<&GridSpec>) -> (Vec<MassTransfer>, usize) {
        if !(dt > 0.0) {
            return (Vec::new(), 0);
        }
        let spec = *self.spec();
        let v_dyn = self.params.hypotheses.v_dyn;
        let eligible: Option<Vec<bool>> = occupancy.map(|_| {
            let mut flags = Vec::with_capacity(self.store.len());
            for c in 0..self.store.cell_count() {
                let dynamic = self.marks.get(spec.from_linear(c)) > 0;
                flags.extend(self.store.cell(c).iter().map(|p| dynamic && p.velocity.norm() >= v_dyn));
            }
            flags
        });
        let any_eligible = eligible.as_ref().is_some_and(|f| f.iter().any(|&e| e));
        let before = if any_eligible { Some(self.store.all().to_vec()) } else { None };

        let base: u64 = self.rng.random();
        let mp = self.params.motion;
        self.store
            .all_mut()
            .par_chunks_mut(PREDICT_CHUNK)
            .enumerate()
            .for_each(|(k, chunk)| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base, k as u64));
                predict_particles(chunk, &mp, dt, &mut rng);
            });

        let transfers = match (before, occupancy, eligible) {
            (Some(before), Some(occ), Some(flags)) => {
                emit_mass_transfers(&before, self.store.all(), &flags, occ, self.params.transfer_gain)
            }
            _ => Vec::new(),
        };
        let dropped = self.store.rebin(&spec);
        (transfers, dropped)
    }

    /// Associates the scan with cells and reweights particles. Cells without a
    /// candidate get the unsupported-motion decay instead.
    pub fn update(
        &mut self,
        scan: &[Detection],
        rig: &SensorRig,
        pose: &EgoPose,
        occupancy: Option<&GridSpec>,
    ) -> Result<usize> {
        let spec = *self.spec();
        let mut frames = Vec::with_capacity(scan.len());
        let mut models: Vec<&SensorModel> = Vec::with_capacity(scan.len());
        let mut world = Vec::with_capacity(scan.len());
        for (k, z) in scan.iter().enumerate() {
            let sensor = rig.get(z.sensor_id)?;
            let frame = SensorFrame::new(&sensor.mount, pose);
            world.push(WorldDetection {
                index: k,
                sensor_id: z.sensor_id,
                position: frame.polar_to_world(z.range, z.azimuth),
            });
            frames.push(frame);
            models.push(&sensor.model);
        }
        let candidates = associate_measurements(&spec, &world, self.params.n_closest, self.params.gate_radius);
        let ctx = ScoringContext {
            detections: scan,
            frames: &frames,
            models: &models,
            occupancy_spec: occupancy,
            floor: self.params.survival_floor,
        };
        let sigma = self.params.unsupported_sigma;
        let floor = self.params.survival_floor;
        let damping = self.params.unsupported_damping;
        let updated: Vec<bool> = self
            .store
            .cells_mut()
            .into_par_iter()
            .enumerate()
            .map(|(c, particles)| match candidates.get(&c) {
                Some(list) if !list.is_empty() => update_cell_weights(particles, list, &ctx),
                _ => {
                    decay_unsupported(particles, sigma, floor, damping);
                    false
                }
            })
            .collect();
        let count = updated.iter().filter(|&&u| u).count();
        self.updated = updated;
        Ok(count)
    }

    pub fn compute_statistics(&mut self) {
        let store = &self.store;
        let updated = &self.updated;
        self.stats = (0..store.cell_count())
            .into_par_iter()
            .map(|c| CellVelocityStats {
                supported: updated.get(c).copied().unwrap_or(false),
                ..cell_statistics(store.cell(c))
            })
            .collect();
    }

    /// Per-cell resampling with the growth response and the global budget.
    pub fn resample(&mut self) {
        let rp = self.params.resample;
        let n = self.store.cell_count();
        let mut targets: Vec<usize> = (0..n)
            .map(|c| {
                let ps = self.store.cell(c);
                let wsum: f64 = ps.iter().map(|p| p.weight).sum();
                rp.target_count(ps.len(), wsum, self.updated.get(c).copied().unwrap_or(false))
            })
            .collect();
        let total: usize = targets.iter().sum();
        if total > rp.max_total {
            let floor_total = rp.n_min * n;
            let extra: usize = total - floor_total;
            let room = rp.max_total.saturating_sub(floor_total);
            let f = room as f64 / extra.max(1) as f64;
            for t in &mut targets {
                *t = rp.n_min + ((*t - rp.n_min) as f64 * f).floor() as usize;
            }
        }
        let base: u64 = self.rng.random();
        let spec = *self.spec();
        let speed = self.params.init_speed;
        let store = &self.store;
        let cells: Vec<Vec<Particle>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base, c as u64));
                let ps = store.cell(c);
                if ps.is_empty() {
                    let center = spec.cell_center(spec.from_linear(c));
                    let lower = center - Vec2::new(0.5 * spec.cell_size, 0.5 * spec.cell_size);
                    init_cell_particles(lower, spec.cell_size, targets[c], speed, &mut rng)
                } else {
                    systematic_resample(ps, targets[c], &mut rng)
                }
            })
            .collect();
        self.store = ParticleStore::from_cells(cells);
    }

    /// Runs the hypotheses manager and merges its spawns into the store,
    /// respecting `n_max`. Dynamic marks age by one cycle first.
    pub fn spawn(&mut self, scan: &[Detection], rig: &SensorRig, pose: &EgoPose) -> Result<(usize, usize)> {
        self.marks.map_inplace(|m| m.saturating_sub(1));
        let spec = *self.spec();
        let hp = self.params.hypotheses;
        let clusters = if scan.is_empty() {
            0
        } else {
            dynamic_clusters(scan, pose, rig, &hp)?.len()
        };
        if clusters == 0 {
            return Ok((0, 0));
        }
        let spawns = hypotheses_manager(scan, pose, rig, &spec, &hp, &mut self.rng)?;
        let n_max = self.params.resample.n_max;
        let mut spawned = 0;
        let mut merged: Vec<Option<Vec<Particle>>> = vec![None; spec.cell_count()];
        for s in spawns {
            self.marks.set(spec.from_linear(s.cell), hp.dynamic_ttl);
            let existing = self.store.cell(s.cell);
            let take = s.particles.len().min(n_max);
            let keep = existing.len().min(n_max - take);
            let mut out: Vec<Particle> = if keep < existing.len() {
                sample(&mut self.rng, existing.len(), keep)
                    .into_iter()
                    .map(|i| existing[i])
                    .collect()
            } else {
                existing.to_vec()
            };
            let mean = if out.is_empty() {
                1.0
            } else {
                out.iter().map(|p| p.weight).sum::<f64>() / out.len() as f64
            };
            let w = hp.spawn_weight * mean;
            out.extend(s.particles.into_iter().take(take).map(|p| Particle { weight: w, ..p }));
            let total: f64 = out.iter().map(|p| p.weight).sum();
            if total > 0.0 {
                out.iter_mut().for_each(|p| p.weight /= total);
            }
            spawned += take;
            merged[s.cell] = Some(out);
        }
        let store = &self.store;
        let cells: Vec<Vec<Particle>> = merged
            .into_iter()
            .enumerate()
            .map(|(c, m)| m.unwrap_or_else(|| store.cell(c).to_vec()))
            .collect();
        self.store = ParticleStore::from_cells(cells);
        Ok((spawned, clusters))
    }

    /// Shifts the window by whole cells; particles leaving it are dropped and
    /// newly exposed cells are initialized.
    pub fn scroll(&mut self, dx: i64, dy: i64) -> usize {
        if dx == 0 && dy == 0 {
            return 0;
        }
        self.marks.scroll(dx, dy);
        let spec = *self.spec();
        let dropped = self.store.rebin(&spec);
        self.fill_empty_cells();
        self.updated = vec![false; spec.cell_count()];
        dropped
    }
}
