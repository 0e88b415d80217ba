//! Cycle orchestration over both layers and window scrolling.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::grid::GridSpec;
use crate::occupancy::{OccupancyLayer, Representation};
use crate::rig::SensorRig;
use crate::types::{Detection, EgoPose};
use crate::velocity::{CellVelocityStats, Particle, VelocityLayer};

/// Which layers a run executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Full,
    OccupancyOnly,
    VelocityOnly,
}

impl Mode {
    pub fn occupancy(self) -> bool {
        self != Mode::VelocityOnly
    }

    pub fn velocity(self) -> bool {
        self != Mode::OccupancyOnly
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "occupancy-only" => Ok(Self::OccupancyOnly),
            "velocity-only" => Ok(Self::VelocityOnly),
            other => Err(format!(
                "unknown mode `{other}` (expected full, occupancy-only or velocity-only)"
            )),
        }
    }
}

pub const PHASES: [&str; 9] = [
    "scroll",
    "decay",
    "predict",
    "transfer",
    "occupancy_update",
    "weights",
    "statistics",
    "resample",
    "spawn",
];

/// What one cycle did and how long each phase took.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CycleReport {
    pub cycle: u64,
    pub timestamp: f64,
    pub detections: usize,
    /// Window shift of the occupancy grid in cells.
    pub scrolled: (i64, i64),
    /// Milliseconds per phase, in [`PHASES`] order.
    pub phase_ms: [f64; 9],
    pub particles: usize,
    pub transfers: usize,
    /// Occupied evidence actually moved by the transfers.
    pub transferred: f64,
    pub occupancy_updates: usize,
    pub updated_cells: usize,
    pub spawned: usize,
    pub clusters: usize,
    pub dropped: usize,
}

impl CycleReport {
    pub fn total_ms(&self) -> f64 {
        self.phase_ms.iter().sum()
    }
}

/// Immutable copy of both layers at one cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub cycle: u64,
    pub timestamp: f64,
    pub occupancy_spec: GridSpec,
    pub representation: Representation,
    /// Row-major occupancy probabilities (empty in velocity-only mode).
    pub probabilities: Vec<f64>,
    /// Row-major `(occupied, free)` masses for DS grids.
    pub masses: Option<Vec<(f64, f64)>>,
    pub velocity_spec: GridSpec,
    /// Row-major velocity statistics (empty in occupancy-only mode).
    pub velocity: Vec<CellVelocityStats>,
    pub particle_count: usize,
    /// Particle states, when requested.
    pub particles: Vec<Particle>,
}

/// Both layers plus the bookkeeping of a run.
#[derive(Clone, Debug)]
pub struct UnifyState {
    config: Config,
    mode: Mode,
    rig: SensorRig,
    occupancy: Option<OccupancyLayer>,
    velocity: Option<VelocityLayer>,
    anchor: Vec2,
    cycle: u64,
    last_timestamp: Option<f64>,
}

impl UnifyState {
    /// Builds both grids around `start`, the initial platform position.
    pub fn new(config: Config, mode: Mode, start: Vec2, seed: u64) -> Result<Self> {
        config.validate()?;
        let rig = config.rig()?;
        let occupancy = if mode.occupancy() {
            Some(OccupancyLayer::new(
                config.occupancy_grid.centered_on(start),
                config.occupancy,
            )?)
        } else {
            None
        };
        let velocity = if mode.velocity() {
            Some(VelocityLayer::new(
                config.velocity_grid.centered_on(start),
                config.velocity,
                seed,
            )?)
        } else {
            None
        };
        Ok(Self {
            config,
            mode,
            rig,
            occupancy,
            velocity,
            anchor: start,
            cycle: 0,
            last_timestamp: None,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rig(&self) -> &SensorRig {
        &self.rig
    }

    pub fn occupancy(&self) -> Option<&OccupancyLayer> {
        self.occupancy.as_ref()
    }

    pub fn occupancy_mut(&mut self) -> Option<&mut OccupancyLayer> {
        self.occupancy.as_mut()
    }

    pub fn velocity(&self) -> Option<&VelocityLayer> {
        self.velocity.as_ref()
    }

    pub fn anchor(&self) -> Vec2 {
        self.anchor
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Total allocated cells over both layers.
    pub fn allocated_cells(&self) -> usize {
        self.occupancy.as_ref().map_or(0, |o| o.grid().allocated())
            + self.velocity.as_ref().map_or(0, |v| v.allocated_cells())
    }

    /// Shifts both windows toward the platform once it has moved at least the
    /// scroll threshold away from the last anchor. Rotation never moves the grid.
    /// Returns the occupancy shift in cells and the particles dropped.
    pub fn maybe_scroll(&mut self, pose: &EgoPose) -> ((i64, i64), usize) {
        let threshold = self.config.scroll_threshold();
        let moved = (pose.position - self.anchor).norm();
        if moved == 0.0 || moved < threshold {
            return ((0, 0), 0);
        }
        self.anchor = pose.position;
        let mut shift = (0, 0);
        if let Some(occ) = self.occupancy.as_mut() {
            let spec = *occ.spec();
            let (tx, ty) = spec.origin_cell_for(pose.position);
            let (cx, cy) = spec.origin_cell_for(spec.origin + spec.anchor_offset());
            shift = (tx - cx, ty - cy);
            occ.scroll(shift.0, shift.1);
        }
        let mut dropped = 0;
        if let Some(vel) = self.velocity.as_mut() {
            let spec = *vel.spec();
            let (tx, ty) = spec.origin_cell_for(pose.position);
            let (cx, cy) = spec.origin_cell_for(spec.origin + spec.anchor_offset());
            dropped = vel.scroll(tx - cx, ty - cy);
        }
        (shift, dropped)
    }

    /// Runs one full cycle for the scan observed at `pose`.
    pub fn step(&mut self, pose: &EgoPose, scan: &[Detection]) -> Result<CycleReport> {
        if let Some(prev) = self.last_timestamp {
            if pose.timestamp < prev {
                return Err(Error::OutOfOrder {
                    previous: prev,
                    got: pose.timestamp,
                });
            }
        }
        for z in scan {
            z.validate()?;
            self.rig.get(z.sensor_id)?;
        }
        let dt = self.last_timestamp.map_or(0.0, |t| pose.timestamp - t);
        let mut report = CycleReport {
            cycle: self.cycle,
            timestamp: pose.timestamp,
            detections: scan.len(),
            ..Default::default()
        };
        let mut clock = Instant::now();
        let mut lap = |report: &mut CycleReport, phase: usize| {
            let now = Instant::now();
            report.phase_ms[phase] += (now - clock).as_secs_f64() * 1e3;
            clock = now;
        };

        let (shift, dropped) = self.maybe_scroll(pose);
        report.scrolled = shift;
        report.dropped += dropped;
        lap(&mut report, 0);

        if let Some(occ) = self.occupancy.as_mut() {
            occ.predict();
        }
        lap(&mut report, 1);

        let coupled = self.config.mass_transfer && self.mode == Mode::Full;
        let occ_spec = self.occupancy.as_ref().map(|o| *o.spec());
        let mut transfers = Vec::new();
        if let Some(vel) = self.velocity.as_mut() {
            let (t, dropped) = vel.predict(dt, if coupled { occ_spec.as_ref() } else { None });
            transfers = t;
            report.dropped += dropped;
        }
        lap(&mut report, 2);

        if let Some(occ) = self.occupancy.as_mut() {
            if !transfers.is_empty() {
                report.transferred = occ.apply_transfers(&transfers)?;
            }
        }
        report.transfers = transfers.len();
        lap(&mut report, 3);

        if let Some(occ) = self.occupancy.as_mut() {
            report.occupancy_updates = occ.update(scan, &self.rig, pose)?;
        }
        lap(&mut report, 4);

        if let Some(vel) = self.velocity.as_mut() {
            report.updated_cells = vel.update(scan, &self.rig, pose, None)?;
            lap(&mut report, 5);
            vel.compute_statistics();
            lap(&mut report, 6);
            vel.resample();
            lap(&mut report, 7);
            let (spawned, clusters) = vel.spawn(scan, &self.rig, pose)?;
            report.spawned = spawned;
            report.clusters = clusters;
            report.particles = vel.particle_count();
            lap(&mut report, 8);
        }

        self.last_timestamp = Some(pose.timestamp);
        self.cycle += 1;
        Ok(report)
    }

    /// Copies both layers; particle states are included when `with_particles`.
    pub fn snapshot(&self, with_particles: bool) -> Snapshot {
        let occ = self.occupancy.as_ref();
        let vel = self.velocity.as_ref();
        let occupancy_spec = occ.map_or(self.config.occupancy_grid, |o| *o.spec());
        let velocity_spec = vel.map_or(self.config.velocity_grid, |v| *v.spec());
        Snapshot {
            cycle: self.cycle,
            timestamp: self.last_timestamp.unwrap_or(0.0),
            occupancy_spec,
            representation: self.config.occupancy.representation,
            probabilities: occ.map(|o| o.probabilities()).unwrap_or_default(),
            masses: occ.and_then(|o| o.ds_masses()),
            velocity_spec,
            velocity: vel.map(|v| v.stats().to_vec()).unwrap_or_default(),
            particle_count: vel.map_or(0, |v| v.particle_count()),
            particles: match vel {
                Some(v) if with_particles => v.store().all().to_vec(),
                _ => Vec::new(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> Config {
        let mut cfg = Config::default();
        cfg.occupancy_grid = GridSpec::new(0.5, 20.0, 20.0, 20.0, Vec2::ZERO);
        cfg.velocity_grid = GridSpec::new(1.0, 20.0, 20.0, 20.0, Vec2::ZERO);
        cfg
    }

    #[test]
    fn rejects_out_of_order() {
        let mut s = UnifyState::new(small_config(), Mode::Full, Vec2::ZERO, 1).unwrap();
        s.step(&EgoPose::at_origin(1.0), &[]).unwrap();
        assert!(matches!(
            s.step(&EgoPose::at_origin(0.5), &[]),
            Err(Error::OutOfOrder { .. })
        ));
    }

    #[test]
    fn empty_scan_only_decays_occupancy() {
        let mut s = UnifyState::new(small_config(), Mode::OccupancyOnly, Vec2::ZERO, 1).unwrap();
        let before = s.occupancy().unwrap().state_bits();
        let r = s.step(&EgoPose::at_origin(0.0), &[]).unwrap();
        assert_eq!(r.occupancy_updates, 0);
        assert_eq!(s.occupancy().unwrap().state_bits(), before);
    }

    #[test]
    fn scroll_threshold_and_rotation() {
        let mut s = UnifyState::new(small_config(), Mode::Full, Vec2::ZERO, 1).unwrap();
        let origin = *s.occupancy().unwrap().spec();
        let turn = EgoPose::new(Vec2::ZERO, 1.3, Vec2::ZERO, 0.0);
        assert_eq!(s.maybe_scroll(&turn).0, (0, 0));
        let nudge = EgoPose::new(Vec2::new(0.3, 0.0), 0.0, Vec2::ZERO, 0.0);
        assert_eq!(s.maybe_scroll(&nudge).0, (0, 0));
        assert_eq!(*s.occupancy().unwrap().spec(), origin);
        let east = EgoPose::new(Vec2::new(1.5, 0.0), 0.0, Vec2::ZERO, 0.0);
        assert_eq!(s.maybe_scroll(&east).0, (3, 0));
        assert_eq!(s.occupancy().unwrap().spec().origin.x, origin.origin.x + 1.5);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("occupancy-only".parse::<Mode>().unwrap(), Mode::OccupancyOnly);
        assert!("both".parse::<Mode>().is_err());
    }
}
