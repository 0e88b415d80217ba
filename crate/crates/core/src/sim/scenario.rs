//! Scenario files: a world, a sensor setup and simulation settings.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SensorConfig;
use crate::error::{Error, Result};
use crate::types::{Detection, EgoPose, SensorMount};

use super::radar::{simulate_scan, SimParams};
use super::world::WorldModel;

fn default_dt() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub scans: usize,
    /// Scan period (s).
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Time of the first scan (s).
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub sim: SimParams,
    /// Radar mounts; the four-corner layout when absent.
    #[serde(default)]
    pub sensors: Option<Vec<SensorConfig>>,
    #[serde(default)]
    pub world: WorldModel,
}

/// Platform pose and detections of one scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub pose: EgoPose,
    pub detections: Vec<Detection>,
}

pub const BUNDLED: [&str; 3] = ["static-corridor", "crossing-target", "urban-mixed"];

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        sc.validate().map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// One of the scenarios shipped with the crate (see [`BUNDLED`]).
    pub fn bundled(name: &str) -> Option<Self> {
        let text = match name {
            "static-corridor" => include_str!("../../scenarios/static-corridor.toml"),
            "crossing-target" => include_str!("../../scenarios/crossing-target.toml"),
            "urban-mixed" => include_str!("../../scenarios/urban-mixed.toml"),
            _ => return None,
        };
        Some(Self::from_toml_str(text, name).expect("bundled scenarios are valid"))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        self.sim.validate()?;
        self.world.validate()?;
        for m in self.mounts() {
            m.validate()?;
        }
        Ok(())
    }

    pub fn mounts(&self) -> Vec<SensorMount> {
        match &self.sensors {
            Some(s) => s.iter().map(SensorConfig::mount).collect(),
            None => SensorMount::default_four_corner(),
        }
    }

    pub fn time_of(&self, scan: usize) -> f64 {
        self.t0 + scan as f64 * self.dt
    }

    /// Simulates every scan. Scan `k` draws from stream `k` of a generator
    /// seeded with `seed`, so the output does not depend on thread count.
    pub fn generate(&self, seed: u64) -> Vec<ScanRecord> {
        let mounts = self.mounts();
        (0..self.scans)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let t = self.time_of(k);
                let pose = self.world.pose_at(t);
                let detections = simulate_scan(&self.world, t, &mounts, &pose, &self.sim, &mut rng);
                ScanRecord { pose, detections }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for name in BUNDLED {
            let s = Scenario::bundled(name).unwrap();
            assert_eq!(s.name, name);
        }
        assert!(Scenario::bundled("nope").is_none());
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "name = \"x\"\nscans = 2\n[sim]\nclutter = 3\n";
        match Scenario::from_toml_str(text, "s.toml") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("clutter"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generation_is_seeded() {
        let s = Scenario::bundled("static-corridor").unwrap();
        let a = s.generate(5);
        assert_eq!(a, s.generate(5));
        assert_ne!(a, s.generate(6));
        assert!(a.iter().all(|r| !r.detections.is_empty()));
    }
}
