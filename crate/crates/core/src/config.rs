//! Structured run configuration (TOML).
//!
//! Every section is optional; missing keys fall back to the defaults below.
//!
//! ```toml
//! scroll_threshold = 0.5
//! mass_transfer = true
//!
//! [occupancy_grid]
//! cell_size = 0.5
//! extent_forward = 75.0
//! extent_backward = 75.0
//! extent_lateral = 150.0
//!
//! [occupancy]
//! representation = "ds"
//!
//! [sensor_model]
//! k_pos = 1
//!
//! [[sensors]]
//! sensor_id = 0
//! offset = { x = 3.6, y = 0.8 }
//! yaw = 0.698
//! fov_azimuth = 1.309
//! max_range = 100.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::grid::GridSpec;
use crate::occupancy::OccupancyParams;
use crate::rig::SensorRig;
use crate::types::{SensorModelParams, SensorMount};
use crate::velocity::VelocityParams;

/// One radar: its mount and an optional model override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub sensor_id: u32,
    #[serde(default)]
    pub offset: Vec2,
    #[serde(default)]
    pub yaw: f64,
    pub fov_azimuth: f64,
    pub max_range: f64,
    #[serde(default)]
    pub model: Option<SensorModelParams>,
}

impl SensorConfig {
    pub fn mount(&self) -> SensorMount {
        SensorMount::new(self.sensor_id, self.offset, self.yaw, self.fov_azimuth, self.max_range)
    }

    pub fn from_mount(mount: &SensorMount) -> Self {
        Self {
            sensor_id: mount.sensor_id,
            offset: mount.offset,
            yaw: mount.yaw,
            fov_azimuth: mount.fov_azimuth,
            max_range: mount.max_range,
            model: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub occupancy_grid: GridSpec,
    pub velocity_grid: GridSpec,
    pub occupancy: OccupancyParams,
    pub velocity: VelocityParams,
    /// Platform displacement that triggers a window shift (m). Defaults to one
    /// occupancy cell.
    pub scroll_threshold: Option<f64>,
    /// Couple the velocity layer into the occupancy layer via mass transfer.
    pub mass_transfer: bool,
    /// Model used by every sensor without its own override.
    pub sensor_model: SensorModelParams,
    pub sensors: Vec<SensorConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            occupancy_grid: GridSpec::default_occupancy(),
            velocity_grid: GridSpec::default_velocity(),
            occupancy: OccupancyParams::default(),
            velocity: VelocityParams::default(),
            scroll_threshold: None,
            mass_transfer: true,
            sensor_model: SensorModelParams::default(),
            sensors: SensorMount::default_four_corner()
                .iter()
                .map(SensorConfig::from_mount)
                .collect(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn scroll_threshold(&self) -> f64 {
        self.scroll_threshold.unwrap_or(self.occupancy_grid.cell_size)
    }

    pub fn validate(&self) -> Result<()> {
        self.occupancy_grid.validate()?;
        self.velocity_grid.validate()?;
        self.occupancy.validate()?;
        self.velocity.validate()?;
        self.sensor_model.validate()?;
        if let Some(t) = self.scroll_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::invalid("scroll_threshold", "must be finite and >= 0"));
            }
        }
        if self.sensors.is_empty() {
            return Err(Error::invalid("sensors", "at least one sensor is required"));
        }
        self.rig().map(|_| ())
    }

    pub fn rig(&self) -> Result<SensorRig> {
        SensorRig::new(
            self.sensors
                .iter()
                .map(|s| (s.mount(), s.model.unwrap_or(self.sensor_model)))
                .collect(),
        )
    }
}
