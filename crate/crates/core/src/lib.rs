//! Layered dynamic occupancy grid mapping for automotive radar.
//!
//! Two independently configured grid layers share a global frame: an
//! occupancy layer (Binary Bayes log-odds or Dempster-Shafer masses) and a
//! particle-based velocity layer. Both consume radar detections through
//! ambiguity-aware mixture inverse sensor models that account for range,
//! azimuth and range-rate aliasing. [`manager::UnifyState`] runs the cycle,
//! [`sim`] produces synthetic scans and [`io`] holds the file formats.

pub mod cli;
pub mod config;
pub mod error;
pub mod frames;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod manager;
pub mod occupancy;
pub mod rig;
pub mod sensor_models;
pub mod sim;
pub mod surface;
pub mod types;
pub mod velocity;

pub use config::{Config, SensorConfig};
pub use error::{Error, Result};
pub use frames::{cell_center_polar, polar_to_world, SensorFrame};
pub use geometry::{wrap_angle, Vec2};
pub use grid::{CellIndex, GridSpec, ScrollGrid};
pub use manager::{CycleReport, Mode, Snapshot, UnifyState};
pub use occupancy::{OccupancyLayer, OccupancyParams, Representation};
pub use rig::SensorRig;
pub use sensor_models::SensorModel;
pub use types::{Detection, EgoPose, NoiseStd, SensorModelParams, SensorMount};
pub use velocity::{VelocityLayer, VelocityParams};
