//! Shared domain value types.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};

/// Pose of the sensor platform in the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    pub position: Vec2,
    /// Radians, normalized to (−π, π].
    pub heading: f64,
    pub velocity: Vec2,
    pub timestamp: f64,
}

impl EgoPose {
    pub fn new(position: Vec2, heading: f64, velocity: Vec2, timestamp: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
            velocity,
            timestamp,
        }
    }

    pub fn at_origin(timestamp: f64) -> Self {
        Self::new(Vec2::ZERO, 0.0, Vec2::ZERO, timestamp)
    }
}

/// Mounting of one radar on the sensor platform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorMount {
    pub sensor_id: u32,
    /// Position in the platform frame (m).
    pub offset: Vec2,
    /// Boresight yaw in the platform frame (rad).
    pub yaw: f64,
    /// Half-angle of the azimuth field of view (rad).
    pub fov_azimuth: f64,
    pub max_range: f64,
}

impl SensorMount {
    pub fn new(sensor_id: u32, offset: Vec2, yaw: f64, fov_azimuth: f64, max_range: f64) -> Self {
        Self {
            sensor_id,
            offset,
            yaw,
            fov_azimuth,
            max_range,
        }
    }

    /// A sensor at the platform origin looking along the platform x axis.
    pub fn identity(sensor_id: u32) -> Self {
        Self::new(sensor_id, Vec2::ZERO, 0.0, PI, 250.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_range > 0.0) {
            return Err(Error::invalid("max_range", "must be > 0"));
        }
        if !(self.fov_azimuth > 0.0 && self.fov_azimuth <= PI) {
            return Err(Error::invalid("fov_azimuth", "must lie in (0, pi]"));
        }
        Ok(())
    }

    pub fn in_fov(&self, azimuth: f64) -> bool {
        wrap_angle(azimuth).abs() <= self.fov_azimuth
    }

    /// The four-corner layout used by the bundled scenarios: front-left,
    /// front-right, rear-left and rear-right radars with overlapping cones.
    pub fn default_four_corner() -> Vec<SensorMount> {
        let fov = 75f64.to_radians();
        let range = 100.0;
        vec![
            SensorMount::new(0, Vec2::new(3.6, 0.8), 40f64.to_radians(), fov, range),
            SensorMount::new(1, Vec2::new(3.6, -0.8), -40f64.to_radians(), fov, range),
            SensorMount::new(2, Vec2::new(-0.9, 0.8), 140f64.to_radians(), fov, range),
            SensorMount::new(3, Vec2::new(-0.9, -0.8), -140f64.to_radians(), fov, range),
        ]
    }
}

/// A single radar return in the sensor frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub sensor_id: u32,
    pub timestamp: f64,
    pub range: f64,
    pub azimuth: f64,
    pub range_rate: f64,
    pub sigma_range: f64,
    pub sigma_azimuth: f64,
    pub sigma_range_rate: f64,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        if !(self.range >= 0.0) {
            return Err(Error::invalid("range", "must be >= 0"));
        }
        if !(self.sigma_range > 0.0 && self.sigma_azimuth > 0.0 && self.sigma_range_rate > 0.0) {
            return Err(Error::invalid("sigma", "all noise standard deviations must be > 0"));
        }
        Ok(())
    }
}

/// Nominal measurement noise of a radar, used to calibrate the likelihood scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseStd {
    pub range: f64,
    pub azimuth: f64,
    pub range_rate: f64,
}

impl Default for NoiseStd {
    fn default() -> Self {
        Self {
            range: 0.25,
            azimuth: 0.015,
            range_rate: 0.1,
        }
    }
}

/// Parameters of the ambiguity-aware inverse sensor models.
///
/// Range and azimuth shifts range over `{-k_pos, ..., k_pos}`; range-rate
/// shifts over `{-k_range_rate, ..., k_range_rate}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorModelParams {
    pub delta_range: f64,
    pub delta_azimuth: f64,
    pub delta_range_rate: f64,
    pub k_pos: u32,
    pub k_range_rate: u32,
    pub rho0: f64,
    /// Range spread of the free-space model relative to the measured range.
    pub gamma: f64,
    pub eta_occ: f64,
    pub eta_free: f64,
    pub eta_vel: f64,
}

/// Peak single-term likelihoods the default scale constants are tuned to.
/// A term's value includes its shift probability, so the central term peaks
/// at these values whatever the shift bounds.
pub const PEAK_OCCUPIED: f64 = 0.7;
pub const PEAK_FREE: f64 = 0.6;
pub const PEAK_VELOCITY: f64 = 1.0;
/// Range at which the free-space scale is calibrated (m).
pub const FREE_REFERENCE_RANGE: f64 = 4.5;
pub const DEFAULT_GAMMA: f64 = 0.3;
pub const DEFAULT_RHO0: f64 = 0.2;

/// Probability of the zero shift among `-k..=k`.
fn central_weight(k: u32) -> f64 {
    crate::sensor_models::shift_weights(k)[k as usize]
}

impl SensorModelParams {
    /// Scale constants chosen so the unshifted term peaks at
    /// [`PEAK_OCCUPIED`], [`PEAK_FREE`] and [`PEAK_VELOCITY`] for the given
    /// nominal noise.
    pub fn calibrated(
        noise: NoiseStd,
        delta_range: f64,
        delta_azimuth: f64,
        delta_range_rate: f64,
        k_pos: u32,
        k_range_rate: u32,
    ) -> Self {
        let rho0 = DEFAULT_RHO0;
        let gamma = DEFAULT_GAMMA;
        let decorrelation = (1.0 - rho0 * rho0).sqrt();
        let two_pi = 2.0 * PI;
        let pos = central_weight(k_pos).powi(2);
        Self {
            delta_range,
            delta_azimuth,
            delta_range_rate,
            k_pos,
            k_range_rate,
            rho0,
            gamma,
            eta_occ: PEAK_OCCUPIED * two_pi * noise.range * noise.azimuth * decorrelation / pos,
            eta_free: PEAK_FREE * two_pi * gamma * FREE_REFERENCE_RANGE * noise.azimuth * decorrelation
                / pos,
            eta_vel: PEAK_VELOCITY * two_pi.sqrt() * noise.range_rate / central_weight(k_range_rate),
        }
    }

    /// Same parameters with other shift bounds; the scale constants are
    /// rescaled so the unshifted term keeps its peak.
    pub fn with_shift_bounds(self, k_pos: u32, k_range_rate: u32) -> Self {
        let pos = (central_weight(self.k_pos) / central_weight(k_pos)).powi(2);
        let rr = central_weight(self.k_range_rate) / central_weight(k_range_rate);
        Self {
            k_pos,
            k_range_rate,
            eta_occ: self.eta_occ * pos,
            eta_free: self.eta_free * pos,
            eta_vel: self.eta_vel * rr,
            ..self
        }
    }

    /// Same parameters with all ambiguity index sets collapsed to `{0}`.
    pub fn ideal(self) -> Self {
        self.with_shift_bounds(0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_range", self.delta_range),
            ("delta_azimuth", self.delta_azimuth),
            ("delta_range_rate", self.delta_range_rate),
            ("gamma", self.gamma),
            ("eta_occ", self.eta_occ),
            ("eta_free", self.eta_free),
            ("eta_vel", self.eta_vel),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(Error::invalid("rho0", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn range_rate_shifts(&self) -> impl Iterator<Item = i32> {
        let k = self.k_range_rate as i32;
        -k..=k
    }
}

impl Default for SensorModelParams {
    fn default() -> Self {
        Self::calibrated(NoiseStd::default(), 15.0, 0.35, 12.5, 1, 1)
    }
}
