//! The set of radars mounted on the platform, each with its inverse sensor model.

use crate::error::{Error, Result};
use crate::frames::SensorFrame;
use crate::sensor_models::SensorModel;
use crate::types::{EgoPose, SensorModelParams, SensorMount};

#[derive(Clone, Debug)]
pub struct Sensor {
    pub mount: SensorMount,
    pub model: SensorModel,
}

/// Mounted radars, looked up by sensor id.
#[derive(Clone, Debug)]
pub struct SensorRig {
    sensors: Vec<Sensor>,
}

impl SensorRig {
    pub fn new(sensors: Vec<(SensorMount, SensorModelParams)>) -> Result<Self> {
        let mut out = Vec::with_capacity(sensors.len());
        for (mount, params) in sensors {
            mount.validate()?;
            if out.iter().any(|s: &Sensor| s.mount.sensor_id == mount.sensor_id) {
                return Err(Error::invalid(
                    "sensor_id",
                    format!("duplicate sensor id {}", mount.sensor_id),
                ));
            }
            out.push(Sensor {
                mount,
                model: SensorModel::new(params)?,
            });
        }
        Ok(Self { sensors: out })
    }

    /// Every mount shares the same model parameters.
    pub fn uniform(mounts: Vec<SensorMount>, params: SensorModelParams) -> Result<Self> {
        Self::new(mounts.into_iter().map(|m| (m, params)).collect())
    }

    pub fn get(&self, sensor_id: u32) -> Result<&Sensor> {
        self.sensors
            .iter()
            .find(|s| s.mount.sensor_id == sensor_id)
            .ok_or(Error::UnknownSensor(sensor_id))
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn mounts(&self) -> Vec<SensorMount> {
        self.sensors.iter().map(|s| s.mount.clone()).collect()
    }

    pub fn frame(&self, sensor_id: u32, pose: &EgoPose) -> Result<SensorFrame> {
        Ok(SensorFrame::new(&self.get(sensor_id)?.mount, pose))
    }
}
