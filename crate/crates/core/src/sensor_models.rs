//! Ambiguity-aware inverse radar sensor models.
//!
//! Range, azimuth and range-rate measurements may be reported shifted by an
//! integer multiple of a sensor-specific interval. Every likelihood here is a
//! Gaussian mixture over those shift hypotheses, weighted by independent
//! binomial(p = 0.5) shift probabilities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frames::SensorFrame;
use crate::geometry::{wrap_angle, Vec2};
use crate::types::{Detection, EgoPose, SensorModelParams, SensorMount};

/// Minimum sensor-to-particle distance for the Doppler model (m).
pub const ORIGIN_EPSILON: f64 = 1e-6;

/// Binomial(2k, 1/2) probabilities of the shift indices `-k..=k`
/// (entry `i + k` holds the probability of shift `i`).
pub fn shift_weights(k: u32) -> Vec<f64> {
    let n = 2 * k as usize;
    let mut weights = Vec::with_capacity(n + 1);
    // C(n, m) / 2^n built incrementally; exact in f64 for any practical k.
    let mut coeff = 1.0f64;
    let scale = 0.5f64.powi(n as i32);
    for m in 0..=n {
        weights.push(coeff * scale);
        coeff = coeff * (n - m) as f64 / (m + 1) as f64;
    }
    weights
}

/// Shift probabilities for position (`I = J`) and range-rate (`L`) ambiguities.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftWeightTable {
    k_pos: i32,
    k_rr: i32,
    position: Vec<f64>,
    range_rate: Vec<f64>,
}

impl ShiftWeightTable {
    pub fn new(k_pos: u32, k_range_rate: u32) -> Self {
        Self {
            k_pos: k_pos as i32,
            k_rr: k_range_rate as i32,
            position: shift_weights(k_pos),
            range_rate: shift_weights(k_range_rate),
        }
    }

    pub fn k_pos(&self) -> i32 {
        self.k_pos
    }

    pub fn k_range_rate(&self) -> i32 {
        self.k_rr
    }

    /// Marginal probability of a single range (or azimuth) shift index.
    pub fn position(&self, i: i32) -> f64 {
        if i.abs() > self.k_pos {
            0.0
        } else {
            self.position[(i + self.k_pos) as usize]
        }
    }

    /// Joint probability of the shift pair `(i, j)`; the index draws are independent.
    pub fn joint(&self, i: i32, j: i32) -> f64 {
        self.position(i) * self.position(j)
    }

    pub fn range_rate(&self, l: i32) -> f64 {
        if l.abs() > self.k_rr {
            0.0
        } else {
            self.range_rate[(l + self.k_rr) as usize]
        }
    }

    pub fn position_indices(&self) -> std::ops::RangeInclusive<i32> {
        -self.k_pos..=self.k_pos
    }

    pub fn range_rate_indices(&self) -> std::ops::RangeInclusive<i32> {
        -self.k_rr..=self.k_rr
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Density of a zero-mean bivariate normal with standard deviations `s1`, `s2`
/// and correlation `rho`, evaluated at `(d1, d2)`.
#[inline]
pub fn bivariate_normal(d1: f64, d2: f64, s1: f64, s2: f64, rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    let u = d1 / s1;
    let v = d2 / s2;
    let q = (u * u - 2.0 * rho * u * v + v * v) / one_m;
    (-0.5 * q).exp() / (2.0 * PI * s1 * s2 * one_m.sqrt())
}

#[inline]
pub fn normal(d: f64, s: f64) -> f64 {
    let u = d / s;
    (-0.5 * u * u).exp() / ((2.0 * PI).sqrt() * s)
}

/// Sensor-model parameters together with their precomputed shift weights.
#[derive(Clone, Debug)]
pub struct SensorModel {
    params: SensorModelParams,
    weights: ShiftWeightTable,
}

impl SensorModel {
    pub fn new(params: SensorModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            weights: ShiftWeightTable::new(params.k_pos, params.k_range_rate),
            params,
        })
    }

    pub fn params(&self) -> &SensorModelParams {
        &self.params
    }

    pub fn weights(&self) -> &ShiftWeightTable {
        &self.weights
    }

    fn check_rho(&self) -> Result<()> {
        if self.params.rho0.abs() >= 1.0 {
            return Err(Error::NotPositiveDefinite { rho: self.params.rho0 });
        }
        Ok(())
    }

    /// Mixture occupancy likelihood of a cell at sensor-frame polar `(r_c, φ_c)`.
    pub fn occupancy_likelihood(&self, cell_polar: (f64, f64), z: &Detection) -> Result<f64> {
        self.check_rho()?;
        Ok(self.occupancy_unchecked(cell_polar, z))
    }

    pub(crate) fn occupancy_unchecked(&self, (rc, phic): (f64, f64), z: &Detection) -> f64 {
        let p = &self.params;
        let mut sum = 0.0;
        for i in self.weights.position_indices() {
            let wi = self.weights.position(i);
            let dr = rc + i as f64 * p.delta_range - z.range;
            for j in self.weights.position_indices() {
                let shifted_az = wrap_angle(phic + j as f64 * p.delta_azimuth);
                let dphi = wrap_angle(shifted_az - z.azimuth);
                let rho = sign(shifted_az) * p.rho0;
                sum += wi
                    * self.weights.position(j)
                    * bivariate_normal(dr, dphi, z.sigma_range, z.sigma_azimuth, rho);
            }
        }
        p.eta_occ * sum
    }

    /// Mixture free-space likelihood. Terms are active only for cells in front
    /// of the measured range whose shifted range also lies in front of it.
    pub fn free_space_likelihood(&self, cell_polar: (f64, f64), z: &Detection) -> Result<f64> {
        self.check_rho()?;
        Ok(self.free_unchecked(cell_polar, z))
    }

    pub(crate) fn free_unchecked(&self, (rc, phic): (f64, f64), z: &Detection) -> f64 {
        let p = &self.params;
        if rc >= z.range {
            return 0.0;
        }
        let range_std = p.gamma * z.range;
        let mut sum = 0.0;
        for i in self.weights.position_indices() {
            let shifted_r = rc + i as f64 * p.delta_range;
            if shifted_r >= z.range {
                continue;
            }
            let wi = self.weights.position(i);
            for j in self.weights.position_indices() {
                let shifted_az = wrap_angle(phic + j as f64 * p.delta_azimuth);
                let dphi = wrap_angle(shifted_az - z.azimuth);
                let rho = sign(shifted_az) * p.rho0;
                sum += wi
                    * self.weights.position(j)
                    * bivariate_normal(shifted_r, dphi, range_std, z.sigma_azimuth, rho);
            }
        }
        p.eta_free * sum
    }

    /// Occupancy likelihood restricted to the terms whose range and azimuth
    /// offsets both lie within `gate` standard deviations. Used by the grid
    /// update, whose support is truncated at the same bound.
    pub fn occupancy_truncated(&self, (rc, phic): (f64, f64), z: &Detection, gate: f64) -> f64 {
        let p = &self.params;
        let (gr, ga) = (gate * z.sigma_range, gate * z.sigma_azimuth);
        let mut sum = 0.0;
        for i in self.weights.position_indices() {
            let dr = rc + i as f64 * p.delta_range - z.range;
            if dr.abs() > gr {
                continue;
            }
            for j in self.weights.position_indices() {
                let shifted_az = wrap_angle(phic + j as f64 * p.delta_azimuth);
                let dphi = wrap_angle(shifted_az - z.azimuth);
                if dphi.abs() > ga {
                    continue;
                }
                let rho = sign(shifted_az) * p.rho0;
                sum += self.weights.joint(i, j) * bivariate_normal(dr, dphi, z.sigma_range, z.sigma_azimuth, rho);
            }
        }
        p.eta_occ * sum
    }

    /// Free-space likelihood restricted to terms within `gate` azimuth
    /// standard deviations (and `gate` range spreads).
    pub fn free_truncated(&self, (rc, phic): (f64, f64), z: &Detection, gate: f64) -> f64 {
        let p = &self.params;
        if rc >= z.range {
            return 0.0;
        }
        let range_std = p.gamma * z.range;
        let ga = gate * z.sigma_azimuth;
        let mut sum = 0.0;
        for j in self.weights.position_indices() {
            let shifted_az = wrap_angle(phic + j as f64 * p.delta_azimuth);
            let dphi = wrap_angle(shifted_az - z.azimuth);
            if dphi.abs() > ga {
                continue;
            }
            let rho = sign(shifted_az) * p.rho0;
            for i in self.weights.position_indices() {
                let shifted_r = rc + i as f64 * p.delta_range;
                if shifted_r >= z.range || shifted_r.abs() > gate * range_std {
                    continue;
                }
                sum += self.weights.joint(i, j) * bivariate_normal(shifted_r, dphi, range_std, z.sigma_azimuth, rho);
            }
        }
        p.eta_free * sum
    }

    /// Mixture range-rate likelihood of a particle state seen by `frame`.
    pub fn velocity_likelihood(
        &self,
        position: Vec2,
        velocity: Vec2,
        z: &Detection,
        frame: &SensorFrame,
    ) -> Result<f64> {
        let predicted = doppler_predict_frame(position, velocity, frame)?;
        Ok(self.velocity_from_prediction(predicted, z))
    }

    pub(crate) fn velocity_from_prediction(&self, predicted: f64, z: &Detection) -> f64 {
        let p = &self.params;
        let mut sum = 0.0;
        for l in self.weights.range_rate_indices() {
            let shifted = z.range_rate - l as f64 * p.delta_range_rate;
            sum += self.weights.range_rate(l) * normal(shifted - predicted, z.sigma_range_rate);
        }
        p.eta_vel * sum
    }

    /// Product of the occupancy likelihood at `cell_polar` (the polar position of
    /// the particle's occupancy cell) and the particle's range-rate likelihood.
    pub fn combined_particle_likelihood(
        &self,
        position: Vec2,
        velocity: Vec2,
        cell_polar: (f64, f64),
        z: &Detection,
        frame: &SensorFrame,
    ) -> Result<f64> {
        let occ = self.occupancy_likelihood(cell_polar, z)?;
        if occ == 0.0 {
            return Ok(0.0);
        }
        Ok(occ * self.velocity_likelihood(position, velocity, z, frame)?)
    }

    /// Range-rate alias hypotheses `ṙ - l·Δ_ṙ` paired with their probabilities.
    pub fn range_rate_hypotheses(&self, range_rate: f64) -> Vec<(f64, f64)> {
        self.weights
            .range_rate_indices()
            .map(|l| {
                (
                    range_rate - l as f64 * self.params.delta_range_rate,
                    self.weights.range_rate(l),
                )
            })
            .collect()
    }
}

/// Combines the two per-detection masses into an occupancy probability,
/// clamped to [0, 1].
pub fn occupancy_probability(m_occ: f64, m_free: f64) -> f64 {
    (0.5 * (1.0 + m_occ - m_free)).clamp(0.0, 1.0)
}

/// Maps scaled likelihoods to a valid pair of belief masses: each is capped at
/// one and both are scaled down together when their sum exceeds one.
pub fn masses_from_likelihoods(lambda_occ: f64, lambda_free: f64) -> (f64, f64) {
    let mo = lambda_occ.clamp(0.0, 1.0);
    let mf = lambda_free.clamp(0.0, 1.0);
    let total = mo + mf;
    if total > 1.0 {
        (mo / total, mf / total)
    } else {
        (mo, mf)
    }
}

/// Same as [`doppler_predict`] for an already placed sensor frame.
pub fn doppler_predict_frame(position: Vec2, velocity: Vec2, frame: &SensorFrame) -> Result<f64> {
    let d = position - frame.position;
    let distance = d.norm();
    if distance < ORIGIN_EPSILON {
        return Err(Error::SensorOrigin { distance });
    }
    Ok(d.dot(velocity - frame.velocity) / distance)
}

/// Radial component of the particle's velocity relative to the sensor.
pub fn doppler_predict(
    position: Vec2,
    velocity: Vec2,
    mount: &SensorMount,
    pose: &EgoPose,
) -> Result<f64> {
    doppler_predict_frame(position, velocity, &SensorFrame::new(mount, pose))
}
