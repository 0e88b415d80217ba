//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here is written from the model definitions with nalgebra
//! matrices and explicit term enumeration, without calling into the crate's
//! likelihood code.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Matrix2, Rotation2, Vector2};
use radgrid::{Detection, EgoPose, SensorModelParams, SensorMount};

pub fn wrap(a: f64) -> f64 {
    a.sin().atan2(a.cos())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Binomial(2k, 1/2) probability of shift `i` in `-k..=k`.
pub fn shift_probability(k: u32, i: i32) -> f64 {
    if i.unsigned_abs() > k {
        return 0.0;
    }
    let n = 2 * k;
    let m = (i + k as i32) as u32;
    factorial(n) / (factorial(m) * factorial(n - m)) / 2f64.powi(n as i32)
}

/// Bivariate normal density through an explicit covariance inverse.
pub fn gaussian2(d: Vector2<f64>, cov: Matrix2<f64>) -> f64 {
    let inv = cov.try_inverse().expect("covariance must be invertible");
    let q = (d.transpose() * inv * d)[(0, 0)];
    (-0.5 * q).exp() / (2.0 * PI * cov.determinant().sqrt())
}

pub fn gaussian1(d: f64, s: f64) -> f64 {
    (-0.5 * (d / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
}

fn covariance(s1: f64, s2: f64, rho: f64) -> Matrix2<f64> {
    Matrix2::new(s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2)
}

pub fn occupancy(p: &SensorModelParams, (rc, phic): (f64, f64), z: &Detection) -> f64 {
    let k = p.k_pos as i32;
    let mut sum = 0.0;
    for i in -k..=k {
        for j in -k..=k {
            let r = rc + i as f64 * p.delta_range;
            let a = wrap(phic + j as f64 * p.delta_azimuth);
            let cov = covariance(z.sigma_range, z.sigma_azimuth, sign(a) * p.rho0);
            let d = Vector2::new(r - z.range, wrap(a - z.azimuth));
            sum += shift_probability(p.k_pos, i) * shift_probability(p.k_pos, j) * gaussian2(d, cov);
        }
    }
    p.eta_occ * sum
}

pub fn free(p: &SensorModelParams, (rc, phic): (f64, f64), z: &Detection) -> f64 {
    if rc >= z.range {
        return 0.0;
    }
    let k = p.k_pos as i32;
    let mut sum = 0.0;
    for i in -k..=k {
        let r = rc + i as f64 * p.delta_range;
        if r >= z.range {
            continue;
        }
        for j in -k..=k {
            let a = wrap(phic + j as f64 * p.delta_azimuth);
            let cov = covariance(p.gamma * z.range, z.sigma_azimuth, sign(a) * p.rho0);
            let d = Vector2::new(r, wrap(a - z.azimuth));
            sum += shift_probability(p.k_pos, i) * shift_probability(p.k_pos, j) * gaussian2(d, cov);
        }
    }
    p.eta_free * sum
}

/// World position of a sensor-frame polar point.
pub fn polar_to_world(range: f64, azimuth: f64, mount: &SensorMount, pose: &EgoPose) -> Vector2<f64> {
    let platform = Rotation2::new(pose.heading);
    let origin = Vector2::new(pose.position.x, pose.position.y)
        + platform * Vector2::new(mount.offset.x, mount.offset.y);
    let dir = Rotation2::new(pose.heading + mount.yaw + azimuth) * Vector2::new(1.0, 0.0);
    origin + dir * range
}

pub fn velocity(
    p: &SensorModelParams,
    position: Vector2<f64>,
    vel: Vector2<f64>,
    z: &Detection,
    mount: &SensorMount,
    pose: &EgoPose,
) -> f64 {
    let sensor = polar_to_world(0.0, 0.0, mount, pose);
    let los = (position - sensor).normalize();
    let predicted = los.dot(&(vel - Vector2::new(pose.velocity.x, pose.velocity.y)));
    let k = p.k_range_rate as i32;
    let sum: f64 = (-k..=k)
        .map(|l| {
            shift_probability(p.k_range_rate, l)
                * gaussian1(z.range_rate - l as f64 * p.delta_range_rate - predicted, z.sigma_range_rate)
        })
        .sum();
    p.eta_vel * sum
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
    }
}
