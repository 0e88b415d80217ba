//! Portable pixmap renderers and raw float matrices.
//!
//! Images put world +y up: image row 0 is the grid's top row.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::velocity::{CellVelocityStats, Particle};

/// 8-bit grey (`channels == 1`) or RGB (`channels == 3`) image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0; width * height * channels],
        }
    }

    /// Sets the pixel of grid cell `(ix, iy)` (flipping y).
    pub fn put(&mut self, ix: usize, iy: usize, px: &[u8]) {
        let row = self.height - 1 - iy;
        let i = (row * self.width + ix) * self.channels;
        self.data[i..i + self.channels].copy_from_slice(&px[..self.channels]);
    }

    /// Binary PGM (`P5`) or PPM (`P6`) encoding.
    pub fn encode(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Grey occupancy image: occupied dark, free light, unknown mid grey.
pub fn render_occupancy(probabilities: &[f64], nx: usize, ny: usize) -> Image {
    let mut img = Image::new(nx, ny, 1);
    for iy in 0..ny {
        for ix in 0..nx {
            img.put(ix, iy, &[to_byte(1.0 - probabilities[iy * nx + ix])]);
        }
    }
    img
}

/// Two-channel evidence image: red = occupied mass, green = free mass,
/// black = unknown.
pub fn render_ds(masses: &[(f64, f64)], nx: usize, ny: usize) -> Image {
    let mut img = Image::new(nx, ny, 3);
    for iy in 0..ny {
        for ix in 0..nx {
            let (o, f) = masses[iy * nx + ix];
            img.put(ix, iy, &[to_byte(o), to_byte(f), 0]);
        }
    }
    img
}

/// Fully saturated color for a direction angle.
fn hue(angle: f64, value: f64) -> [u8; 3] {
    let h = (angle.rem_euclid(2.0 * PI) / (2.0 * PI)) * 6.0;
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [to_byte(r * value), to_byte(g * value), to_byte(b * value)]
}

/// Velocity cells colored by mean direction, brightness by speed (saturating at
/// `full_speed`); cells slower than `min_speed` stay black.
pub fn render_velocity(stats: &[CellVelocityStats], spec: &GridSpec, min_speed: f64, full_speed: f64) -> Image {
    let (nx, ny) = (spec.nx(), spec.ny());
    let mut img = Image::new(nx, ny, 3);
    for iy in 0..ny {
        for ix in 0..nx {
            let s = &stats[iy * nx + ix];
            if s.valid && s.speed() >= min_speed {
                img.put(ix, iy, &hue(s.mean.angle(), (s.speed() / full_speed).clamp(0.2, 1.0)));
            }
        }
    }
    img
}

/// Occupancy in grey with every particle faster than `min_speed` drawn on
/// top, colored by direction.
pub fn render_particles(
    probabilities: &[f64],
    occupancy: &GridSpec,
    particles: &[Particle],
    min_speed: f64,
) -> Image {
    let (nx, ny) = (occupancy.nx(), occupancy.ny());
    let grey = render_occupancy(probabilities, nx, ny);
    let mut img = Image::new(nx, ny, 3);
    for (k, &g) in grey.data.iter().enumerate() {
        img.data[3 * k..3 * k + 3].fill(g);
    }
    for p in particles {
        if p.velocity.norm() < min_speed {
            continue;
        }
        if let Some(c) = occupancy.world_to_cell(p.position) {
            img.put(c.ix, c.iy, &hue(p.velocity.angle(), 1.0));
        }
    }
    img
}

/// Grey image of a surface scaled to its maximum (bright = high).
pub fn render_surface(values: &[f64], nx: usize, ny: usize) -> Image {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let mut img = Image::new(nx, ny, 1);
    for iy in 0..ny {
        for ix in 0..nx {
            img.put(ix, iy, &[to_byte(values[iy * nx + ix] * scale)]);
        }
    }
    img
}

/// Raw matrix file: magic `RGMX`, width and height as `u32`, then row-major
/// little-endian `f64` values (row = y index, ascending).
pub fn encode_matrix(values: &[f64], nx: usize, ny: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * values.len());
    out.extend_from_slice(b"RGMX");
    out.extend_from_slice(&(nx as u32).to_le_bytes());
    out.extend_from_slice(&(ny as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(data: &[u8]) -> Option<(usize, usize, Vec<f64>)> {
    if data.len() < 12 || &data[..4] != b"RGMX" {
        return None;
    }
    let nx = u32::from_le_bytes(data[4..8].try_into().ok()?) as usize;
    let ny = u32::from_le_bytes(data[8..12].try_into().ok()?) as usize;
    let body = &data[12..];
    if body.len() != 8 * nx * ny {
        return None;
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Some((nx, ny, values))
}

pub fn write_matrix(path: &Path, values: &[f64], nx: usize, ny: usize) -> Result<()> {
    std::fs::write(path, encode_matrix(values, nx, ny)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_flip() {
        let img = render_occupancy(&[1.0, 0.0, 0.5, 0.5], 2, 2);
        let bytes = img.encode();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        // bottom row (iy = 0) is written last
        assert_eq!(&img.data[2..], &[0, 255]);
    }

    #[test]
    fn matrix_round_trip() {
        let v = vec![0.1, 2.0, -3.5, 1e-300, 7.0, 8.0];
        assert_eq!(decode_matrix(&encode_matrix(&v, 3, 2)), Some((3, 2, v)));
    }
}
