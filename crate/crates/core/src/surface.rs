//! Sensor-model likelihood surfaces for a sensor at the world origin.

use rayon::prelude::*;

use crate::error::Result;
use crate::frames::SensorFrame;
use crate::geometry::Vec2;
use crate::grid::{CellIndex, GridSpec};
use crate::sensor_models::SensorModel;
use crate::types::Detection;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    Occupancy,
    Free,
    Velocity,
}

impl std::str::FromStr for SurfaceKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "occ" => Ok(Self::Occupancy),
            "free" => Ok(Self::Free),
            "vel" => Ok(Self::Velocity),
            other => Err(format!("unknown model `{other}` (expected occ, free or vel)")),
        }
    }
}

/// Values sampled at the cell centers of `grid`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Surface {
    pub fn nx(&self) -> usize {
        self.grid.nx()
    }

    pub fn ny(&self) -> usize {
        self.grid.ny()
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx() + ix]
    }

    pub fn argmax(&self) -> CellIndex {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        self.grid.from_linear(i)
    }

    /// Strict local maxima over the 8-neighborhood (interior cells only).
    pub fn local_maxima(&self, min_value: f64) -> Vec<CellIndex> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut out = Vec::new();
        for iy in 1..ny.saturating_sub(1) {
            for ix in 1..nx.saturating_sub(1) {
                let v = self.at(ix, iy);
                if v <= min_value {
                    continue;
                }
                let mut is_max = true;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if (dx, dy) != (0, 0) && self.at((ix as i64 + dx) as usize, (iy as i64 + dy) as usize) >= v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push(CellIndex::new(ix, iy));
                }
            }
        }
        out
    }
}

fn origin_frame() -> SensorFrame {
    SensorFrame {
        position: Vec2::ZERO,
        heading: 0.0,
        velocity: Vec2::ZERO,
    }
}

/// Occupancy or free-space likelihood at every cell center of `grid`.
pub fn position_surface(model: &SensorModel, kind: SurfaceKind, z: &Detection, grid: &GridSpec) -> Result<Surface> {
    let frame = origin_frame();
    let values = (0..grid.cell_count())
        .into_par_iter()
        .map(|i| {
            let polar = frame.world_to_polar(grid.cell_center(grid.from_linear(i)));
            match kind {
                SurfaceKind::Free => model.free_space_likelihood(polar, z),
                _ => model.occupancy_likelihood(polar, z),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Surface { grid: *grid, values })
}

/// Range-rate likelihood over a velocity plane `(vx, vy)` for a particle at the
/// measured position. `grid` cell centers are read as velocities.
pub fn velocity_surface(model: &SensorModel, z: &Detection, grid: &GridSpec) -> Result<Surface> {
    let frame = origin_frame();
    let position = frame.polar_to_world(z.range, z.azimuth);
    let values = (0..grid.cell_count())
        .into_par_iter()
        .map(|i| model.velocity_likelihood(position, grid.cell_center(grid.from_linear(i)), z, &frame))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Surface { grid: *grid, values })
}

/// Default sampling window: `x ∈ [0, 120]`, `y ∈ [-60, 60]` m for position
/// surfaces and `[-40, 40]²` m/s for velocity surfaces.
pub fn default_window(kind: SurfaceKind, resolution: f64) -> GridSpec {
    match kind {
        SurfaceKind::Velocity => GridSpec::new(resolution, 40.0, 40.0, 40.0, Vec2::new(-40.0, -40.0)),
        _ => GridSpec::new(resolution, 60.0, 60.0, 60.0, Vec2::new(0.0, -60.0)),
    }
}

pub fn surface(model: &SensorModel, kind: SurfaceKind, z: &Detection, grid: &GridSpec) -> Result<Surface> {
    match kind {
        SurfaceKind::Velocity => velocity_surface(model, z, grid),
        _ => position_surface(model, kind, z, grid),
    }
}
