//! Grid geometry, cell binning and the scrolling ring-buffer storage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Geometry of one grid layer. The populated window spans
/// `extent_backward + extent_forward` along world x and `2 * extent_lateral`
/// along world y, starting at `origin` (the lower-left corner of cell (0, 0)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub cell_size: f64,
    pub extent_forward: f64,
    pub extent_backward: f64,
    pub extent_lateral: f64,
    #[serde(default)]
    pub origin: Vec2,
}

/// Logical cell coordinates inside a grid window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub ix: usize,
    pub iy: usize,
}

impl CellIndex {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Self { ix, iy }
    }
}

fn cells_in(extent: f64, cell_size: f64) -> Option<usize> {
    let n = extent / cell_size;
    let rounded = n.round();
    if rounded >= 1.0 && (n - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

impl GridSpec {
    pub fn new(cell_size: f64, forward: f64, backward: f64, lateral: f64, origin: Vec2) -> Self {
        Self {
            cell_size,
            extent_forward: forward,
            extent_backward: backward,
            extent_lateral: lateral,
            origin,
        }
    }

    /// Occupancy-layer default: 75 m ahead, 75 m behind, 150 m to each side, 0.5 m cells.
    pub fn default_occupancy() -> Self {
        Self::new(0.5, 75.0, 75.0, 150.0, Vec2::ZERO)
    }

    /// Velocity-layer default: same window with 1 m cells.
    pub fn default_velocity() -> Self {
        Self::new(1.0, 75.0, 75.0, 150.0, Vec2::ZERO)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::invalid("cell_size", "must be finite and > 0"));
        }
        for (name, extent) in [
            ("extent_forward", self.extent_forward),
            ("extent_backward", self.extent_backward),
            ("extent_lateral", self.extent_lateral),
        ] {
            if cells_in(extent, self.cell_size).is_none() {
                return Err(Error::invalid(
                    name,
                    format!("{extent} is not a positive multiple of cell_size {}", self.cell_size),
                ));
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        let forward = cells_in(self.extent_forward, self.cell_size).unwrap_or(0);
        let backward = cells_in(self.extent_backward, self.cell_size).unwrap_or(0);
        forward + backward
    }

    pub fn ny(&self) -> usize {
        2 * cells_in(self.extent_lateral, self.cell_size).unwrap_or(0)
    }

    pub fn cell_count(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Offset from the window origin to the anchor point (the platform position
    /// the window is built around).
    pub fn anchor_offset(&self) -> Vec2 {
        Vec2::new(self.extent_backward, self.extent_lateral)
    }

    /// Copy of this spec with the window placed around `anchor`, snapped so
    /// the origin is an integer multiple of the cell size.
    pub fn centered_on(&self, anchor: Vec2) -> Self {
        let (cx, cy) = self.origin_cell_for(anchor);
        Self {
            origin: Vec2::new(cx as f64 * self.cell_size, cy as f64 * self.cell_size),
            ..*self
        }
    }

    /// Integer cell coordinates of the origin for a window placed around `anchor`.
    pub fn origin_cell_for(&self, anchor: Vec2) -> (i64, i64) {
        let o = anchor - self.anchor_offset();
        (
            (o.x / self.cell_size).floor() as i64,
            (o.y / self.cell_size).floor() as i64,
        )
    }

    /// Bins a world point into the window. Cells are half-open `[low, high)`.
    pub fn world_to_cell(&self, p: Vec2) -> Option<CellIndex> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        if ix >= self.nx() || iy >= self.ny() {
            return None;
        }
        Some(CellIndex::new(ix, iy))
    }

    pub fn cell_center(&self, c: CellIndex) -> Vec2 {
        Vec2::new(
            self.origin.x + (c.ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (c.iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn linear(&self, c: CellIndex) -> usize {
        c.iy * self.nx() + c.ix
    }

    pub fn from_linear(&self, i: usize) -> CellIndex {
        let nx = self.nx();
        CellIndex::new(i % nx, i / nx)
    }

    /// Signed cell coordinates of `p` relative to the origin, without bounds checks.
    pub fn signed_cell(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell_size).floor() as i64,
            ((p.y - self.origin.y) / self.cell_size).floor() as i64,
        )
    }
}

/// Fixed-size cell storage whose window can be shifted by whole cells without
/// moving retained values. Logical index (0, 0) is the window's lower-left cell.
#[derive(Clone, Debug)]
pub struct ScrollGrid<T> {
    spec: GridSpec,
    nx: usize,
    ny: usize,
    off_x: usize,
    off_y: usize,
    origin_cell: (i64, i64),
    fill: T,
    data: Vec<T>,
}

impl<T: Copy> ScrollGrid<T> {
    /// Allocates the window described by `spec` (its origin must be cell aligned).
    pub fn new(spec: GridSpec, fill: T) -> Self {
        let nx = spec.nx();
        let ny = spec.ny();
        let origin_cell = (
            (spec.origin.x / spec.cell_size).round() as i64,
            (spec.origin.y / spec.cell_size).round() as i64,
        );
        let mut g = Self {
            spec,
            nx,
            ny,
            off_x: 0,
            off_y: 0,
            origin_cell,
            fill,
            data: vec![fill; nx * ny],
        };
        g.sync_origin();
        g
    }

    fn sync_origin(&mut self) {
        self.spec.origin = Vec2::new(
            self.origin_cell.0 as f64 * self.spec.cell_size,
            self.origin_cell.1 as f64 * self.spec.cell_size,
        );
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn origin_cell(&self) -> (i64, i64) {
        self.origin_cell
    }

    /// Number of allocated cells; constant over the grid's lifetime.
    pub fn allocated(&self) -> usize {
        self.data.len()
    }

    #[inline]
    fn physical(&self, ix: usize, iy: usize) -> usize {
        let px = (ix + self.off_x) % self.nx;
        let py = (iy + self.off_y) % self.ny;
        py * self.nx + px
    }

    #[inline]
    pub fn get(&self, c: CellIndex) -> T {
        self.data[self.physical(c.ix, c.iy)]
    }

    #[inline]
    pub fn get_mut(&mut self, c: CellIndex) -> &mut T {
        let i = self.physical(c.ix, c.iy);
        &mut self.data[i]
    }

    #[inline]
    pub fn set(&mut self, c: CellIndex, v: T) {
        *self.get_mut(c) = v;
    }

    /// Value of the cell containing world point `p`, if inside the window.
    pub fn at_world(&self, p: Vec2) -> Option<T> {
        self.spec.world_to_cell(p).map(|c| self.get(c))
    }

    /// Applies `f` to every cell value in place (order unspecified).
    pub fn map_inplace(&mut self, f: impl Fn(T) -> T) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Physical storage; only order-independent per-cell operations should use this.
    pub fn raw_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Cell values in logical row-major order (row = y index).
    pub fn to_row_major(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(self.data[self.physical(ix, iy)]);
            }
        }
        out
    }

    /// Moves the window by `(dx, dy)` cells. Values of cells that stay inside
    /// the window keep their world position untouched; cells entering the
    /// window are reset to the fill value.
    pub fn scroll(&mut self, dx: i64, dy: i64) {
        if dx == 0 && dy == 0 {
            return;
        }
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        self.origin_cell.0 += dx;
        self.origin_cell.1 += dy;
        self.sync_origin();
        if dx.abs() >= nx || dy.abs() >= ny {
            self.off_x = 0;
            self.off_y = 0;
            self.data.fill(self.fill);
            return;
        }
        self.off_x = (self.off_x as i64 + dx).rem_euclid(nx) as usize;
        self.off_y = (self.off_y as i64 + dy).rem_euclid(ny) as usize;

        let fresh_cols = if dx > 0 {
            (nx - dx) as usize..self.nx
        } else {
            0..(-dx) as usize
        };
        let fresh_rows = if dy > 0 {
            (ny - dy) as usize..self.ny
        } else {
            0..(-dy) as usize
        };
        let fill = self.fill;
        for iy in 0..self.ny {
            if fresh_rows.contains(&iy) {
                for ix in 0..self.nx {
                    let p = self.physical(ix, iy);
                    self.data[p] = fill;
                }
            } else {
                for ix in fresh_cols.clone() {
                    let p = self.physical(ix, iy);
                    self.data[p] = fill;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GridSpec {
        GridSpec::new(0.5, 5.0, 5.0, 5.0, Vec2::ZERO)
    }

    #[test]
    fn binning_examples() {
        let s = small();
        assert_eq!(s.world_to_cell(Vec2::new(0.0, 0.0)), Some(CellIndex::new(0, 0)));
        assert_eq!(s.world_to_cell(Vec2::new(0.5, 0.0)), Some(CellIndex::new(1, 0)));
        assert_eq!(s.world_to_cell(Vec2::new(-0.1, 0.0)), None);
        assert_eq!(s.world_to_cell(Vec2::new(10.0, 0.0)), None);
        assert_eq!(s.world_to_cell(Vec2::new(9.99, 9.99)), Some(CellIndex::new(19, 19)));
    }

    #[test]
    fn dimensions() {
        let s = GridSpec::default_occupancy();
        assert_eq!(s.nx(), 300);
        assert_eq!(s.ny(), 600);
        assert!(s.validate().is_ok());
        assert!(GridSpec::new(0.3, 1.0, 1.0, 1.0, Vec2::ZERO).validate().is_err());
        assert!(GridSpec::new(0.0, 1.0, 1.0, 1.0, Vec2::ZERO).validate().is_err());
    }

    #[test]
    fn centered_window_is_cell_aligned() {
        let s = small().centered_on(Vec2::new(12.34, -7.77));
        assert_eq!((s.origin.x / 0.5).fract(), 0.0);
        assert_eq!((s.origin.y / 0.5).fract(), 0.0);
        assert!(s.world_to_cell(Vec2::new(12.34, -7.77)).is_some());
    }

    #[test]
    fn scroll_keeps_world_anchored_values() {
        let mut g = ScrollGrid::new(small(), 0u32);
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                g.set(CellIndex::new(ix, iy), (iy * 100 + ix) as u32 + 1);
            }
        }
        g.scroll(3, -2);
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let v = g.get(CellIndex::new(ix, iy));
                let (ox, oy) = (ix as i64 + 3, iy as i64 - 2);
                if (0..20).contains(&ox) && (0..20).contains(&oy) {
                    assert_eq!(v, (oy * 100 + ox) as u32 + 1);
                } else {
                    assert_eq!(v, 0);
                }
            }
        }
        assert_eq!(g.allocated(), 400);
        assert_eq!(g.spec().origin, Vec2::new(1.5, -1.0));
    }

    #[test]
    fn scroll_past_window_resets() {
        let mut g = ScrollGrid::new(small(), 7u8);
        g.set(CellIndex::new(1, 1), 1);
        g.scroll(40, 0);
        assert!(g.to_row_major().iter().all(|&v| v == 7));
    }
}
