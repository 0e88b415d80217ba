use std::collections::BTreeMap;

use crate::geometry::Vec2;
use crate::grid::{CellIndex, GridSpec};

/// A detection projected into the world frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldDetection {
    /// Index into the scan the detection came from.
    pub index: usize,
    pub sensor_id: u32,
    pub position: Vec2,
}

/// Candidate detection indices per cell (linear index), sorted by sensor then
/// distance to the cell center.
pub type Candidates = BTreeMap<usize, Vec<usize>>;

/// For every cell and every sensor, the `n` detections nearest the cell center
/// within `gate` metres. Ties are broken by detection index. Cells without any
/// gated detection are absent.
pub fn associate_measurements(spec: &GridSpec, detections: &[WorldDetection], n: usize, gate: f64) -> Candidates {
    let mut gated: BTreeMap<usize, Vec<(u32, f64, usize)>> = BTreeMap::new();
    let cs = spec.cell_size;
    let reach = (gate / cs).ceil() as i64 + 1;
    let (nx, ny) = (spec.nx() as i64, spec.ny() as i64);
    for d in detections {
        let (cx, cy) = spec.signed_cell(d.position);
        for iy in (cy - reach).max(0)..=(cy + reach).min(ny - 1) {
            for ix in (cx - reach).max(0)..=(cx + reach).min(nx - 1) {
                let c = CellIndex::new(ix as usize, iy as usize);
                let dist = (spec.cell_center(c) - d.position).norm();
                if dist <= gate {
                    gated
                        .entry(spec.linear(c))
                        .or_default()
                        .push((d.sensor_id, dist, d.index));
                }
            }
        }
    }
    gated
        .into_iter()
        .map(|(cell, mut list)| {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut out = Vec::new();
            let mut current = None;
            let mut taken = 0;
            for (sensor, _, idx) in list {
                if current != Some(sensor) {
                    current = Some(sensor);
                    taken = 0;
                }
                if taken < n {
                    out.push(idx);
                    taken += 1;
                }
            }
            (cell, out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(1.0, 10.0, 10.0, 10.0, Vec2::new(-10.0, -10.0))
    }

    fn wd(index: usize, sensor_id: u32, x: f64, y: f64) -> WorldDetection {
        WorldDetection {
            index,
            sensor_id,
            position: Vec2::new(x, y),
        }
    }

    #[test]
    fn single_detection_candidates_all_gated_cells() {
        let s = spec();
        let c = associate_measurements(&s, &[wd(0, 0, 0.3, 0.2)], 1, 2.0);
        assert!(!c.is_empty());
        for (cell, list) in &c {
            assert_eq!(list, &vec![0]);
            let center = s.cell_center(s.from_linear(*cell));
            assert!((center - Vec2::new(0.3, 0.2)).norm() <= 2.0);
        }
        // every cell within the gate is present
        let expected = (0..s.cell_count())
            .filter(|&i| (s.cell_center(s.from_linear(i)) - Vec2::new(0.3, 0.2)).norm() <= 2.0)
            .count();
        assert_eq!(c.len(), expected);
    }

    #[test]
    fn outside_gate_is_empty() {
        let s = spec();
        let c = associate_measurements(&s, &[wd(0, 0, 5.5, 5.5)], 1, 2.0);
        assert!(!c.contains_key(&s.linear(CellIndex::new(10, 10))));
    }

    #[test]
    fn n_nearest_per_sensor_by_exhaustive_sort() {
        let s = spec();
        let dets = vec![
            wd(0, 0, 0.9, 0.4),
            wd(1, 0, -0.5, 0.5),
            wd(2, 0, 0.5, 0.6),
            wd(3, 0, 1.6, -0.2),
            wd(4, 0, 0.1, -0.9),
        ];
        let cell = s.world_to_cell(Vec2::new(0.5, 0.5)).unwrap();
        let center = s.cell_center(cell);
        let c = associate_measurements(&s, &dets, 2, 5.0);
        let mut brute: Vec<(f64, usize)> = dets.iter().map(|d| ((d.position - center).norm(), d.index)).collect();
        brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = brute.iter().take(2).map(|x| x.1).collect();
        assert_eq!(c[&s.linear(cell)], want);
    }

    #[test]
    fn per_sensor_lists() {
        let s = spec();
        let dets = vec![wd(0, 0, 0.5, 0.5), wd(1, 1, 0.6, 0.5), wd(2, 1, 0.7, 0.5)];
        let cell = s.linear(s.world_to_cell(Vec2::new(0.5, 0.5)).unwrap());
        let c = associate_measurements(&s, &dets, 1, 1.0);
        assert_eq!(c[&cell], vec![0, 1]);
    }
}
