//! Static occupancy layer: Binary Bayes log-odds or Dempster-Shafer masses per
//! cell, with temporal decay, measurement fusion and mass transfer.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::SensorFrame;
use crate::grid::{CellIndex, GridSpec, ScrollGrid};
use crate::geometry::Vec2;
use crate::rig::SensorRig;
use crate::sensor_models::{masses_from_likelihoods, occupancy_probability, SensorModel};
use crate::types::{Detection, EgoPose};

/// Default log-odds saturation bound.
pub const L_MAX: f64 = 12.0;
/// Measurement probabilities are clamped into `[P_CLAMP, 1 - P_CLAMP]` before fusion.
pub const P_CLAMP: f64 = 1e-6;

/// Binary Bayes cell: occupancy log-odds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BbCell {
    pub log_odds: f64,
}

impl BbCell {
    pub fn new(log_odds: f64) -> Self {
        Self { log_odds }
    }

    /// Additive log-odds fusion of one measurement probability, saturated at `±l_max`.
    pub fn update(self, p_meas: f64, l_max: f64) -> Result<Self> {
        if !(p_meas > 0.0 && p_meas < 1.0) {
            return Err(Error::DegenerateProbability(p_meas));
        }
        let l = self.log_odds + (p_meas / (1.0 - p_meas)).ln();
        Ok(Self::new(l.clamp(-l_max, l_max)))
    }

    pub fn decay(self, alpha: f64) -> Self {
        Self::new(alpha * self.log_odds)
    }

    pub fn probability(self) -> f64 {
        1.0 / (1.0 + (-self.log_odds).exp())
    }
}

/// Dempster-Shafer cell over the frame {occupied, free}; unknown mass is implicit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DsCell {
    pub occupied: f64,
    pub free: f64,
}

impl DsCell {
    pub fn new(occupied: f64, free: f64) -> Self {
        Self { occupied, free }
    }

    pub fn unknown(self) -> f64 {
        1.0 - self.occupied - self.free
    }

    /// Dempster's rule of combination. Total conflict resets the cell to unknown.
    pub fn combine(self, m_occ: f64, m_free: f64) -> Self {
        let (o1, f1, u1) = (self.occupied, self.free, self.unknown());
        let u2 = 1.0 - m_occ - m_free;
        let conflict = o1 * m_free + f1 * m_occ;
        let norm = 1.0 - conflict;
        if norm <= 1e-15 {
            return Self::default();
        }
        let o = (o1 * m_occ + o1 * u2 + u1 * m_occ) / norm;
        let f = (f1 * m_free + f1 * u2 + u1 * m_free) / norm;
        // guard the simplex against round-off
        let o = o.clamp(0.0, 1.0);
        let f = f.clamp(0.0, 1.0 - o);
        Self::new(o, f)
    }

    pub fn decay(self, alpha: f64) -> Self {
        Self::new(alpha * self.occupied, alpha * self.free)
    }

    pub fn probability(self) -> f64 {
        occupancy_probability(self.occupied, self.free)
    }
}

/// Additive log-odds update of a Binary Bayes cell.
pub fn bb_update(cell: BbCell, p_meas: f64) -> Result<BbCell> {
    cell.update(p_meas, L_MAX)
}

pub fn ds_update(cell: DsCell, m_occ: f64, m_free: f64) -> DsCell {
    cell.combine(m_occ, m_free)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Bb,
    Ds,
}

impl std::str::FromStr for Representation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bb" => Ok(Self::Bb),
            "ds" => Ok(Self::Ds),
            other => Err(format!("unknown representation `{other}` (expected bb or ds)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupancyParams {
    pub representation: Representation,
    pub l_max: f64,
    /// Per-cycle decay factor α ∈ (0, 1].
    pub decay: f64,
    /// Truncation of the likelihood support in standard deviations.
    pub sigma_gate: f64,
    /// Per-detection masses below this are not fused.
    pub min_mass: f64,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        Self {
            representation: Representation::Bb,
            l_max: L_MAX,
            decay: 0.999,
            sigma_gate: 4.0,
            min_mass: 1e-6,
        }
    }
}

impl OccupancyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid("decay", "must lie in (0, 1]"));
        }
        if !(self.l_max > 0.0) {
            return Err(Error::invalid("l_max", "must be > 0"));
        }
        if !(self.sigma_gate > 0.0) {
            return Err(Error::invalid("sigma_gate", "must be > 0"));
        }
        Ok(())
    }
}

/// Move `fraction` of the occupied evidence of `from` into `to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassTransfer {
    pub from: CellIndex,
    pub to: CellIndex,
    pub fraction: f64,
}

#[derive(Clone, Debug)]
pub enum OccupancyGrid {
    Bb(ScrollGrid<BbCell>),
    Ds(ScrollGrid<DsCell>),
}

impl OccupancyGrid {
    pub fn new(spec: GridSpec, representation: Representation) -> Self {
        match representation {
            Representation::Bb => Self::Bb(ScrollGrid::new(spec, BbCell::default())),
            Representation::Ds => Self::Ds(ScrollGrid::new(spec, DsCell::default())),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        match self {
            Self::Bb(g) => g.spec(),
            Self::Ds(g) => g.spec(),
        }
    }

    pub fn probability(&self, c: CellIndex) -> f64 {
        match self {
            Self::Bb(g) => g.get(c).probability(),
            Self::Ds(g) => g.get(c).probability(),
        }
    }

    /// Occupied evidence of one cell: log-odds (BB) or occupied mass (DS).
    pub fn evidence(&self, c: CellIndex) -> f64 {
        match self {
            Self::Bb(g) => g.get(c).log_odds,
            Self::Ds(g) => g.get(c).occupied,
        }
    }

    pub fn allocated(&self) -> usize {
        match self {
            Self::Bb(g) => g.allocated(),
            Self::Ds(g) => g.allocated(),
        }
    }

    pub fn scroll(&mut self, dx: i64, dy: i64) {
        match self {
            Self::Bb(g) => g.scroll(dx, dy),
            Self::Ds(g) => g.scroll(dx, dy),
        }
    }
}

/// Moves occupied evidence between cells. Free mass never moves. Amounts are
/// computed from the grid as it was before the call and capped at each
/// destination's remaining capacity, so the total is conserved exactly up to
/// round-off.
pub fn apply_mass_transfer(grid: &mut OccupancyGrid, transfers: &[MassTransfer], l_max: f64) -> Result<f64> {
    if transfers.is_empty() {
        return Ok(0.0);
    }
    let mut outgoing: HashMap<CellIndex, f64> = HashMap::new();
    for t in transfers {
        if !(t.fraction >= 0.0 && t.fraction <= 1.0) {
            return Err(Error::invalid("fraction", format!("{} not in [0, 1]", t.fraction)));
        }
        *outgoing.entry(t.from).or_default() += t.fraction;
    }
    if let Some((c, sum)) = outgoing.iter().find(|(_, &s)| s > 1.0 + 1e-12) {
        return Err(Error::TransferOverflow {
            ix: c.ix,
            iy: c.iy,
            sum: *sum,
        });
    }
    let desired: Vec<f64> = transfers
        .iter()
        .map(|t| t.fraction * grid.evidence(t.from).max(0.0))
        .collect();
    let mut moved = 0.0;
    match grid {
        OccupancyGrid::Bb(g) => {
            for (t, want) in transfers.iter().zip(desired) {
                let src = g.get(t.from).log_odds;
                let dst = g.get(t.to).log_odds;
                let amount = want.min(src.max(0.0)).min((l_max - dst).max(0.0));
                if amount <= 0.0 || t.from == t.to {
                    continue;
                }
                g.get_mut(t.from).log_odds = src - amount;
                g.get_mut(t.to).log_odds = dst + amount;
                moved += amount;
            }
        }
        OccupancyGrid::Ds(g) => {
            for (t, want) in transfers.iter().zip(desired) {
                let src = g.get(t.from);
                let dst = g.get(t.to);
                let amount = want.min(src.occupied).min(dst.unknown().max(0.0));
                if amount <= 0.0 || t.from == t.to {
                    continue;
                }
                g.get_mut(t.from).occupied = src.occupied - amount;
                g.get_mut(t.to).occupied = dst.occupied + amount;
                moved += amount;
            }
        }
    }
    Ok(moved)
}

/// Per-detection evidence for one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEvidence {
    pub cell: CellIndex,
    pub m_occ: f64,
    pub m_free: f64,
}

/// Visits (deduplicated) the grid cells covered by the polar patch
/// `[r0, r1] × [a0, a1]` of a sensor, sampling at half-cell spacing. The patch
/// is cut into range bands of doubling radius so the angular sampling density
/// follows the arc length.
fn rasterize_polar_patch(
    frame: &SensorFrame,
    spec: &GridSpec,
    (r0, r1): (f64, f64),
    (a0, a1): (f64, f64),
    stamps: &mut Stamps,
    visit: &mut impl FnMut(CellIndex),
) {
    let step = 0.5 * spec.cell_size;
    let r0 = r0.max(0.0);
    if r1 < r0 {
        return;
    }
    let mut hi = r1;
    loop {
        let lo = (0.5 * hi).max(r0);
        let lo = if lo - r0 < 4.0 * step { r0 } else { lo };
        let n_a = ((a1 - a0) * hi / step).ceil() as usize + 1;
        let n_r = ((hi - lo) / step).ceil() as usize + 1;
        for ia in 0..n_a {
            let a = if n_a > 1 { a0 + (a1 - a0) * ia as f64 / (n_a - 1) as f64 } else { 0.5 * (a0 + a1) };
            let dir = Vec2::from_polar(1.0, frame.heading + a);
            for ir in 0..n_r {
                let r = (lo + ir as f64 * step).min(hi);
                if let Some(c) = spec.world_to_cell(frame.position + dir * r) {
                    if stamps.mark(spec.linear(c)) {
                        visit(c);
                    }
                }
            }
        }
        if lo <= r0 {
            break;
        }
        hi = lo;
    }
}

/// Generation-stamped visited set over linear cell indices.
struct Stamps {
    generation: u32,
    marks: Vec<u32>,
}

impl Stamps {
    fn new(n: usize) -> Self {
        Self {
            generation: 0,
            marks: vec![0; n],
        }
    }

    fn next(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.marks.fill(0);
            self.generation = 1;
        }
    }

    fn mark(&mut self, i: usize) -> bool {
        if self.marks[i] == self.generation {
            false
        } else {
            self.marks[i] = self.generation;
            true
        }
    }
}

/// Evidence one detection contributes to the grid, over the truncated support
/// of its occupied and free-space mixtures.
fn detection_evidence(
    z: &Detection,
    frame: &SensorFrame,
    model: &SensorModel,
    spec: &GridSpec,
    params: &OccupancyParams,
    stamps: &mut Stamps,
) -> Vec<CellEvidence> {
    stamps.next();
    let p = model.params();
    let w = model.weights();
    let n = params.sigma_gate;
    let mut cells = Vec::new();
    let mut collect = |c: CellIndex| cells.push(c);
    for i in w.position_indices() {
        let r_h = z.range - i as f64 * p.delta_range;
        if r_h + n * z.sigma_range < 0.0 {
            continue;
        }
        for j in w.position_indices() {
            let a_h = z.azimuth - j as f64 * p.delta_azimuth;
            rasterize_polar_patch(
                frame,
                spec,
                (r_h - n * z.sigma_range, r_h + n * z.sigma_range),
                (a_h - n * z.sigma_azimuth, a_h + n * z.sigma_azimuth),
                stamps,
                &mut collect,
            );
        }
    }
    for j in w.position_indices() {
        let a_h = z.azimuth - j as f64 * p.delta_azimuth;
        rasterize_polar_patch(
            frame,
            spec,
            (0.0, z.range),
            (a_h - n * z.sigma_azimuth, a_h + n * z.sigma_azimuth),
            stamps,
            &mut collect,
        );
    }
    let mut out = Vec::with_capacity(cells.len());
    for c in cells {
        let polar = frame.world_to_polar(spec.cell_center(c));
        let lo = model.occupancy_truncated(polar, z, n);
        let lf = model.free_truncated(polar, z, n);
        let (m_occ, m_free) = masses_from_likelihoods(lo, lf);
        if m_occ >= params.min_mass || m_free >= params.min_mass {
            out.push(CellEvidence { cell: c, m_occ, m_free });
        }
    }
    out
}

/// The occupancy layer: a scrolling grid of BB or DS cells.
#[derive(Clone, Debug)]
pub struct OccupancyLayer {
    params: OccupancyParams,
    grid: OccupancyGrid,
}

impl OccupancyLayer {
    pub fn new(spec: GridSpec, params: OccupancyParams) -> Result<Self> {
        spec.validate()?;
        params.validate()?;
        Ok(Self {
            grid: OccupancyGrid::new(spec, params.representation),
            params,
        })
    }

    pub fn params(&self) -> &OccupancyParams {
        &self.params
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut OccupancyGrid {
        &mut self.grid
    }

    pub fn spec(&self) -> &GridSpec {
        self.grid.spec()
    }

    pub fn probability(&self, c: CellIndex) -> f64 {
        self.grid.probability(c)
    }

    /// Temporal decay of every cell toward the unknown state.
    pub fn predict(&mut self) {
        let alpha = self.params.decay;
        if alpha == 1.0 {
            return;
        }
        match &mut self.grid {
            OccupancyGrid::Bb(g) => g.raw_mut().par_iter_mut().for_each(|c| *c = c.decay(alpha)),
            OccupancyGrid::Ds(g) => g.raw_mut().par_iter_mut().for_each(|c| *c = c.decay(alpha)),
        }
    }

    pub fn apply_transfers(&mut self, transfers: &[MassTransfer]) -> Result<f64> {
        apply_mass_transfer(&mut self.grid, transfers, self.params.l_max)
    }

    /// Per-detection cell evidence for a scan, in detection order.
    pub fn scan_evidence(&self, scan: &[Detection], rig: &SensorRig, pose: &EgoPose) -> Result<Vec<Vec<CellEvidence>>> {
        let spec = *self.spec();
        let jobs: Vec<(&Detection, SensorFrame, &SensorModel)> = scan
            .iter()
            .map(|z| {
                let sensor = rig.get(z.sensor_id)?;
                Ok((z, SensorFrame::new(&sensor.mount, pose), &sensor.model))
            })
            .collect::<Result<_>>()?;
        let params = self.params;
        let n = spec.cell_count();
        Ok(jobs
            .par_iter()
            .map_init(
                || Stamps::new(n),
                |stamps, (z, frame, model)| detection_evidence(z, frame, model, &spec, &params, stamps),
            )
            .collect())
    }

    /// Fuses a scan into the grid. Returns the number of cell updates.
    pub fn update(&mut self, scan: &[Detection], rig: &SensorRig, pose: &EgoPose) -> Result<usize> {
        let evidence = self.scan_evidence(scan, rig, pose)?;
        let mut updates = 0;
        let l_max = self.params.l_max;
        match &mut self.grid {
            OccupancyGrid::Bb(g) => {
                for e in evidence.iter().flatten() {
                    let p = occupancy_probability(e.m_occ, e.m_free).clamp(P_CLAMP, 1.0 - P_CLAMP);
                    let cell = g.get_mut(e.cell);
                    *cell = cell.update(p, l_max)?;
                    updates += 1;
                }
            }
            OccupancyGrid::Ds(g) => {
                for e in evidence.iter().flatten() {
                    let cell = g.get_mut(e.cell);
                    *cell = cell.combine(e.m_occ, e.m_free);
                    updates += 1;
                }
            }
        }
        Ok(updates)
    }

    pub fn scroll(&mut self, dx: i64, dy: i64) {
        self.grid.scroll(dx, dy);
    }

    /// Cell occupancy probabilities in row-major order.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.grid {
            OccupancyGrid::Bb(g) => g.to_row_major().into_iter().map(BbCell::probability).collect(),
            OccupancyGrid::Ds(g) => g.to_row_major().into_iter().map(DsCell::probability).collect(),
        }
    }

    /// `(occupied, free)` masses in row-major order; `None` for a BB grid.
    pub fn ds_masses(&self) -> Option<Vec<(f64, f64)>> {
        match &self.grid {
            OccupancyGrid::Bb(_) => None,
            OccupancyGrid::Ds(g) => Some(g.to_row_major().into_iter().map(|c| (c.occupied, c.free)).collect()),
        }
    }

    /// Raw per-cell state words (log-odds, or occupied then free mass) in
    /// row-major order, for exact comparisons and hashing.
    pub fn state_bits(&self) -> Vec<u64> {
        match &self.grid {
            OccupancyGrid::Bb(g) => g.to_row_major().into_iter().map(|c| c.log_odds.to_bits()).collect(),
            OccupancyGrid::Ds(g) => g
                .to_row_major()
                .into_iter()
                .flat_map(|c| [c.occupied.to_bits(), c.free.to_bits()])
                .collect(),
        }
    }

    /// Sum of occupied evidence over the grid (log-odds for BB, occupied mass for DS).
    pub fn occupied_evidence(&self) -> f64 {
        match &self.grid {
            OccupancyGrid::Bb(g) => g.to_row_major().iter().map(|c| c.log_odds).sum(),
            OccupancyGrid::Ds(g) => g.to_row_major().iter().map(|c| c.occupied).sum(),
        }
    }
}
