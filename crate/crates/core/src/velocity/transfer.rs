use std::collections::HashMap;

use crate::grid::{CellIndex, GridSpec};
use crate::occupancy::MassTransfer;

use super::particle::Particle;

/// Default share of a cell's occupied evidence carried by its full particle weight.
pub const TRANSFER_GAIN: f64 = 0.5;

/// Occupancy transfers for particles whose occupancy cell changed during
/// prediction. `before` and `after` are the same particles, index-aligned;
/// only particles flagged in `eligible` carry evidence. Each carries
/// `gain · w / Σ w` of its source cell, the sum running over every particle
/// that started in that cell, so the fractions leaving a cell never exceed
/// `gain`.
pub fn emit_mass_transfers(
    before: &[Particle],
    after: &[Particle],
    eligible: &[bool],
    occupancy: &GridSpec,
    gain: f64,
) -> Vec<MassTransfer> {
    debug_assert_eq!(before.len(), after.len());
    let mut moves: Vec<(usize, CellIndex, CellIndex)> = Vec::new();
    for (k, (b, a)) in before.iter().zip(after).enumerate() {
        if !eligible.get(k).copied().unwrap_or(false) {
            continue;
        }
        if let (Some(from), Some(to)) = (occupancy.world_to_cell(b.position), occupancy.world_to_cell(a.position)) {
            if from != to && b.weight > 0.0 {
                moves.push((k, from, to));
            }
        }
    }
    if moves.is_empty() {
        return Vec::new();
    }
    let mut sums: HashMap<CellIndex, f64> = moves.iter().map(|m| (m.1, 0.0)).collect();
    for b in before {
        if let Some(c) = occupancy.world_to_cell(b.position) {
            if let Some(s) = sums.get_mut(&c) {
                *s += b.weight.max(0.0);
            }
        }
    }
    moves
        .into_iter()
        .map(|(k, from, to)| MassTransfer {
            from,
            to,
            fraction: (gain * before[k].weight / sums[&from]).min(1.0),
        })
        .collect()
}
