//! Entity-level hazard modulation: cluster hazards scaled by per-agent
//! susceptibility modifiers and neighborhood contact pressure.

use crate::engine::memory::AgentMemory;
use crate::model::{AgentProfile, StateSpace};
use std::collections::BTreeMap;

pub const NEIGHBORHOOD_CLAMP: (f64, f64) = (0.1, 10.0);

/// Individualized per-day hazards for every outgoing transition of `state`.
///
/// Contact-driven transitions are scaled by the agent's infectious-neighbor
/// fraction relative to the cluster mean over at-risk members (clamped to
/// [0.1, 10]), with a hard zero when the agent has no infectious neighbors.
/// Non-contact transitions use a neighborhood factor of 1. The memory term
/// applies (1 - delta) per consecutive past day the same transition was
/// sampled but not realized; delta defaults to 0 (memory recorded but inert).
#[allow(clippy::too_many_arguments)]
pub fn modulate(
    cluster_hazards: &BTreeMap<(usize, usize), f64>,
    state: usize,
    space: &StateSpace,
    profile: &AgentProfile,
    memory: &AgentMemory,
    infectious_neighbor_fraction: f64,
    cluster_mean_infectious_fraction: f64,
    damping_delta: f64,
) -> Vec<((usize, usize), f64)> {
    let damping = (1.0 - damping_delta).powi(memory.consecutive_unrealized(state) as i32);
    space
        .outgoing(state)
        .map(|t| {
            let key = (t.from, t.to);
            let base = cluster_hazards.get(&key).copied().unwrap_or(0.0);
            let m_profile = profile.modifier(t.from, t.to);
            let m_nbr = if t.contact_driven {
                if infectious_neighbor_fraction == 0.0 {
                    0.0
                } else if cluster_mean_infectious_fraction > 0.0 {
                    (infectious_neighbor_fraction / cluster_mean_infectious_fraction)
                        .clamp(NEIGHBORHOOD_CLAMP.0, NEIGHBORHOOD_CLAMP.1)
                } else {
                    1.0
                }
            } else {
                1.0
            };
            (key, (base * m_profile * m_nbr * damping).clamp(0.0, 1.0))
        })
        .collect()
}
