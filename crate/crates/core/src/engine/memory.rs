//! Bounded per-agent event digests.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub day: usize,
    pub state: usize,
    pub infectious_neighbor_fraction: f64,
    pub realized_transition: bool,
}

/// Ring buffer of the last k per-agent event digests. Append-only within a
/// timestep; the oldest entry falls off past capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentMemory {
    capacity: usize,
    entries: VecDeque<MemoryEntry>,
}

impl AgentMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.iter()
    }

    /// Consecutive most-recent days spent in `state` without a realized
    /// transition; feeds the recency damping factor of the modulation rule.
    pub fn consecutive_unrealized(&self, state: usize) -> usize {
        self.entries
            .iter()
            .rev()
            .take_while(|e| e.state == state && !e.realized_transition)
            .count()
    }
}
