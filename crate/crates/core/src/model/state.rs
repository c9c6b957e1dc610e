//! Latent state machine: states, admissible transitions, terminal states.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One admissible transition `from -> to`. Contact-driven transitions are
/// modulated by neighborhood pressure during entity realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub contact_driven: bool,
}

/// The latent state machine shared by every module: an ordered state set, the
/// admissible transition set, and the terminal (absorbing) states. States that
/// exert contact pressure on contact-driven transitions (e.g. `I` in SEIRD,
/// `Interested` in attention diffusion) are flagged as infectious.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpace {
    states: Vec<String>,
    transitions: Vec<Transition>,
    terminal: BTreeSet<usize>,
    infectious: BTreeSet<usize>,
}

impl StateSpace {
    pub fn new(
        states: Vec<String>,
        transitions: Vec<Transition>,
        terminal: BTreeSet<usize>,
        infectious: BTreeSet<usize>,
    ) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidStateSpace(format!(
                "need at least 2 states, got {}",
                states.len()
            )));
        }
        if transitions.is_empty() {
            return Err(Error::InvalidStateSpace("need at least 1 transition".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &transitions {
            if t.from >= states.len() || t.to >= states.len() {
                return Err(Error::InvalidStateSpace(format!(
                    "transition ({}, {}) out of range",
                    t.from, t.to
                )));
            }
            if t.from == t.to {
                return Err(Error::InvalidStateSpace(format!(
                    "self-transition on state {}",
                    states[t.from]
                )));
            }
            if !seen.insert((t.from, t.to)) {
                return Err(Error::InvalidStateSpace(format!(
                    "duplicate transition {} -> {}",
                    states[t.from], states[t.to]
                )));
            }
        }
        for &s in &terminal {
            if s >= states.len() {
                return Err(Error::InvalidStateSpace(format!("terminal state {s} out of range")));
            }
            if transitions.iter().any(|t| t.from == s) {
                return Err(Error::InvalidStateSpace(format!(
                    "terminal state {} has outgoing transitions",
                    states[s]
                )));
            }
        }
        for &s in &infectious {
            if s >= states.len() {
                return Err(Error::InvalidStateSpace(format!(
                    "infectious state {s} out of range"
                )));
            }
        }
        Ok(Self {
            states,
            transitions,
            terminal,
            infectious,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, idx: usize) -> &str {
        &self.states[idx]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, from: usize, to: usize) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.from == from && t.to == to)
    }

    /// Outgoing transitions of `state`, in declaration order.
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == state)
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal.contains(&state)
    }

    pub fn terminal_states(&self) -> &BTreeSet<usize> {
        &self.terminal
    }

    pub fn is_infectious(&self, state: usize) -> bool {
        self.infectious.contains(&state)
    }

    pub fn infectious_states(&self) -> &BTreeSet<usize> {
        &self.infectious
    }

    /// States that have at least one outgoing transition. One StateAgent is
    /// assigned per origin state under the remote backend.
    pub fn origin_states(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&s| self.transitions.iter().any(|t| t.from == s))
            .collect()
    }

    /// Human-readable transition key of the form "S->E".
    pub fn transition_key(&self, t: &Transition) -> String {
        format!("{}->{}", self.states[t.from], self.states[t.to])
    }

    /// Builds the canonical SEIRD machine used by the epidemiology templates.
    pub fn seird() -> Self {
        let states = ["S", "E", "I", "R", "D"].map(String::from).to_vec();
        let transitions = vec![
            Transition { from: 0, to: 1, contact_driven: true },
            Transition { from: 1, to: 2, contact_driven: false },
            Transition { from: 2, to: 3, contact_driven: false },
            Transition { from: 2, to: 4, contact_driven: false },
        ];
        Self::new(states, transitions, BTreeSet::from([3, 4]), BTreeSet::from([2]))
            .expect("SEIRD space is well-formed")
    }
}
