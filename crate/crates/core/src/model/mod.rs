//! Population, state machine, interaction graph, and scenario configuration.
//!
//! Everything here is immutable after construction and safe to share across
//! concurrent workers.

pub mod graph;
pub mod scenario;
pub mod state;

pub use graph::{synthetic_layers, InteractionGraph, Layer};
pub use scenario::{
    initialize_states, minority_counts, validate_profiles, AgentProfile, ExogenousSeries,
    ScenarioConfig,
};
pub use state::{StateSpace, Transition};
