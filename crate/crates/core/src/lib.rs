//! Cluster-level agent-based simulation engine.
//!
//! The engine performs state-transition inference at the level of
//! behaviorally coherent agent clusters: a symbolic pathway (rule oracle or
//! remote LLM team) and a learned neural pathway each estimate per-transition
//! hazards with uncertainty, an epistemic fusion rule combines them, and
//! individual agents stochastically realize transitions through competing-risk
//! sampling. Evaluation follows a strictly causal rolling-window protocol with
//! event-time metrics and calibration diagnostics.

pub mod anchor;
pub mod engine;
pub mod error;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod rng;
pub mod symbolic;

pub use error::{Error, Result};
