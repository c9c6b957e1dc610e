//! Architecture ablations: pathway isolation, naive fusion, no clustering,
//! and symbolic-team degradation.

use crate::anchor::ClusterAssignment;
use crate::engine::windows::{aggregate_windows, rolling_window_run, WindowAggregate, WindowConfig, WindowRun};
use crate::engine::world::{Scenario, SymbolicVariant, TruthData};
use crate::error::Result;
use crate::fusion::FusionMode;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    Full,
    NeuralOnly,
    SymbolicOnly,
    NaiveFusion,
    FlatAgents,
    NoStateAgent,
    NoMetaAgent,
}

impl AblationKind {
    pub fn all() -> [AblationKind; 7] {
        [
            AblationKind::Full,
            AblationKind::NeuralOnly,
            AblationKind::SymbolicOnly,
            AblationKind::NaiveFusion,
            AblationKind::FlatAgents,
            AblationKind::NoStateAgent,
            AblationKind::NoMetaAgent,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            AblationKind::Full => "full",
            AblationKind::NeuralOnly => "neural_only",
            AblationKind::SymbolicOnly => "symbolic_only",
            AblationKind::NaiveFusion => "naive_fusion",
            AblationKind::FlatAgents => "flat_agents",
            AblationKind::NoStateAgent => "no_state_agent",
            AblationKind::NoMetaAgent => "no_meta_agent",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|k| k.name() == name)
    }

    fn fusion_mode(&self) -> FusionMode {
        match self {
            AblationKind::NeuralOnly => FusionMode::NeuralOnly,
            AblationKind::SymbolicOnly => FusionMode::SymbolicOnly,
            AblationKind::NaiveFusion => FusionMode::NaiveMean,
            // The complete architecture fuses through the learned calibrator.
            AblationKind::Full => FusionMode::LearnedCalibrator,
            _ => FusionMode::DefaultReciprocal,
        }
    }

    fn symbolic_variant(&self) -> SymbolicVariant {
        match self {
            AblationKind::NoStateAgent => SymbolicVariant::NoStateAgent,
            AblationKind::NoMetaAgent => SymbolicVariant::NoMetaAgent,
            _ => SymbolicVariant::Full,
        }
    }
}

/// Every agent its own cluster.
pub fn singleton_assignment(n: usize) -> ClusterAssignment {
    ClusterAssignment {
        labels: (0..n).collect(),
        k: n,
        anchors: (0..n).collect(),
    }
}

/// Structural cluster-level call count per timestep under the remote-backend
/// accounting model (MetaAgent + one StateAgent per origin state).
pub fn structural_calls_per_step(kind: AblationKind, n: usize, clusters: usize, origin_states: usize) -> usize {
    match kind {
        AblationKind::FlatAgents => n * (1 + origin_states),
        AblationKind::NoStateAgent => clusters * 2,
        AblationKind::NoMetaAgent => clusters * origin_states,
        _ => clusters * (1 + origin_states),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationOutcome {
    pub kind: AblationKind,
    pub aggregate: WindowAggregate,
    pub wall_secs_per_step: f64,
    pub structural_calls_per_step: usize,
}

pub struct AblationRun {
    pub outcome: AblationOutcome,
    pub windows: Vec<WindowRun>,
}

/// Runs one ablation configuration through the rolling-window protocol and
/// reports metrics, per-step latency, and the structural call count.
pub fn run_ablation(
    kind: AblationKind,
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
    config: &WindowConfig,
    seed: u64,
) -> Result<AblationRun> {
    let flat;
    let effective_assignment = if kind == AblationKind::FlatAgents {
        flat = singleton_assignment(scenario.n());
        &flat
    } else {
        assignment
    };
    let mut effective_config = config.clone();
    if kind == AblationKind::Full {
        effective_config.train_calibrator = true;
    }
    let start = Instant::now();
    let windows = rolling_window_run(
        scenario,
        truth,
        effective_assignment,
        embeddings,
        kind.symbolic_variant(),
        kind.fusion_mode(),
        &effective_config,
        seed,
    )?;
    let elapsed = start.elapsed().as_secs_f64();
    let steps = (windows.len() * config.horizon).max(1);
    let aggregate = aggregate_windows(&windows);
    let origin_states = scenario.space().origin_states().len();
    Ok(AblationRun {
        outcome: AblationOutcome {
            kind,
            aggregate,
            wall_secs_per_step: elapsed / steps as f64,
            structural_calls_per_step: structural_calls_per_step(
                kind,
                scenario.n(),
                effective_assignment.k,
                origin_states,
            ),
        },
        windows,
    })
}
