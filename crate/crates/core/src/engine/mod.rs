//! Simulation engine: entity-level realization of cluster-level inference,
//! the rolling-window evaluation protocol, baselines, and ablations.

pub mod ablation;
pub mod baselines;
pub mod memory;
pub mod modulate;
pub mod sampler;
pub mod windows;
pub mod world;

pub use ablation::{
    run_ablation, singleton_assignment, structural_calls_per_step, AblationKind, AblationOutcome,
    AblationRun,
};
pub use baselines::{fit_mf_markov, run_baseline, run_mf_markov, run_rule_abm, BaselineKind, MarkovBaseline};
pub use memory::{AgentMemory, MemoryEntry};
pub use modulate::modulate;
pub use sampler::{realization_stream, sample_transition};
pub use windows::{
    aggregate_windows, build_training_data, calibrator_records, fit_window_neural,
    fused_vs_generator_mae, rolling_window_run, rolling_window_run_with, truth_events_for_window, window_count,
    AgentForecast, WindowAggregate, WindowConfig, WindowRun,
};
pub use world::{
    block_assignment, cluster_state_fractions, cluster_statics, raw_features_over_window,
    run_simulation, whole_population_assignment, EngineConfig, Event, FusionTraceRow,
    NeuralPathway, Pathways, Scenario, SimulationRun, Simulator, StepOutput, SymbolicSource,
    SymbolicVariant, TruthData,
};
