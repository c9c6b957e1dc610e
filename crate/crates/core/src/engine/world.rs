//! Scenario bundle and the synchronous per-timestep simulation loop:
//! cluster-level inference (symbolic and/or neural, fused), entity-level
//! modulation, and competing-risk realization.

use crate::anchor::ClusterAssignment;
use crate::engine::memory::{AgentMemory, MemoryEntry};
use crate::engine::modulate::modulate;
use crate::engine::sampler::{realization_stream, sample_transition};
use crate::error::{Error, Result};
use crate::fusion::{fuse_with_mode, ConfidenceCalibrator, FusedHazard, FusionMode};
use crate::metrics::distribution::SamplerKind;
use crate::model::{AgentProfile, InteractionGraph, ScenarioConfig, StateSpace};
use crate::neural::{assemble_features, FeatureManifest, HazardRegressor, DEGREE_STATS};
use crate::symbolic::{
    assemble_all_contexts, ClusterContext, CostLedger, OracleBehavior, ContextProbe,
    RemoteSymbolic, RuleTable, SymbolicHazardEstimate,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Mutex;

/// Everything a run needs: population, graph, state machine, rule table, and
/// the behavioral probe set used by the clustering pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub graph: InteractionGraph,
    pub profiles: Vec<AgentProfile>,
    pub rules: RuleTable,
    pub probes: Vec<ContextProbe>,
    pub behavior: OracleBehavior,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn space(&self) -> &StateSpace {
        &self.config.state_space
    }

    pub fn validate(&self) -> Result<()> {
        crate::model::validate_profiles(&self.profiles)?;
        self.config.validate(self.n())?;
        for t in self.space().transitions() {
            if self.rules.rule(t.from, t.to).is_none() {
                return Err(Error::MissingRule(self.space().transition_key(t)));
            }
        }
        Ok(())
    }
}

/// Ground-truth daily states (and optional realized regime labels).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthData {
    /// states[day][agent] over the full scenario span.
    pub states: Vec<Vec<usize>>,
    pub regime_labels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolicVariant {
    Full,
    /// Single generalist rule: every transition receives the pooled mean of
    /// the specialized rule outputs.
    NoStateAgent,
    /// No regime summary: exogenous context zeroed before rule evaluation.
    NoMetaAgent,
}

/// Source of cluster-level symbolic hazards.
pub enum SymbolicSource<'a> {
    Oracle {
        rules: &'a RuleTable,
        variant: SymbolicVariant,
    },
    Remote {
        remote: &'a RemoteSymbolic,
        ledger: &'a Mutex<CostLedger>,
    },
}

impl SymbolicSource<'_> {
    pub fn cluster_hazards(
        &self,
        ctx: &ClusterContext,
        space: &StateSpace,
    ) -> Result<SymbolicHazardEstimate> {
        match self {
            SymbolicSource::Oracle { rules, variant } => match variant {
                SymbolicVariant::Full => rules.oracle_hazards(ctx, space),
                SymbolicVariant::NoMetaAgent => {
                    let mut blind = ctx.clone();
                    for s in &mut blind.psi {
                        s.value = 0.0;
                        s.trailing_mean = 0.0;
                    }
                    rules.oracle_hazards(&blind, space)
                }
                SymbolicVariant::NoStateAgent => {
                    let mut est = rules.oracle_hazards(ctx, space)?;
                    let n = est.entries.len() as f64;
                    let mean_h: f64 = est.entries.values().map(|e| e.hazard).sum::<f64>() / n;
                    let mean_u: f64 = est.entries.values().map(|e| e.uncertainty).sum::<f64>() / n;
                    for e in est.entries.values_mut() {
                        e.hazard = mean_h;
                        e.uncertainty = mean_u;
                        e.rationale = "generalist pooled estimate".into();
                    }
                    Ok(est)
                }
            },
            SymbolicSource::Remote { remote, ledger } => remote.remote_hazards(ctx, space, ledger),
        }
    }
}

/// Trained neural pathway plus the static per-cluster inputs it needs.
pub struct NeuralPathway {
    pub regressor: HazardRegressor,
    pub manifest: FeatureManifest,
    pub degree_stats: Vec<[f64; DEGREE_STATS]>,
    pub embedding_means: Vec<Vec<f64>>,
}

/// Mean/std/min/max member degree per cluster, and mean structural-embedding
/// row per cluster.
pub fn cluster_statics(
    graph: &InteractionGraph,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
) -> (Vec<[f64; DEGREE_STATS]>, Vec<Vec<f64>>) {
    let k = assignment.k;
    let d_h = embeddings.ncols();
    let mut degree_stats = vec![[0.0; DEGREE_STATS]; k];
    let mut emb = vec![vec![0.0; d_h]; k];
    for c in 0..k {
        let members = assignment.members(c);
        let degrees: Vec<f64> = members.iter().map(|&i| graph.degree(i) as f64).collect();
        let n = degrees.len() as f64;
        let mean = degrees.iter().sum::<f64>() / n;
        let var = degrees.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        let min = degrees.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = degrees.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        degree_stats[c] = [mean, var.sqrt(), min, max];
        for &i in &members {
            for j in 0..d_h {
                emb[c][j] += embeddings[(i, j)];
            }
        }
        for v in &mut emb[c] {
            *v /= n;
        }
    }
    (degree_stats, emb)
}

/// Per-cluster state fractions for one state vector.
pub fn cluster_state_fractions(
    states: &[usize],
    labels: &[usize],
    k: usize,
    n_states: usize,
) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0usize; n_states]; k];
    let mut sizes = vec![0usize; k];
    for (&s, &c) in states.iter().zip(labels) {
        counts[c][s] += 1;
        sizes[c] += 1;
    }
    counts
        .into_iter()
        .zip(sizes)
        .map(|(row, size)| {
            row.into_iter()
                .map(|v| if size > 0 { v as f64 / size as f64 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Shared causal feature construction: `window_states` covers the temporal
/// window [t - tw + 1, t] ending at the feature day `t`; the last entry is
/// the snapshot day. Exogenous values respect the freeze override and are
/// clamped to the scenario span.
#[allow(clippy::too_many_arguments)]
pub fn raw_features_over_window(
    neural: &NeuralPathway,
    scenario: &Scenario,
    labels: &[usize],
    k: usize,
    cluster: usize,
    window_states: &[Vec<usize>],
    t: usize,
    freeze: Option<usize>,
) -> Result<Vec<f64>> {
    let manifest = &neural.manifest;
    let tw = manifest.temporal_window;
    if window_states.len() != tw {
        return Err(Error::Engine(format!(
            "feature window has {} days, expected {tw}",
            window_states.len()
        )));
    }
    let n_states = scenario.space().n_states();
    let mut channels = vec![Vec::with_capacity(tw); n_states];
    for day_states in window_states {
        let fr = cluster_state_fractions(day_states, labels, k, n_states);
        for s in 0..n_states {
            channels[s].push(fr[cluster][s]);
        }
    }
    let exo_at = |series: &crate::model::ExogenousSeries, d: usize| -> f64 {
        let d = match freeze {
            Some(frozen) => d.min(frozen),
            None => d,
        };
        series.values[d.min(series.values.len() - 1)]
    };
    for series in &scenario.config.exogenous {
        channels.push(((t + 1 - tw)..=t).map(|d| exo_at(series, d)).collect());
    }
    let phi = {
        let fr = cluster_state_fractions(window_states.last().unwrap(), labels, k, n_states);
        fr[cluster].clone()
    };
    let exo_today: Vec<f64> = scenario
        .config
        .exogenous
        .iter()
        .map(|s| exo_at(s, t))
        .collect();
    assemble_features(
        manifest,
        &phi,
        &neural.degree_stats[cluster],
        &exo_today,
        &channels,
        &neural.embedding_means[cluster],
    )
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EngineConfig {
    pub seed: u64,
    /// Distinguishes truth generation from per-window forecast streams.
    pub salt: u64,
    pub sampler: SamplerKind,
    pub memory_capacity: usize,
    pub damping_delta: f64,
    pub fusion_mode: FusionMode,
    /// When set, exogenous context is held at this day for all later steps
    /// (the non-regime-adaptive baseline).
    pub freeze_exogenous_at: Option<usize>,
    /// Tag recorded on fusion trace rows (-1 outside window runs).
    pub window_tag: i64,
}

impl EngineConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            salt: 0,
            sampler: SamplerKind::Exponential,
            memory_capacity: 7,
            damping_delta: 0.0,
            fusion_mode: FusionMode::DefaultReciprocal,
            freeze_exogenous_at: None,
            window_tag: -1,
        }
    }
}

pub struct Pathways<'a> {
    pub symbolic: Option<SymbolicSource<'a>>,
    pub neural: Option<&'a NeuralPathway>,
    pub calibrator: Option<&'a ConfidenceCalibrator>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Event {
    pub day: usize,
    pub agent: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionTraceRow {
    pub window: i64,
    pub day: usize,
    pub cluster: usize,
    pub from: usize,
    pub to: usize,
    pub lambda_sym: f64,
    pub u_sym: f64,
    pub lambda_neu: f64,
    pub u_neu: f64,
    pub c_sym: f64,
    pub c_neu: f64,
    pub lambda_fused: f64,
}

/// Per-step extras consumed by the rolling-window runner.
pub struct StepOutput {
    /// Population-aggregated fused hazard per transition (at-risk weighted),
    /// absent when no agent is at risk for the transition.
    pub population_fused: BTreeMap<(usize, usize), f64>,
    /// Counterfactual entity hazards for requested (agent, origin) pairs.
    pub counterfactual: Vec<Vec<((usize, usize), f64)>>,
}

pub struct Simulator<'a> {
    pub scenario: &'a Scenario,
    pub assignment: &'a ClusterAssignment,
    pub config: EngineConfig,
    pub states: Vec<usize>,
    /// Absolute day index of `states`.
    pub day: usize,
    history: Vec<Vec<usize>>,
    history_offset: usize,
    memories: Vec<AgentMemory>,
    pub events: Vec<Event>,
    pub traces: Vec<FusionTraceRow>,
    /// Entity realizations processed (scales with N).
    pub agent_ops: u64,
    /// Cluster-level inference rounds (scales with M, not N).
    pub cluster_evaluations: u64,
}

impl<'a> Simulator<'a> {
    /// Starts a simulator at absolute day `day` with the given states. Prior
    /// history (needed by neural features) seeds the internal buffer; its
    /// last entry must equal `states` at `day`.
    pub fn new(
        scenario: &'a Scenario,
        assignment: &'a ClusterAssignment,
        states: Vec<usize>,
        day: usize,
        prior_history: Vec<Vec<usize>>,
        config: EngineConfig,
    ) -> Result<Self> {
        let n = scenario.n();
        if states.len() != n || assignment.labels.len() != n {
            return Err(Error::DimensionMismatch("states/assignment length".into()));
        }
        let mut history = prior_history;
        if history.is_empty() {
            history.push(states.clone());
        }
        if *history.last().unwrap() != states {
            return Err(Error::Engine("prior history must end at the current states".into()));
        }
        let history_offset = day + 1 - history.len();
        Ok(Self {
            scenario,
            assignment,
            config,
            states,
            day,
            history,
            history_offset,
            memories: vec![AgentMemory::new(config.memory_capacity); n],
            events: Vec::new(),
            traces: Vec::new(),
            agent_ops: 0,
            cluster_evaluations: 0,
        })
    }

    fn history_at(&self, day: usize) -> Option<&Vec<usize>> {
        day.checked_sub(self.history_offset).and_then(|i| self.history.get(i))
    }

    /// Effective exogenous day: frozen for the non-adaptive baseline, and
    /// clamped to the scenario span.
    fn effective_exo_day(&self, t: usize) -> usize {
        let t = match self.config.freeze_exogenous_at {
            Some(frozen) => t.min(frozen),
            None => t,
        };
        t.min(self.scenario.config.horizon.saturating_sub(1))
    }

    /// Raw neural features for one cluster at absolute day `t`, drawn from
    /// the internal history buffer (strictly causal).
    fn raw_cluster_features(
        &self,
        neural: &NeuralPathway,
        cluster: usize,
        t: usize,
    ) -> Result<Vec<f64>> {
        let tw = neural.manifest.temporal_window;
        if t + 1 < tw {
            return Err(Error::Engine(format!("day {t} has insufficient history for window {tw}")));
        }
        let mut window_states = Vec::with_capacity(tw);
        for d in (t + 1 - tw)..=t {
            window_states.push(
                self.history_at(d)
                    .ok_or_else(|| Error::Engine(format!("no history for day {d}")))?
                    .clone(),
            );
        }
        raw_features_over_window(
            neural,
            self.scenario,
            &self.assignment.labels,
            self.assignment.k,
            cluster,
            &window_states,
            t,
            self.config.freeze_exogenous_at,
        )
    }

    /// Cluster-level fused hazards for the current day.
    fn cluster_hazard_round(
        &mut self,
        pathways: &Pathways,
    ) -> Result<Vec<BTreeMap<(usize, usize), FusedHazard>>> {
        let space = self.scenario.space();
        let t = self.day;
        let exo_day = self.effective_exo_day(t);
        let contexts = assemble_all_contexts(
            &self.assignment.labels,
            self.assignment.k,
            &self.scenario.graph,
            &self.states,
            space.n_states(),
            &self.scenario.config.exogenous,
            exo_day,
        )?;
        let mode = self.config.fusion_mode;
        let needs_symbolic = !matches!(mode, FusionMode::NeuralOnly);
        let needs_neural = !matches!(mode, FusionMode::SymbolicOnly);
        let mut out = Vec::with_capacity(contexts.len());
        for ctx in &contexts {
            self.cluster_evaluations += 1;
            let sym = if needs_symbolic {
                let source = pathways
                    .symbolic
                    .as_ref()
                    .ok_or_else(|| Error::Engine(format!("fusion mode requires a symbolic source (cluster {}, day {t})", ctx.cluster_id)))?;
                Some(source.cluster_hazards(ctx, space).map_err(|e| {
                    Error::Engine(format!("symbolic pathway failed for cluster {} at day {t}: {e}", ctx.cluster_id))
                })?)
            } else {
                None
            };
            let neu: Option<BTreeMap<(usize, usize), (f64, f64)>> = if needs_neural {
                let neural = pathways
                    .neural
                    .ok_or_else(|| Error::Engine(format!("fusion mode requires the neural pathway (cluster {}, day {t})", ctx.cluster_id)))?;
                let raw = self.raw_cluster_features(neural, ctx.cluster_id, t)?;
                let x = neural.manifest.standardize(&raw);
                Some(neural.regressor.predict_hazards(&x)?.into_iter().collect())
            } else {
                None
            };
            let mut fused = BTreeMap::new();
            for tr in space.transitions() {
                let key = (tr.from, tr.to);
                let (ls, us) = match &sym {
                    Some(est) => {
                        let e = est.hazard(tr.from, tr.to).ok_or_else(|| {
                            Error::Engine(format!("missing symbolic hazard for {}", space.transition_key(tr)))
                        })?;
                        (e.hazard, e.uncertainty)
                    }
                    None => (0.0, 0.0),
                };
                let (ln_, un) = match &neu {
                    Some(map) => *map.get(&key).ok_or_else(|| {
                        Error::Engine(format!("missing neural hazard for {}", space.transition_key(tr)))
                    })?,
                    None => (0.0, 0.0),
                };
                let cal_features = crate::fusion::CalibratorFeatures {
                    u_sym: us,
                    u_neu: un,
                    phi_entropy: ctx.phi_entropy(),
                    exo_change: ctx
                        .psi
                        .iter()
                        .map(|s| (s.value - s.trailing_mean).abs())
                        .fold(0.0, f64::max),
                };
                let row = fuse_with_mode(
                    mode,
                    ls,
                    us,
                    ln_,
                    un,
                    pathways.calibrator.map(|c| (c, &cal_features)),
                )?;
                self.traces.push(FusionTraceRow {
                    window: self.config.window_tag,
                    day: t,
                    cluster: ctx.cluster_id,
                    from: tr.from,
                    to: tr.to,
                    lambda_sym: row.lambda_sym,
                    u_sym: row.u_sym,
                    lambda_neu: row.lambda_neu,
                    u_neu: row.u_neu,
                    c_sym: row.c_sym,
                    c_neu: row.c_neu,
                    lambda_fused: row.lambda_fused,
                });
                fused.insert(key, row);
            }
            out.push(fused);
        }
        Ok(out)
    }

    /// One synchronous step: cluster inference, entity modulation, sampling.
    /// `forecast_origins[agent]` (when provided) requests counterfactual
    /// entity hazards for that agent's window-reset origin state, evaluated
    /// against the frozen time-t world.
    pub fn step_full(
        &mut self,
        pathways: &Pathways,
        forecast_origins: Option<&[usize]>,
    ) -> Result<StepOutput> {
        let space = self.scenario.space();
        let n = self.scenario.n();
        let t = self.day;
        let cluster_hazards = self.cluster_hazard_round(pathways)?;
        let lambda_only: Vec<BTreeMap<(usize, usize), f64>> = cluster_hazards
            .iter()
            .map(|m| m.iter().map(|(k, v)| (*k, v.lambda_fused)).collect())
            .collect();

        // Frozen time-t snapshot drives every agent's transition.
        let frozen = self.states.clone();
        let graph = &self.scenario.graph;
        let infectious: Vec<f64> = (0..n)
            .map(|i| graph.neighbor_fraction(&frozen, |s| space.is_infectious(s), i))
            .collect();
        // Mean infectious-neighbor fraction per (cluster, origin state), the
        // modulation denominators; plus per-cluster overall means for
        // counterfactual origins with no remaining at-risk members.
        let k = self.assignment.k;
        let n_states = space.n_states();
        let mut sum = vec![vec![0.0; n_states]; k];
        let mut cnt = vec![vec![0usize; n_states]; k];
        let mut sum_all = vec![0.0; k];
        let mut cnt_all = vec![0usize; k];
        for i in 0..n {
            let c = self.assignment.labels[i];
            sum[c][frozen[i]] += infectious[i];
            cnt[c][frozen[i]] += 1;
            sum_all[c] += infectious[i];
            cnt_all[c] += 1;
        }
        let mean_frac = |c: usize, s: usize| -> f64 {
            if cnt[c][s] > 0 {
                sum[c][s] / cnt[c][s] as f64
            } else if cnt_all[c] > 0 {
                sum_all[c] / cnt_all[c] as f64
            } else {
                0.0
            }
        };

        // At-risk-weighted population aggregation of the fused hazards.
        let mut population_fused = BTreeMap::new();
        for tr in space.transitions() {
            let mut num = 0.0;
            let mut den = 0usize;
            for c in 0..k {
                let at_risk = cnt[c][tr.from];
                if at_risk > 0 {
                    num += at_risk as f64 * lambda_only[c][&(tr.from, tr.to)];
                    den += at_risk;
                }
            }
            if den > 0 {
                population_fused.insert((tr.from, tr.to), num / den as f64);
            }
        }

        let mut counterfactual = Vec::new();
        if let Some(origins) = forecast_origins {
            counterfactual.reserve(n);
            for agent in 0..n {
                let origin = origins[agent];
                if space.is_terminal(origin) {
                    counterfactual.push(Vec::new());
                    continue;
                }
                let c = self.assignment.labels[agent];
                counterfactual.push(modulate(
                    &lambda_only[c],
                    origin,
                    space,
                    &self.scenario.profiles[agent],
                    &self.memories[agent],
                    infectious[agent],
                    mean_frac(c, origin),
                    self.config.damping_delta,
                ));
            }
        }

        // Entity realization over the frozen snapshot; per-agent streams make
        // the iteration order irrelevant.
        let mut next = frozen.clone();
        for agent in 0..n {
            let state = frozen[agent];
            self.agent_ops += 1;
            let mut realized = false;
            if !space.is_terminal(state) {
                let c = self.assignment.labels[agent];
                let hazards = modulate(
                    &lambda_only[c],
                    state,
                    space,
                    &self.scenario.profiles[agent],
                    &self.memories[agent],
                    infectious[agent],
                    mean_frac(c, state),
                    self.config.damping_delta,
                );
                let mut stream =
                    realization_stream(self.config.seed, self.config.salt, agent, t);
                if let Some((from, to)) = sample_transition(&hazards, self.config.sampler, &mut stream)
                {
                    next[agent] = to;
                    realized = true;
                    self.events.push(Event {
                        day: t + 1,
                        agent,
                        from,
                        to,
                    });
                }
            }
            self.memories[agent].push(MemoryEntry {
                day: t,
                state,
                infectious_neighbor_fraction: infectious[agent],
                realized_transition: realized,
            });
        }
        self.states = next.clone();
        self.day = t + 1;
        self.history.push(next);
        Ok(StepOutput {
            population_fused,
            counterfactual,
        })
    }

    pub fn step(&mut self, pathways: &Pathways) -> Result<StepOutput> {
        self.step_full(pathways, None)
    }
}

/// Full simulation run output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRun {
    /// trajectories[day][agent] for day 0..=days.
    pub trajectories: Vec<Vec<usize>>,
    pub events: Vec<Event>,
    pub traces: Vec<FusionTraceRow>,
    pub agent_ops: u64,
    pub cluster_evaluations: u64,
}

/// Runs `days` synchronous steps from the given initial states.
pub fn run_simulation(
    scenario: &Scenario,
    assignment: &ClusterAssignment,
    initial_states: Vec<usize>,
    start_day: usize,
    days: usize,
    pathways: &Pathways,
    config: EngineConfig,
) -> Result<SimulationRun> {
    let mut sim = Simulator::new(scenario, assignment, initial_states, start_day, Vec::new(), config)?;
    let mut trajectories = vec![sim.states.clone()];
    for _ in 0..days {
        sim.step(pathways)?;
        trajectories.push(sim.states.clone());
    }
    Ok(SimulationRun {
        trajectories,
        events: sim.events,
        traces: sim.traces,
        agent_ops: sim.agent_ops,
        cluster_evaluations: sim.cluster_evaluations,
    })
}

/// Single-cluster assignment covering the whole population (used by truth
/// generation, where hazards are population-level by construction).
pub fn whole_population_assignment(n: usize) -> ClusterAssignment {
    ClusterAssignment {
        labels: vec![0; n],
        k: 1,
        anchors: vec![0],
    }
}

/// Equal-size contiguous block clustering (structural stand-in where the
/// behavioral pipeline is not under test).
pub fn block_assignment(n: usize, k: usize) -> ClusterAssignment {
    let labels: Vec<usize> = (0..n).map(|i| (i * k / n).min(k - 1)).collect();
    let mut anchors = Vec::with_capacity(k);
    for c in 0..k {
        anchors.push(labels.iter().position(|&l| l == c).unwrap());
    }
    ClusterAssignment { labels, k, anchors }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::symbolic::rules::{HazardForm, HazardRule, PolicyEffect};
    use std::collections::BTreeMap as Map;

    pub(crate) fn toy_scenario(n: usize, seed: u64) -> Scenario {
        let space = StateSpace::seird();
        let layers = crate::model::synthetic_layers(n, 4.0, seed);
        let graph = InteractionGraph::build(n, layers).unwrap();
        let profiles: Vec<AgentProfile> = (0..n)
            .map(|id| AgentProfile {
                id,
                attributes: Map::from([("risk_aversion".into(), 0.5)]),
                susceptibility: Map::new(),
            })
            .collect();
        let rules = RuleTable {
            rules: vec![
                HazardRule {
                    from: 0,
                    to: 1,
                    form: HazardForm::ContactPressure { base: 1.2 },
                    policy: Some(PolicyEffect {
                        series: "stringency".into(),
                        multiplier_at_one: 0.2,
                    }),
                    uncertainty: 0.1,
                },
                HazardRule {
                    from: 1,
                    to: 2,
                    form: HazardForm::Reciprocal { days: 1.25 },
                    policy: None,
                    uncertainty: 0.02,
                },
                HazardRule {
                    from: 2,
                    to: 3,
                    form: HazardForm::Constant { rate: 0.85 },
                    policy: None,
                    uncertainty: 0.02,
                },
                HazardRule {
                    from: 2,
                    to: 4,
                    form: HazardForm::Constant { rate: 0.02 },
                    policy: None,
                    uncertainty: 0.02,
                },
            ],
        };
        let horizon = 60;
        let stringency: Vec<f64> = (0..horizon).map(|d| if d >= 40 { 1.0 } else { 0.0 }).collect();
        let mut initial = Map::new();
        initial.insert(0, n - 6);
        initial.insert(1, 4);
        initial.insert(2, 2);
        Scenario {
            config: ScenarioConfig {
                domain: "toy".into(),
                state_space: space,
                horizon,
                initial_counts: initial,
                exogenous: vec![crate::model::ExogenousSeries {
                    name: "stringency".into(),
                    values: stringency,
                    units: "fraction".into(),
                }],
                seed,
                generator_hazards: None,
            },
            graph,
            profiles,
            rules,
            probes: vec![],
            behavior: OracleBehavior::default_epi(),
        }
    }

    fn oracle_pathways(scenario: &Scenario) -> Pathways<'_> {
        Pathways {
            symbolic: Some(SymbolicSource::Oracle {
                rules: &scenario.rules,
                variant: SymbolicVariant::Full,
            }),
            neural: None,
            calibrator: None,
        }
    }

    fn initial_states(scenario: &Scenario) -> Vec<usize> {
        crate::model::initialize_states(&scenario.config, scenario.n(), scenario.config.seed).unwrap()
    }

    #[test]
    fn conservation_and_absorption() {
        let scenario = toy_scenario(60, 3);
        let assignment = block_assignment(60, 3);
        let mut config = EngineConfig::new(3);
        config.fusion_mode = FusionMode::SymbolicOnly;
        let run = run_simulation(
            &scenario,
            &assignment,
            initial_states(&scenario),
            0,
            30,
            &oracle_pathways(&scenario),
            config,
        )
        .unwrap();
        let space = scenario.space();
        for day_states in &run.trajectories {
            assert_eq!(day_states.len(), 60);
        }
        for w in run.trajectories.windows(2) {
            for (agent, (&a, &b)) in w[0].iter().zip(&w[1]).enumerate() {
                if space.is_terminal(a) {
                    assert_eq!(a, b, "terminal agent {agent} moved");
                } else if a != b {
                    assert!(space.transition(a, b).is_some(), "illegal move {a} -> {b}");
                }
            }
        }
    }

    #[test]
    fn all_terminal_population_is_inert() {
        let mut scenario = toy_scenario(20, 5);
        scenario.config.initial_counts = Map::from([(3, 10), (4, 10)]);
        let assignment = block_assignment(20, 2);
        let mut config = EngineConfig::new(5);
        config.fusion_mode = FusionMode::SymbolicOnly;
        let states = initial_states(&scenario);
        let run = run_simulation(
            &scenario,
            &assignment,
            states.clone(),
            0,
            10,
            &oracle_pathways(&scenario),
            config,
        )
        .unwrap();
        for day_states in &run.trajectories {
            assert_eq!(day_states, &states);
        }
        assert!(run.events.is_empty());
    }

    #[test]
    fn zero_oracle_hazards_leave_world_unchanged() {
        let mut scenario = toy_scenario(20, 7);
        for rule in &mut scenario.rules.rules {
            rule.form = HazardForm::Constant { rate: 0.0 };
            rule.policy = None;
        }
        let assignment = block_assignment(20, 2);
        let mut config = EngineConfig::new(7);
        config.fusion_mode = FusionMode::SymbolicOnly;
        let states = initial_states(&scenario);
        let run = run_simulation(
            &scenario,
            &assignment,
            states.clone(),
            0,
            10,
            &oracle_pathways(&scenario),
            config,
        )
        .unwrap();
        assert!(run.events.is_empty());
        assert_eq!(run.trajectories.last().unwrap(), &states);
    }

    #[test]
    fn same_seed_reproduces_trajectories_bit_for_bit() {
        let scenario = toy_scenario(50, 11);
        let assignment = block_assignment(50, 4);
        let mut config = EngineConfig::new(11);
        config.fusion_mode = FusionMode::SymbolicOnly;
        let a = run_simulation(&scenario, &assignment, initial_states(&scenario), 0, 20, &oracle_pathways(&scenario), config).unwrap();
        let b = run_simulation(&scenario, &assignment, initial_states(&scenario), 0, 20, &oracle_pathways(&scenario), config).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        let mut config2 = config;
        config2.seed = 12;
        let c = run_simulation(&scenario, &assignment, initial_states(&scenario), 0, 20, &oracle_pathways(&scenario), config2).unwrap();
        assert_ne!(a.trajectories, c.trajectories);
    }

    #[test]
    fn synchrony_transition_depends_only_on_frozen_states() {
        // Expected new-E count equals the sum of per-agent S->E hazards over
        // the frozen snapshot; realized counts match within Monte-Carlo error
        // across replicate salts.
        let scenario = toy_scenario(50, 13);
        let assignment = block_assignment(50, 2);
        let states = initial_states(&scenario);
        let mut expected = 0.0;
        {
            let mut config = EngineConfig::new(13);
            config.fusion_mode = FusionMode::SymbolicOnly;
            let mut sim = Simulator::new(&scenario, &assignment, states.clone(), 0, Vec::new(), config).unwrap();
            let out = sim
                .step_full(&oracle_pathways(&scenario), Some(&states.clone()))
                .unwrap();
            // Per-agent S->E hazards from the counterfactual (origin = state).
            let space = scenario.space();
            for (agent, rows) in out.counterfactual.iter().enumerate() {
                if states[agent] == 0 {
                    for ((f, t), h) in rows {
                        if *f == 0 && *t == 1 {
                            let _ = space;
                            let rate = crate::metrics::distribution::prob_to_rate(*h);
                            // competing-risk: only S->E exists from S
                            expected += 1.0 - (-rate).exp();
                        }
                    }
                }
            }
        }
        let replicates = 200;
        let mut total = 0usize;
        for salt in 0..replicates {
            let mut config = EngineConfig::new(13);
            config.salt = 100 + salt as u64;
            config.fusion_mode = FusionMode::SymbolicOnly;
            let mut sim = Simulator::new(&scenario, &assignment, states.clone(), 0, Vec::new(), config).unwrap();
            sim.step(&oracle_pathways(&scenario)).unwrap();
            total += sim
                .events
                .iter()
                .filter(|e| e.from == 0 && e.to == 1)
                .count();
        }
        let mean = total as f64 / replicates as f64;
        let sd = (expected.max(1.0)).sqrt() / (replicates as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * sd.max(0.2),
            "new-E mean {mean} vs expected {expected}"
        );
    }

    #[test]
    fn work_counters_scale_with_population_and_clusters() {
        for &n in &[30usize, 60] {
            let scenario = toy_scenario(n, 17);
            let assignment = block_assignment(n, 3);
            let mut config = EngineConfig::new(17);
            config.fusion_mode = FusionMode::SymbolicOnly;
            let run = run_simulation(&scenario, &assignment, initial_states(&scenario), 0, 5, &oracle_pathways(&scenario), config).unwrap();
            assert_eq!(run.agent_ops, (n * 5) as u64);
            assert_eq!(run.cluster_evaluations, 15);
        }
    }
}
