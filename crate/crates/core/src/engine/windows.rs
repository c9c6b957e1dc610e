//! Strictly causal rolling-window protocol: an L-day lookback fits the
//! neural regressor (and optionally the confidence calibrator), states reset
//! to the truth at the last lookback day, and an H-day forecast is simulated
//! and scored. Windows advance by H days.

use crate::anchor::ClusterAssignment;
use crate::engine::world::{
    cluster_statics, raw_features_over_window, EngineConfig, Event,
    FusionTraceRow, NeuralPathway, Pathways, Scenario, Simulator, SymbolicSource, SymbolicVariant,
    TruthData,
};
use crate::error::{Error, Result};
use crate::fusion::{
    train_calibrator, CalibratorFeatures, CalibratorHyper, CalibratorRecord, ConfidenceCalibrator,
    FusionMode,
};
use crate::metrics::{
    score_batch, EventOutcome, EventRecord, JointEventDistribution, MetricsSummary,
};
use crate::neural::{train_regressor, FeatureManifest, RegressorHyper, TrainingInstance};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub temporal_window: usize,
    /// Shrinkage strength toward the window-pooled rate in the empirical
    /// hazard targets.
    pub target_shrinkage: f64,
    /// Reset forecasts from truth states (default) or free-run from the
    /// previous window's simulated states.
    pub free_running: bool,
    /// Hold exogenous context at each window's reset day during the forecast
    /// (the non-regime-adaptive rule baseline).
    pub freeze_exogenous: bool,
    pub train_calibrator: bool,
    pub regressor: RegressorHyper,
    pub calibrator: CalibratorHyper,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            lookback: 28,
            horizon: 7,
            temporal_window: 14,
            target_shrinkage: 1.0,
            free_running: false,
            freeze_exogenous: false,
            train_calibrator: false,
            regressor: RegressorHyper::default(),
            calibrator: CalibratorHyper::default(),
        }
    }
}

/// Number of complete windows for a truth span of `total_days`.
pub fn window_count(total_days: usize, lookback: usize, horizon: usize) -> usize {
    if total_days < lookback + horizon {
        0
    } else {
        (total_days - lookback) / horizon
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentForecast {
    pub agent: usize,
    pub origin: usize,
    pub distribution: JointEventDistribution,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowRun {
    pub index: usize,
    pub start: usize,
    pub reset_day: usize,
    /// Non-terminal-origin agents only, aligned with `truth_events`.
    pub forecasts: Vec<AgentForecast>,
    pub truth_events: Vec<EventRecord>,
    pub metrics: MetricsSummary,
    /// Per forecast-day population-aggregated fused hazards.
    pub population_fused: Vec<BTreeMap<(usize, usize), f64>>,
    pub traces: Vec<FusionTraceRow>,
    /// Simulated states for days reset_day..=reset_day+H.
    pub simulated: Vec<Vec<usize>>,
    pub events: Vec<Event>,
    pub regressor_parameters: usize,
}

/// Empirical per-day transition-rate targets over the lookback, shrunk
/// toward the window-pooled rate: (events + k * pooled) / (at_risk + k).
pub struct WindowTrainingData {
    pub instances: Vec<TrainingInstance>,
    pub raw_features: Vec<Vec<f64>>,
    pub event_counts: Vec<f64>,
    pub transitions: Vec<(usize, usize)>,
    /// Per-instance (cluster, day) bookkeeping for calibrator training.
    pub keys: Vec<(usize, usize)>,
    /// Per-instance raw realized rates (events / at_risk), NaN when not at
    /// risk.
    pub realized: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
pub fn build_training_data(
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    neural: &NeuralPathway,
    window_start: usize,
    config: &WindowConfig,
) -> Result<WindowTrainingData> {
    let space = scenario.space();
    let labels = &assignment.labels;
    let k = assignment.k;
    let tw = config.temporal_window;
    let transitions: Vec<(usize, usize)> =
        space.transitions().iter().map(|t| (t.from, t.to)).collect();
    let first_day = window_start.max(tw.saturating_sub(1));
    let last_day = window_start + config.lookback - 2; // target needs day+1 inside the lookback
    if first_day > last_day {
        return Err(Error::Engine(format!(
            "window at {window_start} leaves no trainable days (temporal window {tw}, lookback {})",
            config.lookback
        )));
    }

    // First pass: per-instance at-risk and event counts + pooled totals.
    let mut pooled_events = vec![0.0; transitions.len()];
    let mut pooled_at_risk = vec![0.0; transitions.len()];
    struct RawInstance {
        cluster: usize,
        day: usize,
        at_risk: Vec<f64>,
        events: Vec<f64>,
    }
    let mut raws = Vec::new();
    for day in first_day..=last_day {
        let today = &truth.states[day];
        let tomorrow = &truth.states[day + 1];
        for cluster in 0..k {
            let mut at_risk = vec![0.0; transitions.len()];
            let mut events = vec![0.0; transitions.len()];
            for agent in 0..scenario.n() {
                if labels[agent] != cluster {
                    continue;
                }
                for (idx, &(from, to)) in transitions.iter().enumerate() {
                    if today[agent] == from {
                        at_risk[idx] += 1.0;
                        if tomorrow[agent] == to {
                            events[idx] += 1.0;
                        }
                    }
                }
            }
            for idx in 0..transitions.len() {
                pooled_events[idx] += events[idx];
                pooled_at_risk[idx] += at_risk[idx];
            }
            raws.push(RawInstance {
                cluster,
                day,
                at_risk,
                events,
            });
        }
    }
    let pooled_rate: Vec<f64> = pooled_events
        .iter()
        .zip(&pooled_at_risk)
        .map(|(e, a)| (e + 0.5) / (a + 1.0))
        .collect();

    // Second pass: features + shrunk targets.
    let mut instances = Vec::with_capacity(raws.len());
    let mut raw_features = Vec::with_capacity(raws.len());
    let mut keys = Vec::with_capacity(raws.len());
    let mut realized = Vec::with_capacity(raws.len());
    let kappa = config.target_shrinkage;
    for raw in &raws {
        let window_states: Vec<Vec<usize>> = ((raw.day + 1 - tw)..=raw.day)
            .map(|d| truth.states[d].clone())
            .collect();
        let features = raw_features_over_window(
            neural,
            scenario,
            labels,
            k,
            raw.cluster,
            &window_states,
            raw.day,
            None,
        )?;
        let mut targets = vec![0.0; transitions.len()];
        let mut mask = vec![false; transitions.len()];
        let mut rates = vec![f64::NAN; transitions.len()];
        for idx in 0..transitions.len() {
            if raw.at_risk[idx] > 0.0 {
                mask[idx] = true;
                targets[idx] =
                    (raw.events[idx] + kappa * pooled_rate[idx]) / (raw.at_risk[idx] + kappa);
                rates[idx] = raw.events[idx] / raw.at_risk[idx];
            }
        }
        raw_features.push(features.clone());
        instances.push(TrainingInstance {
            features,
            targets,
            mask,
        });
        keys.push((raw.cluster, raw.day));
        realized.push(rates);
    }
    Ok(WindowTrainingData {
        instances,
        raw_features,
        event_counts: pooled_events,
        transitions,
        keys,
        realized,
    })
}

/// Fits the per-window neural pathway: manifest standardization on the
/// lookback instances, then the ensemble regressor.
#[allow(clippy::too_many_arguments)]
pub fn fit_window_neural(
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
    window_start: usize,
    config: &WindowConfig,
    seed: u64,
) -> Result<(NeuralPathway, WindowTrainingData)> {
    let space = scenario.space();
    let (degree_stats, embedding_means) = cluster_statics(&scenario.graph, assignment, embeddings);
    let manifest = FeatureManifest::new(
        space.states().to_vec(),
        scenario.config.exogenous.iter().map(|s| s.name.clone()).collect(),
        config.temporal_window,
        embeddings.ncols(),
    );
    // Regressor placeholder until training data exists.
    let mut pathway = NeuralPathway {
        regressor: crate::neural::HazardRegressor {
            members: vec![],
            transitions: vec![],
            class_weights: vec![],
            seeds: vec![],
            training_loss: vec![],
        },
        manifest,
        degree_stats,
        embedding_means,
    };
    let mut data = build_training_data(scenario, truth, assignment, &pathway, window_start, config)?;
    pathway.manifest.fit_standardization(&data.raw_features)?;
    for (inst, raw) in data.instances.iter_mut().zip(&data.raw_features) {
        inst.features = pathway.manifest.standardize(raw);
    }
    pathway.regressor = train_regressor(
        &data.instances,
        data.transitions.clone(),
        &data.event_counts,
        &config.regressor,
        seed,
    )?;
    Ok((pathway, data))
}

/// Out-of-sample calibrator records: for each truth day in `days`, evaluate
/// the (already fitted) pathways on the truth state and compare against the
/// realized next-day cluster rates. Called on a window's forecast span after
/// its models are fitted, so later windows train their calibrators on
/// genuinely held-out comparisons ("past windows").
pub fn calibrator_records(
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    neural: &NeuralPathway,
    symbolic: &SymbolicSource,
    days: std::ops::Range<usize>,
) -> Result<Vec<CalibratorRecord>> {
    let space = scenario.space();
    let n_states = space.n_states();
    let labels = &assignment.labels;
    let k = assignment.k;
    let tw = neural.manifest.temporal_window;
    let transitions: Vec<(usize, usize)> =
        space.transitions().iter().map(|t| (t.from, t.to)).collect();
    let mut records = Vec::new();
    for day in days {
        if day + 1 >= truth.states.len() || day + 1 < tw {
            continue;
        }
        let contexts = crate::symbolic::assemble_all_contexts(
            labels,
            k,
            &scenario.graph,
            &truth.states[day],
            n_states,
            &scenario.config.exogenous,
            day.min(scenario.config.horizon - 1),
        )?;
        let window_states: Vec<Vec<usize>> = ((day + 1 - tw)..=day)
            .map(|d| truth.states[d].clone())
            .collect();
        for cluster in 0..k {
            let ctx = &contexts[cluster];
            let sym = symbolic.cluster_hazards(ctx, space)?;
            let raw = raw_features_over_window(
                neural,
                scenario,
                labels,
                k,
                cluster,
                &window_states,
                day,
                None,
            )?;
            let x = neural.manifest.standardize(&raw);
            let preds: BTreeMap<(usize, usize), (f64, f64)> =
                neural.regressor.predict_hazards(&x)?.into_iter().collect();
            for key in &transitions {
                // realized rate among this cluster's at-risk members
                let mut at_risk = 0usize;
                let mut events = 0usize;
                for agent in 0..scenario.n() {
                    if labels[agent] == cluster && truth.states[day][agent] == key.0 {
                        at_risk += 1;
                        if truth.states[day + 1][agent] == key.1 {
                            events += 1;
                        }
                    }
                }
                if at_risk == 0 {
                    continue;
                }
                let rate = events as f64 / at_risk as f64;
                let entry = sym.hazard(key.0, key.1).ok_or_else(|| {
                    Error::Engine(format!("missing symbolic estimate for ({}, {})", key.0, key.1))
                })?;
                let (ln_, un) = preds[key];
                records.push(CalibratorRecord {
                    features: CalibratorFeatures {
                        u_sym: entry.uncertainty,
                        u_neu: un,
                        phi_entropy: ctx.phi_entropy(),
                        exo_change: ctx
                            .psi
                            .iter()
                            .map(|s| (s.value - s.trailing_mean).abs())
                            .fold(0.0, f64::max),
                    },
                    lambda_sym: entry.hazard,
                    lambda_neu: ln_,
                    realized_rate: rate,
                });
            }
        }
    }
    Ok(records)
}

/// Extracts the first realized transition of each agent out of its reset-day
/// state within the horizon.
pub fn truth_events_for_window(
    truth: &TruthData,
    reset_day: usize,
    horizon: usize,
    origins: &[usize],
) -> Vec<(usize, Option<EventOutcome>)> {
    let n = origins.len();
    let mut out = Vec::with_capacity(n);
    for agent in 0..n {
        let origin = origins[agent];
        let mut event = None;
        for offset in 1..=horizon {
            let state = truth.states[reset_day + offset][agent];
            if state != origin {
                event = Some(EventOutcome {
                    from: origin,
                    to: state,
                    day: offset,
                });
                break;
            }
        }
        out.push((agent, event));
    }
    out
}

/// Runs the full rolling-window protocol. `fusion_mode` selects the pathway
/// configuration; symbolic-only modes skip neural training entirely.
#[allow(clippy::too_many_arguments)]
pub fn rolling_window_run(
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
    symbolic_variant: SymbolicVariant,
    fusion_mode: FusionMode,
    config: &WindowConfig,
    seed: u64,
) -> Result<Vec<WindowRun>> {
    rolling_window_run_with(
        scenario,
        truth,
        assignment,
        embeddings,
        symbolic_variant,
        None,
        fusion_mode,
        config,
        seed,
    )
}

/// Rolling-window protocol with an optional remote symbolic backend in place
/// of the rule oracle.
#[allow(clippy::too_many_arguments)]
pub fn rolling_window_run_with(
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
    symbolic_variant: SymbolicVariant,
    remote: Option<(
        &crate::symbolic::RemoteSymbolic,
        &std::sync::Mutex<crate::symbolic::CostLedger>,
    )>,
    fusion_mode: FusionMode,
    config: &WindowConfig,
    seed: u64,
) -> Result<Vec<WindowRun>> {
    let total_days = truth.states.len();
    let count = window_count(total_days, config.lookback, config.horizon);
    if count == 0 {
        return Err(Error::Engine(format!(
            "truth spans {total_days} days; need at least lookback {} + horizon {}",
            config.lookback, config.horizon
        )));
    }
    let space = scenario.space();
    let needs_neural = !matches!(fusion_mode, FusionMode::SymbolicOnly);
    let mut windows = Vec::with_capacity(count);
    let mut carried_states: Option<Vec<usize>> = None;
    // Out-of-sample (past-window) comparisons accumulated for the calibrator.
    let mut past_records: Vec<CalibratorRecord> = Vec::new();
    let wants_calibrator =
        config.train_calibrator && matches!(fusion_mode, FusionMode::LearnedCalibrator) && needs_neural;
    // Warm-up pseudo-window: fit on a shortened lookback and compare on its
    // held-out tail, so even the first real window has past comparisons.
    if wants_calibrator && config.lookback > config.horizon {
        let warm_lookback = config.lookback - config.horizon;
        if warm_lookback > config.temporal_window + 1 {
            let mut warm_config = config.clone();
            warm_config.lookback = warm_lookback;
            let (warm_neural, _) = fit_window_neural(
                scenario,
                truth,
                assignment,
                embeddings,
                0,
                &warm_config,
                seed.wrapping_add(104_729),
            )?;
            let source = match remote {
                Some((r, ledger)) => SymbolicSource::Remote { remote: r, ledger },
                None => SymbolicSource::Oracle {
                    rules: &scenario.rules,
                    variant: symbolic_variant,
                },
            };
            past_records.extend(calibrator_records(
                scenario,
                truth,
                assignment,
                &warm_neural,
                &source,
                warm_lookback - 1..config.lookback - 1,
            )?);
        }
    }
    for index in 0..count {
        let start = index * config.horizon;
        let reset_day = start + config.lookback - 1;

        let neural = if needs_neural {
            Some(
                fit_window_neural(
                    scenario,
                    truth,
                    assignment,
                    embeddings,
                    start,
                    config,
                    seed.wrapping_add(index as u64 * 7919),
                )?
                .0,
            )
        } else {
            None
        };
        let symbolic = match remote {
            Some((r, ledger)) => SymbolicSource::Remote { remote: r, ledger },
            None => SymbolicSource::Oracle {
                rules: &scenario.rules,
                variant: symbolic_variant,
            },
        };
        // Calibrated fusion trains on past windows only; until enough
        // held-out records exist, fall back to the reciprocal rule.
        let calibrator: Option<ConfidenceCalibrator> = if wants_calibrator && past_records.len() >= 16 {
            Some(train_calibrator(&past_records, &config.calibrator, seed.wrapping_add(31))?.0)
        } else {
            None
        };
        let effective_mode = if matches!(fusion_mode, FusionMode::LearnedCalibrator) && calibrator.is_none() {
            FusionMode::DefaultReciprocal
        } else {
            fusion_mode
        };
        let pathways = Pathways {
            symbolic: Some(symbolic),
            neural: neural.as_ref(),
            calibrator: calibrator.as_ref(),
        };

        // Reset to truth (or free-run from the previous window's end).
        let reset_states = match (&carried_states, config.free_running) {
            (Some(prev), true) => prev.clone(),
            _ => truth.states[reset_day].clone(),
        };
        let origins = reset_states.clone();
        let tw = config.temporal_window;
        let prior_history: Vec<Vec<usize>> = ((reset_day + 1 - tw)..reset_day)
            .map(|d| truth.states[d].clone())
            .chain(std::iter::once(reset_states.clone()))
            .collect();
        let mut engine_config = EngineConfig::new(seed);
        engine_config.salt = 1000 + index as u64;
        engine_config.fusion_mode = effective_mode;
        engine_config.window_tag = index as i64;
        if config.freeze_exogenous {
            engine_config.freeze_exogenous_at = Some(reset_day);
        }
        let mut sim = Simulator::new(scenario, assignment, reset_states, reset_day, prior_history, engine_config)?;

        // Simulate the horizon, collecting per-agent counterfactual hazard
        // tables for the reset-day origins.
        let n = scenario.n();
        let mut hazard_tables: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
        let mut simulated = vec![sim.states.clone()];
        let mut population_fused = Vec::with_capacity(config.horizon);
        for _ in 0..config.horizon {
            let out = sim.step_full(&pathways, Some(&origins))?;
            population_fused.push(out.population_fused);
            for (agent, rows) in out.counterfactual.iter().enumerate() {
                if !rows.is_empty() {
                    hazard_tables[agent].push(rows.iter().map(|(_, h)| *h).collect());
                }
            }
            simulated.push(sim.states.clone());
        }

        // Forecast distributions for non-terminal-origin agents.
        let mut forecasts = Vec::new();
        let mut truth_records = Vec::new();
        let raw_events = truth_events_for_window(truth, reset_day, config.horizon, &origins);
        for agent in 0..n {
            let origin = origins[agent];
            if space.is_terminal(origin) {
                continue;
            }
            let types: Vec<(usize, usize)> =
                space.outgoing(origin).map(|t| (t.from, t.to)).collect();
            let distribution = JointEventDistribution::from_daily_hazards(
                origin,
                types,
                &hazard_tables[agent],
                sim.config.sampler,
            )?;
            forecasts.push(AgentForecast {
                agent,
                origin,
                distribution,
            });
            truth_records.push(EventRecord {
                agent,
                event: raw_events[agent].1.clone(),
            });
        }
        let metrics = score_batch(
            &forecasts.iter().map(|f| f.distribution.clone()).collect::<Vec<_>>(),
            &truth_records,
        );
        // Archive this window's held-out pathway-vs-truth comparisons for
        // later windows' calibrators.
        if wants_calibrator {
            if let Some(neural) = &neural {
                let source = match remote {
                    Some((r, ledger)) => SymbolicSource::Remote { remote: r, ledger },
                    None => SymbolicSource::Oracle {
                        rules: &scenario.rules,
                        variant: symbolic_variant,
                    },
                };
                past_records.extend(calibrator_records(
                    scenario,
                    truth,
                    assignment,
                    neural,
                    &source,
                    reset_day..reset_day + config.horizon,
                )?);
            }
        }
        carried_states = Some(sim.states.clone());
        windows.push(WindowRun {
            index,
            start,
            reset_day,
            forecasts,
            truth_events: truth_records,
            metrics,
            population_fused,
            traces: sim.traces.clone(),
            simulated,
            events: sim.events.clone(),
            regressor_parameters: neural.as_ref().map(|p| p.regressor.parameter_count()).unwrap_or(0),
        });
    }
    Ok(windows)
}

/// Mean absolute error between the population-aggregated fused hazards and
/// the generator's recorded hazards, per window.
pub fn fused_vs_generator_mae(
    windows: &[WindowRun],
    generator: &[BTreeMap<(usize, usize), f64>],
) -> Vec<f64> {
    windows
        .iter()
        .map(|w| {
            let mut total = 0.0;
            let mut count = 0usize;
            for (offset, per_day) in w.population_fused.iter().enumerate() {
                let day = w.reset_day + offset;
                if day >= generator.len() {
                    continue;
                }
                for (key, fused) in per_day {
                    if let Some(truth_hazard) = generator[day].get(key) {
                        total += (fused - truth_hazard).abs();
                        count += 1;
                    }
                }
            }
            if count == 0 {
                0.0
            } else {
                total / count as f64
            }
        })
        .collect()
}

/// Aggregates the four metrics over windows (mean and standard deviation of
/// the per-window values).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WindowAggregate {
    pub windows: usize,
    pub eete_mean: Option<f64>,
    pub eete_std: Option<f64>,
    pub et_f1_mean: Option<f64>,
    pub et_f1_std: Option<f64>,
    pub nll_mean: Option<f64>,
    pub nll_std: Option<f64>,
    pub brier_mean: Option<f64>,
    pub brier_std: Option<f64>,
    pub total_events: usize,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn aggregate_windows(windows: &[WindowRun]) -> WindowAggregate {
    let collect = |f: fn(&MetricsSummary) -> Option<f64>| -> Vec<f64> {
        windows.iter().filter_map(|w| f(&w.metrics)).collect()
    };
    let eete = collect(|m| m.eete);
    let f1 = collect(|m| m.et_f1);
    let nll = collect(|m| m.nll);
    let brier = collect(|m| m.brier);
    let unpack = |v: Option<(f64, f64)>| (v.map(|x| x.0), v.map(|x| x.1));
    let (eete_mean, eete_std) = unpack(mean_std(&eete));
    let (et_f1_mean, et_f1_std) = unpack(mean_std(&f1));
    let (nll_mean, nll_std) = unpack(mean_std(&nll));
    let (brier_mean, brier_std) = unpack(mean_std(&brier));
    WindowAggregate {
        windows: windows.len(),
        eete_mean,
        eete_std,
        et_f1_mean,
        et_f1_std,
        nll_mean,
        nll_std,
        brier_mean,
        brier_std,
        total_events: windows.iter().map(|w| w.metrics.event_count).sum(),
    }
}
