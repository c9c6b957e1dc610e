//! Reference baselines: the fixed-rule agent model and the mean-field
//! time-homogeneous Markov chain.

use crate::anchor::ClusterAssignment;
use crate::engine::windows::{
    aggregate_windows, rolling_window_run, truth_events_for_window, window_count, AgentForecast,
    WindowAggregate, WindowConfig, WindowRun,
};
use crate::engine::world::{Event, Scenario, SymbolicVariant, TruthData};
use crate::error::{Error, Result};
use crate::fusion::FusionMode;
use crate::metrics::{score_batch, EventRecord, JointEventDistribution};
use crate::model::StateSpace;
use crate::rng::Stream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    RuleAbm,
    MfMarkov,
}

/// Population-level time-homogeneous transition matrix estimated by maximum
/// likelihood with Laplace (+1) smoothing. Rows cover each state's outgoing
/// targets plus persistence and sum to exactly 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovBaseline {
    /// options[state] = [(next_state, probability)]; the self entry is the
    /// persistence mass.
    pub options: Vec<Vec<(usize, f64)>>,
    /// States whose lookback counts were empty (uniform fallback).
    pub uniform_fallback_states: Vec<usize>,
}

/// Fits the matrix from consecutive-day transitions in `days` (each day d
/// paired with d+1).
pub fn fit_mf_markov(
    space: &StateSpace,
    truth: &TruthData,
    days: std::ops::Range<usize>,
) -> Result<MarkovBaseline> {
    let n_states = space.n_states();
    if days.end >= truth.states.len() {
        return Err(Error::Engine("lookback range exceeds truth span".into()));
    }
    let mut counts = vec![std::collections::BTreeMap::<usize, usize>::new(); n_states];
    let mut totals = vec![0usize; n_states];
    for d in days {
        for (today, tomorrow) in truth.states[d].iter().zip(&truth.states[d + 1]) {
            *counts[*today].entry(*tomorrow).or_insert(0) += 1;
            totals[*today] += 1;
        }
    }
    let mut options = Vec::with_capacity(n_states);
    let mut fallback = Vec::new();
    for s in 0..n_states {
        let mut opts: Vec<usize> = space.outgoing(s).map(|t| t.to).collect();
        opts.push(s); // persistence
        if space.is_terminal(s) {
            options.push(vec![(s, 1.0)]);
            continue;
        }
        if totals[s] == 0 {
            fallback.push(s);
        }
        let denom = (totals[s] + opts.len()) as f64;
        options.push(
            opts.iter()
                .map(|&o| {
                    let c = counts[s].get(&o).copied().unwrap_or(0);
                    (o, (c + 1) as f64 / denom)
                })
                .collect(),
        );
    }
    Ok(MarkovBaseline {
        options,
        uniform_fallback_states: fallback,
    })
}

impl MarkovBaseline {
    pub fn row_sum(&self, state: usize) -> f64 {
        self.options[state].iter().map(|(_, p)| p).sum()
    }

    pub fn stay_probability(&self, state: usize) -> f64 {
        self.options[state]
            .iter()
            .find(|(o, _)| *o == state)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.options[from]
            .iter()
            .find(|(o, _)| *o == to)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    /// Analytic first-passage distribution out of `origin` under the chain:
    /// p(target, day d) = stay^(d-1) * p(target).
    pub fn first_passage(
        &self,
        space: &StateSpace,
        origin: usize,
        horizon: usize,
    ) -> JointEventDistribution {
        let types: Vec<(usize, usize)> = space.outgoing(origin).map(|t| (t.from, t.to)).collect();
        let stay = self.stay_probability(origin);
        let mut p = vec![vec![0.0; horizon]; types.len()];
        for (idx, &(_, to)) in types.iter().enumerate() {
            let pt = self.probability(origin, to);
            for d in 1..=horizon {
                p[idx][d - 1] = stay.powi(d as i32 - 1) * pt;
            }
        }
        JointEventDistribution {
            horizon,
            origin,
            types,
            p,
            p_none: stay.powi(horizon as i32),
        }
    }

    /// One seeded categorical draw for an agent-day.
    pub fn sample(&self, state: usize, seed: u64, salt: u64, agent: usize, day: usize) -> usize {
        let mut stream = Stream::keyed(seed, "mf-markov", &[salt, agent as u64, day as u64]);
        let weights: Vec<f64> = self.options[state].iter().map(|(_, p)| *p).collect();
        match stream.weighted_index(&weights) {
            Some(idx) => self.options[state][idx].0,
            None => state,
        }
    }
}

/// Mean-field Markov rolling-window baseline: identical per-agent per-day
/// transition probabilities, no clustering, no modulation.
pub fn run_mf_markov(
    scenario: &Scenario,
    truth: &TruthData,
    config: &WindowConfig,
    seed: u64,
) -> Result<Vec<WindowRun>> {
    let space = scenario.space();
    let total_days = truth.states.len();
    let count = window_count(total_days, config.lookback, config.horizon);
    if count == 0 {
        return Err(Error::Engine("not enough truth for one window".into()));
    }
    let n = scenario.n();
    let mut windows = Vec::with_capacity(count);
    for index in 0..count {
        let start = index * config.horizon;
        let reset_day = start + config.lookback - 1;
        let chain = fit_mf_markov(space, truth, start..reset_day)?;
        let origins = truth.states[reset_day].clone();

        // Realized trajectories under the chain.
        let mut states = origins.clone();
        let mut simulated = vec![states.clone()];
        let mut events = Vec::new();
        for offset in 0..config.horizon {
            let day = reset_day + offset;
            let mut next = states.clone();
            for agent in 0..n {
                let to = chain.sample(states[agent], seed, 1000 + index as u64, agent, day);
                if to != states[agent] {
                    events.push(Event {
                        day: day + 1,
                        agent,
                        from: states[agent],
                        to,
                    });
                    next[agent] = to;
                }
            }
            states = next;
            simulated.push(states.clone());
        }

        let raw_events = truth_events_for_window(truth, reset_day, config.horizon, &origins);
        let mut forecasts = Vec::new();
        let mut records = Vec::new();
        for agent in 0..n {
            let origin = origins[agent];
            if space.is_terminal(origin) {
                continue;
            }
            forecasts.push(AgentForecast {
                agent,
                origin,
                distribution: chain.first_passage(space, origin, config.horizon),
            });
            records.push(EventRecord {
                agent,
                event: raw_events[agent].1.clone(),
            });
        }
        let metrics = score_batch(
            &forecasts.iter().map(|f| f.distribution.clone()).collect::<Vec<_>>(),
            &records,
        );
        windows.push(WindowRun {
            index,
            start,
            reset_day,
            forecasts,
            truth_events: records,
            metrics,
            population_fused: Vec::new(),
            traces: Vec::new(),
            simulated,
            events,
            regressor_parameters: 0,
        });
    }
    Ok(windows)
}

/// Fixed-rule agent baseline: oracle rules with exogenous context frozen at
/// each window's reset day (non-regime-adaptive), same modulation and
/// sampler as the main engine.
pub fn run_rule_abm(
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
    config: &WindowConfig,
    seed: u64,
) -> Result<Vec<WindowRun>> {
    let mut frozen = config.clone();
    frozen.freeze_exogenous = true;
    rolling_window_run(
        scenario,
        truth,
        assignment,
        embeddings,
        SymbolicVariant::Full,
        FusionMode::SymbolicOnly,
        &frozen,
        seed,
    )
}

pub fn run_baseline(
    kind: BaselineKind,
    scenario: &Scenario,
    truth: &TruthData,
    assignment: &ClusterAssignment,
    embeddings: &ndarray::Array2<f64>,
    config: &WindowConfig,
    seed: u64,
) -> Result<(Vec<WindowRun>, WindowAggregate)> {
    let windows = match kind {
        BaselineKind::RuleAbm => run_rule_abm(scenario, truth, assignment, embeddings, config, seed)?,
        BaselineKind::MfMarkov => run_mf_markov(scenario, truth, config, seed)?,
    };
    let aggregate = aggregate_windows(&windows);
    Ok((windows, aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_truth(space: &StateSpace, n: usize, days: usize, seed: u64) -> TruthData {
        // Random-ish but admissible trajectories: agents progress through
        // SEIRD with seeded coin flips.
        let mut states = vec![vec![0usize; n]];
        let mut rng = Stream::keyed(seed, "toy-truth", &[]);
        for agent in 0..n.min(3) {
            states[0][agent] = 2; // seed infections
        }
        for _ in 1..days {
            let prev = states.last().unwrap().clone();
            let mut next = prev.clone();
            for agent in 0..n {
                let s = prev[agent];
                if space.is_terminal(s) {
                    continue;
                }
                let u = rng.uniform();
                next[agent] = match s {
                    0 if u < 0.08 => 1,
                    1 if u < 0.4 => 2,
                    2 if u < 0.3 => {
                        if u < 0.02 {
                            4
                        } else {
                            3
                        }
                    }
                    _ => s,
                };
            }
            states.push(next);
        }
        TruthData {
            states,
            regime_labels: None,
        }
    }

    #[test]
    fn markov_rows_sum_to_one_exactly() {
        let space = StateSpace::seird();
        let truth = toy_truth(&space, 50, 40, 3);
        let chain = fit_mf_markov(&space, &truth, 0..30).unwrap();
        for s in 0..space.n_states() {
            assert!((chain.row_sum(s) - 1.0).abs() < 1e-12, "state {s}");
        }
    }

    #[test]
    fn laplace_smoothing_on_unseen_transition() {
        let space = StateSpace::seird();
        // Truth with zero I->D events: all infected recover immediately.
        let mut states = vec![vec![0usize; 10]; 1];
        states[0][0] = 2;
        for d in 1..20 {
            let mut next = states[d - 1].clone();
            for agent in 0..10 {
                if states[d - 1][agent] == 2 {
                    next[agent] = 3;
                }
            }
            states.push(next);
        }
        let truth = TruthData {
            states,
            regime_labels: None,
        };
        let chain = fit_mf_markov(&space, &truth, 0..15).unwrap();
        // I has options {R, D, stay}: p(I->D) = 1 / (n_I + 3)
        let n_i = 1.0; // one infected-day observed in the lookback
        let expected = 1.0 / (n_i + 3.0);
        assert!((chain.probability(2, 4) - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_lookback_counts_fall_back_to_uniform() {
        let space = StateSpace::seird();
        // No agent ever visits E in this truth.
        let truth = TruthData {
            states: vec![vec![0usize; 5]; 35],
            regime_labels: None,
        };
        let chain = fit_mf_markov(&space, &truth, 0..30).unwrap();
        assert!(chain.uniform_fallback_states.contains(&1));
        // E has options {I, stay}: uniform 1/2 each.
        assert!((chain.probability(1, 2) - 0.5).abs() < 1e-12);
        assert!((chain.stay_probability(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn first_passage_normalizes_and_matches_geometric_form() {
        let space = StateSpace::seird();
        let truth = toy_truth(&space, 50, 40, 7);
        let chain = fit_mf_markov(&space, &truth, 0..30).unwrap();
        let dist = chain.first_passage(&space, 0, 7);
        assert!((dist.total_mass() - 1.0).abs() < 1e-9);
        let stay = chain.stay_probability(0);
        let p_se = chain.probability(0, 1);
        assert!((dist.p[0][0] - p_se).abs() < 1e-12);
        assert!((dist.p[0][2] - stay * stay * p_se).abs() < 1e-12);
    }

    #[test]
    fn rule_abm_hazards_flat_across_a_mid_forecast_shock() {
        use crate::engine::world::tests::toy_scenario;
        let scenario = toy_scenario(40, 5);
        // Truth long enough for windows; shock at day 40 sits inside the
        // later forecast horizon.
        let truth = toy_truth(scenario.space(), 40, 50, 9);
        let assignment = crate::engine::world::block_assignment(40, 2);
        let h = ndarray::Array2::zeros((40, 4));
        let config = WindowConfig {
            lookback: 28,
            horizon: 7,
            temporal_window: 7,
            ..Default::default()
        };
        use std::collections::BTreeMap;
        let windows = run_rule_abm(&scenario, &truth, &assignment, &h, &config, 3).unwrap();
        // Window 2 resets at day 41... only 3 windows fit in 50 days; window
        // index 1 resets at day 34 and forecasts 35..41, crossing the day-40
        // stringency step. Frozen exogenous context means the traced S->E
        // base hazards cannot react to the step: per-cluster trace values at
        // the same phi stay governed by the frozen multiplier.
        let w = &windows[1];
        let mut by_day: BTreeMap<usize, f64> = BTreeMap::new();
        for row in &w.traces {
            if row.from == 0 && row.to == 1 && row.cluster == 0 {
                by_day.insert(row.day, row.lambda_sym);
            }
        }
        // The frozen multiplier is 1 (pre-shock); hazards vary only through
        // phi. Re-derive the expected value from phi on the simulated states
        // and confirm no 5x collapse on the post-shock days.
        for (&day, &lam) in &by_day {
            if day >= 40 {
                let states = &w.simulated[day - w.reset_day];
                let members: Vec<usize> =
                    (0..40).filter(|&i| assignment.labels[i] == 0).collect();
                let inf = members.iter().filter(|&&i| states[i] == 2).count() as f64
                    / members.len() as f64;
                let expected = (1.2 * inf).clamp(0.0, 1.0); // multiplier frozen at 1
                assert!(
                    (lam - expected).abs() < 1e-9,
                    "day {day}: {lam} vs unshocked {expected}"
                );
            }
        }
    }
}
