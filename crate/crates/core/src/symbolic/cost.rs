//! Backend invocation accounting and the flat-baseline comparison model.

use crate::error::{Error, Result};
use crate::symbolic::prompt::PromptRole;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exact per-timestep invocation counts and character-derived token
/// estimates, plus the entity-reasoning fraction alpha.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostLedger {
    pub alpha: f64,
    pub population: usize,
    pub clusters: usize,
    /// timestep -> per-role counters
    records: BTreeMap<usize, TimestepCost>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TimestepCost {
    pub calls: BTreeMap<String, usize>,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

/// ceil(chars / 4): rough tokenizer-free token estimate.
pub fn estimate_tokens(chars: usize) -> usize {
    chars.div_ceil(4)
}

impl CostLedger {
    pub fn new(alpha: f64, population: usize, clusters: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Engine(format!("alpha {alpha} outside (0, 1]")));
        }
        Ok(Self {
            alpha,
            population,
            clusters,
            records: BTreeMap::new(),
        })
    }

    pub fn record_call(&mut self, t: usize, role: PromptRole, prompt_chars: usize, completion_chars: usize) {
        let rec = self.records.entry(t).or_default();
        *rec.calls.entry(role.as_str().to_string()).or_insert(0) += 1;
        rec.prompt_tokens += estimate_tokens(prompt_chars);
        rec.completion_tokens += estimate_tokens(completion_chars);
    }

    pub fn timesteps(&self) -> usize {
        self.records.len()
    }

    pub fn total_calls(&self) -> usize {
        self.records
            .values()
            .map(|r| r.calls.values().sum::<usize>())
            .sum()
    }

    pub fn calls_at(&self, t: usize) -> usize {
        self.records
            .get(&t)
            .map(|r| r.calls.values().sum())
            .unwrap_or(0)
    }

    pub fn calls_by_role(&self, role: PromptRole) -> usize {
        self.records
            .values()
            .map(|r| r.calls.get(role.as_str()).copied().unwrap_or(0))
            .sum()
    }

    pub fn mean_calls_per_timestep(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.total_calls() as f64 / self.records.len() as f64
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.records
            .values()
            .map(|r| r.prompt_tokens + r.completion_tokens)
            .sum()
    }
}

/// Accounting model comparing hierarchical cluster-level inference against a
/// flat baseline in which every agent reasons every timestep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostModel {
    /// Flat-baseline calls per agent per timestep. The default 8.25
    /// calibrates the flat counter so N = 1000 costs 8,250 calls/timestep.
    pub flat_calls_per_agent: f64,
    /// Cluster-level structural calls: one meta plus one state agent per
    /// origin state, per cluster.
    pub clusters: usize,
    pub state_agents_per_cluster: usize,
    /// Entity-reasoning budget: fixed orchestration calls per timestep plus
    /// per-agent lightweight calls scaled by alpha. Config inputs, not
    /// derived.
    pub entity_calls_fixed: usize,
    pub entity_calls_per_agent: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            flat_calls_per_agent: 8.25,
            clusters: 4,
            state_agents_per_cluster: 5,
            entity_calls_fixed: 59,
            entity_calls_per_agent: 1.0,
        }
    }
}

impl CostModel {
    pub fn flat_calls_per_timestep(&self, population: usize) -> f64 {
        self.flat_calls_per_agent * population as f64
    }

    pub fn cluster_level_calls_per_timestep(&self) -> usize {
        self.clusters * (1 + self.state_agents_per_cluster)
    }

    pub fn hierarchical_calls_per_timestep(&self, population: usize, alpha: f64) -> usize {
        self.cluster_level_calls_per_timestep()
            + self.entity_calls_fixed
            + (alpha * population as f64 * self.entity_calls_per_agent).round() as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub alpha: f64,
    pub population: usize,
    pub timesteps: usize,
    pub recorded_calls_per_timestep: f64,
    pub recorded_total_tokens: usize,
    pub model_flat_calls_per_timestep: f64,
    pub model_hierarchical_calls_per_timestep: usize,
    pub reduction_ratio: f64,
}

/// Summarizes a ledger against the flat-baseline accounting model.
pub fn summarize_cost(ledger: &CostLedger, model: &CostModel) -> CostReport {
    let flat = model.flat_calls_per_timestep(ledger.population);
    let hier = model.hierarchical_calls_per_timestep(ledger.population, ledger.alpha);
    CostReport {
        alpha: ledger.alpha,
        population: ledger.population,
        timesteps: ledger.timesteps(),
        recorded_calls_per_timestep: ledger.mean_calls_per_timestep(),
        recorded_total_tokens: ledger.total_tokens(),
        model_flat_calls_per_timestep: flat,
        model_hierarchical_calls_per_timestep: hier,
        reduction_ratio: flat / hier as f64,
    }
}
