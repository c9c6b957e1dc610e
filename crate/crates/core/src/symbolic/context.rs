//! Cluster-level regime context assembly.

use crate::error::{Error, Result};
use crate::model::{ExogenousSeries, InteractionGraph};
use serde::{Deserialize, Serialize};

/// Snapshot of one exogenous series at a timestep: the current value plus the
/// trailing 7-day mean (padded with the first value before day 7).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExoSnapshot {
    pub name: String,
    pub value: f64,
    pub trailing_mean: f64,
}

/// Neighbor-cluster summary: the edge-count-weighted mean state composition
/// over clusters sharing at least one inter-cluster edge, and the fraction of
/// this cluster's incident edges that cross cluster boundaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborSummary {
    pub mean_phi: Vec<f64>,
    pub inter_cluster_edge_fraction: f64,
}

/// Everything the symbolic pathway sees about one cluster at one timestep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterContext {
    pub cluster_id: usize,
    pub t: usize,
    pub size: usize,
    /// Fraction of members per state; sums to 1.
    pub phi: Vec<f64>,
    pub psi: Vec<ExoSnapshot>,
    pub psi_nbr: NeighborSummary,
}

impl ClusterContext {
    pub fn infectious_fraction(&self, infectious: impl Fn(usize) -> bool) -> f64 {
        self.phi
            .iter()
            .enumerate()
            .filter(|(s, _)| infectious(*s))
            .map(|(_, f)| f)
            .sum()
    }

    /// Current value of a named exogenous series, if present.
    pub fn exo_value(&self, name: &str) -> Option<f64> {
        self.psi.iter().find(|s| s.name == name).map(|s| s.value)
    }

    /// Shannon entropy (nats) of the state composition.
    pub fn phi_entropy(&self) -> f64 {
        -self
            .phi
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

fn exo_snapshot(series: &ExogenousSeries, t: usize) -> ExoSnapshot {
    let value = series.values[t];
    let mut sum = 0.0;
    for d in t as i64 - 6..=t as i64 {
        let idx = d.max(0) as usize;
        sum += series.values[idx];
    }
    ExoSnapshot {
        name: series.name.clone(),
        value,
        trailing_mean: sum / 7.0,
    }
}

/// Assembles contexts for every cluster in one pass over the graph.
///
/// `assignment[agent]` gives the agent's cluster in `[0, n_clusters)`;
/// `states[agent]` its current state. `t` must be within the span of every
/// exogenous series.
pub fn assemble_all_contexts(
    assignment: &[usize],
    n_clusters: usize,
    graph: &InteractionGraph,
    states: &[usize],
    n_states: usize,
    exogenous: &[ExogenousSeries],
    t: usize,
) -> Result<Vec<ClusterContext>> {
    let n = graph.n();
    if assignment.len() != n || states.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "assignment/states must have length n = {n}"
        )));
    }
    for series in exogenous {
        if t >= series.values.len() {
            return Err(Error::Engine(format!(
                "t = {t} outside span of series {}",
                series.name
            )));
        }
    }
    let mut sizes = vec![0usize; n_clusters];
    let mut state_counts = vec![vec![0usize; n_states]; n_clusters];
    for (agent, (&c, &s)) in assignment.iter().zip(states).enumerate() {
        if c >= n_clusters {
            return Err(Error::Engine(format!("agent {agent} has cluster {c} >= {n_clusters}")));
        }
        sizes[c] += 1;
        state_counts[c][s] += 1;
    }
    for (c, &size) in sizes.iter().enumerate() {
        if size == 0 {
            return Err(Error::Engine(format!("cluster {c} is empty")));
        }
    }
    let phis: Vec<Vec<f64>> = state_counts
        .iter()
        .zip(&sizes)
        .map(|(counts, &size)| counts.iter().map(|&c| c as f64 / size as f64).collect())
        .collect();

    // One pass over edges: cross-cluster edge counts and incident totals.
    let mut cross: Vec<std::collections::BTreeMap<usize, usize>> =
        vec![Default::default(); n_clusters];
    let mut incident = vec![0usize; n_clusters];
    let mut crossing = vec![0usize; n_clusters];
    for i in 0..n {
        for &j in graph.neighbors(i) {
            if j <= i {
                continue;
            }
            let (ci, cj) = (assignment[i], assignment[j]);
            incident[ci] += 1;
            if ci != cj {
                incident[cj] += 1;
                crossing[ci] += 1;
                crossing[cj] += 1;
                *cross[ci].entry(cj).or_insert(0) += 1;
                *cross[cj].entry(ci).or_insert(0) += 1;
            }
        }
    }

    let snapshots: Vec<ExoSnapshot> = exogenous.iter().map(|s| exo_snapshot(s, t)).collect();

    let mut out = Vec::with_capacity(n_clusters);
    for c in 0..n_clusters {
        let total_cross: usize = cross[c].values().sum();
        let mean_phi = if total_cross == 0 {
            vec![0.0; n_states]
        } else {
            let mut acc = vec![0.0; n_states];
            for (&other, &w) in &cross[c] {
                for (s, f) in phis[other].iter().enumerate() {
                    acc[s] += w as f64 * f;
                }
            }
            acc.iter_mut().for_each(|v| *v /= total_cross as f64);
            acc
        };
        let frac = if incident[c] == 0 {
            0.0
        } else {
            crossing[c] as f64 / incident[c] as f64
        };
        out.push(ClusterContext {
            cluster_id: c,
            t,
            size: sizes[c],
            phi: phis[c].clone(),
            psi: snapshots.clone(),
            psi_nbr: NeighborSummary {
                mean_phi,
                inter_cluster_edge_fraction: frac,
            },
        });
    }
    Ok(out)
}

/// Context for a single cluster (convenience wrapper over the batch path).
pub fn assemble_context(
    cluster_id: usize,
    assignment: &[usize],
    n_clusters: usize,
    graph: &InteractionGraph,
    states: &[usize],
    n_states: usize,
    exogenous: &[ExogenousSeries],
    t: usize,
) -> Result<ClusterContext> {
    let mut all = assemble_all_contexts(assignment, n_clusters, graph, states, n_states, exogenous, t)?;
    Ok(all.swap_remove(cluster_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionGraph;

    fn series(name: &str, values: Vec<f64>) -> ExogenousSeries {
        ExogenousSeries {
            name: name.into(),
            values,
            units: String::new(),
        }
    }

    #[test]
    fn one_hot_phi_when_all_susceptible() {
        let g = InteractionGraph::build(4, vec![("l".into(), vec![(0, 1, 1.0), (2, 3, 1.0)])]).unwrap();
        let ctx = assemble_context(0, &[0, 0, 1, 1], 2, &g, &[0, 0, 0, 0], 3, &[], 0).unwrap();
        assert_eq!(ctx.phi, vec![1.0, 0.0, 0.0]);
        assert!((ctx.phi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_series_trailing_mean_is_constant() {
        let g = InteractionGraph::build(2, vec![("l".into(), vec![(0, 1, 1.0)])]).unwrap();
        let exo = vec![series("x", vec![2.5; 10])];
        for t in 0..10 {
            let ctx = assemble_context(0, &[0, 0], 1, &g, &[0, 0], 2, &exo, t).unwrap();
            assert_eq!(ctx.psi[0].value, 2.5);
            assert!((ctx.psi[0].trailing_mean - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn trailing_mean_pads_with_first_value() {
        let g = InteractionGraph::build(2, vec![("l".into(), vec![(0, 1, 1.0)])]).unwrap();
        let exo = vec![series("x", vec![1.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0])];
        // t = 1: window [-5, 1] pads 6 entries with values[0] = 1.0 -> (6*1 + 8)/7 = 2.0
        let ctx = assemble_context(0, &[0, 0], 1, &g, &[0, 0], 2, &exo, 1).unwrap();
        assert!((ctx.psi[0].trailing_mean - 2.0).abs() < 1e-12);
        // t = 7: full window of days 1..=7, all 8.0
        let ctx = assemble_context(0, &[0, 0], 1, &g, &[0, 0], 2, &exo, 7).unwrap();
        assert!((ctx.psi[0].trailing_mean - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_cluster_neighbor_summary_matches_hand_computation() {
        // cluster 0 = {0, 1}, cluster 1 = {2, 3}; edges: 0-1 (internal),
        // 1-2 and 1-3 (cross). States: cluster 1 = one I, one S.
        let g = InteractionGraph::build(
            4,
            vec![("l".into(), vec![(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)])],
        )
        .unwrap();
        let states = vec![0, 0, 2, 0]; // agent 2 infectious
        let ctx = assemble_context(0, &[0, 0, 1, 1], 2, &g, &states, 3, &[], 0).unwrap();
        // neighbor cluster 1 has phi = [0.5, 0, 0.5]; weight 2 edges
        assert!((ctx.psi_nbr.mean_phi[0] - 0.5).abs() < 1e-12);
        assert!((ctx.psi_nbr.mean_phi[2] - 0.5).abs() < 1e-12);
        // cluster 0 incident edges: 0-1, 1-2, 1-3 -> 3; crossing: 2
        assert!((ctx.psi_nbr.inter_cluster_edge_fraction - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_is_an_error() {
        let g = InteractionGraph::build(2, vec![("l".into(), vec![(0, 1, 1.0)])]).unwrap();
        assert!(assemble_all_contexts(&[0, 0], 2, &g, &[0, 0], 2, &[], 0).is_err());
    }
}
