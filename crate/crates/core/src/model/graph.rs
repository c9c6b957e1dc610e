//! Multi-layer interaction graph over the agent population.

use crate::error::{Error, Result};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    /// Undirected edges (i, j, weight), stored with i < j, deduplicated.
    pub edges: Vec<(usize, usize, f64)>,
}

/// Contact/influence network: named weighted layers plus the derived binary
/// symmetric adjacency (the unweighted union of all layers). Neighbor
/// statistics are always computed on the binary adjacency; layer weights are
/// retained for synthetic generation and entity modulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionGraph {
    n: usize,
    layers: Vec<Layer>,
    /// Sorted neighbor lists of the binary union adjacency.
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl InteractionGraph {
    /// Merges the named layer edge lists into a graph. Duplicate edges within
    /// a layer are merged with summed weights; the adjacency is the binary
    /// symmetric union across layers.
    pub fn build(n: usize, layer_edges: Vec<(String, Vec<(usize, usize, f64)>)>) -> Result<Self> {
        let mut layers = Vec::with_capacity(layer_edges.len());
        let mut union: Vec<BTreeMap<usize, ()>> = vec![BTreeMap::new(); n];
        for (name, edges) in layer_edges {
            let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (i, j, w) in edges {
                if i >= n || j >= n {
                    return Err(Error::InvalidGraph(format!(
                        "edge ({i}, {j}) out of range for n = {n}"
                    )));
                }
                if i == j {
                    return Err(Error::InvalidGraph(format!("self-loop on agent {i}")));
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "edge ({i}, {j}) has invalid weight {w}"
                    )));
                }
                let key = (i.min(j), i.max(j));
                *merged.entry(key).or_insert(0.0) += w;
            }
            for &(i, j) in merged.keys() {
                union[i].insert(j, ());
                union[j].insert(i, ());
            }
            layers.push(Layer {
                name,
                edges: merged.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
            });
        }
        let neighbors: Vec<Vec<usize>> = union
            .into_iter()
            .map(|m| m.into_keys().collect())
            .collect();
        let edge_count = neighbors.iter().map(|v| v.len()).sum::<usize>() / 2;
        Ok(Self {
            n,
            layers,
            neighbors,
            edge_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.neighbors[agent].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            2.0 * self.edge_count as f64 / self.n as f64
        }
    }

    /// Counts of neighbor states for one agent; the map covers every state in
    /// `0..n_states` and the counts sum to the agent's degree.
    pub fn neighbor_state_counts(
        &self,
        states: &[usize],
        n_states: usize,
        agent: usize,
    ) -> Result<Vec<usize>> {
        if agent >= self.n {
            return Err(Error::BadAgentId(agent, self.n));
        }
        if states.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "state vector length {} != n {}",
                states.len(),
                self.n
            )));
        }
        let mut counts = vec![0usize; n_states];
        for &nb in &self.neighbors[agent] {
            counts[states[nb]] += 1;
        }
        Ok(counts)
    }

    /// Fraction of an agent's neighbors currently in any of the flagged
    /// states. Zero for isolated agents.
    pub fn neighbor_fraction(
        &self,
        states: &[usize],
        flagged: impl Fn(usize) -> bool,
        agent: usize,
    ) -> f64 {
        let nbs = &self.neighbors[agent];
        if nbs.is_empty() {
            return 0.0;
        }
        let hits = nbs.iter().filter(|&&nb| flagged(states[nb])).count();
        hits as f64 / nbs.len() as f64
    }
}

/// Synthetic multi-layer contact structure: household cliques (size 2-5),
/// clustered workplace rings with rewiring, and a sparse random community
/// layer. The `target_degree` knob scales the community layer to hit the
/// requested mean degree.
pub fn synthetic_layers(
    n: usize,
    target_degree: f64,
    seed: u64,
) -> Vec<(String, Vec<(usize, usize, f64)>)> {
    let mut rng = Stream::keyed(seed, "synthetic-layers", &[n as u64]);

    // Households: disjoint cliques of size 2-5 over a shuffled population.
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut household = Vec::new();
    let mut pos = 0;
    let mut household_degree_sum = 0usize;
    while pos < n {
        let size = (2 + rng.below(4)).min(n - pos);
        if size >= 2 {
            for a in 0..size {
                for b in (a + 1)..size {
                    household.push((order[pos + a], order[pos + b], 1.0));
                }
            }
            household_degree_sum += size * (size - 1);
        }
        pos += size.max(1);
    }

    // Workplaces: ring lattice within shuffled groups of ~15, k=4, with 10%
    // rewiring inside the group (small-world style clustering).
    let mut order2: Vec<usize> = (0..n).collect();
    let mut rng2 = Stream::keyed(seed, "synthetic-workplace", &[n as u64]);
    rng2.shuffle(&mut order2);
    let mut workplace = Vec::new();
    let group = 15usize;
    let mut workplace_degree_sum = 0usize;
    for chunk in order2.chunks(group) {
        let m = chunk.len();
        if m < 3 {
            continue;
        }
        let half_k = 2usize.min((m - 1) / 2);
        for a in 0..m {
            for d in 1..=half_k {
                let b = (a + d) % m;
                let (x, y) = (chunk[a], chunk[b]);
                if x == y {
                    continue;
                }
                // Rewire with probability 0.1 to a random member.
                let (x, y) = if rng2.uniform() < 0.1 {
                    let mut other = chunk[rng2.below(m)];
                    if other == x {
                        other = chunk[(a + d + 1) % m];
                    }
                    (x, other)
                } else {
                    (x, y)
                };
                if x != y {
                    workplace.push((x.min(y), x.max(y), 1.0));
                    workplace_degree_sum += 2;
                }
            }
        }
    }

    // Community: sparse uniform random pairs topping the degree budget up to
    // the target.
    let used = (household_degree_sum + workplace_degree_sum) as f64 / n as f64;
    let remaining = (target_degree - used).max(0.0);
    let extra_edges = (remaining * n as f64 / 2.0).round() as usize;
    let mut community = Vec::new();
    let mut rng3 = Stream::keyed(seed, "synthetic-community", &[n as u64]);
    let mut attempts = 0usize;
    while community.len() < extra_edges && attempts < extra_edges * 20 {
        attempts += 1;
        let i = rng3.below(n);
        let j = rng3.below(n);
        if i != j {
            community.push((i.min(j), i.max(j), 1.0));
        }
    }

    vec![
        ("household".to_string(), household),
        ("workplace".to_string(), workplace),
        ("community".to_string(), community),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_edge_case() {
        let g = InteractionGraph::build(3, vec![("l".into(), vec![(0, 1, 1.0)])]).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 0));
        assert_eq!(g.degree(2), 0);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn duplicate_edges_merge_with_summed_weight() {
        let g = InteractionGraph::build(
            2,
            vec![("l".into(), vec![(0, 1, 0.5), (0, 1, 0.5)])],
        )
        .unwrap();
        assert_eq!(g.layers()[0].edges, vec![(0, 1, 1.0)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(0), 1);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(InteractionGraph::build(2, vec![("l".into(), vec![(0, 2, 1.0)])]).is_err());
        assert!(InteractionGraph::build(2, vec![("l".into(), vec![(1, 1, 1.0)])]).is_err());
        assert!(InteractionGraph::build(2, vec![("l".into(), vec![(0, 1, -1.0)])]).is_err());
        assert!(InteractionGraph::build(2, vec![("l".into(), vec![(0, 1, f64::NAN)])]).is_err());
    }

    #[test]
    fn synthetic_layers_hit_target_degree() {
        let layers = synthetic_layers(1000, 8.2, 42);
        let g = InteractionGraph::build(1000, layers).unwrap();
        // Recompute the mean degree from the emitted edge list.
        let mean = g.mean_degree();
        assert!(
            (mean - 8.2).abs() <= 1.5,
            "mean degree {mean} outside 8.2 +/- 1.5"
        );
    }

    #[test]
    fn neighbor_counts_match_brute_force_scan() {
        let layers = synthetic_layers(50, 5.0, 9);
        let g = InteractionGraph::build(50, layers.clone()).unwrap();
        let mut st = Stream::keyed(1, "states", &[]);
        let states: Vec<usize> = (0..50).map(|_| st.below(3)).collect();
        // Reference: O(n*m) scan over the raw (deduplicated) edge list.
        for agent in 0..50 {
            let mut expected = vec![0usize; 3];
            let mut seen = std::collections::BTreeSet::new();
            for (_, edges) in &layers {
                for &(i, j, _) in edges {
                    let key = (i.min(j), i.max(j));
                    if !seen.insert(key) {
                        continue;
                    }
                    if i == agent {
                        expected[states[j]] += 1;
                    } else if j == agent {
                        expected[states[i]] += 1;
                    }
                }
            }
            let got = g.neighbor_state_counts(&states, 3, agent).unwrap();
            assert_eq!(got, expected, "agent {agent}");
            assert_eq!(got.iter().sum::<usize>(), g.degree(agent));
        }
    }

    #[test]
    fn isolated_agent_has_zero_counts() {
        let g = InteractionGraph::build(3, vec![("l".into(), vec![(0, 1, 1.0)])]).unwrap();
        let counts = g.neighbor_state_counts(&[0, 1, 2], 3, 2).unwrap();
        assert_eq!(counts, vec![0, 0, 0]);
    }

    #[test]
    fn all_neighbors_in_one_state() {
        let g = InteractionGraph::build(
            4,
            vec![("l".into(), vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])],
        )
        .unwrap();
        // agent 0 has 3 neighbors, all in state 2
        let counts = g.neighbor_state_counts(&[0, 2, 2, 2], 3, 0).unwrap();
        assert_eq!(counts, vec![0, 0, 3]);
    }

    proptest! {
        #[test]
        fn degree_sum_is_twice_edge_count(
            n in 2usize..40,
            raw in proptest::collection::vec((0usize..40, 0usize..40, 0.0f64..2.0), 0..80)
        ) {
            let edges: Vec<(usize, usize, f64)> = raw
                .into_iter()
                .filter(|(i, j, _)| *i < n && *j < n && i != j)
                .collect();
            let g = InteractionGraph::build(n, vec![("a".into(), edges)]).unwrap();
            let degree_sum: usize = (0..n).map(|i| g.degree(i)).sum();
            prop_assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }
}
