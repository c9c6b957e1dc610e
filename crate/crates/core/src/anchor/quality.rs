//! Cluster quality monitoring: modularity, silhouette, motif coherence.

use crate::error::{Error, Result};
use crate::model::InteractionGraph;
use crate::symbolic::cosine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterQualityReport {
    pub modularity: f64,
    pub silhouette: f64,
    pub motif_coherence: f64,
    /// Set when silhouette was degenerate (single cluster or zero spread).
    pub degenerate_silhouette: bool,
}

/// Newman-Girvan modularity of a partition on the binary adjacency:
/// Q = sum_c (e_c / m - (d_c / 2m)^2).
pub fn modularity(graph: &InteractionGraph, labels: &[usize]) -> f64 {
    let m = graph.edge_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = labels.iter().max().map(|&x| x + 1).unwrap_or(0);
    let mut internal = vec![0usize; k];
    let mut degree_sum = vec![0usize; k];
    for i in 0..graph.n() {
        degree_sum[labels[i]] += graph.degree(i);
        for &j in graph.neighbors(i) {
            if j > i && labels[i] == labels[j] {
                internal[labels[i]] += 1;
            }
        }
    }
    (0..k)
        .map(|c| internal[c] as f64 / m - (degree_sum[c] as f64 / (2.0 * m)).powi(2))
        .sum()
}

/// Mean silhouette coefficient over agents with Euclidean distance on the
/// rows of `z`. Returns (value, degenerate flag); a single-cluster partition
/// or an all-identical embedding reports 0 with the flag set.
pub fn silhouette(z: &Array2<f64>, labels: &[usize]) -> (f64, bool) {
    let n = z.nrows();
    let k = labels.iter().max().map(|&x| x + 1).unwrap_or(0);
    if k < 2 || n < 2 {
        return (0.0, true);
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let dist = |a: usize, b: usize| -> f64 {
        z.row(a)
            .iter()
            .zip(z.row(b).iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    let mut degenerate = true;
    for i in 0..n {
        if counts[labels[i]] <= 1 {
            continue; // singleton: s(i) = 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(i, j);
            }
        }
        let a = sums[labels[i]] / (counts[labels[i]] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i] && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
            degenerate = false;
        }
    }
    (total / n as f64, degenerate)
}

/// Mean over clusters of the mean pairwise cosine similarity of member motif
/// profiles, mapped from [-1, 1] to [0, 1]. Singleton clusters count as
/// perfectly coherent.
pub fn motif_coherence(p: &Array2<f64>, labels: &[usize]) -> f64 {
    let k = labels.iter().max().map(|&x| x + 1).unwrap_or(0);
    if k == 0 {
        return 0.0;
    }
    let mut per_cluster = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<usize> = (0..p.nrows()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            per_cluster.push(1.0);
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let ri = p.row(i);
                let rj = p.row(j);
                let ni: f64 = ri.iter().map(|x| x * x).sum::<f64>();
                let nj: f64 = rj.iter().map(|x| x * x).sum::<f64>();
                sum += if ni == 0.0 && nj == 0.0 {
                    1.0
                } else {
                    cosine(ri.to_slice().unwrap(), rj.to_slice().unwrap())
                };
                pairs += 1;
            }
        }
        per_cluster.push(sum / pairs as f64);
    }
    let mean = per_cluster.iter().sum::<f64>() / per_cluster.len() as f64;
    (mean + 1.0) / 2.0
}

/// Full quality report for a partition.
pub fn quality(
    graph: &InteractionGraph,
    labels: &[usize],
    z: &Array2<f64>,
    p: &Array2<f64>,
) -> Result<ClusterQualityReport> {
    if labels.len() != graph.n() || z.nrows() != graph.n() || p.nrows() != graph.n() {
        return Err(Error::DimensionMismatch("labels/Z/P must cover all agents".into()));
    }
    let (sil, degenerate) = silhouette(z, labels);
    Ok(ClusterQualityReport {
        modularity: modularity(graph, labels),
        silhouette: sil,
        motif_coherence: motif_coherence(p, labels),
        degenerate_silhouette: degenerate,
    })
}

/// Adjusted Rand index between two labelings, from the contingency table.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map(|&x| x + 1).unwrap_or(0);
    let kb = b.iter().max().map(|&x| x + 1).unwrap_or(0);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&x| choose2(x)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n);
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if (max_index - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}
