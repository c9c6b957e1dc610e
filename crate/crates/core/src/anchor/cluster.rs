//! Hybrid fusion, hierarchical clustering, boundary optimization, and
//! merge/split adaptation.

use crate::anchor::kmeans::kmeans;
use crate::anchor::motifs::{dominant_profiles, select_anchors};
use crate::error::{Error, Result};
use crate::model::InteractionGraph;
use crate::symbolic::cosine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Final cluster assignment: per-agent labels in [0, k) plus one anchor agent
/// per cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub anchors: Vec<usize>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == cluster)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn validate(&self) -> Result<()> {
        if self.anchors.len() != self.k {
            return Err(Error::Clustering("one anchor required per cluster".into()));
        }
        let sizes = self.sizes();
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Clustering("empty cluster".into()));
        }
        for (c, &a) in self.anchors.iter().enumerate() {
            if a >= self.labels.len() || self.labels[a] != c {
                return Err(Error::Clustering(format!("anchor of cluster {c} is not a member")));
            }
        }
        Ok(())
    }
}

/// Relabels clusters densely, ordering them by smallest member id. Keeps
/// every downstream artifact deterministic.
pub fn canonical_relabel(labels: &mut [usize]) -> usize {
    let mut first_seen: Vec<(usize, usize)> = Vec::new(); // (smallest member, old label)
    for (i, &l) in labels.iter().enumerate() {
        if !first_seen.iter().any(|&(_, old)| old == l) {
            first_seen.push((i, l));
        }
    }
    first_seen.sort();
    let map: std::collections::BTreeMap<usize, usize> = first_seen
        .iter()
        .enumerate()
        .map(|(new, &(_, old))| (old, new))
        .collect();
    for l in labels.iter_mut() {
        *l = map[l];
    }
    map.len()
}

/// Zero-pads each component to the max width and forms
/// Z = alpha * H + beta * f + gamma * P.
pub fn fuse_representations(
    h: &Array2<f64>,
    f: &Array2<f64>,
    p: &Array2<f64>,
    mixture: (f64, f64, f64),
) -> Result<Array2<f64>> {
    let (alpha, beta, gamma) = mixture;
    if alpha < 0.0 || beta < 0.0 || gamma < 0.0 || (alpha + beta + gamma - 1.0).abs() > 1e-12 {
        return Err(Error::Clustering(format!(
            "mixture ({alpha}, {beta}, {gamma}) must be a simplex point"
        )));
    }
    let n = h.nrows();
    if f.nrows() != n || p.nrows() != n {
        return Err(Error::DimensionMismatch("H, f, P row counts differ".into()));
    }
    let d = h.ncols().max(f.ncols()).max(p.ncols());
    let mut z = Array2::zeros((n, d));
    for i in 0..n {
        for (j, v) in h.row(i).iter().enumerate() {
            z[(i, j)] += alpha * v;
        }
        for (j, v) in f.row(i).iter().enumerate() {
            z[(i, j)] += beta * v;
        }
        for (j, v) in p.row(i).iter().enumerate() {
            z[(i, j)] += gamma * v;
        }
    }
    Ok(z)
}

/// Agglomerative average-linkage clustering (UPGMA) over Euclidean distance,
/// cut at `k_final` clusters. Returns labels plus the merge-height trace.
/// Ties pick the lexicographically smallest cluster pair, so the dendrogram
/// is deterministic.
pub fn average_linkage(z: &Array2<f64>, k_final: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = z.nrows();
    if k_final == 0 || k_final > n {
        return Err(Error::Clustering(format!("k_final = {k_final} out of range")));
    }
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = z
                .row(i)
                .iter()
                .zip(z.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut sizes: Vec<usize> = vec![1; n];
    let mut cluster_of: Vec<usize> = (0..n).collect();
    let mut heights = Vec::new();
    let mut remaining = n;
    while remaining > k_final {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                if dist[i][j] < best_d {
                    best_d = dist[i][j];
                    best = (i, j);
                }
            }
        }
        let (a, b) = best;
        heights.push(best_d);
        // Lance-Williams update for UPGMA.
        let (na, nb) = (sizes[a] as f64, sizes[b] as f64);
        for o in 0..n {
            if !active[o] || o == a || o == b {
                continue;
            }
            let d = (na * dist[a][o] + nb * dist[b][o]) / (na + nb);
            dist[a][o] = d;
            dist[o][a] = d;
        }
        sizes[a] += sizes[b];
        active[b] = false;
        for c in cluster_of.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
        remaining -= 1;
    }
    canonical_relabel(&mut cluster_of);
    Ok((cluster_of, heights))
}

/// Fuses the three representations and cuts the average-linkage dendrogram to
/// `k_final` clusters; anchors re-selected from the motif profiles.
pub fn fuse_and_cluster(
    h: &Array2<f64>,
    f: &Array2<f64>,
    p: &Array2<f64>,
    mixture: (f64, f64, f64),
    k_final: usize,
) -> Result<(ClusterAssignment, Vec<f64>, Array2<f64>)> {
    let z = fuse_representations(h, f, p, mixture)?;
    let (labels, heights) = average_linkage(&z, k_final)?;
    let k = labels.iter().max().map(|&l| l + 1).unwrap_or(0);
    let d = dominant_profiles(p, &labels, k);
    let anchors = select_anchors(&labels, k, p, &d)?;
    Ok((
        ClusterAssignment { labels, k, anchors },
        heights,
        z,
    ))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub boundary_agents: usize,
    pub reassigned: usize,
    /// Reassignments skipped because they would have emptied a cluster.
    pub skipped_guard: usize,
}

/// Motif-guided boundary optimization. Agents whose two nearest Z-centroids
/// differ by less than `boundary_fraction` relative margin are reassigned to
/// the cluster maximizing pull(j, c) = cos(P_j, D_c) * conn(j, c), where conn
/// is the fraction of j's neighbors in c. Ties keep the current label; a
/// reassignment that would empty a cluster is skipped.
pub fn boundary_reassign(
    assignment: &ClusterAssignment,
    p: &Array2<f64>,
    z: &Array2<f64>,
    graph: &InteractionGraph,
    boundary_fraction: f64,
) -> Result<(ClusterAssignment, BoundaryReport)> {
    if !(boundary_fraction > 0.0 && boundary_fraction <= 1.0) {
        return Err(Error::Clustering(format!(
            "boundary_fraction {boundary_fraction} outside (0, 1]"
        )));
    }
    let n = z.nrows();
    let k = assignment.k;
    let mut labels = assignment.labels.clone();
    let mut sizes = assignment.sizes();
    let d_profiles = dominant_profiles(p, &labels, k);

    // Z-space centroids of the current clusters.
    let mut centroids: Array2<f64> = Array2::zeros((k, z.ncols()));
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..z.ncols() {
            centroids[(c, j)] += z[(i, j)];
        }
    }
    for c in 0..k {
        for j in 0..z.ncols() {
            centroids[(c, j)] /= sizes[c] as f64;
        }
    }

    let mut report = BoundaryReport::default();
    if k < 2 {
        return Ok((assignment.clone(), report));
    }
    // Pulls are evaluated against the input assignment (synchronous
    // semantics); sizes are tracked live only for the emptiness guard.
    let snapshot = &assignment.labels;
    for i in 0..n {
        let dists: Vec<f64> = (0..k)
            .map(|c| {
                z.row(i)
                    .iter()
                    .zip(centroids.row(c).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(a.cmp(&b)));
        let (d1, d2) = (dists[order[0]], dists[order[1]]);
        let rel = (d2 - d1) / d2.max(1e-12);
        if rel >= boundary_fraction {
            continue;
        }
        report.boundary_agents += 1;

        // Pull scores against every cluster.
        let nbs = graph.neighbors(i);
        let pulls: Vec<f64> = (0..k)
            .map(|c| {
                let conn = if nbs.is_empty() {
                    0.0
                } else {
                    nbs.iter().filter(|&&nb| snapshot[nb] == c).count() as f64 / nbs.len() as f64
                };
                let cos = cosine(p.row(i).to_slice().unwrap(), d_profiles.row(c).to_slice().unwrap());
                cos * conn
            })
            .collect();
        let current = snapshot[i];
        let max_pull = pulls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if pulls[current] >= max_pull {
            continue; // ties keep the current label
        }
        let target = (0..k).find(|&c| pulls[c] >= max_pull).unwrap();
        if sizes[current] == 1 {
            report.skipped_guard += 1;
            continue;
        }
        sizes[current] -= 1;
        sizes[target] += 1;
        labels[i] = target;
        report.reassigned += 1;
    }

    let d_final = dominant_profiles(p, &labels, k);
    let anchors = select_anchors(&labels, k, p, &d_final)?;
    Ok((
        ClusterAssignment { labels, k, anchors },
        report,
    ))
}

/// Softmax over the absolute values of a signed profile row; the merge
/// criterion's JS divergence operates on these distributions.
pub fn softmax_abs(row: &[f64]) -> Vec<f64> {
    let m = row.iter().map(|v| v.abs()).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v.abs() - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// L1 normalization of |row| for the split criterion's entropy. A zero row
/// (fully washed-out mean profile) reads as the uniform distribution, i.e.
/// maximal entropy. Softmax would flatten every profile toward uniform and
/// make the entropy threshold meaningless.
pub fn l1_abs_distribution(row: &[f64]) -> Vec<f64> {
    let sum: f64 = row.iter().map(|v| v.abs()).sum();
    if sum <= 0.0 {
        return vec![1.0 / row.len() as f64; row.len()];
    }
    row.iter().map(|v| v.abs() / sum).collect()
}

/// Jensen-Shannon divergence in bits between two distributions.
pub fn js_divergence_bits(p: &[f64], q: &[f64]) -> f64 {
    let kl_bits = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * kl_bits(p, &m) + 0.5 * kl_bits(q, &m)
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MergeSplitReport {
    pub merges: usize,
    pub splits: usize,
}

/// One merge pass followed by one split pass.
///
/// Merge: cluster pairs whose dominant profiles point the same way
/// (cos(D_i, D_j) > 0) and whose L1-normalized |D| rows sit closer than
/// `theta_merge` bits of JS divergence are merged transitively; the smallest
/// cluster id wins. Split: clusters whose dominant-profile entropy exceeds
/// `theta_split` bits are split by 2-means on the member profiles.
pub fn merge_split(
    assignment: &ClusterAssignment,
    p: &Array2<f64>,
    theta_merge: f64,
    theta_split: f64,
    seed: u64,
) -> Result<(ClusterAssignment, MergeSplitReport)> {
    if theta_merge < 0.0 || theta_split < 0.0 {
        return Err(Error::Clustering("thresholds must be non-negative".into()));
    }
    let mut labels = assignment.labels.clone();
    let k = assignment.k;
    let mut report = MergeSplitReport::default();

    // Merge pass: union-find over cluster pairs under the JS threshold.
    let d = dominant_profiles(p, &labels, k);
    let dists: Vec<Vec<f64>> = (0..k)
        .map(|c| l1_abs_distribution(d.row(c).to_slice().unwrap()))
        .collect();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for a in 0..k {
        for b in (a + 1)..k {
            let sign_compatible =
                cosine(d.row(a).to_slice().unwrap(), d.row(b).to_slice().unwrap()) > 0.0;
            if sign_compatible && js_divergence_bits(&dists[a], &dists[b]) < theta_merge {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    // smallest-id label wins
                    let (lo, hi) = (ra.min(rb), ra.max(rb));
                    parent[hi] = lo;
                    report.merges += 1;
                }
            }
        }
    }
    if report.merges > 0 {
        for l in labels.iter_mut() {
            *l = find(&mut parent, *l);
        }
        canonical_relabel(&mut labels);
    }

    // Split pass: entropy of the merged clusters' dominant profiles.
    let k_merged = labels.iter().max().map(|&l| l + 1).unwrap_or(0);
    let d_merged = dominant_profiles(p, &labels, k_merged);
    let mut next_label = k_merged;
    for c in 0..k_merged {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        let h = entropy_bits(&l1_abs_distribution(d_merged.row(c).to_slice().unwrap()));
        if h <= theta_split {
            continue;
        }
        // 2-means on the member profiles.
        let mut sub = Array2::zeros((members.len(), p.ncols()));
        for (row, &i) in members.iter().enumerate() {
            for j in 0..p.ncols() {
                sub[(row, j)] = p[(i, j)];
            }
        }
        // All-identical member profiles cannot split.
        let first = sub.row(0).to_vec();
        if members.len() < 2
            || (1..members.len()).all(|r| sub.row(r).iter().zip(&first).all(|(a, b)| a == b))
        {
            continue;
        }
        let km = kmeans(&sub, 2, seed ^ (c as u64).wrapping_mul(0x9e37), 100)?;
        if km.labels.iter().all(|&l| l == km.labels[0]) {
            continue;
        }
        for (row, &i) in members.iter().enumerate() {
            if km.labels[row] == 1 {
                labels[i] = next_label;
            }
        }
        next_label += 1;
        report.splits += 1;
    }
    let k_final = canonical_relabel(&mut labels);
    let d_final = dominant_profiles(p, &labels, k_final);
    let anchors = select_anchors(&labels, k_final, p, &d_final)?;
    Ok((
        ClusterAssignment {
            labels,
            k: k_final,
            anchors,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fusion_with_alpha_one_ignores_f_and_p() {
        let h = ndarray::array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]];
        let f1 = ndarray::array![[5.0], [6.0], [7.0], [8.0]];
        let f2 = ndarray::array![[8.0], [7.0], [6.0], [5.0]]; // permuted
        let p = ndarray::array![[0.1, 0.2], [0.2, 0.1], [0.3, 0.3], [0.4, 0.4]];
        let (a1, _, _) = fuse_and_cluster(&h, &f1, &p, (1.0, 0.0, 0.0), 2).unwrap();
        let (a2, _, _) = fuse_and_cluster(&h, &f2, &p, (1.0, 0.0, 0.0), 2).unwrap();
        assert_eq!(a1.labels, a2.labels);
    }

    #[test]
    fn identical_pairs_group_together() {
        let h = ndarray::array![[0.0, 0.0], [0.0, 0.0], [9.0, 9.0], [9.0, 9.0]];
        let f = Array2::zeros((4, 1));
        let p = ndarray::array![[0.5, 0.5], [0.5, 0.5], [-0.5, -0.5], [-0.5, -0.5]];
        let (a, _, _) = fuse_and_cluster(&h, &f, &p, (0.5, 0.0, 0.5), 2).unwrap();
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[2], a.labels[3]);
        assert_ne!(a.labels[0], a.labels[2]);
    }

    #[test]
    fn off_simplex_mixture_rejected() {
        let h = Array2::zeros((3, 2));
        let f = Array2::zeros((3, 2));
        let p = Array2::zeros((3, 2));
        assert!(fuse_representations(&h, &f, &p, (0.5, 0.5, 0.5)).is_err());
        assert!(fuse_representations(&h, &f, &p, (1.2, -0.2, 0.0)).is_err());
    }

    #[test]
    fn dendrogram_heights_non_decreasing() {
        let mut rng = crate::rng::Stream::keyed(9, "linkage", &[]);
        let z = Array2::from_shape_fn((25, 3), |_| rng.uniform_range(-1.0, 1.0));
        let (_, heights) = average_linkage(&z, 1).unwrap();
        for w in heights.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "heights decreased: {} -> {}", w[0], w[1]);
        }
    }

    fn toy_assignment(labels: Vec<usize>, p: &Array2<f64>) -> ClusterAssignment {
        let k = labels.iter().max().unwrap() + 1;
        let d = dominant_profiles(p, &labels, k);
        let anchors = select_anchors(&labels, k, p, &d).unwrap();
        ClusterAssignment { labels, k, anchors }
    }

    #[test]
    fn settled_agent_keeps_its_label() {
        // agent 0: all neighbors in its own cluster, positive profile cosine.
        let p = ndarray::array![[0.9, 0.1], [0.8, 0.2], [0.7, 0.1], [-0.9, -0.1], [-0.8, -0.3]];
        let z = ndarray::array![[1.0, 0.0], [1.0, 0.1], [0.95, 0.0], [-1.0, 0.0], [-1.0, -0.1]];
        let g = InteractionGraph::build(
            5,
            vec![("l".into(), vec![(0, 1, 1.0), (0, 2, 1.0), (3, 4, 1.0)])],
        )
        .unwrap();
        let a = toy_assignment(vec![0, 0, 0, 1, 1], &p);
        // boundary_fraction = 1.0 marks everyone as boundary
        let (out, _) = boundary_reassign(&a, &p, &z, &g, 1.0).unwrap();
        assert_eq!(out.labels[0], 0);
    }

    #[test]
    fn isolated_agent_keeps_label_on_all_zero_pulls() {
        let p = ndarray::array![[0.9, 0.1], [0.8, 0.2], [-0.9, -0.1], [-0.8, -0.3], [0.5, 0.5]];
        let z = ndarray::array![[1.0, 0.0], [1.0, 0.1], [-1.0, 0.0], [-1.0, -0.1], [0.0, 0.0]];
        // agent 4 isolated
        let g = InteractionGraph::build(
            5,
            vec![("l".into(), vec![(0, 1, 1.0), (2, 3, 1.0)])],
        )
        .unwrap();
        let a = toy_assignment(vec![0, 0, 1, 1, 0], &p);
        let (out, _) = boundary_reassign(&a, &p, &z, &g, 1.0).unwrap();
        assert_eq!(out.labels[4], 0);
    }

    #[test]
    fn reassignments_match_exhaustive_pull_evaluation() {
        let mut rng = crate::rng::Stream::keyed(21, "pull", &[]);
        let n = 18;
        let p = Array2::from_shape_fn((n, 3), |_| rng.uniform_range(-1.0, 1.0));
        let z = Array2::from_shape_fn((n, 2), |_| rng.uniform_range(-1.0, 1.0));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.uniform() < 0.25 {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = InteractionGraph::build(n, vec![("l".into(), edges)]).unwrap();
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let a = toy_assignment(labels.clone(), &p);
        let (out, _) = boundary_reassign(&a, &p, &z, &g, 1.0).unwrap();
        // Brute-force expectation over all (agent, cluster) pulls.
        let d = dominant_profiles(&p, &labels, 3);
        let mut sizes = vec![0usize; 3];
        for &l in &labels {
            sizes[l] += 1;
        }
        let mut expected = labels.clone();
        for i in 0..n {
            let pulls: Vec<f64> = (0..3)
                .map(|c| {
                    let nbs = g.neighbors(i);
                    let conn = if nbs.is_empty() {
                        0.0
                    } else {
                        nbs.iter().filter(|&&nb| labels[nb] == c).count() as f64 / nbs.len() as f64
                    };
                    cosine(p.row(i).to_slice().unwrap(), d.row(c).to_slice().unwrap()) * conn
                })
                .collect();
            let max = pulls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if pulls[labels[i]] >= max {
                continue;
            }
            let target = (0..3).find(|&c| pulls[c] >= max).unwrap();
            if sizes[labels[i]] == 1 {
                continue;
            }
            sizes[labels[i]] -= 1;
            sizes[target] += 1;
            expected[i] = target;
        }
        assert_eq!(out.labels, expected);
    }

    #[test]
    fn js_hand_example_is_one_bit() {
        let p = [1.0, 0.0, 0.0];
        let q = [0.0, 1.0, 0.0];
        assert!((js_divergence_bits(&p, &q) - 1.0).abs() < 1e-12);
        assert!(js_divergence_bits(&p, &p).abs() < 1e-12);
    }

    #[test]
    fn identical_dominant_profiles_merge() {
        let p = ndarray::array![[0.5, -0.5], [0.5, -0.5], [0.5, -0.5], [0.5, -0.5]];
        let a = toy_assignment(vec![0, 0, 1, 1], &p);
        let (out, report) = merge_split(&a, &p, 0.01, 10.0, 1).unwrap();
        assert_eq!(report.merges, 1);
        assert_eq!(out.k, 1);
    }

    #[test]
    fn uniform_profiles_split_iff_threshold_below_log2_km() {
        // Mean profile (0 dimensions differing): entropy = log2(K_m) = 2 bits
        // for K_m = 4. Members split into two opposite archetypes.
        let mut rows = Vec::new();
        for i in 0..8 {
            if i < 4 {
                rows.push([0.8, 0.8, 0.8, 0.8]);
            } else {
                rows.push([-0.8, -0.8, -0.8, -0.8]);
            }
        }
        let p = Array2::from_shape_fn((8, 4), |(i, j)| rows[i][j]);
        let a = toy_assignment(vec![0; 8], &p);
        // theta_split above log2(4) = 2: no split
        let (out, report) = merge_split(&a, &p, 0.0, 2.5, 3).unwrap();
        assert_eq!(report.splits, 0);
        assert_eq!(out.k, 1);
        // theta_split below 2 bits: split fires
        let (out, report) = merge_split(&a, &p, 0.0, 1.9, 3).unwrap();
        assert_eq!(report.splits, 1);
        assert_eq!(out.k, 2);
        // The split separates the two archetypes.
        assert_eq!(out.labels[0], out.labels[3]);
        assert_eq!(out.labels[4], out.labels[7]);
        assert_ne!(out.labels[0], out.labels[4]);
    }

    #[test]
    fn merge_split_idempotent_on_settled_partition() {
        let mut rng = crate::rng::Stream::keyed(33, "ms", &[]);
        // Three well-separated archetypes with mild noise.
        let archetypes = [[0.9, -0.1, 0.0], [-0.1, 0.9, 0.0], [0.0, -0.1, 0.9]];
        let n = 24;
        let p = Array2::from_shape_fn((n, 3), |(i, j)| archetypes[i % 3][j] + 0.03 * rng.normal());
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let a = toy_assignment(labels, &p);
        let theta_split = 0.9 * (3.0f64).log2();
        let (once, _) = merge_split(&a, &p, 0.05, theta_split, 5).unwrap();
        let (twice, report) = merge_split(&once, &p, 0.05, theta_split, 5).unwrap();
        assert_eq!(once.labels, twice.labels);
        assert_eq!(report.merges + report.splits, 0);
    }

    #[test]
    fn canonical_relabel_orders_by_first_member() {
        let mut labels = vec![2, 2, 0, 1, 0];
        let k = canonical_relabel(&mut labels);
        assert_eq!(k, 3);
        assert_eq!(labels, vec![0, 0, 1, 2, 1]);
    }
}
