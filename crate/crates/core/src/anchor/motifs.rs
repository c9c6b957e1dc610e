//! Behavioral motif discovery from diagnostic probe responses.

use crate::anchor::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::model::AgentProfile;
use crate::rng::Stream;
use crate::symbolic::{BehaviorBackend, ContextProbe};
use ndarray::Array2;

/// Per-agent, per-probe response vectors from the behavior backend.
#[derive(Debug, Clone)]
pub struct ProbeResponses {
    /// responses[agent][probe] is a fixed-width vector in [-1, 1] per dim.
    pub responses: Vec<Vec<Vec<f64>>>,
    pub dims: Vec<String>,
    pub probe_names: Vec<String>,
}

impl ProbeResponses {
    /// Mean response vector per agent across probes (the context component of
    /// the refined encoding).
    pub fn mean_per_agent(&self) -> Array2<f64> {
        let n = self.responses.len();
        let d = self.dims.len();
        let mut out = Array2::zeros((n, d));
        for (i, per_probe) in self.responses.iter().enumerate() {
            for resp in per_probe {
                for (j, v) in resp.iter().enumerate() {
                    out[(i, j)] += v;
                }
            }
            if !per_probe.is_empty() {
                for j in 0..d {
                    out[(i, j)] /= per_probe.len() as f64;
                }
            }
        }
        out
    }
}

/// Runs every (agent, probe) pair through the backend. Responses are merged
/// by key, so concurrent backends cannot reorder the output.
pub fn run_diagnostic_scenarios(
    profiles: &[AgentProfile],
    probes: &[ContextProbe],
    backend: &dyn BehaviorBackend,
) -> Result<ProbeResponses> {
    if probes.is_empty() {
        return Err(Error::Clustering("need at least one diagnostic probe".into()));
    }
    let dims = backend.dims().to_vec();
    let mut responses = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let mut per_probe = Vec::with_capacity(probes.len());
        for probe in probes {
            let r = backend.probe_response(profile, probe)?;
            if r.len() != dims.len() {
                return Err(Error::DimensionMismatch(format!(
                    "backend returned {} dims, expected {}",
                    r.len(),
                    dims.len()
                )));
            }
            for &v in &r {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Clustering(format!("response value {v} outside [-1, 1]")));
                }
            }
            per_probe.push(r);
        }
        responses.push(per_probe);
    }
    Ok(ProbeResponses {
        responses,
        dims,
        probe_names: probes.iter().map(|p| p.name.clone()).collect(),
    })
}

/// Agent motif profiles: signed mean projections of each agent's responses
/// onto the k-means centroids of the pooled response set.
#[derive(Debug, Clone)]
pub struct MotifProfile {
    /// n x k_m signed scores in [-1, 1].
    pub p: Array2<f64>,
    pub descriptors: Vec<String>,
    pub centroids: Array2<f64>,
}

pub fn extract_motifs(responses: &ProbeResponses, k_m: usize, seed: u64) -> Result<MotifProfile> {
    if k_m < 2 {
        return Err(Error::Clustering(format!("k_m = {k_m} must be >= 2")));
    }
    let d = responses.dims.len();
    let pooled: Vec<Vec<f64>> = responses
        .responses
        .iter()
        .flat_map(|per_probe| per_probe.iter().cloned())
        .collect();
    let mut distinct = pooled.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < k_m {
        return Err(Error::Clustering(format!(
            "only {} distinct response vectors for k_m = {k_m}",
            distinct.len()
        )));
    }
    let mut data = Array2::zeros((pooled.len(), d));
    for (i, r) in pooled.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            data[(i, j)] = *v;
        }
    }
    let km = kmeans(&data, k_m, seed, 100)?;

    // Unit centroid directions with a sign from the dominant dimension; the
    // scale 1/sqrt(d) bounds each projection of a [-1, 1]^d response by 1.
    let mut unit = Array2::zeros((k_m, d));
    let mut signs = vec![1.0; k_m];
    let mut descriptors = Vec::with_capacity(k_m);
    for k in 0..k_m {
        let row = km.centroids.row(k);
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dominant = (0..d)
            .max_by(|&a, &b| row[a].abs().partial_cmp(&row[b].abs()).unwrap().then(b.cmp(&a)))
            .unwrap_or(0);
        if row[dominant] < 0.0 {
            signs[k] = -1.0;
        }
        if norm > 0.0 {
            for j in 0..d {
                unit[(k, j)] = row[j] / norm;
            }
        }
        descriptors.push(format!(
            "motif_{k}: dominant {} ({})",
            responses.dims[dominant],
            if signs[k] >= 0.0 { "positive" } else { "negative" }
        ));
    }

    let n = responses.responses.len();
    let scale = 1.0 / (d as f64).sqrt();
    let mut p = Array2::zeros((n, k_m));
    for (i, per_probe) in responses.responses.iter().enumerate() {
        for k in 0..k_m {
            let mut mean_proj = 0.0;
            for r in per_probe {
                let dot: f64 = r.iter().zip(unit.row(k).iter()).map(|(a, b)| a * b).sum();
                mean_proj += dot;
            }
            if !per_probe.is_empty() {
                mean_proj /= per_probe.len() as f64;
            }
            p[(i, k)] = (signs[k] * mean_proj * scale).clamp(-1.0, 1.0);
        }
    }
    Ok(MotifProfile {
        p,
        descriptors,
        centroids: km.centroids,
    })
}

/// Per-cluster dominant profile: row c is the arithmetic mean of member
/// profiles.
pub fn dominant_profiles(p: &Array2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let k_m = p.ncols();
    let mut d = Array2::zeros((k, k_m));
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for j in 0..k_m {
            d[(c, j)] += p[(i, j)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for j in 0..k_m {
                d[(c, j)] /= counts[c] as f64;
            }
        }
    }
    d
}

/// Anchor selection: the member whose profile is nearest (Euclidean) to its
/// cluster's dominant profile; ties break to the lowest agent id.
pub fn select_anchors(labels: &[usize], k: usize, p: &Array2<f64>, d: &Array2<f64>) -> Result<Vec<usize>> {
    let mut anchors = vec![usize::MAX; k];
    let mut best = vec![f64::INFINITY; k];
    for (i, &c) in labels.iter().enumerate() {
        let dist: f64 = p
            .row(i)
            .iter()
            .zip(d.row(c).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if dist < best[c] {
            best[c] = dist;
            anchors[c] = i;
        }
    }
    if let Some(c) = anchors.iter().position(|&a| a == usize::MAX) {
        return Err(Error::Clustering(format!("cluster {c} is empty")));
    }
    Ok(anchors)
}

/// Shuffles pooled responses deterministically; exposed for tests that need
/// order-insensitivity evidence.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    Stream::keyed(seed, "shuffle-idx", &[]).shuffle(&mut idx);
    idx
}
