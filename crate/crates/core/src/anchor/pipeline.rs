//! The four-stage clustering pipeline: structural-semantic initialization,
//! behavioral motif discovery, anchor-guided contrastive refinement, and
//! hybrid fusion with boundary optimization and merge/split adaptation.

use crate::anchor::cluster::{
    boundary_reassign, fuse_and_cluster, merge_split, BoundaryReport, ClusterAssignment,
    MergeSplitReport,
};
use crate::anchor::embed::structural_embed;
use crate::anchor::motifs::{
    dominant_profiles, extract_motifs, run_diagnostic_scenarios, select_anchors,
};
use crate::anchor::quality::{quality, silhouette, ClusterQualityReport};
use crate::anchor::refine::{refine_contrastive, AnchorJudgment, RefineConfig};
use crate::anchor::spectral::coarse_cluster;
use crate::error::Result;
use crate::model::{AgentProfile, InteractionGraph};
use crate::symbolic::{BehaviorBackend, ContextProbe};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorConfig {
    pub sage_layers: usize,
    pub d_h: usize,
    pub k_coarse: usize,
    pub k_m: usize,
    pub k_final: usize,
    pub tau: f64,
    pub epochs: usize,
    pub step_size: f64,
    pub d_f: usize,
    /// (alpha, beta, gamma) over (H, f, P); must sum to 1.
    pub mixture: (f64, f64, f64),
    pub boundary_fraction: f64,
    pub theta_merge: f64,
    /// Defaults to 0.9 * log2(k_m) when absent.
    pub theta_split: Option<f64>,
    pub seed: u64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self {
            sage_layers: 2,
            d_h: 16,
            k_coarse: 6,
            k_m: 4,
            k_final: 4,
            tau: 0.5,
            epochs: 200,
            step_size: 0.2,
            d_f: 16,
            mixture: (0.2, 0.4, 0.4),
            boundary_fraction: 0.1,
            theta_merge: 0.05,
            theta_split: None,
            seed: 0,
        }
    }
}

impl AnchorConfig {
    pub fn split_threshold(&self) -> f64 {
        self.theta_split
            .unwrap_or(0.9 * (self.k_m as f64).log2())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSnapshot {
    pub stage: String,
    pub k: usize,
    pub modularity: f64,
    pub silhouette: f64,
}

pub struct AnchorResult {
    pub assignment: ClusterAssignment,
    pub coarse_labels: Vec<usize>,
    pub h: Array2<f64>,
    pub p: Array2<f64>,
    pub f: Array2<f64>,
    pub z: Array2<f64>,
    pub motif_descriptors: Vec<String>,
    pub quality: ClusterQualityReport,
    pub boundary: BoundaryReport,
    pub merge_split: MergeSplitReport,
    pub snapshots: Vec<StageSnapshot>,
}

/// Column-standardized attribute matrix over the union of attribute names
/// (sorted); missing attributes read as 0 before standardization.
pub fn attribute_matrix(profiles: &[AgentProfile]) -> (Array2<f64>, Vec<String>) {
    let names: BTreeSet<String> = profiles
        .iter()
        .flat_map(|p| p.attributes.keys().cloned())
        .collect();
    let names: Vec<String> = names.into_iter().collect();
    let n = profiles.len();
    let d = names.len().max(1);
    let mut x = Array2::zeros((n, d));
    for (i, p) in profiles.iter().enumerate() {
        for (j, name) in names.iter().enumerate() {
            x[(i, j)] = p.attribute(name);
        }
    }
    // z-score each column; constant columns become zero.
    for j in 0..x.ncols() {
        let col: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
        let mean = col.iter().sum::<f64>() / n.max(1) as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
        let std = var.sqrt();
        for i in 0..n {
            x[(i, j)] = if std > 1e-12 { (x[(i, j)] - mean) / std } else { 0.0 };
        }
    }
    (x, names)
}

/// Stage 1 alone: structural embedding + spectral coarse clustering. Exposed
/// so structure-only baselines can be compared against the full pipeline.
pub fn stage1_coarse(
    graph: &InteractionGraph,
    profiles: &[AgentProfile],
    config: &AnchorConfig,
) -> Result<(Vec<usize>, Array2<f64>, Array2<f64>)> {
    let (x, _) = attribute_matrix(profiles);
    let h = structural_embed(graph, &x, config.sage_layers, config.d_h, config.seed)?.h;
    let mut y = Array2::zeros((h.nrows(), h.ncols() + x.ncols()));
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            y[(i, j)] = h[(i, j)];
        }
        for j in 0..x.ncols() {
            y[(i, h.ncols() + j)] = x[(i, j)];
        }
    }
    let labels = coarse_cluster(&y, config.k_coarse.min(graph.n()), config.seed)?;
    Ok((labels, h, y))
}

/// Runs all four stages. Deterministic for a fixed seed under the oracle
/// behavior backend.
pub fn run_anchor(
    graph: &InteractionGraph,
    profiles: &[AgentProfile],
    probes: &[ContextProbe],
    backend: &dyn BehaviorBackend,
    config: &AnchorConfig,
) -> Result<AnchorResult> {
    let mut snapshots = Vec::new();

    // Stage 1: structural-semantic initialization.
    let (coarse_labels, h, y) = stage1_coarse(graph, profiles, config)?;
    let k_coarse = coarse_labels.iter().max().map(|&l| l + 1).unwrap_or(0);
    {
        let (sil, _) = silhouette(&y, &coarse_labels);
        snapshots.push(StageSnapshot {
            stage: "structural_init".into(),
            k: k_coarse,
            modularity: crate::anchor::quality::modularity(graph, &coarse_labels),
            silhouette: sil,
        });
    }

    // Stage 2: behavioral motif discovery.
    let responses = run_diagnostic_scenarios(profiles, probes, backend)?;
    let motifs = extract_motifs(&responses, config.k_m, config.seed)?;
    let d_coarse = dominant_profiles(&motifs.p, &coarse_labels, k_coarse);
    {
        let (sil, _) = silhouette(&motifs.p, &coarse_labels);
        snapshots.push(StageSnapshot {
            stage: "motif_discovery".into(),
            k: k_coarse,
            modularity: crate::anchor::quality::modularity(graph, &coarse_labels),
            silhouette: sil,
        });
    }

    // Stage 3: anchor-guided contrastive refinement.
    let anchors = select_anchors(&coarse_labels, k_coarse, &motifs.p, &d_coarse)?;
    let mut judgments = AnchorJudgment::new();
    for (a, &anchor) in anchors.iter().enumerate() {
        let anchor_profile = motifs.p.row(anchor).to_vec();
        for j in 0..profiles.len() {
            let q = backend.judge(&anchor_profile, &motifs.p.row(j).to_vec())?;
            judgments.insert((a, j), q.clamp(0.0, 1.0));
        }
    }
    let ctx = responses.mean_per_agent();
    let refine_config = RefineConfig {
        tau: config.tau,
        epochs: config.epochs,
        step_size: config.step_size,
        d_f: config.d_f,
        seed: config.seed,
    };
    let refined = refine_contrastive(
        &h,
        &motifs.p,
        &ctx,
        &anchors,
        &coarse_labels,
        &judgments,
        &refine_config,
    )?;
    {
        let (sil, _) = silhouette(&refined.f, &coarse_labels);
        snapshots.push(StageSnapshot {
            stage: "contrastive_refinement".into(),
            k: k_coarse,
            modularity: crate::anchor::quality::modularity(graph, &coarse_labels),
            silhouette: sil,
        });
    }

    // Stage 4: hybrid fusion, boundary optimization, merge/split.
    let (fused, _heights, z) =
        fuse_and_cluster(&h, &refined.f, &motifs.p, config.mixture, config.k_final)?;
    let (reassigned, boundary) =
        boundary_reassign(&fused, &motifs.p, &z, graph, config.boundary_fraction)?;
    let (final_assignment, ms_report) = merge_split(
        &reassigned,
        &motifs.p,
        config.theta_merge,
        config.split_threshold(),
        config.seed,
    )?;
    final_assignment.validate()?;
    let report = quality(graph, &final_assignment.labels, &z, &motifs.p)?;
    snapshots.push(StageSnapshot {
        stage: "hybrid_fusion".into(),
        k: final_assignment.k,
        modularity: report.modularity,
        silhouette: report.silhouette,
    });

    Ok(AnchorResult {
        assignment: final_assignment,
        coarse_labels,
        h,
        p: motifs.p,
        f: refined.f,
        z,
        motif_descriptors: motifs.descriptors,
        quality: report,
        boundary,
        merge_split: ms_report,
        snapshots,
    })
}

/// Coarse simplex grid search for the fusion mixture, maximizing silhouette
/// of the resulting partition. Step 0.1 over the simplex.
pub fn grid_search_mixture(
    h: &Array2<f64>,
    f: &Array2<f64>,
    p: &Array2<f64>,
    k_final: usize,
) -> Result<(f64, f64, f64)> {
    let mut best = (0.2, 0.4, 0.4);
    let mut best_sil = f64::NEG_INFINITY;
    let steps = 10usize;
    for ai in 0..=steps {
        for bi in 0..=(steps - ai) {
            let alpha = ai as f64 / steps as f64;
            let beta = bi as f64 / steps as f64;
            let gamma = 1.0 - alpha - beta;
            let (assignment, _, z) = fuse_and_cluster(h, f, p, (alpha, beta, gamma.max(0.0)), k_final)?;
            let (sil, degenerate) = silhouette(&z, &assignment.labels);
            if !degenerate && sil > best_sil {
                best_sil = sil;
                best = (alpha, beta, gamma);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchor::quality::adjusted_rand_index;
    use crate::model::synthetic_layers;
    use crate::symbolic::OracleBehavior;
    use std::collections::BTreeMap;

    /// Population with three planted behavioral regimes on a topology that
    /// carries no regime signal.
    pub(crate) fn planted_population(
        n: usize,
        seed: u64,
    ) -> (InteractionGraph, Vec<AgentProfile>, Vec<usize>) {
        let mut rng = crate::rng::Stream::keyed(seed, "planted-pop", &[n as u64]);
        let graph = InteractionGraph::build(n, synthetic_layers(n, 6.0, seed)).unwrap();
        let mut profiles = Vec::with_capacity(n);
        let mut regimes = Vec::with_capacity(n);
        for id in 0..n {
            let regime = id % 3;
            regimes.push(regime);
            // Archetypes differ in behavioral attributes only, one dominant
            // behavioral axis per regime.
            let (ra, ca, co) = match regime {
                0 => (0.9, 0.1, 0.05),
                1 => (0.05, 0.9, 0.1),
                _ => (0.1, 0.05, 0.9),
            };
            let mut attributes = BTreeMap::new();
            attributes.insert("risk_aversion".to_string(), ra + 0.05 * rng.normal());
            attributes.insert("caution".to_string(), ca + 0.05 * rng.normal());
            attributes.insert("compliance".to_string(), co + 0.05 * rng.normal());
            // Demographic noise attributes shared across regimes.
            attributes.insert("age".to_string(), rng.uniform_range(0.0, 1.0));
            profiles.push(AgentProfile {
                id,
                attributes,
                susceptibility: BTreeMap::new(),
            });
        }
        (graph, profiles, regimes)
    }

    pub(crate) fn epi_probes() -> Vec<ContextProbe> {
        vec![
            ContextProbe { name: "home_restrictions".into(), intensity: vec![0.4, 0.9, 0.3] },
            ContextProbe { name: "workplace_mandate".into(), intensity: vec![0.7, 0.2, 1.0] },
            ContextProbe { name: "community_outbreak".into(), intensity: vec![1.0, 0.6, 0.5] },
        ]
    }

    #[test]
    fn full_pipeline_recovers_planted_regimes_and_beats_stage1() {
        let (graph, profiles, regimes) = planted_population(120, 7);
        let backend = OracleBehavior::default_epi();
        let config = AnchorConfig {
            k_coarse: 6,
            k_m: 3,
            k_final: 3,
            seed: 13,
            ..Default::default()
        };
        let result = run_anchor(&graph, &profiles, &epi_probes(), &backend, &config).unwrap();
        let ari_full = adjusted_rand_index(&result.assignment.labels, &regimes);
        let ari_stage1 = adjusted_rand_index(&result.coarse_labels, &regimes);
        assert!(ari_full >= 0.9, "full ARI {ari_full}");
        assert!(
            ari_stage1 < ari_full,
            "stage1 ARI {ari_stage1} not below full {ari_full}"
        );
    }

    #[test]
    fn pipeline_is_deterministic_for_fixed_seed() {
        let (graph, profiles, _) = planted_population(60, 3);
        let backend = OracleBehavior::default_epi();
        let config = AnchorConfig {
            k_coarse: 4,
            k_m: 3,
            k_final: 3,
            epochs: 50,
            seed: 5,
            ..Default::default()
        };
        let a = run_anchor(&graph, &profiles, &epi_probes(), &backend, &config).unwrap();
        let b = run_anchor(&graph, &profiles, &epi_probes(), &backend, &config).unwrap();
        assert_eq!(a.assignment.labels, b.assignment.labels);
        assert_eq!(a.assignment.anchors, b.assignment.anchors);
        assert_eq!(a.quality.modularity, b.quality.modularity);
    }

    #[test]
    fn modularity_of_two_clique_partition_is_bruteforce_optimal() {
        // Two 6-node cliques joined by one bridge edge; enumerate all
        // 2-partitions for the optimum.
        let mut edges = Vec::new();
        for base in [0usize, 6] {
            for a in base..base + 6 {
                for b in (a + 1)..base + 6 {
                    edges.push((a, b, 1.0));
                }
            }
        }
        edges.push((0, 6, 1.0));
        let graph = InteractionGraph::build(12, vec![("l".into(), edges)]).unwrap();
        let mut best_q = f64::NEG_INFINITY;
        for mask in 0u32..(1 << 11) {
            let labels: Vec<usize> = (0..12)
                .map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize })
                .collect();
            best_q = best_q.max(crate::anchor::quality::modularity(&graph, &labels));
        }
        let clique_labels: Vec<usize> = (0..12).map(|i| usize::from(i >= 6)).collect();
        let q = crate::anchor::quality::modularity(&graph, &clique_labels);
        assert!((q - best_q).abs() < 1e-12, "clique partition {q} vs optimum {best_q}");
    }
}
