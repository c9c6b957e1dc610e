//! Behavior-aware agent clustering.
//!
//! Four stages: structural-semantic initialization (topology embedding +
//! spectral coarse clusters), behavioral motif discovery (diagnostic probes
//! + motif profiles), anchor-guided contrastive refinement (judgment-coupled
//! contrastive loss on a learned linear encoding), and hybrid fusion with
//! boundary optimization, merge/split adaptation, and quality monitoring.

pub mod cluster;
pub mod embed;
pub mod kmeans;
pub mod motifs;
pub mod pipeline;
pub mod quality;
pub mod refine;
pub mod spectral;

pub use cluster::{
    average_linkage, boundary_reassign, canonical_relabel, entropy_bits, fuse_and_cluster,
    fuse_representations, js_divergence_bits, l1_abs_distribution, merge_split, softmax_abs,
    BoundaryReport, ClusterAssignment, MergeSplitReport,
};
pub use embed::{structural_embed, StructuralEmbedding};
pub use kmeans::{kmeans, KMeansResult};
pub use motifs::{
    dominant_profiles, extract_motifs, run_diagnostic_scenarios, select_anchors, MotifProfile,
    ProbeResponses,
};
pub use pipeline::{
    attribute_matrix, grid_search_mixture, run_anchor, stage1_coarse, AnchorConfig, AnchorResult,
    StageSnapshot,
};
pub use quality::{
    adjusted_rand_index, modularity, motif_coherence, quality, silhouette, ClusterQualityReport,
};
pub use refine::{
    encode_inputs, loss_and_grad, refine_contrastive, AnchorJudgment, RefineConfig,
    RefinedRepresentation,
};
