//! Neural hazard pathway: multimodal cluster-day features and an ensemble
//! feed-forward regressor with spread-based uncertainty.

pub mod features;
pub mod mlp;
pub mod regressor;

pub use features::{assemble_features, linear_trend, FeatureManifest, DEGREE_STATS};
pub use mlp::Mlp;
pub use regressor::{
    class_weights, ensemble_stats, train_regressor, HazardRegressor, RegressorHyper,
    TrainingInstance,
};
