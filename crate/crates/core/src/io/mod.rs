//! Configuration and dataset plumbing: the scenario file format, CSV
//! artifacts, ground-truth ingestion, synthetic generators, and run
//! manifests.

pub mod csv_io;
pub mod generate;
pub mod ingest;
pub mod manifest;
pub mod scenario_file;
pub mod store;

pub use generate::{generate, GeneratorParams, Template};
pub use ingest::{
    ingest_case_timelines, ingest_index_series, ingest_pageviews, normalize_minmax, IngestReport,
    Regime, RejectedRow,
};
pub use manifest::{fnv1a_hex, RunManifest};
pub use store::{load_scenario, save_scenario, SCENARIO_FILE};
