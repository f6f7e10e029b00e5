//! Dependency extraction and change propagation: per-article manifests, the
//! library DAG, dirty sets and parallel scheduling layers.

pub mod graph;
pub mod manifest;

pub use graph::{compute_dirty, topo_order, DependencyGraph, DirtySet, GraphError};
pub use manifest::{
    extract_deps, load_manifests, refresh_manifests, DepManifest, ExtractError, ManifestError,
    RefreshOutcome,
};

/// Directory holding generated dependency manifests, relative to the
/// library root. Excluded from version control like all generated files.
pub const MANIFEST_DIR: &str = "deps";
