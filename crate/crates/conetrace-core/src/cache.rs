//! Content-addressed cache for enumeration results.
//!
//! Keys are (graph content hash, length bound, diffraction bound); entries are
//! JSON files under the directory named by `CONETRACE_CACHE`, falling back to
//! `.conetrace-cache/` in the working directory. A corrupt or unreadable entry
//! is treated as a miss.

use crate::enumerate::{enumerate_closed_chains, ClosedChain, EnumError};
use crate::geometry::ConeGraph;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CACHE_ENV_VAR: &str = "CONETRACE_CACHE";
pub const DEFAULT_CACHE_DIR: &str = ".conetrace-cache";

/// Cache directory from the environment, or the in-tree default.
pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    graph_hash: String,
    length_bound: f64,
    diffraction_bound: usize,
    chains: Vec<ClosedChain>,
}

fn entry_path(dir: &Path, graph_hash: &str, length_bound: f64, diffraction_bound: usize) -> PathBuf {
    // Bit-exact float key: same inputs hit, anything else misses.
    dir.join(format!(
        "{graph_hash}-{:016x}-{diffraction_bound}.json",
        length_bound.to_bits()
    ))
}

fn try_load(path: &Path, graph_hash: &str, length_bound: f64, diffraction_bound: usize) -> Option<Vec<ClosedChain>> {
    let bytes = std::fs::read(path).ok()?;
    let entry: CacheEntry = serde_json::from_slice(&bytes).ok()?;
    (entry.graph_hash == graph_hash
        && entry.length_bound.to_bits() == length_bound.to_bits()
        && entry.diffraction_bound == diffraction_bound)
        .then_some(entry.chains)
}

fn try_store(path: &Path, entry: &CacheEntry) {
    // Caching is best-effort; failure to persist is not an error.
    if let Some(parent) = path.parent() {
        if std::fs::create_dir_all(parent).is_err() {
            return;
        }
    }
    let tmp = path.with_extension("tmp");
    if let Ok(bytes) = serde_json::to_vec(entry) {
        if std::fs::write(&tmp, bytes).is_ok() {
            let _ = std::fs::rename(&tmp, path);
        }
    }
}

/// Enumerate closed chains, consulting and populating the cache directory.
pub fn enumerate_cached(
    graph: &ConeGraph,
    length_bound: f64,
    diffraction_bound: usize,
    node_budget: u64,
) -> Result<Vec<ClosedChain>, EnumError> {
    enumerate_cached_in(&cache_dir(), graph, length_bound, diffraction_bound, node_budget)
}

/// Same as [`enumerate_cached`] with an explicit cache directory.
pub fn enumerate_cached_in(
    dir: &Path,
    graph: &ConeGraph,
    length_bound: f64,
    diffraction_bound: usize,
    node_budget: u64,
) -> Result<Vec<ClosedChain>, EnumError> {
    let graph_hash = graph.content_hash();
    let path = entry_path(dir, &graph_hash, length_bound, diffraction_bound);
    if let Some(chains) = try_load(&path, &graph_hash, length_bound, diffraction_bound) {
        return Ok(chains);
    }
    let chains = enumerate_closed_chains(graph, length_bound, diffraction_bound, node_budget)?;
    try_store(
        &path,
        &CacheEntry {
            graph_hash,
            length_bound,
            diffraction_bound,
            chains: chains.clone(),
        },
    );
    Ok(chains)
}
