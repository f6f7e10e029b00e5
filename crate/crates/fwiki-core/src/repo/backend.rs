//! Pluggable version-control backends.
//!
//! The gate only needs a handful of primitives: commit a delta onto a
//! branch, read refs and trees, move branch pointers, tag. `PlainDir`
//! implements them with content-addressed blobs and a linear commit log in
//! plain files — fully hermetic, deterministic ids. `ExternalDvcs` drives a
//! real `git` binary so pushes and hooks work with standard tooling. Both
//! must produce the same gate verdicts for the same request sequence.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("unknown ref `{0}`")]
    MissingRef(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("backend tool failed: {0}")]
    Tool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A source-tree delta: path to new bytes, or `None` for a deletion.
pub type Delta = Vec<(String, Option<Vec<u8>>)>;

pub trait VcsBackend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Create an empty store.
    fn init(&self, store: &Path) -> Result<(), BackendError>;

    /// Apply `delta` to the branch head's tree and commit the result.
    /// Creates the branch at an initial commit when it does not exist yet.
    fn commit(
        &self,
        store: &Path,
        branch: &str,
        delta: &Delta,
        author: &str,
        message: &str,
    ) -> Result<String, BackendError>;

    fn head(&self, store: &Path, branch: &str) -> Result<Option<String>, BackendError>;

    fn set_branch(&self, store: &Path, branch: &str, commit: &str) -> Result<(), BackendError>;

    fn tag(&self, store: &Path, name: &str, commit: &str) -> Result<(), BackendError>;

    fn tags(&self, store: &Path) -> Result<Vec<String>, BackendError>;

    /// The source tree of a commit: article file name to bytes.
    fn read_tree(&self, store: &Path, commit: &str)
        -> Result<BTreeMap<String, Vec<u8>>, BackendError>;

    /// Commit ids on a branch, oldest first.
    fn history(&self, store: &Path, branch: &str) -> Result<Vec<String>, BackendError>;

    /// Create the frontend staging repository as a clone of the store.
    fn clone_frontend(&self, store: &Path, frontend: &Path) -> Result<(), BackendError>;

    /// The source tree currently proposed in the frontend.
    fn frontend_tree(&self, frontend: &Path) -> Result<BTreeMap<String, Vec<u8>>, BackendError>;

    /// Install hook scripts that hand control to the given executable.
    fn install_hooks(
        &self,
        store: &Path,
        frontend: &Path,
        repo_root: &Path,
        exe: &Path,
    ) -> Result<(), BackendError>;
}

/// Pick the backend that owns an existing store.
pub fn detect_backend(store: &Path) -> Result<Box<dyn VcsBackend>, BackendError> {
    if store.join(".git").exists() {
        Ok(Box::new(super::gitvcs::GitBackend))
    } else if store.join("commits").exists() {
        Ok(Box::new(super::plaindir::PlainDirBackend))
    } else {
        Err(BackendError::Corrupt(format!(
            "no recognizable store at `{}`",
            store.display()
        )))
    }
}

/// A delta that rebuilds `tree` from nothing.
pub fn delta_from_tree(tree: &BTreeMap<String, Vec<u8>>) -> Delta {
    tree.iter().map(|(p, b)| (p.clone(), Some(b.clone()))).collect()
}

/// The delta that turns `base` into `target`.
pub fn delta_between(
    base: &BTreeMap<String, Vec<u8>>,
    target: &BTreeMap<String, Vec<u8>>,
) -> Delta {
    let mut delta = Delta::new();
    for (path, bytes) in target {
        if base.get(path) != Some(bytes) {
            delta.push((path.clone(), Some(bytes.clone())));
        }
    }
    for path in base.keys() {
        if !target.contains_key(path) {
            delta.push((path.clone(), None));
        }
    }
    delta
}
