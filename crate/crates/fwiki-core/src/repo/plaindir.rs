//! The hermetic backend: content-addressed blobs plus a linear commit log,
//! all in plain files. Commit ids are hashes of the canonical commit record
//! (parent, author, message, tree), so identical request sequences produce
//! identical histories — convenient for tests and replay.
//!
//! ```text
//! store/
//!   blobs/<sha256>            file bytes, content-addressed
//!   commits/<id>.json         {"author","message","parent","tree":{path:blob}}
//!   refs/heads/<branch>       commit id
//!   refs/tags/<name>          commit id
//! ```

use crate::hash::ContentHash;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::backend::{BackendError, Delta, VcsBackend};

pub struct PlainDirBackend;

#[derive(Serialize, Deserialize)]
struct CommitJson {
    author: String,
    message: String,
    parent: Option<String>,
    tree: BTreeMap<String, String>,
}

fn blob_path(store: &Path, hash: &str) -> PathBuf {
    store.join("blobs").join(hash)
}

fn commit_path(store: &Path, id: &str) -> PathBuf {
    store.join("commits").join(format!("{id}.json"))
}

fn ref_path(store: &Path, kind: &str, name: &str) -> PathBuf {
    store.join("refs").join(kind).join(name)
}

fn read_ref(store: &Path, kind: &str, name: &str) -> Option<String> {
    fs::read_to_string(ref_path(store, kind, name)).ok().map(|s| s.trim().to_owned())
}

fn write_ref(store: &Path, kind: &str, name: &str, value: &str) -> Result<(), BackendError> {
    let path = ref_path(store, kind, name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    // Write-then-rename so a crashed writer never leaves a torn ref.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, format!("{value}\n"))?;
    fs::rename(&tmp, &path)?;
    Ok(())
}

fn load_commit(store: &Path, id: &str) -> Result<CommitJson, BackendError> {
    let text = fs::read_to_string(commit_path(store, id))
        .map_err(|_| BackendError::MissingRef(id.to_owned()))?;
    serde_json::from_str(&text).map_err(|e| BackendError::Corrupt(e.to_string()))
}

fn canonical_commit_bytes(commit: &CommitJson) -> Vec<u8> {
    let value = serde_json::to_value(commit).expect("commit is serializable");
    let mut text = serde_json::to_string_pretty(&value).expect("commit is serializable");
    text.push('\n');
    text.into_bytes()
}

impl VcsBackend for PlainDirBackend {
    fn name(&self) -> &'static str {
        "plaindir"
    }

    fn init(&self, store: &Path) -> Result<(), BackendError> {
        fs::create_dir_all(store.join("blobs"))?;
        fs::create_dir_all(store.join("commits"))?;
        fs::create_dir_all(store.join("refs/heads"))?;
        fs::create_dir_all(store.join("refs/tags"))?;
        Ok(())
    }

    fn commit(
        &self,
        store: &Path,
        branch: &str,
        delta: &Delta,
        author: &str,
        message: &str,
    ) -> Result<String, BackendError> {
        let parent = read_ref(store, "heads", branch);
        let mut tree = match &parent {
            Some(id) => load_commit(store, id)?.tree,
            None => BTreeMap::new(),
        };
        for (path, bytes) in delta {
            match bytes {
                Some(bytes) => {
                    let hash = ContentHash::of(bytes).to_hex();
                    let blob = blob_path(store, &hash);
                    if !blob.exists() {
                        fs::write(&blob, bytes)?;
                    }
                    tree.insert(path.clone(), hash);
                }
                None => {
                    tree.remove(path);
                }
            }
        }
        let commit = CommitJson {
            author: author.to_owned(),
            message: message.to_owned(),
            parent,
            tree,
        };
        let bytes = canonical_commit_bytes(&commit);
        let id = ContentHash::of(&bytes).to_hex();
        let path = commit_path(store, &id);
        if !path.exists() {
            fs::write(&path, &bytes)?;
        }
        write_ref(store, "heads", branch, &id)?;
        Ok(id)
    }

    fn head(&self, store: &Path, branch: &str) -> Result<Option<String>, BackendError> {
        Ok(read_ref(store, "heads", branch))
    }

    fn set_branch(&self, store: &Path, branch: &str, commit: &str) -> Result<(), BackendError> {
        if !commit_path(store, commit).exists() {
            return Err(BackendError::MissingRef(commit.to_owned()));
        }
        write_ref(store, "heads", branch, commit)
    }

    fn tag(&self, store: &Path, name: &str, commit: &str) -> Result<(), BackendError> {
        if !commit_path(store, commit).exists() {
            return Err(BackendError::MissingRef(commit.to_owned()));
        }
        write_ref(store, "tags", name, commit)
    }

    fn tags(&self, store: &Path) -> Result<Vec<String>, BackendError> {
        let dir = store.join("refs/tags");
        let mut out = Vec::new();
        if dir.exists() {
            for entry in fs::read_dir(dir)? {
                if let Ok(name) = entry?.file_name().into_string() {
                    if !name.ends_with(".tmp") {
                        out.push(name);
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn read_tree(
        &self,
        store: &Path,
        commit: &str,
    ) -> Result<BTreeMap<String, Vec<u8>>, BackendError> {
        let record = load_commit(store, commit)?;
        let mut tree = BTreeMap::new();
        for (path, blob) in record.tree {
            let bytes = fs::read(blob_path(store, &blob))
                .map_err(|_| BackendError::Corrupt(format!("missing blob {blob}")))?;
            tree.insert(path, bytes);
        }
        Ok(tree)
    }

    fn history(&self, store: &Path, branch: &str) -> Result<Vec<String>, BackendError> {
        let mut out = Vec::new();
        let mut cursor = read_ref(store, "heads", branch);
        while let Some(id) = cursor {
            out.push(id.clone());
            cursor = load_commit(store, &id)?.parent;
        }
        out.reverse();
        Ok(out)
    }

    fn clone_frontend(&self, store: &Path, frontend: &Path) -> Result<(), BackendError> {
        fs::create_dir_all(frontend)?;
        if let Some(head) = read_ref(store, "heads", "master") {
            for (path, bytes) in self.read_tree(store, &head)? {
                fs::write(frontend.join(path), bytes)?;
            }
        }
        Ok(())
    }

    fn frontend_tree(&self, frontend: &Path) -> Result<BTreeMap<String, Vec<u8>>, BackendError> {
        let mut tree = BTreeMap::new();
        for entry in fs::read_dir(frontend)? {
            let entry = entry?;
            let Ok(name) = entry.file_name().into_string() else { continue };
            if name.ends_with(".fml") && entry.file_type()?.is_file() {
                tree.insert(name, fs::read(entry.path())?);
            }
        }
        Ok(tree)
    }

    fn install_hooks(
        &self,
        _store: &Path,
        _frontend: &Path,
        _repo_root: &Path,
        _exe: &Path,
    ) -> Result<(), BackendError> {
        // Plain directories have no event to hang a hook on; the hook CLI
        // commands operate on them directly.
        Ok(())
    }
}
