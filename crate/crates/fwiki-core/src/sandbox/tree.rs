//! Sandboxes and content-addressed tree synchronization.
//!
//! A sandbox is a working directory holding article sources plus everything
//! generated from them: dependency manifests (`deps/`), build state
//! (`state/`) and rendered HTML (`html/`). The clean sandbox is the fully
//! compiled coherent snapshot; the dirty sandbox is where proposed changes
//! are overlaid and checked. Synchronization compares trees by content hash
//! (size first, so differing-size files are never read) and copies only what
//! differs — the point being that the generated artifacts vastly outweigh
//! the sources and must never be copied wholesale.
//!
//! Two paths are sandbox-local metadata, not content: the hash index
//! `state/tree.idx` and the `VALID` promotion marker. They are invisible to
//! walks, diffs and tree hashes.

use crate::hash::ContentHash;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::idx::{FileStamp, TreeIndex};

pub const INDEX_PATH: &str = "state/tree.idx";
pub const MARKER_PATH: &str = "VALID";
/// Dirty-side record of the clean snapshot it was last synchronized to.
pub const ALIGNED_PATH: &str = "state/aligned";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Clean,
    Dirty,
}

pub struct Sandbox {
    root: PathBuf,
    role: Role,
    index: TreeIndex,
    /// Paths written or removed through this handle; the promotion delta.
    touched: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SyncPlan {
    /// Paths whose content differs or is missing in the target.
    pub copy: BTreeSet<String>,
    /// Paths present in the target but absent from the source.
    pub delete: BTreeSet<String>,
}

impl SyncPlan {
    pub fn is_empty(&self) -> bool {
        self.copy.is_empty() && self.delete.is_empty()
    }
}

/// Work accounting for a diff or sync pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SyncStats {
    pub files_written: usize,
    pub files_deleted: usize,
    /// File bytes read in order to (re)hash — zero on a warm index.
    pub bytes_hashed: u64,
    /// File bytes read in order to copy.
    pub bytes_copied: u64,
}

impl SyncStats {
    /// Total file bytes read from disk during the pass.
    pub fn bytes_read(&self) -> u64 {
        self.bytes_hashed + self.bytes_copied
    }

    pub fn add(&mut self, other: &SyncStats) {
        self.files_written += other.files_written;
        self.files_deleted += other.files_deleted;
        self.bytes_hashed += other.bytes_hashed;
        self.bytes_copied += other.bytes_copied;
    }
}

impl Sandbox {
    /// Open (creating if necessary) a sandbox rooted at `root`, loading its
    /// hash index if one exists.
    pub fn open(root: impl Into<PathBuf>, role: Role) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let index = match fs::read_to_string(root.join(INDEX_PATH)) {
            Ok(text) => TreeIndex::from_text(&text),
            Err(_) => TreeIndex::default(),
        };
        Ok(Sandbox { root, role, index, touched: BTreeSet::new() })
    }

    /// Paths written or removed through this handle so far.
    pub fn touched(&self) -> &BTreeSet<String> {
        &self.touched
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn role(&self) -> Role {
        self.role
    }

    fn abs(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Walk the logical tree: every file under the root except the index and
    /// the validity marker, as sorted slash-separated relative paths.
    pub fn files(&self) -> io::Result<BTreeMap<String, u64>> {
        let mut out = BTreeMap::new();
        walk(&self.root, "", &mut out)?;
        out.remove(INDEX_PATH);
        out.remove(MARKER_PATH);
        out.remove(ALIGNED_PATH);
        Ok(out)
    }

    /// File names directly under one sandbox subdirectory (non-recursive),
    /// cheaper than a full walk when only one directory matters.
    pub fn list_dir(&self, rel_dir: &str) -> io::Result<Vec<String>> {
        let dir = self.abs(rel_dir);
        let mut out = Vec::new();
        if !dir.is_dir() {
            return Ok(out);
        }
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            if let Ok(name) = entry.file_name().into_string() {
                if entry.file_type()?.is_file() {
                    out.push(name);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.abs(rel).is_file()
    }

    pub fn read(&self, rel: &str) -> io::Result<Vec<u8>> {
        fs::read(self.abs(rel))
    }

    /// Content hash of one file, served from the index when size and mtime
    /// are unchanged; otherwise the body is read once and the index updated.
    pub fn hash_of(&mut self, rel: &str, stats: &mut SyncStats) -> io::Result<ContentHash> {
        let path = self.abs(rel);
        let stamp = FileStamp::of(&fs::metadata(&path)?);
        if let Some(hash) = self.index.lookup(rel, &stamp) {
            return Ok(hash);
        }
        let bytes = fs::read(&path)?;
        stats.bytes_hashed += bytes.len() as u64;
        let hash = ContentHash::of(&bytes);
        self.index.record(rel, stamp, hash);
        Ok(hash)
    }

    /// Write a file and record its hash without a later re-read.
    pub fn write_file(&mut self, rel: &str, bytes: &[u8]) -> io::Result<()> {
        self.write_file_hashed(rel, bytes, ContentHash::of(bytes))
    }

    pub fn write_file_hashed(
        &mut self,
        rel: &str,
        bytes: &[u8],
        hash: ContentHash,
    ) -> io::Result<()> {
        let path = self.abs(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        let stamp = FileStamp::of(&fs::metadata(&path)?);
        self.index.record(rel, stamp, hash);
        self.touched.insert(rel.to_owned());
        Ok(())
    }

    /// Write only when the content differs; returns whether a write
    /// happened.
    pub fn write_if_changed(&mut self, rel: &str, bytes: &[u8]) -> io::Result<bool> {
        let hash = ContentHash::of(bytes);
        if self.exists(rel) {
            let mut scratch = SyncStats::default();
            if self.hash_of(rel, &mut scratch)? == hash {
                return Ok(false);
            }
        }
        self.write_file_hashed(rel, bytes, hash)?;
        Ok(true)
    }

    pub fn remove_file(&mut self, rel: &str) -> io::Result<()> {
        fs::remove_file(self.abs(rel))?;
        self.index.forget(rel);
        self.touched.insert(rel.to_owned());
        Ok(())
    }

    /// Persist the hash index if it changed.
    pub fn flush_index(&mut self) -> io::Result<()> {
        if self.index.take_modified() {
            let path = self.abs(INDEX_PATH);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, self.index.to_text())?;
        }
        Ok(())
    }

    /// Drop all cached hashes and the on-disk index, forcing the next diff
    /// to re-hash everything.
    pub fn invalidate_index(&mut self) -> io::Result<()> {
        self.index.clear();
        self.index.take_modified();
        let path = self.abs(INDEX_PATH);
        if path.exists() {
            fs::remove_file(path)?;
        }
        Ok(())
    }

    /// Hash of the whole logical tree: sorted (path, content hash) pairs.
    pub fn tree_hash(&mut self) -> io::Result<ContentHash> {
        let mut scratch = SyncStats::default();
        let mut parts: Vec<Vec<u8>> = Vec::new();
        for rel in self.files()?.keys() {
            let hash = self.hash_of(rel, &mut scratch)?;
            parts.push(rel.as_bytes().to_vec());
            parts.push(hash.to_hex().into_bytes());
        }
        Ok(ContentHash::of_parts(parts.iter().map(|p| p.as_slice())))
    }

    /// The promotion marker's content, if the sandbox is marked valid.
    pub fn read_marker(&self) -> Option<String> {
        fs::read_to_string(self.abs(MARKER_PATH)).ok().map(|s| s.trim().to_owned())
    }

    pub fn write_marker(&mut self, content: &str) -> io::Result<()> {
        fs::write(self.abs(MARKER_PATH), format!("{content}\n"))
    }

    pub fn clear_marker(&mut self) -> io::Result<()> {
        let path = self.abs(MARKER_PATH);
        if path.exists() {
            fs::remove_file(path)?;
        }
        Ok(())
    }

    /// Which clean snapshot this (dirty) sandbox was last made identical
    /// to, if any.
    pub fn read_aligned(&self) -> Option<String> {
        fs::read_to_string(self.abs(ALIGNED_PATH)).ok().map(|s| s.trim().to_owned())
    }

    pub fn write_aligned(&mut self, content: &str) -> io::Result<()> {
        let path = self.abs(ALIGNED_PATH);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, format!("{content}\n"))
    }

    /// Forget alignment; called before the first mutation of a gate run so
    /// a crash mid-run forces a full re-sync next time.
    pub fn clear_aligned(&mut self) -> io::Result<()> {
        let path = self.abs(ALIGNED_PATH);
        if path.exists() {
            fs::remove_file(path)?;
        }
        Ok(())
    }
}

fn walk(dir: &Path, prefix: &str, out: &mut BTreeMap<String, u64>) -> io::Result<()> {
    if !dir.is_dir() {
        return Ok(());
    }
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = match entry.file_name().into_string() {
            Ok(n) => n,
            Err(_) => continue, // non-UTF-8 names are not ours
        };
        let rel = if prefix.is_empty() { name.clone() } else { format!("{prefix}/{name}") };
        let ty = entry.file_type()?;
        if ty.is_dir() {
            walk(&entry.path(), &rel, out)?;
        } else if ty.is_file() {
            out.insert(rel, entry.metadata()?.len());
        }
    }
    Ok(())
}

/// Compute the plan that would make `target`'s tree content-identical to
/// `source`'s. Files whose sizes differ are planned for copy without
/// reading either body; equal-size files are compared by (index-cached)
/// content hash.
pub fn diff_trees(
    source: &mut Sandbox,
    target: &mut Sandbox,
) -> io::Result<(SyncPlan, SyncStats)> {
    let mut stats = SyncStats::default();
    let mut plan = SyncPlan::default();
    let source_files = source.files()?;
    let target_files = target.files()?;

    for (rel, source_size) in &source_files {
        match target_files.get(rel) {
            None => {
                plan.copy.insert(rel.clone());
            }
            Some(target_size) if target_size != source_size => {
                plan.copy.insert(rel.clone());
            }
            Some(_) => {
                let source_hash = source.hash_of(rel, &mut stats)?;
                let target_hash = target.hash_of(rel, &mut stats)?;
                if source_hash != target_hash {
                    plan.copy.insert(rel.clone());
                }
            }
        }
    }
    for rel in target_files.keys() {
        if !source_files.contains_key(rel) {
            plan.delete.insert(rel.clone());
        }
    }
    Ok((plan, stats))
}

/// Make `target` content-identical to `source`, returning the applied plan.
/// Exactly `|copy| + |delete|` file writes happen; unchanged files are never
/// rewritten. On error the target's index is invalidated so the next gate
/// run re-examines everything.
pub fn sync(source: &mut Sandbox, target: &mut Sandbox) -> io::Result<(SyncPlan, SyncStats)> {
    let (plan, mut stats) = diff_trees(source, target)?;
    let result = apply_plan(source, target, &plan, &mut stats);
    if result.is_err() {
        let _ = target.invalidate_index();
        result?;
    }
    source.flush_index()?;
    target.flush_index()?;
    Ok((plan, stats))
}

/// Like [`diff_trees`], but restricted to `candidates`: valid when the
/// trees are known identical outside that set (the caller tracked every
/// mutation since the last full synchronization).
pub fn diff_candidates(
    source: &mut Sandbox,
    target: &mut Sandbox,
    candidates: &BTreeSet<String>,
) -> io::Result<(SyncPlan, SyncStats)> {
    let mut stats = SyncStats::default();
    let mut plan = SyncPlan::default();
    for rel in candidates {
        if rel == INDEX_PATH || rel == MARKER_PATH || rel == ALIGNED_PATH {
            continue;
        }
        let in_source = source.exists(rel);
        let in_target = target.exists(rel);
        match (in_source, in_target) {
            (false, false) => {}
            (true, false) => {
                plan.copy.insert(rel.clone());
            }
            (false, true) => {
                plan.delete.insert(rel.clone());
            }
            (true, true) => {
                let source_size = fs::metadata(source.abs(rel))?.len();
                let target_size = fs::metadata(target.abs(rel))?.len();
                if source_size != target_size
                    || source.hash_of(rel, &mut stats)? != target.hash_of(rel, &mut stats)?
                {
                    plan.copy.insert(rel.clone());
                }
            }
        }
    }
    Ok((plan, stats))
}

/// Synchronize only `candidates` from `source` into `target`.
pub fn sync_candidates(
    source: &mut Sandbox,
    target: &mut Sandbox,
    candidates: &BTreeSet<String>,
) -> io::Result<(SyncPlan, SyncStats)> {
    let (plan, mut stats) = diff_candidates(source, target, candidates)?;
    let result = apply_plan(source, target, &plan, &mut stats);
    if result.is_err() {
        let _ = target.invalidate_index();
        result?;
    }
    source.flush_index()?;
    target.flush_index()?;
    Ok((plan, stats))
}

fn apply_plan(
    source: &mut Sandbox,
    target: &mut Sandbox,
    plan: &SyncPlan,
    stats: &mut SyncStats,
) -> io::Result<()> {
    for rel in &plan.copy {
        let bytes = source.read(rel)?;
        stats.bytes_copied += bytes.len() as u64;
        target.write_file(rel, &bytes)?;
        stats.files_written += 1;
    }
    for rel in &plan.delete {
        target.remove_file(rel)?;
        stats.files_deleted += 1;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum PromoteError {
    #[error("refusing to promote: dirty sandbox build state is not coherent")]
    Incoherent,
    #[error("refusing to promote: dirty sandbox has no build state")]
    NoState,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Promote a coherent dirty sandbox into the clean one. The validity marker
/// is cleared first and rewritten (with `marker`, the new head commit) only
/// after the tree is fully synchronized, so an interrupted promote leaves
/// the clean sandbox detectably invalid and recoverable from the central
/// repository.
///
/// When `touched` is given, the trees are known identical outside those
/// paths (the gate tracked every mutation since the last alignment) and the
/// synchronization is restricted to them.
pub fn promote(
    dirty: &mut Sandbox,
    clean: &mut Sandbox,
    marker: &str,
    touched: Option<&BTreeSet<String>>,
) -> Result<(SyncPlan, SyncStats), PromoteError> {
    let state_json = dirty.read("state/build.json").map_err(|_| PromoteError::NoState)?;
    let value: serde_json::Value =
        serde_json::from_slice(&state_json).map_err(|_| PromoteError::NoState)?;
    if value.get("library_verdict").and_then(|v| v.as_str()) != Some("coherent") {
        return Err(PromoteError::Incoherent);
    }
    clean.clear_marker()?;
    let applied = match touched {
        Some(candidates) => sync_candidates(dirty, clean, candidates)?,
        None => sync(dirty, clean)?,
    };
    clean.write_marker(marker)?;
    dirty.write_aligned(marker)?;
    Ok(applied)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sandbox_pair() -> (tempfile::TempDir, Sandbox, Sandbox) {
        let dir = tempfile::tempdir().unwrap();
        let a = Sandbox::open(dir.path().join("a"), Role::Clean).unwrap();
        let b = Sandbox::open(dir.path().join("b"), Role::Dirty).unwrap();
        (dir, a, b)
    }

    #[test]
    fn identical_trees_give_empty_plan() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("x.fml", b"article x\n").unwrap();
        b.write_file("x.fml", b"article x\n").unwrap();
        let (plan, stats) = diff_trees(&mut a, &mut b).unwrap();
        assert!(plan.is_empty());
        assert_eq!(stats.bytes_copied, 0);
    }

    #[test]
    fn one_changed_file_is_planned_for_copy() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("html/x.html", b"<p>one</p>\n").unwrap();
        b.write_file("html/x.html", b"<p>two</p>\n").unwrap();
        let (plan, _) = diff_trees(&mut a, &mut b).unwrap();
        assert_eq!(plan.copy, ["html/x.html".to_owned()].into());
        assert!(plan.delete.is_empty());
    }

    #[test]
    fn leftover_target_file_is_planned_for_delete() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("x.fml", b"same").unwrap();
        b.write_file("x.fml", b"same").unwrap();
        b.write_file("state/leftover.tmp", b"junk").unwrap();
        let (plan, _) = diff_trees(&mut a, &mut b).unwrap();
        assert_eq!(plan.delete, ["state/leftover.tmp".to_owned()].into());
    }

    #[test]
    fn differing_sizes_skip_hashing() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("x.fml", b"short").unwrap();
        b.write_file("x.fml", b"much longer content").unwrap();
        // Fresh sandboxes so the write-through cache doesn't mask reads.
        let mut a = Sandbox::open(a.root().to_path_buf(), Role::Clean).unwrap();
        let mut b = Sandbox::open(b.root().to_path_buf(), Role::Dirty).unwrap();
        let (plan, stats) = diff_trees(&mut a, &mut b).unwrap();
        assert_eq!(plan.copy.len(), 1);
        assert_eq!(stats.bytes_hashed, 0, "differing sizes must not be read");
    }

    #[test]
    fn sync_into_empty_copies_everything_once() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("x.fml", b"article x\n").unwrap();
        a.write_file("deps/x.d", b"manifest\n").unwrap();
        a.write_file("html/x.html", b"<p>x</p>\n").unwrap();
        let (plan, stats) = sync(&mut a, &mut b).unwrap();
        assert_eq!(plan.copy.len(), 3);
        assert_eq!(stats.files_written, 3);
        // Idempotence: immediate re-sync plans nothing and writes nothing.
        let (plan2, stats2) = sync(&mut a, &mut b).unwrap();
        assert!(plan2.is_empty());
        assert_eq!(stats2.files_written, 0);
        assert_eq!(stats2.bytes_read(), 0, "warm index re-sync reads nothing");
    }

    #[test]
    fn write_counts_equal_plan_sizes() {
        let (_dir, mut a, mut b) = sandbox_pair();
        for i in 0..8 {
            let path = format!("f{i}.fml");
            a.write_file(&path, format!("content {i}").as_bytes()).unwrap();
            if i % 2 == 0 {
                b.write_file(&path, format!("content {i}").as_bytes()).unwrap();
            }
        }
        b.write_file("stale.fml", b"gone upstream").unwrap();
        let (plan, stats) = sync(&mut a, &mut b).unwrap();
        assert_eq!(stats.files_written, plan.copy.len());
        assert_eq!(stats.files_deleted, plan.delete.len());
        let (check, _) = diff_trees(&mut a, &mut b).unwrap();
        assert!(check.is_empty());
    }

    #[test]
    fn empty_plan_iff_trees_identical() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("x.fml", b"one").unwrap();
        b.write_file("x.fml", b"one").unwrap();
        let (plan, _) = diff_trees(&mut a, &mut b).unwrap();
        assert!(plan.is_empty());
        b.write_file("x.fml", b"two").unwrap();
        let (plan, _) = diff_trees(&mut a, &mut b).unwrap();
        assert!(!plan.is_empty());
    }

    #[test]
    fn marker_and_index_are_not_content() {
        let (_dir, mut a, mut b) = sandbox_pair();
        a.write_file("x.fml", b"same").unwrap();
        b.write_file("x.fml", b"same").unwrap();
        a.write_marker("head-1").unwrap();
        a.flush_index().unwrap();
        let (plan, _) = diff_trees(&mut a, &mut b).unwrap();
        assert!(plan.is_empty());
        let h1 = a.tree_hash().unwrap();
        a.write_marker("head-2").unwrap();
        assert_eq!(a.tree_hash().unwrap(), h1);
    }

    #[test]
    fn promote_refuses_incoherent_state() {
        let (_dir, mut clean, mut dirty) = sandbox_pair();
        dirty
            .write_file(
                "state/build.json",
                br#"{"library_verdict": "incoherent", "records": {}}"#,
            )
            .unwrap();
        let before = clean.tree_hash().unwrap();
        let err = promote(&mut dirty, &mut clean, "head", None).unwrap_err();
        assert!(matches!(err, PromoteError::Incoherent));
        assert_eq!(clean.tree_hash().unwrap(), before);
    }

    #[test]
    fn promote_syncs_and_marks() {
        let (_dir, mut clean, mut dirty) = sandbox_pair();
        dirty.write_file("x.fml", b"article x\n").unwrap();
        dirty
            .write_file(
                "state/build.json",
                br#"{"library_verdict": "coherent", "records": {}}"#,
            )
            .unwrap();
        promote(&mut dirty, &mut clean, "head-7", None).unwrap();
        assert_eq!(clean.read_marker().as_deref(), Some("head-7"));
        let (plan, _) = diff_trees(&mut clean, &mut dirty).unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn hash_of_uses_and_refreshes_the_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut sb = Sandbox::open(dir.path(), Role::Clean).unwrap();
        sb.write_file("a.fml", b"first").unwrap();
        let mut stats = SyncStats::default();
        // Write-through: no read needed.
        assert_eq!(sb.hash_of("a.fml", &mut stats).unwrap(), ContentHash::of(b"first"));
        assert_eq!(stats.bytes_hashed, 0);
        sb.flush_index().unwrap();

        // A reopened sandbox still hits the persisted index.
        let mut sb = Sandbox::open(dir.path(), Role::Clean).unwrap();
        let mut stats = SyncStats::default();
        assert_eq!(sb.hash_of("a.fml", &mut stats).unwrap(), ContentHash::of(b"first"));
        assert_eq!(stats.bytes_hashed, 0);

        // Out-of-band modification is caught by the stamp.
        std::fs::write(dir.path().join("a.fml"), b"second!").unwrap();
        let mut stats = SyncStats::default();
        assert_eq!(sb.hash_of("a.fml", &mut stats).unwrap(), ContentHash::of(b"second!"));
        assert!(stats.bytes_hashed > 0);
    }
}
