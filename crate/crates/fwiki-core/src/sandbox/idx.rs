//! Persistent hash index: caches (size, mtime, hash) per sandbox file so
//! unchanged files are never re-read. The mtime is a cache key only —
//! correctness always rests on content hashes.

use crate::hash::ContentHash;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FileStamp {
    pub size: u64,
    pub mtime_secs: i64,
    pub mtime_nanos: u32,
}

impl FileStamp {
    pub fn of(meta: &std::fs::Metadata) -> Self {
        let (secs, nanos) = match meta.modified().ok().map(|m| m.duration_since(UNIX_EPOCH)) {
            Some(Ok(d)) => (d.as_secs() as i64, d.subsec_nanos()),
            _ => (0, 0),
        };
        FileStamp { size: meta.len(), mtime_secs: secs, mtime_nanos: nanos }
    }

    pub fn now(size: u64) -> Self {
        let (secs, nanos) = match SystemTime::now().duration_since(UNIX_EPOCH) {
            Ok(d) => (d.as_secs() as i64, d.subsec_nanos()),
            Err(_) => (0, 0),
        };
        FileStamp { size, mtime_secs: secs, mtime_nanos: nanos }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TreeIndex {
    entries: BTreeMap<String, (FileStamp, ContentHash)>,
    modified: bool,
}

impl TreeIndex {
    /// Cached hash for a path, valid only if the stamp still matches.
    pub fn lookup(&self, path: &str, stamp: &FileStamp) -> Option<ContentHash> {
        match self.entries.get(path) {
            Some((cached, hash)) if cached == stamp => Some(*hash),
            _ => None,
        }
    }

    pub fn record(&mut self, path: &str, stamp: FileStamp, hash: ContentHash) {
        self.entries.insert(path.to_owned(), (stamp, hash));
        self.modified = true;
    }

    pub fn forget(&mut self, path: &str) {
        if self.entries.remove(path).is_some() {
            self.modified = true;
        }
    }

    pub fn clear(&mut self) {
        if !self.entries.is_empty() {
            self.entries.clear();
        }
        self.modified = true;
    }

    pub fn take_modified(&mut self) -> bool {
        std::mem::replace(&mut self.modified, false)
    }

    /// One entry per line: `<hash> <size> <secs>.<nanos> <path>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (path, (stamp, hash)) in &self.entries {
            let _ = writeln!(
                out,
                "{hash} {} {}.{} {path}",
                stamp.size, stamp.mtime_secs, stamp.mtime_nanos
            );
        }
        out
    }

    /// Tolerant parse: malformed lines are dropped (the index is a cache).
    pub fn from_text(text: &str) -> Self {
        let mut entries = BTreeMap::new();
        for line in text.lines() {
            let mut parts = line.splitn(4, ' ');
            let (Some(hash), Some(size), Some(mtime), Some(path)) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                continue;
            };
            let (Ok(hash), Ok(size)) = (hash.parse::<ContentHash>(), size.parse::<u64>()) else {
                continue;
            };
            let Some((secs, nanos)) = mtime.split_once('.') else { continue };
            let (Ok(secs), Ok(nanos)) = (secs.parse::<i64>(), nanos.parse::<u32>()) else {
                continue;
            };
            entries.insert(
                path.to_owned(),
                (FileStamp { size, mtime_secs: secs, mtime_nanos: nanos }, hash),
            );
        }
        TreeIndex { entries, modified: false }
    }
}
