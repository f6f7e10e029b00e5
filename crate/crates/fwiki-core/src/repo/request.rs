//! Commit requests and gate verdicts.

use crate::diag::Diagnostic;
use crate::lang::ArticleName;
use crate::sandbox::SyncStats;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeAction {
    Add,
    Modify,
    Delete,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    /// Source path, always `<name>.fml`.
    pub path: String,
    pub action: ChangeAction,
    /// Present exactly when the action is not `Delete`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<u8>>,
}

impl Change {
    pub fn add(path: impl Into<String>, payload: Vec<u8>) -> Self {
        Change { path: path.into(), action: ChangeAction::Add, payload: Some(payload) }
    }

    pub fn modify(path: impl Into<String>, payload: Vec<u8>) -> Self {
        Change { path: path.into(), action: ChangeAction::Modify, payload: Some(payload) }
    }

    pub fn delete(path: impl Into<String>) -> Self {
        Change { path: path.into(), action: ChangeAction::Delete, payload: None }
    }
}

/// A proposed changeset: adds, modifications and deletions applied
/// atomically and admitted only if the whole library stays coherent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitRequest {
    pub author: String,
    pub message: String,
    pub changes: Vec<Change>,
}

impl CommitRequest {
    /// Structural validity: unique paths, payload present exactly for
    /// non-deletes. Returns complaints as strings; the gate turns them into
    /// diagnostics.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for change in &self.changes {
            if !seen.insert(&change.path) {
                problems.push(format!("path `{}` appears more than once", change.path));
            }
            match change.action {
                ChangeAction::Delete => {
                    if change.payload.is_some() {
                        problems.push(format!("delete of `{}` carries a payload", change.path));
                    }
                }
                _ => {
                    if change.payload.is_none() {
                        problems.push(format!("change to `{}` carries no payload", change.path));
                    }
                }
            }
        }
        problems
    }

    pub fn payload_bytes(&self) -> u64 {
        self.changes.iter().filter_map(|c| c.payload.as_ref()).map(|p| p.len() as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitVerdict {
    Accepted { commit_id: String },
    Rejected { diagnostics: Vec<Diagnostic> },
}

impl CommitVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, CommitVerdict::Accepted { .. })
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            CommitVerdict::Accepted { .. } => &[],
            CommitVerdict::Rejected { diagnostics } => diagnostics,
        }
    }
}

/// Gate verdict plus the work the gate actually did.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommitResult {
    pub verdict: CommitVerdict,
    /// Articles re-verified during the gate run.
    pub verified: BTreeSet<ArticleName>,
    /// Influenced articles confirmed fresh and skipped via early cutoff.
    pub cutoff: BTreeSet<ArticleName>,
    /// Dependents of failed articles, not attempted.
    pub skipped: BTreeSet<ArticleName>,
    /// Per-phase wall-clock durations in microseconds.
    pub timings: BTreeMap<String, u64>,
    /// Work accounting of the promotion sync (dirty into clean); zeros when
    /// nothing was promoted.
    #[serde(default)]
    pub promote_stats: PromoteStatsJson,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromoteStatsJson {
    pub files_written: usize,
    pub files_deleted: usize,
    pub bytes_hashed: u64,
    pub bytes_copied: u64,
}

impl From<SyncStats> for PromoteStatsJson {
    fn from(s: SyncStats) -> Self {
        PromoteStatsJson {
            files_written: s.files_written,
            files_deleted: s.files_deleted,
            bytes_hashed: s.bytes_hashed,
            bytes_copied: s.bytes_copied,
        }
    }
}

impl PromoteStatsJson {
    pub fn bytes_read(&self) -> u64 {
        self.bytes_hashed + self.bytes_copied
    }
}

impl CommitResult {
    pub fn rejected(diagnostics: Vec<Diagnostic>) -> Self {
        CommitResult {
            verdict: CommitVerdict::Rejected { diagnostics },
            verified: BTreeSet::new(),
            cutoff: BTreeSet::new(),
            skipped: BTreeSet::new(),
            timings: BTreeMap::new(),
            promote_stats: PromoteStatsJson::default(),
        }
    }

    /// JSON gate report (machine-readable output of `--json`).
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("result is serializable");
        let mut out = serde_json::to_string_pretty(&value).expect("result is serializable");
        out.push('\n');
        out
    }
}
