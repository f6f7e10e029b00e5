//! Build records and the persistent build state.
//!
//! `state/build.json` holds one record per article: source hash, the import
//! signatures observed at build time, the export signature hash and the
//! verdict. The export *entries* (the data dependents verify against) live in
//! per-article files `state/exports/<name>.sig`, refreshed only when their
//! article is rebuilt, so the per-commit footprint of the state stays
//! proportional to the change. Serialization is canonical: sorted keys,
//! lowercase hex, LF, so equal states are byte-equal.

use crate::diag::Diagnostic;
use crate::hash::ContentHash;
use crate::lang::ArticleName;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::signature::ExportSignature;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Failed(Vec<Diagnostic>),
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified)
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            Verdict::Verified => &[],
            Verdict::Failed(diags) => diags,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildRecord {
    pub article: ArticleName,
    pub source_hash: ContentHash,
    /// Signature hash of each declared import as observed when this record
    /// was produced. The record is stale when any of these moved.
    pub import_sigs: BTreeMap<ArticleName, ContentHash>,
    /// Present exactly when the verdict is `Verified`.
    pub export: Option<ExportSignature>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LibraryVerdict {
    Coherent,
    Incoherent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildState {
    pub records: BTreeMap<ArticleName, BuildRecord>,
    pub library_verdict: LibraryVerdict,
}

impl Default for BuildState {
    fn default() -> Self {
        BuildState { records: BTreeMap::new(), library_verdict: LibraryVerdict::Coherent }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum VerdictJson {
    Verified,
    Failed(Vec<Diagnostic>),
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    export_sig: Option<ContentHash>,
    import_sigs: BTreeMap<ArticleName, ContentHash>,
    source_hash: ContentHash,
    verdict: VerdictJson,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    library_verdict: LibraryVerdict,
    records: BTreeMap<ArticleName, RecordJson>,
}

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("malformed build state: {0}")]
    Malformed(String),
    #[error("missing export data for `{0}`")]
    MissingExport(ArticleName),
    #[error("export data for `{0}` does not match its recorded signature hash")]
    ExportMismatch(ArticleName),
}

impl BuildState {
    pub fn is_coherent(&self) -> bool {
        self.library_verdict == LibraryVerdict::Coherent
    }

    /// All diagnostics across failed records, in article order.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.records.values().flat_map(|r| r.verdict.diagnostics().iter().cloned()).collect()
    }

    /// Canonical `build.json` bytes: pretty JSON with sorted keys and a
    /// trailing newline. Byte-identical for equal states.
    pub fn to_canonical_json(&self) -> String {
        let json = StateJson {
            library_verdict: self.library_verdict,
            records: self
                .records
                .iter()
                .map(|(name, record)| {
                    (
                        name.clone(),
                        RecordJson {
                            export_sig: record.export.as_ref().map(|e| e.sig_hash),
                            import_sigs: record.import_sigs.clone(),
                            source_hash: record.source_hash,
                            verdict: match &record.verdict {
                                Verdict::Verified => VerdictJson::Verified,
                                Verdict::Failed(d) => VerdictJson::Failed(d.clone()),
                            },
                        },
                    )
                })
                .collect(),
        };
        // Via Value so that map keys come out sorted regardless of struct
        // field declaration order.
        let value = serde_json::to_value(&json).expect("state is serializable");
        let mut out = serde_json::to_string_pretty(&value).expect("state is serializable");
        out.push('\n');
        out
    }

    /// Rebuild a state from `build.json` text plus an export loader that
    /// yields the canonical text of `state/exports/<name>.sig`.
    pub fn from_parts(
        json: &str,
        load_export: impl Fn(&ArticleName) -> Option<String>,
    ) -> Result<Self, StateError> {
        let parsed: StateJson =
            serde_json::from_str(json).map_err(|e| StateError::Malformed(e.to_string()))?;
        let mut records = BTreeMap::new();
        for (name, rec) in parsed.records {
            let export = match rec.export_sig {
                None => None,
                Some(expected) => {
                    let text =
                        load_export(&name).ok_or_else(|| StateError::MissingExport(name.clone()))?;
                    let sig = ExportSignature::parse(&text)
                        .ok_or_else(|| StateError::ExportMismatch(name.clone()))?;
                    if sig.sig_hash != expected || sig.article != name {
                        return Err(StateError::ExportMismatch(name.clone()));
                    }
                    Some(sig)
                }
            };
            let verdict = match rec.verdict {
                VerdictJson::Verified => Verdict::Verified,
                VerdictJson::Failed(d) => Verdict::Failed(d),
            };
            records.insert(
                name.clone(),
                BuildRecord {
                    article: name,
                    source_hash: rec.source_hash,
                    import_sigs: rec.import_sigs,
                    export,
                    verdict,
                },
            );
        }
        Ok(BuildState { records, library_verdict: parsed.library_verdict })
    }
}
