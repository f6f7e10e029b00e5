//! Per-article dependency manifests.
//!
//! A manifest records the declared imports of one article together with the
//! content hash of the source it was extracted from; it is stale exactly when
//! that hash no longer matches the file. Manifests are generated, never
//! hand-edited, and live in `deps/<name>.d` beside the sources.
//!
//! File format, one record per line, LF-terminated:
//!
//! ```text
//! article <name>
//! hash <64 lowercase hex chars>
//! dep <imported-name>        (zero or more lines, sorted ascending)
//! ```

use crate::hash::ContentHash;
use crate::lang::{parse_environ, ArticleName, ParseError};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepManifest {
    pub article: ArticleName,
    /// Sorted, deduplicated imports.
    pub deps: Vec<ArticleName>,
    pub source_hash: ContentHash,
}

impl DepManifest {
    /// Derive a manifest from article source bytes.
    pub fn from_source(name: &ArticleName, bytes: &[u8]) -> Result<Self, ParseError> {
        let text = std::str::from_utf8(bytes).map_err(|e| ParseError {
            line: 1,
            column: 1,
            kind: crate::lang::ParseErrorKind::Syntax,
            message: format!("source is not valid UTF-8: {e}"),
        })?;
        let environ = parse_environ(text)?;
        let deps: BTreeSet<ArticleName> = environ.imports.into_iter().collect();
        Ok(DepManifest {
            article: name.clone(),
            deps: deps.into_iter().collect(),
            source_hash: ContentHash::of(bytes),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "article {}", self.article);
        let _ = writeln!(out, "hash {}", self.source_hash);
        for dep in &self.deps {
            let _ = writeln!(out, "dep {dep}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut lines = text.lines();
        let article = match lines.next().and_then(|l| l.strip_prefix("article ")) {
            Some(name) => ArticleName::new(name).map_err(|_| ManifestError::Malformed)?,
            None => return Err(ManifestError::Malformed),
        };
        let source_hash = match lines.next().and_then(|l| l.strip_prefix("hash ")) {
            Some(hex) => hex.parse().map_err(|_| ManifestError::Malformed)?,
            None => return Err(ManifestError::Malformed),
        };
        let mut deps = Vec::new();
        for line in lines {
            match line.strip_prefix("dep ") {
                Some(name) => {
                    deps.push(ArticleName::new(name).map_err(|_| ManifestError::Malformed)?)
                }
                None => return Err(ManifestError::Malformed),
            }
        }
        Ok(DepManifest { article, deps, source_hash })
    }

    /// Manifest file name relative to the manifest directory.
    pub fn file_name(name: &ArticleName) -> String {
        format!("{name}.d")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("malformed manifest file")]
    Malformed,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Extract the dependency manifest of one article file. The fast path behind
/// manifest refresh: only the header is parsed.
pub fn extract_deps(article_path: &Path) -> Result<DepManifest, ExtractError> {
    let file_name = article_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| ExtractError::NotAnArticle(article_path.display().to_string()))?;
    let name = ArticleName::from_file_name(file_name)
        .ok_or_else(|| ExtractError::NotAnArticle(file_name.to_owned()))?;
    let bytes = fs::read(article_path)?;
    DepManifest::from_source(&name, &bytes).map_err(ExtractError::Parse)
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("`{0}` is not an article file")]
    NotAnArticle(String),
    #[error(transparent)]
    Parse(ParseError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Result of a manifest refresh pass.
#[derive(Clone, Debug, Default)]
pub struct RefreshOutcome {
    /// Articles whose manifest was written because the source is new or its
    /// hash changed.
    pub refreshed: BTreeSet<ArticleName>,
    /// Articles whose manifest was removed because the source is gone.
    pub removed: BTreeSet<ArticleName>,
    /// Header parse failures, per article; refresh continues past them.
    pub errors: Vec<(ArticleName, ParseError)>,
}

impl RefreshOutcome {
    /// The refreshed set as reported to callers: written plus removed.
    pub fn touched(&self) -> BTreeSet<ArticleName> {
        self.refreshed.union(&self.removed).cloned().collect()
    }
}

/// Bring the manifest directory in step with the article sources: write a
/// manifest for every article whose stored hash is missing or stale, remove
/// manifests of deleted articles, and leave everything else untouched.
pub fn refresh_manifests(library_dir: &Path, manifest_dir: &Path) -> io::Result<RefreshOutcome> {
    fs::create_dir_all(manifest_dir)?;
    let mut outcome = RefreshOutcome::default();

    let mut sources: BTreeMap<ArticleName, Vec<u8>> = BTreeMap::new();
    for entry in fs::read_dir(library_dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let file_name = entry.file_name();
        let Some(name) = file_name.to_str().and_then(ArticleName::from_file_name) else {
            continue;
        };
        sources.insert(name, fs::read(entry.path())?);
    }

    let mut existing: BTreeSet<ArticleName> = BTreeSet::new();
    for entry in fs::read_dir(manifest_dir)? {
        let entry = entry?;
        let file_name = entry.file_name();
        let Some(stem) = file_name.to_str().and_then(|n| n.strip_suffix(".d")) else {
            continue;
        };
        if let Ok(name) = ArticleName::new(stem) {
            existing.insert(name);
        }
    }

    for (name, bytes) in &sources {
        let current = ContentHash::of(bytes);
        let manifest_path = manifest_dir.join(DepManifest::file_name(name));
        let stored = fs::read_to_string(&manifest_path)
            .ok()
            .and_then(|t| DepManifest::parse(&t).ok());
        if stored.as_ref().map(|m| m.source_hash) == Some(current) {
            continue;
        }
        match DepManifest::from_source(name, bytes) {
            Ok(manifest) => {
                fs::write(&manifest_path, manifest.to_text())?;
                outcome.refreshed.insert(name.clone());
            }
            Err(err) => outcome.errors.push((name.clone(), err)),
        }
    }

    for name in existing.difference(&sources.keys().cloned().collect()) {
        fs::remove_file(manifest_dir.join(DepManifest::file_name(name)))?;
        outcome.removed.insert(name.clone());
    }

    Ok(outcome)
}

/// Load every manifest in a directory.
pub fn load_manifests(manifest_dir: &Path) -> Result<Vec<DepManifest>, ManifestError> {
    let mut manifests = Vec::new();
    if !manifest_dir.exists() {
        return Ok(manifests);
    }
    let mut names: Vec<String> = Vec::new();
    for entry in fs::read_dir(manifest_dir)? {
        let entry = entry?;
        if let Some(name) = entry.file_name().to_str() {
            if name.ends_with(".d") {
                names.push(name.to_owned());
            }
        }
    }
    names.sort();
    for name in names {
        let text = fs::read_to_string(manifest_dir.join(&name))?;
        manifests.push(DepManifest::parse(&text)?);
    }
    Ok(manifests)
}
