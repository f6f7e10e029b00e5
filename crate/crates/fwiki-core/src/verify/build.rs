//! Minimal re-verification: planning and parallel execution.
//!
//! The plan covers the influenced set in dependency layers. Execution walks
//! the layers and re-verifies an article only when its staleness is
//! confirmed: it was directly changed, it has no verified record, or one of
//! its imports' signature hashes moved. A rebuilt import whose signature
//! came out unchanged therefore cuts its dependents off. Dependents of a
//! failed article are skipped with their prior records retained.
//!
//! The resulting state is identical for every worker count: records are a
//! pure function of sources and import exports, and merges happen in
//! article order.

use crate::depgraph::{topo_order, DependencyGraph, DirtySet};
use crate::diag::{Diagnostic, DiagnosticKind};
use crate::hash::ContentHash;
use crate::lang::{parse_article, ArticleName};
use std::collections::{BTreeMap, BTreeSet};

use super::check::verify_article;
use super::signature::ExportSignature;
use super::state::{BuildRecord, BuildState, LibraryVerdict, Verdict};

#[derive(Clone, Debug)]
pub struct BuildPlan {
    /// Antichain layers over the influenced set; within a layer articles are
    /// independent and may verify concurrently.
    pub layers: Vec<BTreeSet<ArticleName>>,
    pub dirty: DirtySet,
}

impl BuildPlan {
    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(|l| l.is_empty())
    }
}

/// Plan the minimal rebuild for a dirty set. Articles outside
/// `dirty.influenced` never appear; staleness within the plan is confirmed
/// per article during execution (early cutoff).
pub fn plan_build(graph: &DependencyGraph, dirty: &DirtySet) -> BuildPlan {
    BuildPlan { layers: topo_order(graph, &dirty.influenced), dirty: dirty.clone() }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// Articles actually verified this run.
    pub verified: BTreeSet<ArticleName>,
    /// Planned articles confirmed fresh and not re-verified.
    pub cutoff: BTreeSet<ArticleName>,
    /// Articles not attempted because an import failed or was skipped.
    pub skipped: BTreeSet<ArticleName>,
    pub failed: BTreeSet<ArticleName>,
}

impl BuildReport {
    pub fn diagnostics_of(&self, state: &BuildState) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for name in &self.failed {
            if let Some(record) = state.records.get(name) {
                out.extend(record.verdict.diagnostics().iter().cloned());
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BuildOutcome {
    pub state: BuildState,
    pub report: BuildReport,
}

/// Execute a build plan. `sources` must hold the current bytes of every
/// article in the plan; `prior` is the build state the plan was made
/// against.
pub fn run_build(
    plan: &BuildPlan,
    graph: &DependencyGraph,
    prior: &BuildState,
    sources: &BTreeMap<ArticleName, Vec<u8>>,
    workers: usize,
) -> BuildOutcome {
    let workers = workers.max(1);
    let mut records = prior.records.clone();
    for gone in &plan.dirty.deleted {
        records.remove(gone);
    }

    // The exports the previous build produced: what cut-off dependents were
    // verified against.
    let prior_exports: BTreeMap<ArticleName, ExportSignature> = records
        .values()
        .filter_map(|r| r.export.clone())
        .map(|e| (e.article.clone(), e))
        .collect();
    // Exports and signature hashes currently in force, updated as layers
    // complete.
    let mut exports = prior_exports.clone();
    let mut current_sigs: BTreeMap<ArticleName, ContentHash> =
        exports.iter().map(|(n, e)| (n.clone(), e.sig_hash)).collect();

    let mut report = BuildReport::default();
    let mut unusable: BTreeSet<ArticleName> = BTreeSet::new(); // failed or skipped this run

    for layer in &plan.layers {
        let mut tasks: Vec<&ArticleName> = Vec::new();
        for name in layer {
            if graph.imports_of(name).any(|m| unusable.contains(m)) {
                report.skipped.insert(name.clone());
                unusable.insert(name.clone());
                continue;
            }
            if needs_verify(name, &plan.dirty.changed, &records, &current_sigs, &prior_exports, &exports)
            {
                tasks.push(name);
            } else {
                // Early cutoff: the record stands; its observed import
                // signatures move up to the current ones.
                let record = records.get_mut(name).expect("cutoff requires a record");
                for (import, sig) in record.import_sigs.iter_mut() {
                    if let Some(current) = current_sigs.get(import) {
                        *sig = *current;
                    }
                }
                report.cutoff.insert(name.clone());
            }
        }

        let results = verify_layer(&tasks, sources, &exports, workers);

        for record in results {
            let name = record.article.clone();
            match &record.verdict {
                Verdict::Verified => {
                    let export = record.export.clone().expect("verified record has export");
                    current_sigs.insert(name.clone(), export.sig_hash);
                    exports.insert(name.clone(), export);
                    report.verified.insert(name.clone());
                }
                Verdict::Failed(_) => {
                    current_sigs.remove(&name);
                    exports.remove(&name);
                    report.failed.insert(name.clone());
                    unusable.insert(name.clone());
                }
            }
            records.insert(name, record);
        }
    }

    let coherent = report.failed.is_empty()
        && report.skipped.is_empty()
        && records.values().all(|r| r.verdict.is_verified());
    let state = BuildState {
        records,
        library_verdict: if coherent { LibraryVerdict::Coherent } else { LibraryVerdict::Incoherent },
    };
    BuildOutcome { state, report }
}

/// Staleness confirmation for a planned article that was not itself edited.
/// It must be re-verified unless every import either kept its signature or
/// changed by a theorem-only extension — the one interface change a
/// dependent provably cannot observe.
fn needs_verify(
    name: &ArticleName,
    changed: &BTreeSet<ArticleName>,
    records: &BTreeMap<ArticleName, BuildRecord>,
    current_sigs: &BTreeMap<ArticleName, ContentHash>,
    prior_exports: &BTreeMap<ArticleName, ExportSignature>,
    exports: &BTreeMap<ArticleName, ExportSignature>,
) -> bool {
    if changed.contains(name) {
        return true;
    }
    let Some(record) = records.get(name) else {
        return true;
    };
    if !record.verdict.is_verified() {
        return true;
    }
    for (import, observed_sig) in &record.import_sigs {
        match current_sigs.get(import) {
            Some(current) if current == observed_sig => {}
            Some(_) => {
                let provably_unobservable = match (prior_exports.get(import), exports.get(import))
                {
                    (Some(old), Some(new)) if old.sig_hash == *observed_sig => {
                        ExportSignature::is_theorem_only_extension(old, new)
                    }
                    _ => false,
                };
                if !provably_unobservable {
                    return true;
                }
            }
            None => return true,
        }
    }
    false
}

/// Verify one layer's articles, up to `workers` at a time. Inputs are
/// immutable snapshots; results are merged by the caller in article order.
fn verify_layer(
    tasks: &[&ArticleName],
    sources: &BTreeMap<ArticleName, Vec<u8>>,
    exports: &BTreeMap<ArticleName, ExportSignature>,
    workers: usize,
) -> Vec<BuildRecord> {
    if tasks.is_empty() {
        return Vec::new();
    }
    let mut records: Vec<BuildRecord> = if tasks.len() == 1 || workers == 1 {
        tasks.iter().map(|name| verify_one(name, sources, exports)).collect()
    } else {
        let threads = workers.min(tasks.len());
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let chunk: Vec<&ArticleName> =
                        tasks.iter().copied().skip(t).step_by(threads).collect();
                    scope.spawn(move || {
                        chunk
                            .into_iter()
                            .map(|name| verify_one(name, sources, exports))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("verifier thread panicked")).collect()
        })
    };
    records.sort_by(|a, b| a.article.cmp(&b.article));
    records
}

fn verify_one(
    name: &ArticleName,
    sources: &BTreeMap<ArticleName, Vec<u8>>,
    exports: &BTreeMap<ArticleName, ExportSignature>,
) -> BuildRecord {
    let Some(bytes) = sources.get(name) else {
        return failed_record(
            name,
            ContentHash::of(b""),
            Diagnostic::for_article(
                name,
                DiagnosticKind::Infrastructure,
                "source bytes missing from build input",
            ),
        );
    };
    let source_hash = ContentHash::of(bytes);
    let text = match std::str::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            return failed_record(
                name,
                source_hash,
                Diagnostic::for_article(
                    name,
                    DiagnosticKind::Parse,
                    format!("source is not valid UTF-8: {e}"),
                ),
            );
        }
    };
    match parse_article(text, name) {
        Ok(article) => verify_article(&article, source_hash, exports),
        Err(err) => failed_record(
            name,
            source_hash,
            Diagnostic {
                article: Some(name.clone()),
                span: Some(crate::lang::Span::new(err.line, err.column)),
                kind: DiagnosticKind::Parse,
                message: err.message,
            },
        ),
    }
}

fn failed_record(name: &ArticleName, source_hash: ContentHash, diag: Diagnostic) -> BuildRecord {
    BuildRecord {
        article: name.clone(),
        source_hash,
        import_sigs: BTreeMap::new(),
        export: None,
        verdict: Verdict::Failed(vec![diag]),
    }
}

/// Verify an entire source tree from scratch, ignoring any prior state: the
/// brute-force oracle the incremental gate must agree with.
pub fn verify_full(
    sources: &BTreeMap<ArticleName, Vec<u8>>,
    workers: usize,
) -> Result<BuildOutcome, crate::depgraph::GraphError> {
    use crate::depgraph::{compute_dirty, DepManifest};

    let mut manifests = Vec::new();
    let mut bad: Vec<BuildRecord> = Vec::new();
    for (name, bytes) in sources {
        match DepManifest::from_source(name, bytes) {
            Ok(m) => manifests.push(m),
            Err(err) => bad.push(failed_record(
                name,
                ContentHash::of(bytes),
                Diagnostic {
                    article: Some(name.clone()),
                    span: Some(crate::lang::Span::new(err.line, err.column)),
                    kind: DiagnosticKind::Parse,
                    message: err.message,
                },
            )),
        }
    }
    let graph = DependencyGraph::build(&manifests)?;
    let all: BTreeSet<ArticleName> = graph.nodes().clone();
    let dirty = compute_dirty(&graph, &all, &BTreeSet::new());
    let plan = plan_build(&graph, &dirty);
    let mut outcome = run_build(&plan, &graph, &BuildState::default(), sources, workers);
    for record in bad {
        outcome.report.failed.insert(record.article.clone());
        outcome.state.records.insert(record.article.clone(), record);
        outcome.state.library_verdict = LibraryVerdict::Incoherent;
    }
    Ok(outcome)
}
