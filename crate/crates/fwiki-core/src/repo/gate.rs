//! The commit gate.
//!
//! One pipeline guards the central master branch: take the repository lock,
//! make sure the clean sandbox really is the head snapshot (recovering it
//! from the store if a previous run died), synchronize clean into dirty,
//! overlay the proposed changes, refresh manifests, rebuild the dependency
//! graph, compute the dirty set, run the minimal parallel build, and either
//! commit + promote + publish or reject with the full diagnostics. A
//! rejected or crashed attempt leaves the clean sandbox and the central
//! branch exactly as they were. The pre-commit hook runs the same pipeline
//! with the commit half disabled.

use crate::depgraph::{self, compute_dirty, DependencyGraph, GraphError};
use crate::diag::{Diagnostic, DiagnosticKind};
use crate::hash::ContentHash;
use crate::html;
use crate::lang::ArticleName;
use crate::sandbox::{self, GateLock, LockError, OverlayError, Role, Sandbox, SyncStats};
use crate::verify::{plan_build, run_build, BuildOutcome, BuildState, ExportSignature, StateError};
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::time::Instant;

use super::backend::{BackendError, Delta, VcsBackend};
use super::config::RepoConfig;
use super::request::{ChangeAction, CommitRequest, CommitResult, CommitVerdict};

pub const STATE_JSON: &str = "state/build.json";
pub const EXPORTS_DIR: &str = "state/exports";

/// Failures of the machinery itself, as opposed to rejected changesets.
#[derive(Debug, thiserror::Error)]
pub enum GateError {
    #[error("another gate run is active")]
    LockBusy,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("build state is unusable: {0}")]
    State(#[from] StateError),
    #[error("cannot render: {0}")]
    Render(String),
    #[error("the central head failed verification; the store is corrupt")]
    CentralTainted,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<LockError> for GateError {
    fn from(e: LockError) -> Self {
        match e {
            LockError::Busy(_) => GateError::LockBusy,
            LockError::Io(e) => GateError::Io(e),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Full gate: admissible changes are committed, promoted and published.
    Commit,
    /// Guard only: verdict and diagnostics, nothing advances.
    CheckOnly,
}

struct PhaseClock {
    started: Instant,
    timings: BTreeMap<String, u64>,
}

impl PhaseClock {
    fn new() -> Self {
        PhaseClock { started: Instant::now(), timings: BTreeMap::new() }
    }

    fn lap(&mut self, phase: &str) {
        let elapsed = self.started.elapsed().as_micros() as u64;
        self.timings.insert(phase.to_owned(), elapsed);
        self.started = Instant::now();
    }
}

/// Run the full gate for a proposed changeset. `Ok` carries both accepted
/// and rejected verdicts; `Err` means the machinery itself failed and
/// nothing was committed.
pub fn submit(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    request: &CommitRequest,
) -> Result<CommitResult, GateError> {
    let result = pipeline(config, backend, request, Mode::Commit)?;
    let _ = fs::write(config.last_report(), result.to_json());
    match &result.verdict {
        CommitVerdict::Accepted { commit_id } => log_line(
            config,
            &format!(
                "commit {commit_id} author {} verified {} cutoff {}",
                request.author,
                result.verified.len(),
                result.cutoff.len()
            ),
        ),
        CommitVerdict::Rejected { diagnostics } => {
            let first = diagnostics.first().map(|d| d.to_string()).unwrap_or_default();
            log_line(config, &format!("rejected: {first}"));
        }
    }
    Ok(result)
}

/// The same pipeline as [`submit`] with the commit step disabled: the
/// pre-commit guard. An admissible changeset yields `Accepted` with an
/// empty commit id.
pub fn check_only(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    request: &CommitRequest,
) -> Result<CommitResult, GateError> {
    pipeline(config, backend, request, Mode::CheckOnly)
}

fn pipeline(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    request: &CommitRequest,
    mode: Mode,
) -> Result<CommitResult, GateError> {
    // Structural validation and abuse caps come before any work.
    let mut problems = request.validate();
    if request.changes.len() > config.max_files {
        problems.push(format!(
            "request touches {} files, cap is {}",
            request.changes.len(),
            config.max_files
        ));
    }
    if request.payload_bytes() > config.max_bytes {
        problems.push(format!(
            "request carries {} payload bytes, cap is {}",
            request.payload_bytes(),
            config.max_bytes
        ));
    }
    if !problems.is_empty() {
        let diags = problems
            .into_iter()
            .map(|p| Diagnostic::global(DiagnosticKind::RequestInvalid, p))
            .collect();
        return Ok(CommitResult::rejected(diags));
    }

    let _lock = GateLock::acquire(&config.central)?;
    let mut clock = PhaseClock::new();

    ensure_clean(config, backend)?;
    clock.lap("recover");

    let mut clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    let mut dirty = Sandbox::open(config.dirty_dir(), Role::Dirty)?;

    // The previous promotion left dirty identical to clean and recorded the
    // fact; only then can the tree walk be skipped. Any other history —
    // rejected overlays, crashes, first run — forces a full sync.
    let clean_head = clean.read_marker();
    let aligned = clean_head.is_some() && dirty.read_aligned() == clean_head;
    if !aligned {
        sandbox::sync(&mut clean, &mut dirty)?;
    }
    // About to mutate dirty: it stops being aligned no matter what happens.
    dirty.clear_aligned()?;
    clock.lap("sync");

    // Discard this run's dirty deltas and re-establish alignment. Cheaper
    // than leaving dirty diverged, which would force the next gate run into
    // a full tree walk.
    let mut discard = |clean: &mut Sandbox, dirty: &mut Sandbox| -> Result<(), GateError> {
        let touched = dirty.touched().clone();
        sandbox::sync_candidates(clean, dirty, &touched)?;
        if let Some(head) = &clean_head {
            dirty.write_aligned(head)?;
        }
        Ok(())
    };

    match sandbox::overlay(&mut dirty, &request.changes) {
        Ok(_) => {}
        Err(OverlayError::IllegalPath(path)) => {
            discard(&mut clean, &mut dirty)?;
            return Ok(CommitResult::rejected(vec![Diagnostic::global(
                DiagnosticKind::IllegalPath,
                format!("illegal path `{path}`"),
            )]));
        }
        Err(OverlayError::MissingDelete(path)) => {
            discard(&mut clean, &mut dirty)?;
            return Ok(CommitResult::rejected(vec![Diagnostic::global(
                DiagnosticKind::RequestInvalid,
                format!("cannot delete `{path}`: no such article"),
            )]));
        }
        Err(OverlayError::Io(e)) => return Err(e.into()),
    }
    clock.lap("overlay");

    let refresh = refresh_manifests(&mut dirty)?;
    if !refresh.errors.is_empty() {
        let diags = refresh
            .errors
            .iter()
            .map(|(name, err)| Diagnostic {
                article: Some(name.clone()),
                span: Some(crate::lang::Span::new(err.line, err.column)),
                kind: DiagnosticKind::Parse,
                message: err.message.clone(),
            })
            .collect();
        discard(&mut clean, &mut dirty)?;
        return Ok(CommitResult::rejected(diags));
    }
    clock.lap("manifests");

    let manifests = load_manifests(&dirty)?;
    let graph = match DependencyGraph::build(&manifests) {
        Ok(graph) => graph,
        Err(err) => {
            let kind = match &err {
                GraphError::Cycle { .. } => DiagnosticKind::Cycle,
                GraphError::DanglingImport { .. } => DiagnosticKind::DanglingImport,
            };
            discard(&mut clean, &mut dirty)?;
            return Ok(CommitResult::rejected(vec![Diagnostic::global(kind, err.to_string())]));
        }
    };
    clock.lap("graph");

    let dirty_set = compute_dirty(&graph, &refresh.refreshed, &refresh.removed);
    clock.lap("dirty");

    let prior = load_state(&dirty)?;
    let plan = plan_build(&graph, &dirty_set);
    let sources = load_sources(&dirty, plan.layers.iter().flatten())?;
    let outcome = run_build(&plan, &graph, &prior, &sources, config.workers);
    store_state(&mut dirty, &outcome.state)?;
    clock.lap("build");

    let report = &outcome.report;
    let mut result = CommitResult {
        verdict: CommitVerdict::Accepted { commit_id: String::new() },
        verified: report.verified.clone(),
        cutoff: report.cutoff.clone(),
        skipped: report.skipped.clone(),
        timings: BTreeMap::new(),
        promote_stats: Default::default(),
    };

    if !outcome.state.is_coherent() {
        result.verdict =
            CommitVerdict::Rejected { diagnostics: report.diagnostics_of(&outcome.state) };
        result.timings = clock.timings;
        discard(&mut clean, &mut dirty)?;
        dirty.flush_index()?;
        return Ok(result);
    }

    if mode == Mode::CheckOnly {
        result.timings = clock.timings;
        discard(&mut clean, &mut dirty)?;
        dirty.flush_index()?;
        return Ok(result);
    }

    html::render_into_sandbox(&mut dirty, &outcome.state, Some(&dirty_set.influenced))
        .map_err(|e| GateError::Render(e.to_string()))?;
    dirty.flush_index()?;
    clock.lap("render");

    let delta = request_delta(request);
    let commit_id =
        backend.commit(&config.store_dir(), "master", &delta, &request.author, &request.message)?;
    clock.lap("commit");

    // Everything this run changed in dirty went through the sandbox handle,
    // and dirty started out identical to clean, so the promotion sync only
    // needs to look at the touched paths.
    let touched = dirty.touched().clone();
    let (_plan, promote_stats) =
        sandbox::promote(&mut dirty, &mut clean, &commit_id, Some(&touched)).map_err(
            |e| match e {
                sandbox::PromoteError::Io(e) => GateError::Io(e),
                other => GateError::Render(other.to_string()),
            },
        )?;
    clock.lap("promote");

    // Presentation is downstream of correctness: publish and mirror
    // failures are logged, the commit stands.
    if let Err(err) = html::publish(&dirty_set, &clean, &config.publish) {
        log_line(config, &format!("publish failed for {commit_id}: {err}"));
    }
    if let Some(mirror) = &config.mirror {
        if let Err(err) = mirror_sources(&clean, mirror) {
            log_line(config, &format!("mirror sync failed for {commit_id}: {err}"));
        }
    }
    clock.lap("publish");

    result.verdict = CommitVerdict::Accepted { commit_id };
    result.timings = clock.timings;
    result.promote_stats = promote_stats.into();
    Ok(result)
}

/// Make sure the clean sandbox is the verified snapshot of the master head;
/// rebuild it from the store when the marker is missing or stale (a
/// previous run crashed between commit and promotion, or mid-promotion).
pub fn ensure_clean(config: &RepoConfig, backend: &dyn VcsBackend) -> Result<(), GateError> {
    let head = backend
        .head(&config.store_dir(), "master")?
        .ok_or_else(|| BackendError::MissingRef("master".to_owned()))?;
    {
        let clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
        if clean.read_marker().as_deref() == Some(head.as_str()) {
            return Ok(());
        }
    }
    rebuild_clean(config, backend, &head)
}

/// Reconstruct the clean sandbox from the store's master head: sources from
/// the commit tree, then a full verification, render and marker write.
pub fn rebuild_clean(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    head: &str,
) -> Result<(), GateError> {
    let tree = backend.read_tree(&config.store_dir(), head)?;
    let sources: BTreeMap<ArticleName, Vec<u8>> = tree
        .iter()
        .filter_map(|(p, b)| ArticleName::from_file_name(p).map(|n| (n, b.clone())))
        .collect();
    let outcome = crate::verify::verify_full(&sources, config.workers)
        .map_err(|e| GateError::Render(e.to_string()))?;
    if !outcome.state.is_coherent() {
        return Err(GateError::CentralTainted);
    }
    build_clean_from(config, head, &sources, &outcome)
}

/// Materialize a clean sandbox from already-verified sources. The caller
/// guarantees `outcome` is the coherent verification of `sources` at `head`.
pub fn build_clean_from(
    config: &RepoConfig,
    head: &str,
    sources: &BTreeMap<ArticleName, Vec<u8>>,
    outcome: &BuildOutcome,
) -> Result<(), GateError> {
    let clean_dir = config.clean_dir();
    if clean_dir.exists() {
        fs::remove_dir_all(&clean_dir)?;
    }
    let mut clean = Sandbox::open(&clean_dir, Role::Clean)?;
    for (name, bytes) in sources {
        clean.write_file(&name.file_name(), bytes)?;
    }
    for (name, bytes) in sources {
        let manifest = crate::depgraph::DepManifest::from_source(name, bytes)
            .map_err(|e| GateError::Render(format!("manifest for {name}: {e}")))?;
        clean.write_file(
            &format!("{}/{}", depgraph::MANIFEST_DIR, crate::depgraph::DepManifest::file_name(name)),
            manifest.to_text().as_bytes(),
        )?;
    }
    store_state(&mut clean, &outcome.state)?;
    html::render_into_sandbox(&mut clean, &outcome.state, None)
        .map_err(|e| GateError::Render(e.to_string()))?;
    clean.flush_index()?;
    clean.write_marker(head)?;
    Ok(())
}

/// The effective source delta of a request.
fn request_delta(request: &CommitRequest) -> Delta {
    request
        .changes
        .iter()
        .map(|c| {
            let payload = match c.action {
                ChangeAction::Delete => None,
                _ => Some(c.payload.clone().unwrap_or_default()),
            };
            (c.path.clone(), payload)
        })
        .collect()
}

/// Sandbox-integrated manifest refresh: hashes go through the sandbox index
/// and manifest writes go through the write-through cache.
pub fn refresh_manifests(
    sandbox: &mut Sandbox,
) -> Result<crate::depgraph::RefreshOutcome, GateError> {
    use crate::depgraph::{DepManifest, RefreshOutcome, MANIFEST_DIR};

    let mut outcome = RefreshOutcome::default();
    let mut scratch = SyncStats::default();

    let sources: Vec<ArticleName> = sandbox
        .list_dir("")?
        .iter()
        .filter_map(|f| ArticleName::from_file_name(f))
        .collect();
    let manifests: BTreeSet<ArticleName> = sandbox
        .list_dir(MANIFEST_DIR)?
        .iter()
        .filter_map(|f| f.strip_suffix(".d").and_then(|stem| ArticleName::new(stem).ok()))
        .collect();

    for name in &sources {
        let source_rel = name.file_name();
        let manifest_rel = format!("{MANIFEST_DIR}/{}", DepManifest::file_name(name));
        let current = sandbox.hash_of(&source_rel, &mut scratch)?;
        let stored = if sandbox.exists(&manifest_rel) {
            sandbox
                .read(&manifest_rel)
                .ok()
                .and_then(|b| String::from_utf8(b).ok())
                .and_then(|t| DepManifest::parse(&t).ok())
        } else {
            None
        };
        if stored.as_ref().map(|m| m.source_hash) == Some(current) {
            continue;
        }
        let bytes = sandbox.read(&source_rel)?;
        match DepManifest::from_source(name, &bytes) {
            Ok(manifest) => {
                sandbox.write_file(&manifest_rel, manifest.to_text().as_bytes())?;
                outcome.refreshed.insert(name.clone());
            }
            Err(err) => outcome.errors.push((name.clone(), err)),
        }
    }

    let live: BTreeSet<&ArticleName> = sources.iter().collect();
    for name in &manifests {
        if !live.contains(name) {
            sandbox.remove_file(&format!("{MANIFEST_DIR}/{}", DepManifest::file_name(name)))?;
            outcome.removed.insert(name.clone());
        }
    }
    Ok(outcome)
}

fn load_manifests(sandbox: &Sandbox) -> Result<Vec<crate::depgraph::DepManifest>, GateError> {
    crate::depgraph::load_manifests(&sandbox.root().join(depgraph::MANIFEST_DIR))
        .map_err(|e| GateError::Render(format!("unreadable manifests: {e}")))
}

/// Load the persisted build state of a sandbox (empty when none exists).
pub fn load_state(sandbox: &Sandbox) -> Result<BuildState, GateError> {
    if !sandbox.exists(STATE_JSON) {
        return Ok(BuildState::default());
    }
    let json = sandbox.read(STATE_JSON)?;
    let json = String::from_utf8(json)
        .map_err(|e| GateError::State(StateError::Malformed(e.to_string())))?;
    let state = BuildState::from_parts(&json, |name| {
        sandbox
            .read(&format!("{EXPORTS_DIR}/{}", ExportSignature::file_name(name)))
            .ok()
            .and_then(|b| String::from_utf8(b).ok())
    })?;
    Ok(state)
}

/// Persist a build state into a sandbox: canonical `build.json` plus one
/// export file per verified article, all written only when changed.
pub fn store_state(sandbox: &mut Sandbox, state: &BuildState) -> Result<(), GateError> {
    sandbox.write_if_changed(STATE_JSON, state.to_canonical_json().as_bytes())?;
    let mut live: BTreeSet<String> = BTreeSet::new();
    for record in state.records.values() {
        if let Some(export) = &record.export {
            let name = ExportSignature::file_name(&export.article);
            sandbox.write_if_changed(
                &format!("{EXPORTS_DIR}/{name}"),
                export.canonical_text().as_bytes(),
            )?;
            live.insert(name);
        }
    }
    for name in sandbox.list_dir(EXPORTS_DIR)? {
        if !live.contains(&name) {
            sandbox.remove_file(&format!("{EXPORTS_DIR}/{name}"))?;
        }
    }
    Ok(())
}

fn load_sources<'a>(
    sandbox: &Sandbox,
    names: impl Iterator<Item = &'a ArticleName>,
) -> Result<BTreeMap<ArticleName, Vec<u8>>, GateError> {
    let mut out = BTreeMap::new();
    for name in names {
        let rel = name.file_name();
        if sandbox.exists(&rel) {
            out.insert(name.clone(), sandbox.read(&rel)?);
        }
    }
    Ok(out)
}

/// Post-commit mirror: the source files of the clean snapshot, hash-diffed
/// into a second directory.
fn mirror_sources(clean: &Sandbox, mirror: &std::path::Path) -> io::Result<()> {
    fs::create_dir_all(mirror)?;
    let mut live = BTreeSet::new();
    for (rel, _) in clean.files()? {
        if ArticleName::from_file_name(&rel).is_none() {
            continue;
        }
        let bytes = clean.read(&rel)?;
        let target = mirror.join(&rel);
        if fs::read(&target).ok().as_deref() != Some(bytes.as_slice()) {
            fs::write(&target, &bytes)?;
        }
        live.insert(rel);
    }
    for entry in fs::read_dir(mirror)? {
        let entry = entry?;
        let Ok(name) = entry.file_name().into_string() else { continue };
        if name.ends_with(".fml") && !live.contains(&name) {
            fs::remove_file(entry.path())?;
        }
    }
    Ok(())
}

pub fn log_line(config: &RepoConfig, line: &str) {
    use std::io::Write as _;
    if let Ok(mut file) = fs::OpenOptions::new().create(true).append(true).open(config.gate_log())
    {
        let _ = writeln!(file, "{line}");
    }
}

/// A full from-scratch verification of the clean sandbox's sources, in
/// memory, touching nothing: the oracle incremental builds are checked
/// against.
pub fn verify_full_clean(config: &RepoConfig) -> Result<BuildOutcome, GateError> {
    let clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    let mut sources = BTreeMap::new();
    for rel in clean.list_dir("")? {
        if let Some(name) = ArticleName::from_file_name(&rel) {
            sources.insert(name, clean.read(&rel)?);
        }
    }
    crate::verify::verify_full(&sources, config.workers)
        .map_err(|e| GateError::Render(e.to_string()))
}

/// The staged changeset of the frontend relative to the central master:
/// what a push proposes.
pub fn staged_request(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    author: &str,
    message: &str,
) -> Result<CommitRequest, GateError> {
    let head = backend
        .head(&config.store_dir(), "master")?
        .ok_or_else(|| BackendError::MissingRef("master".to_owned()))?;
    let base = backend.read_tree(&config.store_dir(), &head)?;
    let target = backend.frontend_tree(&config.frontend)?;
    let delta = super::backend::delta_between(&base, &target);
    let changes = delta
        .into_iter()
        .map(|(path, payload)| match payload {
            Some(bytes) => {
                if base.contains_key(&path) {
                    super::request::Change::modify(path, bytes)
                } else {
                    super::request::Change::add(path, bytes)
                }
            }
            None => super::request::Change::delete(path),
        })
        .collect();
    Ok(CommitRequest { author: author.to_owned(), message: message.to_owned(), changes })
}

/// Tree hash of the clean sandbox (isolation checks).
pub fn clean_tree_hash(config: &RepoConfig) -> Result<ContentHash, GateError> {
    let mut clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    Ok(clean.tree_hash()?)
}
