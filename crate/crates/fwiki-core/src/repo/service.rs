//! Repository lifecycle: initialization, releases, status, hooks.

use crate::diag::Diagnostic;
use crate::html;
use crate::lang::ArticleName;
use crate::sandbox::{Role, Sandbox};
use crate::verify::verify_full;
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::backend::{delta_from_tree, BackendError, VcsBackend};
use super::config::{RepoConfig, CONFIG_FILE, TOKENS_FILE};
use super::gate::{self, GateError};
use super::gitvcs::GitBackend;
use super::plaindir::PlainDirBackend;
use super::request::{CommitRequest, CommitVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    PlainDir,
    Git,
}

pub fn backend_of(choice: BackendChoice) -> Box<dyn VcsBackend> {
    match choice {
        BackendChoice::PlainDir => Box::new(PlainDirBackend),
        BackendChoice::Git => Box::new(GitBackend),
    }
}

/// Open the backend owning an initialized repository.
pub fn open_backend(config: &RepoConfig) -> Result<Box<dyn VcsBackend>, BackendError> {
    super::backend::detect_backend(&config.store_dir())
}

#[derive(Debug, thiserror::Error)]
pub enum InitError {
    #[error("target `{0}` already contains a repository")]
    AlreadyExists(String),
    #[error("seed library is incoherent")]
    SeedIncoherent(Vec<Diagnostic>),
    #[error("seed directory problem: {0}")]
    BadSeed(String),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct InitOptions {
    pub central: PathBuf,
    pub frontend: PathBuf,
    pub publish: PathBuf,
    pub workers: usize,
    pub mirror: Option<PathBuf>,
    pub backend: BackendChoice,
    /// Directory of seed `.fml` files; empty library when absent.
    pub seed: Option<PathBuf>,
}

/// Create a repository: verify the seed, make the initial commit, build the
/// clean sandbox, clone the frontend, publish the site, and write config
/// and admin token. The seed is verified before anything is created, so a
/// bad seed leaves no repository behind.
pub fn init_repo(options: &InitOptions) -> Result<(RepoConfig, String), InitError> {
    // Hooks and the config outlive the caller's working directory; paths
    // must be absolute.
    let central = std::path::absolute(&options.central)?;
    if central.join(CONFIG_FILE).exists() {
        return Err(InitError::AlreadyExists(central.display().to_string()));
    }

    let seed = match &options.seed {
        Some(dir) => load_seed(dir)?,
        None => BTreeMap::new(),
    };
    let outcome = verify_full(&seed, options.workers)
        .map_err(|e| InitError::BadSeed(e.to_string()))?;
    if !outcome.state.is_coherent() {
        return Err(InitError::SeedIncoherent(outcome.state.diagnostics()));
    }

    fs::create_dir_all(&central)?;
    let config = RepoConfig {
        central: central.clone(),
        frontend: std::path::absolute(&options.frontend)?,
        publish: std::path::absolute(&options.publish)?,
        workers: options.workers.max(1),
        max_files: super::config::DEFAULT_MAX_FILES,
        max_bytes: super::config::DEFAULT_MAX_BYTES,
        mirror: options.mirror.as_deref().map(std::path::absolute).transpose()?,
    };

    let backend = backend_of(options.backend);
    let store = config.store_dir();
    backend.init(&store)?;
    let tree: BTreeMap<String, Vec<u8>> =
        seed.iter().map(|(n, b)| (n.file_name(), b.clone())).collect();
    let head = backend.commit(
        &store,
        "master",
        &delta_from_tree(&tree),
        "fwiki",
        "initial library",
    )?;
    backend.set_branch(&store, "stable", &head)?;

    gate::build_clean_from(&config, &head, &seed, &outcome)?;

    backend.clone_frontend(&store, &config.frontend)?;
    let exe = std::env::current_exe().unwrap_or_else(|_| PathBuf::from("fwiki"));
    backend.install_hooks(&store, &config.frontend, &central, &exe)?;

    let clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    html::publish_all(&clean, &config.publish).map_err(|e| GateError::Render(e.to_string()))?;
    if let Some(mirror) = &config.mirror {
        fs::create_dir_all(mirror)?;
        for (name, bytes) in &seed {
            fs::write(mirror.join(name.file_name()), bytes)?;
        }
    }

    config.save()?;
    let token = generate_token();
    fs::write(config.central.join(TOKENS_FILE), format!("{token}\n"))?;
    gate::log_line(&config, &format!("initialized with {} articles at {head}", seed.len()));
    Ok((config, token))
}

fn load_seed(dir: &Path) -> Result<BTreeMap<ArticleName, Vec<u8>>, InitError> {
    let mut seed = BTreeMap::new();
    if !dir.exists() {
        return Err(InitError::BadSeed(format!("no such directory: {}", dir.display())));
    }
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let Ok(file_name) = entry.file_name().into_string() else { continue };
        if !file_name.ends_with(".fml") {
            continue;
        }
        match ArticleName::from_file_name(&file_name) {
            Some(name) => {
                seed.insert(name, fs::read(entry.path())?);
            }
            None => {
                return Err(InitError::BadSeed(format!(
                    "`{file_name}` is not a valid article file name"
                )));
            }
        }
    }
    Ok(seed)
}

/// Derived from the process environment; no cryptographic claims, just
/// unguessable enough for a desk deployment.
fn generate_token() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    let pid = std::process::id() as u128;
    crate::hash::ContentHash::of(format!("{nanos}:{pid}").as_bytes()).to_hex()[..32].to_owned()
}

#[derive(Debug, thiserror::Error)]
pub enum ReleaseError {
    #[error("unknown admin token")]
    AuthFailure,
    #[error("stable already points at master; nothing to release")]
    NothingToRelease,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Fast-forward stable to the current master and tag it `release-N`.
pub fn release_stable(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    token: &str,
) -> Result<(String, String), ReleaseError> {
    let tokens = config.admin_tokens()?;
    if !tokens.iter().any(|t| t == token) {
        return Err(ReleaseError::AuthFailure);
    }
    let store = config.store_dir();
    let master = backend.head(&store, "master")?.ok_or(ReleaseError::NothingToRelease)?;
    let stable = backend.head(&store, "stable")?;
    if stable.as_deref() == Some(master.as_str()) {
        return Err(ReleaseError::NothingToRelease);
    }
    let next = backend
        .tags(&store)?
        .iter()
        .filter_map(|t| t.strip_prefix("release-").and_then(|n| n.parse::<u64>().ok()))
        .max()
        .unwrap_or(0)
        + 1;
    let tag = format!("release-{next}");
    backend.set_branch(&store, "stable", &master)?;
    backend.tag(&store, &tag, &master)?;
    gate::log_line(config, &format!("released {tag} at {master}"));
    Ok((master, tag))
}

/// Snapshot of repository health for `status`.
#[derive(Debug)]
pub struct RepoStatus {
    pub master: Option<String>,
    pub stable: Option<String>,
    pub clean_marker: Option<String>,
    pub coherent: Option<bool>,
    pub article_count: usize,
    pub last_report: Option<String>,
}

pub fn status(config: &RepoConfig, backend: &dyn VcsBackend) -> Result<RepoStatus, GateError> {
    let store = config.store_dir();
    let clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    let state = gate::load_state(&clean)?;
    let report = fs::read_to_string(config.last_report()).ok();
    Ok(RepoStatus {
        master: backend.head(&store, "master")?,
        stable: backend.head(&store, "stable")?,
        clean_marker: clean.read_marker(),
        coherent: clean.exists(gate::STATE_JSON).then(|| state.is_coherent()),
        article_count: state.records.len(),
        last_report: report,
    })
}

/// `hook post-receive`: gate whatever the frontend currently proposes. The
/// author and message identify the push, not an individual commit.
pub fn hook_post_receive(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
) -> Result<super::request::CommitResult, GateError> {
    let request = gate::staged_request(config, backend, "frontend", "push to frontend")?;
    gate::submit(config, backend, &request)
}

/// `hook pre-commit`: check the staged changeset without committing.
pub fn hook_pre_commit(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
) -> Result<super::request::CommitResult, GateError> {
    let request = gate::staged_request(config, backend, "staged", "pre-commit check")?;
    gate::check_only(config, backend, &request)
}

/// `hook post-commit`: regenerate and publish the presentation for the
/// current head. Never rolls anything back; failures land in the log.
pub fn hook_post_commit(config: &RepoConfig, backend: &dyn VcsBackend) -> Result<(), GateError> {
    gate::ensure_clean(config, backend)?;
    let clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    match html::publish_all(&clean, &config.publish) {
        Ok(written) => {
            gate::log_line(config, &format!("post-commit publish: {} pages", written.len()));
        }
        Err(err) => gate::log_line(config, &format!("post-commit publish failed: {err}")),
    }
    Ok(())
}

/// Submit helper that callers use when they already have a request.
pub fn submit(
    config: &RepoConfig,
    backend: &dyn VcsBackend,
    request: &CommitRequest,
) -> Result<super::request::CommitResult, GateError> {
    gate::submit(config, backend, request)
}

pub fn is_accepted(verdict: &CommitVerdict) -> bool {
    verdict.is_accepted()
}
