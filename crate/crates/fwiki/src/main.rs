//! `fwiki` — a coherence-guarded repository for libraries of formal
//! articles. Proposed changes are verified against the whole library by
//! re-checking exactly the influenced dependency subgraph in a sandbox;
//! only coherence-preserving commits reach the central master branch, and
//! a cross-linked HTML presentation is published incrementally.
//!
//! Exit codes: 0 success/admissible, 1 rejected/inadmissible, 2 usage,
//! 3 infrastructure failure.

use clap::{Parser, Subcommand, ValueEnum};
use fwiki_core::repo::{
    self, BackendChoice, CommitRequest, CommitResult, CommitVerdict, GateError, InitError,
    InitOptions, ReleaseError, RepoConfig,
};
use fwiki_core::sandbox::{Role, Sandbox};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_REJECTED: u8 = 1;
const EXIT_INFRA: u8 = 3;

#[derive(Parser)]
#[command(name = "fwiki", version, about = "coherence-guarded formal article repository")]
struct Cli {
    /// Emit machine-readable JSON reports on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    /// Hermetic plain-directory store (content-addressed snapshots).
    #[default]
    Plaindir,
    /// Drive an external `git` binary; pushes and hooks work natively.
    Git,
}

#[derive(Subcommand)]
enum Command {
    /// Create a repository (central + frontend + publish) from seed articles.
    Init {
        #[arg(long)]
        central: PathBuf,
        #[arg(long)]
        frontend: PathBuf,
        #[arg(long)]
        publish: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t)]
        backend: BackendArg,
        /// Optional second sync target for sources, updated post-commit.
        #[arg(long)]
        mirror: Option<PathBuf>,
        /// Directory of seed `.fml` files; empty library when omitted.
        seed_dir: Option<PathBuf>,
    },
    /// Propose a changeset to the gate.
    Submit {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        author: String,
        #[arg(short, long)]
        message: String,
        /// Article file to add (repeatable).
        #[arg(long)]
        add: Vec<PathBuf>,
        /// Article file to modify (repeatable).
        #[arg(long)]
        modify: Vec<PathBuf>,
        /// Article name to delete (repeatable).
        #[arg(long)]
        delete: Vec<String>,
    },
    /// Check library coherence. `--full` re-verifies everything from
    /// scratch, ignoring build state, and prints the resulting state.
    Verify {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        full: bool,
    },
    /// Fast-forward the stable branch to master (admins only).
    Release {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        token: String,
    },
    /// Coherence verdict, branch heads and the last gate report.
    Status {
        #[arg(long)]
        repo: PathBuf,
    },
    /// Re-publish the HTML presentation; `--all` re-renders every page.
    Render {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        all: bool,
    },
    /// Hook entry points for the version-control backend.
    Hook {
        #[command(subcommand)]
        which: HookKind,
    },
}

#[derive(Subcommand)]
enum HookKind {
    /// Gate the staged changeset; nonzero exit blocks the commit.
    PreCommit {
        #[arg(long)]
        repo: PathBuf,
    },
    /// Gate the frontend's proposed tree and commit it if admissible.
    PostReceive {
        #[arg(long)]
        repo: PathBuf,
    },
    /// Regenerate and publish the presentation for the current head.
    PostCommit {
        #[arg(long)]
        repo: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("fwiki: {err:#}");
            ExitCode::from(EXIT_INFRA)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Init { central, frontend, publish, workers, backend, mirror, seed_dir } => {
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(2, |n| n.get()));
            let options = InitOptions {
                central,
                frontend,
                publish,
                workers,
                mirror,
                backend: match backend {
                    BackendArg::Plaindir => BackendChoice::PlainDir,
                    BackendArg::Git => BackendChoice::Git,
                },
                seed: seed_dir,
            };
            match repo::init_repo(&options) {
                Ok((config, token)) => {
                    eprintln!("initialized repository at {}", config.central.display());
                    eprintln!("admin token: {token}");
                    Ok(EXIT_OK)
                }
                Err(InitError::SeedIncoherent(diags)) => {
                    eprintln!("seed library is incoherent:");
                    for d in diags {
                        eprintln!("  {d}");
                    }
                    Ok(EXIT_REJECTED)
                }
                Err(err) => Err(err.into()),
            }
        }

        Command::Submit { repo, author, message, add, modify, delete } => {
            let config = RepoConfig::load(&repo)?;
            let backend = repo::open_backend(&config)?;
            let request = build_request(&author, &message, &add, &modify, &delete)?;
            let result = gate_result(repo::submit(&config, backend.as_ref(), &request))?;
            report(&result, cli.json);
            Ok(exit_of(&result))
        }

        Command::Verify { repo, full } => {
            let config = RepoConfig::load(&repo)?;
            if full {
                let outcome = fwiki_core::repo::gate::verify_full_clean(&config)?;
                print!("{}", outcome.state.to_canonical_json());
                return Ok(if outcome.state.is_coherent() { EXIT_OK } else { EXIT_REJECTED });
            }
            let clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
            let state = fwiki_core::repo::gate::load_state(&clean)?;
            let stale = stale_articles(&config, &state)?;
            let coherent = state.is_coherent() && stale.is_empty();
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "coherent": coherent,
                        "articles": state.records.len(),
                        "stale": stale,
                    })
                );
            } else {
                eprintln!(
                    "{}: {} articles{}",
                    if coherent { "coherent" } else { "incoherent" },
                    state.records.len(),
                    if stale.is_empty() {
                        String::new()
                    } else {
                        format!(", stale: {}", stale.join(", "))
                    }
                );
            }
            Ok(if coherent { EXIT_OK } else { EXIT_REJECTED })
        }

        Command::Release { repo, token } => {
            let config = RepoConfig::load(&repo)?;
            let backend = repo::open_backend(&config)?;
            match repo::release_stable(&config, backend.as_ref(), &token) {
                Ok((commit, tag)) => {
                    eprintln!("stable -> {commit} ({tag})");
                    Ok(EXIT_OK)
                }
                Err(err @ (ReleaseError::AuthFailure | ReleaseError::NothingToRelease)) => {
                    eprintln!("release refused: {err}");
                    Ok(EXIT_REJECTED)
                }
                Err(err) => Err(err.into()),
            }
        }

        Command::Status { repo } => {
            let config = RepoConfig::load(&repo)?;
            let backend = repo::open_backend(&config)?;
            let status = repo::status(&config, backend.as_ref())?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "master": status.master,
                        "stable": status.stable,
                        "clean_marker": status.clean_marker,
                        "coherent": status.coherent,
                        "articles": status.article_count,
                    })
                );
            } else {
                eprintln!("master:  {}", status.master.as_deref().unwrap_or("(none)"));
                eprintln!("stable:  {}", status.stable.as_deref().unwrap_or("(none)"));
                eprintln!(
                    "clean:   {}",
                    match (&status.clean_marker, status.coherent) {
                        (Some(marker), Some(true)) => format!("coherent at {marker}"),
                        (Some(marker), _) => format!("INCOHERENT at {marker}"),
                        (None, _) => "not built".to_owned(),
                    }
                );
                eprintln!("articles: {}", status.article_count);
                if let Some(last) = &status.last_report {
                    eprintln!("last gate report:\n{last}");
                }
            }
            Ok(EXIT_OK)
        }

        Command::Render { repo, all } => {
            let config = RepoConfig::load(&repo)?;
            let backend = repo::open_backend(&config)?;
            repo::ensure_clean(&config, backend.as_ref())?;
            let mut clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
            if all {
                let state = fwiki_core::repo::gate::load_state(&clean)?;
                fwiki_core::html::render_into_sandbox(&mut clean, &state, None)
                    .map_err(|e| anyhow::anyhow!("render failed: {e}"))?;
                clean.flush_index()?;
            }
            let written = fwiki_core::html::publish_all(&clean, &config.publish)
                .map_err(|e| anyhow::anyhow!("publish failed: {e}"))?;
            eprintln!("published {} page(s)", written.len());
            Ok(EXIT_OK)
        }

        Command::Hook { which } => match which {
            HookKind::PreCommit { repo } => {
                let config = RepoConfig::load(&repo)?;
                let backend = repo::open_backend(&config)?;
                let result =
                    gate_result(repo::hook_pre_commit(&config, backend.as_ref()))?;
                report(&result, cli.json);
                Ok(exit_of(&result))
            }
            HookKind::PostReceive { repo } => {
                let config = RepoConfig::load(&repo)?;
                let backend = repo::open_backend(&config)?;
                let result =
                    gate_result(repo::hook_post_receive(&config, backend.as_ref()))?;
                report(&result, cli.json);
                Ok(exit_of(&result))
            }
            HookKind::PostCommit { repo } => {
                let config = RepoConfig::load(&repo)?;
                let backend = repo::open_backend(&config)?;
                repo::hook_post_commit(&config, backend.as_ref())?;
                Ok(EXIT_OK)
            }
        },
    }
}

fn build_request(
    author: &str,
    message: &str,
    add: &[PathBuf],
    modify: &[PathBuf],
    delete: &[String],
) -> anyhow::Result<CommitRequest> {
    use fwiki_core::repo::Change;
    let mut changes = Vec::new();
    for path in add {
        changes.push(Change::add(file_name_of(path)?, std::fs::read(path)?));
    }
    for path in modify {
        changes.push(Change::modify(file_name_of(path)?, std::fs::read(path)?));
    }
    for name in delete {
        let path = if name.ends_with(".fml") { name.clone() } else { format!("{name}.fml") };
        changes.push(Change::delete(path));
    }
    Ok(CommitRequest { author: author.to_owned(), message: message.to_owned(), changes })
}

fn file_name_of(path: &Path) -> anyhow::Result<String> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_owned)
        .ok_or_else(|| anyhow::anyhow!("`{}` has no usable file name", path.display()))
}

/// Articles whose source no longer matches their build record.
fn stale_articles(
    config: &RepoConfig,
    state: &fwiki_core::verify::BuildState,
) -> anyhow::Result<Vec<String>> {
    let mut clean = Sandbox::open(config.clean_dir(), Role::Clean)?;
    let mut stale = Vec::new();
    let mut scratch = fwiki_core::sandbox::SyncStats::default();
    for (name, record) in &state.records {
        let rel = name.file_name();
        if !clean.exists(&rel) || clean.hash_of(&rel, &mut scratch)? != record.source_hash {
            stale.push(name.to_string());
        }
    }
    for (rel, _) in clean.files()? {
        if let Some(name) = fwiki_core::lang::ArticleName::from_file_name(&rel) {
            if !state.records.contains_key(&name) {
                stale.push(name.to_string());
            }
        }
    }
    Ok(stale)
}

/// Infrastructure errors become process failures (exit 3); verdicts pass
/// through.
fn gate_result(result: Result<CommitResult, GateError>) -> anyhow::Result<CommitResult> {
    result.map_err(Into::into)
}

fn exit_of(result: &CommitResult) -> u8 {
    if result.verdict.is_accepted() {
        EXIT_OK
    } else {
        EXIT_REJECTED
    }
}

fn report(result: &CommitResult, json: bool) {
    if json {
        print!("{}", result.to_json());
        return;
    }
    match &result.verdict {
        CommitVerdict::Accepted { commit_id } if commit_id.is_empty() => {
            eprintln!(
                "admissible: {} verified, {} cut off, {} skipped",
                result.verified.len(),
                result.cutoff.len(),
                result.skipped.len()
            );
        }
        CommitVerdict::Accepted { commit_id } => {
            eprintln!(
                "accepted {commit_id}: {} verified, {} cut off",
                result.verified.len(),
                result.cutoff.len()
            );
        }
        CommitVerdict::Rejected { diagnostics } => {
            eprintln!("rejected: {} problem(s)", diagnostics.len());
            for d in diagnostics {
                eprintln!("  {d}");
            }
        }
    }
}
