//! Repository orchestration: frontend and central repositories over a
//! pluggable version-control backend, the commit gate, and lifecycle
//! commands.

pub mod backend;
pub mod config;
pub mod gate;
pub mod gitvcs;
pub mod plaindir;
pub mod request;
pub mod service;

pub use backend::{detect_backend, BackendError, Delta, VcsBackend};
pub use config::{ConfigError, RepoConfig, CONFIG_FILE, TOKENS_FILE};
pub use gate::{check_only, ensure_clean, submit, GateError};
pub use gitvcs::GitBackend;
pub use plaindir::PlainDirBackend;
pub use request::{Change, ChangeAction, CommitRequest, CommitResult, CommitVerdict};
pub use service::{
    backend_of, hook_post_commit, hook_post_receive, hook_pre_commit, init_repo, open_backend,
    release_stable, status, BackendChoice, InitError, InitOptions, ReleaseError, RepoStatus,
};
