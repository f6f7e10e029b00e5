//! Repository configuration: `fwiki.conf` at the repository root, plain
//! `key = value` lines.
//!
//! Keys: `central`, `frontend`, `publish`, `workers`, `max_files`,
//! `max_bytes`, `mirror`. Admin tokens live in a separate `tokens` file,
//! one per line.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const CONFIG_FILE: &str = "fwiki.conf";
pub const TOKENS_FILE: &str = "tokens";

pub const DEFAULT_MAX_FILES: usize = 100;
pub const DEFAULT_MAX_BYTES: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepoConfig {
    /// The central repository root (also where this config lives).
    pub central: PathBuf,
    /// The unchecked staging repository users push to.
    pub frontend: PathBuf,
    /// Where rendered HTML is published.
    pub publish: PathBuf,
    pub workers: usize,
    /// Abuse caps: largest request accepted by the gate.
    pub max_files: usize,
    pub max_bytes: u64,
    /// Optional second sync target for the source tree, updated post-commit.
    pub mirror: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("no repository at `{0}` (missing {CONFIG_FILE})")]
    NotARepo(String),
    #[error("malformed config line: `{0}`")]
    Malformed(String),
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value for `{key}`: {value}")]
    BadValue { key: &'static str, value: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl RepoConfig {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "central = {}", self.central.display());
        let _ = writeln!(out, "frontend = {}", self.frontend.display());
        let _ = writeln!(out, "publish = {}", self.publish.display());
        let _ = writeln!(out, "workers = {}", self.workers);
        let _ = writeln!(out, "max_files = {}", self.max_files);
        let _ = writeln!(out, "max_bytes = {}", self.max_bytes);
        if let Some(mirror) = &self.mirror {
            let _ = writeln!(out, "mirror = {}", mirror.display());
        }
        out
    }

    pub fn save(&self) -> io::Result<()> {
        fs::write(self.central.join(CONFIG_FILE), self.to_text())
    }

    pub fn load(repo_root: &Path) -> Result<Self, ConfigError> {
        let path = repo_root.join(CONFIG_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|_| ConfigError::NotARepo(repo_root.display().to_string()))?;
        let mut central = None;
        let mut frontend = None;
        let mut publish = None;
        let mut workers: Option<usize> = None;
        let mut max_files = DEFAULT_MAX_FILES;
        let mut max_bytes = DEFAULT_MAX_BYTES;
        let mut mirror = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Malformed(line.to_owned()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "central" => central = Some(PathBuf::from(value)),
                "frontend" => frontend = Some(PathBuf::from(value)),
                "publish" => publish = Some(PathBuf::from(value)),
                "workers" => {
                    workers = Some(value.parse().map_err(|_| ConfigError::BadValue {
                        key: "workers",
                        value: value.to_owned(),
                    })?)
                }
                "max_files" => {
                    max_files = value.parse().map_err(|_| ConfigError::BadValue {
                        key: "max_files",
                        value: value.to_owned(),
                    })?
                }
                "max_bytes" => {
                    max_bytes = value.parse().map_err(|_| ConfigError::BadValue {
                        key: "max_bytes",
                        value: value.to_owned(),
                    })?
                }
                "mirror" => mirror = Some(PathBuf::from(value)),
                _ => return Err(ConfigError::Malformed(line.to_owned())),
            }
        }
        let config = RepoConfig {
            central: central.ok_or(ConfigError::MissingKey("central"))?,
            frontend: frontend.ok_or(ConfigError::MissingKey("frontend"))?,
            publish: publish.ok_or(ConfigError::MissingKey("publish"))?,
            workers: workers.ok_or(ConfigError::MissingKey("workers"))?.max(1),
            max_files,
            max_bytes,
            mirror,
        };
        Ok(config)
    }

    pub fn clean_dir(&self) -> PathBuf {
        self.central.join("clean")
    }

    pub fn dirty_dir(&self) -> PathBuf {
        self.central.join("dirty")
    }

    pub fn store_dir(&self) -> PathBuf {
        self.central.join("store")
    }

    pub fn gate_log(&self) -> PathBuf {
        self.central.join("gate.log")
    }

    pub fn last_report(&self) -> PathBuf {
        self.central.join("last_gate.json")
    }

    pub fn admin_tokens(&self) -> io::Result<Vec<String>> {
        let text = fs::read_to_string(self.central.join(TOKENS_FILE)).unwrap_or_default();
        Ok(text.lines().map(|l| l.trim().to_owned()).filter(|l| !l.is_empty()).collect())
    }
}
