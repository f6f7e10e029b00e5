//! Single-writer repository lock. One gate run at a time: the lock file is
//! created exclusively and removed on drop.

use std::fs::OpenOptions;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

pub const LOCK_FILE: &str = "gate.lock";

#[derive(Debug, thiserror::Error)]
pub enum LockError {
    #[error("another gate run is active (lock file `{0}` exists)")]
    Busy(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct GateLock {
    path: PathBuf,
}

impl GateLock {
    pub fn acquire(repo_root: &Path) -> Result<Self, LockError> {
        let path = repo_root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(GateLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                Err(LockError::Busy(path.display().to_string()))
            }
            Err(e) => Err(LockError::Io(e)),
        }
    }
}

impl Drop for GateLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
