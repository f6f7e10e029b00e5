//! Overlaying a proposed changeset onto the dirty sandbox.
//!
//! Only bare `<name>.fml` paths at the sandbox root are writable: anything
//! else — traversal attempts, generated directories, foreign extensions —
//! is rejected before a byte lands.

use crate::lang::ArticleName;
use crate::repo::request::{Change, ChangeAction};
use std::collections::BTreeSet;
use std::io;

use super::tree::Sandbox;

#[derive(Debug, thiserror::Error)]
pub enum OverlayError {
    #[error("illegal path `{0}`: only `<name>.fml` at the library root is writable")]
    IllegalPath(String),
    #[error("cannot delete `{0}`: no such article")]
    MissingDelete(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Apply a changeset to the (freshly synced) dirty sandbox. Returns the
/// paths written or deleted. All changes land before any verification runs;
/// the request is atomic from the gate's point of view.
pub fn overlay(target: &mut Sandbox, changes: &[Change]) -> Result<BTreeSet<String>, OverlayError> {
    // Validate everything first so a bad request touches nothing.
    let mut touched = BTreeSet::new();
    for change in changes {
        let name = ArticleName::from_file_name(&change.path)
            .ok_or_else(|| OverlayError::IllegalPath(change.path.clone()))?;
        if change.action == ChangeAction::Delete && !target.exists(&name.file_name()) {
            return Err(OverlayError::MissingDelete(change.path.clone()));
        }
        touched.insert(name.file_name());
    }
    for change in changes {
        let name = ArticleName::from_file_name(&change.path).expect("validated above");
        match change.action {
            ChangeAction::Add | ChangeAction::Modify => {
                let payload = change.payload.as_deref().unwrap_or_default();
                target.write_file(&name.file_name(), payload)?;
            }
            ChangeAction::Delete => {
                target.remove_file(&name.file_name())?;
            }
        }
    }
    Ok(touched)
}
