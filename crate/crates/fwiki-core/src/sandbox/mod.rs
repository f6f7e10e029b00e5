//! Clean and dirty sandboxes: content-addressed tree sync, changeset
//! overlay, crash-safe promotion and the repository gate lock.

pub mod idx;
pub mod lock;
pub mod overlay;
pub mod tree;

pub use lock::{GateLock, LockError, LOCK_FILE};
pub use overlay::{overlay, OverlayError};
pub use tree::{
    diff_candidates, diff_trees, promote, sync, sync_candidates, PromoteError, Role, Sandbox,
    SyncPlan, SyncStats, ALIGNED_PATH, INDEX_PATH, MARKER_PATH,
};
