//! Backend driving an external `git` binary.
//!
//! The store is an ordinary git repository whose worktree carries only the
//! article sources; generated files are kept out by an ignore file. The
//! frontend is a bare clone that accepts any push; its post-receive hook
//! execs this tool, which is where the gate runs. Gate commits use
//! `--no-verify`: the gate itself is the verification, and the repository's
//! own pre-commit hook exists to guard manual commits made in the store.
//!
//! Commit dates are pinned so that identical request sequences produce
//! identical hashes, mirroring the deterministic plain-directory backend.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use super::backend::{BackendError, Delta, VcsBackend};

pub struct GitBackend;

const GIT_EPOCH: &str = "2005-04-07T22:13:13 +0000";
const IGNORE_RULES: &str = "deps/\nstate/\nhtml/\nVALID\ngate.lock\n";

/// A git command rooted at `dir`. Hooks run with GIT_DIR pointing at the
/// hooked repository; child git processes must instead discover the
/// repository from their working directory.
fn git_cmd(dir: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.current_dir(dir)
        .env_remove("GIT_DIR")
        .env_remove("GIT_WORK_TREE")
        .env_remove("GIT_INDEX_FILE")
        .env("GIT_AUTHOR_DATE", GIT_EPOCH)
        .env("GIT_COMMITTER_DATE", GIT_EPOCH)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_SYSTEM", "/dev/null");
    cmd
}

fn git(store: &Path, args: &[&str]) -> Result<String, BackendError> {
    let output = git_cmd(store)
        .args(args)
        .output()
        .map_err(|e| BackendError::Tool(format!("cannot run git: {e}")))?;
    if output.status.success() {
        Ok(String::from_utf8_lossy(&output.stdout).trim_end().to_owned())
    } else {
        Err(BackendError::Tool(format!(
            "git {} failed: {}",
            args.first().copied().unwrap_or(""),
            String::from_utf8_lossy(&output.stderr).trim()
        )))
    }
}

/// git wants `Name <email>`; requests carry a free-form author string.
fn author_ident(author: &str) -> String {
    let cleaned: String = author
        .chars()
        .map(|c| if c == '<' || c == '>' || c == '\n' { '_' } else { c })
        .collect();
    let cleaned = if cleaned.trim().is_empty() { "anon".to_owned() } else { cleaned };
    let slug: String = cleaned
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    let slug = if slug.is_empty() { "anon".to_owned() } else { slug };
    format!("{cleaned} <{slug}@fwiki.local>")
}

pub fn git_available() -> bool {
    Command::new("git").arg("--version").output().is_ok_and(|o| o.status.success())
}

impl VcsBackend for GitBackend {
    fn name(&self) -> &'static str {
        "git"
    }

    fn init(&self, store: &Path) -> Result<(), BackendError> {
        fs::create_dir_all(store)?;
        git(store, &["init", "-q", "-b", "master"])?;
        git(store, &["config", "user.name", "fwiki gate"])?;
        git(store, &["config", "user.email", "gate@fwiki.local"])?;
        git(store, &["config", "receive.denyCurrentBranch", "ignore"])?;
        fs::write(store.join(".gitignore"), IGNORE_RULES)?;
        Ok(())
    }

    fn commit(
        &self,
        store: &Path,
        branch: &str,
        delta: &Delta,
        author: &str,
        message: &str,
    ) -> Result<String, BackendError> {
        if self.head(store, branch)?.is_some() {
            git(store, &["checkout", "-q", branch])?;
        } else if branch != "master" {
            git(store, &["checkout", "-q", "-b", branch])?;
        }
        for (path, bytes) in delta {
            let target = store.join(path);
            match bytes {
                Some(bytes) => fs::write(&target, bytes)?,
                None => {
                    if target.exists() {
                        fs::remove_file(&target)?;
                    }
                }
            }
        }
        git(store, &["add", "-A"])?;
        let author_arg = format!("--author={}", author_ident(author));
        let message = if message.is_empty() { "(no message)" } else { message };
        git(
            store,
            &["commit", "-q", "--no-verify", "--allow-empty", &author_arg, "-m", message],
        )?;
        git(store, &["rev-parse", "HEAD"])
    }

    fn head(&self, store: &Path, branch: &str) -> Result<Option<String>, BackendError> {
        let spec = format!("refs/heads/{branch}");
        match git(store, &["rev-parse", "--verify", "-q", &spec]) {
            Ok(id) if !id.is_empty() => Ok(Some(id)),
            _ => Ok(None),
        }
    }

    fn set_branch(&self, store: &Path, branch: &str, commit: &str) -> Result<(), BackendError> {
        git(store, &["branch", "-f", branch, commit]).map(|_| ())
    }

    fn tag(&self, store: &Path, name: &str, commit: &str) -> Result<(), BackendError> {
        git(store, &["tag", name, commit]).map(|_| ())
    }

    fn tags(&self, store: &Path) -> Result<Vec<String>, BackendError> {
        let out = git(store, &["tag", "--list"])?;
        Ok(out.lines().map(str::to_owned).filter(|l| !l.is_empty()).collect())
    }

    fn read_tree(
        &self,
        store: &Path,
        commit: &str,
    ) -> Result<BTreeMap<String, Vec<u8>>, BackendError> {
        let listing = git(store, &["ls-tree", "-r", "--name-only", commit])?;
        let mut tree = BTreeMap::new();
        for path in listing.lines() {
            if !path.ends_with(".fml") {
                continue;
            }
            let output = git_cmd(store)
                .args(["show", &format!("{commit}:{path}")])
                .output()
                .map_err(|e| BackendError::Tool(format!("cannot run git: {e}")))?;
            if !output.status.success() {
                return Err(BackendError::Corrupt(format!("cannot read {commit}:{path}")));
            }
            tree.insert(path.to_owned(), output.stdout);
        }
        Ok(tree)
    }

    fn history(&self, store: &Path, branch: &str) -> Result<Vec<String>, BackendError> {
        let out = git(store, &["rev-list", "--reverse", "--first-parent", branch])?;
        Ok(out.lines().map(str::to_owned).filter(|l| !l.is_empty()).collect())
    }

    fn clone_frontend(&self, store: &Path, frontend: &Path) -> Result<(), BackendError> {
        let parent = frontend.parent().unwrap_or(Path::new("."));
        fs::create_dir_all(parent)?;
        let output = git_cmd(parent)
            .args([
                "clone",
                "-q",
                "--bare",
                &store.display().to_string(),
                &frontend.display().to_string(),
            ])
            .output()
            .map_err(|e| BackendError::Tool(format!("cannot run git: {e}")))?;
        if !output.status.success() {
            return Err(BackendError::Tool(format!(
                "git clone failed: {}",
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(())
    }

    fn frontend_tree(&self, frontend: &Path) -> Result<BTreeMap<String, Vec<u8>>, BackendError> {
        match self.head(frontend, "master")? {
            Some(head) => self.read_tree(frontend, &head),
            None => Ok(BTreeMap::new()),
        }
    }

    fn install_hooks(
        &self,
        store: &Path,
        frontend: &Path,
        repo_root: &Path,
        exe: &Path,
    ) -> Result<(), BackendError> {
        let repo = repo_root.display();
        let exe = exe.display();
        write_hook(
            &frontend.join("hooks/post-receive"),
            &format!("#!/bin/sh\nexec {exe} hook post-receive --repo {repo}\n"),
        )?;
        write_hook(
            &store.join(".git/hooks/pre-commit"),
            &format!("#!/bin/sh\nexec {exe} hook pre-commit --repo {repo}\n"),
        )?;
        write_hook(
            &store.join(".git/hooks/post-commit"),
            &format!("#!/bin/sh\nexec {exe} hook post-commit --repo {repo}\n"),
        )?;
        Ok(())
    }
}

fn write_hook(path: &Path, script: &str) -> Result<(), BackendError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, script)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o755))?;
    }
    Ok(())
}
