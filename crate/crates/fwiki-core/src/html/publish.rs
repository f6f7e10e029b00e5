//! Rendering into the sandbox and incremental publication.
//!
//! HTML is regenerated for the whole influenced set of a change — a
//! dependent's links into a changed article may move even when its own text
//! did not — and written through the sandbox's hash index, so unchanged
//! pages cost nothing. Publication copies only influenced pages (hash-
//! diffed) plus the index into the publish directory, after a link-check
//! over the sandbox's complete page set; a broken link aborts before the
//! publish directory is touched.

use crate::depgraph::DirtySet;
use crate::lang::{parse_article, ArticleName};
use crate::sandbox::Sandbox;
use crate::verify::BuildState;
use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use super::linkcheck::{crawl, BrokenLink};
use super::render::{page_name, render_article, render_index, LinkIndex, RenderError};

#[derive(Debug, thiserror::Error)]
pub enum PublishError {
    #[error("{0} broken links, publish aborted (first: {1})")]
    BrokenLinks(usize, BrokenLink),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("cannot render `{0}`: {1}")]
    UnreadableSource(ArticleName, String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Regenerate pages inside the sandbox for `targets` (or for every verified
/// article when `targets` is `None`), drop pages of articles gone from the
/// state, and rewrite the index. Returns the page files whose bytes
/// actually changed.
pub fn render_into_sandbox(
    sandbox: &mut Sandbox,
    state: &BuildState,
    targets: Option<&BTreeSet<ArticleName>>,
) -> Result<BTreeSet<String>, PublishError> {
    let index = LinkIndex::from_state(state);
    let mut written = BTreeSet::new();

    let render_set: BTreeSet<ArticleName> = match targets {
        Some(set) => set.iter().filter(|n| state.records.contains_key(*n)).cloned().collect(),
        None => state.records.keys().cloned().collect(),
    };

    for name in &render_set {
        let bytes = sandbox
            .read(&name.file_name())
            .map_err(|e| PublishError::UnreadableSource(name.clone(), e.to_string()))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| PublishError::UnreadableSource(name.clone(), e.to_string()))?;
        let article = parse_article(text, name)
            .map_err(|e| PublishError::UnreadableSource(name.clone(), e.to_string()))?;
        let page = render_article(&article, &index)?;
        let rel = format!("html/{}", page.file_name);
        if sandbox.write_if_changed(&rel, &page.html)? {
            written.insert(rel);
        }
    }

    // Remove pages whose article has left the library.
    let live: BTreeSet<String> = state.records.keys().map(page_name).collect();
    for file in sandbox.list_dir("html")? {
        if file != "index.html" && !live.contains(&file) {
            let rel = format!("html/{file}");
            sandbox.remove_file(&rel)?;
            written.insert(rel);
        }
    }

    let index_page = render_index(&index.item_counts());
    let rel = format!("html/{}", index_page.file_name);
    if sandbox.write_if_changed(&rel, &index_page.html)? {
        written.insert(rel);
    }
    Ok(written)
}

/// Publish from the sandbox's `html/` into the publish directory: pages of
/// `dirty.influenced` plus the index, hash-diffed; pages of deleted articles
/// are removed. Link-checks the sandbox page set first and aborts — publish
/// directory intact — on any broken link. Returns the paths written or
/// removed.
pub fn publish(
    dirty: &DirtySet,
    sandbox: &Sandbox,
    publish_dir: &Path,
) -> Result<BTreeSet<String>, PublishError> {
    let candidates: BTreeSet<String> = dirty
        .influenced
        .iter()
        .map(page_name)
        .chain(std::iter::once("index.html".to_owned()))
        .collect();
    publish_pages(&candidates, &dirty.deleted, sandbox, publish_dir)
}

/// Publish every page the sandbox holds and prune everything else from the
/// publish directory.
pub fn publish_all(sandbox: &Sandbox, publish_dir: &Path) -> Result<BTreeSet<String>, PublishError> {
    let pages: BTreeSet<String> = sandbox.list_dir("html")?.into_iter().collect();
    let mut orphans: BTreeSet<ArticleName> = BTreeSet::new();
    if publish_dir.exists() {
        for entry in fs::read_dir(publish_dir)? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.ends_with(".html") && !pages.contains(name) {
                if let Some(article) = ArticleName::from_file_name(
                    &name.replace(".html", ".fml"),
                ) {
                    orphans.insert(article);
                }
            }
        }
    }
    publish_pages(&pages, &orphans, sandbox, publish_dir)
}

fn publish_pages(
    candidates: &BTreeSet<String>,
    deleted: &BTreeSet<ArticleName>,
    sandbox: &Sandbox,
    publish_dir: &Path,
) -> Result<BTreeSet<String>, PublishError> {
    // Link totality over the complete sandbox page set; its content is what
    // the publish directory will converge to.
    let broken = crawl(&sandbox.root().join("html"))?;
    if let Some(first) = broken.first() {
        return Err(PublishError::BrokenLinks(broken.len(), first.clone()));
    }

    fs::create_dir_all(publish_dir)?;
    let mut written = BTreeSet::new();
    for page in candidates {
        let source = match sandbox.read(&format!("html/{page}")) {
            Ok(bytes) => bytes,
            // An influenced article that was deleted in the same change has
            // no page; deletion handling below covers it.
            Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
            Err(e) => return Err(e.into()),
        };
        let target = publish_dir.join(page);
        let unchanged = fs::read(&target).is_ok_and(|existing| existing == source);
        if !unchanged {
            fs::write(&target, &source)?;
            written.insert(page.clone());
        }
    }
    for gone in deleted {
        let target = publish_dir.join(page_name(gone));
        if target.exists() {
            fs::remove_file(&target)?;
            written.insert(page_name(gone));
        }
    }
    Ok(written)
}
