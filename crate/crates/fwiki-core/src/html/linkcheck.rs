//! Intra-site link checking over generated pages.
//!
//! The site is flat (`index.html`, `<article>.html`) and generated by this
//! crate, so a literal scan for `href="..."` and `id="..."` attributes is
//! exact. Every internal href must name an existing page, and every fragment
//! must name an existing anchor in its target page.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrokenLink {
    pub page: String,
    pub href: String,
    pub reason: String,
}

impl std::fmt::Display for BrokenLink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: broken link `{}`: {}", self.page, self.href, self.reason)
    }
}

/// Scan all attribute values of `name="..."` in an HTML document.
pub fn scan_attr(html: &str, name: &str) -> Vec<String> {
    let needle = format!("{name}=\"");
    let mut out = Vec::new();
    let mut rest = html;
    while let Some(at) = rest.find(&needle) {
        let start = at + needle.len();
        match rest[start..].find('"') {
            Some(end) => {
                out.push(rest[start..start + end].to_owned());
                rest = &rest[start + end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Crawl a published directory; returns every broken internal link.
pub fn crawl(dir: &Path) -> io::Result<Vec<BrokenLink>> {
    let mut pages: BTreeMap<String, String> = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let Some(name) = entry.file_name().to_str().map(str::to_owned) else { continue };
        if name.ends_with(".html") && entry.file_type()?.is_file() {
            pages.insert(name, fs::read_to_string(entry.path())?);
        }
    }
    let ids: BTreeMap<&str, BTreeSet<String>> = pages
        .iter()
        .map(|(name, html)| (name.as_str(), scan_attr(html, "id").into_iter().collect()))
        .collect();

    let mut broken = Vec::new();
    for (page, html) in &pages {
        for href in scan_attr(html, "href") {
            if href.contains("://") || href.starts_with("mailto:") {
                continue; // external; none are generated today
            }
            let (target, fragment) = match href.split_once('#') {
                Some(("", frag)) => (page.as_str(), Some(frag)),
                Some((path, frag)) => (path, Some(frag)),
                None => (href.as_str(), None),
            };
            let Some(anchors) = ids.get(target) else {
                broken.push(BrokenLink {
                    page: page.clone(),
                    href: href.clone(),
                    reason: format!("no page named `{target}`"),
                });
                continue;
            };
            if let Some(frag) = fragment {
                if !anchors.contains(frag) {
                    broken.push(BrokenLink {
                        page: page.clone(),
                        href: href.clone(),
                        reason: format!("`{target}` has no anchor `{frag}`"),
                    });
                }
            }
        }
    }
    Ok(broken)
}
