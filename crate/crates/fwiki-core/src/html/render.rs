//! Deterministic HTML rendering of verified articles.
//!
//! Every identifier occurrence that resolves to a definition becomes a link
//! to that definition's anchor, resolved exactly the way the verifier binds
//! symbols: own earlier definitions first, then imports in declared order.
//! Justification references link to the cited item. Anchors are
//! `#item-<label>`; pages are `<article>.html` plus `index.html`.

use crate::lang::{Article, ArticleName, Expr, Item, ItemKind, Justification, Rel};
use crate::verify::{BuildState, ExportPayload, ExportSignature};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

const STYLESHEET: &str = "body{font-family:serif;max-width:60em;margin:1em auto;padding:0 1em}\
h1{border-bottom:1px solid #888}\
.environ{color:#555}\
.item{margin:1em 0;padding:.5em;border-left:3px solid #ccc}\
.item h2{font-size:1em;margin:0 0 .3em}\
pre{margin:0;font-size:1em;white-space:pre-wrap}\
a{color:#046;text-decoration:none}\
a:hover{text-decoration:underline}\
ul.index{list-style:none;padding:0}\
ul.index li{margin:.2em 0}";

/// What each article exposes for link resolution, derived from verified
/// exports only.
#[derive(Clone, Debug, Default)]
pub struct ArticleLinks {
    /// symbol -> defining item label
    pub symbols: BTreeMap<String, String>,
    /// all exported item labels
    pub labels: BTreeSet<String>,
    pub item_count: usize,
}

/// Link resolution data for the whole library.
#[derive(Clone, Debug, Default)]
pub struct LinkIndex {
    articles: BTreeMap<ArticleName, ArticleLinks>,
}

impl LinkIndex {
    pub fn from_state(state: &BuildState) -> Self {
        let mut articles = BTreeMap::new();
        for (name, record) in &state.records {
            if let Some(export) = &record.export {
                articles.insert(name.clone(), Self::links_of(export));
            }
        }
        LinkIndex { articles }
    }

    fn links_of(export: &ExportSignature) -> ArticleLinks {
        let mut links = ArticleLinks { item_count: export.entries.len(), ..Default::default() };
        for entry in &export.entries {
            links.labels.insert(entry.label.clone());
            if let ExportPayload::Definition { symbol, .. } = &entry.payload {
                links.symbols.entry(symbol.clone()).or_insert_with(|| entry.label.clone());
            }
        }
        links
    }

    pub fn article(&self, name: &ArticleName) -> Option<&ArticleLinks> {
        self.articles.get(name)
    }

    pub fn item_counts(&self) -> BTreeMap<ArticleName, usize> {
        self.articles.iter().map(|(n, l)| (n.clone(), l.item_count)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedPage {
    pub file_name: String,
    pub html: Vec<u8>,
    pub anchors: BTreeSet<String>,
    /// (target page, fragment); empty fragment for page-only links.
    pub outlinks: BTreeSet<(String, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    /// The verifier resolved something the index cannot — an internal
    /// invariant breach, never a user error.
    #[error("missing index entry while rendering `{article}`: {what}")]
    MissingIndexEntry { article: ArticleName, what: String },
}

struct PageBuilder<'a> {
    article: &'a Article,
    index: &'a LinkIndex,
    /// Own definitions rendered so far: symbol -> label.
    local_symbols: BTreeMap<&'a str, &'a str>,
    /// Own item labels rendered so far (reference targets).
    local_labels: BTreeSet<&'a str>,
    out: String,
    anchors: BTreeSet<String>,
    outlinks: BTreeSet<(String, String)>,
}

/// Render one verified article. The index must cover its imports.
pub fn render_article(article: &Article, index: &LinkIndex) -> Result<RenderedPage, RenderError> {
    let mut b = PageBuilder {
        article,
        index,
        local_symbols: BTreeMap::new(),
        local_labels: BTreeSet::new(),
        out: String::new(),
        anchors: BTreeSet::new(),
        outlinks: BTreeSet::new(),
    };
    b.page()?;
    Ok(RenderedPage {
        file_name: page_name(&article.name),
        html: b.out.into_bytes(),
        anchors: b.anchors,
        outlinks: b.outlinks,
    })
}

pub fn page_name(article: &ArticleName) -> String {
    format!("{article}.html")
}

impl<'a> PageBuilder<'a> {
    fn page(&mut self) -> Result<(), RenderError> {
        let name = self.article.name.clone();
        self.head(name.as_str());
        let _ = writeln!(self.out, "<h1>{}</h1>", esc(name.as_str()));
        let imports: &'a [ArticleName] = &self.article.environ.imports;
        if imports.is_empty() {
            self.out.push_str("<p class=\"environ\">no imports</p>\n");
        } else {
            self.out.push_str("<p class=\"environ\">imports: ");
            for (i, import) in imports.iter().enumerate() {
                if i > 0 {
                    self.out.push_str(", ");
                }
                self.outlinks.insert((page_name(import), String::new()));
                let _ = write!(
                    self.out,
                    "<a href=\"{}\">{}</a>",
                    page_name(import),
                    esc(import.as_str())
                );
            }
            self.out.push_str("</p>\n");
        }
        let items: &'a [Item] = &self.article.items;
        for item in items {
            self.item(item)?;
        }
        self.out.push_str("</body>\n</html>\n");
        Ok(())
    }

    fn head(&mut self, title: &str) {
        let _ = write!(
            self.out,
            "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{}</style>\n</head>\n<body>\n",
            esc(title),
            STYLESHEET
        );
    }

    fn item(&mut self, item: &'a Item) -> Result<(), RenderError> {
        let anchor = format!("item-{}", item.label);
        let _ = writeln!(self.out, "<section class=\"item\" id=\"{anchor}\">");
        self.anchors.insert(anchor);
        match &item.kind {
            ItemKind::Definition { symbol, body } => {
                let _ = writeln!(self.out, "<h2>definition {}</h2>", esc(&item.label));
                let _ = write!(
                    self.out,
                    "<pre>def {} : <span class=\"sym\">{}</span> := ",
                    esc(&item.label),
                    esc(symbol)
                );
                self.expr(body)?;
                self.out.push_str(";</pre>\n");
                self.local_symbols.insert(symbol, &item.label);
            }
            ItemKind::Theorem { lhs, rel, rhs, justification } => {
                let _ = writeln!(self.out, "<h2>theorem {}</h2>", esc(&item.label));
                let _ = write!(self.out, "<pre>thm {} : ", esc(&item.label));
                self.expr(lhs)?;
                let _ = write!(self.out, " {} ", esc(rel_symbol(*rel)));
                self.expr(rhs)?;
                self.out.push_str(" by ");
                match justification {
                    Justification::Evaluation => self.out.push_str("evaluation"),
                    Justification::Refs(refs) => {
                        for (i, r) in refs.iter().enumerate() {
                            if i > 0 {
                                self.out.push_str(", ");
                            }
                            let (href, page, frag) = match &r.article {
                                Some(remote) => {
                                    let page = page_name(remote);
                                    let frag = format!("item-{}", r.label);
                                    (format!("{page}#{frag}"), page, frag)
                                }
                                None => {
                                    let frag = format!("item-{}", r.label);
                                    (
                                        format!("#{frag}"),
                                        page_name(&self.article.name),
                                        frag,
                                    )
                                }
                            };
                            self.outlinks.insert((page, frag));
                            let _ = write!(
                                self.out,
                                "<a href=\"{href}\">{}</a>",
                                esc(&r.to_string())
                            );
                        }
                    }
                }
                self.out.push_str(";</pre>\n");
            }
        }
        self.out.push_str("</section>\n");
        self.local_labels.insert(&item.label);
        Ok(())
    }

    fn expr(&mut self, expr: &Expr) -> Result<(), RenderError> {
        match expr {
            Expr::Int { value, .. } => {
                let _ = write!(self.out, "{value}");
            }
            Expr::Ident { name, .. } => {
                let (href, page, frag) = self.resolve_symbol(name)?;
                self.outlinks.insert((page, frag));
                let _ = write!(self.out, "<a href=\"{href}\">{}</a>", esc(name));
            }
            Expr::Binary { op, lhs, rhs, .. } => {
                self.expr(lhs)?;
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(rhs)?;
            }
            Expr::Paren { inner, .. } => {
                self.out.push('(');
                self.expr(inner)?;
                self.out.push(')');
            }
        }
        Ok(())
    }

    /// Mirror of the verifier's resolution order: own earlier definitions,
    /// then imports as declared.
    fn resolve_symbol(&self, symbol: &str) -> Result<(String, String, String), RenderError> {
        if let Some(label) = self.local_symbols.get(symbol) {
            let frag = format!("item-{label}");
            return Ok((format!("#{frag}"), page_name(&self.article.name), frag));
        }
        for import in &self.article.environ.imports {
            if let Some(links) = self.index.article(import) {
                if let Some(label) = links.symbols.get(symbol) {
                    let page = page_name(import);
                    let frag = format!("item-{label}");
                    return Ok((format!("{page}#{frag}"), page, frag));
                }
            }
        }
        Err(RenderError::MissingIndexEntry {
            article: self.article.name.clone(),
            what: format!("symbol `{symbol}` resolves nowhere"),
        })
    }
}

/// The library landing page: all articles alphabetically with item counts.
pub fn render_index(item_counts: &BTreeMap<ArticleName, usize>) -> RenderedPage {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>library index</title>\n<style>{STYLESHEET}</style>\n</head>\n<body>\n<h1>library index</h1>\n"
    );
    let mut outlinks = BTreeSet::new();
    if item_counts.is_empty() {
        out.push_str("<p>The library is empty.</p>\n");
    } else {
        out.push_str("<ul class=\"index\">\n");
        for (name, count) in item_counts {
            let page = page_name(name);
            let noun = if *count == 1 { "item" } else { "items" };
            let _ = writeln!(
                out,
                "<li><a href=\"{page}\">{}</a> ({count} {noun})</li>",
                esc(name.as_str())
            );
            outlinks.insert((page, String::new()));
        }
        out.push_str("</ul>\n");
    }
    out.push_str("</body>\n</html>\n");
    RenderedPage {
        file_name: "index.html".to_owned(),
        html: out.into_bytes(),
        anchors: BTreeSet::new(),
        outlinks,
    }
}

fn rel_symbol(rel: Rel) -> &'static str {
    match rel {
        Rel::Eq => "=",
        Rel::Lt => "<",
        Rel::Le => "<=",
    }
}

fn esc(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}
