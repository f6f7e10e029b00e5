//! Static cross-linked HTML presentation of the library.

pub mod linkcheck;
pub mod publish;
pub mod render;

pub use linkcheck::{crawl, BrokenLink};
pub use publish::{publish, publish_all, render_into_sandbox, PublishError};
pub use render::{page_name, render_article, render_index, LinkIndex, RenderError, RenderedPage};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::ContentHash;
    use crate::lang::{parse_article, ArticleName};
    use crate::verify::{verify_article, BuildState, LibraryVerdict};
    use std::collections::BTreeMap;

    fn name(s: &str) -> ArticleName {
        ArticleName::new(s).unwrap()
    }

    /// Verify a set of sources in dependency order and assemble the state.
    fn verified_state(sources: &[(&str, &str)]) -> (BuildState, BTreeMap<ArticleName, String>) {
        let mut exports = BTreeMap::new();
        let mut records = BTreeMap::new();
        let mut texts = BTreeMap::new();
        for (n, src) in sources {
            let article = parse_article(src, &name(n)).unwrap();
            let record = verify_article(&article, ContentHash::of(src.as_bytes()), &exports);
            assert!(record.verdict.is_verified(), "{n}: {:?}", record.verdict);
            exports.insert(name(n), record.export.clone().unwrap());
            records.insert(name(n), record);
            texts.insert(name(n), src.to_string());
        }
        (BuildState { records, library_verdict: LibraryVerdict::Coherent }, texts)
    }

    #[test]
    fn single_definition_page() {
        let (state, _) = verified_state(&[("a", "article a\nenviron\nbegin\ndef d1 : v := 3;\n")]);
        let index = LinkIndex::from_state(&state);
        let article =
            parse_article("article a\nenviron\nbegin\ndef d1 : v := 3;\n", &name("a")).unwrap();
        let page = render_article(&article, &index).unwrap();
        assert_eq!(page.file_name, "a.html");
        assert_eq!(page.anchors, ["item-d1".to_owned()].into());
        assert!(page.outlinks.is_empty());
        let html = String::from_utf8(page.html).unwrap();
        assert!(html.contains("id=\"item-d1\""));
    }

    #[test]
    fn theorem_citing_import_links_to_it() {
        let g_src = "article g\nenviron\nbegin\ndef d1 : c := 2;\n";
        let h_src = "article h\nenviron imports g;\nbegin\nthm t : c = 2 by g:d1;\n";
        let (state, _) = verified_state(&[("g", g_src), ("h", h_src)]);
        let index = LinkIndex::from_state(&state);
        let article = parse_article(h_src, &name("h")).unwrap();
        let page = render_article(&article, &index).unwrap();
        let html = String::from_utf8(page.html).unwrap();
        // The identifier `c` resolves into g, and the citation points at d1.
        assert!(html.contains("<a href=\"g.html#item-d1\">c</a>"), "{html}");
        assert!(html.contains("<a href=\"g.html#item-d1\">g:d1</a>"), "{html}");
        assert!(page.outlinks.contains(&("g.html".to_owned(), "item-d1".to_owned())));
    }

    #[test]
    fn locally_shadowed_symbol_links_locally() {
        let g_src = "article g\nenviron\nbegin\ndef d1 : v := 1;\n";
        let h_src = "article h\nenviron imports g;\nbegin\ndef mine : v := v + 1;\nthm t : v = 2 by evaluation;\n";
        let (state, _) = verified_state(&[("g", g_src), ("h", h_src)]);
        let index = LinkIndex::from_state(&state);
        let article = parse_article(h_src, &name("h")).unwrap();
        let page = render_article(&article, &index).unwrap();
        let html = String::from_utf8(page.html).unwrap();
        // Body of the shadowing definition still points into g...
        assert!(html.contains(":= <a href=\"g.html#item-d1\">v</a>"), "{html}");
        // ...while the theorem after it points at the local item.
        assert!(html.contains("<a href=\"#item-mine\">v</a>"), "{html}");
    }

    #[test]
    fn relations_are_escaped() {
        let src = "article a\nenviron\nbegin\nthm t : 1 <= 2 by evaluation;\n";
        let (state, _) = verified_state(&[("a", src)]);
        let article = parse_article(src, &name("a")).unwrap();
        let page = render_article(&article, &LinkIndex::from_state(&state)).unwrap();
        let html = String::from_utf8(page.html).unwrap();
        assert!(html.contains("1 &lt;= 2"), "{html}");
    }

    #[test]
    fn index_lists_articles_with_counts() {
        let (state, _) = verified_state(&[
            ("a", "article a\nenviron\nbegin\ndef d : v := 1;\n"),
            ("b", "article b\nenviron\nbegin\ndef d : w := 1;\nthm t : w = 1 by d;\n"),
        ]);
        let index = LinkIndex::from_state(&state);
        let page = render_index(&index.item_counts());
        let html = String::from_utf8(page.html).unwrap();
        assert!(html.contains("<a href=\"a.html\">a</a> (1 item)"));
        assert!(html.contains("<a href=\"b.html\">b</a> (2 items)"));
    }

    #[test]
    fn empty_index_is_valid() {
        let page = render_index(&BTreeMap::new());
        let html = String::from_utf8(page.html).unwrap();
        assert!(html.contains("The library is empty."));
        assert!(page.outlinks.is_empty());
    }

    #[test]
    fn rendering_is_deterministic() {
        let src = "article a\nenviron\nbegin\ndef d : v := 1;\nthm t : v < 2 by d;\n";
        let (state, _) = verified_state(&[("a", src)]);
        let index = LinkIndex::from_state(&state);
        let article = parse_article(src, &name("a")).unwrap();
        let one = render_article(&article, &index).unwrap();
        let two = render_article(&article, &index).unwrap();
        assert_eq!(one.html, two.html);
    }
}
