//! Synthetic corpora, deterministic randomness and oracle helpers shared by
//! the integration and acceptance tests.

use fwiki_core::lang::ArticleName;
use fwiki_core::repo::{Change, CommitRequest};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Scratch directory for tests, on tmpfs when one is available — the suites
/// are file-operation heavy and some criteria carry wall-clock budgets.
pub fn scratch_dir() -> std::io::Result<tempfile::TempDir> {
    let shm = Path::new("/dev/shm");
    if shm.is_dir() {
        if let Ok(dir) = tempfile::tempdir_in(shm) {
            return Ok(dir);
        }
    }
    tempfile::tempdir()
}

/// Deterministic LCG, good enough for corpus shuffling.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound.max(1) as u64) as usize
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.next_u64() % 100 < percent
    }
}

/// A generated article, structured so tests can mutate it surgically and
/// re-render the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenArticle {
    pub name: String,
    pub imports: Vec<String>,
    /// (label, symbol, expression text)
    pub defs: Vec<(String, String, String)>,
    /// (label, statement text, justification text)
    pub thms: Vec<(String, String, String)>,
}

impl GenArticle {
    pub fn source(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "article {}", self.name);
        if self.imports.is_empty() {
            out.push_str("environ\n");
        } else {
            let _ = writeln!(out, "environ imports {};", self.imports.join(", "));
        }
        out.push_str("begin\n");
        for (label, symbol, expr) in &self.defs {
            let _ = writeln!(out, "def {label} : {symbol} := {expr};");
        }
        for (label, stmt, just) in &self.thms {
            let _ = writeln!(out, "thm {label} : {stmt} by {just};");
        }
        out
    }

    pub fn article_name(&self) -> ArticleName {
        ArticleName::new(&self.name).unwrap()
    }

    pub fn file_name(&self) -> String {
        format!("{}.fml", self.name)
    }
}

/// A whole generated library, keyed by article name.
pub type GenLibrary = BTreeMap<String, GenArticle>;

pub fn library_sources(lib: &GenLibrary) -> BTreeMap<ArticleName, Vec<u8>> {
    lib.values().map(|a| (a.article_name(), a.source().into_bytes())).collect()
}

pub fn write_library(lib: &GenLibrary, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for article in lib.values() {
        fs::write(dir.join(article.file_name()), article.source())?;
    }
    Ok(())
}

/// The linear chain: `c000 <- c001 <- ... <- c{n-1}`, every article binding
/// the same symbol `v` to its predecessor's value plus one. A definition
/// value edit at the root cascades through every signature; a
/// justification-only edit leaves every signature untouched.
pub fn chain(n: usize) -> GenLibrary {
    let mut lib = GenLibrary::new();
    for i in 0..n {
        let name = format!("c{i:03}");
        let (imports, def_expr) = if i == 0 {
            (vec![], "0".to_owned())
        } else {
            (vec![format!("c{:03}", i - 1)], "v + 1".to_owned())
        };
        let just = if i == 0 { "evaluation" } else { "d" };
        lib.insert(
            name.clone(),
            GenArticle {
                name,
                imports,
                defs: vec![("d".into(), "v".into(), def_expr)],
                thms: vec![("t".into(), "v < v + 1".into(), just.into())],
            },
        );
    }
    lib
}

/// The diamond: `b` and `c` import `a`; `d` imports both.
pub fn diamond() -> GenLibrary {
    let mut lib = GenLibrary::new();
    let mk = |name: &str, imports: &[&str], value_expr: &str| GenArticle {
        name: name.into(),
        imports: imports.iter().map(|s| s.to_string()).collect(),
        defs: vec![("d".into(), format!("v_{name}"), value_expr.into())],
        thms: vec![("t".into(), format!("v_{name} <= v_{name}"), "d".into())],
    };
    lib.insert("a".into(), mk("a", &[], "1"));
    lib.insert("b".into(), mk("b", &["a"], "v_a + 1"));
    lib.insert("c".into(), mk("c", &["a"], "v_a + 2"));
    lib.insert("d".into(), mk("d", &["b", "c"], "v_b + v_c"));
    lib
}

/// A layered library for scale tests: `layers × width` articles, each
/// importing one value parent plus up to two reference parents from the
/// previous layer, padded with `filler` computationally chunky theorems.
/// The article `leaf000` is a tiny dedicated leaf nothing imports.
pub fn layered(layers: usize, width: usize, filler: usize, rng: &mut Rng) -> GenLibrary {
    let mut lib = GenLibrary::new();
    let mut prev: Vec<String> = Vec::new();
    for layer in 0..layers {
        let mut current = Vec::new();
        for slot in 0..width {
            let name = format!("n{layer:02}x{slot:02}");
            let mut imports = Vec::new();
            let mut defs = Vec::new();
            let mut thms = Vec::new();
            let symbol = format!("w_{name}");
            if prev.is_empty() {
                defs.push(("d".to_owned(), symbol.clone(), format!("{}", slot + 1)));
            } else {
                let value_parent = prev[rng.below(prev.len())].clone();
                imports.push(value_parent.clone());
                for _ in 0..rng.below(3) {
                    let other = prev[rng.below(prev.len())].clone();
                    if !imports.contains(&other) {
                        imports.push(other);
                    }
                }
                defs.push((
                    "d".to_owned(),
                    symbol.clone(),
                    format!("w_{value_parent} + 1"),
                ));
                for (k, other) in imports.iter().enumerate().skip(1) {
                    thms.push((
                        format!("link{k}"),
                        format!("w_{other} <= w_{other}"),
                        "evaluation".to_owned(),
                    ));
                }
            }
            thms.push(("t".to_owned(), format!("{symbol} < {symbol} + 1"), "d".to_owned()));
            for j in 0..filler {
                let terms = vec![symbol.as_str(); 24].join(" + ");
                thms.push((
                    format!("f{j}"),
                    format!("{terms} <= {symbol} * 24 + {j}"),
                    "evaluation".to_owned(),
                ));
            }
            lib.insert(
                name.clone(),
                GenArticle { name: name.clone(), imports, defs, thms },
            );
            current.push(name);
        }
        prev = current;
    }
    lib.insert(
        "leaf000".to_owned(),
        GenArticle {
            name: "leaf000".to_owned(),
            imports: vec![],
            defs: vec![("d".into(), "leafval".into(), "7".into())],
            thms: vec![("t".into(), "leafval < 8".into(), "evaluation".into())],
        },
    );
    lib
}

/// A random small library: every article defines one unique symbol from a
/// random subset of earlier articles' symbols and pins or bounds imported
/// values in theorems. Values are tracked so all generated statements are
/// true at generation time.
pub fn random_library(n: usize, rng: &mut Rng) -> GenLibrary {
    let mut lib = GenLibrary::new();
    let mut values: BTreeMap<String, i64> = BTreeMap::new();
    let mut names: Vec<String> = Vec::new();
    for i in 0..n {
        let name = format!("r{i:03}");
        let mut imports: Vec<String> = Vec::new();
        if !names.is_empty() {
            for _ in 0..rng.below(3.min(names.len()) + 1) {
                let pick = names[rng.below(names.len())].clone();
                if !imports.contains(&pick) {
                    imports.push(pick);
                }
            }
        }
        let symbol = format!("s{i:03}");
        let mut expr = format!("{}", rng.below(50));
        let mut value = expr.parse::<i64>().unwrap();
        for import in &imports {
            if rng.chance(60) {
                let imported_symbol = format!("s{}", import.trim_start_matches('r'));
                expr.push_str(&format!(" + {imported_symbol}"));
                value += values[import];
            }
        }
        let mut thms = Vec::new();
        // A self-evident theorem citing the local definition.
        thms.push(("own".to_owned(), format!("{symbol} = {symbol}"), "d".to_owned()));
        // Sometimes pin an imported value exactly: these are the theorems a
        // careless upstream edit invalidates.
        for import in &imports {
            if rng.chance(40) {
                let imported_symbol = format!("s{}", import.trim_start_matches('r'));
                thms.push((
                    format!("pin_{import}"),
                    format!("{imported_symbol} = {}", values[import]),
                    format!("{import}:d"),
                ));
            }
        }
        values.insert(name.clone(), value);
        lib.insert(
            name.clone(),
            GenArticle {
                name: name.clone(),
                imports,
                defs: vec![("d".to_owned(), symbol, expr)],
                thms,
            },
        );
        names.push(name);
    }
    lib
}

/// One randomized mutation of a library, as a commit request. Admissible or
/// not — the caller learns which from the gate, and must apply the mutation
/// to its model only on acceptance (see [`apply_request`]).
pub fn random_request(lib: &GenLibrary, rng: &mut Rng, tag: usize) -> CommitRequest {
    let names: Vec<&String> = lib.keys().collect();
    let kind = rng.below(8);
    let changes: Vec<Change> = match kind {
        // Append a true theorem to a random article.
        0 if !names.is_empty() => {
            let mut article = lib[names[rng.below(names.len())]].clone();
            let symbol = article.defs[0].1.clone();
            article.thms.push((
                format!("ap{tag}"),
                format!("{symbol} <= {symbol} + {}", rng.below(9)),
                "evaluation".to_owned(),
            ));
            vec![Change::modify(article.file_name(), article.source().into_bytes())]
        }
        // Nudge a definition constant: cascades, possibly breaking pins.
        1 if !names.is_empty() => {
            let mut article = lib[names[rng.below(names.len())]].clone();
            let expr = &mut article.defs[0].2;
            *expr = format!("{expr} + 1");
            vec![Change::modify(article.file_name(), article.source().into_bytes())]
        }
        // Add a fresh article importing a couple of existing ones.
        2 => {
            let new_name = format!("x{tag:03}");
            let mut imports = Vec::new();
            let mut expr = format!("{}", rng.below(20));
            if !names.is_empty() {
                let import = names[rng.below(names.len())].clone();
                let imported_symbol = lib[&import].defs[0].1.clone();
                expr.push_str(&format!(" + {imported_symbol} * 0"));
                imports.push(import);
            }
            let article = GenArticle {
                name: new_name.clone(),
                imports,
                defs: vec![("d".to_owned(), format!("sx{tag:03}"), expr)],
                thms: vec![(
                    "own".to_owned(),
                    format!("sx{tag:03} = sx{tag:03}"),
                    "d".to_owned(),
                )],
            };
            vec![Change::add(article.file_name(), article.source().into_bytes())]
        }
        // Delete a random article (admissible only for leaves).
        3 if !names.is_empty() => {
            let target = names[rng.below(names.len())].clone();
            vec![Change::delete(format!("{target}.fml"))]
        }
        // Introduce a false statement.
        4 if !names.is_empty() => {
            let mut article = lib[names[rng.below(names.len())]].clone();
            article.thms.push((
                format!("lie{tag}"),
                "0 = 1".to_owned(),
                "evaluation".to_owned(),
            ));
            vec![Change::modify(article.file_name(), article.source().into_bytes())]
        }
        // Import a ghost article.
        5 if !names.is_empty() => {
            let mut article = lib[names[rng.below(names.len())]].clone();
            article.imports.push(format!("ghost{tag:03}"));
            vec![Change::modify(article.file_name(), article.source().into_bytes())]
        }
        // Try to create an import cycle.
        6 if names.len() >= 2 => {
            let early = names[rng.below(names.len() / 2)].clone();
            let late = names[names.len() / 2 + rng.below(names.len() - names.len() / 2)].clone();
            let mut a = lib[&early].clone();
            let mut b = lib[&late].clone();
            if !a.imports.contains(&late) && early != late {
                a.imports.push(late.clone());
            }
            if !b.imports.contains(&early) && early != late {
                b.imports.push(early.clone());
            }
            vec![
                Change::modify(a.file_name(), a.source().into_bytes()),
                Change::modify(b.file_name(), b.source().into_bytes()),
            ]
        }
        // Illegal path.
        7 => vec![Change::add(format!("../evil{tag}.fml"), b"article evil\n".to_vec())],
        _ => vec![Change::add(
            format!("y{tag:03}.fml"),
            format!("article y{tag:03}\nenviron\nbegin\n").into_bytes(),
        )],
    };
    CommitRequest {
        author: format!("gen{}", rng.below(5)),
        message: format!("step {tag}"),
        changes,
    }
}

/// Apply an accepted request's source changes to the model library.
pub fn apply_request(lib: &mut GenLibrary, request: &CommitRequest) {
    for change in &request.changes {
        let Some(name) = change.path.strip_suffix(".fml") else { continue };
        match &change.payload {
            Some(bytes) => {
                let text = String::from_utf8(bytes.clone()).expect("generated source is UTF-8");
                lib.insert(name.to_owned(), parse_generated(name, &text));
            }
            None => {
                lib.remove(name);
            }
        }
    }
}

/// Reparse a generated source back into its structured form. Only handles
/// the shapes this module emits.
fn parse_generated(name: &str, text: &str) -> GenArticle {
    let mut article = GenArticle {
        name: name.to_owned(),
        imports: Vec::new(),
        defs: Vec::new(),
        thms: Vec::new(),
    };
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("environ imports ") {
            article.imports = rest
                .trim_end_matches(';')
                .split(", ")
                .map(str::to_owned)
                .collect();
        } else if let Some(rest) = line.strip_prefix("def ") {
            let rest = rest.trim_end_matches(';');
            let (label, rest) = rest.split_once(" : ").expect("generated def shape");
            let (symbol, expr) = rest.split_once(" := ").expect("generated def shape");
            article.defs.push((label.to_owned(), symbol.to_owned(), expr.to_owned()));
        } else if let Some(rest) = line.strip_prefix("thm ") {
            let rest = rest.trim_end_matches(';');
            let (label, rest) = rest.split_once(" : ").expect("generated thm shape");
            let (stmt, just) = rest.rsplit_once(" by ").expect("generated thm shape");
            article.thms.push((label.to_owned(), stmt.to_owned(), just.to_owned()));
        }
    }
    article
}

/// Hash every file under a directory (recursively): byte-level equality of
/// two trees.
pub fn dir_digest(dir: &Path) -> String {
    use fwiki_core::ContentHash;
    let mut paths: Vec<(String, Vec<u8>)> = Vec::new();
    collect_files(dir, "", &mut paths);
    paths.sort();
    let mut parts: Vec<Vec<u8>> = Vec::new();
    for (rel, bytes) in &paths {
        parts.push(rel.clone().into_bytes());
        parts.push(bytes.clone());
    }
    ContentHash::of_parts(parts.iter().map(|p| p.as_slice())).to_hex()
}

fn collect_files(dir: &Path, prefix: &str, out: &mut Vec<(String, Vec<u8>)>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let rel = if prefix.is_empty() { name.clone() } else { format!("{prefix}/{name}") };
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, &rel, out);
        } else if let Ok(bytes) = fs::read(&path) {
            out.push((rel, bytes));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fwiki_core::verify::verify_full;

    #[test]
    fn chain_is_coherent() {
        let lib = chain(10);
        let outcome = verify_full(&library_sources(&lib), 2).unwrap();
        assert!(outcome.state.is_coherent(), "{:?}", outcome.state.diagnostics());
    }

    #[test]
    fn diamond_is_coherent() {
        let outcome = verify_full(&library_sources(&diamond()), 1).unwrap();
        assert!(outcome.state.is_coherent());
    }

    #[test]
    fn layered_is_coherent() {
        let mut rng = Rng::new(42);
        let lib = layered(4, 4, 3, &mut rng);
        let outcome = verify_full(&library_sources(&lib), 2).unwrap();
        assert!(outcome.state.is_coherent(), "{:?}", outcome.state.diagnostics());
    }

    #[test]
    fn random_library_is_coherent_for_many_seeds() {
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let lib = random_library(25, &mut rng);
            let outcome = verify_full(&library_sources(&lib), 2).unwrap();
            assert!(
                outcome.state.is_coherent(),
                "seed {seed}: {:?}",
                outcome.state.diagnostics()
            );
        }
    }

    #[test]
    fn generated_sources_reparse_into_the_same_structure() {
        let mut rng = Rng::new(7);
        let lib = random_library(12, &mut rng);
        for article in lib.values() {
            let reparsed = parse_generated(&article.name, &article.source());
            assert_eq!(&reparsed, article);
        }
    }
}
