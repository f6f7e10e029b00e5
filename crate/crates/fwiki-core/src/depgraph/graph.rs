//! The library dependency DAG and change propagation.
//!
//! Edges point from an article to the articles it imports. The reverse map
//! answers "who is affected if this changes": the influenced set of an edit
//! is the reverse transitive closure of the changed articles.

use crate::lang::ArticleName;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::manifest::DepManifest;

#[derive(Clone, Debug)]
pub struct DependencyGraph {
    nodes: BTreeSet<ArticleName>,
    edges: BTreeMap<ArticleName, BTreeSet<ArticleName>>,
    reverse: BTreeMap<ArticleName, BTreeSet<ArticleName>>,
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("import cycle: {}", format_cycle(.cycle))]
    Cycle { cycle: Vec<ArticleName> },
    #[error("article `{from}` imports `{missing}`, which does not exist")]
    DanglingImport { from: ArticleName, missing: ArticleName },
}

fn format_cycle(cycle: &[ArticleName]) -> String {
    let mut names: Vec<&str> = cycle.iter().map(|n| n.as_str()).collect();
    names.push(cycle[0].as_str());
    names.join(" -> ")
}

impl DependencyGraph {
    /// Build the graph from a library snapshot's manifests, rejecting
    /// dangling imports and cycles.
    pub fn build(manifests: &[DepManifest]) -> Result<Self, GraphError> {
        let nodes: BTreeSet<ArticleName> = manifests.iter().map(|m| m.article.clone()).collect();
        let mut edges: BTreeMap<ArticleName, BTreeSet<ArticleName>> =
            nodes.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
        let mut reverse: BTreeMap<ArticleName, BTreeSet<ArticleName>> =
            nodes.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
        for manifest in manifests {
            for dep in &manifest.deps {
                if !nodes.contains(dep) {
                    return Err(GraphError::DanglingImport {
                        from: manifest.article.clone(),
                        missing: dep.clone(),
                    });
                }
                edges.get_mut(&manifest.article).unwrap().insert(dep.clone());
                reverse.get_mut(dep).unwrap().insert(manifest.article.clone());
            }
        }
        let graph = DependencyGraph { nodes, edges, reverse };
        if let Some(cycle) = graph.find_cycle() {
            return Err(GraphError::Cycle { cycle });
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &BTreeSet<ArticleName> {
        &self.nodes
    }

    pub fn contains(&self, name: &ArticleName) -> bool {
        self.nodes.contains(name)
    }

    /// The articles `name` imports.
    pub fn imports_of(&self, name: &ArticleName) -> impl Iterator<Item = &ArticleName> {
        self.edges.get(name).into_iter().flatten()
    }

    /// The articles that import `name`.
    pub fn dependents_of(&self, name: &ArticleName) -> impl Iterator<Item = &ArticleName> {
        self.reverse.get(name).into_iter().flatten()
    }

    /// Depth-first cycle search over import edges, deterministic because all
    /// iteration is over ordered sets. Returns the cycle as a path along
    /// import edges, starting from its smallest member.
    fn find_cycle(&self) -> Option<Vec<ArticleName>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Grey,
            Black,
        }
        let mut color: BTreeMap<&ArticleName, Color> =
            self.nodes.iter().map(|n| (n, Color::White)).collect();
        let mut stack: Vec<&ArticleName> = Vec::new();

        fn visit<'a>(
            graph: &'a DependencyGraph,
            node: &'a ArticleName,
            color: &mut BTreeMap<&'a ArticleName, Color>,
            stack: &mut Vec<&'a ArticleName>,
        ) -> Option<Vec<ArticleName>> {
            color.insert(node, Color::Grey);
            stack.push(node);
            for next in graph.imports_of(node) {
                match color[&next] {
                    Color::Grey => {
                        let start = stack.iter().position(|n| *n == next).unwrap();
                        let mut cycle: Vec<ArticleName> =
                            stack[start..].iter().map(|n| (*n).clone()).collect();
                        // Rotate so the smallest member leads.
                        let min = cycle
                            .iter()
                            .enumerate()
                            .min_by_key(|(_, n)| (*n).clone())
                            .map(|(i, _)| i)
                            .unwrap();
                        cycle.rotate_left(min);
                        return Some(cycle);
                    }
                    Color::White => {
                        if let Some(cycle) = visit(graph, next, color, stack) {
                            return Some(cycle);
                        }
                    }
                    Color::Black => {}
                }
            }
            stack.pop();
            color.insert(node, Color::Black);
            None
        }

        for node in &self.nodes {
            if color[node] == Color::White {
                if let Some(cycle) = visit(self, node, &mut color, &mut stack) {
                    return Some(cycle);
                }
            }
        }
        None
    }

    /// Full topological order over import edges, imports before importers.
    pub fn topo_nodes(&self) -> Vec<ArticleName> {
        let mut indegree: BTreeMap<&ArticleName, usize> = self
            .nodes
            .iter()
            .map(|n| (n, self.edges[n].len()))
            .collect();
        let mut ready: VecDeque<&ArticleName> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(node) = ready.pop_front() {
            order.push(node.clone());
            for dependent in self.dependents_of(node) {
                let d = indegree.get_mut(dependent).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push_back(dependent);
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len(), "graph must be acyclic");
        order
    }
}

/// The change footprint of an edit: what was touched, and everything that
/// can observe the touch through imports.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DirtySet {
    /// Directly edited or added articles.
    pub changed: BTreeSet<ArticleName>,
    /// Reverse transitive closure of the change, including `changed` itself.
    pub influenced: BTreeSet<ArticleName>,
    /// Deleted articles.
    pub deleted: BTreeSet<ArticleName>,
}

impl DirtySet {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.influenced.is_empty() && self.deleted.is_empty()
    }
}

/// Compute the dirty set of an edit: breadth-first walk of reverse edges
/// from every changed or deleted article, O(V+E).
pub fn compute_dirty(
    graph: &DependencyGraph,
    changed: &BTreeSet<ArticleName>,
    deleted: &BTreeSet<ArticleName>,
) -> DirtySet {
    let mut influenced: BTreeSet<ArticleName> = changed.clone();
    let mut queue: VecDeque<&ArticleName> = changed
        .iter()
        .chain(deleted.iter())
        .filter(|n| graph.contains(n))
        .collect();
    let mut seen: BTreeSet<&ArticleName> = queue.iter().copied().collect();
    while let Some(node) = queue.pop_front() {
        influenced.insert(node.clone());
        for dependent in graph.dependents_of(node) {
            if seen.insert(dependent) {
                queue.push_back(dependent);
            }
        }
    }
    // Deleted articles have no work of their own to schedule.
    for gone in deleted {
        influenced.remove(gone);
    }
    DirtySet { changed: changed.clone(), influenced, deleted: deleted.clone() }
}

/// Partition `subset` into antichain layers: every article appears in a
/// later layer than all the subset articles it (transitively) imports, so
/// each layer is independently schedulable.
pub fn topo_order(
    graph: &DependencyGraph,
    subset: &BTreeSet<ArticleName>,
) -> Vec<BTreeSet<ArticleName>> {
    // rank(n): for subset members, their layer index; the max is threaded
    // through non-subset nodes so ordering survives gaps in the subset.
    let mut rank: BTreeMap<ArticleName, usize> = BTreeMap::new();
    let mut layers: Vec<BTreeSet<ArticleName>> = Vec::new();
    for node in graph.topo_nodes() {
        let depth = graph
            .imports_of(&node)
            .map(|m| rank.get(m).copied().unwrap_or(0) + usize::from(subset.contains(m)))
            .max()
            .unwrap_or(0);
        if subset.contains(&node) {
            if layers.len() <= depth {
                layers.resize_with(depth + 1, BTreeSet::new);
            }
            layers[depth].insert(node.clone());
        }
        rank.insert(node, depth);
    }
    layers
}
