//! Control-flow graph built from a flowchart and entry-to-terminal path
//! enumeration for model-based test derivation.
//!
//! Loops are unrolled once: a path may visit any node at most twice, so
//! every loop body can be traversed a single time before the walk has to
//! leave it.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mermaid::FlowchartAst;

/// Upper bound on reported paths per graph.
pub const MAX_PATHS: usize = 100_000;
/// Upper bound on DFS extensions per graph.
pub const MAX_EXPANSIONS: usize = 20_000_000;
/// How many times one node may occur on a path.
pub const NODE_VISIT_CAP: u8 = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("path enumeration exceeded {limit} {what}")]
    Explosion { what: &'static str, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arc {
    pub target: usize,
    pub label: String,
}

/// Adjacency-list graph. Arc order follows edge order in the source AST.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowGraph {
    nodes: Vec<GraphNode>,
    adjacency: Vec<Vec<Arc>>,
    index: HashMap<String, usize>,
}

/// One candidate test case: the node sequence of an entry-to-terminal walk.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    pub node_ids: Vec<String>,
    pub node_labels: Vec<String>,
}

impl FlowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node unless the id already exists; returns its index.
    pub fn add_node(&mut self, id: impl Into<String>, label: impl Into<String>) -> usize {
        let id = id.into();
        if let Some(&i) = self.index.get(&id) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(id.clone(), i);
        self.nodes.push(GraphNode {
            id,
            label: label.into(),
        });
        self.adjacency.push(Vec::new());
        i
    }

    /// Adds an arc between existing nodes. Returns false when the endpoints
    /// are unknown or an identical arc is already present.
    pub fn add_arc(&mut self, source: &str, target: &str, label: impl Into<String>) -> bool {
        let (Some(&s), Some(&t)) = (self.index.get(source), self.index.get(target)) else {
            return false;
        };
        let arc = Arc {
            target: t,
            label: label.into(),
        };
        if self.adjacency[s].contains(&arc) {
            return false;
        }
        self.adjacency[s].push(arc);
        true
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn arcs(&self, node: usize) -> &[Arc] {
        &self.adjacency[node]
    }

    pub fn arc_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn has_arc(&self, source: &str, target: &str) -> bool {
        match (self.index.get(source), self.index.get(target)) {
            (Some(&s), Some(&t)) => self.adjacency[s].iter().any(|a| a.target == t),
            _ => false,
        }
    }

    fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for arcs in &self.adjacency {
            for a in arcs {
                deg[a.target] += 1;
            }
        }
        deg
    }

    /// JSON document `{nodes:[{id,label}], edges:[{source,target,label}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(s, arcs)| {
                arcs.iter().map(move |a| {
                    serde_json::json!({
                        "source": self.nodes[s].id,
                        "target": self.nodes[a.target].id,
                        "label": a.label,
                    })
                })
            })
            .collect();
        serde_json::json!({ "nodes": self.nodes, "edges": edges })
    }
}

/// One node per declaration, one arc per distinct edge.
pub fn to_graph(ast: &FlowchartAst) -> FlowGraph {
    let mut g = FlowGraph::new();
    for n in &ast.nodes {
        g.add_node(n.id.clone(), n.label.clone());
    }
    for e in &ast.edges {
        // Endpoints are always declared in a parsed AST; tolerate hand-built ones.
        g.add_node(e.source.clone(), e.source.clone());
        g.add_node(e.target.clone(), e.target.clone());
        g.add_arc(&e.source, &e.target, e.label.clone());
    }
    g
}

/// Entry ids (in-degree 0) and terminal ids (out-degree 0), in declaration
/// order.
pub fn entries_and_terminals(g: &FlowGraph) -> (Vec<String>, Vec<String>) {
    let indeg = g.in_degrees();
    let entries = (0..g.nodes.len())
        .filter(|&i| indeg[i] == 0)
        .map(|i| g.nodes[i].id.clone())
        .collect();
    let terminals = (0..g.nodes.len())
        .filter(|&i| g.adjacency[i].is_empty())
        .map(|i| g.nodes[i].id.clone())
        .collect();
    (entries, terminals)
}

struct Walk<'g> {
    g: &'g FlowGraph,
    visits: Vec<u8>,
    stack: Vec<usize>,
    found: BTreeSet<Vec<usize>>,
    expansions: usize,
}

impl Walk<'_> {
    fn dfs(&mut self, node: usize) -> Result<(), PathError> {
        self.expansions += 1;
        if self.expansions > MAX_EXPANSIONS {
            return Err(PathError::Explosion {
                what: "DFS expansions",
                limit: MAX_EXPANSIONS,
            });
        }
        self.visits[node] += 1;
        self.stack.push(node);
        let arcs = &self.g.adjacency[node];
        if arcs.is_empty() {
            self.found.insert(self.stack.clone());
            if self.found.len() > MAX_PATHS {
                return Err(PathError::Explosion {
                    what: "paths",
                    limit: MAX_PATHS,
                });
            }
        } else {
            for arc in arcs {
                if self.visits[arc.target] < NODE_VISIT_CAP {
                    self.dfs(arc.target)?;
                }
            }
        }
        self.stack.pop();
        self.visits[node] -= 1;
        Ok(())
    }
}

/// All entry-to-terminal paths in which no node occurs more than twice,
/// deduplicated and sorted by node-id sequence.
pub fn enumerate_paths(g: &FlowGraph) -> Result<Vec<Path>, PathError> {
    let indeg = g.in_degrees();
    let mut walk = Walk {
        g,
        visits: vec![0; g.nodes.len()],
        stack: Vec::new(),
        found: BTreeSet::new(),
        expansions: 0,
    };
    for entry in (0..g.nodes.len()).filter(|&i| indeg[i] == 0) {
        walk.dfs(entry)?;
    }
    let mut paths: Vec<Path> = walk
        .found
        .into_iter()
        .map(|seq| Path {
            node_ids: seq.iter().map(|&i| g.nodes[i].id.clone()).collect(),
            node_labels: seq.iter().map(|&i| g.nodes[i].label.clone()).collect(),
        })
        .collect();
    paths.sort_by(|a, b| a.node_ids.cmp(&b.node_ids));
    paths.dedup_by(|a, b| a.node_ids == b.node_ids);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mermaid::{parse, sanitize};
    use proptest::prelude::*;

    const FIG2: &str = include_str!("../tests/fixtures/fig2.mmd");

    fn graph(code: &str) -> FlowGraph {
        to_graph(&parse(&sanitize(code)).unwrap())
    }

    fn ids(paths: &[Path]) -> Vec<String> {
        paths.iter().map(|p| p.node_ids.concat()).collect()
    }

    #[test]
    fn fig2_graph_shape() {
        let g = graph(FIG2);
        assert_eq!(g.nodes().len(), 8);
        assert_eq!(g.arc_count(), 9);
        assert_eq!(
            entries_and_terminals(&g),
            (vec!["A".to_string()], vec!["H".to_string()])
        );
    }

    #[test]
    fn fig2_paths() {
        let paths = enumerate_paths(&graph(FIG2)).unwrap();
        assert_eq!(
            ids(&paths),
            [
                "ABCDEGCDEGH",
                "ABCDEGCDFGH",
                "ABCDEGH",
                "ABCDFGCDEGH",
                "ABCDFGCDFGH",
                "ABCDFGH"
            ]
        );
        assert_eq!(paths[2].node_labels.first().unwrap(), "Start");
        assert_eq!(paths[2].node_labels.last().unwrap(), "End");
    }

    #[test]
    fn simple_cases() {
        assert_eq!(ids(&enumerate_paths(&graph("flowchart TD\nA-->B-->C")).unwrap()), ["ABC"]);
        let empty = graph("flowchart TD");
        assert_eq!(empty.nodes().len(), 0);
        assert!(enumerate_paths(&empty).unwrap().is_empty());
        let g = graph("flowchart TD\nA-->B\nB-->A");
        assert_eq!(entries_and_terminals(&g), (vec![], vec![]));
        assert!(enumerate_paths(&g).unwrap().is_empty());
    }

    #[test]
    fn isolated_node_is_entry_and_terminal() {
        let g = graph("flowchart TD\nA");
        assert_eq!(
            entries_and_terminals(&g),
            (vec!["A".to_string()], vec!["A".to_string()])
        );
        assert_eq!(ids(&enumerate_paths(&g).unwrap()), ["A"]);
    }

    #[test]
    fn self_loop_is_kept_and_unrolled_once() {
        let g = graph("flowchart TD\nS-->A\nA-->A\nA-->T");
        assert_eq!(g.arc_count(), 3);
        assert!(g.has_arc("A", "A"));
        assert_eq!(ids(&enumerate_paths(&g).unwrap()), ["SAAT", "SAT"]);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = graph("flowchart TD\nA-->B\nA-->B\nA-- x -->B");
        assert_eq!(g.arc_count(), 2);
        assert_eq!(enumerate_paths(&g).unwrap().len(), 1);
    }

    #[test]
    fn json_export() {
        let j = graph("flowchart TD\nA[a]-- go -->B[b]").to_json();
        assert_eq!(j["nodes"][1]["label"], "b");
        assert_eq!(j["edges"][0]["source"], "A");
        assert_eq!(j["edges"][0]["label"], "go");
    }

    #[test]
    fn explosion_is_reported() {
        // 18 diamonds in series give 2^18 paths.
        let mut code = String::from("flowchart TD\n");
        for i in 0..18 {
            code.push_str(&format!("n{i} --> a{i}\nn{i} --> b{i}\na{i} --> n{}\nb{i} --> n{}\n", i + 1, i + 1));
        }
        assert!(matches!(
            enumerate_paths(&graph(&code)),
            Err(PathError::Explosion { what: "paths", .. })
        ));
    }

    fn arb_graph() -> impl Strategy<Value = FlowGraph> {
        (1usize..8).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 0..14).prop_map(move |arcs| {
                let mut g = FlowGraph::new();
                for i in 0..n {
                    g.add_node(format!("v{i}"), format!("L{}", i % 3));
                }
                for (s, t) in arcs {
                    g.add_arc(&format!("v{s}"), &format!("v{t}"), "");
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn paths_respect_adjacency_and_cap(g in arb_graph()) {
            let paths = enumerate_paths(&g).unwrap();
            let (entries, terminals) = entries_and_terminals(&g);
            for p in &paths {
                prop_assert!(entries.contains(&p.node_ids[0]));
                prop_assert!(terminals.contains(p.node_ids.last().unwrap()));
                for w in p.node_ids.windows(2) {
                    prop_assert!(g.has_arc(&w[0], &w[1]));
                }
                for id in &p.node_ids {
                    prop_assert!(p.node_ids.iter().filter(|x| *x == id).count() <= 2);
                }
            }
            prop_assert_eq!(enumerate_paths(&g).unwrap(), paths);
        }

        #[test]
        fn adding_an_interior_arc_keeps_paths(g in arb_graph(), s in 0usize..8, t in 0usize..8) {
            // Only arcs that leave entry and terminal sets unchanged.
            let n = g.nodes().len();
            let (s, t) = (s % n, t % n);
            let (entries, terminals) = entries_and_terminals(&g);
            let (sid, tid) = (g.nodes()[s].id.clone(), g.nodes()[t].id.clone());
            prop_assume!(!terminals.contains(&sid) && !entries.contains(&tid));
            let before = enumerate_paths(&g).unwrap();
            let mut g2 = g.clone();
            g2.add_arc(&sid, &tid, "extra");
            let after = enumerate_paths(&g2).unwrap();
            for p in before {
                prop_assert!(after.contains(&p));
            }
        }
    }
}
