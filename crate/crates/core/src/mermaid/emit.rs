use super::{FlowchartAst, NodeDecl};

/// Canonical text: header, one declaration per node, one edge per line.
/// Bare (`Default`) nodes are written as rectangles.
pub fn emit(ast: &FlowchartAst) -> String {
    let mut lines = Vec::with_capacity(1 + ast.nodes.len() + ast.edges.len());
    lines.push(format!("flowchart {}", ast.direction));
    for node in &ast.nodes {
        lines.push(node_decl(node));
    }
    for edge in &ast.edges {
        let label = &edge.label;
        let line = if label.is_empty() {
            format!("{} --> {}", edge.source, edge.target)
        } else if dash_label_ok(label) {
            format!("{} -- {} --> {}", edge.source, label, edge.target)
        } else {
            format!("{} -->|{}| {}", edge.source, label, edge.target)
        };
        lines.push(line);
    }
    lines.join("\n")
}

/// Whether `-- label -->` reads back as exactly `label`.
fn dash_label_ok(label: &str) -> bool {
    label.trim() == label && !label.contains("-->") && !label.starts_with('-')
}

fn node_decl(node: &NodeDecl) -> String {
    let (open, close) = node.shape.delimiters();
    let label = &node.label;
    // Quote when the raw label would end early or be read as another shape.
    let ends_early = format!("{label}{close}").find(close) != Some(label.len());
    let needs_quotes = ends_early || label.starts_with(['"', '[', '(', '/']);
    if needs_quotes {
        format!("{}{open}\"{label}\"{close}", node.id)
    } else {
        format!("{}{open}{label}{close}", node.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mermaid::{parse, sanitize, Direction, EdgeDecl, Shape};
    use proptest::prelude::*;

    const FIG2: &str = include_str!("../../tests/fixtures/fig2.mmd");

    #[test]
    fn minimal_emission() {
        let ast = parse("flowchart TD\nA --> B").unwrap();
        assert_eq!(emit(&ast), "flowchart TD\nA[A]\nB[B]\nA --> B");
    }

    #[test]
    fn diamond_node() {
        let ast = FlowchartAst {
            direction: Direction::TD,
            nodes: vec![NodeDecl {
                id: "G".into(),
                label: "End of loop?".into(),
                shape: Shape::Diamond,
            }],
            edges: vec![],
        };
        assert_eq!(emit(&ast), "flowchart TD\nG{End of loop?}");
    }

    #[test]
    fn fig2_round_trip() {
        let ast = parse(&sanitize(FIG2)).unwrap();
        assert_eq!(parse(&emit(&ast)).unwrap(), ast);
    }

    #[test]
    fn awkward_labels_round_trip() {
        let ast = FlowchartAst {
            direction: Direction::RL,
            nodes: vec![
                NodeDecl { id: "a".into(), label: "x ] y".into(), shape: Shape::Rectangle },
                NodeDecl { id: "b".into(), label: "[not sub".into(), shape: Shape::Rounded },
                NodeDecl { id: "c".into(), label: "/slash".into(), shape: Shape::Rectangle },
                NodeDecl { id: "d".into(), label: "\"q\"".into(), shape: Shape::Circle },
            ],
            edges: vec![
                EdgeDecl { source: "a".into(), target: "b".into(), label: " padded ".into(), directed: true },
                EdgeDecl { source: "b".into(), target: "c".into(), label: "a-->b".into(), directed: true },
                EdgeDecl { source: "c".into(), target: "d".into(), label: "-neg".into(), directed: true },
            ],
        };
        assert_eq!(parse(&emit(&ast)).unwrap(), ast);
    }

    fn shape() -> impl Strategy<Value = Shape> {
        prop::sample::select(vec![
            Shape::Rectangle,
            Shape::Rounded,
            Shape::Stadium,
            Shape::Diamond,
            Shape::Parallelogram,
            Shape::Circle,
            Shape::Subroutine,
            Shape::Default,
        ])
    }

    prop_compose! {
        fn arb_ast()(
            dir in prop::sample::select(vec![Direction::TD, Direction::TB, Direction::LR, Direction::RL, Direction::BT]),
            specs in prop::collection::vec(("[A-Za-z0-9 ?.,'!:;#&*+=<>]{0,16}", shape()), 0..8),
            raw_edges in prop::collection::vec((0usize..8, 0usize..8, "[A-Za-z0-9 ?]{0,6}"), 0..12),
        ) -> FlowchartAst {
            let nodes: Vec<NodeDecl> = specs
                .into_iter()
                .enumerate()
                .map(|(i, (label, shape))| {
                    let id = format!("n{i}");
                    let label = if shape == Shape::Default { id.clone() } else { label };
                    NodeDecl { id, label, shape }
                })
                .collect();
            let edges = if nodes.is_empty() {
                vec![]
            } else {
                raw_edges
                    .into_iter()
                    .map(|(s, t, l)| EdgeDecl {
                        source: nodes[s % nodes.len()].id.clone(),
                        target: nodes[t % nodes.len()].id.clone(),
                        label: l.trim().to_string(),
                        directed: true,
                    })
                    .collect()
            };
            FlowchartAst { direction: dir, nodes, edges }
        }
    }

    proptest! {
        #[test]
        fn parse_emit_round_trip(ast in arb_ast()) {
            let text = emit(&ast);
            let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
            prop_assert_eq!(&back, &ast.canonical());
            prop_assert_eq!(emit(&back), text);
        }
    }
}
