use std::collections::HashMap;

use super::{Diagnostic, Direction, EdgeDecl, FlowchartAst, NodeDecl, ParseDiagnostics, Shape};

/// Shape openers, longest first so `([` wins over `(`.
const OPENERS: &[(&str, &str, Shape)] = &[
    ("([", "])", Shape::Stadium),
    ("((", "))", Shape::Circle),
    ("(", ")", Shape::Rounded),
    ("[[", "]]", Shape::Subroutine),
    ("[/", "/]", Shape::Parallelogram),
    ("[", "]", Shape::Rectangle),
    ("{", "}", Shape::Diamond),
];

const IGNORED_KEYWORDS: &[&str] = &["style", "classDef", "class", "click", "linkStyle"];

struct NodeRef {
    id: String,
    decl: Option<(String, Shape)>,
}

struct EdgeOp {
    label: String,
}

/// Parses a flowchart. Never panics; every failure carries at least one
/// line-numbered message.
pub fn parse(code: &str) -> Result<FlowchartAst, ParseDiagnostics> {
    let mut p = Parser::default();
    for (idx, raw) in code.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        p.line(idx + 1, line);
    }
    p.finish(code.split('\n').count().max(1))
}

#[derive(Default)]
struct Parser {
    direction: Option<Direction>,
    header_seen: bool,
    nodes: Vec<NodeDecl>,
    explicit: Vec<bool>,
    index: HashMap<String, usize>,
    edges: Vec<EdgeDecl>,
    subgraph_depth: usize,
    last_subgraph_line: usize,
    errors: Vec<Diagnostic>,
}

impl Parser {
    fn error(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(Diagnostic {
            line,
            message: message.into(),
        });
    }

    fn line(&mut self, lineno: usize, text: &str) {
        let mut rest = text;
        loop {
            let trimmed = rest.trim_start();
            if trimmed.is_empty() {
                return;
            }
            if let Some(after) = trimmed.strip_prefix(';') {
                rest = after;
                continue;
            }
            if trimmed.starts_with("%%") {
                return;
            }
            match self.statement(lineno, trimmed) {
                Ok(after) => rest = after,
                Err(msg) => {
                    self.error(lineno, msg);
                    return;
                }
            }
        }
    }

    /// Parses one statement and returns the unconsumed tail of the line.
    fn statement<'a>(&mut self, lineno: usize, s: &'a str) -> Result<&'a str, String> {
        let (word_end, next) = keyword_split(s);
        let word = &s[..word_end];

        if !self.header_seen {
            self.header_seen = true;
            if word == "flowchart" || word == "graph" {
                let args = next.split(';').next().unwrap_or("").trim();
                self.direction = Some(match args.split_whitespace().collect::<Vec<_>>()[..] {
                    [] => Direction::TD,
                    [d] => Direction::parse(d)
                        .ok_or_else(|| format!("unknown flowchart direction {d:?}"))?,
                    _ => return Err(format!("unexpected text in header: {args:?}")),
                });
                return Ok(tail_after_statement(s));
            }
            self.direction = Some(Direction::TD);
            self.error(
                lineno,
                format!("missing flowchart header (found {:?})", first_token(s)),
            );
            // Keep going so later lines are also checked.
        }

        match word {
            "flowchart" | "graph" => Err("duplicate flowchart header".to_string()),
            "subgraph" => {
                self.subgraph_depth += 1;
                self.last_subgraph_line = lineno;
                Ok(tail_after_statement(s))
            }
            "end" if next.trim_start().is_empty() || next.trim_start().starts_with(';') => {
                if self.subgraph_depth == 0 {
                    return Err("`end` without matching `subgraph`".to_string());
                }
                self.subgraph_depth -= 1;
                Ok(next)
            }
            "direction" => {
                let d = first_token(next.trim_start());
                if Direction::parse(d).is_none() {
                    return Err(format!("unknown direction {d:?}"));
                }
                Ok(tail_after_statement(s))
            }
            w if IGNORED_KEYWORDS.contains(&w) => Ok(tail_after_statement(s)),
            _ => self.chain(s),
        }
    }

    /// `node (edge node)*`, terminated by end of line or `;`.
    fn chain<'a>(&mut self, s: &'a str) -> Result<&'a str, String> {
        let (first, mut rest) = node_ref(s)?;
        let mut items = vec![first];
        let mut ops = Vec::new();
        loop {
            rest = rest.trim_start();
            if rest.is_empty() || rest.starts_with(';') || rest.starts_with("%%") {
                break;
            }
            let (op, after) = edge_op(rest)?;
            let after = after.trim_start();
            if after.is_empty() || after.starts_with(';') {
                return Err("dangling arrow: edge has no target node".to_string());
            }
            let (node, after) = node_ref(after)?;
            ops.push(op);
            items.push(node);
            rest = after;
        }

        let mut ids = Vec::with_capacity(items.len());
        for item in items {
            ids.push(item.id.clone());
            self.register(item)?;
        }
        for (i, op) in ops.into_iter().enumerate() {
            self.edges.push(EdgeDecl {
                source: ids[i].clone(),
                target: ids[i + 1].clone(),
                label: op.label,
                directed: true,
            });
        }
        Ok(rest)
    }

    fn register(&mut self, node: NodeRef) -> Result<(), String> {
        match (self.index.get(&node.id).copied(), node.decl) {
            (None, decl) => {
                let explicit = decl.is_some();
                let (label, shape) = decl.unwrap_or_else(|| (node.id.clone(), Shape::Default));
                self.index.insert(node.id.clone(), self.nodes.len());
                self.nodes.push(NodeDecl {
                    id: node.id,
                    label,
                    shape,
                });
                self.explicit.push(explicit);
            }
            (Some(_), None) => {}
            (Some(i), Some((label, shape))) => {
                if !self.explicit[i] {
                    self.nodes[i].label = label;
                    self.nodes[i].shape = shape;
                    self.explicit[i] = true;
                } else if self.nodes[i].label != label || self.nodes[i].shape != shape {
                    return Err(format!(
                        "conflicting declaration for node {}: {:?} vs {:?}",
                        node.id, self.nodes[i].label, label
                    ));
                }
            }
        }
        Ok(())
    }

    fn finish(mut self, last_line: usize) -> Result<FlowchartAst, ParseDiagnostics> {
        if !self.header_seen {
            self.error(1, "missing flowchart header");
        }
        if self.subgraph_depth > 0 {
            let line = self.last_subgraph_line.max(1).min(last_line);
            self.error(line, "unclosed subgraph: missing `end`");
        }
        if !self.errors.is_empty() {
            return Err(ParseDiagnostics::failure(self.errors));
        }
        Ok(FlowchartAst {
            direction: self.direction.unwrap_or(Direction::TD),
            nodes: self.nodes,
            edges: self.edges,
        })
    }
}

fn first_token(s: &str) -> &str {
    s.split(|c: char| c.is_whitespace() || c == ';')
        .next()
        .unwrap_or("")
}

/// Splits off a leading keyword (ASCII letters) when followed by whitespace,
/// `;` or end of input. Returns the keyword length (0 when none) and the rest.
fn keyword_split(s: &str) -> (usize, &str) {
    let end = s
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(s.len());
    let next = &s[end..];
    if end > 0 && (next.is_empty() || next.starts_with(char::is_whitespace) || next.starts_with(';')) {
        (end, next)
    } else {
        (0, s)
    }
}

/// Tail after a keyword statement, which runs to the next `;`.
fn tail_after_statement(s: &str) -> &str {
    match s.find(';') {
        Some(i) => &s[i..],
        None => "",
    }
}

fn is_id_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn node_ref(s: &str) -> Result<(NodeRef, &str), String> {
    let end = s.find(|c: char| !is_id_char(c)).unwrap_or(s.len());
    if end == 0 {
        let shown: String = s.chars().take(12).collect();
        return Err(format!("expected node identifier, found {shown:?}"));
    }
    let id = s[..end].to_string();
    let rest = &s[end..];
    for &(open, close, shape) in OPENERS {
        if let Some(body) = rest.strip_prefix(open) {
            let (label, after) = delimited(body, close)
                .ok_or_else(|| format!("unclosed bracket: node {id} opened with {open:?} but no {close:?}"))?;
            return Ok((
                NodeRef {
                    id,
                    decl: Some((label, shape)),
                },
                after,
            ));
        }
    }
    if let Some(c) = rest.chars().next() {
        if !c.is_whitespace() && c != ';' && c != '-' {
            return Err(format!("unexpected character {c:?} after node {id}"));
        }
    }
    Ok((NodeRef { id, decl: None }, rest))
}

/// Reads a label up to `close`. A label written as `"..."` is unquoted and
/// may then contain the closing delimiter.
fn delimited<'a>(body: &'a str, close: &str) -> Option<(String, &'a str)> {
    if let Some(inner) = body.strip_prefix('"') {
        let pat = format!("\"{close}");
        if let Some(i) = inner.find(&pat) {
            return Some((inner[..i].to_string(), &inner[i + pat.len()..]));
        }
    }
    let i = body.find(close)?;
    Some((body[..i].to_string(), &body[i + close.len()..]))
}

fn edge_op(s: &str) -> Result<(EdgeOp, &str), String> {
    if let Some(after) = s.strip_prefix("-->") {
        let t = after.trim_start();
        if let Some(body) = t.strip_prefix('|') {
            let i = body
                .find('|')
                .ok_or_else(|| "unclosed edge label: missing closing `|`".to_string())?;
            return Ok((
                EdgeOp {
                    label: body[..i].to_string(),
                },
                &body[i + 1..],
            ));
        }
        return Ok((
            EdgeOp {
                label: String::new(),
            },
            after,
        ));
    }
    if let Some(after) = s.strip_prefix("--") {
        if after.starts_with('-') {
            return Err("unsupported link style (only `-->` arrows are accepted)".to_string());
        }
        let i = after
            .find("-->")
            .ok_or_else(|| "malformed edge: `--` label without closing `-->`".to_string())?;
        return Ok((
            EdgeOp {
                label: after[..i].trim().to_string(),
            },
            &after[i + 3..],
        ));
    }
    let shown: String = s.chars().take(12).collect();
    Err(format!("expected `-->` edge, found {shown:?}"))
}
