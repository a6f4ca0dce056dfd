//! The Mermaid `flowchart` subset used for model output and ground truth.
//!
//! Supported: `flowchart <dir>` / `graph <dir>` headers, the shapes
//! `[..]`, `(..)`, `([..])`, `{..}`, `[/../]`, `[[..]]`, `((..))`, edges
//! `A --> B`, `A -- text --> B`, `A -->|text| B`, chains, `;`-separated
//! statements and `subgraph ... end` blocks (flattened). Styling
//! directives are ignored.

mod emit;
mod parser;
mod sanitize;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use emit::emit;
pub use parser::parse;
pub use sanitize::sanitize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    TD,
    TB,
    LR,
    RL,
    BT,
}

impl Direction {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "TD" => Some(Direction::TD),
            "TB" => Some(Direction::TB),
            "LR" => Some(Direction::LR),
            "RL" => Some(Direction::RL),
            "BT" => Some(Direction::BT),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::TD => "TD",
            Direction::TB => "TB",
            Direction::LR => "LR",
            Direction::RL => "RL",
            Direction::BT => "BT",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rectangle,
    Rounded,
    Stadium,
    Diamond,
    Parallelogram,
    Circle,
    Subroutine,
    /// A node only ever referenced by its bare id.
    Default,
}

impl Shape {
    /// Opening and closing delimiters. `Default` renders as a rectangle.
    pub fn delimiters(self) -> (&'static str, &'static str) {
        match self {
            Shape::Rectangle | Shape::Default => ("[", "]"),
            Shape::Rounded => ("(", ")"),
            Shape::Stadium => ("([", "])"),
            Shape::Diamond => ("{", "}"),
            Shape::Parallelogram => ("[/", "/]"),
            Shape::Circle => ("((", "))"),
            Shape::Subroutine => ("[[", "]]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeDecl {
    pub id: String,
    pub label: String,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeDecl {
    pub source: String,
    pub target: String,
    /// Empty when the edge carries no text.
    pub label: String,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowchartAst {
    pub direction: Direction,
    pub nodes: Vec<NodeDecl>,
    pub edges: Vec<EdgeDecl>,
}

impl FlowchartAst {
    pub fn node(&self, id: &str) -> Option<&NodeDecl> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.node(id).map(|n| n.label.as_str())
    }

    /// Replaces the `Default` shape with `Rectangle`, which is how `emit`
    /// writes bare nodes.
    pub fn canonical(&self) -> FlowchartAst {
        let mut out = self.clone();
        for n in &mut out.nodes {
            if n.shape == Shape::Default {
                n.shape = Shape::Rectangle;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Outcome of validation. `ok` holds exactly when `messages` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub ok: bool,
    pub messages: Vec<Diagnostic>,
}

impl ParseDiagnostics {
    pub fn success() -> Self {
        Self {
            ok: true,
            messages: Vec::new(),
        }
    }

    pub fn failure(messages: Vec<Diagnostic>) -> Self {
        debug_assert!(!messages.is_empty());
        Self {
            ok: false,
            messages,
        }
    }

    pub fn single(line: usize, message: impl Into<String>) -> Self {
        Self::failure(vec![Diagnostic {
            line,
            message: message.into(),
        }])
    }
}

impl fmt::Display for ParseDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        for (i, m) in self.messages.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// Sanitizes then parses; only the verdict and messages are kept.
pub fn validate(code: &str) -> ParseDiagnostics {
    match parse(&sanitize(code)) {
        Ok(_) => ParseDiagnostics::success(),
        Err(d) => d,
    }
}
