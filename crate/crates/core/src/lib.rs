//! Flowchart images to Mermaid code, with an edge-map prior for the vision
//! model, plus node/edge/path evaluation and paired statistics.

pub mod flowgraph;
pub mod imaging;
pub mod mermaid;
pub mod metrics;
pub mod pipeline;
pub mod repair;
pub mod stats;
pub mod vlm;
