use std::fmt::Write;

use super::IoError;
use crate::model::{GraphId, Model, NodeId};
use crate::partition::aggregate;
use crate::scalar::Scalar;
use crate::topology::{to_clique_graph, Element};

pub const PALETTE: [&str; 12] = [
    "#a6cee3", "#1f78b4", "#b2df8a", "#33a02c", "#fb9a99", "#e31a1c", "#fdbf6f", "#ff7f00", "#cab2d6", "#6a3d9a",
    "#ffff99", "#b15928",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Fill each node with the palette color of its top-level subgraph.
    pub color_by_partition: bool,
    /// Collapse every top-level subgraph into one vertex first.
    pub aggregated: bool,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Index of the top-level subgraph of `g` containing `n`, if `n` is not local to `g`.
fn top_level<T: Scalar>(model: &Model<T>, g: GraphId, n: NodeId) -> Option<usize> {
    let mut h = model.node(n).owner();
    while let Some(p) = model.parent(h) {
        if p == g {
            return model.subgraphs(g).iter().position(|&s| s == h);
        }
        h = p;
    }
    None
}

/// Undirected DOT text of the clique projection of `g`.
pub fn export_dot<T: Scalar>(model: &Model<T>, g: GraphId, options: DotOptions) -> Result<String, IoError> {
    if options.aggregated {
        let agg = aggregate(model, g, 0)?;
        return Ok(render(&agg.model, agg.graph, options.color_by_partition));
    }
    Ok(render(model, g, options.color_by_partition))
}

fn render<T: Scalar>(model: &Model<T>, g: GraphId, color: bool) -> String {
    let (clique, map) = to_clique_graph(model, g);
    let mut out = String::new();
    writeln!(out, "graph {} {{", quote(model.graph_name(g))).unwrap();
    if color && clique.vertex_count > 0 {
        writeln!(out, "  node [style=filled];").unwrap();
    }
    for (i, element) in map.vertices.iter().enumerate() {
        let Element::Node(n) = *element else { continue };
        let mut attrs = format!("label={}", quote(&model.node(n).name));
        if color {
            if let Some(s) = top_level(model, g, n) {
                write!(attrs, ", fillcolor=\"{}\"", PALETTE[s % PALETTE.len()]).unwrap();
            }
        }
        writeln!(out, "  {i} [{attrs}];").unwrap();
    }
    for &(u, v, _) in &clique.edges {
        writeln!(out, "  {u} -- {v};").unwrap();
    }
    out.push_str("}\n");
    out
}
