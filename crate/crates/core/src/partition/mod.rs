//! Node partitions of a graph: computing them, measuring them, turning them
//! into subgraphs, and collapsing subgraphs into single nodes.
//!
//! Applying a partition discards whatever subgraph hierarchy the graph had.

mod aggregate;
mod heuristic;

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{GraphId, Model, NodeId};
use crate::scalar::Scalar;
use crate::topology::{Element, Hypergraph, RefMap};

pub use aggregate::{aggregate, Aggregated, AggregationMap};
pub use heuristic::{balance_bound, fm_refine, initial_partition, partition_heuristic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("balance error: {0}")]
    Balance(String),
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error("stale partition: the graph changed after the partition was made")]
    Stale,
    #[error("partition file: {0}")]
    Io(String),
}

/// Part label for every recursive node of a graph, in [`Model::all_nodes`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub k: usize,
    pub graph: GraphId,
    pub nodes: Vec<NodeId>,
    revision: u64,
}

impl Partition {
    /// Node ids of each part, in node order.
    pub fn parts(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.k];
        for (n, &l) in self.nodes.iter().zip(&self.labels) {
            out[l].push(*n);
        }
        out
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMetrics {
    /// Total weight of hyperedges spanning two or more parts.
    pub edge_cut: f64,
    /// `Σ w(e)(λ(e) - 1)` where `λ(e)` counts the parts an edge touches.
    pub connectivity: f64,
    pub part_sizes: Vec<u64>,
    /// Largest part size over the average, minus one.
    pub imbalance: f64,
}

/// Cut, connectivity and balance of labels on a hypergraph.
pub fn metrics_of(h: &Hypergraph, labels: &[usize], k: usize) -> Result<PartitionMetrics, PartitionError> {
    if labels.len() != h.vertex_count {
        return Err(PartitionError::Invalid(format!("{} labels for {} vertices", labels.len(), h.vertex_count)));
    }
    if k == 0 || labels.iter().any(|&l| l >= k) {
        return Err(PartitionError::Invalid(format!("labels must lie in 0..{k}")));
    }
    let mut part_sizes = vec![0u64; k];
    for (v, &l) in labels.iter().enumerate() {
        part_sizes[l] += h.vertex_weights[v];
    }
    let (mut edge_cut, mut connectivity) = (0.0, 0.0);
    for (pins, &w) in h.hyperedges.iter().zip(&h.edge_weights) {
        let mut parts: Vec<usize> = pins.iter().map(|&v| labels[v]).collect();
        parts.sort_unstable();
        parts.dedup();
        if parts.len() > 1 {
            edge_cut += w as f64;
            connectivity += w as f64 * (parts.len() - 1) as f64;
        }
    }
    let total: u64 = part_sizes.iter().sum();
    let avg = total as f64 / k as f64;
    let imbalance = if avg > 0.0 { *part_sizes.iter().max().expect("k ≥ 1") as f64 / avg - 1.0 } else { 0.0 };
    Ok(PartitionMetrics { edge_cut, connectivity, part_sizes, imbalance })
}

/// Metrics of a partition on the hypergraph projection of its graph.
pub fn metrics(partition: &Partition, h: &Hypergraph) -> Result<PartitionMetrics, PartitionError> {
    metrics_of(h, &partition.labels, partition.k)
}

/// Transports projection labels to graph nodes. Labels of edge vertices
/// (from a bipartite projection) are ignored. `k` is the largest label plus one.
pub fn make_partition<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    labels: &[usize],
    ref_map: &RefMap,
) -> Result<Partition, PartitionError> {
    if labels.len() != ref_map.vertices.len() {
        return Err(PartitionError::Invalid(format!(
            "{} labels for a projection with {} vertices",
            labels.len(),
            ref_map.vertices.len()
        )));
    }
    let nodes = model.all_nodes(g);
    let mut by_node = std::collections::HashMap::new();
    for (el, &l) in ref_map.vertices.iter().zip(labels) {
        if let Element::Node(n) = el {
            by_node.insert(*n, l);
        }
    }
    let mut out = Vec::with_capacity(nodes.len());
    for n in &nodes {
        match by_node.get(n) {
            Some(&l) => out.push(l),
            None => return Err(PartitionError::Invalid(format!("node `{}` has no label", model.node(*n).name))),
        }
    }
    if by_node.len() != nodes.len() {
        return Err(PartitionError::Invalid("labels refer to nodes outside the graph".into()));
    }
    let k = out.iter().max().map_or(1, |m| m + 1);
    Ok(Partition { labels: out, k, graph: g, nodes, revision: model.revision() })
}

/// Restructures `g` into one subgraph per nonempty part (named `part{i}`)
/// holding its nodes and the edges internal to it; edges crossing parts
/// become local edges of `g`. Returns the new subgraphs in part order.
pub fn apply_partition<T: Scalar>(model: &mut Model<T>, partition: &Partition) -> Result<Vec<GraphId>, PartitionError> {
    let g = partition.graph;
    if partition.revision != model.revision() || model.all_nodes(g) != partition.nodes {
        return Err(PartitionError::Stale);
    }
    let edges = model.all_edges(g);
    let label: std::collections::HashMap<NodeId, usize> =
        partition.nodes.iter().copied().zip(partition.labels.iter().copied()).collect();
    model.retire_subgraphs(g);
    model.graphs[g.index()].nodes.clear();
    model.graphs[g.index()].edges.clear();

    let parts = partition.parts();
    let mut graph_of = vec![None; partition.k];
    let mut created = Vec::new();
    for (i, members) in parts.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let child = model.new_child(g, format!("part{}", i + 1));
        graph_of[i] = Some(child);
        created.push(child);
        for &n in members {
            model.nodes[n.index()].owner = child;
            model.graphs[child.index()].nodes.push(n);
        }
    }
    for e in edges {
        let nodes = model.edge(e).nodes().to_vec();
        let first = label[&nodes[0]];
        let owner = if nodes.iter().all(|n| label[n] == first) { graph_of[first].expect("nonempty part") } else { g };
        model.edges[e.index()].owner = owner;
        model.graphs[owner.index()].edges.push(e);
    }
    model.touch();
    Ok(created)
}

/// One base-10 label per line.
pub fn format_partition(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_partition(text: &str) -> Result<Vec<usize>, PartitionError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.trim()
                .parse::<usize>()
                .map_err(|e| PartitionError::Io(format!("line {}: `{}`: {e}", i + 1, line.trim())))
        })
        .collect()
}

pub fn write_partition_file(path: impl AsRef<Path>, labels: &[usize]) -> Result<(), PartitionError> {
    fs::write(path.as_ref(), format_partition(labels)).map_err(|e| PartitionError::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn read_partition_file(path: impl AsRef<Path>) -> Result<Vec<usize>, PartitionError> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| PartitionError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_partition(&text)
}
