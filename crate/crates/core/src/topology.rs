//! Hypergraph, clique and bipartite projections of a graph, and the
//! structural queries built on them (incident edges, neighborhoods, expansion).
//!
//! Distances are hop counts in the clique projection: nodes sharing any
//! hyperedge are at distance one.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{EdgeId, GraphId, Model, NodeId};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("node `{0}` is not part of the graph")]
    Scope(String),
    #[error("invalid hypergraph: {0}")]
    Invalid(String),
}

/// Weighted hypergraph over vertices `0..vertex_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertex_count: usize,
    pub hyperedges: Vec<Vec<usize>>,
    pub vertex_weights: Vec<u64>,
    pub edge_weights: Vec<u64>,
}

impl Hypergraph {
    /// Validates pins (≥ 2 distinct, in range) and positive weights.
    pub fn new(
        vertex_count: usize,
        hyperedges: Vec<Vec<usize>>,
        vertex_weights: Vec<u64>,
        edge_weights: Vec<u64>,
    ) -> Result<Self, TopologyError> {
        if vertex_weights.len() != vertex_count || edge_weights.len() != hyperedges.len() {
            return Err(TopologyError::Invalid("weight vector length mismatch".into()));
        }
        if vertex_weights.iter().chain(&edge_weights).any(|&w| w == 0) {
            return Err(TopologyError::Invalid("weights must be positive".into()));
        }
        let mut edges = Vec::with_capacity(hyperedges.len());
        for (j, mut pins) in hyperedges.into_iter().enumerate() {
            pins.sort_unstable();
            pins.dedup();
            if pins.len() < 2 || pins.last().is_some_and(|&v| v >= vertex_count) {
                return Err(TopologyError::Invalid(format!("hyperedge {j} needs two or more valid pins")));
            }
            edges.push(pins);
        }
        Ok(Self { vertex_count, hyperedges: edges, vertex_weights, edge_weights })
    }

    /// Nonzero coordinates `(vertex, hyperedge)` of the |V|×|E| incidence matrix.
    pub fn incidence(&self) -> Vec<(usize, usize)> {
        self.hyperedges.iter().enumerate().flat_map(|(j, pins)| pins.iter().map(move |&v| (v, j))).collect()
    }

    /// Hyperedges incident to each vertex.
    pub fn vertex_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertex_count];
        for (j, pins) in self.hyperedges.iter().enumerate() {
            for &v in pins {
                out[v].push(j);
            }
        }
        out
    }

    pub fn total_vertex_weight(&self) -> u64 {
        self.vertex_weights.iter().sum()
    }

    /// Clique expansion with merged, summed edge weights.
    pub fn clique_expansion(&self) -> SimpleGraph {
        let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (pins, &w) in self.hyperedges.iter().zip(&self.edge_weights) {
            for (a, &u) in pins.iter().enumerate() {
                for &v in &pins[a + 1..] {
                    *acc.entry((u, v)).or_insert(0) += w;
                }
            }
        }
        SimpleGraph { vertex_count: self.vertex_count, edges: acc.into_iter().map(|((u, v), w)| (u, v, w)).collect() }
    }
}

/// Undirected weighted graph without self-loops or parallel edges; `u < v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

impl SimpleGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Two-colouring if the graph is bipartite.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let adj = self.adjacency();
        let mut colour: Vec<Option<bool>> = vec![None; self.vertex_count];
        for s in 0..self.vertex_count {
            if colour[s].is_some() {
                continue;
            }
            colour[s] = Some(false);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let cu = colour[u].expect("visited");
                for &v in &adj[u] {
                    match colour[v] {
                        None => {
                            colour[v] = Some(!cu);
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(colour.into_iter().map(|c| c.unwrap_or(false)).collect())
    }

    /// Connected component label per vertex.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for s in 0..self.vertex_count {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Model element represented by a projection vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Element {
    Node(NodeId),
    Edge(EdgeId),
}

/// Maps projection vertices (and hyperedges) back to model elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefMap {
    pub vertices: Vec<Element>,
    pub hyperedges: Vec<EdgeId>,
}

impl RefMap {
    pub fn vertex_of(&self, element: Element) -> Option<usize> {
        self.vertices.iter().position(|&e| e == element)
    }
}

/// Precomputed index of a graph's recursive nodes and edges.
#[derive(Debug, Clone)]
pub struct GraphIndex {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    /// Vertex indices of each edge's nodes.
    pub edge_pins: Vec<Vec<usize>>,
    vertex: HashMap<NodeId, usize>,
    adjacency: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
}

impl GraphIndex {
    pub fn new<T: Scalar>(model: &Model<T>, g: GraphId) -> Self {
        let nodes = model.all_nodes(g);
        let edges = model.all_edges(g);
        let vertex: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let edge_pins: Vec<Vec<usize>> =
            edges
            .iter()
            .map(|&e| {
                let mut pins: Vec<usize> = model.edge(e).nodes().iter().map(|n| vertex[n]).collect();
                pins.sort_unstable();
                pins
            })
            .collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut vertex_edges = vec![Vec::new(); nodes.len()];
        for (j, pins) in edge_pins.iter().enumerate() {
            for &u in pins {
                vertex_edges[u].push(j);
                adjacency[u].extend(pins.iter().copied().filter(|&v| v != u));
            }
        }
        for a in &mut adjacency {
            a.sort_unstable();
            a.dedup();
        }
        Self { nodes, edges, edge_pins, vertex, adjacency, vertex_edges }
    }

    pub fn vertex(&self, n: NodeId) -> Option<usize> {
        self.vertex.get(&n).copied()
    }

    pub fn vertices<T: Scalar>(&self, model: &Model<T>, nodes: &[NodeId]) -> Result<Vec<usize>, TopologyError> {
        nodes.iter().map(|n| self.vertex(*n).ok_or_else(|| TopologyError::Scope(model.node(*n).name.clone()))).collect()
    }

    /// Clique-projection neighbors of a vertex, sorted.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Edge positions (into `edges`) incident to a vertex.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    /// Membership mask of all vertices within `distance` hops of `seeds`.
    pub fn neighborhood_mask(&self, seeds: &[usize], distance: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut frontier = Vec::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                frontier.push(s);
            }
        }
        for _ in 0..distance {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen
    }

    /// Edge positions with a pin inside and a pin outside `mask`.
    pub fn boundary_edges(&self, mask: &[bool]) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&j| {
                let inside = self.edge_pins[j].iter().filter(|&&v| mask[v]).count();
                inside > 0 && inside < self.edge_pins[j].len()
            })
            .collect()
    }

    /// Edge positions with every pin inside `mask`.
    pub fn interior_edges(&self, mask: &[bool]) -> Vec<usize> {
        (0..self.edges.len()).filter(|&j| self.edge_pins[j].iter().all(|&v| mask[v])).collect()
    }
}

/// One vertex per recursive node (weight = variable count), one hyperedge per
/// recursive edge (weight = link constraint count).
pub fn to_hypergraph<T: Scalar>(model: &Model<T>, g: GraphId) -> (Hypergraph, RefMap) {
    let idx = GraphIndex::new(model, g);
    let vertex_weights = idx.nodes.iter().map(|&n| model.node(n).num_variables().max(1) as u64).collect();
    let edge_weights = idx.edges.iter().map(|&e| model.edge(e).num_link_constraints().max(1) as u64).collect();
    let h = Hypergraph {
        vertex_count: idx.nodes.len(),
        hyperedges: idx.edge_pins.clone(),
        vertex_weights,
        edge_weights,
    };
    let map = RefMap { vertices: idx.nodes.iter().map(|&n| Element::Node(n)).collect(), hyperedges: idx.edges.clone() };
    (h, map)
}

/// Each hyperedge replaced by a clique on its nodes; parallel edges merged.
pub fn to_clique_graph<T: Scalar>(model: &Model<T>, g: GraphId) -> (SimpleGraph, RefMap) {
    let (h, map) = to_hypergraph(model, g);
    (h.clique_expansion(), map)
}

/// Nodes followed by edges as vertices; node `n` connects to edge `e` iff `n ∈ e`.
pub fn to_bipartite_graph<T: Scalar>(model: &Model<T>, g: GraphId) -> (SimpleGraph, RefMap) {
    let idx = GraphIndex::new(model, g);
    let offset = idx.nodes.len();
    let mut edges: Vec<(usize, usize, u64)> = idx
        .edge_pins
        .iter()
        .enumerate()
        .flat_map(|(j, pins)| pins.iter().map(move |&v| (v, offset + j, 1)))
        .collect();
    edges.sort_unstable();
    let vertices = idx.nodes.iter().map(|&n| Element::Node(n)).chain(idx.edges.iter().map(|&e| Element::Edge(e))).collect();
    (SimpleGraph { vertex_count: offset + idx.edges.len(), edges }, RefMap { vertices, hyperedges: idx.edges })
}

/// Edges crossing the boundary of `nodes` (some pins inside, some outside).
pub fn incident_edges<T: Scalar>(model: &Model<T>, g: GraphId, nodes: &[NodeId]) -> Result<Vec<EdgeId>, TopologyError> {
    let idx = GraphIndex::new(model, g);
    let mut mask = vec![false; idx.nodes.len()];
    for v in idx.vertices(model, nodes)? {
        mask[v] = true;
    }
    Ok(idx.boundary_edges(&mask).into_iter().map(|j| idx.edges[j]).collect())
}

/// Nodes within `distance` hops of `nodes`, in recursive node order.
pub fn neighborhood<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    nodes: &[NodeId],
    distance: usize,
) -> Result<Vec<NodeId>, TopologyError> {
    let idx = GraphIndex::new(model, g);
    let seeds = idx.vertices(model, nodes)?;
    let mask = idx.neighborhood_mask(&seeds, distance);
    Ok(idx.nodes.iter().zip(&mask).filter(|(_, &m)| m).map(|(n, _)| *n).collect())
}

/// Lightweight subgraph view: node set plus every edge fully supported by it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphView {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

/// Expands a node set by `distance` hops.
pub fn expand_nodes<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    nodes: &[NodeId],
    distance: usize,
) -> Result<SubgraphView, TopologyError> {
    let idx = GraphIndex::new(model, g);
    let seeds = idx.vertices(model, nodes)?;
    let mask = idx.neighborhood_mask(&seeds, distance);
    Ok(view_from_mask(&idx, &mask))
}

pub(crate) fn view_from_mask(idx: &GraphIndex, mask: &[bool]) -> SubgraphView {
    SubgraphView {
        nodes: idx.nodes.iter().zip(mask).filter(|(_, &m)| m).map(|(n, _)| *n).collect(),
        edges: idx.interior_edges(mask).into_iter().map(|j| idx.edges[j]).collect(),
    }
}

/// Expands subgraph `sub` of `g` by `distance` hops.
pub fn expand<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    sub: GraphId,
    distance: usize,
) -> Result<SubgraphView, TopologyError> {
    expand_nodes(model, g, &model.all_nodes(sub), distance)
}
