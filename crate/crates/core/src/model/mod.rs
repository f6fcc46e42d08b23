//! Hierarchical graph model: nodes hold local subproblems, hyperedges hold
//! linear linking constraints, and graphs nest as subgraphs.
//!
//! All graphs, nodes and edges of one model live in a [`Model`] arena and are
//! addressed by copyable ids. A graph can be created detached and attached
//! later with [`Model::add_subgraph`], which is how independently built
//! component models are composed.

mod expr;
mod flat;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::scalar::Scalar;

pub use expr::{QuadExpr, Sense};
pub use flat::{flatten, FlatQp, FlatQpBuilder, RowSource, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub(crate) usize);

impl GraphId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A variable on a specific node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub node: NodeId,
    pub index: usize,
}

/// A node-local constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConRef {
    pub node: NodeId,
    pub index: usize,
}

/// A linking constraint stored on an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkRef {
    pub edge: EdgeId,
    pub index: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has reversed bounds [{lower}, {upper}]")]
    Bounds { name: String, lower: f64, upper: f64 },
    #[error("variable `{0}` has a non-finite start value")]
    Start(String),
    #[error("link constraint spans {0} node(s); a hyperedge needs at least two")]
    EdgeArity(usize),
    #[error("node `{node}` is not reachable from graph `{graph}`")]
    Scope { node: String, graph: String },
    #[error("link constraint over {nodes:?} belongs in graph `{expected}`, the lowest common ancestor of its nodes")]
    NotLowestCommonAncestor { nodes: Vec<String>, expected: String },
    #[error("hierarchy error: {0}")]
    Hierarchy(String),
    #[error("objective of node `{0}` is not convex")]
    Convexity(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid name `{0}`: names must be non-empty and must not contain '.'")]
    InvalidName(String),
    #[error("constraint has no nonzero coefficient")]
    EmptyConstraint,
    #[error("term references a variable of node `{found}` inside node `{node}`")]
    NonLocal { node: String, found: String },
    #[error("non-finite coefficient or right-hand side")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub lower: T,
    pub upper: T,
    pub start: T,
}

/// Linear constraint over one node's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeConstraint<T> {
    pub terms: BTreeMap<VarRef, T>,
    pub sense: Sense,
    pub rhs: T,
}

/// Linear constraint coupling variables of two or more nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConstraint<T> {
    pub terms: BTreeMap<VarRef, T>,
    pub sense: Sense,
    pub rhs: T,
}

impl<T: Scalar> LinkConstraint<T> {
    /// Distinct nodes referenced, sorted.
    pub fn nodes(&self) -> Vec<NodeId> {
        let set: BTreeSet<NodeId> = self.terms.keys().map(|v| v.node).collect();
        set.into_iter().collect()
    }

    /// `a·x - rhs` for the given value lookup.
    pub fn activity(&self, value: impl Fn(VarRef) -> T) -> T {
        self.terms.iter().fold(-self.rhs, |acc, (v, c)| acc + *c * value(*v))
    }

    /// Amount by which the constraint is violated (zero when satisfied).
    pub fn violation(&self, value: impl Fn(VarRef) -> T) -> T {
        self.sense.violation(self.activity(value))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptiNode<T> {
    pub name: String,
    pub variables: Vec<Variable<T>>,
    pub constraints: Vec<NodeConstraint<T>>,
    pub objective: QuadExpr<T>,
    pub(crate) owner: GraphId,
}

impl<T> OptiNode<T> {
    pub fn owner(&self) -> GraphId {
        self.owner
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }
}

/// Hyperedge over a fixed node set; all its link constraints span exactly that set.
#[derive(Debug, Clone, PartialEq)]
pub struct OptiEdge<T> {
    pub(crate) nodes: Vec<NodeId>,
    pub links: Vec<LinkConstraint<T>>,
    pub(crate) owner: GraphId,
}

impl<T> OptiEdge<T> {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn owner(&self) -> GraphId {
        self.owner
    }

    pub fn num_link_constraints(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GraphData {
    pub(crate) name: String,
    pub(crate) nodes: Vec<NodeId>,
    pub(crate) edges: Vec<EdgeId>,
    pub(crate) subgraphs: Vec<GraphId>,
    pub(crate) parent: Option<GraphId>,
    pub(crate) retired: bool,
}

/// Which levels of the hierarchy a query covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Local,
    Recursive,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Elements {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub subgraphs: Vec<GraphId>,
}

/// Arena owning every graph, node and edge of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub(crate) graphs: Vec<GraphData>,
    pub(crate) nodes: Vec<OptiNode<T>>,
    pub(crate) edges: Vec<OptiEdge<T>>,
    edge_index: BTreeMap<Vec<NodeId>, EdgeId>,
    node_names: HashMap<String, NodeId>,
    revision: u64,
}

impl<T: Scalar> Default for Model<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Model<T> {
    pub fn new() -> Self {
        Self {
            graphs: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            edge_index: BTreeMap::new(),
            node_names: HashMap::new(),
            revision: 0,
        }
    }

    /// Mutation counter; any structural or data change bumps it.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub(crate) fn touch(&mut self) {
        self.revision += 1;
    }

    /// Creates a new, detached graph.
    pub fn new_graph(&mut self, name: impl Into<String>) -> GraphId {
        self.touch();
        self.graphs.push(GraphData {
            name: name.into(),
            nodes: Vec::new(),
            edges: Vec::new(),
            subgraphs: Vec::new(),
            parent: None,
            retired: false,
        });
        GraphId(self.graphs.len() - 1)
    }

    pub fn graph_name(&self, g: GraphId) -> &str {
        &self.graphs[g.0].name
    }

    pub fn parent(&self, g: GraphId) -> Option<GraphId> {
        self.graphs[g.0].parent
    }

    pub fn node(&self, n: NodeId) -> &OptiNode<T> {
        &self.nodes[n.0]
    }

    pub fn edge(&self, e: EdgeId) -> &OptiEdge<T> {
        &self.edges[e.0]
    }

    pub fn link(&self, l: LinkRef) -> &LinkConstraint<T> {
        &self.edges[l.edge.0].links[l.index]
    }

    pub fn variable(&self, v: VarRef) -> &Variable<T> {
        &self.nodes[v.node.0].variables[v.index]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.get(name).copied()
    }

    /// Resolves `"node.var"`.
    pub fn resolve(&self, reference: &str) -> Option<VarRef> {
        let (node, var) = reference.split_once('.')?;
        let node = self.node_by_name(node)?;
        let index = self.nodes[node.0].variable_index(var)?;
        Some(VarRef { node, index })
    }

    /// `"node.var"` label of a variable.
    pub fn var_label(&self, v: VarRef) -> String {
        format!("{}.{}", self.nodes[v.node.0].name, self.variable(v).name)
    }

    /// `"n1-n2[i]"` label of a link constraint.
    pub fn link_label(&self, l: LinkRef) -> String {
        let names: Vec<&str> = self.edge(l.edge).nodes().iter().map(|n| self.nodes[n.0].name.as_str()).collect();
        format!("{}[{}]", names.join("-"), l.index)
    }

    /// `"node[i]"` label of a node constraint.
    pub fn con_label(&self, c: ConRef) -> String {
        format!("{}[{}]", self.nodes[c.node.0].name, c.index)
    }

    fn check_graph(&self, g: GraphId) -> Result<(), ModelError> {
        match self.graphs.get(g.0) {
            Some(data) if !data.retired => Ok(()),
            Some(data) => Err(ModelError::Hierarchy(format!("graph `{}` was discarded by a repartition", data.name))),
            None => Err(ModelError::Integrity(format!("unknown graph id {}", g.0))),
        }
    }

    fn check_node(&self, n: NodeId) -> Result<(), ModelError> {
        if n.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(ModelError::Integrity(format!("unknown node id {}", n.0)))
        }
    }

    fn check_var(&self, v: VarRef) -> Result<(), ModelError> {
        self.check_node(v.node)?;
        if v.index < self.nodes[v.node.0].variables.len() {
            Ok(())
        } else {
            Err(ModelError::Integrity(format!("node `{}` has no variable {}", self.nodes[v.node.0].name, v.index)))
        }
    }

    /// Appends a node with an automatically chosen unique name (`n1`, `n2`, ...).
    pub fn add_node(&mut self, g: GraphId) -> NodeId {
        let mut k = self.nodes.len() + 1;
        let mut name = format!("n{k}");
        while self.node_names.contains_key(&name) {
            k += 1;
            name = format!("n{k}");
        }
        self.add_named_node(g, name).expect("generated node names are valid and unique")
    }

    /// Appends a node with a model-unique name.
    pub fn add_named_node(&mut self, g: GraphId, name: impl Into<String>) -> Result<NodeId, ModelError> {
        self.check_graph(g)?;
        let name = name.into();
        if name.is_empty() || name.contains('.') {
            return Err(ModelError::InvalidName(name));
        }
        if self.node_names.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        self.touch();
        let id = NodeId(self.nodes.len());
        self.nodes.push(OptiNode {
            name: name.clone(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: QuadExpr::new(),
            owner: g,
        });
        self.node_names.insert(name, id);
        self.graphs[g.0].nodes.push(id);
        Ok(id)
    }

    /// Adds a variable. `start` defaults to zero and is clamped into the bounds.
    pub fn add_variable(
        &mut self,
        n: NodeId,
        name: impl Into<String>,
        lower: T,
        upper: T,
        start: Option<T>,
    ) -> Result<VarRef, ModelError> {
        self.check_node(n)?;
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == T::infinity() || upper == T::neg_infinity() {
            return Err(ModelError::Bounds { name, lower: lower.as_f64(), upper: upper.as_f64() });
        }
        let start = start.unwrap_or_else(T::zero);
        if !start.is_finite() {
            return Err(ModelError::Start(name));
        }
        if name.is_empty() {
            return Err(ModelError::InvalidName(name));
        }
        let node = &self.nodes[n.0];
        if node.variable_index(&name).is_some() {
            return Err(ModelError::DuplicateName(format!("{}.{}", node.name, name)));
        }
        self.touch();
        let node = &mut self.nodes[n.0];
        node.variables.push(Variable { name, lower, upper, start: start.max(lower).min(upper) });
        Ok(VarRef { node: n, index: node.variables.len() - 1 })
    }

    /// Adds a free variable with default start.
    pub fn add_free_variable(&mut self, n: NodeId, name: impl Into<String>) -> Result<VarRef, ModelError> {
        self.add_variable(n, name, T::neg_infinity(), T::infinity(), None)
    }

    fn collect_terms(&self, terms: &[(VarRef, T)]) -> Result<BTreeMap<VarRef, T>, ModelError> {
        let mut map = BTreeMap::new();
        for &(v, c) in terms {
            self.check_var(v)?;
            if !c.is_finite() {
                return Err(ModelError::NonFinite);
            }
            *map.entry(v).or_insert_with(T::zero) += c;
        }
        map.retain(|_, c| *c != T::zero());
        if map.is_empty() {
            return Err(ModelError::EmptyConstraint);
        }
        Ok(map)
    }

    fn ensure_local(&self, n: NodeId, vars: impl IntoIterator<Item = VarRef>) -> Result<(), ModelError> {
        for v in vars {
            self.check_var(v)?;
            if v.node != n {
                return Err(ModelError::NonLocal {
                    node: self.nodes[n.0].name.clone(),
                    found: self.nodes[v.node.0].name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Adds a linear constraint local to node `n`.
    pub fn add_constraint(&mut self, n: NodeId, terms: &[(VarRef, T)], sense: Sense, rhs: T) -> Result<ConRef, ModelError> {
        self.check_node(n)?;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite);
        }
        self.ensure_local(n, terms.iter().map(|t| t.0))?;
        let terms = self.collect_terms(terms)?;
        self.touch();
        let node = &mut self.nodes[n.0];
        node.constraints.push(NodeConstraint { terms, sense, rhs });
        Ok(ConRef { node: n, index: node.constraints.len() - 1 })
    }

    /// Replaces the objective of node `n`. Convexity is checked at flatten time.
    pub fn set_objective(&mut self, n: NodeId, objective: QuadExpr<T>) -> Result<(), ModelError> {
        self.check_node(n)?;
        self.ensure_local(n, objective.variables())?;
        if !objective.is_finite() {
            return Err(ModelError::NonFinite);
        }
        self.touch();
        self.nodes[n.0].objective = objective;
        Ok(())
    }

    /// Chain of graphs from `g` up to its root, starting with `g`.
    pub(crate) fn ancestors(&self, g: GraphId) -> Vec<GraphId> {
        let mut out = vec![g];
        let mut cur = g;
        while let Some(p) = self.graphs[cur.0].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Whether `node` is local to `g` or to one of its descendants.
    pub fn is_reachable(&self, g: GraphId, node: NodeId) -> bool {
        self.ancestors(self.nodes[node.0].owner).contains(&g)
    }

    pub(crate) fn lowest_common_ancestor(&self, nodes: &[NodeId]) -> Option<GraphId> {
        let mut chains = nodes.iter().map(|n| {
            let mut c = self.ancestors(self.nodes[n.0].owner);
            c.reverse();
            c
        });
        let mut common = chains.next()?;
        for chain in chains {
            let k = common.iter().zip(&chain).take_while(|(a, b)| a == b).count();
            common.truncate(k);
        }
        common.last().copied()
    }

    /// Adds a linking constraint on graph `g`. The constraint is stored on the
    /// hyperedge keyed by its node set, created if it does not exist yet.
    pub fn add_link_constraint(
        &mut self,
        g: GraphId,
        terms: &[(VarRef, T)],
        sense: Sense,
        rhs: T,
    ) -> Result<LinkRef, ModelError> {
        self.check_graph(g)?;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite);
        }
        let terms = self.collect_terms(terms)?;
        let link = LinkConstraint { terms, sense, rhs };
        let nodes = link.nodes();
        if nodes.len() < 2 {
            return Err(ModelError::EdgeArity(nodes.len()));
        }
        for &n in &nodes {
            if !self.is_reachable(g, n) {
                return Err(ModelError::Scope {
                    node: self.nodes[n.0].name.clone(),
                    graph: self.graphs[g.0].name.clone(),
                });
            }
        }
        let lca = self.lowest_common_ancestor(&nodes).expect("nodes are reachable from g");
        if lca != g {
            return Err(ModelError::NotLowestCommonAncestor {
                nodes: nodes.iter().map(|n| self.nodes[n.0].name.clone()).collect(),
                expected: self.graphs[lca.0].name.clone(),
            });
        }
        self.touch();
        let edge = match self.edge_index.get(&nodes) {
            Some(&e) => e,
            None => {
                let e = EdgeId(self.edges.len());
                self.edges.push(OptiEdge { nodes: nodes.clone(), links: Vec::new(), owner: g });
                self.graphs[g.0].edges.push(e);
                self.edge_index.insert(nodes, e);
                e
            }
        };
        let links = &mut self.edges[edge.0].links;
        links.push(link);
        Ok(LinkRef { edge, index: links.len() - 1 })
    }

    /// Attaches `child` under `parent`.
    pub fn add_subgraph(&mut self, parent: GraphId, child: GraphId) -> Result<(), ModelError> {
        self.check_graph(parent)?;
        self.check_graph(child)?;
        if parent == child {
            return Err(ModelError::Hierarchy(format!("graph `{}` cannot contain itself", self.graphs[parent.0].name)));
        }
        if self.ancestors(parent).contains(&child) {
            return Err(ModelError::Hierarchy(format!(
                "attaching `{}` under `{}` would create a cycle",
                self.graphs[child.0].name, self.graphs[parent.0].name
            )));
        }
        if let Some(p) = self.graphs[child.0].parent {
            return Err(ModelError::Hierarchy(format!(
                "graph `{}` is already a subgraph of `{}`",
                self.graphs[child.0].name, self.graphs[p.0].name
            )));
        }
        self.touch();
        self.graphs[child.0].parent = Some(parent);
        self.graphs[parent.0].subgraphs.push(child);
        Ok(())
    }

    pub fn local_nodes(&self, g: GraphId) -> &[NodeId] {
        &self.graphs[g.0].nodes
    }

    pub fn local_edges(&self, g: GraphId) -> &[EdgeId] {
        &self.graphs[g.0].edges
    }

    pub fn subgraphs(&self, g: GraphId) -> &[GraphId] {
        &self.graphs[g.0].subgraphs
    }

    /// All nodes: local nodes first, then each subgraph depth-first.
    pub fn all_nodes(&self, g: GraphId) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.collect_nodes(g, &mut out);
        out
    }

    fn collect_nodes(&self, g: GraphId, out: &mut Vec<NodeId>) {
        out.extend_from_slice(&self.graphs[g.0].nodes);
        for &s in &self.graphs[g.0].subgraphs {
            self.collect_nodes(s, out);
        }
    }

    /// All edges: subgraph edges (depth-first) before the graph's own edges,
    /// matching the flattened row order.
    pub fn all_edges(&self, g: GraphId) -> Vec<EdgeId> {
        let mut out = Vec::new();
        self.collect_edges(g, &mut out);
        out
    }

    fn collect_edges(&self, g: GraphId, out: &mut Vec<EdgeId>) {
        for &s in &self.graphs[g.0].subgraphs {
            self.collect_edges(s, out);
        }
        out.extend_from_slice(&self.graphs[g.0].edges);
    }

    /// All descendant subgraphs, depth-first pre-order.
    pub fn all_subgraphs(&self, g: GraphId) -> Vec<GraphId> {
        let mut out = Vec::new();
        let mut stack: Vec<GraphId> = self.graphs[g.0].subgraphs.iter().rev().copied().collect();
        while let Some(s) = stack.pop() {
            out.push(s);
            stack.extend(self.graphs[s.0].subgraphs.iter().rev().copied());
        }
        out
    }

    /// All link constraints of `g`, in edge order.
    pub fn all_links(&self, g: GraphId) -> Vec<LinkRef> {
        self.all_edges(g)
            .into_iter()
            .flat_map(|e| (0..self.edges[e.0].links.len()).map(move |index| LinkRef { edge: e, index }))
            .collect()
    }

    pub fn query_elements(&self, g: GraphId, scope: Scope) -> Elements {
        match scope {
            Scope::Local => Elements {
                nodes: self.local_nodes(g).to_vec(),
                edges: self.local_edges(g).to_vec(),
                subgraphs: self.subgraphs(g).to_vec(),
            },
            Scope::Recursive => Elements {
                nodes: self.all_nodes(g),
                edges: self.all_edges(g),
                subgraphs: self.all_subgraphs(g),
            },
        }
    }

    /// Number of variables across all nodes of `g`.
    pub fn num_variables(&self, g: GraphId) -> usize {
        self.all_nodes(g).iter().map(|n| self.nodes[n.0].variables.len()).sum()
    }

    /// Detaches every descendant of `g` and marks it retired.
    pub(crate) fn retire_subgraphs(&mut self, g: GraphId) {
        for s in self.all_subgraphs(g) {
            let data = &mut self.graphs[s.0];
            data.retired = true;
            data.nodes.clear();
            data.edges.clear();
            data.subgraphs.clear();
            data.parent = None;
        }
        self.graphs[g.0].subgraphs.clear();
    }

    /// Attaches a fresh child graph under `parent`.
    pub(crate) fn new_child(&mut self, parent: GraphId, name: String) -> GraphId {
        let id = self.new_graph(name);
        self.graphs[id.0].parent = Some(parent);
        self.graphs[parent.0].subgraphs.push(id);
        id
    }
}

#[cfg(test)]
mod tests;
