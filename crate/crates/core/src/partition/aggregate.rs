use std::collections::{BTreeMap, HashSet};

use crate::model::{ConRef, GraphId, LinkRef, Model, ModelError, NodeId, QuadExpr, RowSource, VarRef};
use crate::qp::Solution;
use crate::scalar::Scalar;

/// Correspondence between an original graph and its aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AggregationMap {
    /// Original variable to aggregate variable (a bijection).
    pub variables: BTreeMap<VarRef, VarRef>,
    /// Original node constraint or link constraint to its aggregate row.
    pub rows: BTreeMap<RowSource, RowSource>,
    /// Original node to the aggregate node holding it.
    pub nodes: BTreeMap<NodeId, NodeId>,
}

impl AggregationMap {
    /// Maps a solution of the aggregate back onto the original references.
    pub fn transport<T: Scalar>(&self, sol: &Solution<T>) -> Solution<T> {
        let primal = self.variables.iter().map(|(o, a)| (*o, sol.primal[a])).collect();
        let mut duals_node = BTreeMap::new();
        let mut duals_link = BTreeMap::new();
        for (orig, agg) in &self.rows {
            let y = match agg {
                RowSource::Node(c) => sol.duals_node.get(c),
                RowSource::Link(l) => sol.duals_link.get(l),
            };
            let Some(&y) = y else { continue };
            match orig {
                RowSource::Node(c) => duals_node.insert(*c, y),
                RowSource::Link(l) => duals_link.insert(*l, y),
            };
        }
        Solution {
            primal,
            duals_node,
            duals_link,
            objective: sol.objective,
            status: sol.status,
            iterations: sol.iterations,
            message: sol.message.clone(),
        }
    }
}

/// An aggregated copy of a graph in a fresh model.
#[derive(Debug, Clone)]
pub struct Aggregated<T> {
    pub model: Model<T>,
    pub graph: GraphId,
    pub map: AggregationMap,
}

struct Builder<'a, T> {
    src: &'a Model<T>,
    dst: Model<T>,
    map: AggregationMap,
    used_names: HashSet<String>,
}

impl<'a, T: Scalar> Builder<'a, T> {
    fn copy_node(&mut self, n: NodeId, g: GraphId) -> Result<(), ModelError> {
        let node = self.src.node(n);
        let id = self.dst.add_named_node(g, node.name.clone())?;
        self.map.nodes.insert(n, id);
        for (i, v) in node.variables.iter().enumerate() {
            let nv = self.dst.add_variable(id, v.name.clone(), v.lower, v.upper, Some(v.start))?;
            self.map.variables.insert(VarRef { node: n, index: i }, nv);
        }
        self.copy_constraints(n, id)?;
        let obj = node.objective.remap(|v| self.map.variables[&v]);
        self.dst.set_objective(id, obj)
    }

    fn copy_constraints(&mut self, n: NodeId, into: NodeId) -> Result<(), ModelError> {
        for (i, c) in self.src.node(n).constraints.iter().enumerate() {
            let terms: Vec<(VarRef, T)> = c.terms.iter().map(|(v, a)| (self.map.variables[v], *a)).collect();
            let nc = self.dst.add_constraint(into, &terms, c.sense, c.rhs)?;
            self.map.rows.insert(RowSource::Node(ConRef { node: n, index: i }), RowSource::Node(nc));
        }
        Ok(())
    }

    fn fresh_name(&mut self, base: &str) -> String {
        let base = if base.is_empty() { "aggregate".to_string() } else { base.replace('.', "_") };
        let mut name = base.clone();
        let mut k = 1;
        while self.used_names.contains(&name) {
            k += 1;
            name = format!("{base}_{k}");
        }
        self.used_names.insert(name.clone());
        name
    }

    /// Collapses every node below `s` into one node of `g`. Variables are
    /// named `node.var`.
    fn collapse(&mut self, s: GraphId, g: GraphId) -> Result<(), ModelError> {
        let name = self.fresh_name(self.src.graph_name(s));
        let id = self.dst.add_named_node(g, name)?;
        let members = self.src.all_nodes(s);
        let mut obj = QuadExpr::new();
        for &n in &members {
            self.map.nodes.insert(n, id);
            let node = self.src.node(n);
            for (i, v) in node.variables.iter().enumerate() {
                let nv = self.dst.add_variable(id, format!("{}.{}", node.name, v.name), v.lower, v.upper, Some(v.start))?;
                self.map.variables.insert(VarRef { node: n, index: i }, nv);
            }
            obj.add_expr(&node.objective.remap(|v| self.map.variables[&v]));
        }
        for &n in &members {
            self.copy_constraints(n, id)?;
        }
        self.dst.set_objective(id, obj)
    }

    fn build(&mut self, src_g: GraphId, dst_g: GraphId, depth: usize, n_levels: usize) -> Result<(), ModelError> {
        for &n in self.src.local_nodes(src_g) {
            self.copy_node(n, dst_g)?;
        }
        for &s in self.src.subgraphs(src_g) {
            if depth + 1 > n_levels {
                self.collapse(s, dst_g)?;
            } else {
                let child = self.dst.new_graph(self.src.graph_name(s));
                self.dst.add_subgraph(dst_g, child)?;
                self.build(s, child, depth + 1, n_levels)?;
            }
        }
        Ok(())
    }
}

/// Copies `g` into a new model, collapsing each subgraph deeper than
/// `n_levels` into a single node that carries the union of its variables and
/// constraints and the sum of its objectives. Links that end up inside one
/// node become node constraints; the rest are placed at the lowest common
/// ancestor of their (aggregated) nodes.
pub fn aggregate<T: Scalar>(model: &Model<T>, g: GraphId, n_levels: usize) -> Result<Aggregated<T>, ModelError> {
    let used_names = model.all_nodes(g).iter().map(|&n| model.node(n).name.clone()).collect();
    let mut b = Builder { src: model, dst: Model::new(), map: AggregationMap::default(), used_names };
    let root = b.dst.new_graph(model.graph_name(g));
    b.build(g, root, 0, n_levels)?;
    for e in model.all_edges(g) {
        for (i, link) in model.edge(e).links.iter().enumerate() {
            let terms: Vec<(VarRef, T)> = link.terms.iter().map(|(v, a)| (b.map.variables[v], *a)).collect();
            let mut nodes: Vec<NodeId> = terms.iter().map(|t| t.0.node).collect();
            nodes.sort_unstable();
            nodes.dedup();
            let orig = RowSource::Link(LinkRef { edge: e, index: i });
            let row = if nodes.len() == 1 {
                RowSource::Node(b.dst.add_constraint(nodes[0], &terms, link.sense, link.rhs)?)
            } else {
                let at = b.dst.lowest_common_ancestor(&nodes).expect("nodes share the root");
                RowSource::Link(b.dst.add_link_constraint(at, &terms, link.sense, link.rhs)?)
            };
            b.map.rows.insert(orig, row);
        }
    }
    Ok(Aggregated { model: b.dst, graph: root, map: b.map })
}
