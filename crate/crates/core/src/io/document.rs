use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{canonical, read_text, write_text, IoError};
use crate::model::{GraphId, Model, NodeId, QuadExpr, Sense, VarRef};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    schema_version: u64,
    graph: GraphDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    name: String,
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    subgraphs: Vec<GraphDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    name: String,
    #[serde(default)]
    variables: Vec<VariableDoc>,
    #[serde(default)]
    constraints: Vec<RowDoc>,
    #[serde(default)]
    objective: ObjectiveDoc,
}

/// `null` bounds are infinite.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    lower: Option<f64>,
    upper: Option<f64>,
    #[serde(default)]
    start: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    terms: BTreeMap<String, f64>,
    sense: Sense,
    rhs: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    links: Vec<RowDoc>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ObjectiveDoc {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    linear: BTreeMap<String, f64>,
    /// `[a, b, c]` for `c·a·b`, with `a ≤ b` by label.
    #[serde(default)]
    quadratic: Vec<(String, String, f64)>,
}

fn bound<T: Scalar>(v: T) -> Option<f64> {
    v.is_finite().then(|| v.as_f64())
}

fn terms_doc<T: Scalar>(model: &Model<T>, terms: &BTreeMap<VarRef, T>) -> BTreeMap<String, f64> {
    terms.iter().map(|(v, c)| (model.var_label(*v), c.as_f64())).collect()
}

fn graph_doc<T: Scalar>(model: &Model<T>, g: GraphId) -> GraphDoc {
    let nodes = model
        .local_nodes(g)
        .iter()
        .map(|&n| {
            let node = model.node(n);
            let obj = &node.objective;
            let mut quadratic: Vec<(String, String, f64)> = obj
                .quadratic
                .iter()
                .map(|(&(a, b), c)| {
                    let (la, lb) = (model.var_label(a), model.var_label(b));
                    if la <= lb {
                        (la, lb, c.as_f64())
                    } else {
                        (lb, la, c.as_f64())
                    }
                })
                .collect();
            quadratic.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
            NodeDoc {
                name: node.name.clone(),
                variables: node
                    .variables
                    .iter()
                    .map(|v| VariableDoc { name: v.name.clone(), lower: bound(v.lower), upper: bound(v.upper), start: v.start.as_f64() })
                    .collect(),
                constraints: node
                    .constraints
                    .iter()
                    .map(|c| RowDoc { terms: terms_doc(model, &c.terms), sense: c.sense, rhs: c.rhs.as_f64() })
                    .collect(),
                objective: ObjectiveDoc { constant: obj.constant.as_f64(), linear: terms_doc(model, &obj.linear), quadratic },
            }
        })
        .collect();
    let edges = model
        .local_edges(g)
        .iter()
        .map(|&e| EdgeDoc {
            links: model
                .edge(e)
                .links
                .iter()
                .map(|l| RowDoc { terms: terms_doc(model, &l.terms), sense: l.sense, rhs: l.rhs.as_f64() })
                .collect(),
        })
        .collect();
    GraphDoc {
        name: model.graph_name(g).to_string(),
        nodes,
        edges,
        subgraphs: model.subgraphs(g).iter().map(|&s| graph_doc(model, s)).collect(),
    }
}

/// Canonical JSON of the graph `g` and everything below it.
pub fn model_to_json<T: Scalar>(model: &Model<T>, g: GraphId) -> String {
    canonical(&ModelDoc { schema_version: SCHEMA_VERSION, graph: graph_doc(model, g) })
}

fn finite<T: Scalar>(v: f64, what: &str) -> Result<T, IoError> {
    if v.is_finite() {
        Ok(T::lit(v))
    } else {
        Err(IoError::Invalid(format!("{what} must be finite")))
    }
}

fn resolve<T: Scalar>(model: &Model<T>, label: &str) -> Result<VarRef, IoError> {
    model.resolve(label).ok_or_else(|| IoError::Reference(label.to_string()))
}

fn row_terms<T: Scalar>(model: &Model<T>, terms: &BTreeMap<String, f64>) -> Result<Vec<(VarRef, T)>, IoError> {
    terms.iter().map(|(l, c)| Ok((resolve(model, l)?, finite(*c, "a coefficient")?))).collect()
}

/// First pass: graphs, nodes and variables.
fn build_structure<T: Scalar>(
    model: &mut Model<T>,
    doc: &GraphDoc,
    parent: Option<GraphId>,
    out: &mut Vec<(GraphId, Vec<NodeId>)>,
) -> Result<GraphId, IoError> {
    let g = model.new_graph(doc.name.clone());
    if let Some(p) = parent {
        model.add_subgraph(p, g)?;
    }
    let mut nodes = Vec::new();
    for nd in &doc.nodes {
        let n = model.add_named_node(g, nd.name.clone())?;
        for v in &nd.variables {
            let lower = v.lower.map_or(Ok(T::neg_infinity()), |x| finite(x, "a lower bound"))?;
            let upper = v.upper.map_or(Ok(T::infinity()), |x| finite(x, "an upper bound"))?;
            model.add_variable(n, v.name.clone(), lower, upper, Some(finite(v.start, "a start value")?))?;
        }
        nodes.push(n);
    }
    out.push((g, nodes));
    for s in &doc.subgraphs {
        build_structure(model, s, Some(g), out)?;
    }
    Ok(g)
}

/// Second pass, in the same graph order: constraints, objectives and links.
fn build_rows<'a, T: Scalar>(
    model: &mut Model<T>,
    doc: &'a GraphDoc,
    order: &mut impl Iterator<Item = (GraphId, Vec<NodeId>)>,
) -> Result<(), IoError> {
    let (g, nodes) = order.next().expect("one structure entry per graph");
    for (nd, &n) in doc.nodes.iter().zip(&nodes) {
        for c in &nd.constraints {
            let terms = row_terms(model, &c.terms)?;
            model.add_constraint(n, &terms, c.sense, finite(c.rhs, "a right-hand side")?)?;
        }
        let mut obj = QuadExpr::new().with_constant(finite(nd.objective.constant, "an objective constant")?);
        for (l, c) in &nd.objective.linear {
            obj.add_linear(resolve(model, l)?, finite(*c, "a coefficient")?);
        }
        for (a, b, c) in &nd.objective.quadratic {
            obj.add_quadratic(resolve(model, a)?, resolve(model, b)?, finite(*c, "a coefficient")?);
        }
        model.set_objective(n, obj)?;
    }
    for s in &doc.subgraphs {
        build_rows(model, s, order)?;
    }
    for e in &doc.edges {
        for l in &e.links {
            let terms = row_terms(model, &l.terms)?;
            model.add_link_constraint(g, &terms, l.sense, finite(l.rhs, "a right-hand side")?)?;
        }
    }
    Ok(())
}

/// Parses a model document into a fresh model and returns its root graph.
pub fn model_from_json<T: Scalar>(text: &str) -> Result<(Model<T>, GraphId), IoError> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(IoError::Schema { found: probe.schema_version, supported: SCHEMA_VERSION });
    }
    let doc: ModelDoc = serde_json::from_str(text)?;
    let mut model = Model::new();
    let mut order = Vec::new();
    let root = build_structure(&mut model, &doc.graph, None, &mut order)?;
    build_rows(&mut model, &doc.graph, &mut order.into_iter())?;
    Ok((model, root))
}

pub fn read_model<T: Scalar>(path: impl AsRef<Path>) -> Result<(Model<T>, GraphId), IoError> {
    model_from_json(&read_text(path.as_ref())?)
}

pub fn write_model<T: Scalar>(model: &Model<T>, g: GraphId, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_text(path.as_ref(), &model_to_json(model, g))
}
