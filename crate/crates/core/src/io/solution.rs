use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{canonical, read_text, write_text, IoError, SCHEMA_VERSION};
use crate::model::{ConRef, EdgeId, LinkRef, Model, NodeId};
use crate::qp::{Solution, Status};
use crate::scalar::Scalar;

/// Solution keyed by labels: `node.var` for primal values, `node[i]` for node
/// constraint duals and `a-b[i]` for link duals. Non-finite objectives are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub schema_version: u64,
    pub method: String,
    pub status: Status,
    pub objective: Option<f64>,
    pub iterations: usize,
    #[serde(default)]
    pub message: Option<String>,
    pub primal: BTreeMap<String, f64>,
    #[serde(default)]
    pub duals_node: BTreeMap<String, f64>,
    #[serde(default)]
    pub duals_link: BTreeMap<String, f64>,
}

impl SolutionDocument {
    pub fn new<T: Scalar>(model: &Model<T>, solution: &Solution<T>, method: &str) -> Self {
        let objective = solution.objective.as_f64();
        Self {
            schema_version: SCHEMA_VERSION,
            method: method.to_string(),
            status: solution.status,
            objective: objective.is_finite().then_some(objective),
            iterations: solution.iterations,
            message: solution.message.clone(),
            primal: solution.primal.iter().map(|(v, x)| (model.var_label(*v), x.as_f64())).collect(),
            duals_node: solution.duals_node.iter().map(|(c, y)| (model.con_label(*c), y.as_f64())).collect(),
            duals_link: solution.duals_link.iter().map(|(l, y)| (model.link_label(*l), y.as_f64())).collect(),
        }
    }

    /// Rebinds the labels against `model`.
    pub fn to_solution<T: Scalar>(&self, model: &Model<T>) -> Result<Solution<T>, IoError> {
        let mut primal = BTreeMap::new();
        for (label, x) in &self.primal {
            let v = model.resolve(label).ok_or_else(|| IoError::Reference(label.clone()))?;
            primal.insert(v, T::lit(*x));
        }
        let cons: BTreeMap<String, ConRef> = model
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(n, node)| (0..node.constraints.len()).map(move |index| ConRef { node: NodeId(n), index }))
            .map(|c| (model.con_label(c), c))
            .collect();
        let links: BTreeMap<String, LinkRef> = model
            .edges
            .iter()
            .enumerate()
            .flat_map(|(e, edge)| (0..edge.links.len()).map(move |index| LinkRef { edge: EdgeId(e), index }))
            .map(|l| (model.link_label(l), l))
            .collect();
        let mut duals_node = BTreeMap::new();
        for (label, y) in &self.duals_node {
            let c = cons.get(label).ok_or_else(|| IoError::Reference(label.clone()))?;
            duals_node.insert(*c, T::lit(*y));
        }
        let mut duals_link = BTreeMap::new();
        for (label, y) in &self.duals_link {
            let l = links.get(label).ok_or_else(|| IoError::Reference(label.clone()))?;
            duals_link.insert(*l, T::lit(*y));
        }
        Ok(Solution {
            primal,
            duals_node,
            duals_link,
            objective: self.objective.map_or(T::nan(), T::lit),
            status: self.status,
            iterations: self.iterations,
            message: self.message.clone(),
        })
    }
}

pub fn solution_to_json<T: Scalar>(model: &Model<T>, solution: &Solution<T>, method: &str) -> String {
    canonical(&SolutionDocument::new(model, solution, method))
}

pub fn solution_from_json(text: &str) -> Result<SolutionDocument, IoError> {
    let probe: serde_json::Value = serde_json::from_str(text)?;
    let found = probe.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if found != SCHEMA_VERSION {
        return Err(IoError::Schema { found, supported: SCHEMA_VERSION });
    }
    Ok(serde_json::from_str(text)?)
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<SolutionDocument, IoError> {
    solution_from_json(&read_text(path.as_ref())?)
}

pub fn write_solution<T: Scalar>(
    model: &Model<T>,
    solution: &Solution<T>,
    method: &str,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    write_text(path.as_ref(), &solution_to_json(model, solution, method))
}
