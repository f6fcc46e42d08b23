use super::LibraryError;
use crate::model::{GraphId, LinkRef, Model, NodeId, QuadExpr, Sense, VarRef};
use crate::scalar::Scalar;

/// Horizon and disturbance of the discrete-time control problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DynOptConfig<T> {
    pub horizon: usize,
    /// `d[t]` for `t = 0..horizon`; the last entry is unused.
    pub disturbance: Vec<T>,
}

impl<T: Scalar> DynOptConfig<T> {
    /// Disturbance `d_t = sin t` for `t = 1..=horizon`.
    pub fn sinusoidal(horizon: usize) -> Self {
        Self { horizon, disturbance: (1..=horizon).map(|t| T::lit(t as f64).sin()).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicModel<T> {
    pub model: Model<T>,
    pub graph: GraphId,
    pub states: Vec<NodeId>,
    pub controls: Vec<NodeId>,
    pub dynamics: Vec<LinkRef>,
}

impl<T: Scalar> DynamicModel<T> {
    pub fn state(&self, t: usize) -> VarRef {
        VarRef { node: self.states[t], index: 0 }
    }

    pub fn control(&self, t: usize) -> VarRef {
        VarRef { node: self.controls[t], index: 0 }
    }
}

/// `min Σ x_t² + Σ u_t²` s.t. `x_{t+1} = x_t + u_t + d_t`, `x_1 = 0`, `x ≥ 0`,
/// `u ≥ -1000`. State nodes `state{t}` come before control nodes `control{t}`.
pub fn build_dynamic_model<T: Scalar>(cfg: &DynOptConfig<T>) -> Result<DynamicModel<T>, LibraryError> {
    let horizon = cfg.horizon;
    if horizon < 2 {
        return Err(LibraryError::Config(format!("horizon must be at least 2, got {horizon}")));
    }
    if cfg.disturbance.len() != horizon {
        return Err(LibraryError::Config(format!(
            "disturbance has length {}, expected {horizon}",
            cfg.disturbance.len()
        )));
    }
    let mut model = Model::new();
    let graph = model.new_graph("dynamic");
    let mut states = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let n = model.add_named_node(graph, format!("state{t}"))?;
        let x = model.add_variable(n, "x", T::zero(), T::infinity(), None)?;
        let mut obj = QuadExpr::new();
        obj.add_quadratic(x, x, T::one());
        model.set_objective(n, obj)?;
        states.push(n);
    }
    let mut controls = Vec::with_capacity(horizon - 1);
    for t in 1..horizon {
        let n = model.add_named_node(graph, format!("control{t}"))?;
        let u = model.add_variable(n, "u", T::lit(-1000.0), T::infinity(), None)?;
        let mut obj = QuadExpr::new();
        obj.add_quadratic(u, u, T::one());
        model.set_objective(n, obj)?;
        controls.push(n);
    }
    let x1 = VarRef { node: states[0], index: 0 };
    model.add_constraint(states[0], &[(x1, T::one())], Sense::Eq, T::zero())?;
    let mut dynamics = Vec::with_capacity(horizon - 1);
    for t in 0..horizon - 1 {
        let terms = [
            (VarRef { node: states[t + 1], index: 0 }, T::one()),
            (VarRef { node: states[t], index: 0 }, -T::one()),
            (VarRef { node: controls[t], index: 0 }, -T::one()),
        ];
        dynamics.push(model.add_link_constraint(graph, &terms, Sense::Eq, cfg.disturbance[t])?);
    }
    Ok(DynamicModel { model, graph, states, controls, dynamics })
}
