use crate::model::{GraphId, Model, NodeId, QuadExpr, Sense, VarRef};
use crate::scalar::Scalar;

/// A tutorial graph with handles to its pieces.
#[derive(Debug, Clone)]
pub struct ExampleGraph<T> {
    pub model: Model<T>,
    pub root: GraphId,
    pub subgraphs: Vec<GraphId>,
    /// Node handles by number: `nodes[k]` is node `n{k}` (with `n0` only in example three).
    pub nodes: Vec<Option<NodeId>>,
}

impl<T: Scalar> ExampleGraph<T> {
    pub fn node(&self, k: usize) -> NodeId {
        self.nodes[k].expect("node exists in this example")
    }

    pub fn x(&self, k: usize) -> VarRef {
        let n = self.node(k);
        VarRef { node: n, index: self.model.node(n).variable_index("x").expect("x exists") }
    }
}

/// Adds node `n{k}` with `y ≥ y_lower`, `x ≥ 0`, `x + y ≥ rhs` and objective `y`.
fn tutorial_node<T: Scalar>(m: &mut Model<T>, g: GraphId, k: usize, y_lower: T, rhs: f64) -> (NodeId, VarRef) {
    let n = m.add_named_node(g, format!("n{k}")).expect("fresh name");
    let y = m.add_variable(n, "y", y_lower, T::infinity(), None).expect("valid bounds");
    let x = m.add_variable(n, "x", T::zero(), T::infinity(), None).expect("valid bounds");
    m.add_constraint(n, &[(x, T::one()), (y, T::one())], Sense::Ge, T::lit(rhs)).expect("local constraint");
    m.set_objective(n, QuadExpr::linear_terms(&[(y, T::one())])).expect("local objective");
    (n, x)
}

/// Three nodes `n{first}..` joined by `Σ x = rhs`; only the first node bounds `y ≥ 2`
/// when `only_first_bounded`.
fn tutorial_graph<T: Scalar>(
    m: &mut Model<T>,
    name: &str,
    first: usize,
    rhs: f64,
    only_first_bounded: bool,
    nodes: &mut [Option<NodeId>],
) -> GraphId {
    let g = m.new_graph(name);
    let mut xs = Vec::new();
    for k in first..first + 3 {
        let y_lower = if k == first || !only_first_bounded { T::lit(2.0) } else { T::neg_infinity() };
        let (n, x) = tutorial_node(m, g, k, y_lower, rhs);
        nodes[k] = Some(n);
        xs.push((x, T::one()));
    }
    m.add_link_constraint(g, &xs, Sense::Eq, T::lit(rhs)).expect("valid link");
    g
}

/// Three nodes coupled by one hyperedge `x₁ + x₂ + x₃ = 3`; optimal objective 6.
pub fn example_one<T: Scalar>() -> ExampleGraph<T> {
    let mut model = Model::new();
    let mut nodes = vec![None; 4];
    let root = tutorial_graph(&mut model, "graph1", 1, 3.0, true, &mut nodes);
    ExampleGraph { model, root, subgraphs: Vec::new(), nodes }
}

fn three_subgraphs<T: Scalar>(model: &mut Model<T>, nodes: &mut [Option<NodeId>]) -> (GraphId, Vec<GraphId>) {
    let subs = vec![
        tutorial_graph(model, "graph1", 1, 3.0, true, nodes),
        tutorial_graph(model, "graph2", 4, 5.0, false, nodes),
        tutorial_graph(model, "graph3", 7, 7.0, false, nodes),
    ];
    let root = model.new_graph("graph0");
    for &s in &subs {
        model.add_subgraph(root, s).expect("fresh subgraph");
    }
    (root, subs)
}

/// Three tutorial subgraphs coupled by a global edge `x₃ + x₅ + x₇ = 10`.
pub fn example_two<T: Scalar>() -> ExampleGraph<T> {
    let mut model = Model::new();
    let mut nodes = vec![None; 10];
    let (root, subgraphs) = three_subgraphs(&mut model, &mut nodes);
    let ex = ExampleGraph { model, root, subgraphs, nodes };
    let terms = [(ex.x(3), T::one()), (ex.x(5), T::one()), (ex.x(7), T::one())];
    let mut ex = ex;
    ex.model.add_link_constraint(root, &terms, Sense::Eq, T::lit(10.0)).expect("valid link");
    ex
}

/// Three tutorial subgraphs coupled through a global node `n0`.
pub fn example_three<T: Scalar>() -> ExampleGraph<T> {
    let mut model = Model::new();
    let mut nodes = vec![None; 10];
    let (root, subgraphs) = three_subgraphs(&mut model, &mut nodes);
    let n0 = model.add_named_node(root, "n0").expect("fresh name");
    let x0 = model.add_free_variable(n0, "x").expect("fresh variable");
    model.add_constraint(n0, &[(x0, T::one())], Sense::Ge, T::zero()).expect("local constraint");
    nodes[0] = Some(n0);
    let mut ex = ExampleGraph { model, root, subgraphs, nodes };
    for (k, rhs) in [(3, 3.0), (5, 5.0), (7, 7.0)] {
        let terms = [(x0, T::one()), (ex.x(k), T::one())];
        ex.model.add_link_constraint(root, &terms, Sense::Eq, T::lit(rhs)).expect("valid link");
    }
    ex
}
