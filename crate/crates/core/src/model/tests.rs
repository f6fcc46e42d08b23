use super::*;

const INF: f64 = f64::INFINITY;

fn three_node_graph() -> (Model<f64>, GraphId, Vec<NodeId>, Vec<VarRef>) {
    let mut m = Model::new();
    let g = m.new_graph("g");
    let mut nodes = Vec::new();
    let mut xs = Vec::new();
    for _ in 0..3 {
        let n = m.add_node(g);
        let x = m.add_variable(n, "x", 0.0, INF, None).unwrap();
        nodes.push(n);
        xs.push(x);
    }
    (m, g, nodes, xs)
}

#[test]
fn new_graph_is_empty_and_independent() {
    let mut m = Model::<f64>::new();
    let a = m.new_graph("g");
    let b = m.new_graph("");
    m.add_node(a);
    let ea = m.query_elements(a, Scope::Recursive);
    let eb = m.query_elements(b, Scope::Recursive);
    assert_eq!(ea.nodes.len(), 1);
    assert_eq!(eb, Elements::default());
    assert_eq!(m.graph_name(b), "");
}

#[test]
fn add_node_counts_locally_and_recursively() {
    let mut m = Model::<f64>::new();
    let g = m.new_graph("g");
    let s = m.new_graph("s");
    m.add_subgraph(g, s).unwrap();
    for _ in 0..3 {
        m.add_node(g);
    }
    assert_eq!(m.local_nodes(g).len(), 3);
    m.add_node(s);
    assert_eq!(m.local_nodes(g).len(), 3);
    assert_eq!(m.all_nodes(g).len(), 4);
}

#[test]
fn many_nodes_keep_stable_references() {
    let mut m = Model::<f64>::new();
    let g = m.new_graph("g");
    let ids: Vec<NodeId> = (0..100_000).map(|_| m.add_node(g)).collect();
    assert_eq!(m.all_nodes(g).len(), 100_000);
    for (k, id) in ids.iter().enumerate().step_by(9973) {
        assert_eq!(id.index(), k);
        assert_eq!(m.node(*id).name, format!("n{}", k + 1));
    }
}

#[test]
fn variable_bounds_and_start() {
    let mut m = Model::<f64>::new();
    let g = m.new_graph("g");
    let n = m.add_node(g);
    let y = m.add_variable(n, "y", 2.0, INF, None).unwrap();
    assert_eq!(m.variable(y).lower, 2.0);
    // default start is clamped into the bounds
    assert_eq!(m.variable(y).start, 2.0);
    let x = m.add_variable(n, "x", 0.0, 0.0, Some(0.0)).unwrap();
    assert_eq!((m.variable(x).lower, m.variable(x).upper), (0.0, 0.0));
    assert!(matches!(m.add_variable(n, "z", 1.0, -1.0, None), Err(ModelError::Bounds { .. })));
    assert!(matches!(m.add_variable(n, "x", 0.0, 1.0, None), Err(ModelError::DuplicateName(_))));
}

#[test]
fn link_constraint_creates_hyperedge_keyed_by_node_set() {
    let (mut m, g, nodes, xs) = three_node_graph();
    let terms: Vec<_> = xs.iter().map(|&x| (x, 1.0)).collect();
    let l = m.add_link_constraint(g, &terms, Sense::Eq, 3.0).unwrap();
    assert_eq!(m.local_edges(g).len(), 1);
    assert_eq!(m.edge(l.edge).nodes(), &nodes[..]);

    let a = m.add_link_constraint(g, &[(xs[0], 1.0), (xs[1], -1.0)], Sense::Le, 0.0).unwrap();
    let b = m.add_link_constraint(g, &[(xs[1], 2.0), (xs[0], 1.0)], Sense::Ge, 1.0).unwrap();
    assert_eq!(a.edge, b.edge);
    assert_eq!(m.edge(a.edge).num_link_constraints(), 2);
    assert_eq!(m.local_edges(g).len(), 2);
}

#[test]
fn single_node_link_is_rejected() {
    let (mut m, g, _, xs) = three_node_graph();
    assert_eq!(m.add_link_constraint(g, &[(xs[0], 1.0)], Sense::Eq, 1.0), Err(ModelError::EdgeArity(1)));
    // terms cancelling to one node are also rejected
    let err = m.add_link_constraint(g, &[(xs[0], 1.0), (xs[1], 1.0), (xs[1], -1.0)], Sense::Eq, 1.0);
    assert_eq!(err, Err(ModelError::EdgeArity(1)));
}

#[test]
fn link_scope_and_lowest_common_ancestor() {
    let mut m = Model::<f64>::new();
    let root = m.new_graph("root");
    let a = m.new_graph("a");
    let other = m.new_graph("other");
    m.add_subgraph(root, a).unwrap();
    let na = m.add_node(a);
    let nb = m.add_node(a);
    let no = m.add_node(other);
    let xa = m.add_free_variable(na, "x").unwrap();
    let xb = m.add_free_variable(nb, "x").unwrap();
    let xo = m.add_free_variable(no, "x").unwrap();
    assert!(matches!(
        m.add_link_constraint(root, &[(xa, 1.0), (xo, 1.0)], Sense::Eq, 0.0),
        Err(ModelError::Scope { .. })
    ));
    assert!(matches!(
        m.add_link_constraint(root, &[(xa, 1.0), (xb, 1.0)], Sense::Eq, 0.0),
        Err(ModelError::NotLowestCommonAncestor { .. })
    ));
    assert!(m.add_link_constraint(a, &[(xa, 1.0), (xb, 1.0)], Sense::Eq, 0.0).is_ok());
}

#[test]
fn subgraph_hierarchy_errors() {
    let mut m = Model::<f64>::new();
    let g = m.new_graph("g");
    let s = m.new_graph("s");
    let t = m.new_graph("t");
    assert!(matches!(m.add_subgraph(g, g), Err(ModelError::Hierarchy(_))));
    m.add_subgraph(g, s).unwrap();
    m.add_subgraph(s, t).unwrap();
    assert!(matches!(m.add_subgraph(t, g), Err(ModelError::Hierarchy(_))));
    assert!(matches!(m.add_subgraph(g, t), Err(ModelError::Hierarchy(_))));
    let empty = m.new_graph("empty");
    m.add_subgraph(g, empty).unwrap();
    assert_eq!(m.all_nodes(g).len(), 0);
    assert_eq!(m.all_subgraphs(g), vec![s, t, empty]);
}

#[test]
fn node_constraints_must_be_local() {
    let (mut m, _, nodes, xs) = three_node_graph();
    let err = m.add_constraint(nodes[0], &[(xs[1], 1.0)], Sense::Ge, 0.0);
    assert!(matches!(err, Err(ModelError::NonLocal { .. })));
    assert_eq!(m.add_constraint(nodes[0], &[(xs[0], 0.0)], Sense::Ge, 0.0), Err(ModelError::EmptyConstraint));
    let mut obj = QuadExpr::new();
    obj.add_quadratic(xs[0], xs[1], 1.0);
    assert!(m.set_objective(nodes[0], obj).is_err());
}

#[test]
fn flatten_rejects_nonconvex_objective_naming_node() {
    let mut m = Model::<f64>::new();
    let g = m.new_graph("g");
    let n = m.add_named_node(g, "bad").unwrap();
    let x = m.add_free_variable(n, "x").unwrap();
    let y = m.add_free_variable(n, "y").unwrap();
    let mut obj = QuadExpr::new();
    obj.add_quadratic(x, x, 1.0).add_quadratic(y, y, 1.0).add_quadratic(x, y, 3.0);
    m.set_objective(n, obj).unwrap();
    assert_eq!(flatten(&m, g), Err(ModelError::Convexity("bad".into())));
}

#[test]
fn flatten_single_node_lp() {
    let mut m = Model::<f64>::new();
    let g = m.new_graph("g");
    let n = m.add_node(g);
    let x = m.add_free_variable(n, "x").unwrap();
    let y = m.add_free_variable(n, "y").unwrap();
    m.add_constraint(n, &[(x, 1.0), (y, 1.0)], Sense::Ge, 3.0).unwrap();
    m.set_objective(n, QuadExpr::linear_terms(&[(y, 1.0)])).unwrap();
    let qp = flatten(&m, g).unwrap();
    assert_eq!(qp.num_vars(), 2);
    assert!(qp.hessian.is_empty());
    assert_eq!(qp.c, vec![0.0, 1.0]);
    assert_eq!(qp.num_in(), 1);
    assert_eq!((qp.in_lower[0], qp.in_upper[0]), (3.0, INF));
}

#[test]
fn flatten_orders_subgraph_links_before_parent_links() {
    let mut m = Model::<f64>::new();
    let root = m.new_graph("root");
    let s = m.new_graph("s");
    let a = m.add_node(s);
    let b = m.add_node(s);
    let c = m.add_node(root);
    let xa = m.add_free_variable(a, "x").unwrap();
    let xb = m.add_free_variable(b, "x").unwrap();
    let xc = m.add_free_variable(c, "x").unwrap();
    m.add_subgraph(root, s).unwrap();
    let parent_link = m.add_link_constraint(root, &[(xa, 1.0), (xc, 1.0)], Sense::Eq, 1.0).unwrap();
    let child_link = m.add_link_constraint(s, &[(xa, 1.0), (xb, 1.0)], Sense::Eq, 2.0).unwrap();
    let qp = flatten(&m, root).unwrap();
    assert_eq!(qp.eq_rows, vec![RowSource::Link(child_link), RowSource::Link(parent_link)]);
    // root-local node first, then subgraph nodes
    assert_eq!(qp.var_map.iter().map(|v| v.node).collect::<Vec<_>>(), vec![c, a, b]);
}

#[test]
fn flatten_is_deterministic_and_maps_are_bijective() {
    let build = || {
        let (mut m, g, nodes, xs) = three_node_graph();
        let terms: Vec<_> = xs.iter().map(|&x| (x, 1.0)).collect();
        m.add_link_constraint(g, &terms, Sense::Eq, 3.0).unwrap();
        for (&n, &x) in nodes.iter().zip(&xs) {
            let mut obj = QuadExpr::new();
            obj.add_quadratic(x, x, 1.0).add_linear(x, -1.0);
            m.set_objective(n, obj).unwrap();
        }
        flatten(&m, g).unwrap()
    };
    let a = build();
    let b = build();
    assert_eq!(a, b);
    let set: std::collections::HashSet<_> = a.var_map.iter().collect();
    assert_eq!(set.len(), a.num_vars());
    assert_eq!(a.hessian, vec![(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0)]);
}

#[test]
fn recursive_count_is_sum_of_local_counts() {
    let mut m = Model::<f64>::new();
    let root = m.new_graph("root");
    let mut graphs = vec![root];
    for k in 0..6 {
        let g = m.new_graph(format!("g{k}"));
        m.add_subgraph(graphs[k / 2], g).unwrap();
        graphs.push(g);
    }
    for (k, &g) in graphs.iter().enumerate() {
        for _ in 0..k + 1 {
            m.add_node(g);
        }
    }
    let total: usize = graphs.iter().map(|&g| m.local_nodes(g).len()).sum();
    assert_eq!(m.all_nodes(root).len(), total);
}
