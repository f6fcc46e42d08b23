use super::*;
use crate::model::{flatten, Scope};
use crate::qp::{solve_monolithic, SolverOptions, Status};

fn opts() -> SolverOptions<f64> {
    SolverOptions::default()
}

#[test]
fn example_sizes() {
    let e1 = example_one::<f64>();
    let q = e1.model.query_elements(e1.root, Scope::Recursive);
    assert_eq!((q.nodes.len(), q.edges.len()), (3, 1));
    let e2 = example_two::<f64>();
    let q = e2.model.query_elements(e2.root, Scope::Recursive);
    assert_eq!((q.nodes.len(), q.edges.len(), e2.subgraphs.len()), (9, 4, 3));
    let e3 = example_three::<f64>();
    let q = e3.model.query_elements(e3.root, Scope::Recursive);
    assert_eq!((q.nodes.len(), q.edges.len()), (10, 6));
    assert_eq!(e3.model.local_nodes(e3.root).len(), 1);
}

#[test]
fn example_objectives() {
    for (ex, want) in [(example_one::<f64>(), 6.0), (example_two(), 30.0), (example_three(), 30.0)] {
        let sol = solve_monolithic(&ex.model, ex.root, &opts()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - want).abs() < 1e-6, "{} vs {want}", sol.objective);
    }
}

#[test]
fn example_three_links_hold() {
    let ex = example_three::<f64>();
    let sol = solve_monolithic(&ex.model, ex.root, &opts()).unwrap();
    let x0 = sol.value(ex.x(0));
    for (k, rhs) in [(3, 3.0), (5, 5.0), (7, 7.0)] {
        assert!((x0 + sol.value(ex.x(k)) - rhs).abs() < 1e-7);
    }
}

#[test]
fn dynamic_sizes_and_errors() {
    let d = build_dynamic_model(&DynOptConfig::<f64>::sinusoidal(5)).unwrap();
    assert_eq!(d.states.len(), 5);
    assert_eq!(d.controls.len(), 4);
    assert_eq!(d.dynamics.len(), 4);
    let qp = flatten(&d.model, d.graph).unwrap();
    assert_eq!(qp.num_vars(), 9);
    assert_eq!(qp.num_eq(), 5);
    assert!(matches!(build_dynamic_model(&DynOptConfig::<f64>::sinusoidal(1)), Err(LibraryError::Config(_))));
    let bad = DynOptConfig { horizon: 3, disturbance: vec![0.0; 2] };
    assert!(matches!(build_dynamic_model(&bad), Err(LibraryError::Config(_))));
}

#[test]
fn dynamic_horizon_two_without_disturbance_is_zero() {
    let cfg = DynOptConfig { horizon: 2, disturbance: vec![0.0, 0.0] };
    let d = build_dynamic_model(&cfg).unwrap();
    let sol = solve_monolithic(&d.model, d.graph, &opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.objective.abs() < 1e-7);
}

#[test]
fn dynamic_horizon_three_matches_elimination() {
    // Eliminating the states leaves an unconstrained 2×2 system in (u1, u2).
    let d1 = 1f64.sin();
    let s = d1 + 2f64.sin();
    let u2 = (d1 - 2.0 * s) / 5.0;
    let u1 = -s - 2.0 * u2;
    let x2 = u1 + d1;
    let x3 = x2 + u2 + 2f64.sin();
    let d = build_dynamic_model(&DynOptConfig::<f64>::sinusoidal(3)).unwrap();
    let sol = solve_monolithic(&d.model, d.graph, &opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    let got = [sol.value(d.control(0)), sol.value(d.control(1)), sol.value(d.state(1)), sol.value(d.state(2))];
    for (g, w) in got.iter().zip([u1, u2, x2, x3]) {
        assert!((g - w).abs() < 1e-7, "{g} vs {w}");
    }
    assert!((sol.objective - (u1 * u1 + u2 * u2 + x2 * x2 + x3 * x3)).abs() < 1e-7);
}

fn two_bus() -> PowerNetwork<f64> {
    PowerNetwork {
        buses: vec![
            Bus {
                load: 0.0,
                generators: vec![Generator { c1: 1.0, c2: 0.0, pmin: 0.0, pmax: 10.0 }],
                angle_min: -3.0,
                angle_max: 3.0,
                reference: Some(0.0),
            },
            Bus { load: 1.0, generators: vec![], angle_min: -3.0, angle_max: 3.0, reference: None },
        ],
        lines: vec![Line { src: 0, dst: 1, admittance: 1.0, angle_limit: 2.0 }],
        beta: 0.0,
    }
}

#[test]
fn two_bus_dispatch() {
    let dc = build_dcopf_model(&two_bus()).unwrap();
    assert_eq!(dc.power_links.len(), 2);
    assert_eq!(dc.angle_links.len(), 2);
    let sol = solve_monolithic(&dc.model, dc.graph, &opts()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.value(dc.generation(0, 0)) - 1.0).abs() < 1e-7);
    assert!((sol.value(dc.flow(0)) - 1.0).abs() < 1e-7);
    assert!(sol.value(dc.bus_angle(0)).abs() < 1e-7);
    assert!((sol.value(dc.bus_angle(1)) + 1.0).abs() < 1e-7);
    assert!((sol.objective - 1.0).abs() < 1e-7);
}

#[test]
fn network_validation() {
    let mut net = two_bus();
    net.buses[0].reference = None;
    assert!(matches!(build_dcopf_model(&net), Err(LibraryError::Network(_))));
    let mut net = two_bus();
    net.lines[0].dst = 0;
    assert!(net.validate().is_err());
    let mut net = two_bus();
    net.lines[0].admittance = 0.0;
    assert!(net.validate().is_err());
}

#[test]
fn grid_counts_and_determinism() {
    let a = generate_grid_network::<f64>(4, 4, 7);
    assert_eq!(a.buses.len(), 16);
    assert_eq!(a.lines.len(), 24);
    assert_eq!(a, generate_grid_network(4, 4, 7));
    assert_ne!(a, generate_grid_network(4, 4, 8));
    assert_eq!(a.buses[0].reference, Some(0.0));
    let dc = build_dcopf_model(&a).unwrap();
    assert_eq!(dc.model.all_nodes(dc.graph).len(), 40);
    assert_eq!(dc.power_links.len(), 48);
    assert_eq!(dc.angle_links.len(), 48);
}

#[test]
fn grid_is_solvable() {
    for seed in 0..3 {
        let net = generate_grid_network::<f64>(8, 8, seed);
        let dc = build_dcopf_model(&net).unwrap();
        let sol = solve_monolithic(&dc.model, dc.graph, &opts()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "seed {seed}");
        let load: f64 = net.buses.iter().map(|b| b.load).sum();
        let gen: f64 = (0..64)
            .flat_map(|i| (0..net.buses[i].generators.len()).map(move |j| (i, j)))
            .map(|(i, j)| sol.value(dc.generation(i, j)))
            .sum();
        assert!((gen - load).abs() < 1e-6);
    }
}

#[test]
fn csv_round_trip() {
    let buses = "bus,load,angle_min,angle_max,reference\n0,0,-3,3,0\n1,1,-3,3,\n";
    let gens = "bus,c1,c2,pmin,pmax\n0,1,0,0,10\n";
    let lines = "src,dst,admittance,angle_limit\n0,1,1,2\n";
    let net = read_network_csv(buses.as_bytes(), gens.as_bytes(), lines.as_bytes(), 0.0).unwrap();
    assert_eq!(net, two_bus());
    let bad = "bus,load,angle_min,angle_max,reference\n1,0,-3,3,0\n";
    assert!(matches!(
        read_network_csv(bad.as_bytes(), gens.as_bytes(), lines.as_bytes(), 0.0),
        Err(LibraryError::Csv(_))
    ));
}

