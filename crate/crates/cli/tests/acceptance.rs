//! Acceptance gate: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use optigraph::library::{
    build_dcopf_model, build_dynamic_model, example_one, example_three, example_two, generate_grid_network,
    random_block_qp, BlockQpConfig, DynOptConfig,
};
use optigraph::model::{flatten, GraphId, Model, NodeId, Sense, VarRef};
use optigraph::partition::{aggregate, apply_partition, balance_bound, make_partition, metrics_of, partition_heuristic};
use optigraph::qp::{solve_monolithic, SolverOptions, Status};
use optigraph::schur::solve_structured;
use optigraph::schwarz::{schwarz_solve, SchwarzOptions};
use optigraph::topology::{expand_nodes, incident_edges, neighborhood, to_hypergraph, Hypergraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn partitioned(mut m: Model<f64>, g: GraphId, k: usize, eps: f64, seed: u64) -> Result<Model<f64>, String> {
    let (h, refs) = to_hypergraph(&m, g);
    let labels = partition_heuristic(&h, k, eps, seed).map_err(|e| e.to_string())?;
    let p = make_partition(&m, g, &labels, &refs).map_err(|e| e.to_string())?;
    apply_partition(&mut m, &p).map_err(|e| e.to_string())?;
    Ok(m)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimum of a flattened LP over all basic solutions: every choice of
/// `n` active rows among equalities, finite bounds and inequality sides.
fn vertex_enumeration(qp: &optigraph::FlatQp) -> Option<(f64, Vec<f64>)> {
    let n = qp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let dense = |r: &optigraph::model::SparseRow<f64>| {
        let mut v = vec![0.0; n];
        for (j, a) in r.iter() {
            v[j] = a;
        }
        v
    };
    let eq: Vec<(Vec<f64>, f64)> = qp.a_eq.iter().zip(&qp.b_eq).map(|(r, b)| (dense(r), *b)).collect();
    for j in 0..n {
        for bound in [qp.lower[j], qp.upper[j]] {
            if bound.is_finite() {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                rows.push((e, bound));
            }
        }
    }
    for ((r, lo), hi) in qp.a_in.iter().zip(&qp.in_lower).zip(&qp.in_upper) {
        for side in [*lo, *hi] {
            if side.is_finite() {
                rows.push((dense(r), side));
            }
        }
    }
    let free = n - eq.len();
    let feasible = |x: &[f64]| {
        let tol = 1e-9;
        (0..n).all(|j| x[j] >= qp.lower[j] - tol && x[j] <= qp.upper[j] + tol)
            && qp.a_eq.iter().zip(&qp.b_eq).all(|(r, b)| (r.dot(x) - b).abs() <= tol)
            && qp.a_in.iter().zip(&qp.in_lower).zip(&qp.in_upper).all(|((r, lo), hi)| {
                let a = r.dot(x);
                a >= lo - tol && a <= hi + tol
            })
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut choose = vec![0usize; free];
    fn next(choose: &mut [usize], m: usize) -> bool {
        let k = choose.len();
        for i in (0..k).rev() {
            if choose[i] < m - k + i {
                choose[i] += 1;
                for j in i + 1..k {
                    choose[j] = choose[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, c) in choose.iter_mut().enumerate() {
        *c = i;
    }
    loop {
        let mut a: Vec<Vec<f64>> = eq.iter().map(|(r, _)| r.clone()).collect();
        let mut b: Vec<f64> = eq.iter().map(|(_, v)| *v).collect();
        for &i in &choose {
            a.push(rows[i].0.clone());
            b.push(rows[i].1);
        }
        if let Some(x) = dense_solve(a, b) {
            if feasible(&x) {
                let f = qp.objective(&x);
                if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
                    best = Some((f, x));
                }
            }
        }
        if !next(&mut choose, rows.len()) {
            break;
        }
    }
    best
}

fn criterion_1() -> Check {
    let ex = example_one::<f64>();
    let qp = flatten(&ex.model, ex.root).map_err(|e| e.to_string())?;
    let (oracle, _) = vertex_enumeration(&qp).ok_or("no feasible vertex")?;
    ensure((oracle - 6.0).abs() <= 1e-12, || format!("oracle objective {oracle}"))?;
    let sol = solve_monolithic(&ex.model, ex.root, &SolverOptions::default()).map_err(|e| e.to_string())?;
    ensure(sol.status == Status::Optimal, || format!("status {}", sol.status))?;
    ensure((sol.objective - oracle).abs() <= 1e-6, || format!("objective {}", sol.objective))?;
    let x: Vec<f64> = (1..=3).map(|k| sol.value(ex.x(k))).collect();
    ensure((-1e-6..=1.0 + 1e-6).contains(&x[0]), || format!("x1 = {}", x[0]))?;
    let sum: f64 = x.iter().sum();
    ensure((sum - 3.0).abs() <= 1e-6, || format!("x1 + x2 + x3 = {sum}"))?;
    Ok(format!("objective {:.9} (vertex oracle {oracle}), x1 = {:.6}", sol.objective, x[0]))
}

fn criterion_2() -> Check {
    let opts = SolverOptions { tol: 1e-9, ..SolverOptions::default() };
    let (mut worst_schur, mut worst_schwarz, mut worst_recomp) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..50 {
        let qp = random_block_qp::<f64>(seed, BlockQpConfig { max_nodes: 10, max_vars: 10, max_links: 8 })
            .map_err(|e| e.to_string())?;
        let (model, g) = (qp.model, qp.graph);
        let mono = solve_monolithic(&model, g, &opts).map_err(|e| e.to_string())?;
        ensure(mono.status == Status::Optimal, || format!("seed {seed}: monolithic {}", mono.status))?;
        let st = solve_structured(&model, g, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(st.solution.status == Status::Optimal, || format!("seed {seed}: schur {}", st.solution.status))?;
        worst_schur = worst_schur.max(rel(st.solution.objective, mono.objective));
        for it in &st.trace {
            worst_recomp = worst_recomp.max(it.residual);
        }

        let mut parted = model.clone();
        let (h, refs) = to_hypergraph(&parted, g);
        let k = h.vertex_count.min(3);
        let labels: Vec<usize> = (0..h.vertex_count).map(|v| v % k).collect();
        let p = make_partition(&parted, g, &labels, &refs).map_err(|e| e.to_string())?;
        apply_partition(&mut parted, &p).map_err(|e| e.to_string())?;
        let sopts = SchwarzOptions { tol: 1e-8, max_iterations: 200, ..SchwarzOptions::with_overlap(h.vertex_count) };
        let sw = schwarz_solve(&parted, g, &sopts).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(sw.solution.status == Status::Optimal, || format!("seed {seed}: schwarz {}", sw.solution.status))?;
        worst_schwarz = worst_schwarz.max(rel(sw.solution.objective, mono.objective));
    }
    ensure(worst_schur <= 1e-6, || format!("schur objective gap {worst_schur:e}"))?;
    ensure(worst_schwarz <= 1e-6, || format!("schwarz objective gap {worst_schwarz:e}"))?;
    ensure(worst_recomp <= 1e-10, || format!("recomposition residual {worst_recomp:e}"))?;
    Ok(format!(
        "50 QPs; max rel gap schur {worst_schur:.1e}, schwarz {worst_schwarz:.1e}; recomposition {worst_recomp:.1e}"
    ))
}

fn criterion_3() -> Check {
    let d = build_dynamic_model::<f64>(&DynOptConfig::sinusoidal(100)).map_err(|e| e.to_string())?;
    let mono = solve_monolithic(&d.model, d.graph, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let m = partitioned(d.model, d.graph, 8, 0.1, 0)?;
    let opts = SchwarzOptions { tol: 1e-6, max_iterations: 100, ..SchwarzOptions::with_overlap(2) };
    let out = schwarz_solve(&m, d.graph, &opts).map_err(|e| e.to_string())?;
    let last = out.history.last().ok_or("empty history")?;
    let r = last.r_primal.max(last.r_dual);
    ensure(out.solution.status == Status::Optimal && r <= 1e-6, || {
        format!("status {} after {} iterations, residual {r:e}", out.solution.status, out.solution.iterations)
    })?;
    let gap = rel(out.solution.objective, mono.objective);
    ensure(gap <= 1e-4, || format!("objective gap {gap:e}"))?;
    Ok(format!("{} iterations, final residual {r:.1e}, objective gap {gap:.1e}", out.solution.iterations))
}

fn criterion_4() -> Check {
    let net = generate_grid_network::<f64>(8, 8, 0);
    let d = build_dcopf_model(&net).map_err(|e| e.to_string())?;
    let m = partitioned(d.model, d.graph, 4, 0.1, 0)?;
    let mut iters = BTreeMap::new();
    for w in [1, 5, 6, 7, 8, 9, 10] {
        let opts = SchwarzOptions { tol: 1e-3, max_iterations: 100, ..SchwarzOptions::with_overlap(w) };
        let converged = match schwarz_solve(&m, d.graph, &opts) {
            Ok(out) if out.solution.status == Status::Optimal => Some(out.solution.iterations),
            _ => None,
        };
        iters.insert(w, converged);
    }
    ensure(iters[&1].is_none(), || format!("omega 1 converged in {:?} iterations", iters[&1]))?;
    for (&w, it) in iters.iter().filter(|(&w, _)| w >= 5) {
        ensure(it.is_some(), || format!("omega {w} did not converge"))?;
    }
    let (i5, i10) = (iters[&5].unwrap(), iters[&10].unwrap());
    ensure(i10 <= i5, || format!("omega 10 took {i10} iterations, omega 5 took {i5}"))?;
    let shown: Vec<String> =
        iters.iter().map(|(w, it)| format!("w{w}={}", it.map_or("none".into(), |i| i.to_string()))).collect();
    Ok(format!("iterations {}", shown.join(" ")))
}

fn brute_cut(h: &Hypergraph, labels: &[usize]) -> (f64, f64) {
    let (mut cut, mut con) = (0.0, 0.0);
    for (pins, &w) in h.hyperedges.iter().zip(&h.edge_weights) {
        let parts: BTreeSet<usize> = pins.iter().map(|&v| labels[v]).collect();
        if parts.len() > 1 {
            cut += w as f64;
            con += w as f64 * (parts.len() - 1) as f64;
        }
    }
    (cut, con)
}

fn criterion_5() -> Check {
    let dynamic = build_dynamic_model::<f64>(&DynOptConfig::sinusoidal(100)).map_err(|e| e.to_string())?;
    let grid = build_dcopf_model(&generate_grid_network::<f64>(8, 8, 0)).map_err(|e| e.to_string())?;
    let graphs = [("dynamic", to_hypergraph(&dynamic.model, dynamic.graph).0), ("grid", to_hypergraph(&grid.model, grid.graph).0)];
    let mut count = 0;
    let mut failures = Vec::new();
    for (name, h) in &graphs {
        for k in [2, 4, 8] {
            for eps in [0.01, 0.1, 0.5] {
                let bound = balance_bound(h.total_vertex_weight(), k, eps);
                let labels = match partition_heuristic(h, k, eps, 0) {
                    Ok(labels) => labels,
                    Err(e) => {
                        let room = bound * k as u64;
                        let why = if room < h.total_vertex_weight() {
                            format!("no labeling exists, {k} parts of at most {bound} hold {room} < {}", h.total_vertex_weight())
                        } else {
                            e.to_string()
                        };
                        failures.push(format!("{name} k={k} eps={eps}: {why}"));
                        continue;
                    }
                };
                let mut sizes = vec![0u64; k];
                for (v, &l) in labels.iter().enumerate() {
                    sizes[l] += h.vertex_weights[v];
                }
                if sizes.iter().any(|&s| s > bound) {
                    failures.push(format!("{name} k={k} eps={eps}: sizes {sizes:?} > {bound}"));
                    continue;
                }
                let met = metrics_of(h, &labels, k).map_err(|e| e.to_string())?;
                let (cut, con) = brute_cut(h, &labels);
                if met.edge_cut != cut || met.connectivity != con {
                    failures.push(format!(
                        "{name} k={k} eps={eps}: metrics {}/{} vs recount {cut}/{con}",
                        met.edge_cut, met.connectivity
                    ));
                    continue;
                }
                count += 1;
            }
        }
    }
    ensure(failures.is_empty(), || format!("{count} of 18 valid; {}", failures.join("; ")))?;
    Ok(format!("{count} partitions within bound, metrics match recount"))
}

fn max_violation(m: &Model<f64>, g: GraphId, x: &BTreeMap<VarRef, f64>) -> Result<f64, String> {
    let qp = flatten(m, g).map_err(|e| e.to_string())?;
    let v: Vec<f64> = qp.var_map.iter().map(|r| x[r]).collect();
    let mut worst = 0.0f64;
    for (j, &xj) in v.iter().enumerate() {
        worst = worst.max(qp.lower[j] - xj).max(xj - qp.upper[j]);
    }
    for (row, b) in qp.a_eq.iter().zip(&qp.b_eq) {
        worst = worst.max((row.dot(&v) - b).abs());
    }
    for ((row, lo), hi) in qp.a_in.iter().zip(&qp.in_lower).zip(&qp.in_upper) {
        let a = row.dot(&v);
        worst = worst.max(lo - a).max(a - hi);
    }
    Ok(worst)
}

fn criterion_6() -> Check {
    let mut models: Vec<(String, Model<f64>, GraphId, usize, f64)> = vec![
        ("example one".into(), example_one().model, example_one::<f64>().root, 2, 0.5),
        ("example two".into(), example_two().model, example_two::<f64>().root, 3, 0.5),
        ("example three".into(), example_three().model, example_three::<f64>().root, 3, 0.5),
    ];
    let d = build_dynamic_model::<f64>(&DynOptConfig::sinusoidal(100)).map_err(|e| e.to_string())?;
    models.push(("dynamic".into(), d.model, d.graph, 8, 0.1));
    let grid = build_dcopf_model(&generate_grid_network::<f64>(8, 8, 0)).map_err(|e| e.to_string())?;
    models.push(("grid".into(), grid.model, grid.graph, 4, 0.1));
    for seed in 0..5 {
        let qp = random_block_qp::<f64>(seed, BlockQpConfig::default()).map_err(|e| e.to_string())?;
        models.push((format!("random {seed}"), qp.model, qp.graph, 2, 0.5));
    }
    let opts = SolverOptions { tol: 1e-9, ..SolverOptions::default() };
    let (mut worst_gap, mut worst_viol, mut worst_obj) = (0.0f64, 0.0f64, 0.0f64);
    for (name, model, g, k, eps) in models {
        let direct = solve_monolithic(&model, g, &opts).map_err(|e| e.to_string())?;
        ensure(direct.status == Status::Optimal, || format!("{name}: direct {}", direct.status))?;
        let m = partitioned(model, g, k, eps, 0).map_err(|e| format!("{name}: {e}"))?;
        let agg = aggregate(&m, g, 0).map_err(|e| format!("{name}: {e}"))?;
        let sol = solve_monolithic(&agg.model, agg.graph, &opts).map_err(|e| e.to_string())?;
        ensure(sol.status == Status::Optimal, || format!("{name}: aggregate {}", sol.status))?;
        worst_gap = worst_gap.max(rel(sol.objective, direct.objective));
        let back = agg.map.transport(&sol);
        worst_viol = worst_viol.max(max_violation(&m, g, &back.primal)?);
        let original: f64 =
            m.all_nodes(g).iter().map(|&n| m.node(n).objective.evaluate(|v| back.primal[&v])).sum();
        worst_obj = worst_obj.max(rel(original, sol.objective));
    }
    ensure(worst_gap <= 1e-6, || format!("objective gap {worst_gap:e}"))?;
    ensure(worst_viol <= 1e-6, || format!("transported point violates constraints by {worst_viol:e}"))?;
    ensure(worst_obj <= 1e-12, || format!("transported objective differs by {worst_obj:e}"))?;
    Ok(format!("10 models; gap {worst_gap:.1e}, transported violation {worst_viol:.1e}, objective match {worst_obj:.1e}"))
}

/// Flat model with one free variable per node and one link per pin set.
fn hyper_model(n: usize, pin_sets: &[Vec<usize>]) -> (Model<f64>, GraphId, Vec<NodeId>) {
    let mut m = Model::new();
    let g = m.new_graph("h");
    let nodes: Vec<NodeId> = (0..n).map(|_| m.add_node(g)).collect();
    let xs: Vec<VarRef> = nodes.iter().map(|&v| m.add_free_variable(v, "x").unwrap()).collect();
    for pins in pin_sets {
        let terms: Vec<_> = pins.iter().map(|&p| (xs[p], 1.0)).collect();
        m.add_link_constraint(g, &terms, Sense::Eq, 0.0).unwrap();
    }
    (m, g, nodes)
}

fn bfs_ball(n: usize, pin_sets: &[Vec<usize>], seeds: &BTreeSet<usize>, d: usize) -> BTreeSet<usize> {
    let mut dist = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    for &s in seeds {
        dist[s] = 0;
    }
    while let Some(v) = queue.pop_front() {
        for pins in pin_sets.iter().filter(|p| p.contains(&v)) {
            for &u in pins {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
    }
    (0..n).filter(|&v| dist[v] <= d).collect()
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = rng.gen_range(2..=50);
        let mut pin_sets: Vec<Vec<usize>> = Vec::new();
        for _ in 0..rng.gen_range(0..=2 * n) {
            let arity = rng.gen_range(2..=4.min(n));
            let mut pins: BTreeSet<usize> = BTreeSet::new();
            while pins.len() < arity {
                pins.insert(rng.gen_range(0..n));
            }
            pin_sets.push(pins.into_iter().collect());
        }
        let (m, g, nodes) = hyper_model(n, &pin_sets);
        let pos = |sel: &[NodeId]| -> BTreeSet<usize> { sel.iter().map(|v| nodes.iter().position(|u| u == v).unwrap()).collect() };
        let seeds: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.15)).collect();
        let seed_ids: Vec<NodeId> = seeds.iter().map(|&i| nodes[i]).collect();
        let (a, b) = (rng.gen_range(0..4), rng.gen_range(0..4));

        let na = neighborhood(&m, g, &seed_ids, a).map_err(|e| e.to_string())?;
        ensure(pos(&na) == bfs_ball(n, &pin_sets, &seeds, a), || format!("case {case}: neighborhood differs from BFS"))?;
        let nab = neighborhood(&m, g, &seed_ids, a + b).map_err(|e| e.to_string())?;
        let composed = neighborhood(&m, g, &na, b).map_err(|e| e.to_string())?;
        ensure(nab == composed, || format!("case {case}: N_(a+b) != N_b(N_a)"))?;

        let view = expand_nodes(&m, g, &seed_ids, 0).map_err(|e| e.to_string())?;
        ensure(pos(&view.nodes) == seeds, || format!("case {case}: expand at overlap 0 changed the node set"))?;

        let boundary: BTreeSet<usize> = incident_edges(&m, g, &seed_ids)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|e| e.index())
            .collect();
        let interior: BTreeSet<usize> = view.edges.iter().map(|e| e.index()).collect();
        let mut oracle_boundary = BTreeSet::new();
        let mut oracle_interior = BTreeSet::new();
        for e in m.all_edges(g) {
            let inside = pos(m.edge(e).nodes());
            let hits = inside.intersection(&seeds).count();
            if hits == inside.len() {
                oracle_interior.insert(e.index());
            } else if hits > 0 {
                oracle_boundary.insert(e.index());
            }
        }
        ensure(boundary == oracle_boundary && interior == oracle_interior, || {
            format!("case {case}: incident/interior edges differ from the direct classification")
        })?;
        ensure(boundary.is_disjoint(&interior), || format!("case {case}: incident and interior edges overlap"))?;
    }
    Ok("200 random hypergraphs (up to 50 nodes) match BFS and direct edge classification".into())
}

fn cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_optigraph"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
}

/// Runs every pipeline in `dir` and returns the produced files. Trace files
/// keep only the iteration and residual columns.
fn pipelines(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    cli(dir, &["build", "dynamic", "--T", "100", "-o", "dyn.json"])?;
    cli(dir, &["build", "dcopf-grid", "--rows", "8", "--cols", "8", "--seed", "0", "-o", "grid.json"])?;
    cli(dir, &["partition", "dyn.json", "-k", "8", "--imbalance", "0.1", "--labels", "dyn.part", "-o", "dyn8.json"])?;
    cli(dir, &["partition", "grid.json", "-k", "4", "--imbalance", "0.1", "--labels", "grid.part", "-o", "grid4.json"])?;
    cli(dir, &["solve", "dyn.json", "--method", "monolithic", "-o", "dyn-mono.sol.json"])?;
    cli(dir, &["solve", "dyn.json", "--method", "schur", "--parts", "8", "-o", "dyn-schur.sol.json"])?;
    cli(dir, &["solve", "grid.json", "--method", "monolithic", "-o", "grid-mono.sol.json"])?;
    for threads in ["1", "2", "4"] {
        cli(dir, &[
            "solve", "dyn.json", "--method", "schwarz", "--parts", "8", "--overlap", "2", "--tol", "1e-6",
            "--max-iter", "100", "--threads", threads, "--trace", &format!("dyn-sw{threads}.csv"),
            "-o", &format!("dyn-sw{threads}.sol.json"),
        ])?;
        cli(dir, &[
            "solve", "grid4.json", "--method", "schwarz", "--overlap", "5", "--tol", "1e-3", "--max-iter", "100",
            "--threads", threads, "--trace", &format!("grid-sw{threads}.csv"), "-o", &format!("grid-sw{threads}.sol.json"),
        ])?;
    }
    cli(dir, &["export", "dyn8.json", "--format", "dot", "--color-partitions", "-o", "dyn8.dot"])?;
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let bytes = if name.ends_with(".csv") {
            let text = String::from_utf8(bytes).map_err(|e| e.to_string())?;
            text.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head)).collect::<Vec<_>>().join("\n").into_bytes()
        } else {
            bytes
        };
        files.insert(name, bytes);
    }
    Ok(files)
}

fn criterion_8() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipelines(a.path())?;
    let second = pipelines(b.path())?;
    ensure(first.keys().eq(second.keys()), || "the runs produced different file sets".into())?;
    for (name, bytes) in &first {
        ensure(&second[name] == bytes, || format!("{name} differs between runs"))?;
    }
    for stem in ["dyn-sw", "grid-sw"] {
        for ext in [".sol.json", ".csv"] {
            let one = &first[&format!("{stem}1{ext}")];
            for t in ["2", "4"] {
                ensure(&first[&format!("{stem}{t}{ext}")] == one, || format!("{stem}{t}{ext} differs from 1 worker"))?;
            }
        }
    }
    Ok(format!("{} files byte-identical across runs and worker counts 1, 2, 4", first.len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("example one LP", Duration::from_secs(1), criterion_1),
        ("solver equivalence", Duration::from_secs(60), criterion_2),
        ("control model Schwarz", Duration::from_secs(30), criterion_3),
        ("overlap sensitivity", Duration::from_secs(120), criterion_4),
        ("partition validity", Duration::from_secs(10), criterion_5),
        ("structure preservation", Duration::from_secs(30), criterion_6),
        ("topology identities", Duration::from_secs(20), criterion_7),
        ("determinism", Duration::from_secs(60), criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {} {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
