//! Synchronous overlapping Schwarz decomposition.
//!
//! Each original subgraph is expanded by `overlap` hops. Every iteration
//! solves one QP per expanded subgraph against the previous iteration's
//! primal and dual caches, keeps only the values of the nodes the subgraph
//! originally owned and refreshes the caches at a barrier.
//!
//! A link crossing the boundary of an expanded subgraph is handled in one of
//! two ways. Dual treatment adds `λ·(a·x - rhs)` to the objective with the
//! external values substituted. Primal treatment keeps the row and fixes the
//! external values. `λ` uses the sign of the solver's multipliers
//! (`∇f + Aᵀλ = 0`).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
    ConRef, EdgeId, FlatQp, FlatQpBuilder, GraphId, LinkRef, Model, ModelError, NodeId, QuadExpr, RowSource, VarRef,
};
use crate::qp::{solve_qp, QpSolution, Solution, SolverOptions, Status};
use crate::scalar::Scalar;
use crate::topology::{expand_nodes, SubgraphView, TopologyError};

/// Growth of the primal residual over its initial value that aborts the
/// iteration. A zero initial residual is replaced by the first iterate's.
const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkTreatment {
    /// Relax the link into the objective with the cached multiplier.
    Dual,
    /// Keep the link with external values fixed to the cache.
    Primal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzOptions<T> {
    /// Expansion distance used when the subdomains are derived from subgraphs.
    pub overlap: usize,
    pub tol: T,
    pub max_iterations: usize,
    pub default_treatment: LinkTreatment,
    pub overrides: BTreeMap<LinkRef, LinkTreatment>,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    /// Weight `ρ` of `ρ/2 ‖x - x̄‖²` pulling each subproblem toward the cached
    /// iterate. It selects among equally good subproblem solutions and
    /// vanishes at a fixed point.
    pub proximal: T,
    /// Options for each subproblem solve; the tolerance is capped at a tenth of `tol`.
    pub subproblem: SolverOptions<T>,
}

impl<T: Scalar> Default for SchwarzOptions<T> {
    fn default() -> Self {
        Self {
            overlap: 1,
            tol: T::lit(1e-6),
            max_iterations: 100,
            default_treatment: LinkTreatment::Dual,
            overrides: BTreeMap::new(),
            threads: None,
            proximal: T::lit(1e-2),
            subproblem: SolverOptions { tol: T::lit(1e-9).max(T::default_tolerance()), ..SolverOptions::default() },
        }
    }
}

impl<T: Scalar> SchwarzOptions<T> {
    pub fn with_overlap(overlap: usize) -> Self {
        Self { overlap, ..Self::default() }
    }

    /// Marks every link in `links` as primal.
    pub fn primal_links(mut self, links: impl IntoIterator<Item = LinkRef>) -> Self {
        self.overrides.extend(links.into_iter().map(|l| (l, LinkTreatment::Primal)));
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchwarzError {
    #[error("invalid options: {0}")]
    Options(String),
    #[error("subdomains do not partition the graph: {0}")]
    Cover(String),
    #[error("link classification failed: {0}")]
    Classification(String),
    #[error("missing cache entry: {0}")]
    State(String),
    #[error("subproblem {subgraph} ended with status {status}{}", .message.as_ref().map(|m| format!(": {m}")).unwrap_or_default())]
    Subproblem { subgraph: usize, status: Status, message: Option<String> },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An original node set and its expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subdomain {
    pub original: Vec<NodeId>,
    pub expanded: SubgraphView,
}

/// Links crossing the boundary of one expanded subgraph, by treatment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IncidentLinks {
    pub dual: Vec<LinkRef>,
    pub primal: Vec<LinkRef>,
}

/// Caches shared by all subproblems of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzState<T> {
    pub primal: BTreeMap<VarRef, T>,
    pub lambda: BTreeMap<LinkRef, T>,
    pub history: Vec<SchwarzRecord>,
}

/// Part of a subproblem solution kept after restriction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Restriction<T> {
    /// Values of the originally owned nodes.
    pub primal: BTreeMap<VarRef, T>,
    pub duals_node: BTreeMap<ConRef, T>,
    /// Multiplier estimates for every link inside the expanded subgraph.
    pub estimates: BTreeMap<LinkRef, T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzRecord {
    pub iter: usize,
    pub r_primal: f64,
    /// Multiplier spread on cut links or `ρ‖Δx‖∞`, whichever is larger.
    pub r_dual: f64,
    /// Wall time since the start of the solve.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzSolution<T> {
    pub solution: Solution<T>,
    pub history: Vec<SchwarzRecord>,
}

impl<T> SchwarzSolution<T> {
    pub fn trace_csv(&self) -> String {
        trace_csv(&self.history)
    }
}

/// `iter,r_pr,r_du,seconds` lines.
pub fn trace_csv(history: &[SchwarzRecord]) -> String {
    let mut out = String::from("iter,r_pr,r_du,seconds\n");
    for r in history {
        let _ = writeln!(out, "{},{:e},{:e},{:.6}", r.iter, r.r_primal, r.r_dual, r.seconds);
    }
    out
}

/// Subdomains from the subgraphs of `g` expanded by `overlap` hops. A graph
/// without subgraphs is a single subdomain.
pub fn subdomains<T: Scalar>(model: &Model<T>, g: GraphId, overlap: usize) -> Result<Vec<Subdomain>, SchwarzError> {
    let subs = model.subgraphs(g);
    if subs.is_empty() {
        let nodes = model.all_nodes(g);
        let expanded = expand_nodes(model, g, &nodes, 0)?;
        return Ok(vec![Subdomain { original: nodes, expanded }]);
    }
    if let Some(&n) = model.local_nodes(g).first() {
        return Err(SchwarzError::Cover(format!("node `{}` is not inside any subgraph", model.node(n).name)));
    }
    subs.iter()
        .map(|&s| {
            let original = model.all_nodes(s);
            let expanded = expand_nodes(model, g, &original, overlap)?;
            Ok(Subdomain { original, expanded })
        })
        .collect()
}

fn check_cover<T: Scalar>(model: &Model<T>, g: GraphId, domains: &[Subdomain]) -> Result<(), SchwarzError> {
    let all: BTreeSet<NodeId> = model.all_nodes(g).into_iter().collect();
    let mut seen = BTreeSet::new();
    for (i, d) in domains.iter().enumerate() {
        let expanded: HashSet<NodeId> = d.expanded.nodes.iter().copied().collect();
        for &n in &d.original {
            if !all.contains(&n) {
                return Err(SchwarzError::Cover(format!("node `{}` is not part of the graph", model.node(n).name)));
            }
            if !expanded.contains(&n) {
                return Err(SchwarzError::Cover(format!("subdomain {i} does not contain its node `{}`", model.node(n).name)));
            }
            if !seen.insert(n) {
                return Err(SchwarzError::Cover(format!("node `{}` is owned twice", model.node(n).name)));
            }
        }
        if let Some(n) = d.expanded.nodes.iter().find(|n| !all.contains(n)) {
            return Err(SchwarzError::Cover(format!("node `{}` is not part of the graph", model.node(*n).name)));
        }
    }
    if let Some(n) = all.iter().find(|n| !seen.contains(n)) {
        return Err(SchwarzError::Cover(format!("node `{}` is not owned by any subdomain", model.node(*n).name)));
    }
    Ok(())
}

/// Edges of `g` that touch but are not contained in `nodes`.
fn crossing_edges<T: Scalar>(model: &Model<T>, edges: &[EdgeId], nodes: &HashSet<NodeId>) -> Vec<EdgeId> {
    edges
        .iter()
        .copied()
        .filter(|&e| {
            let inside = model.edge(e).nodes().iter().filter(|n| nodes.contains(n)).count();
            inside > 0 && inside < model.edge(e).nodes().len()
        })
        .collect()
}

/// Splits the links incident to each expanded subgraph into dual and primal
/// sets. Overrides must name links of `g`.
pub fn classify_links<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    domains: &[Subdomain],
    opts: &SchwarzOptions<T>,
) -> Result<Vec<IncidentLinks>, SchwarzError> {
    let edges = model.all_edges(g);
    let known: HashSet<EdgeId> = edges.iter().copied().collect();
    for l in opts.overrides.keys() {
        if !known.contains(&l.edge) || l.index >= model.edge(l.edge).num_link_constraints() {
            return Err(SchwarzError::Classification(format!("override names link {l:?}, which is not a link of the graph")));
        }
    }
    Ok(domains
        .iter()
        .map(|d| {
            let nodes: HashSet<NodeId> = d.expanded.nodes.iter().copied().collect();
            let mut out = IncidentLinks::default();
            for e in crossing_edges(model, &edges, &nodes) {
                for index in 0..model.edge(e).num_link_constraints() {
                    let l = LinkRef { edge: e, index };
                    match opts.overrides.get(&l).copied().unwrap_or(opts.default_treatment) {
                        LinkTreatment::Dual => out.dual.push(l),
                        LinkTreatment::Primal => out.primal.push(l),
                    }
                }
            }
            out
        })
        .collect())
}

/// Splits a link's terms into internal columns and the cached external activity.
fn split_terms<T: Scalar>(
    b: &FlatQpBuilder<T>,
    terms: &BTreeMap<VarRef, T>,
    state: &SchwarzState<T>,
    model: &Model<T>,
) -> Result<(BTreeMap<usize, T>, T), SchwarzError> {
    let mut cols = BTreeMap::new();
    let mut external = T::zero();
    for (&v, &c) in terms {
        match b.index_of(v) {
            Some(j) => *cols.entry(j).or_insert_with(T::zero) += c,
            None => {
                let x = state.primal.get(&v).ok_or_else(|| SchwarzError::State(format!("no value for `{}`", model.var_label(v))))?;
                external += c * *x;
            }
        }
    }
    Ok((cols, external))
}

/// Subproblem QP of one expanded subgraph. Columns follow the expanded node
/// order and start from the cached iterate, which is also the center of the
/// proximal term of weight `proximal`.
pub fn build_subproblem<T: Scalar>(
    model: &Model<T>,
    domain: &Subdomain,
    incident: &IncidentLinks,
    state: &SchwarzState<T>,
    proximal: T,
) -> Result<FlatQp<T>, SchwarzError> {
    let mut b = FlatQpBuilder::new();
    let mut prox = QuadExpr::new();
    for &n in &domain.expanded.nodes {
        for (index, var) in model.node(n).variables.iter().enumerate() {
            let v = VarRef { node: n, index };
            let start = state.primal.get(&v).copied().unwrap_or(var.start);
            b.add_var(v, var.lower, var.upper, start);
            if proximal > T::zero() && var.lower < var.upper {
                prox.add_square(&[(v, T::one())], proximal / T::lit(2.0));
                prox.add_linear(v, -proximal * start);
                prox.constant += proximal / T::lit(2.0) * start * start;
            }
        }
    }
    b.add_objective(&prox)?;
    for &n in &domain.expanded.nodes {
        let node = model.node(n);
        b.add_objective(&node.objective)?;
        for (index, c) in node.constraints.iter().enumerate() {
            let terms = b.row_terms(&c.terms)?;
            b.add_row(terms, c.sense, c.rhs, RowSource::Node(ConRef { node: n, index }));
        }
    }
    for &e in &domain.expanded.edges {
        for (index, link) in model.edge(e).links.iter().enumerate() {
            let terms = b.row_terms(&link.terms)?;
            b.add_row(terms, link.sense, link.rhs, RowSource::Link(LinkRef { edge: e, index }));
        }
    }
    for &l in &incident.primal {
        let link = model.link(l);
        let (cols, external) = split_terms(&b, &link.terms, state, model)?;
        if !cols.is_empty() {
            b.add_row(cols, link.sense, link.rhs - external, RowSource::Link(l));
        }
    }
    for &l in &incident.dual {
        let link = model.link(l);
        let lambda = *state.lambda.get(&l).ok_or_else(|| SchwarzError::State(format!("no multiplier for link {l:?}")))?;
        let (cols, external) = split_terms(&b, &link.terms, state, model)?;
        if cols.is_empty() {
            continue;
        }
        for (j, a) in cols {
            b.add_linear(j, lambda * a);
        }
        b.add_constant(lambda * (external - link.rhs));
    }
    Ok(b.finish())
}

/// Keeps the owned part of a subproblem solution and the multiplier estimates
/// of the links inside the expanded subgraph.
pub fn restrict<T: Scalar>(model: &Model<T>, domain: &Subdomain, qp: &FlatQp<T>, sol: &QpSolution<T>) -> Restriction<T> {
    let owned: HashSet<NodeId> = domain.original.iter().copied().collect();
    let inside: HashSet<EdgeId> = domain.expanded.edges.iter().copied().collect();
    let mut out = Restriction::default();
    for (v, &x) in qp.var_map.iter().zip(&sol.x) {
        if owned.contains(&v.node) {
            out.primal.insert(*v, x);
        }
    }
    let rows = qp.eq_rows.iter().zip(&sol.y_eq).chain(qp.in_rows.iter().zip(&sol.y_in));
    for (src, &y) in rows {
        match *src {
            RowSource::Node(c) if owned.contains(&c.node) => {
                out.duals_node.insert(c, y);
            }
            RowSource::Link(l) if inside.contains(&l.edge) => {
                out.estimates.insert(l, y);
            }
            _ => {}
        }
    }
    let _ = model;
    out
}

/// Link ownership: the subdomain whose original nodes contain the link's edge,
/// or `None` for a cut link.
fn link_owners<T: Scalar>(model: &Model<T>, g: GraphId, domains: &[Subdomain]) -> BTreeMap<LinkRef, Option<usize>> {
    let owner_of: HashMap<NodeId, usize> =
        domains.iter().enumerate().flat_map(|(i, d)| d.original.iter().map(move |n| (*n, i))).collect();
    model
        .all_links(g)
        .into_iter()
        .map(|l| {
            let owners: BTreeSet<usize> = model.edge(l.edge).nodes().iter().map(|n| owner_of[n]).collect();
            let owner = if owners.len() == 1 { owners.into_iter().next() } else { None };
            (l, owner)
        })
        .collect()
}

/// Maximum link violation at `primal` and maximum spread of the multiplier
/// estimates of cut links.
pub fn residuals<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    primal: &BTreeMap<VarRef, T>,
    cut_links: &[LinkRef],
    restrictions: &[Restriction<T>],
) -> (T, T) {
    let mut r_pr = T::zero();
    for l in model.all_links(g) {
        let v = model.link(l).violation(|v| primal.get(&v).copied().unwrap_or_else(T::nan));
        r_pr = if v.is_nan() { v } else { r_pr.max(v) };
    }
    let mut r_du = T::zero();
    for l in cut_links {
        let est: Vec<T> = restrictions.iter().filter_map(|r| r.estimates.get(l).copied()).collect();
        if est.len() > 1 {
            let hi = est.iter().copied().fold(T::neg_infinity(), T::max);
            let lo = est.iter().copied().fold(T::infinity(), T::min);
            r_du = r_du.max(hi - lo);
        }
    }
    (r_pr, r_du)
}

/// Solves `g` with subdomains built from its subgraphs and `opts.overlap`.
pub fn schwarz_solve<T: Scalar>(model: &Model<T>, g: GraphId, opts: &SchwarzOptions<T>) -> Result<SchwarzSolution<T>, SchwarzError> {
    let domains = subdomains(model, g, opts.overlap)?;
    schwarz_solve_with(model, g, &domains, opts, None)
}

/// Solves `g` over explicit subdomains, optionally starting from a previous
/// solution (its primal values and link multipliers seed the caches).
pub fn schwarz_solve_with<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    domains: &[Subdomain],
    opts: &SchwarzOptions<T>,
    start: Option<&Solution<T>>,
) -> Result<SchwarzSolution<T>, SchwarzError> {
    if !(opts.tol > T::zero()) {
        return Err(SchwarzError::Options("tolerance must be positive".into()));
    }
    check_cover(model, g, domains)?;
    let incident = classify_links(model, g, domains, opts)?;
    let owners = link_owners(model, g, domains);
    let cut_links: Vec<LinkRef> = owners.iter().filter(|(_, o)| o.is_none()).map(|(l, _)| *l).collect();

    let mut state = SchwarzState { primal: BTreeMap::new(), lambda: BTreeMap::new(), history: Vec::new() };
    for n in model.all_nodes(g) {
        for (index, var) in model.node(n).variables.iter().enumerate() {
            let v = VarRef { node: n, index };
            let x = start.and_then(|s| s.primal.get(&v).copied()).unwrap_or(var.start);
            state.primal.insert(v, x);
        }
    }
    for &l in owners.keys() {
        let y = start.and_then(|s| s.duals_link.get(&l).copied()).unwrap_or_else(T::zero);
        state.lambda.insert(l, y);
    }

    let sub_opts = SolverOptions { tol: opts.subproblem.tol.min(opts.tol * T::lit(0.1)), ..opts.subproblem };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| SchwarzError::Options(format!("cannot start worker pool: {e}")))?;
    let clock = Instant::now();
    let (mut reference, _) = residuals(model, g, &state.primal, &cut_links, &[]);

    let mut status = Status::IterationLimit;
    let mut message = None;
    let mut restrictions: Vec<Restriction<T>> = Vec::new();
    let mut iterations = 0;
    for k in 1..=opts.max_iterations {
        let results: Vec<Result<Restriction<T>, SchwarzError>> = pool.install(|| {
            domains
                .par_iter()
                .zip(&incident)
                .enumerate()
                .map(|(i, (d, inc))| {
                    let qp = build_subproblem(model, d, inc, &state, opts.proximal)?;
                    let sol = solve_qp(&qp, &sub_opts);
                    if sol.status != Status::Optimal {
                        return Err(SchwarzError::Subproblem { subgraph: i, status: sol.status, message: sol.message });
                    }
                    Ok(restrict(model, d, &qp, &sol))
                })
                .collect()
        });
        restrictions = results.into_iter().collect::<Result<_, _>>()?;
        iterations = k;

        let mut step = T::zero();
        for r in &restrictions {
            for (v, x) in &r.primal {
                if let Some(old) = state.primal.insert(*v, *x) {
                    step = step.max((*x - old).abs());
                }
            }
        }
        for (l, owner) in &owners {
            if let Some(y) = link_multiplier(*l, *owner, &restrictions) {
                state.lambda.insert(*l, y);
            }
        }
        let (r_pr, r_du) = residuals(model, g, &state.primal, &cut_links, &restrictions);
        let r_du = r_du.max(opts.proximal * step);
        state.history.push(SchwarzRecord {
            iter: k,
            r_primal: r_pr.as_f64(),
            r_dual: r_du.as_f64(),
            seconds: clock.elapsed().as_secs_f64(),
        });
        if r_pr.max(r_du) <= opts.tol {
            status = Status::Optimal;
            break;
        }
        if k == 1 {
            reference = reference.max(r_pr).max(opts.tol);
        }
        if !(r_pr <= T::lit(DIVERGENCE_FACTOR) * reference) {
            status = Status::NumericalError;
            message = Some(format!("primal residual {:e} diverged at iteration {k}", r_pr.as_f64()));
            break;
        }
    }
    if status == Status::IterationLimit {
        message = Some(format!("no convergence within {} iterations", opts.max_iterations));
    }

    let mut duals_node = BTreeMap::new();
    for r in &restrictions {
        duals_node.extend(r.duals_node.iter().map(|(c, y)| (*c, *y)));
    }
    let objective = model
        .all_nodes(g)
        .iter()
        .fold(T::zero(), |acc, &n| acc + model.node(n).objective.evaluate(|v| state.primal[&v]));
    let solution = Solution {
        primal: state.primal,
        duals_node,
        duals_link: state.lambda,
        objective,
        status,
        iterations,
        message,
    };
    Ok(SchwarzSolution { solution, history: state.history })
}

/// Owner's estimate for an owned link; mean of all estimates for a cut link.
fn link_multiplier<T: Scalar>(l: LinkRef, owner: Option<usize>, restrictions: &[Restriction<T>]) -> Option<T> {
    match owner {
        Some(i) => restrictions[i].estimates.get(&l).copied(),
        None => {
            let est: Vec<T> = restrictions.iter().filter_map(|r| r.estimates.get(&l).copied()).collect();
            if est.is_empty() {
                None
            } else {
                Some(est.iter().copied().fold(T::zero(), |a, b| a + b) / T::lit(est.len() as f64))
            }
        }
    }
}
