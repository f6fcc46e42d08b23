use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LibraryError;
use crate::model::{GraphId, LinkRef, Model, NodeId, QuadExpr, Sense, VarRef};
use crate::scalar::Scalar;

/// Size limits for [`random_block_qp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockQpConfig {
    pub max_nodes: usize,
    pub max_vars: usize,
    pub max_links: usize,
}

impl Default for BlockQpConfig {
    fn default() -> Self {
        Self { max_nodes: 10, max_vars: 10, max_links: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct BlockQp<T> {
    pub model: Model<T>,
    pub graph: GraphId,
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkRef>,
    /// Interior point satisfying every constraint.
    pub witness: Vec<(VarRef, T)>,
}

fn coefficient(rng: &mut ChaCha8Rng) -> f64 {
    let c = rng.gen_range(0.5..2.0);
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

/// Random strictly convex QP on a flat graph of 2 to `max_nodes` nodes.
///
/// Each link owns a pivot variable no other link touches, so the link rows are
/// linearly independent, and all rows hold with slack or equality at a
/// random interior witness.
pub fn random_block_qp<T: Scalar>(seed: u64, cfg: BlockQpConfig) -> Result<BlockQp<T>, LibraryError> {
    if cfg.max_nodes < 2 || cfg.max_vars < 1 {
        return Err(LibraryError::Config("need at least two nodes and one variable per node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Model::new();
    let graph = model.new_graph("blocks");
    let n_nodes = rng.gen_range(2..=cfg.max_nodes);
    let mut nodes = Vec::new();
    let mut vars: Vec<Vec<(VarRef, f64)>> = Vec::new();
    for b in 0..n_nodes {
        let n = model.add_named_node(graph, format!("b{b}"))?;
        let n_vars = rng.gen_range(1..=cfg.max_vars);
        let mut vs = Vec::new();
        for i in 0..n_vars {
            let (lower, upper, x0) = if rng.gen_bool(0.2) {
                (f64::NEG_INFINITY, f64::INFINITY, rng.gen_range(-1.0..1.0))
            } else {
                let lo = -rng.gen_range(1.0..5.0);
                let hi = rng.gen_range(1.0..5.0);
                (lo, hi, rng.gen_range(0.8 * lo..0.8 * hi))
            };
            let lit = |v: f64| if v.is_finite() { T::lit(v) } else if v > 0.0 { T::infinity() } else { T::neg_infinity() };
            let v = model.add_variable(n, format!("x{i}"), lit(lower), lit(upper), None)?;
            vs.push((v, x0));
        }
        let mut obj = QuadExpr::new();
        for &(v, _) in &vs {
            obj.add_quadratic(v, v, T::lit(rng.gen_range(0.1..1.0)));
            obj.add_linear(v, T::lit(rng.gen_range(-1.0..1.0)));
        }
        for _ in 0..rng.gen_range(0..=n_vars) {
            let picks: Vec<_> = vs.choose_multiple(&mut rng, 2.min(n_vars)).collect();
            let terms: Vec<_> = picks.iter().map(|(v, _)| (*v, T::lit(rng.gen_range(-1.0..1.0)))).collect();
            obj.add_square(&terms, T::lit(rng.gen_range(0.1..1.0)));
        }
        model.set_objective(n, obj)?;
        for _ in 0..rng.gen_range(0..=2usize) {
            let count = rng.gen_range(1..=n_vars);
            let picks: Vec<(VarRef, f64)> = vs.choose_multiple(&mut rng, count).copied().collect();
            let coefs: Vec<f64> = picks.iter().map(|_| coefficient(&mut rng)).collect();
            let at: f64 = picks.iter().zip(&coefs).map(|((_, x0), c)| c * x0).sum();
            let terms: Vec<_> = picks.iter().zip(&coefs).map(|((v, _), c)| (*v, T::lit(*c))).collect();
            let slack = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                model.add_constraint(n, &terms, Sense::Le, T::lit(at + slack))?;
            } else {
                model.add_constraint(n, &terms, Sense::Ge, T::lit(at - slack))?;
            }
        }
        nodes.push(n);
        vars.push(vs);
    }

    let mut free: Vec<Vec<usize>> = vars.iter().map(|vs| (0..vs.len()).collect()).collect();
    let mut pivots: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut links = Vec::new();
    for _ in 0..rng.gen_range(0..=cfg.max_links) {
        let owners: Vec<usize> = (0..n_nodes).filter(|&b| !free[b].is_empty()).collect();
        let Some(&pivot_node) = owners.choose(&mut rng) else { break };
        let slot = rng.gen_range(0..free[pivot_node].len());
        let pivot = free[pivot_node].swap_remove(slot);
        pivots[pivot_node].push(pivot);
        let others: Vec<usize> =
            (0..n_nodes).filter(|&b| b != pivot_node && pivots[b].len() < vars[b].len()).collect();
        if others.is_empty() {
            break;
        }
        let arity = rng.gen_range(1..=2.min(others.len()));
        let mut picks = vec![vars[pivot_node][pivot]];
        for &b in others.choose_multiple(&mut rng, arity) {
            let open: Vec<usize> = (0..vars[b].len()).filter(|i| !pivots[b].contains(i)).collect();
            let i = *open.choose(&mut rng).expect("node has a non-pivot variable");
            free[b].retain(|&j| j != i);
            picks.push(vars[b][i]);
        }
        let coefs: Vec<f64> = picks.iter().map(|_| coefficient(&mut rng)).collect();
        let at: f64 = picks.iter().zip(&coefs).map(|((_, x0), c)| c * x0).sum();
        let terms: Vec<_> = picks.iter().zip(&coefs).map(|((v, _), c)| (*v, T::lit(*c))).collect();
        let link = if rng.gen_bool(0.75) {
            model.add_link_constraint(graph, &terms, Sense::Eq, T::lit(at))?
        } else {
            model.add_link_constraint(graph, &terms, Sense::Le, T::lit(at + rng.gen_range(0.1..1.0)))?
        };
        links.push(link);
    }
    let witness = vars.into_iter().flatten().map(|(v, x0)| (v, T::lit(x0))).collect();
    Ok(BlockQp { model, graph, nodes, links, witness })
}
