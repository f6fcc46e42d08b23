//! Schur-complement decomposition of the interior-point Newton systems.
//!
//! Every top-level node of a graph owns one block of the Newton matrix
//! (its variables, its inequality slacks and its own constraint rows), and the
//! link rows form the border:
//!
//! ```text
//! [ K_1            B_1 ] [Δw_1]   [a_1]
//! [      ...       ... ] [ ...] = [...]
//! [           K_N  B_N ] [Δw_N]   [a_N]
//! [ B_1ᵀ ... B_Nᵀ   0  ] [ Δλ ]   [ b ]
//! ```
//!
//! With `S = -Σ B_nᵀ K_n⁻¹ B_n` the border step solves
//! `S Δλ = b - Σ B_nᵀ K_n⁻¹ a_n` and each block then solves
//! `K_n Δw_n = a_n - B_n Δλ`. Writing `a = -r` gives the familiar
//! `S Δλ = Σ B_nᵀ K_n⁻¹ r_n - r_ℰ` and `K_n Δw_n = -B_n Δλ - r_n`.
//! Block work runs on the rayon pool; `S` is reduced in node order so results
//! do not depend on the number of threads.

mod backend;

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{BunchKaufman, DenseMatrix, SparseLdl};
use crate::model::{flatten, FlatQp, GraphId, Model, ModelError, NodeId, RowSource};
use crate::qp::{interior_point, IterationRecord, QpSolution, RowOrigin, Solution, SolverOptions, Standard};
use crate::scalar::{norm_inf, Scalar};

pub use backend::SchurIteration;
pub(crate) use backend::SchurBackend;

/// Largest Schur complement the dense path accepts.
pub const MAX_SCHUR_DIM: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchurError {
    #[error("structure error: {0}")]
    Structure(String),
    #[error("Schur complement of dimension {dim} exceeds the limit of {limit}; re-partition with fewer links")]
    TooLarge { dim: usize, limit: usize },
    #[error("Schur complement is singular: link row `{link}` is redundant")]
    Rank { link: String },
    #[error("factorization of node block `{node}` failed")]
    NodeFactor { node: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Assignment of standard-form columns and rows to node blocks and the border.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub nodes: Vec<NodeId>,
    /// Standard columns of each block.
    pub cols: Vec<Vec<usize>>,
    /// Standard rows of each block.
    pub rows: Vec<Vec<usize>>,
    /// Standard rows of the border, in link order.
    pub link_rows: Vec<usize>,
    /// Human-readable label per border row.
    pub link_labels: Vec<String>,
    /// Border entries `(local column, link position, value)` of each block.
    pub coupling: Vec<Vec<(usize, usize, f64)>>,
}

impl Layout {
    pub fn new<T: Scalar>(model: &Model<T>, g: GraphId, qp: &FlatQp<T>, sys: &Standard<T>) -> Result<Self, SchurError> {
        if !model.subgraphs(g).is_empty() {
            return Err(SchurError::Structure(format!(
                "graph `{}` has subgraphs; aggregate it so that every node is top-level",
                model.graph_name(g)
            )));
        }
        let nodes = model.local_nodes(g).to_vec();
        let block_of: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(b, n)| (*n, b)).collect();
        let n_x = sys.n_x;
        let mut col_block = vec![0usize; sys.n()];
        for (j, v) in qp.var_map.iter().enumerate() {
            col_block[j] = block_of[&v.node];
        }
        let source = |r: RowOrigin| match r {
            RowOrigin::Eq(i) => Some((qp.eq_rows[i], &qp.a_eq[i])),
            RowOrigin::In(i) => Some((qp.in_rows[i], &qp.a_in[i])),
            RowOrigin::Fix(_) => None,
        };
        for (i, row) in qp.a_in.iter().enumerate() {
            col_block[n_x + i] = match qp.in_rows[i] {
                RowSource::Node(c) => block_of[&c.node],
                RowSource::Link(_) => col_block[row.cols[0]],
            };
        }
        let mut cols = vec![Vec::new(); nodes.len()];
        let mut local = vec![0usize; sys.n()];
        for j in 0..sys.n() {
            let b = col_block[j];
            local[j] = cols[b].len();
            cols[b].push(j);
        }
        let mut rows = vec![Vec::new(); nodes.len()];
        let mut link_rows = Vec::new();
        let mut link_labels = Vec::new();
        for (r, &origin) in sys.row_origin.iter().enumerate() {
            match source(origin) {
                Some((RowSource::Link(l), _)) => {
                    link_rows.push(r);
                    link_labels.push(model.link_label(l));
                }
                Some((RowSource::Node(c), _)) => rows[block_of[&c.node]].push(r),
                None => {
                    let RowOrigin::Fix(j) = origin else { unreachable!() };
                    rows[col_block[j]].push(r);
                }
            }
        }
        if link_rows.len() > MAX_SCHUR_DIM {
            return Err(SchurError::TooLarge { dim: link_rows.len(), limit: MAX_SCHUR_DIM });
        }
        let mut coupling = vec![Vec::new(); nodes.len()];
        for (p, &r) in link_rows.iter().enumerate() {
            for (c, v) in sys.rows[r].iter() {
                coupling[col_block[c]].push((local[c], p, v.as_f64()));
            }
        }
        for &(i, j, _) in &sys.hess {
            if col_block[i] != col_block[j] {
                return Err(SchurError::Structure("objective couples variables of different nodes".into()));
            }
        }
        for (b, rs) in rows.iter().enumerate() {
            for &r in rs {
                if let Some(c) = sys.rows[r].cols.iter().find(|&&c| col_block[c] != b) {
                    return Err(SchurError::Structure(format!(
                        "row {r} of node `{}` references column {c} of another node",
                        model.node(nodes[b]).name
                    )));
                }
            }
        }
        Ok(Self { nodes, cols, rows, link_rows, link_labels, coupling })
    }

    pub fn link_count(&self) -> usize {
        self.link_rows.len()
    }

    /// Block dimension (columns plus rows).
    pub fn block_dim(&self, b: usize) -> usize {
        self.cols[b].len() + self.rows[b].len()
    }
}

/// Factor of one node block.
#[derive(Debug, Clone)]
pub(crate) enum BlockFactor<T> {
    Dense(BunchKaufman<T>),
    Sparse(SparseLdl<T>),
}

impl<T: Scalar> BlockFactor<T> {
    fn solve(&self, rhs: &mut [T]) {
        match self {
            BlockFactor::Dense(f) => {
                let x = f.solve(rhs);
                rhs.copy_from_slice(&x);
            }
            BlockFactor::Sparse(f) => f.solve_in_place(rhs),
        }
    }
}

/// Border entries of one block in scalar form: `(local index, link, value)`.
pub(crate) type Coupling<T> = Vec<(usize, usize, T)>;

fn links_of<T>(c: &Coupling<T>) -> Vec<usize> {
    let mut links: Vec<usize> = c.iter().map(|e| e.1).collect();
    links.sort_unstable();
    links.dedup();
    links
}

/// `S = -Σ B_nᵀ K_n⁻¹ B_n`, reduced in block order.
pub(crate) fn schur_matrix<T: Scalar>(
    factors: &[BlockFactor<T>],
    dims: &[usize],
    coupling: &[Coupling<T>],
    link_count: usize,
) -> DenseMatrix<T> {
    let contributions: Vec<(Vec<usize>, Vec<T>)> = (0..factors.len())
        .into_par_iter()
        .map(|b| {
            let links = links_of(&coupling[b]);
            let pos: HashMap<usize, usize> = links.iter().enumerate().map(|(i, l)| (*l, i)).collect();
            let m = links.len();
            let mut cols = vec![vec![T::zero(); dims[b]]; m];
            for &(loc, l, v) in &coupling[b] {
                cols[pos[&l]][loc] += v;
            }
            let bcols = cols.clone();
            for c in &mut cols {
                factors[b].solve(c);
            }
            let mut dense = vec![T::zero(); m * m];
            for i in 0..m {
                for j in 0..m {
                    dense[i * m + j] = bcols[i].iter().zip(&cols[j]).fold(T::zero(), |a, (p, q)| a + *p * *q);
                }
            }
            (links, dense)
        })
        .collect();
    let mut s = DenseMatrix::zeros(link_count);
    for (links, dense) in &contributions {
        let m = links.len();
        for i in 0..m {
            for j in 0..m {
                s.add(links[i], links[j], -dense[i * m + j]);
            }
        }
    }
    let half = T::lit(0.5);
    for i in 0..link_count {
        for j in 0..i {
            let v = half * (s.get(i, j) + s.get(j, i));
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    s
}

/// Solves the bordered system for right-hand sides `a` (per block) and `b`
/// (border), given block factors and the factor of `S`.
pub(crate) fn bordered_solve<T: Scalar>(
    factors: &[BlockFactor<T>],
    coupling: &[Coupling<T>],
    s: Option<&BunchKaufman<T>>,
    a: &[Vec<T>],
    b: &[T],
) -> (Vec<Vec<T>>, Vec<T>) {
    let t: Vec<Vec<T>> = (0..factors.len())
        .into_par_iter()
        .map(|k| {
            let mut v = a[k].clone();
            factors[k].solve(&mut v);
            v
        })
        .collect();
    let mut rhs = b.to_vec();
    for (k, tk) in t.iter().enumerate() {
        for &(loc, l, v) in &coupling[k] {
            rhs[l] -= v * tk[loc];
        }
    }
    let lambda = match s {
        Some(f) if !rhs.is_empty() => f.solve(&rhs),
        _ => rhs,
    };
    let w = (0..factors.len())
        .into_par_iter()
        .map(|k| {
            let mut v = a[k].clone();
            for &(loc, l, c) in &coupling[k] {
                v[loc] -= c * lambda[l];
            }
            factors[k].solve(&mut v);
            v
        })
        .collect();
    (w, lambda)
}

/// Factors `S`, rejecting singular pivots as redundant links.
pub(crate) fn factor_schur<T: Scalar>(s: DenseMatrix<T>) -> Result<BunchKaufman<T>, usize> {
    let tol = T::epsilon() * T::lit(1e3) * T::one().max(s.max_abs());
    BunchKaufman::factor(s, tol).map_err(|e| e.index)
}

/// One node block of the bordered Newton matrix, in local order
/// `(columns, rows)`.
#[derive(Debug, Clone)]
pub struct NodeBlock<T> {
    pub node: NodeId,
    /// `[[W_n, J_nᵀ], [J_n, 0]]` with `W_n` including the barrier weights.
    pub k: DenseMatrix<T>,
    /// Border entries `(local index, link, value)`.
    pub b: Vec<(usize, usize, T)>,
    pub r: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct KktBlocks<T> {
    pub nodes: Vec<NodeBlock<T>>,
    pub r_link: Vec<T>,
    pub link_count: usize,
    /// Label of each link row.
    pub link_labels: Vec<String>,
}

/// A primal-dual point for [`assemble_blocks`]: flat variable values, row
/// multipliers in flat order, and barrier weights per variable and per
/// inequality slack (zero if `None`).
#[derive(Debug, Clone)]
pub struct KktPoint<T> {
    pub x: Vec<T>,
    pub y_eq: Vec<T>,
    pub y_in: Vec<T>,
    pub sigma: Option<Vec<T>>,
}

/// Splits the Newton matrix at `point` into node blocks and the border.
/// Residuals are `r = (Hw + c + Rᵀy, Rw - b)`; slacks are set to the row
/// activities.
pub fn assemble_blocks<T: Scalar>(model: &Model<T>, g: GraphId, point: &KktPoint<T>) -> Result<KktBlocks<T>, SchurError> {
    let qp = flatten(model, g)?;
    let sys = Standard::from_flat(&qp);
    if point.x.len() != qp.num_vars() || point.y_eq.len() != qp.num_eq() || point.y_in.len() != qp.num_in() {
        return Err(SchurError::Dimension("point does not match the flattened problem".into()));
    }
    let layout = Layout::new(model, g, &qp, &sys)?;
    let sigma = point.sigma.clone().unwrap_or_else(|| vec![T::zero(); sys.n()]);
    if sigma.len() != sys.n() {
        return Err(SchurError::Dimension(format!("sigma needs {} entries", sys.n())));
    }
    let mut w = point.x.clone();
    w.extend(qp.a_in.iter().map(|r| r.dot(&point.x)));
    let mut y = vec![T::zero(); sys.m()];
    for (r, o) in sys.row_origin.iter().enumerate() {
        y[r] = match *o {
            RowOrigin::Eq(i) => point.y_eq[i],
            RowOrigin::In(i) => point.y_in[i],
            RowOrigin::Fix(_) => T::zero(),
        };
    }
    let mut rd = sys.hess_mul(&w);
    for j in 0..sys.n() {
        rd[j] += sys.c[j];
    }
    sys.row_tmul_into(&y, &mut rd);
    let rp: Vec<T> = sys.row_mul(&w).iter().zip(&sys.b).map(|(a, b)| *a - *b).collect();

    let mut nodes = Vec::with_capacity(layout.nodes.len());
    for b in 0..layout.nodes.len() {
        let (cols, rows) = (&layout.cols[b], &layout.rows[b]);
        let dim = cols.len() + rows.len();
        let col_pos: HashMap<usize, usize> = cols.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut k = DenseMatrix::zeros(dim);
        for (i, &c) in cols.iter().enumerate() {
            k.add(i, i, sigma[c]);
        }
        for &(i, j, h) in &sys.hess {
            if let (Some(&a), Some(&bb)) = (col_pos.get(&i), col_pos.get(&j)) {
                k.add(a, bb, h);
                if a != bb {
                    k.add(bb, a, h);
                }
            }
        }
        for (ri, &r) in rows.iter().enumerate() {
            for (c, v) in sys.rows[r].iter() {
                let a = col_pos[&c];
                k.add(cols.len() + ri, a, v);
                k.add(a, cols.len() + ri, v);
            }
        }
        let r: Vec<T> = cols.iter().map(|&c| rd[c]).chain(rows.iter().map(|&r| rp[r])).collect();
        let bentries = layout.coupling[b].iter().map(|&(loc, l, v)| (loc, l, T::lit(v))).collect();
        nodes.push(NodeBlock { node: layout.nodes[b], k, b: bentries, r });
    }
    let r_link = layout.link_rows.iter().map(|&r| rp[r]).collect();
    Ok(KktBlocks { nodes, r_link, link_count: layout.link_count(), link_labels: layout.link_labels })
}

/// Result of [`schur_solve`].
#[derive(Debug, Clone)]
pub struct SchurStep<T> {
    /// Primal and row-dual step of each block, in block-local order.
    pub dw: Vec<Vec<T>>,
    pub dlambda: Vec<T>,
    /// `S = -Σ B_nᵀ K_n⁻¹ B_n`.
    pub schur: DenseMatrix<T>,
    /// Infinity norm of the bordered system residual, by multiplying back.
    pub residual: T,
}

/// Solves `K_n Δw_n + B_n Δλ = -r_n`, `Σ B_nᵀ Δw_n = -r_ℰ` by the Schur
/// complement with dense block factorizations.
pub fn schur_solve<T: Scalar>(blocks: &KktBlocks<T>) -> Result<SchurStep<T>, SchurError> {
    let tol = T::epsilon() * T::lit(1e3);
    let mut factors = Vec::with_capacity(blocks.nodes.len());
    for nb in &blocks.nodes {
        let scale = T::one().max(nb.k.max_abs());
        let f = BunchKaufman::factor(nb.k.clone(), tol * scale)
            .map_err(|_| SchurError::NodeFactor { node: format!("#{}", nb.node.index()) })?;
        factors.push(BlockFactor::Dense(f));
    }
    let dims: Vec<usize> = blocks.nodes.iter().map(|nb| nb.k.dim()).collect();
    let coupling: Vec<Coupling<T>> = blocks.nodes.iter().map(|nb| nb.b.clone()).collect();
    let s = schur_matrix(&factors, &dims, &coupling, blocks.link_count);
    let sf = if blocks.link_count > 0 {
        Some(factor_schur(s.clone()).map_err(|i| SchurError::Rank { link: blocks.link_labels[i].clone() })?)
    } else {
        None
    };
    let a: Vec<Vec<T>> = blocks.nodes.iter().map(|nb| nb.r.iter().map(|v| -*v).collect()).collect();
    let bb: Vec<T> = blocks.r_link.iter().map(|v| -*v).collect();
    let (dw, dlambda) = bordered_solve(&factors, &coupling, sf.as_ref(), &a, &bb);

    let mut residual = T::zero();
    let mut border = bb.clone();
    for (k, nb) in blocks.nodes.iter().enumerate() {
        let mut e = nb.k.mul_vec(&dw[k]);
        for &(loc, l, v) in &nb.b {
            e[loc] += v * dlambda[l];
            border[l] -= v * dw[k][loc];
        }
        for (ei, ai) in e.iter().zip(&a[k]) {
            residual = residual.max((*ei - *ai).abs());
        }
    }
    residual = residual.max(norm_inf(&border));
    Ok(SchurStep { dw, dlambda, schur: s, residual })
}

/// Result of [`solve_structured`].
#[derive(Debug, Clone)]
pub struct StructuredSolution<T> {
    pub solution: Solution<T>,
    pub history: Vec<IterationRecord>,
    /// One entry per Newton-matrix factorization.
    pub trace: Vec<SchurIteration>,
    pub schur_dim: usize,
}

/// Interior-point solve of `g` with every Newton step computed by the Schur
/// decomposition over the top-level nodes of `g`.
pub fn solve_structured<T: Scalar>(
    model: &Model<T>,
    g: GraphId,
    opts: &SolverOptions<T>,
) -> Result<StructuredSolution<T>, SchurError> {
    let qp = flatten(model, g)?;
    let sys = Standard::from_flat(&qp);
    let layout = Layout::new(model, g, &qp, &sys)?;
    let schur_dim = layout.link_count();
    assert_eq!(schur_dim, model.all_links(g).len(), "Schur dimension must equal the link count");
    let mut backend = SchurBackend::new(&sys, layout);
    let out = interior_point(&sys, opts, &mut backend);
    if let Some(link) = backend.rank_failure() {
        return Err(SchurError::Rank { link });
    }
    let qsol = QpSolution::from_ipm(&qp, &sys, out);
    Ok(StructuredSolution {
        solution: Solution::from_flat(&qp, &qsol),
        history: qsol.history,
        trace: backend.into_trace(),
        schur_dim,
    })
}
