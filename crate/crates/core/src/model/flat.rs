use std::collections::{BTreeMap, HashMap};

use super::{ConRef, GraphId, LinkRef, Model, ModelError, QuadExpr, Sense, VarRef};
use crate::linalg::{is_positive_semidefinite, DenseMatrix};
use crate::scalar::Scalar;

/// Sparse row with strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow<T> {
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Scalar> SparseRow<T> {
    pub fn from_map(map: BTreeMap<usize, T>) -> Self {
        let (cols, vals) = map.into_iter().filter(|(_, v)| *v != T::zero()).unzip();
        Self { cols, vals }
    }

    pub fn dot(&self, x: &[T]) -> T {
        self.cols.iter().zip(&self.vals).fold(T::zero(), |a, (&c, &v)| a + v * x[c])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.cols.iter().copied().zip(self.vals.iter().copied())
    }
}

/// Where a flattened row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowSource {
    Node(ConRef),
    Link(LinkRef),
}

/// Standard-form convex QP
/// `min ½xᵀHx + cᵀx + constant` s.t. `A_eq x = b_eq`, `in_lower ≤ A_in x ≤ in_upper`, `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatQp<T> {
    /// Upper triangle of `H` as `(row ≤ col, value)`, sorted.
    pub hessian: Vec<(usize, usize, T)>,
    pub c: Vec<T>,
    pub constant: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub start: Vec<T>,
    pub a_eq: Vec<SparseRow<T>>,
    pub b_eq: Vec<T>,
    pub a_in: Vec<SparseRow<T>>,
    pub in_lower: Vec<T>,
    pub in_upper: Vec<T>,
    pub var_map: Vec<VarRef>,
    pub eq_rows: Vec<RowSource>,
    pub in_rows: Vec<RowSource>,
}

impl<T: Scalar> FlatQp<T> {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_eq(&self) -> usize {
        self.a_eq.len()
    }

    pub fn num_in(&self) -> usize {
        self.a_in.len()
    }

    pub fn var_lookup(&self) -> HashMap<VarRef, usize> {
        self.var_map.iter().enumerate().map(|(i, v)| (*v, i)).collect()
    }

    pub fn objective(&self, x: &[T]) -> T {
        let half = T::lit(0.5);
        let mut acc = self.constant + self.c.iter().zip(x).fold(T::zero(), |a, (c, v)| a + *c * *v);
        for &(i, j, h) in &self.hessian {
            if i == j {
                acc += half * h * x[i] * x[i];
            } else {
                acc += h * x[i] * x[j];
            }
        }
        acc
    }

    /// `Hx`.
    pub fn hessian_mul(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); x.len()];
        for &(i, j, h) in &self.hessian {
            y[i] += h * x[j];
            if i != j {
                y[j] += h * x[i];
            }
        }
        y
    }
}

/// Incremental construction of a [`FlatQp`].
#[derive(Debug, Clone)]
pub struct FlatQpBuilder<T> {
    qp: FlatQp<T>,
    index: HashMap<VarRef, usize>,
    hess: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> Default for FlatQpBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> FlatQpBuilder<T> {
    pub fn new() -> Self {
        Self {
            qp: FlatQp {
                hessian: Vec::new(),
                c: Vec::new(),
                constant: T::zero(),
                lower: Vec::new(),
                upper: Vec::new(),
                start: Vec::new(),
                a_eq: Vec::new(),
                b_eq: Vec::new(),
                a_in: Vec::new(),
                in_lower: Vec::new(),
                in_upper: Vec::new(),
                var_map: Vec::new(),
                eq_rows: Vec::new(),
                in_rows: Vec::new(),
            },
            index: HashMap::new(),
            hess: BTreeMap::new(),
        }
    }

    pub fn add_var(&mut self, v: VarRef, lower: T, upper: T, start: T) -> usize {
        let k = self.qp.c.len();
        self.qp.c.push(T::zero());
        self.qp.lower.push(lower);
        self.qp.upper.push(upper);
        self.qp.start.push(start);
        self.qp.var_map.push(v);
        self.index.insert(v, k);
        k
    }

    pub fn index_of(&self, v: VarRef) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn add_constant(&mut self, c: T) {
        self.qp.constant += c;
    }

    pub fn add_linear(&mut self, col: usize, c: T) {
        self.qp.c[col] += c;
    }

    /// Adds the expression to the objective. All its variables must be registered.
    pub fn add_objective(&mut self, e: &QuadExpr<T>) -> Result<(), ModelError> {
        self.qp.constant += e.constant;
        for (&v, &c) in &e.linear {
            let i = self.col(v)?;
            self.qp.c[i] += c;
        }
        for (&(a, b), &c) in &e.quadratic {
            let (i, j) = (self.col(a)?, self.col(b)?);
            let key = (i.min(j), i.max(j));
            let h = if i == j { T::lit(2.0) * c } else { c };
            *self.hess.entry(key).or_insert_with(T::zero) += h;
        }
        Ok(())
    }

    fn col(&self, v: VarRef) -> Result<usize, ModelError> {
        self.index_of(v).ok_or_else(|| ModelError::Integrity(format!("variable {v:?} is not part of the flattened problem")))
    }

    /// Adds `Σ terms (sense) rhs`; terms may include fixed contributions folded
    /// into `rhs` by the caller.
    pub fn add_row(&mut self, terms: BTreeMap<usize, T>, sense: Sense, rhs: T, source: RowSource) {
        let row = SparseRow::from_map(terms);
        match sense {
            Sense::Eq => {
                self.qp.a_eq.push(row);
                self.qp.b_eq.push(rhs);
                self.qp.eq_rows.push(source);
            }
            _ => {
                let (lo, up) = sense.bounds(rhs);
                self.qp.a_in.push(row);
                self.qp.in_lower.push(lo);
                self.qp.in_upper.push(up);
                self.qp.in_rows.push(source);
            }
        }
    }

    /// Maps model terms to columns.
    pub fn row_terms(&self, terms: &BTreeMap<VarRef, T>) -> Result<BTreeMap<usize, T>, ModelError> {
        let mut out = BTreeMap::new();
        for (&v, &c) in terms {
            *out.entry(self.col(v)?).or_insert_with(T::zero) += c;
        }
        Ok(out)
    }

    pub fn finish(mut self) -> FlatQp<T> {
        self.qp.hessian = self.hess.into_iter().filter(|(_, v)| *v != T::zero()).map(|((i, j), v)| (i, j, v)).collect();
        self.qp
    }
}

const CONVEXITY_TOL: f64 = 1e-10;

/// Checks that a node objective is convex.
pub(crate) fn check_convex<T: Scalar>(e: &QuadExpr<T>) -> bool {
    if e.quadratic.is_empty() {
        return true;
    }
    let vars: Vec<VarRef> = e.variables().into_iter().collect();
    let pos: HashMap<VarRef, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut m = DenseMatrix::zeros(vars.len());
    for (&(a, b), &c) in &e.quadratic {
        let (i, j) = (pos[&a], pos[&b]);
        if i == j {
            m.add(i, i, T::lit(2.0) * c);
        } else {
            m.add(i, j, c);
            m.add(j, i, c);
        }
    }
    is_positive_semidefinite(&m, T::lit(CONVEXITY_TOL))
}

/// Flattens the graph into one standard-form QP.
///
/// Columns follow the recursive node order, then each node's variable order.
/// Rows list node constraints (recursive node order) before link constraints
/// (subgraph links before the parent's own links).
pub fn flatten<T: Scalar>(model: &Model<T>, g: GraphId) -> Result<FlatQp<T>, ModelError> {
    let nodes = model.all_nodes(g);
    let mut b = FlatQpBuilder::new();
    for &n in &nodes {
        for (index, var) in model.node(n).variables.iter().enumerate() {
            b.add_var(VarRef { node: n, index }, var.lower, var.upper, var.start);
        }
    }
    for &n in &nodes {
        let node = model.node(n);
        if !check_convex(&node.objective) {
            return Err(ModelError::Convexity(node.name.clone()));
        }
        b.add_objective(&node.objective)?;
    }
    for &n in &nodes {
        for (index, con) in model.node(n).constraints.iter().enumerate() {
            let terms = b.row_terms(&con.terms)?;
            b.add_row(terms, con.sense, con.rhs, RowSource::Node(ConRef { node: n, index }));
        }
    }
    for link in model.all_links(g) {
        let con = model.link(link);
        let terms = b.row_terms(&con.terms).map_err(|_| {
            ModelError::Integrity(format!("link on edge {} references a node outside the graph", link.edge.0))
        })?;
        b.add_row(terms, con.sense, con.rhs, RowSource::Link(link));
    }
    Ok(b.finish())
}
