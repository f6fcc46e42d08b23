//! Sparse primal-dual interior-point solver for convex QPs.
//!
//! Multipliers follow `∇f + Aᵀy - z = 0`: equality multipliers are free,
//! multipliers of `≤` rows are nonnegative and those of `≥` rows are
//! nonpositive. Bound multipliers `z` are positive at an active lower bound
//! and negative at an active upper bound.

mod ipm;
pub(crate) mod kkt;
pub(crate) mod standard;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{flatten, ConRef, FlatQp, GraphId, LinkRef, Model, ModelError, RowSource, VarRef};
use crate::scalar::{norm_inf, Scalar};

pub(crate) use ipm::{interior_point, IpmOutput};
pub(crate) use kkt::{KktBackend, KktFailure, SparseBackend};
pub(crate) use standard::{RowOrigin, Standard};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Initial primal regularization of the Newton matrix.
    pub regularization: T,
    pub fraction_to_boundary: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::default_tolerance(),
            max_iter: 200,
            regularization: T::lit(1e-8),
            fraction_to_boundary: T::lit(0.995),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalError,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::IterationLimit => "iteration_limit",
            Status::NumericalError => "numerical_error",
        })
    }
}

/// Residual norms at the start of one interior-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub mu: f64,
    pub r_dual: f64,
    pub r_primal: f64,
    /// Step length taken from this iterate (0 at the final one).
    pub step: f64,
}

/// Result in flat indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T> {
    pub x: Vec<T>,
    pub y_eq: Vec<T>,
    pub y_in: Vec<T>,
    /// Bound multipliers per variable.
    pub z: Vec<T>,
    pub objective: T,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub message: Option<String>,
}

impl<T: Scalar> QpSolution<T> {
    pub(crate) fn from_ipm(qp: &FlatQp<T>, sys: &Standard<T>, out: IpmOutput<T>) -> Self {
        let x = out.w[..sys.n_x].to_vec();
        let mut y_eq = vec![T::zero(); qp.num_eq()];
        let mut y_in = vec![T::zero(); qp.num_in()];
        let mut z = out.z[..sys.n_x].to_vec();
        for (r, origin) in sys.row_origin.iter().enumerate() {
            match *origin {
                RowOrigin::Eq(i) => y_eq[i] = out.y[r],
                RowOrigin::In(i) => y_in[i] = out.y[r],
                RowOrigin::Fix(j) if j < sys.n_x => z[j] = -out.y[r],
                RowOrigin::Fix(_) => {}
            }
        }
        Self {
            objective: qp.objective(&x),
            x,
            y_eq,
            y_in,
            z,
            status: out.status,
            iterations: out.iterations,
            history: out.history,
            message: out.message,
        }
    }
}

/// Solves a flattened QP with the whole-system sparse factorization.
pub fn solve_qp<T: Scalar>(qp: &FlatQp<T>, opts: &SolverOptions<T>) -> QpSolution<T> {
    let sys = Standard::from_flat(qp);
    let mut backend = SparseBackend::new(&sys);
    let out = interior_point(&sys, opts, &mut backend);
    QpSolution::from_ipm(qp, &sys, out)
}

/// Result keyed by model references.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub primal: BTreeMap<VarRef, T>,
    pub duals_node: BTreeMap<ConRef, T>,
    pub duals_link: BTreeMap<LinkRef, T>,
    pub objective: T,
    pub status: Status,
    pub iterations: usize,
    pub message: Option<String>,
}

impl<T: Scalar> Solution<T> {
    pub fn from_flat(qp: &FlatQp<T>, sol: &QpSolution<T>) -> Self {
        let primal = qp.var_map.iter().copied().zip(sol.x.iter().copied()).collect();
        let mut duals_node = BTreeMap::new();
        let mut duals_link = BTreeMap::new();
        let rows = qp.eq_rows.iter().zip(&sol.y_eq).chain(qp.in_rows.iter().zip(&sol.y_in));
        for (src, &y) in rows {
            match *src {
                RowSource::Node(c) => duals_node.insert(c, y),
                RowSource::Link(l) => duals_link.insert(l, y),
            };
        }
        Self {
            primal,
            duals_node,
            duals_link,
            objective: sol.objective,
            status: sol.status,
            iterations: sol.iterations,
            message: sol.message.clone(),
        }
    }

    pub fn value(&self, v: VarRef) -> T {
        self.primal[&v]
    }

    /// Primal vector in the column order of `qp`.
    pub fn primal_vector(&self, qp: &FlatQp<T>) -> Vec<T> {
        qp.var_map.iter().map(|v| self.primal.get(v).copied().unwrap_or_else(T::nan)).collect()
    }
}

/// Flattens `g` and solves it as one QP.
pub fn solve_monolithic<T: Scalar>(model: &Model<T>, g: GraphId, opts: &SolverOptions<T>) -> Result<Solution<T>, ModelError> {
    let qp = flatten(model, g)?;
    Ok(Solution::from_flat(&qp, &solve_qp(&qp, opts)))
}

/// Infinity norms of the optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T> {
    pub stationarity: T,
    pub primal_feasibility: T,
    pub complementarity: T,
}

impl<T: Scalar> KktResiduals<T> {
    pub fn max(&self) -> T {
        self.stationarity.max(self.primal_feasibility).max(self.complementarity)
    }
}

/// Complementarity of a two-sided constraint `lo ≤ v ≤ up` with multiplier
/// `m` (positive pushes from below). A multiplier on an infinite side counts
/// in full.
fn complementarity<T: Scalar>(v: T, lo: T, up: T, m: T) -> T {
    if m > T::zero() {
        if lo.is_finite() {
            m * (v - lo).abs()
        } else {
            m
        }
    } else if m < T::zero() {
        if up.is_finite() {
            -m * (up - v).abs()
        } else {
            -m
        }
    } else {
        T::zero()
    }
}

/// Evaluates stationarity `Hx + c + A_eqᵀy_eq + A_inᵀy_in - z`, primal
/// infeasibility of rows and bounds, and complementarity.
pub fn kkt_residuals<T: Scalar>(qp: &FlatQp<T>, x: &[T], y_eq: &[T], y_in: &[T], z: &[T]) -> KktResiduals<T> {
    let mut st = qp.hessian_mul(x);
    for j in 0..st.len() {
        st[j] += qp.c[j] - z[j];
    }
    for (row, &y) in qp.a_eq.iter().zip(y_eq).chain(qp.a_in.iter().zip(y_in)) {
        for (c, v) in row.iter() {
            st[c] += v * y;
        }
    }
    let mut pf = T::zero();
    for (row, &b) in qp.a_eq.iter().zip(&qp.b_eq) {
        pf = pf.max((row.dot(x) - b).abs());
    }
    let mut cp = T::zero();
    for (i, row) in qp.a_in.iter().enumerate() {
        let a = row.dot(x);
        pf = pf.max(qp.in_lower[i] - a).max(a - qp.in_upper[i]);
        // a row multiplier y ≤ 0 pushes from below
        cp = cp.max(complementarity(a, qp.in_lower[i], qp.in_upper[i], -y_in[i]));
    }
    for j in 0..x.len() {
        pf = pf.max(qp.lower[j] - x[j]).max(x[j] - qp.upper[j]);
        cp = cp.max(complementarity(x[j], qp.lower[j], qp.upper[j], z[j]));
    }
    KktResiduals { stationarity: norm_inf(&st), primal_feasibility: pf, complementarity: cp }
}
