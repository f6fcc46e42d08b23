use crate::model::{FlatQp, SparseRow};
use crate::scalar::Scalar;

/// Origin of a row of the standard-form system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowOrigin {
    Eq(usize),
    /// `a_in[i] x - s_i = 0`.
    In(usize),
    /// `w_col = value` for a column with equal bounds.
    Fix(usize),
}

/// `min ½wᵀHw + cᵀw` s.t. `R w = b`, `lower ≤ w ≤ upper`, where
/// `w = (x, s)` appends one slack per inequality row.
#[derive(Debug, Clone)]
pub(crate) struct Standard<T> {
    pub n_x: usize,
    pub hess: Vec<(usize, usize, T)>,
    pub c: Vec<T>,
    pub rows: Vec<SparseRow<T>>,
    pub b: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub start: Vec<T>,
    pub row_origin: Vec<RowOrigin>,
}

impl<T: Scalar> Standard<T> {
    pub fn from_flat(qp: &FlatQp<T>) -> Self {
        let n_x = qp.num_vars();
        let n = n_x + qp.num_in();
        let mut c = qp.c.clone();
        c.resize(n, T::zero());
        let mut lower = qp.lower.clone();
        lower.extend_from_slice(&qp.in_lower);
        let mut upper = qp.upper.clone();
        upper.extend_from_slice(&qp.in_upper);
        let mut start = qp.start.clone();
        start.extend(qp.a_in.iter().map(|r| r.dot(&qp.start)));

        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut row_origin = Vec::new();
        for (i, r) in qp.a_eq.iter().enumerate() {
            rows.push(r.clone());
            b.push(qp.b_eq[i]);
            row_origin.push(RowOrigin::Eq(i));
        }
        for (i, r) in qp.a_in.iter().enumerate() {
            let mut row = r.clone();
            row.cols.push(n_x + i);
            row.vals.push(-T::one());
            rows.push(row);
            b.push(T::zero());
            row_origin.push(RowOrigin::In(i));
        }
        for j in 0..n {
            if lower[j] == upper[j] {
                rows.push(SparseRow { cols: vec![j], vals: vec![T::one()] });
                b.push(lower[j]);
                row_origin.push(RowOrigin::Fix(j));
                start[j] = lower[j];
                lower[j] = T::neg_infinity();
                upper[j] = T::infinity();
            }
        }
        Self { n_x, hess: qp.hessian.clone(), c, rows, b, lower, upper, start, row_origin }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn hess_mul(&self, w: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); w.len()];
        for &(i, j, h) in &self.hess {
            y[i] += h * w[j];
            if i != j {
                y[j] += h * w[i];
            }
        }
        y
    }

    pub fn row_mul(&self, w: &[T]) -> Vec<T> {
        self.rows.iter().map(|r| r.dot(w)).collect()
    }

    /// `Rᵀ y` accumulated into `out`.
    pub fn row_tmul_into(&self, y: &[T], out: &mut [T]) {
        for (r, &yi) in self.rows.iter().zip(y) {
            for (c, v) in r.iter() {
                out[c] += v * yi;
            }
        }
    }

    /// `[[H + diag(sigma), Rᵀ], [R, 0]] (dw, dy)`.
    pub fn kkt_mul(&self, sigma: &[T], dw: &[T], dy: &[T]) -> (Vec<T>, Vec<T>) {
        let mut top = self.hess_mul(dw);
        for (t, (s, d)) in top.iter_mut().zip(sigma.iter().zip(dw)) {
            *t += *s * *d;
        }
        self.row_tmul_into(dy, &mut top);
        (top, self.row_mul(dw))
    }
}
