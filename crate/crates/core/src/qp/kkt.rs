//! Linear-algebra backends for the interior-point Newton systems
//! `[[H + diag(σ), Rᵀ], [R, 0]] (Δw, Δy) = (r_w, r_y)`.

use super::standard::Standard;
use crate::linalg::SparseLdl;
use crate::scalar::{norm_inf, Scalar};

const MAX_REFINE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum KktFailure {
    /// Retry with a larger primal regularization.
    Singular,
    /// Abort the solve.
    Fatal(String),
}

pub(crate) trait KktBackend<T: Scalar> {
    fn factor(&mut self, sys: &Standard<T>, sigma: &[T]) -> Result<(), KktFailure>;
    fn solve(&mut self, sys: &Standard<T>, sigma: &[T], rw: &[T], ry: &[T]) -> (Vec<T>, Vec<T>);
}

/// Dual-block regularization used inside factorizations; removed again by refinement.
pub(crate) fn dual_regularization<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon().sqrt() * T::lit(1e-2))
}

/// Residual `(rw, ry) - K (dw, dy)` and its infinity norm.
pub(crate) fn kkt_residual<T: Scalar>(
    sys: &Standard<T>,
    sigma: &[T],
    rw: &[T],
    ry: &[T],
    dw: &[T],
    dy: &[T],
) -> (Vec<T>, Vec<T>, T) {
    let (kw, ky) = sys.kkt_mul(sigma, dw, dy);
    let ew: Vec<T> = rw.iter().zip(&kw).map(|(a, b)| *a - *b).collect();
    let ey: Vec<T> = ry.iter().zip(&ky).map(|(a, b)| *a - *b).collect();
    let norm = norm_inf(&ew).max(norm_inf(&ey));
    (ew, ey, norm)
}

/// Iterative refinement of an approximate solver against the exact matrix.
/// Returns the refined step and the final residual norm.
pub(crate) fn refine<T: Scalar>(
    sys: &Standard<T>,
    sigma: &[T],
    rw: &[T],
    ry: &[T],
    mut inner: impl FnMut(&[T], &[T]) -> (Vec<T>, Vec<T>),
) -> (Vec<T>, Vec<T>, T) {
    let target = T::epsilon() * T::lit(10.0) * (T::one() + norm_inf(rw).max(norm_inf(ry)));
    let (mut dw, mut dy) = inner(rw, ry);
    let (mut ew, mut ey, mut res) = kkt_residual(sys, sigma, rw, ry, &dw, &dy);
    for _ in 0..MAX_REFINE {
        if res <= target || !res.is_finite() {
            break;
        }
        let (cw, cy) = inner(&ew, &ey);
        let nw: Vec<T> = dw.iter().zip(&cw).map(|(a, b)| *a + *b).collect();
        let ny: Vec<T> = dy.iter().zip(&cy).map(|(a, b)| *a + *b).collect();
        let (new_ew, new_ey, new_res) = kkt_residual(sys, sigma, rw, ry, &nw, &ny);
        if !(new_res < res) {
            break;
        }
        (dw, dy, ew, ey, res) = (nw, ny, new_ew, new_ey, new_res);
    }
    (dw, dy, res)
}

/// Whole-system sparse LDLᵀ with a quasi-definite dual regularization.
#[derive(Debug, Clone)]
pub(crate) struct SparseBackend<T> {
    ldl: SparseLdl<T>,
    values: Vec<T>,
    n: usize,
    m: usize,
}

impl<T: Scalar> SparseBackend<T> {
    pub fn new(sys: &Standard<T>) -> Self {
        let n = sys.n();
        let m = sys.m();
        let mut pattern = Vec::new();
        let mut values = Vec::new();
        for &(i, j, h) in &sys.hess {
            pattern.push((i, j));
            values.push(h);
        }
        for (r, row) in sys.rows.iter().enumerate() {
            for (c, v) in row.iter() {
                pattern.push((c, n + r));
                values.push(v);
            }
        }
        Self { ldl: SparseLdl::analyze(n + m, &pattern), values, n, m }
    }
}

impl<T: Scalar> KktBackend<T> for SparseBackend<T> {
    fn factor(&mut self, _sys: &Standard<T>, sigma: &[T]) -> Result<(), KktFailure> {
        let mut diag = sigma.to_vec();
        diag.resize(self.n + self.m, -dual_regularization::<T>());
        match self.ldl.factor(&self.values, &diag) {
            Ok((pos, neg)) if pos == self.n && neg == self.m => Ok(()),
            _ => Err(KktFailure::Singular),
        }
    }

    fn solve(&mut self, sys: &Standard<T>, sigma: &[T], rw: &[T], ry: &[T]) -> (Vec<T>, Vec<T>) {
        let n = self.n;
        let ldl = &self.ldl;
        let (dw, dy, _) = refine(sys, sigma, rw, ry, |a, b| {
            let mut v = a.to_vec();
            v.extend_from_slice(b);
            ldl.solve_in_place(&mut v);
            let y = v.split_off(n);
            (v, y)
        });
        (dw, dy)
    }
}
