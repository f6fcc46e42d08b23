//! Dense symmetric factorizations: Bunch–Kaufman LDLᵀ for indefinite systems
//! and a diagonally pivoted semidefiniteness test.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_row_major(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n, "dimension mismatch");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).fold(T::zero(), |a, (m, v)| a + *m * *v))
            .collect()
    }

    fn swap_sym(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.n;
        for j in 0..n {
            self.data.swap(a * n + j, b * n + j);
        }
        for i in 0..n {
            self.data.swap(i * n + a, i * n + b);
        }
    }
}

/// Symmetric indefinite factorization `P A Pᵀ = L D Lᵀ` with 1×1 and 2×2 pivots.
#[derive(Debug, Clone)]
pub struct BunchKaufman<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    blocks: Vec<(usize, usize)>,
}

/// The factorization met a column with no usable pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot {
    /// Index (in the caller's ordering) of the offending row.
    pub index: usize,
}

impl<T: Scalar> BunchKaufman<T> {
    /// Factors a symmetric matrix (only the lower triangle is read). Columns whose
    /// largest candidate pivot is at most `pivot_tol` are reported as singular.
    pub fn factor(mut a: DenseMatrix<T>, pivot_tol: T) -> Result<Self, SingularPivot> {
        let n = a.n;
        for i in 0..n {
            for j in i + 1..n {
                let v = a.get(j, i);
                a.set(i, j, v);
            }
        }
        let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::new();
        let mut k = 0;
        while k < n {
            let absakk = a.get(k, k).abs();
            let (imax, colmax) = (k + 1..n).fold((k, T::zero()), |(bi, bv), i| {
                let v = a.get(i, k).abs();
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
            if absakk.max(colmax) <= pivot_tol {
                return Err(SingularPivot { index: perm[k] });
            }
            let (kp, step) = if absakk >= alpha * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n).filter(|&j| j != imax).fold(T::zero(), |m, j| m.max(a.get(imax, j).abs()));
                if absakk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if a.get(imax, imax).abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };
            let kk = k + step - 1;
            if kp != kk {
                a.swap_sym(kk, kp);
                perm.swap(kk, kp);
            }
            if step == 1 {
                let d = a.get(k, k);
                let l: Vec<T> = (k + 1..n).map(|i| a.get(i, k) / d).collect();
                for (ii, i) in (k + 1..n).enumerate() {
                    for j in k + 1..=i {
                        let v = a.get(i, j) - l[ii] * a.get(j, k);
                        a.set(i, j, v);
                        a.set(j, i, v);
                    }
                }
                for (ii, i) in (k + 1..n).enumerate() {
                    a.set(i, k, l[ii]);
                }
            } else {
                let (d11, d21, d22) = (a.get(k, k), a.get(k + 1, k), a.get(k + 1, k + 1));
                let det = d11 * d22 - d21 * d21;
                if det.abs() <= pivot_tol * pivot_tol || !det.is_finite() {
                    return Err(SingularPivot { index: perm[k] });
                }
                let l: Vec<(T, T)> = (k + 2..n)
                    .map(|i| {
                        let (w1, w2) = (a.get(i, k), a.get(i, k + 1));
                        ((w1 * d22 - w2 * d21) / det, (w2 * d11 - w1 * d21) / det)
                    })
                    .collect();
                for (ii, i) in (k + 2..n).enumerate() {
                    for j in k + 2..=i {
                        let v = a.get(i, j) - l[ii].0 * a.get(j, k) - l[ii].1 * a.get(j, k + 1);
                        a.set(i, j, v);
                        a.set(j, i, v);
                    }
                }
                for (ii, i) in (k + 2..n).enumerate() {
                    a.set(i, k, l[ii].0);
                    a.set(i, k + 1, l[ii].1);
                }
            }
            blocks.push((k, step));
            k += step;
        }
        Ok(Self { lu: a, perm, blocks })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// `(positive, negative)` eigenvalue counts of `D`.
    pub fn inertia(&self) -> (usize, usize) {
        let mut pos = 0;
        let mut neg = 0;
        for &(k, s) in &self.blocks {
            if s == 2 {
                pos += 1;
                neg += 1;
            } else if self.lu.get(k, k) > T::zero() {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        (pos, neg)
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n;
        let a = &self.lu;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for &(k, s) in &self.blocks {
            for i in k + s..n {
                let mut v = y[i];
                for c in k..k + s {
                    v -= a.get(i, c) * y[c];
                }
                y[i] = v;
            }
        }
        for &(k, s) in &self.blocks {
            if s == 1 {
                y[k] /= a.get(k, k);
            } else {
                let (d11, d21, d22) = (a.get(k, k), a.get(k + 1, k), a.get(k + 1, k + 1));
                let det = d11 * d22 - d21 * d21;
                let (y1, y2) = (y[k], y[k + 1]);
                y[k] = (d22 * y1 - d21 * y2) / det;
                y[k + 1] = (d11 * y2 - d21 * y1) / det;
            }
        }
        for &(k, s) in self.blocks.iter().rev() {
            for c in k..k + s {
                let mut v = y[c];
                for i in k + s..n {
                    v -= a.get(i, c) * y[i];
                }
                y[c] = v;
            }
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Tests whether a symmetric matrix is positive semidefinite. Pivots below
/// `-tol·max(1, max|A|)` reject; once the remaining diagonal is within
/// tolerance the remaining block must vanish as well.
pub fn is_positive_semidefinite<T: Scalar>(a: &DenseMatrix<T>, tol: T) -> bool {
    let n = a.n;
    let scale = T::one().max(a.max_abs());
    let tol = tol * scale;
    let mut m = a.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let (pos, &p) = remaining
            .iter()
            .enumerate()
            .max_by(|x, y| m.get(*x.1, *x.1).partial_cmp(&m.get(*y.1, *y.1)).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let d = m.get(p, p);
        if d.is_nan() {
            return false;
        }
        if d <= tol {
            let min_diag = remaining.iter().fold(T::infinity(), |acc, &i| acc.min(m.get(i, i)));
            if min_diag < -tol {
                return false;
            }
            return remaining.iter().all(|&i| remaining.iter().all(|&j| m.get(i, j).abs() <= tol));
        }
        remaining.swap_remove(pos);
        for &i in &remaining {
            let lip = m.get(i, p) / d;
            for &j in &remaining {
                let v = m.get(i, j) - lip * m.get(p, j);
                m.set(i, j, v);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &DenseMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        a.mul_vec(x).iter().zip(b).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn solves_indefinite_system_with_two_by_two_pivots() {
        // zero diagonal forces 2x2 pivots
        let a = DenseMatrix::from_row_major(3, vec![0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0]);
        let f: BunchKaufman<f64> = BunchKaufman::factor(a.clone(), 1e-14).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-12);
        let (p, n) = f.inertia();
        assert_eq!(p + n, 3);
    }

    #[test]
    fn kkt_inertia() {
        // [[2,0,1],[0,2,1],[1,1,0]] has inertia (2,1)
        let a = DenseMatrix::from_row_major(3, vec![2.0, 0.0, 1.0, 0.0, 2.0, 1.0, 1.0, 1.0, 0.0]);
        let f: BunchKaufman<f64> = BunchKaufman::factor(a.clone(), 1e-14).unwrap();
        assert_eq!(f.inertia(), (2, 1));
        let x = f.solve(&[0.0, 0.0, 2.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14 && (x[2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn reports_singular_column() {
        let a = DenseMatrix::from_row_major(2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(BunchKaufman::factor(a, 1e-12).is_err());
    }

    #[test]
    fn psd_detection() {
        let psd = DenseMatrix::from_row_major(2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(is_positive_semidefinite(&psd, 1e-10));
        let indef = DenseMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(!is_positive_semidefinite(&indef, 1e-10));
        let zero_diag = DenseMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]);
        assert!(!is_positive_semidefinite(&zero_diag, 1e-10));
        assert!(is_positive_semidefinite(&DenseMatrix::<f64>::zeros(3), 1e-10));
    }
}
