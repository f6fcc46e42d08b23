//! Sparse symmetric LDLᵀ for quasi-definite KKT matrices.
//!
//! The pattern is analysed once (minimum-degree ordering, elimination tree,
//! column counts); numeric factorizations then reuse it with new values, which
//! is the access pattern of an interior-point method.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdlError {
    /// Zero or non-finite pivot at the given original index.
    ZeroPivot(usize),
}

/// Minimum-degree ordering of the graph with the given undirected edges.
/// Ties break toward the lowest vertex index.
pub fn minimum_degree_order(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in edges {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if done[v] || deg != adj[v].len() {
            continue;
        }
        done[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                }
            }
        }
        for &a in &nbrs {
            heap.push(Reverse((adj[a].len(), a)));
        }
    }
    order
}

/// Symbolic + numeric LDLᵀ of a symmetric matrix given by triplets.
#[derive(Debug, Clone)]
pub struct SparseLdl<T> {
    n: usize,
    perm: Vec<usize>,
    // permuted upper-triangular CSC
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<T>,
    slot: Vec<usize>,
    diag_slot: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
    dinv: Vec<T>,
}

impl<T: Scalar> SparseLdl<T> {
    /// Analyses the pattern `entries` (either triangle, duplicates allowed).
    /// Every diagonal entry is implicitly part of the pattern.
    pub fn analyze(n: usize, entries: &[(usize, usize)]) -> Self {
        let order = minimum_degree_order(n, entries);
        let mut pinv = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            pinv[v] = k;
        }
        // permuted upper coordinates; diagonal first so it always exists
        let mut coords: Vec<(usize, usize)> = (0..n).map(|k| (k, k)).collect();
        coords.extend(entries.iter().map(|&(i, j)| {
            let (a, b) = (pinv[i], pinv[j]);
            (a.min(b), a.max(b))
        }));
        let mut sorted: Vec<(usize, usize, usize)> = coords.iter().enumerate().map(|(k, &(r, c))| (c, r, k)).collect();
        sorted.sort_unstable();
        let mut ap = vec![0; n + 1];
        let mut ai = Vec::new();
        let mut slot = vec![0; coords.len()];
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, k) in &sorted {
            if last != Some((c, r)) {
                ai.push(r);
                ap[c + 1] += 1;
                last = Some((c, r));
            }
            slot[k] = ai.len() - 1;
        }
        for c in 0..n {
            ap[c + 1] += ap[c];
        }
        let diag_slot: Vec<usize> = (0..n).map(|orig| slot[pinv[orig]]).collect();
        let slot = slot[n..].to_vec();

        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz_l = lp[n];
        Self {
            n,
            perm: order,
            ax: vec![T::zero(); ai.len()],
            ap,
            ai,
            slot,
            diag_slot,
            etree,
            lp,
            li: vec![0; nnz_l],
            lx: vec![T::zero(); nnz_l],
            d: vec![T::zero(); n],
            dinv: vec![T::zero(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_factor(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization. `values[k]` belongs to the `k`-th analysed entry
    /// (symmetric duplicates must not be listed in both triangles); `diag` is
    /// added to the diagonal. Returns the inertia `(positive, negative)`.
    pub fn factor(&mut self, values: &[T], diag: &[T]) -> Result<(usize, usize), LdlError> {
        let n = self.n;
        assert_eq!(values.len(), self.slot.len(), "value count differs from analysed pattern");
        assert_eq!(diag.len(), n);
        self.ax.iter_mut().for_each(|x| *x = T::zero());
        for (k, &v) in values.iter().enumerate() {
            self.ax[self.slot[k]] += v;
        }
        for (orig, &dv) in diag.iter().enumerate() {
            self.ax[self.diag_slot[orig]] += dv;
        }

        let mut y_vals = vec![T::zero(); n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        let mut pos = 0;
        let mut neg = 0;

        for k in 0..n {
            let mut nnz_y = 0;
            let mut dk = T::zero();
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    dk = self.ax[p];
                    continue;
                }
                y_vals[b] = self.ax[p];
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if y_used[next] {
                            break;
                        }
                        y_used[next] = true;
                        elim[ne] = next;
                        ne += 1;
                        next = self.etree[next];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for j in self.lp[c]..tmp {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let l = yc * self.dinv[c];
                self.lx[tmp] = l;
                dk -= yc * l;
                next_space[c] += 1;
                y_vals[c] = T::zero();
                y_used[c] = false;
            }
            if dk == T::zero() || !dk.is_finite() {
                return Err(LdlError::ZeroPivot(self.perm[k]));
            }
            if dk > T::zero() {
                pos += 1;
            } else {
                neg += 1;
            }
            self.d[k] = dk;
            self.dinv[k] = T::one() / dk;
        }
        Ok((pos, neg))
    }

    /// Solves `A x = b` in place with the current factorization.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                xi -= self.lx[j] * x[self.li[j]];
            }
            x[i] = xi;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }
}

/// Symmetric matrix stored as upper-triangle triplets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymTriplets<T> {
    pub n: usize,
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> SymTriplets<T> {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    /// Adds `v` at `(i, j)` and, implicitly, `(j, i)`.
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        self.entries.push((i.min(j), i.max(j), v));
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }
}
