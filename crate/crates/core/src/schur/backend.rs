use std::time::Instant;

use rayon::prelude::*;

use super::{bordered_solve, factor_schur, schur_matrix, BlockFactor, Coupling, Layout};
use crate::linalg::{BunchKaufman, SparseLdl};
use crate::qp::kkt::{dual_regularization, refine};
use crate::qp::{KktBackend, KktFailure, Standard};
use crate::scalar::{norm_inf, Scalar};

/// Statistics of one Newton-matrix factorization and the solves that used it.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurIteration {
    pub factorization: usize,
    pub schur_dim: usize,
    /// Largest `‖K d - rhs‖∞ / (1 + ‖rhs‖∞)` over the solves.
    pub residual: f64,
    /// Wall time of the node-block factorizations.
    pub block_seconds: f64,
    /// Wall time of forming and factoring `S`.
    pub schur_seconds: f64,
    /// Wall time of the solves.
    pub solve_seconds: f64,
}

struct Block<T> {
    ldl: SparseLdl<T>,
    values: Vec<T>,
}

pub(crate) struct SchurBackend<T> {
    layout: Layout,
    blocks: Vec<Block<T>>,
    factors: Vec<BlockFactor<T>>,
    coupling: Vec<Coupling<T>>,
    schur: Option<BunchKaufman<T>>,
    trace: Vec<SchurIteration>,
    rank_failure: Option<String>,
}

impl<T: Scalar> SchurBackend<T> {
    pub fn new(sys: &Standard<T>, layout: Layout) -> Self {
        let n = sys.n();
        let mut local = vec![(0usize, 0usize); n];
        for (b, cols) in layout.cols.iter().enumerate() {
            for (i, &c) in cols.iter().enumerate() {
                local[c] = (b, i);
            }
        }
        let mut patterns: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layout.nodes.len()];
        let mut values: Vec<Vec<T>> = vec![Vec::new(); layout.nodes.len()];
        for &(i, j, h) in &sys.hess {
            let (b, li) = local[i];
            patterns[b].push((li, local[j].1));
            values[b].push(h);
        }
        for (b, rows) in layout.rows.iter().enumerate() {
            let offset = layout.cols[b].len();
            for (ri, &r) in rows.iter().enumerate() {
                for (c, v) in sys.rows[r].iter() {
                    patterns[b].push((local[c].1, offset + ri));
                    values[b].push(v);
                }
            }
        }
        let blocks = patterns
            .into_iter()
            .zip(values)
            .enumerate()
            .map(|(b, (p, values))| Block { ldl: SparseLdl::analyze(layout.block_dim(b), &p), values })
            .collect();
        let coupling = layout
            .coupling
            .iter()
            .map(|c| c.iter().map(|&(loc, l, v)| (loc, l, T::lit(v))).collect())
            .collect();
        Self { layout, blocks, factors: Vec::new(), coupling, schur: None, trace: Vec::new(), rank_failure: None }
    }

    pub fn rank_failure(&self) -> Option<String> {
        self.rank_failure.clone()
    }

    pub fn into_trace(self) -> Vec<SchurIteration> {
        self.trace
    }

    fn gather(&self, rw: &[T], ry: &[T]) -> (Vec<Vec<T>>, Vec<T>) {
        let a = (0..self.blocks.len())
            .map(|b| {
                self.layout.cols[b].iter().map(|&c| rw[c]).chain(self.layout.rows[b].iter().map(|&r| ry[r])).collect()
            })
            .collect();
        let border = self.layout.link_rows.iter().map(|&r| ry[r]).collect();
        (a, border)
    }

    fn scatter(&self, n: usize, m: usize, w: &[Vec<T>], lambda: &[T]) -> (Vec<T>, Vec<T>) {
        let mut dw = vec![T::zero(); n];
        let mut dy = vec![T::zero(); m];
        for (b, wb) in w.iter().enumerate() {
            let nc = self.layout.cols[b].len();
            for (i, &c) in self.layout.cols[b].iter().enumerate() {
                dw[c] = wb[i];
            }
            for (i, &r) in self.layout.rows[b].iter().enumerate() {
                dy[r] = wb[nc + i];
            }
        }
        for (p, &r) in self.layout.link_rows.iter().enumerate() {
            dy[r] = lambda[p];
        }
        (dw, dy)
    }
}

impl<T: Scalar> KktBackend<T> for SchurBackend<T> {
    fn factor(&mut self, _sys: &Standard<T>, sigma: &[T]) -> Result<(), KktFailure> {
        let start = Instant::now();
        let delta = dual_regularization::<T>();
        let layout = &self.layout;
        let results: Vec<Option<BlockFactor<T>>> = self
            .blocks
            .par_iter_mut()
            .enumerate()
            .map(|(b, block)| {
                let mut diag: Vec<T> = layout.cols[b].iter().map(|&c| sigma[c]).collect();
                diag.resize(layout.block_dim(b), -delta);
                match block.ldl.factor(&block.values, &diag) {
                    Ok((pos, neg)) if pos == layout.cols[b].len() && neg == layout.rows[b].len() => {
                        Some(BlockFactor::Sparse(block.ldl.clone()))
                    }
                    _ => None,
                }
            })
            .collect();
        let block_seconds = start.elapsed().as_secs_f64();
        let Some(factors) = results.into_iter().collect::<Option<Vec<_>>>() else {
            return Err(KktFailure::Singular);
        };
        self.factors = factors;
        let start = Instant::now();
        let dims: Vec<usize> = (0..self.blocks.len()).map(|b| layout.block_dim(b)).collect();
        let link_count = layout.link_count();
        self.schur = None;
        if link_count > 0 {
            let s = schur_matrix(&self.factors, &dims, &self.coupling, link_count);
            match factor_schur(s) {
                Ok(f) if f.inertia() == (0, link_count) => self.schur = Some(f),
                Ok(_) => return Err(KktFailure::Singular),
                Err(i) => {
                    let label = layout.link_labels[i].clone();
                    self.rank_failure = Some(label.clone());
                    return Err(KktFailure::Fatal(format!("Schur complement is singular: link row `{label}` is redundant")));
                }
            }
        }
        self.trace.push(SchurIteration {
            factorization: self.trace.len(),
            schur_dim: link_count,
            residual: 0.0,
            block_seconds,
            schur_seconds: start.elapsed().as_secs_f64(),
            solve_seconds: 0.0,
        });
        Ok(())
    }

    fn solve(&mut self, sys: &Standard<T>, sigma: &[T], rw: &[T], ry: &[T]) -> (Vec<T>, Vec<T>) {
        let start = Instant::now();
        let (n, m) = (sys.n(), sys.m());
        let this = &*self;
        let (dw, dy, res) = refine(sys, sigma, rw, ry, |a, b| {
            let (blocks, border) = this.gather(a, b);
            let (w, lambda) = bordered_solve(&this.factors, &this.coupling, this.schur.as_ref(), &blocks, &border);
            this.scatter(n, m, &w, &lambda)
        });
        let scale = T::one() + norm_inf(rw).max(norm_inf(ry));
        if let Some(last) = self.trace.last_mut() {
            last.residual = last.residual.max((res / scale).as_f64());
            last.solve_seconds += start.elapsed().as_secs_f64();
        }
        (dw, dy)
    }
}
