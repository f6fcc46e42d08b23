//! Mehrotra predictor-corrector interior-point iteration on [`Standard`] form.

use super::kkt::{KktBackend, KktFailure};
use super::standard::Standard;
use super::{IterationRecord, SolverOptions, Status};
use crate::scalar::{norm_inf, Scalar};

const INFEASIBILITY_WINDOW: usize = 20;
const DUAL_BLOWUP: f64 = 1e8;
const PRIMAL_BLOWUP: f64 = 1e12;
const MAX_REGULARIZATION: f64 = 1e-4;
const SIGMA_MIN: f64 = 0.05;
const SIGMA_MAX: f64 = 0.95;

#[derive(Debug, Clone)]
pub(crate) struct IpmOutput<T> {
    pub w: Vec<T>,
    pub y: Vec<T>,
    /// `z_lower - z_upper` per column.
    pub z: Vec<T>,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub message: Option<String>,
}

struct Iterate<T> {
    w: Vec<T>,
    y: Vec<T>,
    zl: Vec<T>,
    zu: Vec<T>,
}

struct Bounds<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    has_l: Vec<bool>,
    has_u: Vec<bool>,
    pairs: usize,
}

impl<T: Scalar> Bounds<T> {
    fn new(sys: &Standard<T>) -> Self {
        let has_l: Vec<bool> = sys.lower.iter().map(|l| l.is_finite()).collect();
        let has_u: Vec<bool> = sys.upper.iter().map(|u| u.is_finite()).collect();
        let pairs = has_l.iter().chain(&has_u).filter(|b| **b).count();
        Self { lower: sys.lower.clone(), upper: sys.upper.clone(), has_l, has_u, pairs }
    }

    fn gaps(&self, w: &[T]) -> (Vec<T>, Vec<T>) {
        let gl = w.iter().zip(&self.lower).zip(&self.has_l).map(|((w, l), h)| if *h { *w - *l } else { T::one() }).collect();
        let gu = w.iter().zip(&self.upper).zip(&self.has_u).map(|((w, u), h)| if *h { *u - *w } else { T::one() }).collect();
        (gl, gu)
    }

    fn mu(&self, gl: &[T], gu: &[T], zl: &[T], zu: &[T]) -> T {
        if self.pairs == 0 {
            return T::zero();
        }
        let mut s = T::zero();
        for j in 0..gl.len() {
            if self.has_l[j] {
                s += gl[j] * zl[j];
            }
            if self.has_u[j] {
                s += gu[j] * zu[j];
            }
        }
        s / T::lit(self.pairs as f64)
    }

    fn max_complementarity(&self, gl: &[T], gu: &[T], zl: &[T], zu: &[T]) -> T {
        let mut m = T::zero();
        for j in 0..gl.len() {
            if self.has_l[j] {
                m = m.max(gl[j] * zl[j]);
            }
            if self.has_u[j] {
                m = m.max(gu[j] * zu[j]);
            }
        }
        m
    }
}

/// Pushes `w` at least `margin` inside its bounds (to the midpoint when the
/// box is narrower than `2 margin`).
fn push_inside<T: Scalar>(sys: &Standard<T>, bounds: &Bounds<T>, w: &mut [T], margin: impl Fn(usize) -> T) {
    let half = T::lit(0.5);
    for j in 0..w.len() {
        let (l, u) = (sys.lower[j], sys.upper[j]);
        let m = margin(j);
        match (bounds.has_l[j], bounds.has_u[j]) {
            (true, true) => {
                let m = m.min(half * (u - l));
                w[j] = w[j].max(l + m).min(u - m);
            }
            (true, false) => w[j] = w[j].max(l + m),
            (false, true) => w[j] = w[j].min(u - m),
            (false, false) => {}
        }
    }
}

/// Fallback starting point: the user start nudged into the bounds with unit duals.
fn simple_start<T: Scalar>(sys: &Standard<T>, bounds: &Bounds<T>) -> Iterate<T> {
    let push = T::lit(1e-2);
    let mut w = sys.start.clone();
    push_inside(sys, bounds, &mut w, |j| {
        let l = if bounds.has_l[j] { sys.lower[j].abs() } else { T::zero() };
        let u = if bounds.has_u[j] { sys.upper[j].abs() } else { T::zero() };
        push * T::one().max(l).max(u)
    });
    let zl = bounds.has_l.iter().map(|&h| if h { T::one() } else { T::zero() }).collect();
    let zu = bounds.has_u.iter().map(|&h| if h { T::one() } else { T::zero() }).collect();
    Iterate { w, y: vec![T::zero(); sys.m()], zl, zu }
}

/// Mehrotra-type starting point. A proximal least-squares solve
/// `min ½wᵀHw + cᵀw + ½‖w - w₀‖²` s.t. `Rw = b` gives primal and row-dual
/// estimates; bound gaps and bound duals are then shifted to be positive and
/// balanced.
fn initial_point<T: Scalar, B: KktBackend<T>>(sys: &Standard<T>, bounds: &Bounds<T>, backend: &mut B) -> Iterate<T> {
    let n = sys.n();
    let mut w0 = sys.start.clone();
    for j in 0..n {
        w0[j] = w0[j].max(sys.lower[j]).min(sys.upper[j]);
    }
    let sigma = vec![T::one(); n];
    if bounds.pairs == 0 || backend.factor(sys, &sigma).is_err() {
        return simple_start(sys, bounds);
    }
    let rw: Vec<T> = (0..n).map(|j| w0[j] - sys.c[j]).collect();
    let (w, y) = backend.solve(sys, &sigma, &rw, &sys.b);
    if !(is_finite_all(&w) && is_finite_all(&y)) {
        return simple_start(sys, bounds);
    }
    // Stationarity leaves `z_l - z_u = Hw + c + Rᵀy = w₀ - w`.
    let (gl, gu) = bounds.gaps(&w);
    let mut pairs: Vec<(T, T)> = Vec::with_capacity(bounds.pairs);
    for j in 0..n {
        let g = w0[j] - w[j];
        if bounds.has_l[j] {
            pairs.push((gl[j], g.max(T::zero())));
        }
        if bounds.has_u[j] {
            pairs.push((gu[j], (-g).max(T::zero())));
        }
    }
    let one_and_half = T::lit(1.5);
    let min_gap = pairs.iter().fold(T::infinity(), |a, p| a.min(p.0));
    let min_z = pairs.iter().fold(T::infinity(), |a, p| a.min(p.1));
    let dg = (-one_and_half * min_gap).max(T::zero());
    let dz = (-one_and_half * min_z).max(T::zero());
    let (mut prod, mut sum_g, mut sum_z) = (T::zero(), T::zero(), T::zero());
    for &(g, z) in &pairs {
        prod += (g + dg) * (z + dz);
        sum_g += g + dg;
        sum_z += z + dz;
    }
    let half = T::lit(0.5);
    let floor = T::lit(1e-2);
    let shift_g = dg + if sum_z > T::zero() { half * prod / sum_z } else { T::zero() };
    let shift_z = dz + if sum_g > T::zero() { half * prod / sum_g } else { T::zero() };
    let shift_g = shift_g.max(floor);
    let shift_z = shift_z.max(floor);

    let mut zl = vec![T::zero(); n];
    let mut zu = vec![T::zero(); n];
    for j in 0..n {
        let g = w0[j] - w[j];
        if bounds.has_l[j] {
            zl[j] = g.max(T::zero()) + shift_z;
        }
        if bounds.has_u[j] {
            zu[j] = (-g).max(T::zero()) + shift_z;
        }
    }
    let mut w = w;
    push_inside(sys, bounds, &mut w, |_| shift_g);
    Iterate { w, y, zl, zu }
}

/// Largest `α ∈ (0, 1]` with `v + α dv ≥ 0` on masked entries.
fn max_step<T: Scalar>(v: &[T], dv: &[T], mask: &[bool]) -> T {
    let mut a = T::one();
    for j in 0..v.len() {
        if mask[j] && dv[j] < T::zero() {
            a = a.min(-v[j] / dv[j]);
        }
    }
    a
}

struct Direction<T> {
    dw: Vec<T>,
    dy: Vec<T>,
    dzl: Vec<T>,
    dzu: Vec<T>,
}

#[allow(clippy::too_many_arguments)]
fn direction<T: Scalar, B: KktBackend<T>>(
    sys: &Standard<T>,
    backend: &mut B,
    sigma: &[T],
    bounds: &Bounds<T>,
    it: &Iterate<T>,
    gl: &[T],
    gu: &[T],
    rd: &[T],
    rp: &[T],
    rcl: &[T],
    rcu: &[T],
) -> Direction<T> {
    let n = sys.n();
    let rw: Vec<T> = (0..n)
        .map(|j| {
            let mut v = -rd[j];
            if bounds.has_l[j] {
                v += rcl[j] / gl[j];
            }
            if bounds.has_u[j] {
                v -= rcu[j] / gu[j];
            }
            v
        })
        .collect();
    let ry: Vec<T> = rp.iter().map(|r| -*r).collect();
    let (dw, dy) = backend.solve(sys, sigma, &rw, &ry);
    let dzl = (0..n)
        .map(|j| if bounds.has_l[j] { (rcl[j] - it.zl[j] * dw[j]) / gl[j] } else { T::zero() })
        .collect();
    let dzu = (0..n)
        .map(|j| if bounds.has_u[j] { (rcu[j] + it.zu[j] * dw[j]) / gu[j] } else { T::zero() })
        .collect();
    Direction { dw, dy, dzl, dzu }
}

fn step_length<T: Scalar>(bounds: &Bounds<T>, it: &Iterate<T>, gl: &[T], gu: &[T], d: &Direction<T>) -> T {
    let neg_dw: Vec<T> = d.dw.iter().map(|v| -*v).collect();
    max_step(gl, &d.dw, &bounds.has_l)
        .min(max_step(gu, &neg_dw, &bounds.has_u))
        .min(max_step(&it.zl, &d.dzl, &bounds.has_l))
        .min(max_step(&it.zu, &d.dzu, &bounds.has_u))
}

fn is_finite_all<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Heuristic infeasibility test over the last `window` iterations: a
/// residual that stagnates while the barrier parameter collapses or the
/// multipliers blow up.
fn infeasibility(history: &[IterationRecord], window: usize, tol: f64, dual_size: f64) -> Option<&'static str> {
    let now = history.last()?;
    let old = &history[history.len().checked_sub(window + 1)?];
    let collapsed = now.mu < 1e-3 * old.mu || dual_size > DUAL_BLOWUP;
    if !collapsed {
        return None;
    }
    if now.r_primal > tol && now.r_primal > 0.5 * old.r_primal {
        return Some("primal residual stagnates while the barrier parameter collapses");
    }
    if now.r_dual > tol && now.r_dual > 0.5 * old.r_dual {
        return Some("dual residual stagnates while the barrier parameter collapses (unbounded problem)");
    }
    None
}

pub(crate) fn interior_point<T: Scalar, B: KktBackend<T>>(
    sys: &Standard<T>,
    opts: &SolverOptions<T>,
    backend: &mut B,
) -> IpmOutput<T> {
    let n = sys.n();
    let bounds = Bounds::new(sys);
    let mut it = initial_point(sys, &bounds, backend);
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut status = Status::IterationLimit;
    let mut message = None;
    let mut iterations = 0;

    for k in 0..=opts.max_iter {
        let (gl, gu) = bounds.gaps(&it.w);
        let mut rd = sys.hess_mul(&it.w);
        for j in 0..n {
            rd[j] += sys.c[j] - it.zl[j] + it.zu[j];
        }
        sys.row_tmul_into(&it.y, &mut rd);
        let rp: Vec<T> = sys.row_mul(&it.w).iter().zip(&sys.b).map(|(a, b)| *a - *b).collect();
        let mu = bounds.mu(&gl, &gu, &it.zl, &it.zu);
        let (rd_n, rp_n) = (norm_inf(&rd), norm_inf(&rp));
        let compl = bounds.max_complementarity(&gl, &gu, &it.zl, &it.zu);
        history.push(IterationRecord {
            iter: k,
            mu: mu.as_f64(),
            r_dual: rd_n.as_f64(),
            r_primal: rp_n.as_f64(),
            step: 0.0,
        });
        iterations = k;
        if !rd_n.is_finite() || !rp_n.is_finite() || !mu.is_finite() {
            status = Status::NumericalError;
            message = Some("non-finite residual".into());
            break;
        }
        if rd_n <= opts.tol && rp_n <= opts.tol && compl <= opts.tol {
            status = Status::Optimal;
            break;
        }
        if k == opts.max_iter {
            break;
        }
        if norm_inf(&it.w) > T::lit(PRIMAL_BLOWUP) {
            status = Status::Infeasible;
            message = Some("primal iterates diverge (problem unbounded or dual infeasible)".into());
            break;
        }
        if k >= INFEASIBILITY_WINDOW {
            let dual_size = norm_inf(&it.y).max(norm_inf(&it.zl)).max(norm_inf(&it.zu));
            if let Some(msg) = infeasibility(&history, INFEASIBILITY_WINDOW, opts.tol.as_f64(), dual_size.as_f64()) {
                status = Status::Infeasible;
                message = Some(msg.into());
                break;
            }
        }

        let mut delta = opts.regularization;
        let sigma = loop {
            let sigma: Vec<T> = (0..n)
                .map(|j| {
                    let mut s = delta;
                    if bounds.has_l[j] {
                        s += it.zl[j] / gl[j];
                    }
                    if bounds.has_u[j] {
                        s += it.zu[j] / gu[j];
                    }
                    s
                })
                .collect();
            match backend.factor(sys, &sigma) {
                Ok(()) => break Some(sigma),
                Err(KktFailure::Singular) if delta * T::lit(10.0) <= T::lit(MAX_REGULARIZATION) * T::lit(1.0 + 1e-9) => {
                    delta *= T::lit(10.0);
                }
                Err(KktFailure::Singular) => {
                    message = Some(format!("factorization failed at regularization {}", delta.as_f64()));
                    break None;
                }
                Err(KktFailure::Fatal(msg)) => {
                    message = Some(msg);
                    break None;
                }
            }
        };
        let Some(sigma) = sigma else {
            status = Status::NumericalError;
            let window = k.min(INFEASIBILITY_WINDOW);
            if window >= 5 {
                if let Some(msg) = infeasibility(&history, window, opts.tol.as_f64(), 0.0) {
                    status = Status::Infeasible;
                    message = Some(msg.into());
                }
            }
            break;
        };

        let rcl: Vec<T> = (0..n).map(|j| -gl[j] * it.zl[j]).collect();
        let rcu: Vec<T> = (0..n).map(|j| -gu[j] * it.zu[j]).collect();
        let aff = direction(sys, backend, &sigma, &bounds, &it, &gl, &gu, &rd, &rp, &rcl, &rcu);
        let d = if bounds.pairs == 0 {
            aff
        } else {
            let a = step_length(&bounds, &it, &gl, &gu, &aff);
            let mut mu_aff = T::zero();
            for j in 0..n {
                if bounds.has_l[j] {
                    mu_aff += (gl[j] + a * aff.dw[j]) * (it.zl[j] + a * aff.dzl[j]);
                }
                if bounds.has_u[j] {
                    mu_aff += (gu[j] - a * aff.dw[j]) * (it.zu[j] + a * aff.dzu[j]);
                }
            }
            mu_aff /= T::lit(bounds.pairs as f64);
            let ratio = if mu > T::zero() { mu_aff / mu } else { T::zero() };
            let centering = (ratio * ratio * ratio).max(T::lit(SIGMA_MIN)).min(T::lit(SIGMA_MAX));
            let target = centering * mu;
            let rcl: Vec<T> = (0..n).map(|j| target - gl[j] * it.zl[j] - aff.dw[j] * aff.dzl[j]).collect();
            let rcu: Vec<T> = (0..n).map(|j| target - gu[j] * it.zu[j] + aff.dw[j] * aff.dzu[j]).collect();
            direction(sys, backend, &sigma, &bounds, &it, &gl, &gu, &rd, &rp, &rcl, &rcu)
        };
        if !(is_finite_all(&d.dw) && is_finite_all(&d.dy)) {
            status = Status::NumericalError;
            message = Some("non-finite Newton step".into());
            break;
        }
        let alpha = if bounds.pairs == 0 {
            T::one()
        } else {
            (opts.fraction_to_boundary * step_length(&bounds, &it, &gl, &gu, &d)).min(T::one())
        };
        for j in 0..n {
            it.w[j] += alpha * d.dw[j];
            it.zl[j] += alpha * d.dzl[j];
            it.zu[j] += alpha * d.dzu[j];
        }
        for (y, dy) in it.y.iter_mut().zip(&d.dy) {
            *y += alpha * *dy;
        }
        if let Some(last) = history.last_mut() {
            last.step = alpha.as_f64();
        }
    }
    let z = it.zl.iter().zip(&it.zu).map(|(l, u)| *l - *u).collect();
    IpmOutput { w: it.w, y: it.y, z, status, iterations, history, message }
}
