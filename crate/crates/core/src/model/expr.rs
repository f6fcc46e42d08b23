use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::VarRef;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    /// Violation of `activity (sense) 0`.
    pub fn violation<T: Scalar>(self, activity: T) -> T {
        match self {
            Sense::Le => activity.max(T::zero()),
            Sense::Eq => activity.abs(),
            Sense::Ge => (-activity).max(T::zero()),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "==",
            Sense::Ge => ">=",
        }
    }

    /// `(lower, upper)` bounds on the activity for a right-hand side.
    pub fn bounds<T: Scalar>(self, rhs: T) -> (T, T) {
        match self {
            Sense::Le => (T::neg_infinity(), rhs),
            Sense::Eq => (rhs, rhs),
            Sense::Ge => (rhs, T::infinity()),
        }
    }
}

/// `constant + Σ c_i x_i + Σ_{i≤j} q_ij x_i x_j`.
///
/// Each unordered variable pair is stored once with the smaller reference first,
/// so `x²` is the entry `(x, x)` and `x·y` the entry `(min, max)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadExpr<T> {
    pub constant: T,
    pub linear: BTreeMap<VarRef, T>,
    pub quadratic: BTreeMap<(VarRef, VarRef), T>,
}

impl<T: Scalar> QuadExpr<T> {
    pub fn new() -> Self {
        Self { constant: T::zero(), linear: BTreeMap::new(), quadratic: BTreeMap::new() }
    }

    pub fn linear_terms(terms: &[(VarRef, T)]) -> Self {
        let mut e = Self::new();
        for &(v, c) in terms {
            e.add_linear(v, c);
        }
        e
    }

    pub fn with_constant(mut self, c: T) -> Self {
        self.constant += c;
        self
    }

    pub fn add_linear(&mut self, v: VarRef, c: T) -> &mut Self {
        *self.linear.entry(v).or_insert_with(T::zero) += c;
        self
    }

    pub fn add_quadratic(&mut self, a: VarRef, b: VarRef, c: T) -> &mut Self {
        let key = if a <= b { (a, b) } else { (b, a) };
        *self.quadratic.entry(key).or_insert_with(T::zero) += c;
        self
    }

    /// Adds `c·(Σ a_i x_i)²`.
    pub fn add_square(&mut self, terms: &[(VarRef, T)], c: T) -> &mut Self {
        for (i, &(a, ca)) in terms.iter().enumerate() {
            self.add_quadratic(a, a, c * ca * ca);
            for &(b, cb) in &terms[i + 1..] {
                self.add_quadratic(a, b, T::lit(2.0) * c * ca * cb);
            }
        }
        self
    }

    pub fn add_expr(&mut self, other: &QuadExpr<T>) -> &mut Self {
        self.constant += other.constant;
        for (&v, &c) in &other.linear {
            self.add_linear(v, c);
        }
        for (&(a, b), &c) in &other.quadratic {
            self.add_quadratic(a, b, c);
        }
        self
    }

    pub fn variables(&self) -> BTreeSet<VarRef> {
        let mut set: BTreeSet<VarRef> = self.linear.keys().copied().collect();
        for &(a, b) in self.quadratic.keys() {
            set.insert(a);
            set.insert(b);
        }
        set
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.linear.values().all(|c| c.is_finite()) && self.quadratic.values().all(|c| c.is_finite())
    }

    pub fn evaluate(&self, value: impl Fn(VarRef) -> T) -> T {
        let mut acc = self.constant;
        for (&v, &c) in &self.linear {
            acc += c * value(v);
        }
        for (&(a, b), &c) in &self.quadratic {
            acc += c * value(a) * value(b);
        }
        acc
    }

    /// Rewrites every variable reference through `f`.
    pub fn remap(&self, f: impl Fn(VarRef) -> VarRef) -> Self {
        let mut out = Self::new().with_constant(self.constant);
        for (&v, &c) in &self.linear {
            out.add_linear(f(v), c);
        }
        for (&(a, b), &c) in &self.quadratic {
            out.add_quadratic(f(a), f(b), c);
        }
        out
    }
}
