//! Graph-structured convex quadratic programming.
//!
//! A model is a hierarchical hypergraph: nodes carry local subproblems,
//! hyperedges carry linear linking constraints, and graphs nest. On top of
//! the model the crate provides hypergraph projections and structural
//! queries, partitioning and aggregation, a sparse primal-dual interior-point
//! solver, a Schur-complement decomposition of its Newton systems, an
//! overlapping Schwarz decomposition, benchmark model builders and
//! serialization.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod io;
pub mod linalg;
pub mod library;
pub mod model;
pub mod partition;
pub mod qp;
pub mod scalar;
pub mod schur;
pub mod schwarz;
pub mod topology;

pub use scalar::Scalar;

/// Double-precision model arena.
pub type Model = model::Model<f64>;
pub type FlatQp = model::FlatQp<f64>;
pub type QuadExpr = model::QuadExpr<f64>;
pub type Solution = qp::Solution<f64>;
pub type SolverOptions = qp::SolverOptions<f64>;
pub type SchwarzOptions = schwarz::SchwarzOptions<f64>;
pub type Aggregated = partition::Aggregated<f64>;
