//! Linear algebra kernels used by the solvers.

pub mod dense;
pub mod sparse;

pub use dense::{is_positive_semidefinite, BunchKaufman, DenseMatrix, SingularPivot};
pub use sparse::{minimum_degree_order, LdlError, SparseLdl, SymTriplets};
