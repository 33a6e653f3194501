//! Computationally sufficient reductions for penalized M-estimators on
//! vectors and symmetric matrices.
//!
//! The crate is organized bottom-up:
//!
//! - [`symmat`]: packed symmetric matrices, covariance ingestion and a
//!   Jacobi eigensolver.
//! - [`linkage`]: single-linkage clustering, Kruskal dendrograms and the
//!   single-linkage thresholding operators.
//! - [`orbit`]: sign-group and cut-polytope majorization checks and the
//!   projection conditions a reduction mask must satisfy.
//! - [`reduce`]: the reductions themselves (hard thresholding, blockwise
//!   thresholding, positive part, single-linkage thresholding) and block
//!   decomposition.
//! - [`estimators`]: reference solvers (Lasso, NNLS, Graphical Lasso,
//!   Fantope sparse PCA, eigenvalue-floored sparse covariance,
//!   sign-constrained inverse covariance, Ising penalized MLE).
//! - [`verify`]: executable checks of solution equivalence, support
//!   containment and ultrametric minimality, plus a randomized suite.
//! - [`io`]: CSV and JSON formats shared with the command line tool.

// `!(v > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod io;
pub mod linkage;
pub mod orbit;
pub mod reduce;
pub mod symmat;
pub mod verify;

pub use error::{Error, Result};
pub use linkage::{Dendrogram, Merge, Partition};

pub use symmat::{EigenDecomposition, SymMatrix};
