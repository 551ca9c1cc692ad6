//! Numerical verification of the correspondence between conformal
//! hypercomplex manifolds of dimension 4(n+1) and quaternionic manifolds of
//! dimension 4n.
//!
//! Everything is chart-local and pointwise: structures, connections and
//! curvatures are evaluated on [`jet::Jet`]s at sampled points, and every
//! identity is checked by its residual.

pub mod error;
pub mod catalog;
pub mod confmap;
pub mod connection;
pub mod curvature;
pub mod field;
pub mod jet;
pub mod liftjson;
pub mod linalg;
pub mod qstruct;
pub mod quat;
pub mod report;
pub mod suite;
pub mod symmetry;

pub use error::{Error, Result};
