//! Exact and fixed-parameter solvers for one-sided crossing minimization.

pub mod bench;
pub mod bitmask_dp;
pub mod error;
pub mod golden;
pub mod graph;
pub mod limits;
pub mod solver;
pub mod subexpo;

pub use error::{OscmError, Result};
