//! The pair algebra of a P-graph and its exact matrix realisations.

pub mod checks;
pub mod formal;
pub mod matrix;
pub mod rep;

pub use formal::FormalElement;
pub use matrix::{rational_rank, MatrixOp};
pub use rep::{Flavor, Representation};
