//! Finitely aligned P-graphs over quasi-lattice ordered groups, their
//! filter and ultrafilter spaces, and exact-rational matrix realisations of
//! the associated partial-isometry algebras, with verification suites for
//! the defining relations at desk scale.

pub mod algebra;
pub mod catalog;
pub mod filters;
pub mod error;
pub mod graph;
pub mod qlo;
pub mod report;
pub mod specfile;
pub mod spielberg;

pub use error::{Error, Result};
