//! Concrete partial-isometry representations on the filter space.
//!
//! The generator of a path λ acts on basis vectors e_U by e_U ↦ e_{λ·U}
//! when s(λ) = r(U) and by zero otherwise; its adjoint sends e_U to
//! e_{λ*·U} when λ ∈ U and to zero otherwise. The `Filters` flavor uses
//! every filter as basis; the `Ultrafilters` flavor restricts to the
//! maximal ones, which the actions preserve. All matrices are exact.

use crate::algebra::formal::FormalElement;
use crate::algebra::matrix::MatrixOp;
use crate::error::{Error, Result};
use crate::filters::{self, Filter, FilterSpace};
use crate::graph::{PGraph, PathIx};
use num_rational::BigRational;
use num_traits::One;
use std::collections::HashMap;
use std::sync::Arc;

/// Which filter basis carries the representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// All filters. Gap projections over exhaustive sets stay nonzero.
    Filters,
    /// Maximal filters only. Gap projections over exhaustive sets vanish.
    Ultrafilters,
}

impl Flavor {
    pub fn label(&self) -> &'static str {
        match self {
            Flavor::Filters => "t",
            Flavor::Ultrafilters => "omega",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Flavor> {
        match s {
            "t" | "filters" => Ok(Flavor::Filters),
            "omega" | "ultrafilters" => Ok(Flavor::Ultrafilters),
            other => Err(Error::InvalidGraph(format!("unknown flavor {other}"))),
        }
    }
}

/// A representation: the graph, the chosen filter basis in canonical order,
/// and cached generator matrices.
#[derive(Debug, Clone)]
pub struct Representation {
    graph: Arc<PGraph>,
    flavor: Flavor,
    basis: Vec<Filter>,
    top_index: HashMap<PathIx, usize>,
}

impl Representation {
    pub fn new(graph: Arc<PGraph>, flavor: Flavor) -> Result<Representation> {
        let ultra_only = flavor == Flavor::Ultrafilters;
        let space: FilterSpace = filters::enumerate_filters(&graph, ultra_only, None)?;
        let basis = space.filters;
        let mut top_index = HashMap::new();
        for (i, f) in basis.iter().enumerate() {
            top_index.insert(f.top(), i);
        }
        Ok(Representation {
            graph,
            flavor,
            basis,
            top_index,
        })
    }

    pub fn graph(&self) -> &Arc<PGraph> {
        &self.graph
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Filter] {
        &self.basis
    }

    pub fn basis_index(&self, f: &Filter) -> Option<usize> {
        self.top_index.get(&f.top()).copied()
    }

    /// The generator matrix of λ. Columns whose image is pushed past the
    /// truncation bound are marked undefined.
    pub fn generator(&self, lambda: PathIx) -> Result<MatrixOp> {
        let g = &self.graph;
        let mut columns: Vec<Option<Vec<(u32, BigRational)>>> = Vec::with_capacity(self.dim());
        for u in &self.basis {
            if u.root() != g.source(lambda) {
                columns.push(Some(Vec::new()));
                continue;
            }
            match filters::act(g, lambda, u) {
                Ok(v) => match self.basis_index(&v) {
                    Some(ix) => columns.push(Some(vec![(ix as u32, BigRational::one())])),
                    // The image slid out of the bound-relative basis; only
                    // possible under truncation, where the column is simply
                    // unknown.
                    None if !g.is_finite() => columns.push(None),
                    None => {
                        return Err(Error::BasisEscape(format!(
                            "{} acted on a basis filter and left the basis",
                            g.id(lambda)
                        )))
                    }
                },
                Err(Error::TruncationExceeded(_)) => columns.push(None),
                Err(e) => return Err(e),
            }
        }
        Ok(MatrixOp::from_columns(self.dim(), columns))
    }

    /// The adjoint generator: e_U ↦ e_{λ*·U} when λ ∈ U, else 0. Computed
    /// directly from the inverse action rather than by transposition so it
    /// stays available over truncated graphs.
    pub fn generator_adjoint(&self, lambda: PathIx) -> Result<MatrixOp> {
        let g = &self.graph;
        let mut columns: Vec<Option<Vec<(u32, BigRational)>>> = Vec::with_capacity(self.dim());
        for u in &self.basis {
            if !u.contains(lambda) {
                columns.push(Some(Vec::new()));
                continue;
            }
            match filters::act_inv(g, lambda, u) {
                Ok(v) => match self.basis_index(&v) {
                    Some(ix) => columns.push(Some(vec![(ix as u32, BigRational::one())])),
                    // Removing a prefix can free a whole block of the
                    // truncation window, so the image filter may fail to be
                    // maximal within the bound even though the genuine
                    // image is maximal.
                    None if !g.is_finite() => columns.push(None),
                    None => {
                        return Err(Error::BasisEscape(format!(
                            "adjoint of {} left the basis",
                            g.id(lambda)
                        )))
                    }
                },
                Err(Error::TruncationExceeded(_)) => columns.push(None),
                Err(e) => return Err(e),
            }
        }
        Ok(MatrixOp::from_columns(self.dim(), columns))
    }

    /// The diagonal projection onto the basis filters containing μ; equals
    /// the product of the generator of μ with its adjoint.
    pub fn range_projection(&self, mu: PathIx) -> MatrixOp {
        MatrixOp::diagonal(self.dim(), |j| self.basis[j].contains(mu))
    }

    /// T_μ T*_ν for a source-matched pair.
    pub fn pair_matrix(&self, mu: PathIx, nu: PathIx) -> Result<MatrixOp> {
        self.generator(mu)?.mul(&self.generator_adjoint(nu)?)
    }

    /// Linear extension of pair_matrix to formal elements.
    pub fn to_matrix(&self, x: &FormalElement) -> Result<MatrixOp> {
        let mut acc = MatrixOp::zero(self.dim());
        for (&(mu, nu), c) in x.terms() {
            acc = acc.add(&self.pair_matrix(mu, nu)?.scale(c))?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_grid, build_parallel_edges, build_sy};
    use num_traits::Zero;

    fn rep(graph: PGraph, flavor: Flavor) -> Representation {
        Representation::new(Arc::new(graph), flavor).unwrap()
    }

    use crate::graph::PGraph;

    #[test]
    fn generators_are_monomial_partial_isometries() {
        let r = rep(build_grid(2, &[2, 2]).unwrap(), Flavor::Filters);
        assert_eq!(r.dim(), 36);
        let g = r.graph().clone();
        for lambda in g.all_paths() {
            let t = r.generator(lambda).unwrap();
            let t_star = r.generator_adjoint(lambda).unwrap();
            // Partial isometry: T T* T = T, and the adjoint is the
            // transpose.
            let ttt = t.mul(&t_star).unwrap().mul(&t).unwrap();
            assert_eq!(ttt, t);
            assert_eq!(t.transpose().unwrap(), t_star);
            // At most one entry per column, all ones.
            for j in 0..r.dim() {
                let nonzero = (0..r.dim())
                    .filter(|&i| !t.entry(i, j).unwrap().is_zero())
                    .count();
                assert!(nonzero <= 1);
            }
        }
    }

    #[test]
    fn vertex_pairs_are_diagonal_projections() {
        let r = rep(build_grid(2, &[2, 2]).unwrap(), Flavor::Filters);
        let g = r.graph().clone();
        for &v in g.vertices() {
            let m = r.pair_matrix(v, v).unwrap();
            assert_eq!(m, r.range_projection(v));
            assert!(m.is_projection().unwrap());
        }
        // (mu, mu) projects onto the filters containing mu; T_mu T*_mu
        // agrees with the direct diagonal construction.
        for mu in g.all_paths() {
            assert_eq!(r.pair_matrix(mu, mu).unwrap(), r.range_projection(mu));
        }
    }

    #[test]
    fn adjoint_formula_matches_inverse_action() {
        let r = rep(build_grid(2, &[2, 2]).unwrap(), Flavor::Filters);
        let g = r.graph().clone();
        for lambda in g.all_paths() {
            let t_star = r.generator_adjoint(lambda).unwrap();
            for (j, u) in r.basis().iter().enumerate() {
                if u.contains(lambda) {
                    let v = crate::filters::act_inv(&g, lambda, u).unwrap();
                    let i = r.basis_index(&v).unwrap();
                    assert_eq!(t_star.entry(i, j).unwrap(), BigRational::one());
                } else {
                    assert!((0..r.dim()).all(|i| t_star.entry(i, j).unwrap().is_zero()));
                }
            }
        }
    }

    #[test]
    fn ultrafilter_flavor_restricts_the_basis() {
        let r = rep(build_grid(2, &[2, 2]).unwrap(), Flavor::Ultrafilters);
        assert_eq!(r.dim(), 9);
        let g = r.graph().clone();
        for lambda in g.all_paths() {
            let t = r.generator(lambda).unwrap();
            assert!(t.is_fully_defined());
        }
        let r = rep(build_parallel_edges(2).unwrap(), Flavor::Ultrafilters);
        assert_eq!(r.dim(), 3);
    }

    #[test]
    fn homomorphism_property_on_generator_pairs() {
        let r = rep(build_grid(2, &[2, 2]).unwrap(), Flavor::Filters);
        let g = r.graph().clone();
        let pairs = g.balanced_pairs();
        for &(mu, nu) in &pairs {
            for &(xi, eta) in &pairs {
                let x = FormalElement::pair(&g, mu, nu).unwrap();
                let y = FormalElement::pair(&g, xi, eta).unwrap();
                let prod = x.mult(&g, &y).unwrap();
                let lhs = r.to_matrix(&x).unwrap().mul(&r.to_matrix(&y).unwrap()).unwrap();
                let rhs = r.to_matrix(&prod).unwrap();
                assert_eq!(lhs, rhs);
                // Adjoint goes to transpose.
                assert_eq!(
                    r.to_matrix(&x.adjoint()).unwrap(),
                    r.to_matrix(&x).unwrap().transpose().unwrap()
                );
            }
        }
    }

    #[test]
    fn nonzero_vertex_generator_on_the_lex_graph() {
        let sy = build_sy(2, 2).unwrap();
        let r = rep(sy, Flavor::Filters);
        let g = r.graph().clone();
        let g0 = g.lookup("g0").unwrap();
        let t = r.generator(g0).unwrap();
        assert!(!t.is_zero_on_defined());
        // All generators are nonzero: every path lies in its own principal
        // filter.
        for lambda in g.all_paths() {
            assert!(!r.generator(lambda).unwrap().is_zero_on_defined());
        }
    }
}
