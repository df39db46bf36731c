//! Formal linear combinations of spanning pairs (μ, ν) with s(μ) = s(ν),
//! with exact rational coefficients.
//!
//! The product is the bilinear extension of
//! (μ, ν)(ξ, η) = Σ_{να = ξβ ∈ MCE(ν, ξ)} (μα, ηβ),
//! the adjoint swaps each pair, and every element decomposes over the
//! grades d(μ)d(ν)⁻¹ in the ambient group. The conditional expectation is
//! compression to the identity grade.

use crate::error::{Error, Result};
use crate::graph::{PGraph, PathIx};
use crate::qlo::GroupWord;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Exact linear combination of source-matched path pairs. Zero terms are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormalElement {
    terms: BTreeMap<(PathIx, PathIx), BigRational>,
}

impl FormalElement {
    pub fn zero() -> FormalElement {
        FormalElement::default()
    }

    /// A single pair with coefficient one.
    pub fn pair(graph: &PGraph, mu: PathIx, nu: PathIx) -> Result<FormalElement> {
        FormalElement::pair_scaled(graph, mu, nu, BigRational::from_integer(1.into()))
    }

    pub fn pair_scaled(
        graph: &PGraph,
        mu: PathIx,
        nu: PathIx,
        coeff: BigRational,
    ) -> Result<FormalElement> {
        if graph.source(mu) != graph.source(nu) {
            return Err(Error::InvalidGraph(format!(
                "pair ({}, {}) does not have matching sources",
                graph.id(mu),
                graph.id(nu)
            )));
        }
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert((mu, nu), coeff);
        }
        Ok(FormalElement { terms })
    }

    pub fn from_terms(
        graph: &PGraph,
        entries: impl IntoIterator<Item = ((PathIx, PathIx), BigRational)>,
    ) -> Result<FormalElement> {
        let mut out = FormalElement::zero();
        for ((mu, nu), c) in entries {
            out = out.add(&FormalElement::pair_scaled(graph, mu, nu, c)?);
        }
        Ok(out)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(PathIx, PathIx), &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &FormalElement) -> FormalElement {
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let e = terms.entry(*k).or_insert_with(BigRational::zero);
            *e += c;
        }
        terms.retain(|_, c| !c.is_zero());
        FormalElement { terms }
    }

    pub fn scale(&self, c: &BigRational) -> FormalElement {
        if c.is_zero() {
            return FormalElement::zero();
        }
        FormalElement {
            terms: self.terms.iter().map(|(k, x)| (*k, x * c)).collect(),
        }
    }

    pub fn sub(&self, other: &FormalElement) -> FormalElement {
        self.add(&other.scale(&BigRational::from_integer((-1).into())))
    }

    /// The adjoint swaps every pair; rational coefficients are self
    /// conjugate.
    pub fn adjoint(&self) -> FormalElement {
        FormalElement {
            terms: self
                .terms
                .iter()
                .map(|(&(mu, nu), c)| ((nu, mu), c.clone()))
                .collect(),
        }
    }

    /// The product by bilinear extension of the MCE expansion. Fails loudly
    /// when a needed minimal common extension lies beyond the truncation
    /// bound rather than returning a partial sum.
    pub fn mult(&self, graph: &PGraph, other: &FormalElement) -> Result<FormalElement> {
        let mut terms: BTreeMap<(PathIx, PathIx), BigRational> = BTreeMap::new();
        for (&(mu, nu), a) in &self.terms {
            for (&(xi, eta), b) in &other.terms {
                let coeff = a * b;
                for lambda in graph.mce(nu, xi)? {
                    let (_, alpha) = graph.factorize(lambda, &graph.degree(nu).clone())?;
                    let (_, beta) = graph.factorize(lambda, &graph.degree(xi).clone())?;
                    let left = graph.compose(mu, alpha)?;
                    let right = graph.compose(eta, beta)?;
                    let e = terms
                        .entry((left, right))
                        .or_insert_with(BigRational::zero);
                    *e += &coeff;
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(FormalElement { terms })
    }

    /// Grade of a single pair: d(μ) d(ν)⁻¹ in the ambient group.
    pub fn pair_grade(graph: &PGraph, mu: PathIx, nu: PathIx) -> GroupWord {
        let gm = graph.degree(mu).to_group_word();
        let gn = graph.degree(nu).to_group_word();
        gm.multiply(&gn.inverse())
    }

    /// Split into homogeneous parts keyed by grade; the parts sum back to
    /// the element.
    pub fn grade_decompose(&self, graph: &PGraph) -> BTreeMap<GroupWord, FormalElement> {
        let mut out: BTreeMap<GroupWord, FormalElement> = BTreeMap::new();
        for (&(mu, nu), c) in &self.terms {
            let g = FormalElement::pair_grade(graph, mu, nu);
            out.entry(g)
                .or_insert_with(FormalElement::zero)
                .terms
                .insert((mu, nu), c.clone());
        }
        out
    }

    /// `Some(grade)` when all terms share one grade (zero counts as
    /// homogeneous of any grade and returns `None`).
    pub fn homogeneous_grade(&self, graph: &PGraph) -> Option<GroupWord> {
        let mut grades = self
            .terms
            .keys()
            .map(|&(mu, nu)| FormalElement::pair_grade(graph, mu, nu));
        let first = grades.next()?;
        if grades.all(|g| g == first) {
            Some(first)
        } else {
            None
        }
    }

    /// Conditional expectation: compression to the identity grade, i.e. the
    /// balanced part d(μ) = d(ν).
    pub fn expectation(&self, graph: &PGraph) -> FormalElement {
        FormalElement {
            terms: self
                .terms
                .iter()
                .filter(|(&(mu, nu), _)| graph.degree(mu) == graph.degree(nu))
                .map(|(k, c)| (*k, c.clone()))
                .collect(),
        }
    }

    pub fn describe(&self, graph: &PGraph) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(&(mu, nu), c)| format!("{c}*({},{})", graph.id(mu), graph.id(nu)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_grid, build_parallel_edges};
    use num_bigint::BigInt;

    fn one() -> BigRational {
        BigRational::from_integer(1.into())
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn adjoint_is_involutive() {
        let g = build_grid(2, &[2, 2]).unwrap();
        let mu = g.lookup("v0_0_d1_0").unwrap();
        let nu = g.lookup("v0_0_d0_1").unwrap();
        // s(mu) = (1,0), s(nu) = (0,1): not source matched.
        assert!(FormalElement::pair(&g, mu, nu).is_err());
        let sq = g.lookup("v0_0_d1_1").unwrap();
        let other = g.lookup("v1_0_d0_1").unwrap();
        assert_eq!(g.source(sq), g.source(other));
        let x = FormalElement::from_terms(
            &g,
            [((sq, other), q(2, 3)), ((sq, sq), q(-1, 2))],
        )
        .unwrap();
        assert_eq!(x.adjoint().adjoint(), x);
        // Balanced diagonal terms are fixed by the adjoint.
        let p = FormalElement::pair(&g, sq, sq).unwrap();
        assert_eq!(p.adjoint(), p);
    }

    #[test]
    fn mult_collapses_along_shared_path() {
        let g = build_grid(2, &[2, 2]).unwrap();
        // (mu, nu)(nu, rho) = (mu, rho) since MCE(nu, nu) = {nu}.
        let mu = g.lookup("v0_0_d1_1").unwrap();
        let nu = g.lookup("v1_0_d0_1").unwrap();
        let rho = g.lookup("v0_1_d1_0").unwrap();
        assert_eq!(g.source(mu), g.source(nu));
        assert_eq!(g.source(nu), g.source(rho));
        let x = FormalElement::pair(&g, mu, nu).unwrap();
        let y = FormalElement::pair(&g, nu, rho).unwrap();
        let expect = FormalElement::pair(&g, mu, rho).unwrap();
        assert_eq!(x.mult(&g, &y).unwrap(), expect);
    }

    #[test]
    fn mult_vanishes_without_common_extension() {
        let g = build_parallel_edges(2).unwrap();
        let e1 = g.lookup("e1").unwrap();
        let e2 = g.lookup("e2").unwrap();
        // MCE(e1, e2) is empty, so the product collapses to zero.
        let x = FormalElement::pair(&g, e1, e1).unwrap();
        let y = FormalElement::pair(&g, e2, e2).unwrap();
        assert!(x.mult(&g, &y).unwrap().is_zero());
    }

    #[test]
    fn mult_through_distinct_edge_types() {
        let g = build_grid(2, &[2, 2]).unwrap();
        // Inner paths e, f are the unit edges at the origin; their unique
        // minimal common extension is the square, giving a single term.
        let e = g.lookup("v0_0_d1_0").unwrap();
        let f = g.lookup("v0_0_d0_1").unwrap();
        let x = FormalElement::pair(&g, g.source(e), e).unwrap();
        let y = FormalElement::pair(&g, f, g.source(f)).unwrap();
        let prod = x.mult(&g, &y).unwrap();
        assert_eq!(prod.len(), 1);
        let (&(left, right), c) = prod.terms().next().unwrap();
        assert_eq!(c, &one());
        // left = s(e) . alpha where e alpha = square; right = s(f) . beta.
        assert_eq!(g.id(left), "v1_0_d0_1");
        assert_eq!(g.id(right), "v0_1_d1_0");
    }

    #[test]
    fn grades_and_expectation() {
        let g = build_grid(2, &[2, 2]).unwrap();
        let sq = g.lookup("v0_0_d1_1").unwrap();
        let e = g.lookup("v0_0_d1_0").unwrap();
        let s_e = g.source(e);
        // Balanced element: single grade at the identity.
        let bal = FormalElement::pair(&g, sq, sq).unwrap();
        let dec = bal.grade_decompose(&g);
        assert_eq!(dec.len(), 1);
        assert!(dec.keys().next().unwrap().is_identity());
        assert_eq!(bal.expectation(&g), bal);
        // (mu, s(mu)) has grade d(mu).
        let unbal = FormalElement::pair(&g, e, s_e).unwrap();
        let grade = unbal.homogeneous_grade(&g).unwrap();
        assert_eq!(grade, g.degree(e).to_group_word());
        assert!(unbal.expectation(&g).is_zero());
        // Mixed element keeps only balanced terms.
        let mixed = bal.add(&unbal);
        assert_eq!(mixed.expectation(&g), bal);
        assert_eq!(
            mixed.expectation(&g).expectation(&g),
            mixed.expectation(&g)
        );
    }

    #[test]
    fn product_of_homogeneous_parts_is_homogeneous() {
        let g = build_grid(2, &[2, 2]).unwrap();
        let pairs = g.source_pairs();
        // All homogeneous pairs of small elements multiply into the product
        // grade.
        for &(m1, n1) in pairs.iter().take(60) {
            for &(m2, n2) in pairs.iter().take(60) {
                let x = FormalElement::pair(&g, m1, n1).unwrap();
                let y = FormalElement::pair(&g, m2, n2).unwrap();
                let prod = x.mult(&g, &y).unwrap();
                if prod.is_zero() {
                    continue;
                }
                let gx = x.homogeneous_grade(&g).unwrap();
                let gy = y.homogeneous_grade(&g).unwrap();
                assert_eq!(
                    prod.homogeneous_grade(&g).unwrap(),
                    gx.multiply(&gy),
                    "grade of product of ({},{}) and ({},{})",
                    g.id(m1),
                    g.id(n1),
                    g.id(m2),
                    g.id(n2)
                );
            }
        }
    }
}
