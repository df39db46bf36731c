//! Filters and ultrafilters of a P-graph, and the path actions on them.
//!
//! A filter is a nonempty path set that is closed under prefixes (F1) and
//! upward directed (F2). Over a finite path table every filter is the
//! prefix set of its unique maximal element, so filters are stored as the
//! sorted prefix set together with that top element and the root vertex.
//! On truncated graphs maximality can only be certified within the bound,
//! which is reported as a status distinct from true maximality.

use crate::error::{Error, Result};
use crate::graph::{PGraph, PathIx};
use std::collections::BTreeSet;
use std::fmt;

/// A filter, stored extensionally in canonical path order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Filter {
    elements: Vec<PathIx>,
    root: PathIx,
    top: PathIx,
}

impl Filter {
    /// Validate (F1), (F2), the unique-root property and the MCE trace
    /// condition eagerly, and locate the maximal element.
    pub fn from_set(graph: &PGraph, set: &BTreeSet<PathIx>) -> Result<Filter> {
        if set.is_empty() {
            return Err(Error::InvalidFilter("a filter is nonempty".into()));
        }
        // (F1): closed under prefixes.
        for &mu in set {
            for &pre in graph.prefixes(mu) {
                if !set.contains(&pre) {
                    return Err(Error::InvalidFilter(format!(
                        "prefix {} of {} is missing",
                        graph.id(pre),
                        graph.id(mu)
                    )));
                }
            }
        }
        // (F2): upward directed, witnessed inside the set.
        for &mu in set {
            for &nu in set {
                let ok = set
                    .iter()
                    .any(|&l| graph.is_prefix(mu, l) && graph.is_prefix(nu, l));
                if !ok {
                    return Err(Error::InvalidFilter(format!(
                        "{} and {} have no common extension inside the set",
                        graph.id(mu),
                        graph.id(nu)
                    )));
                }
            }
        }
        // Exactly one vertex, and every element is rooted there.
        let vertices: Vec<PathIx> = set
            .iter()
            .copied()
            .filter(|&p| graph.is_vertex(p))
            .collect();
        if vertices.len() != 1 {
            return Err(Error::InvalidFilter(format!(
                "{} vertices in the set",
                vertices.len()
            )));
        }
        let root = vertices[0];
        if set.iter().any(|&p| graph.range(p) != root) {
            return Err(Error::InvalidFilter(
                "element rooted away from the filter root".into(),
            ));
        }
        // Maximal element: dominates every member.
        let top = set
            .iter()
            .copied()
            .find(|&t| set.iter().all(|&m| graph.is_prefix(m, t)))
            .ok_or_else(|| Error::InvalidFilter("no maximal element".into()))?;
        // MCE trace: at most one minimal common extension of any two members
        // lies inside, and on finite graphs exactly one.
        for &mu in set {
            for &nu in set {
                let mces = graph.mce(mu, nu)?;
                let inside = mces.iter().filter(|l| set.contains(l)).count();
                if inside > 1 || (graph.is_finite() && inside != 1) {
                    return Err(Error::InvalidFilter(format!(
                        "{} minimal common extensions of {} and {} lie inside",
                        inside,
                        graph.id(mu),
                        graph.id(nu)
                    )));
                }
            }
        }
        Ok(Filter {
            elements: set.iter().copied().collect(),
            root,
            top,
        })
    }

    pub fn elements(&self) -> &[PathIx] {
        &self.elements
    }

    pub fn root(&self) -> PathIx {
        self.root
    }

    /// The maximal element; the filter is its prefix set.
    pub fn top(&self) -> PathIx {
        self.top
    }

    pub fn contains(&self, p: PathIx) -> bool {
        self.elements.binary_search(&p).is_ok()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn describe(&self, graph: &PGraph) -> String {
        format!(
            "{{{}}}",
            self.elements
                .iter()
                .map(|&p| graph.id(p))
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "filter(top #{})", self.top)
    }
}

/// Maximality status of a filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UltraStatus {
    /// Maximal among all filters (finite graphs only).
    Ultra,
    /// Maximal among the filters visible within the truncation bound.
    MaximalWithinBound,
    NotMaximal,
}

/// The filter space of a graph: every filter in canonical order with its
/// maximality status.
#[derive(Debug, Clone)]
pub struct FilterSpace {
    pub filters: Vec<Filter>,
    pub status: Vec<UltraStatus>,
    pub truncated: bool,
}

impl FilterSpace {
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Filter, UltraStatus)> {
        self.filters.iter().zip(self.status.iter().copied())
    }
}

/// The prefix set of μ: the smallest filter containing μ.
pub fn principal_filter(graph: &PGraph, mu: PathIx) -> Filter {
    let set: BTreeSet<PathIx> = graph.prefixes(mu).iter().copied().collect();
    Filter::from_set(graph, &set).expect("prefix sets are filters")
}

/// Does the set satisfy (F1) and (F2) and is it nonempty?
pub fn is_filter(graph: &PGraph, set: &BTreeSet<PathIx>) -> bool {
    Filter::from_set(graph, set).is_ok()
}

fn extendable_tops(graph: &PGraph) -> Vec<bool> {
    let mut out = vec![false; graph.len()];
    for lambda in graph.all_paths() {
        for &pre in graph.prefixes(lambda) {
            if pre != lambda {
                out[pre as usize] = true;
            }
        }
    }
    out
}

/// Is U maximal among all filters? Only decidable for finite graphs; for a
/// truncated graph use `maximality` which reports bound-relative status.
pub fn is_ultrafilter(graph: &PGraph, filter: &Filter) -> Result<bool> {
    if !graph.is_finite() {
        return Err(Error::NotFinite(
            "maximality is undecidable under truncation; use `maximality`".into(),
        ));
    }
    Ok(maximality(graph, filter) == UltraStatus::Ultra)
}

/// Maximality status: a filter is maximal exactly when its top path has no
/// proper extension in the table, which over a finite table is the same as
/// attempting to adjoin each missing path and re-close.
pub fn maximality(graph: &PGraph, filter: &Filter) -> UltraStatus {
    let top = filter.top();
    let extendable = graph
        .all_paths()
        .any(|l| l != top && graph.is_prefix(top, l));
    if extendable {
        UltraStatus::NotMaximal
    } else if graph.is_finite() {
        UltraStatus::Ultra
    } else {
        UltraStatus::MaximalWithinBound
    }
}

/// All filters of the graph (every filter over a finite table is the prefix
/// set of its top path), optionally restricted to the maximal ones.
pub fn enumerate_filters(
    graph: &PGraph,
    ultra_only: bool,
    cap: Option<usize>,
) -> Result<FilterSpace> {
    if let Some(cap) = cap {
        if graph.len() > cap {
            return Err(Error::CapExceeded(format!(
                "{} filters exceed the cap {cap}",
                graph.len()
            )));
        }
    }
    let extendable = extendable_tops(graph);
    let mut filters = Vec::new();
    let mut status = Vec::new();
    for top in graph.all_paths() {
        let st = if extendable[top as usize] {
            UltraStatus::NotMaximal
        } else if graph.is_finite() {
            UltraStatus::Ultra
        } else {
            UltraStatus::MaximalWithinBound
        };
        if ultra_only && st == UltraStatus::NotMaximal {
            continue;
        }
        filters.push(principal_filter(graph, top));
        status.push(st);
    }
    Ok(FilterSpace {
        filters,
        status,
        truncated: !graph.is_finite(),
    })
}

/// Deterministically extend U to a maximal filter: repeatedly adjoin the
/// canonically least path that admits a common extension with the current
/// top, re-closing each time, until nothing can be added. On truncated
/// graphs the result is maximal within the bound.
pub fn ultrafilter_extend(graph: &PGraph, filter: &Filter) -> Result<Filter> {
    let mut current = filter.clone();
    'grow: loop {
        for p in graph.all_paths() {
            if current.contains(p) {
                continue;
            }
            let mces = match graph.mce(current.top(), p) {
                Ok(m) => m,
                Err(Error::TruncationExceeded(_)) => continue,
                Err(e) => return Err(e),
            };
            if let Some(&z) = mces.first() {
                current = principal_filter(graph, z);
                continue 'grow;
            }
        }
        return Ok(current);
    }
}

/// The action λ·U: prefix sets transported along composition with λ.
/// Defined when r(U) = s(λ); contains λ; sends maximal filters to maximal
/// filters.
pub fn act(graph: &PGraph, lambda: PathIx, filter: &Filter) -> Result<Filter> {
    if filter.root() != graph.source(lambda) {
        return Err(Error::RootMismatch(format!(
            "root {} differs from the source of {}",
            graph.id(filter.root()),
            graph.id(lambda)
        )));
    }
    let new_top = graph.compose(lambda, filter.top())?;
    let out = principal_filter(graph, new_top);
    debug_assert!(out.contains(lambda));
    Ok(out)
}

/// The inverse action λ*·V = {μ : λμ ∈ V}. Defined when λ ∈ V.
pub fn act_inv(graph: &PGraph, lambda: PathIx, filter: &Filter) -> Result<Filter> {
    if !filter.contains(lambda) {
        return Err(Error::NotInFilter(graph.id(lambda).to_string()));
    }
    let d = graph.degree(lambda).clone();
    let (first, tail) = graph.factorize(filter.top(), &d)?;
    if first != lambda {
        return Err(Error::InvalidGraph(format!(
            "{} and {} are distinct prefixes of {} at the same degree",
            graph.id(first),
            graph.id(lambda),
            graph.id(filter.top())
        )));
    }
    Ok(principal_filter(graph, tail))
}

/// For μ in a maximal filter U and a finite exhaustive E at s(μ), produce
/// α ∈ E with μα ∈ U. Failure to find one falsifies the supporting lemma
/// and is reported as an error.
pub fn fe_witness(
    graph: &PGraph,
    mu: PathIx,
    exhaustive_set: &[PathIx],
    filter: &Filter,
) -> Result<PathIx> {
    if !filter.contains(mu) {
        return Err(Error::NotInFilter(graph.id(mu).to_string()));
    }
    for &alpha in exhaustive_set {
        if graph.range(alpha) != graph.source(mu) {
            return Err(Error::RootMismatch(format!(
                "{} does not start at the source of {}",
                graph.id(alpha),
                graph.id(mu)
            )));
        }
    }
    for &alpha in exhaustive_set {
        match graph.compose_entry(mu, alpha) {
            Some(crate::graph::ComposeEntry::Path(c)) if filter.contains(c) => {
                return Ok(alpha);
            }
            _ => {}
        }
    }
    Err(Error::NoWitness(format!(
        "no member of the exhaustive set extends {} inside the filter",
        graph.id(mu)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_grid, build_interval, build_parallel_edges, build_sy};
    use crate::graph::Exhaustive;

    fn grid3() -> PGraph {
        build_grid(2, &[2, 2]).unwrap()
    }

    #[test]
    fn principal_filter_examples() {
        let g = grid3();
        let v = g.lookup("v0_0").unwrap();
        let pf = principal_filter(&g, v);
        assert_eq!(pf.elements(), &[v]);
        let sq = g.lookup("v0_0_d1_1").unwrap();
        let pf = principal_filter(&g, sq);
        assert_eq!(pf.len(), 4);
        for &p in pf.elements() {
            assert!(g.is_prefix(p, sq));
        }
        assert_eq!(pf.top(), sq);
        assert_eq!(pf.root(), v);
    }

    #[test]
    fn principal_filter_on_sy() {
        let g = build_sy(2, 2).unwrap();
        let g02 = g.lookup("g0_2").unwrap();
        let pf = principal_filter(&g, g02);
        let ids: Vec<&str> = pf.elements().iter().map(|&p| g.id(p)).collect();
        assert_eq!(ids, vec!["g0", "g0_1", "g0_2"]);
    }

    #[test]
    fn is_filter_examples() {
        let g = build_parallel_edges(2).unwrap();
        assert!(!is_filter(&g, &BTreeSet::new()));
        let v = g.lookup("v").unwrap();
        let e1 = g.lookup("e1").unwrap();
        let e2 = g.lookup("e2").unwrap();
        // Two parallel edges cannot live in one filter: (F2) fails.
        let set: BTreeSet<PathIx> = [v, e1, e2].into_iter().collect();
        assert!(!is_filter(&g, &set));
        for p in g.all_paths() {
            let set: BTreeSet<PathIx> =
                principal_filter(&g, p).elements().iter().copied().collect();
            assert!(is_filter(&g, &set));
        }
        // (F1) failure: an edge without its range vertex.
        let set: BTreeSet<PathIx> = [e1].into_iter().collect();
        assert!(!is_filter(&g, &set));
    }

    #[test]
    fn filters_match_subset_oracle_on_small_graphs() {
        // Exhaustive check over all subsets: the filters are exactly the
        // principal prefix sets.
        for g in [build_interval(1).unwrap(), build_parallel_edges(2).unwrap()] {
            let n = g.len();
            let mut found: Vec<BTreeSet<PathIx>> = Vec::new();
            for mask in 1u32..(1 << n) {
                let set: BTreeSet<PathIx> =
                    (0..n as PathIx).filter(|p| mask & (1 << p) != 0).collect();
                if is_filter(&g, &set) {
                    found.push(set);
                }
            }
            let mut expected: Vec<BTreeSet<PathIx>> = g
                .all_paths()
                .map(|p| principal_filter(&g, p).elements().iter().copied().collect())
                .collect();
            expected.sort();
            found.sort();
            assert_eq!(found, expected);
        }
    }

    #[test]
    fn interval_one_graph_filter_space() {
        // v --e--> w: filters {v}, {w}, {v,e}; ultrafilters {w}, {v,e}.
        let g = build_interval(1).unwrap();
        let space = enumerate_filters(&g, false, None).unwrap();
        assert_eq!(space.len(), 3);
        let ultra: Vec<&Filter> = space
            .iter()
            .filter(|(_, s)| *s == UltraStatus::Ultra)
            .map(|(f, _)| f)
            .collect();
        assert_eq!(ultra.len(), 2);
        let v0 = g.lookup("v0").unwrap();
        let v1 = g.lookup("v1").unwrap();
        let e = g.lookup("v0_d1").unwrap();
        assert!(ultra.iter().any(|f| f.elements() == [v1]));
        assert!(ultra.iter().any(|f| {
            let mut want = vec![v0, e];
            want.sort();
            f.elements() == want
        }));
    }

    #[test]
    fn every_path_lies_in_an_ultrafilter() {
        let g = grid3();
        let space = enumerate_filters(&g, true, None).unwrap();
        for p in g.all_paths() {
            assert!(
                space.iter().any(|(f, _)| f.contains(p)),
                "path {} in no ultrafilter",
                g.id(p)
            );
        }
        // Grid ultrafilters are the corner-to-corner prefix sets: one per
        // root vertex.
        assert_eq!(space.len(), 9);
    }

    #[test]
    fn is_ultrafilter_examples() {
        let g = grid3();
        let v = g.lookup("v0_0").unwrap();
        assert!(!is_ultrafilter(&g, &principal_filter(&g, v)).unwrap());
        let big = g.lookup("v0_0_d2_2").unwrap();
        assert!(is_ultrafilter(&g, &principal_filter(&g, big)).unwrap());
        let sy = build_sy(2, 2).unwrap();
        let top = sy.lookup("g0_2").unwrap();
        assert!(is_ultrafilter(&sy, &principal_filter(&sy, top)).is_err());
        assert_eq!(
            maximality(&sy, &principal_filter(&sy, top)),
            UltraStatus::MaximalWithinBound
        );
    }

    #[test]
    fn ultrafilter_extend_examples() {
        let g = build_interval(1).unwrap();
        let v0 = g.lookup("v0").unwrap();
        let e = g.lookup("v0_d1").unwrap();
        let extended = ultrafilter_extend(&g, &principal_filter(&g, v0)).unwrap();
        assert_eq!(extended, principal_filter(&g, e));
        // Already-maximal filters stay put.
        let again = ultrafilter_extend(&g, &extended).unwrap();
        assert_eq!(again, extended);
        // The vertex filter at g0 grows to the whole inner column.
        let sy = build_sy(2, 2).unwrap();
        let g0 = sy.lookup("g0").unwrap();
        let grown = ultrafilter_extend(&sy, &principal_filter(&sy, g0)).unwrap();
        let ids: Vec<&str> = grown.elements().iter().map(|&p| sy.id(p)).collect();
        assert_eq!(ids, vec!["g0", "g0_1", "g0_2"]);
        assert_eq!(maximality(&sy, &grown), UltraStatus::MaximalWithinBound);
    }

    #[test]
    fn act_examples() {
        let g = grid3();
        // act(v, U) = U at the root.
        let space = enumerate_filters(&g, false, None).unwrap();
        for (f, _) in space.iter() {
            assert_eq!(act(&g, f.root(), f).unwrap(), *f);
            assert_eq!(act_inv(&g, f.root(), f).unwrap(), *f);
        }
        // act(e, principal(s(e))) = principal(e) and the general form.
        for lambda in g.all_paths() {
            let u = principal_filter(&g, g.source(lambda));
            assert_eq!(
                act(&g, lambda, &u).unwrap(),
                principal_filter(&g, lambda)
            );
            for mu in g.all_paths() {
                if g.range(mu) == g.source(lambda) {
                    let got = act(&g, lambda, &principal_filter(&g, mu)).unwrap();
                    let want = principal_filter(&g, g.compose(lambda, mu).unwrap());
                    assert_eq!(got, want);
                }
            }
        }
        // Root mismatch is rejected.
        let e = g.lookup("v0_0_d1_0").unwrap();
        let bad = principal_filter(&g, g.lookup("v0_0").unwrap());
        assert!(matches!(act(&g, e, &bad), Err(Error::RootMismatch(_))));
    }

    #[test]
    fn act_roundtrips_and_preserve_maximality() {
        let g = grid3();
        let space = enumerate_filters(&g, false, None).unwrap();
        for (u, _) in space.iter() {
            for lambda in g.all_paths() {
                if g.source(lambda) == u.root() {
                    let v = act(&g, lambda, u).unwrap();
                    assert!(v.contains(lambda));
                    assert_eq!(act_inv(&g, lambda, &v).unwrap(), *u);
                    assert_eq!(
                        is_ultrafilter(&g, &v).unwrap(),
                        is_ultrafilter(&g, u).unwrap()
                    );
                }
                if u.contains(lambda) {
                    let w = act_inv(&g, lambda, u).unwrap();
                    assert_eq!(act(&g, lambda, &w).unwrap(), *u);
                    assert_eq!(
                        is_ultrafilter(&g, &w).unwrap(),
                        is_ultrafilter(&g, u).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn act_inv_principal_gives_source_filter() {
        let g = grid3();
        for lambda in g.all_paths() {
            let v = principal_filter(&g, lambda);
            assert_eq!(
                act_inv(&g, lambda, &v).unwrap(),
                principal_filter(&g, g.source(lambda))
            );
        }
        let e = g.lookup("v0_0_d1_0").unwrap();
        let u = principal_filter(&g, g.lookup("v0_1").unwrap());
        assert!(matches!(act_inv(&g, e, &u), Err(Error::NotInFilter(_))));
    }

    #[test]
    fn fe_witness_on_grid() {
        let g = grid3();
        let ultra = enumerate_filters(&g, true, None).unwrap();
        // E = {s(mu)} always returns s(mu).
        for (u, _) in ultra.iter() {
            for &mu in u.elements() {
                let s = g.source(mu);
                assert_eq!(fe_witness(&g, mu, &[s], u).unwrap(), s);
            }
        }
        // The two unit edges at the origin: the witness is the edge the
        // ultrafilter contains.
        let v = g.lookup("v0_0").unwrap();
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        assert_eq!(g.is_exhaustive(v, &[e1, f1]).unwrap(), Exhaustive::Yes);
        for (u, _) in ultra.iter() {
            if u.root() == v {
                let alpha = fe_witness(&g, v, &[e1, f1], u).unwrap();
                assert!(u.contains(alpha));
            }
        }
    }
}
