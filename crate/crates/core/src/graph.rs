//! Finitely aligned P-graphs.
//!
//! A P-graph is a countable category with a degree functor into P satisfying
//! the factorisation property: every morphism factors uniquely along every
//! splitting of its degree. Here a graph is stored extensionally: a finite
//! table of paths (either the whole graph or a truncation of an infinite
//! graph at an explicit degree bound) together with the full composition
//! table on in-bound pairs. Compositions whose result would leave the bound
//! are recorded explicitly and every operation that would need them fails
//! loudly instead of guessing.

use crate::error::{Error, Result};
use crate::qlo::{DegreeBound, GroupElement, JoinResult, Qlo};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

/// Index of a path in the canonical path table of a graph.
pub type PathIx = u32;

/// One path of the graph. Range and source point at vertex paths.
#[derive(Debug, Clone)]
pub struct PathData {
    pub id: String,
    pub range: PathIx,
    pub source: PathIx,
    pub degree: GroupElement,
}

/// Whether the table is the whole graph or a truncation.
#[derive(Debug, Clone)]
pub enum GraphMode {
    Finite,
    Truncated(DegreeBound),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComposeEntry {
    Path(PathIx),
    /// The pair is composable but the composite lies outside the bound.
    OutOfBound,
}

/// Raw path description used to build a graph.
#[derive(Debug, Clone)]
pub struct RawPath {
    pub id: String,
    pub range: String,
    pub source: String,
    pub degree: GroupElement,
}

/// Raw composition entry: `first . second = result`, or an out-of-bound
/// marker when `result` is `None`.
#[derive(Debug, Clone)]
pub struct RawCompose {
    pub first: String,
    pub second: String,
    pub result: Option<String>,
}

/// A single axiom violation found by `validate`.
#[derive(Debug, Clone)]
pub struct Violation {
    pub rule: String,
    pub witness: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.witness)
    }
}

/// Output of `validate`.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub checks_run: usize,
    /// Checks skipped because the truncation bound hid the needed data.
    pub skipped: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tri-state answer of the exhaustiveness test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exhaustive {
    Yes,
    No(PathIx),
    UnknownUpTo(String),
}

/// A finitely aligned P-graph held as an explicit path table.
#[derive(Debug, Clone)]
pub struct PGraph {
    qlo: Qlo,
    mode: GraphMode,
    paths: Vec<PathData>,
    id_index: HashMap<String, PathIx>,
    vertices: Vec<PathIx>,
    compose_tbl: HashMap<(PathIx, PathIx), ComposeEntry>,
    prefixes: Vec<Vec<PathIx>>,
    factor_map: HashMap<(PathIx, GroupElement), Vec<(PathIx, PathIx)>>,
    by_degree: BTreeMap<GroupElement, Vec<PathIx>>,
    at_range: HashMap<PathIx, Vec<PathIx>>,
    at_source: HashMap<PathIx, Vec<PathIx>>,
    range_degree: HashMap<(PathIx, GroupElement), Vec<PathIx>>,
}

impl PGraph {
    /// Build a graph from raw parts. Identity compositions v·μ = μ and
    /// μ·s(μ) = μ are filled in automatically unless the caller provided an
    /// entry for that pair (so tests can inject deliberate faults). No axiom
    /// checking happens here; that is `validate`'s job.
    pub fn from_parts(
        qlo: Qlo,
        mode: GraphMode,
        raw_paths: Vec<RawPath>,
        raw_compose: Vec<RawCompose>,
    ) -> Result<PGraph> {
        PGraph::from_parts_with_prefixes(qlo, mode, raw_paths, raw_compose, Vec::new())
    }

    /// Like `from_parts`, but with extra prefix facts λ ⪯ μ supplied by a
    /// builder that can decide the genuine prefix order even where the
    /// complement path is hidden by the truncation bound.
    pub fn from_parts_with_prefixes(
        qlo: Qlo,
        mode: GraphMode,
        raw_paths: Vec<RawPath>,
        raw_compose: Vec<RawCompose>,
        extra_prefixes: Vec<(String, String)>,
    ) -> Result<PGraph> {
        let mut sorted = raw_paths;
        sorted.sort_by(|a, b| (&a.degree, &a.id).cmp(&(&b.degree, &b.id)));

        let mut id_index = HashMap::new();
        for (ix, rp) in sorted.iter().enumerate() {
            if id_index.insert(rp.id.clone(), ix as PathIx).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate path id {}", rp.id)));
            }
        }

        let identity = qlo.identity();
        let vertex_of = |name: &str| -> Result<PathIx> {
            let ix = *id_index
                .get(name)
                .ok_or_else(|| Error::UnknownVertex(name.to_string()))?;
            if sorted[ix as usize].degree != identity {
                return Err(Error::UnknownVertex(format!(
                    "{name} is a path of nonzero degree, not a vertex"
                )));
            }
            Ok(ix)
        };

        let mut paths = Vec::with_capacity(sorted.len());
        for rp in &sorted {
            paths.push(PathData {
                id: rp.id.clone(),
                range: vertex_of(&rp.range)?,
                source: vertex_of(&rp.source)?,
                degree: rp.degree.clone(),
            });
        }

        let vertices: Vec<PathIx> = paths
            .iter()
            .enumerate()
            .filter(|(_, p)| p.degree == identity)
            .map(|(i, _)| i as PathIx)
            .collect();

        let mut compose_tbl: HashMap<(PathIx, PathIx), ComposeEntry> = HashMap::new();
        for rc in &raw_compose {
            let a = *id_index
                .get(&rc.first)
                .ok_or_else(|| Error::UnknownPath(rc.first.clone()))?;
            let b = *id_index
                .get(&rc.second)
                .ok_or_else(|| Error::UnknownPath(rc.second.clone()))?;
            let entry = match &rc.result {
                Some(r) => ComposeEntry::Path(
                    *id_index.get(r).ok_or_else(|| Error::UnknownPath(r.clone()))?,
                ),
                None => ComposeEntry::OutOfBound,
            };
            compose_tbl.insert((a, b), entry);
        }
        for (ix, p) in paths.iter().enumerate() {
            let ix = ix as PathIx;
            compose_tbl
                .entry((p.range, ix))
                .or_insert(ComposeEntry::Path(ix));
            compose_tbl
                .entry((ix, p.source))
                .or_insert(ComposeEntry::Path(ix));
        }

        let mut one_step: Vec<HashSet<PathIx>> = vec![HashSet::new(); paths.len()];
        for (ix, p) in paths.iter().enumerate() {
            one_step[ix].insert(ix as PathIx);
            one_step[ix].insert(p.range);
        }
        for (pre, whole) in &extra_prefixes {
            let a = *id_index
                .get(pre)
                .ok_or_else(|| Error::UnknownPath(pre.clone()))?;
            let b = *id_index
                .get(whole)
                .ok_or_else(|| Error::UnknownPath(whole.clone()))?;
            one_step[b as usize].insert(a);
        }
        let mut factor_map: HashMap<(PathIx, GroupElement), Vec<(PathIx, PathIx)>> =
            HashMap::new();
        for ((a, b), entry) in &compose_tbl {
            if let ComposeEntry::Path(c) = entry {
                one_step[*c as usize].insert(*a);
                let key = (*c, paths[*a as usize].degree.clone());
                let fs = factor_map.entry(key).or_default();
                if !fs.contains(&(*a, *b)) {
                    fs.push((*a, *b));
                }
            }
        }
        for fs in factor_map.values_mut() {
            fs.sort();
        }
        // Take the transitive closure of the one-step prefix relation. When
        // the truncation bound is not prefix-monotone (the lexicographic
        // instance), a prefix chain can stay in bound even though the direct
        // complement does not, so the closure sees strictly more than single
        // factorisations do. The canonical order is a linear extension of
        // the prefix order, so one pass in index order suffices.
        let mut prefixes: Vec<Vec<PathIx>> = Vec::with_capacity(paths.len());
        for ix in 0..paths.len() {
            let mut closed: HashSet<PathIx> = HashSet::new();
            for &a in &one_step[ix] {
                if (a as usize) < ix {
                    closed.extend(prefixes[a as usize].iter().copied());
                }
                closed.insert(a);
            }
            let mut v: Vec<PathIx> = closed.into_iter().collect();
            v.sort();
            prefixes.push(v);
        }

        let mut by_degree: BTreeMap<GroupElement, Vec<PathIx>> = BTreeMap::new();
        let mut at_range: HashMap<PathIx, Vec<PathIx>> = HashMap::new();
        let mut at_source: HashMap<PathIx, Vec<PathIx>> = HashMap::new();
        let mut range_degree: HashMap<(PathIx, GroupElement), Vec<PathIx>> = HashMap::new();
        for (ix, p) in paths.iter().enumerate() {
            let ix = ix as PathIx;
            by_degree.entry(p.degree.clone()).or_default().push(ix);
            at_range.entry(p.range).or_default().push(ix);
            at_source.entry(p.source).or_default().push(ix);
            range_degree
                .entry((p.range, p.degree.clone()))
                .or_default()
                .push(ix);
        }

        Ok(PGraph {
            qlo,
            mode,
            paths,
            id_index,
            vertices,
            compose_tbl,
            prefixes,
            factor_map,
            by_degree,
            at_range,
            at_source,
            range_degree,
        })
    }

    pub fn qlo(&self) -> Qlo {
        self.qlo
    }

    pub fn mode(&self) -> &GraphMode {
        &self.mode
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.mode, GraphMode::Finite)
    }

    pub fn bound(&self) -> Option<&DegreeBound> {
        match &self.mode {
            GraphMode::Finite => None,
            GraphMode::Truncated(b) => Some(b),
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path(&self, ix: PathIx) -> &PathData {
        &self.paths[ix as usize]
    }

    pub fn id(&self, ix: PathIx) -> &str {
        &self.paths[ix as usize].id
    }

    pub fn degree(&self, ix: PathIx) -> &GroupElement {
        &self.paths[ix as usize].degree
    }

    pub fn range(&self, ix: PathIx) -> PathIx {
        self.paths[ix as usize].range
    }

    pub fn source(&self, ix: PathIx) -> PathIx {
        self.paths[ix as usize].source
    }

    pub fn is_vertex(&self, ix: PathIx) -> bool {
        self.paths[ix as usize].degree.is_identity()
    }

    pub fn lookup(&self, id: &str) -> Result<PathIx> {
        self.id_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownPath(id.to_string()))
    }

    pub fn all_paths(&self) -> impl Iterator<Item = PathIx> + '_ {
        (0..self.paths.len()).map(|i| i as PathIx)
    }

    pub fn vertices(&self) -> &[PathIx] {
        &self.vertices
    }

    /// vΛ: enumerated paths with range v.
    pub fn at_range(&self, v: PathIx) -> &[PathIx] {
        self.at_range.get(&v).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Λv: enumerated paths with source v.
    pub fn at_source(&self, v: PathIx) -> &[PathIx] {
        self.at_source.get(&v).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Λᵖ: enumerated paths of degree p.
    pub fn by_degree(&self, d: &GroupElement) -> &[PathIx] {
        self.by_degree.get(d).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn degrees(&self) -> impl Iterator<Item = &GroupElement> {
        self.by_degree.keys()
    }

    /// vΛᵖ: paths with range v and degree p.
    pub fn at_range_degree(&self, v: PathIx, d: &GroupElement) -> &[PathIx] {
        self.range_degree
            .get(&(v, d.clone()))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// The composite μν; fails loudly on non-composable pairs and on
    /// composites hidden by the truncation bound.
    pub fn compose(&self, a: PathIx, b: PathIx) -> Result<PathIx> {
        match self.compose_tbl.get(&(a, b)) {
            Some(ComposeEntry::Path(c)) => Ok(*c),
            Some(ComposeEntry::OutOfBound) => Err(Error::TruncationExceeded(format!(
                "composite {} . {} lies outside the bound",
                self.id(a),
                self.id(b)
            ))),
            None => {
                if self.source(a) == self.range(b) {
                    Err(Error::InvalidGraph(format!(
                        "composable pair {} . {} has no table entry",
                        self.id(a),
                        self.id(b)
                    )))
                } else {
                    Err(Error::NotComposable(
                        self.id(a).to_string(),
                        self.id(b).to_string(),
                    ))
                }
            }
        }
    }

    pub fn compose_entry(&self, a: PathIx, b: PathIx) -> Option<ComposeEntry> {
        self.compose_tbl.get(&(a, b)).copied()
    }

    /// The unique factorisation λ = μν with d(μ) = p.
    pub fn factorize(&self, lambda: PathIx, p: &GroupElement) -> Result<(PathIx, PathIx)> {
        let d = self.degree(lambda);
        if !p.leq(d)? {
            return Err(Error::NotLowerBound(p.to_string(), d.to_string()));
        }
        match self.factor_map.get(&(lambda, p.clone())) {
            Some(fs) if fs.len() == 1 => Ok(fs[0]),
            Some(fs) if fs.len() > 1 => Err(Error::AmbiguousFactorisation {
                path: self.id(lambda).to_string(),
                degree: p.to_string(),
            }),
            _ => {
                if self.is_finite() {
                    Err(Error::MissingFactorisation {
                        path: self.id(lambda).to_string(),
                        degree: p.to_string(),
                    })
                } else {
                    Err(Error::TruncationExceeded(format!(
                        "no in-bound factorisation of {} at degree {}",
                        self.id(lambda),
                        p
                    )))
                }
            }
        }
    }

    /// μ ⪯ λ relative to the enumerated data: witnessed by an in-bound
    /// complement, a chain of them, or a builder-supplied fact hidden by
    /// the bound.
    pub fn is_prefix(&self, mu: PathIx, lambda: PathIx) -> bool {
        self.prefixes[lambda as usize].binary_search(&mu).is_ok()
    }

    /// All in-bound prefixes of λ, in canonical order.
    pub fn prefixes(&self, lambda: PathIx) -> &[PathIx] {
        &self.prefixes[lambda as usize]
    }

    /// Minimal common extensions: all λ with d(λ) = d(μ) ∨ d(ν) extending
    /// both μ and ν. Scans the paths of the join degree and tests the two
    /// prefix conditions, so chains of in-bound factorisations count as
    /// extensions even when the direct complement is out of bound.
    pub fn mce(&self, mu: PathIx, nu: PathIx) -> Result<Vec<PathIx>> {
        let j = match self.degree(mu).join(self.degree(nu))? {
            JoinResult::Infinity => return Ok(Vec::new()),
            JoinResult::Element(j) => j,
        };
        if let Some(bound) = self.bound() {
            if !bound.contains(&j) {
                return Err(Error::TruncationExceeded(format!(
                    "degree {} of MCE({}, {}) is out of bound",
                    j,
                    self.id(mu),
                    self.id(nu)
                )));
            }
        }
        let mut out = Vec::new();
        for &lambda in self.by_degree(&j) {
            if self.is_prefix(mu, lambda) && self.is_prefix(nu, lambda) {
                out.push(lambda);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Second route to the same set: extend μ along every in-bound tail of
    /// the quotient degree and keep the extensions of ν. Agrees with `mce`
    /// whenever the truncation bound is prefix-monotone (always on finite
    /// graphs); the acceptance sweeps cross-check the two routes.
    pub fn mce_via_extension(&self, mu: PathIx, nu: PathIx) -> Result<Vec<PathIx>> {
        let dm = self.degree(mu).clone();
        let j = match dm.join(self.degree(nu))? {
            JoinResult::Infinity => return Ok(Vec::new()),
            JoinResult::Element(j) => j,
        };
        if let Some(bound) = self.bound() {
            if !bound.contains(&j) {
                return Err(Error::TruncationExceeded(format!(
                    "degree {} of MCE({}, {}) is out of bound",
                    j,
                    self.id(mu),
                    self.id(nu)
                )));
            }
        }
        let q = dm.left_quotient(&j)?;
        let mut out = Vec::new();
        for &tail in self.at_range_degree(self.source(mu), &q) {
            match self.compose_tbl.get(&(mu, tail)) {
                Some(ComposeEntry::Path(lambda)) => {
                    if self.is_prefix(nu, *lambda) && !out.contains(lambda) {
                        out.push(*lambda);
                    }
                }
                Some(ComposeEntry::OutOfBound) | None => {}
            }
        }
        out.sort();
        Ok(out)
    }

    /// MCE of a finite path set: all λ extending every member of G with
    /// degree the join of the members' degrees.
    pub fn mce_of_set(&self, set: &[PathIx]) -> Result<Vec<PathIx>> {
        if set.is_empty() {
            return Err(Error::EmptyInput("mce_of_set"));
        }
        let mut j = self.degree(set[0]).clone();
        for &m in &set[1..] {
            match j.join(self.degree(m))? {
                JoinResult::Infinity => return Ok(Vec::new()),
                JoinResult::Element(g) => j = g,
            }
        }
        if let Some(bound) = self.bound() {
            if !bound.contains(&j) {
                return Err(Error::TruncationExceeded(format!(
                    "degree {j} of the common extension is out of bound"
                )));
            }
        }
        let mut out = Vec::new();
        for &lambda in self.by_degree(&j) {
            if set.iter().all(|&m| self.is_prefix(m, lambda)) {
                out.push(lambda);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Smallest superset of F closed under minimal common extensions.
    pub fn vee_paths(&self, set: &[PathIx]) -> Result<Vec<PathIx>> {
        let mut out: Vec<PathIx> = Vec::new();
        for &p in set {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        loop {
            let mut added = false;
            let n = out.len();
            for i in 0..n {
                for k in i..n {
                    for lambda in self.mce(out[i], out[k])? {
                        if !out.contains(&lambda) {
                            out.push(lambda);
                            added = true;
                        }
                    }
                }
            }
            if !added {
                break;
            }
        }
        out.sort();
        Ok(out)
    }

    /// Ext(U; V): the tails α such that μα ∈ MCE(μ, ν) for some μ ∈ U and
    /// ν ∈ V.
    pub fn ext(&self, u: &[PathIx], v: &[PathIx]) -> Result<Vec<PathIx>> {
        let mut out = Vec::new();
        for &mu in u {
            let dm = self.degree(mu).clone();
            for &nu in v {
                for lambda in self.mce(mu, nu)? {
                    let (_, alpha) = self.factorize(lambda, &dm)?;
                    if !out.contains(&alpha) {
                        out.push(alpha);
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Is E ⊆ vΛ exhaustive: does every enumerated μ ∈ vΛ admit a common
    /// extension with some member of E? Exact for finite graphs; truncated
    /// graphs can only report a counterexample or "unknown up to the bound".
    pub fn is_exhaustive(&self, v: PathIx, set: &[PathIx]) -> Result<Exhaustive> {
        for &e in set {
            if self.range(e) != v {
                return Err(Error::RootMismatch(format!(
                    "{} does not have range {}",
                    self.id(e),
                    self.id(v)
                )));
            }
        }
        let mut any_undecided = false;
        'mu: for &mu in self.at_range(v) {
            let mut undecided = false;
            for &e in set {
                match self.mce(mu, e) {
                    Ok(m) if !m.is_empty() => continue 'mu,
                    Ok(_) => {}
                    Err(Error::TruncationExceeded(_)) => undecided = true,
                    Err(e) => return Err(e),
                }
            }
            if undecided {
                any_undecided = true;
            } else {
                return Ok(Exhaustive::No(mu));
            }
        }
        if self.is_finite() && !any_undecided {
            Ok(Exhaustive::Yes)
        } else {
            let bound = self
                .bound()
                .map(|b| b.to_string())
                .unwrap_or_else(|| "enumerated paths".to_string());
            Ok(Exhaustive::UnknownUpTo(bound))
        }
    }

    /// Pairs (μ, ν) with s(μ) = s(ν).
    pub fn source_pairs(&self) -> Vec<(PathIx, PathIx)> {
        let mut out = Vec::new();
        for &v in &self.vertices {
            let from_v = self.at_source(v);
            for &a in from_v {
                for &b in from_v {
                    out.push((a, b));
                }
            }
        }
        out.sort();
        out
    }

    /// Balanced pairs: s(μ) = s(ν) and d(μ) = d(ν).
    pub fn balanced_pairs(&self) -> Vec<(PathIx, PathIx)> {
        self.source_pairs()
            .into_iter()
            .filter(|&(a, b)| self.degree(a) == self.degree(b))
            .collect()
    }

    /// Check every axiom on the enumerated data and list the violations.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let violation = |rule: &str, witness: String| Violation {
            rule: rule.to_string(),
            witness,
        };
        let mut vs: Vec<Violation> = Vec::new();

        // Vertices are exactly the degree-e paths and are their own range
        // and source.
        for &v in &self.vertices {
            report.checks_run += 1;
            if self.range(v) != v || self.source(v) != v {
                vs.push(violation(
                    "vertex-identity",
                    format!("vertex {} has range or source away from itself", self.id(v)),
                ));
            }
        }

        // Composition table: domain, degree functoriality, endpoints.
        for a in self.all_paths() {
            for b in self.all_paths() {
                let entry = self.compose_tbl.get(&(a, b));
                let composable = self.source(a) == self.range(b);
                report.checks_run += 1;
                match (composable, entry) {
                    (true, None) => vs.push(violation(
                        "composition-missing",
                        format!("no entry for composable pair {} . {}", self.id(a), self.id(b)),
                    )),
                    (false, Some(_)) => vs.push(violation(
                        "composition-domain",
                        format!(
                            "entry for non-composable pair {} . {}",
                            self.id(a),
                            self.id(b)
                        ),
                    )),
                    (true, Some(ComposeEntry::Path(c))) => {
                        let want = self.degree(a).multiply(self.degree(b)).unwrap();
                        if self.degree(*c) != &want
                            || self.range(*c) != self.range(a)
                            || self.source(*c) != self.source(b)
                        {
                            vs.push(violation(
                                "degree-functor",
                                format!(
                                    "{} . {} = {} breaks degree or endpoints",
                                    self.id(a),
                                    self.id(b),
                                    self.id(*c)
                                ),
                            ));
                        }
                    }
                    _ => {}
                }
            }
        }

        // Identity morphisms.
        for p in self.all_paths() {
            report.checks_run += 1;
            let left = self.compose_tbl.get(&(self.range(p), p));
            let right = self.compose_tbl.get(&(p, self.source(p)));
            if left != Some(&ComposeEntry::Path(p)) || right != Some(&ComposeEntry::Path(p)) {
                vs.push(violation(
                    "identity-morphism",
                    format!("identity composition fails at {}", self.id(p)),
                ));
            }
        }

        // Associativity on composable triples.
        for ((a, b), e_ab) in &self.compose_tbl {
            let ab = match e_ab {
                ComposeEntry::Path(c) => *c,
                ComposeEntry::OutOfBound => continue,
            };
            for &x in self.at_range(self.source(*b)) {
                report.checks_run += 1;
                let bx = match self.compose_tbl.get(&(*b, x)) {
                    Some(ComposeEntry::Path(c)) => *c,
                    _ => {
                        report.skipped += 1;
                        continue;
                    }
                };
                let left = self.compose_tbl.get(&(ab, x));
                let right = self.compose_tbl.get(&(*a, bx));
                match (left, right) {
                    (Some(ComposeEntry::Path(l)), Some(ComposeEntry::Path(r))) => {
                        if l != r {
                            vs.push(violation(
                                "associativity",
                                format!(
                                    "({} . {}) . {} = {} but {} . ({} . {}) = {}",
                                    self.id(*a),
                                    self.id(*b),
                                    self.id(x),
                                    self.id(*l),
                                    self.id(*a),
                                    self.id(*b),
                                    self.id(x),
                                    self.id(*r)
                                ),
                            ));
                        }
                    }
                    (Some(ComposeEntry::OutOfBound), _) | (_, Some(ComposeEntry::OutOfBound)) => {
                        report.skipped += 1;
                    }
                    _ => vs.push(violation(
                        "associativity",
                        format!(
                            "triple {} . {} . {} has a missing composite",
                            self.id(*a),
                            self.id(*b),
                            self.id(x)
                        ),
                    )),
                }
            }
        }

        // Unique factorisation along every splitting of every degree.
        for lambda in self.all_paths() {
            let (splits, complete) = crate::qlo::splittings(self.degree(lambda), self.bound());
            if !complete {
                report.skipped += 1;
            }
            for (p, q) in splits {
                report.checks_run += 1;
                if let Some(bound) = self.bound() {
                    if !bound.contains(&p) || !bound.contains(&q) {
                        report.skipped += 1;
                        continue;
                    }
                }
                let fs = self
                    .factor_map
                    .get(&(lambda, p.clone()))
                    .map(|fs| {
                        fs.iter()
                            .filter(|(_, b)| self.degree(*b) == &q)
                            .collect::<Vec<_>>()
                    })
                    .unwrap_or_default();
                match fs.len() {
                    0 => vs.push(violation(
                        "factorisation-exists",
                        format!(
                            "{} has no factorisation at degree {}",
                            self.id(lambda),
                            p
                        ),
                    )),
                    1 => {}
                    _ => vs.push(violation(
                        "factorisation-unique",
                        format!(
                            "{} factors in {} ways at degree {}",
                            self.id(lambda),
                            fs.len(),
                            p
                        ),
                    )),
                }
            }
        }

        // Finite alignment and internal consistency of MCE sets.
        let n = self.len() as PathIx;
        for mu in 0..n {
            for nu in mu..n {
                report.checks_run += 1;
                match self.mce(mu, nu) {
                    Ok(mces) => {
                        if mu == nu && mces != vec![mu] {
                            vs.push(violation(
                                "mce-reflexive",
                                format!("MCE({0}, {0}) is not {{{0}}}", self.id(mu)),
                            ));
                        }
                        for lambda in mces {
                            let ok = self.is_prefix(mu, lambda) && self.is_prefix(nu, lambda);
                            if !ok {
                                vs.push(violation(
                                    "mce-extension",
                                    format!(
                                        "{} in MCE({}, {}) does not extend both",
                                        self.id(lambda),
                                        self.id(mu),
                                        self.id(nu)
                                    ),
                                ));
                            }
                        }
                    }
                    Err(Error::TruncationExceeded(_)) => report.skipped += 1,
                    Err(e) => vs.push(violation("mce-error", e.to_string())),
                }
            }
        }

        report.violations = vs;
        report
    }

    /// Deterministic content hash of the graph data.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("qlo {}\n", self.qlo));
        match &self.mode {
            GraphMode::Finite => hasher.update("finite\n"),
            GraphMode::Truncated(b) => hasher.update(format!("truncated {b}\n")),
        }
        for p in &self.paths {
            hasher.update(format!(
                "path {}|{}|{}|{}\n",
                p.id,
                self.paths[p.range as usize].id,
                self.paths[p.source as usize].id,
                p.degree.token()
            ));
        }
        let mut entries: Vec<String> = self
            .compose_tbl
            .iter()
            .map(|((a, b), e)| {
                let r = match e {
                    ComposeEntry::Path(c) => self.id(*c).to_string(),
                    ComposeEntry::OutOfBound => "!".to_string(),
                };
                format!("{}|{}|{}", self.id(*a), self.id(*b), r)
            })
            .collect();
        entries.sort();
        for e in entries {
            hasher.update(e);
            hasher.update("\n");
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Brute-force MCE oracle: enumerate every path of the join degree and
    /// keep those that factor onto both arguments. Used to cross-check the
    /// extension-based `mce`.
    pub fn mce_oracle(&self, mu: PathIx, nu: PathIx) -> Result<Vec<PathIx>> {
        let j = match self.degree(mu).join(self.degree(nu))? {
            JoinResult::Infinity => return Ok(Vec::new()),
            JoinResult::Element(j) => j,
        };
        if let Some(bound) = self.bound() {
            if !bound.contains(&j) {
                return Err(Error::TruncationExceeded(format!(
                    "degree {j} of the common extension is out of bound"
                )));
            }
        }
        let dm = self.degree(mu).clone();
        let dn = self.degree(nu).clone();
        let mut out = Vec::new();
        for &lambda in self.by_degree(&j) {
            let onto_mu = matches!(self.factorize(lambda, &dm), Ok((m, _)) if m == mu);
            let onto_nu = matches!(self.factorize(lambda, &dn), Ok((n, _)) if n == nu);
            if onto_mu && onto_nu {
                out.push(lambda);
            }
        }
        out.sort();
        Ok(out)
    }

    fn vertex_profile(&self, v: PathIx) -> (Vec<String>, Vec<String>) {
        let mut incoming: Vec<String> = self
            .at_range(v)
            .iter()
            .map(|&p| self.degree(p).token())
            .collect();
        incoming.sort();
        let mut outgoing: Vec<String> = self
            .at_source(v)
            .iter()
            .map(|&p| self.degree(p).token())
            .collect();
        outgoing.sort();
        (incoming, outgoing)
    }

    /// Export raw parts (useful for rebuilding a doctored copy in tests).
    pub fn raw_parts(&self) -> (Vec<RawPath>, Vec<RawCompose>) {
        let raw_paths = self
            .paths
            .iter()
            .map(|p| RawPath {
                id: p.id.clone(),
                range: self.paths[p.range as usize].id.clone(),
                source: self.paths[p.source as usize].id.clone(),
                degree: p.degree.clone(),
            })
            .collect();
        let mut raw_compose: Vec<RawCompose> = self
            .compose_tbl
            .iter()
            .map(|((a, b), e)| RawCompose {
                first: self.id(*a).to_string(),
                second: self.id(*b).to_string(),
                result: match e {
                    ComposeEntry::Path(c) => Some(self.id(*c).to_string()),
                    ComposeEntry::OutOfBound => None,
                },
            })
            .collect();
        raw_compose.sort_by(|x, y| (&x.first, &x.second).cmp(&(&y.first, &y.second)));
        (raw_paths, raw_compose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_grid, build_parallel_edges};

    fn grid3() -> PGraph {
        build_grid(2, &[2, 2]).unwrap()
    }

    fn d2(g: &PGraph, a: i64, b: i64) -> GroupElement {
        g.qlo().nk_element(&[a, b]).unwrap()
    }

    #[test]
    fn compose_examples() {
        let g = grid3();
        // ((0,0),(1,0)) . ((1,0),(0,1)) = ((0,0),(1,1))
        let a = g.lookup("v0_0_d1_0").unwrap();
        let b = g.lookup("v1_0_d0_1").unwrap();
        assert_eq!(g.compose(a, b).unwrap(), g.lookup("v0_0_d1_1").unwrap());
        // v . mu = mu for v = r(mu)
        for mu in g.all_paths() {
            assert_eq!(g.compose(g.range(mu), mu).unwrap(), mu);
            assert_eq!(g.compose(mu, g.source(mu)).unwrap(), mu);
        }
        // Non-composable pair is rejected.
        let c = g.lookup("v0_1_d1_0").unwrap();
        assert!(matches!(g.compose(a, c), Err(Error::NotComposable(..))));
    }

    #[test]
    fn factorize_examples() {
        let g = grid3();
        let lambda = g.lookup("v0_0_d1_1").unwrap();
        let e = g.qlo().identity();
        assert_eq!(
            g.factorize(lambda, &e).unwrap(),
            (g.range(lambda), lambda)
        );
        assert_eq!(
            g.factorize(lambda, &d2(&g, 1, 1)).unwrap(),
            (lambda, g.source(lambda))
        );
        let (mu, nu) = g.factorize(lambda, &d2(&g, 0, 1)).unwrap();
        assert_eq!(g.id(mu), "v0_0_d0_1");
        assert_eq!(g.id(nu), "v0_1_d1_0");
        assert!(g.factorize(lambda, &d2(&g, 2, 0)).is_err());
    }

    #[test]
    fn factorize_compose_roundtrip_everywhere() {
        let g = grid3();
        for lambda in g.all_paths() {
            let (splits, complete) = crate::qlo::splittings(g.degree(lambda), None);
            assert!(complete);
            for (p, _) in splits {
                let (mu, nu) = g.factorize(lambda, &p).unwrap();
                assert_eq!(g.compose(mu, nu).unwrap(), lambda);
            }
        }
    }

    #[test]
    fn mce_examples() {
        let g = grid3();
        for mu in g.all_paths() {
            assert_eq!(g.mce(mu, mu).unwrap(), vec![mu]);
        }
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        assert_eq!(
            g.mce(e1, f1).unwrap(),
            vec![g.lookup("v0_0_d1_1").unwrap()]
        );
        // Distinct equal-degree paths with the same range have no common
        // extension.
        let p = build_parallel_edges(2).unwrap();
        let a = p.lookup("e1").unwrap();
        let b = p.lookup("e2").unwrap();
        assert!(p.mce(a, b).unwrap().is_empty());
    }

    #[test]
    fn mce_matches_oracle_on_grid() {
        let g = grid3();
        for mu in g.all_paths() {
            for nu in g.all_paths() {
                let m = g.mce(mu, nu).unwrap();
                assert_eq!(m, g.mce_oracle(mu, nu).unwrap());
                assert_eq!(m, g.mce_via_extension(mu, nu).unwrap());
                assert_eq!(m, g.mce(nu, mu).unwrap());
            }
        }
    }

    #[test]
    fn mce_of_set_examples() {
        let g = grid3();
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        let sq = g.lookup("v0_0_d1_1").unwrap();
        assert_eq!(g.mce_of_set(&[e1]).unwrap(), vec![e1]);
        assert_eq!(g.mce_of_set(&[e1, f1, sq]).unwrap(), vec![sq]);
        assert!(g.mce_of_set(&[]).is_err());
        for mu in g.all_paths() {
            for nu in g.all_paths() {
                assert_eq!(g.mce_of_set(&[mu, nu]).unwrap(), g.mce(mu, nu).unwrap());
            }
        }
        // Words with join infinity have no common extension.
        let fm = crate::catalog::build_parallel_edges(2).unwrap();
        let a = fm.lookup("e1").unwrap();
        let b = fm.lookup("e2").unwrap();
        assert!(fm.mce_of_set(&[a, b]).unwrap().is_empty());
    }

    #[test]
    fn vee_paths_examples() {
        let g = grid3();
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        let sq = g.lookup("v0_0_d1_1").unwrap();
        assert_eq!(g.vee_paths(&[e1]).unwrap(), vec![e1]);
        let mut expect = vec![e1, f1, sq];
        expect.sort();
        assert_eq!(g.vee_paths(&[e1, f1]).unwrap(), expect);
        // Two paths with no extension stay untouched.
        let p = build_parallel_edges(2).unwrap();
        let a = p.lookup("e1").unwrap();
        let b = p.lookup("e2").unwrap();
        let mut expect = vec![a, b];
        expect.sort();
        assert_eq!(p.vee_paths(&[a, b]).unwrap(), expect);
    }

    #[test]
    fn ext_examples() {
        let g = grid3();
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        for mu in g.all_paths() {
            assert_eq!(g.ext(&[mu], &[mu]).unwrap(), vec![g.source(mu)]);
        }
        assert_eq!(
            g.ext(&[e1], &[f1]).unwrap(),
            vec![g.lookup("v1_0_d0_1").unwrap()]
        );
        // Join infinity on all pairs gives the empty set.
        let p = build_parallel_edges(2).unwrap();
        let a = p.lookup("e1").unwrap();
        let b = p.lookup("e2").unwrap();
        assert!(p.ext(&[a], &[b]).unwrap().is_empty());
    }

    #[test]
    fn exhaustive_on_grid() {
        let g = grid3();
        let v = g.lookup("v0_0").unwrap();
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        assert_eq!(g.is_exhaustive(v, &[v]).unwrap(), Exhaustive::Yes);
        assert_eq!(g.is_exhaustive(v, &[e1, f1]).unwrap(), Exhaustive::Yes);
        // In the full grid any two paths from one vertex have a common
        // extension, so every nonempty E is exhaustive; the empty set is not.
        assert_eq!(g.is_exhaustive(v, &[e1]).unwrap(), Exhaustive::Yes);
        assert!(matches!(g.is_exhaustive(v, &[]).unwrap(), Exhaustive::No(_)));
        // E must sit inside vΛ.
        let w = g.lookup("v1_0").unwrap();
        assert!(g.is_exhaustive(w, &[e1]).is_err());
        // Yes is stable under enlarging E.
        let all_v: Vec<PathIx> = g.at_range(v).to_vec();
        assert_eq!(g.is_exhaustive(v, &all_v).unwrap(), Exhaustive::Yes);
    }

    #[test]
    fn validate_flags_corrupted_composition() {
        let g = grid3();
        assert!(g.validate().is_clean());
        let (paths, mut compose) = g.raw_parts();
        // Redirect one non-identity composition to a wrong target of the
        // right degree.
        let victim = compose
            .iter_mut()
            .find(|rc| {
                rc.first == "v0_0_d1_0" && rc.second == "v1_0_d0_1"
            })
            .unwrap();
        victim.result = Some("v0_1_d1_1".into());
        let bad = PGraph::from_parts(g.qlo(), GraphMode::Finite, paths, compose).unwrap();
        let report = bad.validate();
        assert!(!report.is_clean());
        let mentions_triple = report.violations.iter().any(|v| {
            v.witness.contains("v0_0_d1_0") && v.witness.contains("v1_0_d0_1")
        });
        assert!(mentions_triple, "violation names the corrupted pair");
    }

    #[test]
    fn degree_e_paths_are_exactly_vertices() {
        let g = grid3();
        for p in g.all_paths() {
            assert_eq!(g.is_vertex(p), g.degree(p).is_identity());
            if g.is_vertex(p) {
                assert_eq!(g.range(p), p);
                assert_eq!(g.source(p), p);
            }
        }
    }

    #[test]
    fn content_hash_is_stable_and_discriminating() {
        let a = grid3().content_hash();
        let b = grid3().content_hash();
        assert_eq!(a, b);
        let c = build_grid(2, &[2, 1]).unwrap().content_hash();
        assert_ne!(a, c);
    }
}

/// Search for an isomorphism between two graphs over the same instance: a
/// degree-preserving bijection of paths matching ranges, sources, and the
/// whole composition table. Returns the path-id mapping when one exists.
/// Intended for desk-scale fixtures; gives up (returns None) when a
/// matching class is too large to search.
pub fn isomorphic(a: &PGraph, b: &PGraph) -> Option<HashMap<String, String>> {
    if a.qlo() != b.qlo() || a.len() != b.len() || a.vertices().len() != b.vertices().len() {
        return None;
    }
    // Group vertices by local degree profile.
    let mut classes: BTreeMap<(Vec<String>, Vec<String>), (Vec<PathIx>, Vec<PathIx>)> =
        BTreeMap::new();
    for &v in a.vertices() {
        classes.entry(a.vertex_profile(v)).or_default().0.push(v);
    }
    for &v in b.vertices() {
        classes.entry(b.vertex_profile(v)).or_default().1.push(v);
    }
    for (_, (av, bv)) in classes.iter() {
        if av.len() != bv.len() {
            return None;
        }
    }
    let class_list: Vec<(Vec<PathIx>, Vec<PathIx>)> = classes.into_values().collect();

    fn permute<T: Copy>(
        items: &[T],
        chosen: &mut Vec<T>,
        used: &mut Vec<bool>,
        f: &mut impl FnMut(&[T]) -> bool,
    ) -> bool {
        if chosen.len() == items.len() {
            return f(chosen);
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                chosen.push(items[i]);
                if permute(items, chosen, used, f) {
                    return true;
                }
                chosen.pop();
                used[i] = false;
            }
        }
        false
    }

    // Assign vertex classes one at a time, then try to extend to paths.
    fn assign(
        a: &PGraph,
        b: &PGraph,
        classes: &[(Vec<PathIx>, Vec<PathIx>)],
        ix: usize,
        vmap: &mut HashMap<PathIx, PathIx>,
        out: &mut Option<HashMap<String, String>>,
    ) -> bool {
        if ix == classes.len() {
            if let Some(pmap) = extend_to_paths(a, b, vmap) {
                *out = Some(pmap);
                return true;
            }
            return false;
        }
        let (av, bv) = &classes[ix];
        if av.len() > 6 {
            return false;
        }
        let mut chosen = Vec::new();
        let mut used = vec![false; bv.len()];
        permute(bv, &mut chosen, &mut used, &mut |perm| {
            for (x, y) in av.iter().zip(perm) {
                vmap.insert(*x, *y);
            }
            let ok = assign(a, b, classes, ix + 1, vmap, out);
            if !ok {
                for x in av {
                    vmap.remove(x);
                }
            }
            ok
        })
    }

    fn extend_to_paths(
        a: &PGraph,
        b: &PGraph,
        vmap: &HashMap<PathIx, PathIx>,
    ) -> Option<HashMap<String, String>> {
        // Path classes keyed by (mapped range, mapped source, degree).
        let mut a_classes: BTreeMap<(PathIx, PathIx, String), Vec<PathIx>> = BTreeMap::new();
        for p in a.all_paths() {
            let key = (
                *vmap.get(&a.range(p))?,
                *vmap.get(&a.source(p))?,
                a.degree(p).token(),
            );
            a_classes.entry(key).or_default().push(p);
        }
        let mut b_classes: BTreeMap<(PathIx, PathIx, String), Vec<PathIx>> = BTreeMap::new();
        for p in b.all_paths() {
            b_classes
                .entry((b.range(p), b.source(p), b.degree(p).token()))
                .or_default()
                .push(p);
        }
        if a_classes.len() != b_classes.len() {
            return None;
        }
        let mut pairs: Vec<(Vec<PathIx>, Vec<PathIx>)> = Vec::new();
        for (key, av) in &a_classes {
            let bv = b_classes.get(key)?;
            if av.len() != bv.len() || av.len() > 6 {
                return None;
            }
            pairs.push((av.clone(), bv.clone()));
        }
        // Depth-first over per-class permutations with a final full check of
        // the composition tables.
        fn search(
            a: &PGraph,
            b: &PGraph,
            pairs: &[(Vec<PathIx>, Vec<PathIx>)],
            ix: usize,
            pmap: &mut HashMap<PathIx, PathIx>,
        ) -> bool {
            if ix == pairs.len() {
                return check_tables(a, b, pmap);
            }
            let (av, bv) = &pairs[ix];
            let mut chosen = Vec::new();
            let mut used = vec![false; bv.len()];
            permute(bv, &mut chosen, &mut used, &mut |perm| {
                for (x, y) in av.iter().zip(perm) {
                    pmap.insert(*x, *y);
                }
                let ok = search(a, b, pairs, ix + 1, pmap);
                if !ok {
                    for x in av {
                        pmap.remove(x);
                    }
                }
                ok
            })
        }
        fn check_tables(a: &PGraph, b: &PGraph, pmap: &HashMap<PathIx, PathIx>) -> bool {
            for x in a.all_paths() {
                for y in a.all_paths() {
                    let lhs = a.compose_entry(x, y);
                    let rhs = b.compose_entry(pmap[&x], pmap[&y]);
                    let matches = match (lhs, rhs) {
                        (None, None) => true,
                        (Some(ComposeEntry::OutOfBound), Some(ComposeEntry::OutOfBound)) => true,
                        (Some(ComposeEntry::Path(c)), Some(ComposeEntry::Path(d))) => {
                            pmap[&c] == d
                        }
                        _ => false,
                    };
                    if !matches {
                        return false;
                    }
                }
            }
            true
        }
        let mut pmap = HashMap::new();
        if search(a, b, &pairs, 0, &mut pmap) {
            Some(
                pmap.into_iter()
                    .map(|(x, y)| (a.id(x).to_string(), b.id(y).to_string()))
                    .collect(),
            )
        } else {
            None
        }
    }

    let mut vmap = HashMap::new();
    let mut out = None;
    assign(a, b, &class_list, 0, &mut vmap, &mut out);
    out
}
