//! Hybrid graphs over ℕ² ∗ ℕ: a connecting directed graph D carrying the
//! ℕ-blocks, glued at two marked vertices to the cartesian products
//! E_i × F_i carrying the ℕ²-blocks. Paths are alternating strings of
//! D-segments and product segments; the degree of a path is the word of its
//! segment degrees.
//!
//! The genuine construction attaches the products at infinite receivers;
//! at desk scale those are modelled by finite graphs and every relation
//! check at an attachment vertex is flagged so the deviation stays visible.

use crate::algebra::matrix::MatrixOp;
use crate::algebra::rep::{Flavor, Representation};
use crate::error::{Error, Result};
use crate::graph::{GraphMode, PGraph, PathIx, RawCompose, RawPath};
use crate::qlo::{Block, DegreeBound, GroupElement, Qlo};
use crate::report::CheckRecord;
use num_bigint::BigInt;
use std::collections::HashMap;
use std::sync::Arc;

/// A plain finite directed graph.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    pub vertices: Vec<String>,
    /// (id, range, source)
    pub edges: Vec<(String, String, String)>,
}

impl DirectedGraph {
    fn check(&self, name: &str) -> Result<()> {
        for (id, r, s) in &self.edges {
            if !self.vertices.contains(r) || !self.vertices.contains(s) {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} of {name} has a dangling endpoint"
                )));
            }
        }
        Ok(())
    }

    fn edges_with_range<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a (String, String, String)> {
        self.edges.iter().filter(move |(_, r, _)| r == v)
    }
}

/// The gluing data: D with its two marked vertices, the four directed
/// graphs, and the attachment vertices identified with the marks.
#[derive(Debug, Clone)]
pub struct HybridSpec {
    pub d: DirectedGraph,
    pub marks: [String; 2],
    pub e: [DirectedGraph; 2],
    pub f: [DirectedGraph; 2],
    /// (vertex of E_i, vertex of F_i) identified with marks[i].
    pub attach: [(String, String); 2],
}

/// Truncation: at most `max_blocks` segments, every segment degree entry at
/// most `max_seg` (a box bound, so joins of in-bound degrees stay in
/// bound).
#[derive(Debug, Clone, Copy)]
pub struct HybridBound {
    pub max_blocks: usize,
    pub max_seg: u64,
}

/// One segment of a hybrid path, edge chains in morphism order (range side
/// first).
#[derive(Debug, Clone, PartialEq, Eq)]
enum Seg {
    D(Vec<u32>),
    Prod {
        graph: usize,
        h: Vec<u32>,
        v: Vec<u32>,
        h_range: u32,
        h_source: u32,
        v_range: u32,
        v_source: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct HybridPath {
    segs: Vec<Seg>,
    /// Hybrid vertex names of the two endpoints.
    range: String,
    source: String,
}

/// A built hybrid graph: the path table plus the segment structure needed
/// for the closed-form MCE and the relation checks.
#[derive(Debug, Clone)]
pub struct Hybrid {
    pub graph: Arc<PGraph>,
    spec: HybridSpec,
    bound: HybridBound,
    structure: Vec<HybridPath>,
}

/// The fixed connecting graph: marks u0 and u1, two middle vertices each
/// carrying a double loop, the 4-cycle through them, and the two direct
/// edges between the marks.
pub fn default_connecting_graph() -> DirectedGraph {
    DirectedGraph {
        vertices: vec!["u0".into(), "u1".into(), "m0".into(), "m1".into()],
        edges: vec![
            ("d1".into(), "m0".into(), "u0".into()),
            ("d2".into(), "u1".into(), "m0".into()),
            ("d3".into(), "m1".into(), "u1".into()),
            ("d4".into(), "u0".into(), "m1".into()),
            ("d5".into(), "u1".into(), "u0".into()),
            ("d6".into(), "u0".into(), "u1".into()),
            ("l1".into(), "m0".into(), "m0".into()),
            ("l2".into(), "m0".into(), "m0".into()),
            ("l3".into(), "m1".into(), "m1".into()),
            ("l4".into(), "m1".into(), "m1".into()),
        ],
    }
}

fn two_cycle(prefix: &str) -> DirectedGraph {
    DirectedGraph {
        vertices: vec![format!("{prefix}0"), format!("{prefix}1")],
        edges: vec![
            (
                format!("{prefix}a"),
                format!("{prefix}0"),
                format!("{prefix}1"),
            ),
            (
                format!("{prefix}b"),
                format!("{prefix}1"),
                format!("{prefix}0"),
            ),
        ],
    }
}

/// The standard desk-scale fixture: the default connecting graph with a
/// two-vertex, two-edge cycle for each of the four attached graphs.
pub fn hyb1_spec() -> HybridSpec {
    HybridSpec {
        d: default_connecting_graph(),
        marks: ["u0".into(), "u1".into()],
        e: [two_cycle("ex0"), two_cycle("ex1")],
        f: [two_cycle("fy0"), two_cycle("fy1")],
        attach: [
            ("ex00".into(), "fy00".into()),
            ("ex10".into(), "fy10".into()),
        ],
    }
}

struct Builder<'a> {
    spec: &'a HybridSpec,
    bound: HybridBound,
}

impl<'a> Builder<'a> {
    /// Hybrid vertex name of a product-graph vertex, folding the glued pair
    /// onto the mark.
    fn product_vertex(&self, i: usize, ev: u32, fv: u32) -> String {
        let en = &self.spec.e[i].vertices[ev as usize];
        let fn_ = &self.spec.f[i].vertices[fv as usize];
        if (en.as_str(), fn_.as_str())
            == (self.spec.attach[i].0.as_str(), self.spec.attach[i].1.as_str())
        {
            self.spec.marks[i].clone()
        } else {
            format!("x{i}({en},{fn_})")
        }
    }

    fn seg_endpoints(&self, seg: &Seg) -> (String, String) {
        match seg {
            Seg::D(chain) => {
                let first = &self.spec.d.edges[chain[0] as usize];
                let last = &self.spec.d.edges[*chain.last().unwrap() as usize];
                (first.1.clone(), last.2.clone())
            }
            Seg::Prod {
                graph,
                h_range,
                h_source,
                v_range,
                v_source,
                ..
            } => (
                self.product_vertex(*graph, *h_range, *v_range),
                self.product_vertex(*graph, *h_source, *v_source),
            ),
        }
    }

    fn seg_id(&self, seg: &Seg) -> String {
        match seg {
            Seg::D(chain) => format!(
                "D({})",
                chain
                    .iter()
                    .map(|&e| self.spec.d.edges[e as usize].0.clone())
                    .collect::<Vec<_>>()
                    .join(".")
            ),
            Seg::Prod {
                graph, h, v, h_range, v_range, ..
            } => {
                let hpart = if h.is_empty() {
                    format!("@{}", self.spec.e[*graph].vertices[*h_range as usize])
                } else {
                    h.iter()
                        .map(|&e| self.spec.e[*graph].edges[e as usize].0.clone())
                        .collect::<Vec<_>>()
                        .join(".")
                };
                let vpart = if v.is_empty() {
                    format!("@{}", self.spec.f[*graph].vertices[*v_range as usize])
                } else {
                    v.iter()
                        .map(|&e| self.spec.f[*graph].edges[e as usize].0.clone())
                        .collect::<Vec<_>>()
                        .join(".")
                };
                format!("P{graph}({hpart};{vpart})")
            }
        }
    }

    fn path_id(&self, p: &HybridPath) -> String {
        if p.segs.is_empty() {
            p.range.clone()
        } else {
            p.segs
                .iter()
                .map(|s| self.seg_id(s))
                .collect::<Vec<_>>()
                .join("|")
        }
    }

    fn seg_degree(&self, seg: &Seg) -> Block {
        match seg {
            Seg::D(chain) => Block::Line(BigInt::from(chain.len())),
            Seg::Prod { h, v, .. } => {
                Block::Plane(BigInt::from(h.len()), BigInt::from(v.len()))
            }
        }
    }

    fn path_degree(&self, p: &HybridPath) -> Result<GroupElement> {
        Qlo::FreeProductN2N.blocks_element(p.segs.iter().map(|s| self.seg_degree(s)).collect())
    }

    /// All edge chains of a directed graph, by length, morphism order.
    fn chains(g: &DirectedGraph, max_len: u64) -> Vec<Vec<u32>> {
        let mut all: Vec<Vec<u32>> = Vec::new();
        let mut frontier: Vec<Vec<u32>> = (0..g.edges.len() as u32).map(|e| vec![e]).collect();
        for _ in 0..max_len {
            all.extend(frontier.iter().cloned());
            let mut next = Vec::new();
            for chain in &frontier {
                let tail_source = &g.edges[*chain.last().unwrap() as usize].2;
                for (ix, (_, r, _)) in g.edges.iter().enumerate() {
                    if r == tail_source {
                        let mut c = chain.clone();
                        c.push(ix as u32);
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        all
    }

    fn chain_endpoints(g: &DirectedGraph, chain: &[u32]) -> (u32, u32) {
        let vix = |name: &str| g.vertices.iter().position(|v| v == name).unwrap() as u32;
        let r = vix(&g.edges[chain[0] as usize].1);
        let s = vix(&g.edges[*chain.last().unwrap() as usize].2);
        (r, s)
    }

    /// All segments within the per-segment bound.
    fn segments(&self) -> Vec<Seg> {
        let mut out = Vec::new();
        for chain in Self::chains(&self.spec.d, self.bound.max_seg) {
            out.push(Seg::D(chain));
        }
        for i in 0..2 {
            let eg = &self.spec.e[i];
            let fg = &self.spec.f[i];
            let mut e_chains: Vec<(Vec<u32>, u32, u32)> = Vec::new();
            for (ix, _) in eg.vertices.iter().enumerate() {
                e_chains.push((Vec::new(), ix as u32, ix as u32));
            }
            for c in Self::chains(eg, self.bound.max_seg) {
                let (r, s) = Self::chain_endpoints(eg, &c);
                e_chains.push((c, r, s));
            }
            let mut f_chains: Vec<(Vec<u32>, u32, u32)> = Vec::new();
            for (ix, _) in fg.vertices.iter().enumerate() {
                f_chains.push((Vec::new(), ix as u32, ix as u32));
            }
            for c in Self::chains(fg, self.bound.max_seg) {
                let (r, s) = Self::chain_endpoints(fg, &c);
                f_chains.push((c, r, s));
            }
            for (h, hr, hs) in &e_chains {
                for (v, vr, vs) in &f_chains {
                    if h.is_empty() && v.is_empty() {
                        continue;
                    }
                    out.push(Seg::Prod {
                        graph: i,
                        h: h.clone(),
                        v: v.clone(),
                        h_range: *hr,
                        h_source: *hs,
                        v_range: *vr,
                        v_source: *vs,
                    });
                }
            }
        }
        out
    }

    fn seg_type_clash(a: &Seg, b: &Seg) -> bool {
        matches!(
            (a, b),
            (Seg::D(_), Seg::D(_)) | (Seg::Prod { .. }, Seg::Prod { .. })
        )
    }

    /// Concatenate two paths into a normal segment list, merging at the
    /// junction when the adjacent segments share a type. `None` when the
    /// merged path leaves the bound.
    fn concat(&self, a: &HybridPath, b: &HybridPath) -> Option<HybridPath> {
        if a.segs.is_empty() {
            return Some(b.clone());
        }
        if b.segs.is_empty() {
            return Some(a.clone());
        }
        let mut segs = a.segs.clone();
        let last = segs.pop().unwrap();
        let first = &b.segs[0];
        let merged: Vec<Seg> = match (&last, first) {
            (Seg::D(c1), Seg::D(c2)) => {
                let mut c = c1.clone();
                c.extend(c2.iter().copied());
                if c.len() as u64 > self.bound.max_seg {
                    return None;
                }
                vec![Seg::D(c)]
            }
            (
                Seg::Prod {
                    graph: g1,
                    h: h1,
                    v: v1,
                    h_range,
                    v_range,
                    ..
                },
                Seg::Prod {
                    graph: g2,
                    h: h2,
                    v: v2,
                    h_source,
                    v_source,
                    ..
                },
            ) => {
                if g1 != g2 {
                    // Distinct product graphs only meet at distinct marks,
                    // so this cannot arise for composable paths.
                    return None;
                }
                let mut h = h1.clone();
                h.extend(h2.iter().copied());
                let mut v = v1.clone();
                v.extend(v2.iter().copied());
                if h.len() as u64 > self.bound.max_seg || v.len() as u64 > self.bound.max_seg {
                    return None;
                }
                vec![Seg::Prod {
                    graph: *g1,
                    h,
                    v,
                    h_range: *h_range,
                    h_source: *h_source,
                    v_range: *v_range,
                    v_source: *v_source,
                }]
            }
            _ => vec![last.clone(), first.clone()],
        };
        segs.extend(merged);
        segs.extend(b.segs[1..].iter().cloned());
        if segs.len() > self.bound.max_blocks {
            return None;
        }
        Some(HybridPath {
            segs,
            range: a.range.clone(),
            source: b.source.clone(),
        })
    }
}

/// Build the truncated hybrid graph and its segment structure.
pub fn build_hybrid(spec: HybridSpec, bound: HybridBound) -> Result<Hybrid> {
    spec.d.check("D")?;
    for i in 0..2 {
        spec.e[i].check("E")?;
        spec.f[i].check("F")?;
        if !spec.d.vertices.contains(&spec.marks[i]) {
            return Err(Error::InvalidGraph(format!(
                "mark {} is not a vertex of D",
                spec.marks[i]
            )));
        }
        if !spec.e[i].vertices.contains(&spec.attach[i].0)
            || !spec.f[i].vertices.contains(&spec.attach[i].1)
        {
            return Err(Error::InvalidGraph(format!(
                "attachment {:?} is dangling",
                spec.attach[i]
            )));
        }
    }

    let builder = Builder {
        spec: &spec,
        bound,
    };

    // Hybrid vertices: D-vertices plus the unglued product vertices.
    let mut vertex_names: Vec<String> = spec.d.vertices.clone();
    for i in 0..2 {
        for (ev, _) in spec.e[i].vertices.iter().enumerate() {
            for (fv, _) in spec.f[i].vertices.iter().enumerate() {
                let name = builder.product_vertex(i, ev as u32, fv as u32);
                if !vertex_names.contains(&name) {
                    vertex_names.push(name);
                }
            }
        }
    }

    // Paths: alternating segment strings within the block bound.
    let segments = builder.segments();
    let mut paths: Vec<HybridPath> = vertex_names
        .iter()
        .map(|v| HybridPath {
            segs: Vec::new(),
            range: v.clone(),
            source: v.clone(),
        })
        .collect();
    let mut frontier: Vec<HybridPath> = Vec::new();
    for seg in &segments {
        let (r, s) = builder.seg_endpoints(seg);
        frontier.push(HybridPath {
            segs: vec![seg.clone()],
            range: r,
            source: s,
        });
    }
    while !frontier.is_empty() {
        paths.extend(frontier.iter().cloned());
        let mut next = Vec::new();
        if paths
            .iter()
            .map(|p| p.segs.len())
            .max()
            .unwrap_or(0)
            >= bound.max_blocks
        {
            // Frontier paths at the block bound cannot grow further.
        }
        for p in &frontier {
            if p.segs.len() >= bound.max_blocks {
                continue;
            }
            for seg in &segments {
                if Builder::seg_type_clash(p.segs.last().unwrap(), seg) {
                    continue;
                }
                let (r, s) = builder.seg_endpoints(seg);
                if r != p.source {
                    continue;
                }
                let mut segs = p.segs.clone();
                segs.push(seg.clone());
                next.push(HybridPath {
                    segs,
                    range: p.range.clone(),
                    source: s,
                });
            }
        }
        frontier = next;
    }

    // Assemble the raw path table.
    let mut raw_paths = Vec::with_capacity(paths.len());
    let mut id_of: HashMap<String, usize> = HashMap::new();
    for (ix, p) in paths.iter().enumerate() {
        let id = builder.path_id(p);
        if id_of.insert(id.clone(), ix).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate hybrid path {id}")));
        }
        raw_paths.push(RawPath {
            id,
            range: p.range.clone(),
            source: p.source.clone(),
            degree: builder.path_degree(p)?,
        });
    }

    // Compositions on matching endpoints.
    let mut by_range: HashMap<&str, Vec<usize>> = HashMap::new();
    for (ix, p) in paths.iter().enumerate() {
        by_range.entry(p.range.as_str()).or_default().push(ix);
    }
    let mut raw_compose = Vec::new();
    for (ia, a) in paths.iter().enumerate() {
        if a.segs.is_empty() {
            continue;
        }
        for &ib in by_range.get(a.source.as_str()).map(|v| v.as_slice()).unwrap_or(&[]) {
            let b = &paths[ib];
            if b.segs.is_empty() {
                continue;
            }
            let result = builder
                .concat(a, b)
                .map(|c| builder.path_id(&c));
            raw_compose.push(RawCompose {
                first: raw_paths[ia].id.clone(),
                second: raw_paths[ib].id.clone(),
                result,
            });
        }
    }

    let degree_bound = DegreeBound::Segments {
        max_blocks: bound.max_blocks,
        max_entry: bound.max_seg,
    };
    let graph = PGraph::from_parts(
        Qlo::FreeProductN2N,
        GraphMode::Truncated(degree_bound),
        raw_paths,
        raw_compose,
    )?;

    // Align the segment structure with the canonical path order.
    let mut structure: Vec<HybridPath> = vec![
        HybridPath {
            segs: Vec::new(),
            range: String::new(),
            source: String::new(),
        };
        paths.len()
    ];
    for p in &paths {
        let ix = graph.lookup(&builder.path_id(p))?;
        structure[ix as usize] = p.clone();
    }

    Ok(Hybrid {
        graph: Arc::new(graph),
        spec,
        bound,
        structure,
    })
}

impl Hybrid {
    pub fn spec(&self) -> &HybridSpec {
        &self.spec
    }

    pub fn bound(&self) -> HybridBound {
        self.bound
    }

    pub fn blocks(&self, p: PathIx) -> usize {
        self.structure[p as usize].segs.len()
    }

    /// Paths with at most the given number of segments.
    pub fn paths_up_to_blocks(&self, max: usize) -> Vec<PathIx> {
        self.graph
            .all_paths()
            .filter(|&p| self.blocks(p) <= max)
            .collect()
    }

    fn builder(&self) -> Builder<'_> {
        Builder {
            spec: &self.spec,
            bound: self.bound,
        }
    }

    /// Is `a` a segment-prefix of `b` (same type, chains extending)?
    fn seg_prefix(a: &Seg, b: &Seg) -> bool {
        match (a, b) {
            (Seg::D(c1), Seg::D(c2)) => c1.len() <= c2.len() && c2[..c1.len()] == c1[..],
            (
                Seg::Prod {
                    graph: g1,
                    h: h1,
                    v: v1,
                    ..
                },
                Seg::Prod {
                    graph: g2,
                    h: h2,
                    v: v2,
                    ..
                },
            ) => {
                g1 == g2
                    && h1.len() <= h2.len()
                    && h2[..h1.len()] == h1[..]
                    && v1.len() <= v2.len()
                    && v2[..v1.len()] == v1[..]
            }
            _ => false,
        }
    }

    /// Join of two last segments with common range: the componentwise
    /// prefix-join if both chains are comparable.
    fn seg_join(a: &Seg, b: &Seg) -> Option<Seg> {
        fn chain_join(c1: &[u32], c2: &[u32]) -> Option<Vec<u32>> {
            let (short, long) = if c1.len() <= c2.len() { (c1, c2) } else { (c2, c1) };
            if long[..short.len()] == short[..] {
                Some(long.to_vec())
            } else {
                None
            }
        }
        match (a, b) {
            (Seg::D(c1), Seg::D(c2)) => Some(Seg::D(chain_join(c1, c2)?)),
            (
                Seg::Prod {
                    graph: g1,
                    h: h1,
                    v: v1,
                    h_range,
                    v_range,
                    ..
                },
                Seg::Prod {
                    graph: g2,
                    h: h2,
                    v: v2,
                    ..
                },
            ) => {
                if g1 != g2 {
                    return None;
                }
                let h = chain_join(h1, h2)?;
                let v = chain_join(v1, v2)?;
                // Chain source endpoints are recomputed by the caller.
                Some(Seg::Prod {
                    graph: *g1,
                    h,
                    v,
                    h_range: *h_range,
                    h_source: 0,
                    v_range: *v_range,
                    v_source: 0,
                })
            }
            _ => None,
        }
    }

    /// Closed-form minimal common extensions via the segment trichotomy:
    /// a strict segment-prefix yields the longer path, equal segment counts
    /// reduce to the join of the last segments behind the shared prefix,
    /// and everything else is empty.
    pub fn mce_hybrid(&self, mu: PathIx, nu: PathIx) -> Result<Vec<PathIx>> {
        let g = &self.graph;
        if g.range(mu) != g.range(nu) {
            return Ok(Vec::new());
        }
        let (a, b) = if self.blocks(mu) <= self.blocks(nu) {
            (mu, nu)
        } else {
            (nu, mu)
        };
        let pa = &self.structure[a as usize];
        let pb = &self.structure[b as usize];
        let (m, n) = (pa.segs.len(), pb.segs.len());
        if m == 0 {
            // A vertex extends to anything it roots.
            return Ok(vec![b]);
        }
        if pa.segs[..m - 1] != pb.segs[..m - 1] {
            return Ok(Vec::new());
        }
        if m < n {
            return Ok(if Self::seg_prefix(&pa.segs[m - 1], &pb.segs[m - 1]) {
                vec![b]
            } else {
                Vec::new()
            });
        }
        // Equal segment counts: join the last segments.
        match Self::seg_join(&pa.segs[m - 1], &pb.segs[m - 1]) {
            None => Ok(Vec::new()),
            Some(seg) => {
                // Rebuild the id of prefix . joined-segment and look it up;
                // endpoint data inside `seg_join` is partial, so recompute
                // the chain source endpoints here.
                let builder = self.builder();
                let seg = match seg {
                    Seg::D(c) => Seg::D(c),
                    Seg::Prod {
                        graph, h, v, h_range, v_range, ..
                    } => {
                        let hs = if h.is_empty() {
                            h_range
                        } else {
                            Builder::chain_endpoints(&self.spec.e[graph], &h).1
                        };
                        let vs = if v.is_empty() {
                            v_range
                        } else {
                            Builder::chain_endpoints(&self.spec.f[graph], &v).1
                        };
                        Seg::Prod {
                            graph,
                            h,
                            v,
                            h_range,
                            h_source: hs,
                            v_range,
                            v_source: vs,
                        }
                    }
                };
                let (_, seg_source) = builder.seg_endpoints(&seg);
                let mut segs = pa.segs[..m - 1].to_vec();
                segs.push(seg);
                let candidate = HybridPath {
                    segs,
                    range: pa.range.clone(),
                    source: seg_source,
                };
                let id = builder.path_id(&candidate);
                match g.lookup(&id) {
                    Ok(ix) => Ok(vec![ix]),
                    Err(_) => Err(Error::TruncationExceeded(format!(
                        "joined path {id} is not enumerated"
                    ))),
                }
            }
        }
    }

    /// The generating edges: D-edges and the two kinds of product edges,
    /// as path indices.
    pub fn edge_generators(&self) -> Result<EdgeGenerators> {
        let builder = self.builder();
        let g = &self.graph;
        let mut d_edges = Vec::new();
        for ix in 0..self.spec.d.edges.len() {
            let id = builder.seg_id(&Seg::D(vec![ix as u32]));
            d_edges.push(g.lookup(&id)?);
        }
        let mut e_edges = vec![Vec::new(), Vec::new()];
        let mut f_edges = vec![Vec::new(), Vec::new()];
        for i in 0..2 {
            for (eix, e) in self.spec.e[i].edges.iter().enumerate() {
                let (hr, hs) = Builder::chain_endpoints(&self.spec.e[i], &[eix as u32]);
                for (fvix, _) in self.spec.f[i].vertices.iter().enumerate() {
                    let seg = Seg::Prod {
                        graph: i,
                        h: vec![eix as u32],
                        v: Vec::new(),
                        h_range: hr,
                        h_source: hs,
                        v_range: fvix as u32,
                        v_source: fvix as u32,
                    };
                    let id = builder.seg_id(&seg);
                    e_edges[i].push((g.lookup(&id)?, e.0.clone(), fvix));
                }
            }
            for (fix, f) in self.spec.f[i].edges.iter().enumerate() {
                let (vr, vs) = Builder::chain_endpoints(&self.spec.f[i], &[fix as u32]);
                for (evix, _) in self.spec.e[i].vertices.iter().enumerate() {
                    let seg = Seg::Prod {
                        graph: i,
                        h: Vec::new(),
                        v: vec![fix as u32],
                        h_range: evix as u32,
                        h_source: evix as u32,
                        v_range: vr,
                        v_source: vs,
                    };
                    let id = builder.seg_id(&seg);
                    f_edges[i].push((g.lookup(&id)?, f.0.clone(), evix));
                }
            }
        }
        Ok(EdgeGenerators {
            d_edges,
            e_edges,
            f_edges,
        })
    }
}

/// Path indices of the generating edges. Product edges carry the name of
/// the underlying edge and the index of the frozen coordinate's vertex.
pub struct EdgeGenerators {
    pub d_edges: Vec<PathIx>,
    /// Per product graph: ((e, w)-edge path, E-edge id, F-vertex index).
    pub e_edges: Vec<Vec<(PathIx, String, usize)>>,
    /// Per product graph: ((v, f)-edge path, F-edge id, E-vertex index).
    pub f_edges: Vec<Vec<(PathIx, String, usize)>>,
}

fn compare_or_fail(
    records: &mut Vec<CheckRecord>,
    lhs: &MatrixOp,
    rhs: &MatrixOp,
    id: String,
    anchor: &str,
) -> Result<bool> {
    let cmp = lhs.compare_columns(rhs)?;
    if cmp.equal {
        Ok(true)
    } else {
        records.push(CheckRecord::fail(
            id,
            anchor,
            format!(
                "exact identity fails at entry {:?} ({} columns verified)",
                lhs.first_difference(rhs),
                cmp.verified
            ),
        ));
        Ok(false)
    }
}

/// Diagonal dominance lhs ≤ rhs for diagonal 0/1-style projection sums.
fn diag_below(lhs: &MatrixOp, rhs: &MatrixOp) -> bool {
    let n = lhs.dim();
    for j in 0..n {
        let a = lhs.entry(j, j).unwrap_or_default();
        let b = rhs.entry(j, j).unwrap_or_default();
        if a > b {
            return false;
        }
    }
    true
}

/// Verify the five structural relation families of the hybrid
/// representation. Attachment vertices stand in for infinite receivers, so
/// sum relations there are reported as inequalities with an explicit flag
/// rather than as equalities.
pub fn check_spielberg_relations(
    hybrid: &Hybrid,
    rep: &Representation,
) -> Result<Vec<CheckRecord>> {
    let g = hybrid.graph.clone();
    let gens = hybrid.edge_generators()?;
    let mut records = Vec::new();
    let builder = hybrid.builder();
    let expect_equality = rep.flavor() == Flavor::Ultrafilters;

    // (i) Vertex projections and partial isometries.
    let mut i_ok = true;
    for &v in g.vertices() {
        let p = rep.range_projection(v);
        if !p.is_projection()? {
            i_ok = false;
            records.push(CheckRecord::fail(
                format!("projection {}", g.id(v)),
                "spielberg-i",
                "vertex projection is not a projection".to_string(),
            ));
        }
    }
    let mut all_edges: Vec<PathIx> = gens.d_edges.clone();
    for i in 0..2 {
        all_edges.extend(gens.e_edges[i].iter().map(|(p, _, _)| *p));
        all_edges.extend(gens.f_edges[i].iter().map(|(p, _, _)| *p));
    }
    for &e in &all_edges {
        let t = rep.generator(e)?;
        let t_star = rep.generator_adjoint(e)?;
        let back = t.mul(&t_star)?.mul(&t)?;
        if !back.compare_columns(&t)?.equal {
            i_ok = false;
            records.push(CheckRecord::fail(
                format!("partial-isometry {}", g.id(e)),
                "spielberg-i",
                "edge generator is not a partial isometry".to_string(),
            ));
        }
        // Link S S* to the membership projection used by the sum checks.
        let range = t.mul(&t_star)?;
        if !range.compare_columns(&rep.range_projection(e))?.equal {
            i_ok = false;
            records.push(CheckRecord::fail(
                format!("range-link {}", g.id(e)),
                "spielberg-i",
                "S S* differs from the membership projection".to_string(),
            ));
        }
    }
    if i_ok {
        records.push(CheckRecord::pass_with(
            "projections-and-isometries",
            "spielberg-i",
            format!("{} edges", all_edges.len()),
        ));
    }

    // (ii)/(ii') Graph relations in the product slices.
    for (anchor, frozen_e, edges, graphs) in [
        ("spielberg-ii", true, &gens.f_edges, &hybrid.spec.f),
        ("spielberg-ii-prime", false, &gens.e_edges, &hybrid.spec.e),
    ] {
        let mut ok = true;
        let mut flagged = 0usize;
        for i in 0..2 {
            let dir_graph = &graphs[i];
            let frozen_graph = if frozen_e {
                &hybrid.spec.e[i]
            } else {
                &hybrid.spec.f[i]
            };
            for (frozen_ix, _) in frozen_graph.vertices.iter().enumerate() {
                // Source identities and orthogonal ranges inside the slice.
                let slice: Vec<(PathIx, &String)> = edges[i]
                    .iter()
                    .filter(|(_, _, anchor_ix)| *anchor_ix == frozen_ix)
                    .map(|(p, name, _)| (*p, name))
                    .collect();
                for &(p1, _) in &slice {
                    let t = rep.generator(p1)?;
                    let t_star = rep.generator_adjoint(p1)?;
                    let lhs = t_star.mul(&t)?;
                    let rhs = rep.range_projection(g.source(p1));
                    ok &= compare_or_fail(
                        &mut records,
                        &lhs,
                        &rhs,
                        format!("source-identity {}", g.id(p1)),
                        anchor,
                    )?;
                    for &(p2, _) in &slice {
                        if p1 != p2 {
                            let cross = rep.generator_adjoint(p1)?.mul(&rep.generator(p2)?)?;
                            if !cross.is_zero_on_defined() {
                                ok = false;
                                records.push(CheckRecord::fail(
                                    format!("orthogonal-ranges {} {}", g.id(p1), g.id(p2)),
                                    anchor,
                                    "distinct slice edges have overlapping ranges".to_string(),
                                ));
                            }
                        }
                    }
                }
                // Receiver sums within the slice.
                for (wix, w) in dir_graph.vertices.iter().enumerate() {
                    let incoming: Vec<PathIx> = edges[i]
                        .iter()
                        .filter(|(_, name, anchor_ix)| {
                            *anchor_ix == frozen_ix
                                && dir_graph
                                    .edges_with_range(w)
                                    .any(|(id, _, _)| id == name)
                        })
                        .map(|(p, _, _)| *p)
                        .collect();
                    if incoming.is_empty() {
                        continue;
                    }
                    let slice_vertex_name = if frozen_e {
                        builder.product_vertex(i, frozen_ix as u32, wix as u32)
                    } else {
                        builder.product_vertex(i, wix as u32, frozen_ix as u32)
                    };
                    let slice_vertex = g.lookup(&slice_vertex_name)?;
                    let mut sum = MatrixOp::zero(rep.dim());
                    for &e in &incoming {
                        sum = sum.add(&rep.range_projection(e))?;
                    }
                    let target = rep.range_projection(slice_vertex);
                    // The attachment vertex of the receiving coordinate is
                    // the stand-in for an infinite receiver: nothing forces
                    // equality there, for any frozen coordinate, because
                    // paths may leave through the mark in the frozen
                    // direction.
                    let at_attachment = if frozen_e {
                        *w == hybrid.spec.attach[i].1
                    } else {
                        *w == hybrid.spec.attach[i].0
                    };
                    if expect_equality && !at_attachment {
                        ok &= compare_or_fail(
                            &mut records,
                            &sum,
                            &target,
                            format!("receiver-sum {slice_vertex_name}"),
                            anchor,
                        )?;
                    } else {
                        if !diag_below(&sum, &target) {
                            ok = false;
                            records.push(CheckRecord::fail(
                                format!("receiver-sum {slice_vertex_name}"),
                                anchor,
                                "edge sum exceeds the vertex projection".to_string(),
                            ));
                        }
                        if at_attachment {
                            flagged += 1;
                        }
                    }
                }
            }
        }
        if ok {
            records.push(CheckRecord::pass_with(
                format!("slice-relations {anchor}"),
                anchor,
                format!("{flagged} attachment sites held as inequalities (finite-receiver stand-in)"),
            ));
        }
    }

    // (iii) The connecting-graph relations.
    {
        let mut ok = true;
        let mut site_notes: Vec<String> = Vec::new();
        for &e in &gens.d_edges {
            let t = rep.generator(e)?;
            let t_star = rep.generator_adjoint(e)?;
            let lhs = t_star.mul(&t)?;
            let rhs = rep.range_projection(g.source(e));
            ok &= compare_or_fail(
                &mut records,
                &lhs,
                &rhs,
                format!("source-identity {}", g.id(e)),
                "spielberg-iii",
            )?;
        }
        for vname in &hybrid.spec.d.vertices {
            let v = g.lookup(vname)?;
            let incoming: Vec<PathIx> = gens
                .d_edges
                .iter()
                .copied()
                .filter(|&e| g.range(e) == v)
                .collect();
            let mut sum = MatrixOp::zero(rep.dim());
            for &e in &incoming {
                sum = sum.add(&rep.range_projection(e))?;
            }
            let target = rep.range_projection(v);
            let is_mark = hybrid.spec.marks.contains(vname);
            if !diag_below(&sum, &target) {
                ok = false;
                records.push(CheckRecord::fail(
                    format!("receiver-sum {vname}"),
                    "spielberg-iii",
                    "edge sum exceeds the vertex projection".to_string(),
                ));
            }
            let equal = sum.compare_columns(&target)?.equal;
            if expect_equality && !is_mark && !equal {
                ok = false;
                records.push(CheckRecord::fail(
                    format!("receiver-sum {vname}"),
                    "spielberg-iii",
                    "sum relation must be an equality away from the marks".to_string(),
                ));
            }
            if is_mark {
                site_notes.push(format!(
                    "{vname}: {}",
                    if equal { "equality" } else { "strict inequality" }
                ));
            }
        }
        if ok {
            records.push(CheckRecord::pass_with(
                "connecting-graph",
                "spielberg-iii",
                format!(
                    "marks held as inequalities (finite-receiver stand-in): {}",
                    site_notes.join("; ")
                ),
            ));
        }
    }

    // (iv) Cross-type orthogonality: adjoint of a D-edge against a product
    // edge.
    {
        let mut ok = true;
        let mut checked = 0usize;
        for &e in &gens.d_edges {
            let e_star = rep.generator_adjoint(e)?;
            for i in 0..2 {
                for (f, _, _) in gens.e_edges[i].iter().chain(gens.f_edges[i].iter()) {
                    let prod = e_star.mul(&rep.generator(*f)?)?;
                    checked += 1;
                    if !prod.is_zero_on_defined() {
                        ok = false;
                        records.push(CheckRecord::fail(
                            format!("cross-orthogonality {} {}", g.id(e), g.id(*f)),
                            "spielberg-iv",
                            "cross-type product is nonzero".to_string(),
                        ));
                    }
                }
            }
        }
        if ok {
            records.push(CheckRecord::pass_with(
                "cross-orthogonality",
                "spielberg-iv",
                format!("{checked} cross pairs"),
            ));
        }
    }

    // (v) The two commuting-square identities in each product graph.
    {
        let mut ok = true;
        let mut checked = 0usize;
        for i in 0..2 {
            let eg = &hybrid.spec.e[i];
            let fg = &hybrid.spec.f[i];
            let find_e = |edge: &str, fv: usize| {
                gens.e_edges[i]
                    .iter()
                    .find(|(_, name, anchor)| name == edge && *anchor == fv)
                    .map(|(p, _, _)| *p)
                    .expect("edge generator present")
            };
            let find_f = |edge: &str, ev: usize| {
                gens.f_edges[i]
                    .iter()
                    .find(|(_, name, anchor)| name == edge && *anchor == ev)
                    .map(|(p, _, _)| *p)
                    .expect("edge generator present")
            };
            let vix = |dg: &DirectedGraph, name: &str| {
                dg.vertices.iter().position(|v| v == name).unwrap()
            };
            for (e_id, e_r, e_s) in &eg.edges {
                for (f_id, f_r, f_s) in &fg.edges {
                    checked += 1;
                    // S_{(e, r(f))} S_{(f, s(e))} = S_{(f, r(e))} S_{(e, s(f))}
                    let a = find_e(e_id, vix(fg, f_r));
                    let b = find_f(f_id, vix(eg, e_s));
                    let c = find_f(f_id, vix(eg, e_r));
                    let d = find_e(e_id, vix(fg, f_s));
                    let lhs = rep.generator(a)?.mul(&rep.generator(b)?)?;
                    let rhs = rep.generator(c)?.mul(&rep.generator(d)?)?;
                    ok &= compare_or_fail(
                        &mut records,
                        &lhs,
                        &rhs,
                        format!("square {e_id} {f_id}"),
                        "spielberg-v",
                    )?;
                    // S*_{(e, r(f))} S_{(r(e), f)} = S_{(s(e), f)} S*_{(e, s(f))}
                    let lhs = rep
                        .generator_adjoint(a)?
                        .mul(&rep.generator(find_f(f_id, vix(eg, e_r)))?)?;
                    let rhs = rep
                        .generator(find_f(f_id, vix(eg, e_s)))?
                        .mul(&rep.generator_adjoint(d)?)?;
                    ok &= compare_or_fail(
                        &mut records,
                        &lhs,
                        &rhs,
                        format!("square-adjoint {e_id} {f_id}"),
                        "spielberg-v",
                    )?;
                }
            }
        }
        if ok {
            records.push(CheckRecord::pass_with(
                "commuting-squares",
                "spielberg-v",
                format!("{checked} edge pairs, two identities each"),
            ));
        }
    }

    Ok(records)
}

/// Exact verification of the MCE sum relation over a set of path pairs,
/// using the closed-form trichotomy for the extension sets.
pub fn verify_t4_hybrid(
    hybrid: &Hybrid,
    pairs: &[(PathIx, PathIx)],
    rep: &Representation,
) -> Result<Vec<CheckRecord>> {
    let g = hybrid.graph.clone();
    // Membership bitsets over the basis.
    let words = rep.dim().div_ceil(64);
    let mut bits = vec![vec![0u64; words]; g.len()];
    for (j, f) in rep.basis().iter().enumerate() {
        for &p in f.elements() {
            bits[p as usize][j / 64] |= 1 << (j % 64);
        }
    }
    let mut records = Vec::new();
    let mut checked = 0usize;
    let mut fails = 0usize;
    for &(mu, nu) in pairs {
        let mces = hybrid.mce_hybrid(mu, nu)?;
        // The closed form must agree with the generic search.
        let generic = g.mce(mu, nu)?;
        if mces != generic {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("mce-closed-form ({}, {})", g.id(mu), g.id(nu)),
                "hybrid-mce",
                "closed-form extensions differ from the generic search".to_string(),
            ));
            continue;
        }
        checked += 1;
        let mut ok = true;
        for w in 0..words {
            let lhs = bits[mu as usize][w] & bits[nu as usize][w];
            let mut rhs = 0u64;
            for &l in &mces {
                rhs |= bits[l as usize][w];
            }
            if lhs != rhs {
                ok = false;
            }
        }
        for (i, &l1) in mces.iter().enumerate() {
            for &l2 in &mces[i + 1..] {
                if (0..words).any(|w| bits[l1 as usize][w] & bits[l2 as usize][w] != 0) {
                    ok = false;
                }
            }
        }
        if !ok {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("mce-sum ({}, {})", g.id(mu), g.id(nu)),
                "hybrid-t4",
                "projection product differs from the MCE sum".to_string(),
            ));
        }
    }
    if fails == 0 {
        records.push(CheckRecord::pass_with(
            "hybrid-t4",
            "hybrid-t4",
            format!("{checked} pairs"),
        ));
    }
    Ok(records)
}
