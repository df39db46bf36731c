//! Fixture builders: grid k-graphs, interval and parallel-edge 1-graphs,
//! the single-vertex loop graph, the two-vertex lexicographic graph, and
//! the degree re-labelling along a hereditary monoid embedding.

use crate::error::{Error, Result};
use crate::graph::{GraphMode, PGraph, RawCompose, RawPath};
use crate::qlo::{DegreeBound, GroupElement, JoinResult, Payload, Qlo};
use num_bigint::BigInt;

fn grid_vertex_id(coords: &[i64]) -> String {
    format!(
        "v{}",
        coords
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("_")
    )
}

fn grid_path_id(v: &[i64], p: &[i64]) -> String {
    if p.iter().all(|c| *c == 0) {
        grid_vertex_id(v)
    } else {
        format!(
            "{}_d{}",
            grid_vertex_id(v),
            p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_")
        )
    }
}

fn boxes(extents: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &e in extents {
        let mut next = Vec::new();
        for prefix in &out {
            for c in 0..=e {
                let mut v = prefix.clone();
                v.push(c);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// The grid k-graph on the lattice box with the given extents: one vertex
/// per lattice point and a unique path of every feasible degree between
/// comparable points. `build_grid(2, &[2, 2])` is the 3x3-vertex 2-graph
/// used as the standard finite fixture.
pub fn build_grid(k: usize, extents: &[i64]) -> Result<PGraph> {
    if k == 0 || extents.len() != k || extents.iter().any(|e| *e < 1) {
        return Err(Error::InvalidGraph(format!(
            "grid needs k >= 1 and {k} positive extents"
        )));
    }
    let qlo = Qlo::Nk(k);
    let mut raw_paths = Vec::new();
    let mut raw_compose = Vec::new();
    let add = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let feasible = |v: &[i64]| v.iter().zip(extents).all(|(c, e)| c <= e);

    for v in boxes(extents) {
        for p in boxes(extents) {
            let end = add(&v, &p);
            if feasible(&end) {
                raw_paths.push(RawPath {
                    id: grid_path_id(&v, &p),
                    range: grid_vertex_id(&v),
                    source: grid_vertex_id(&end),
                    degree: qlo.nk_element(&p)?,
                });
                // Compositions (v, p) . (v + p, q) = (v, p + q).
                for q in boxes(extents) {
                    let tail_end = add(&end, &q);
                    if feasible(&tail_end) {
                        raw_compose.push(RawCompose {
                            first: grid_path_id(&v, &p),
                            second: grid_path_id(&end, &q),
                            result: Some(grid_path_id(&v, &add(&p, &q))),
                        });
                    }
                }
            }
        }
    }
    PGraph::from_parts(qlo, GraphMode::Finite, raw_paths, raw_compose)
}

/// Interval 1-graph: vertices 0..=n and the unique path between each
/// comparable pair.
pub fn build_interval(n: i64) -> Result<PGraph> {
    build_grid(1, &[n])
}

/// The 1-graph with two vertices and m parallel edges from w to v
/// (every edge has range v and source w).
pub fn build_parallel_edges(m: usize) -> Result<PGraph> {
    let qlo = Qlo::Nk(1);
    let e = qlo.identity();
    let one = qlo.nk_element(&[1])?;
    let mut raw_paths = vec![
        RawPath {
            id: "v".into(),
            range: "v".into(),
            source: "v".into(),
            degree: e.clone(),
        },
        RawPath {
            id: "w".into(),
            range: "w".into(),
            source: "w".into(),
            degree: e,
        },
    ];
    for i in 1..=m {
        raw_paths.push(RawPath {
            id: format!("e{i}"),
            range: "v".into(),
            source: "w".into(),
            degree: one.clone(),
        });
    }
    // No nontrivial compositions: w emits nothing.
    PGraph::from_parts(qlo, GraphMode::Finite, raw_paths, Vec::new())
}

/// Single-vertex graph over ℕ with exactly one path of each length,
/// truncated at the given length.
pub fn build_loop(bound: i64) -> Result<PGraph> {
    let qlo = Qlo::Nk(1);
    let mut raw_paths = vec![RawPath {
        id: "v".into(),
        range: "v".into(),
        source: "v".into(),
        degree: qlo.identity(),
    }];
    for n in 1..=bound {
        raw_paths.push(RawPath {
            id: format!("e{n}"),
            range: "v".into(),
            source: "v".into(),
            degree: qlo.nk_element(&[n])?,
        });
    }
    let name = |n: i64| {
        if n == 0 {
            "v".to_string()
        } else {
            format!("e{n}")
        }
    };
    let mut raw_compose = Vec::new();
    for a in 0..=bound {
        for b in 0..=bound {
            raw_compose.push(RawCompose {
                first: name(a),
                second: name(b),
                result: if a + b <= bound { Some(name(a + b)) } else { None },
            });
        }
    }
    PGraph::from_parts(
        qlo,
        GraphMode::Truncated(DegreeBound::Box(vec![BigInt::from(bound)])),
        raw_paths,
        raw_compose,
    )
}

fn lex_parts(g: &GroupElement) -> (i64, i64) {
    match g.payload() {
        Payload::Vector(v) => (
            i64::try_from(&v[0]).expect("lex coordinate fits i64"),
            i64::try_from(&v[1]).expect("lex coordinate fits i64"),
        ),
        _ => unreachable!("lex element payload"),
    }
}

fn sy_id(kind: char, s: &GroupElement) -> String {
    let (a, b) = lex_parts(s);
    if a == 0 && b == 0 {
        format!("{kind}0")
    } else {
        format!("{kind}{a}_{b}")
    }
}

/// The two-vertex graph over the lexicographic pair: loops f_s at f0 for
/// every s, loops g_s at g0 for s in S = {0} x ℕ, and arrows g_s from g0
/// to f0 for s outside S, truncated to 0 <= a <= a_max, |b| <= b_max.
pub fn build_sy(a_max: i64, b_max: i64) -> Result<PGraph> {
    let qlo = Qlo::LexZ2;
    let bound = DegreeBound::LexBox { a_max, b_max };
    let in_s = |g: &GroupElement| lex_parts(g).0 == 0;
    let degrees = crate::qlo::enumerate_p(qlo, &bound);

    let mut raw_paths = Vec::new();
    for s in &degrees {
        let (f_range, f_source) = ("f0".to_string(), "f0".to_string());
        raw_paths.push(RawPath {
            id: sy_id('f', s),
            range: f_range,
            source: f_source,
            degree: s.clone(),
        });
        let (g_range, g_source) = if in_s(s) {
            ("g0".to_string(), "g0".to_string())
        } else {
            ("f0".to_string(), "g0".to_string())
        };
        raw_paths.push(RawPath {
            id: sy_id('g', s),
            range: g_range,
            source: g_source,
            degree: s.clone(),
        });
    }

    let mut raw_compose = Vec::new();
    let mut push = |first: String, second: String, sum: &GroupElement, kind: char| {
        let result = bound.contains(sum).then(|| sy_id(kind, sum));
        raw_compose.push(RawCompose {
            first,
            second,
            result,
        });
    };
    for s in &degrees {
        for t in &degrees {
            if s.is_identity() || t.is_identity() {
                continue;
            }
            let sum = s.multiply(t)?;
            // f_s f_t = f_{s+t}
            push(sy_id('f', s), sy_id('f', t), &sum, 'f');
            // f_s g_t = g_{s+t} for t outside S
            if !in_s(t) {
                push(sy_id('f', s), sy_id('g', t), &sum, 'g');
            }
            // g_s g_t = g_{s+t} for t in S
            if in_s(t) {
                push(sy_id('g', s), sy_id('g', t), &sum, 'g');
            }
        }
    }

    // The prefix order of this graph is decidable in closed form, and the
    // in-bound part of the order is strictly larger than what the in-bound
    // compositions witness (the complement can have an arbitrarily large
    // second coordinate). Supply the hidden facts directly.
    let mut extra = Vec::new();
    for s in &degrees {
        for t in &degrees {
            let diff_in_p = s.leq(t).unwrap();
            if !diff_in_p || s == t {
                continue;
            }
            let quotient = s.left_quotient(t).unwrap();
            let (qa, _) = lex_parts(&quotient);
            // f_s below f_t always; f_s below g_t when the quotient leaves
            // S; g_s below g_t when the quotient stays in S.
            if !bound.contains(&quotient) {
                extra.push((sy_id('f', s), sy_id('f', t)));
                if qa >= 1 {
                    extra.push((sy_id('f', s), sy_id('g', t)));
                } else {
                    extra.push((sy_id('g', s), sy_id('g', t)));
                }
            }
        }
    }
    PGraph::from_parts_with_prefixes(
        qlo,
        GraphMode::Truncated(bound),
        raw_paths,
        raw_compose,
        extra,
    )
}

/// A monoid embedding ι of the positive cone of one instance into another,
/// given by the images of the source generators.
#[derive(Debug, Clone)]
pub struct MonoidEmbedding {
    pub source: Qlo,
    pub target: Qlo,
    pub gen_images: Vec<GroupElement>,
}

impl MonoidEmbedding {
    pub fn apply(&self, q: &GroupElement) -> Result<GroupElement> {
        if q.qlo() != self.source {
            return Err(Error::InstanceMismatch(
                q.qlo().to_string(),
                self.source.to_string(),
            ));
        }
        let mut acc = self.target.identity();
        match q.payload() {
            Payload::Vector(v) => {
                if v.len() != self.gen_images.len() {
                    return Err(Error::InvalidGraph(
                        "generator image count does not match arity".into(),
                    ));
                }
                for (i, c) in v.iter().enumerate() {
                    let times = u64::try_from(c).map_err(|_| {
                        Error::InvalidGraph("negative exponent in embedding".into())
                    })?;
                    for _ in 0..times {
                        acc = acc.multiply(&self.gen_images[i])?;
                    }
                }
            }
            Payload::Letters(w) => {
                for l in w {
                    let img = self
                        .gen_images
                        .get(*l as usize)
                        .ok_or_else(|| Error::InvalidGraph("letter without image".into()))?;
                    acc = acc.multiply(img)?;
                }
            }
            Payload::Blocks(_) => {
                return Err(Error::InvalidGraph(
                    "embeddings from the free product are not supported".into(),
                ))
            }
        }
        Ok(acc)
    }
}

/// Verify that the embedding is an order- and join-preserving injection on
/// the given source window and that its image is hereditary in the target
/// (p q in the image forces both p and q into the image, over the target
/// window), then re-label the degrees of the graph along it.
pub fn build_hereditary_embedding(
    graph: &PGraph,
    emb: &MonoidEmbedding,
    source_bound: &DegreeBound,
    target_bound: &DegreeBound,
) -> Result<PGraph> {
    if graph.qlo() != emb.source {
        return Err(Error::InstanceMismatch(
            graph.qlo().to_string(),
            emb.source.to_string(),
        ));
    }
    // Images of commuting generators must commute for the map to be a
    // homomorphism.
    if matches!(emb.source, Qlo::Nk(k) if k > 1) {
        for a in &emb.gen_images {
            for b in &emb.gen_images {
                if a.multiply(b)? != b.multiply(a)? {
                    return Err(Error::InvalidGraph(
                        "generator images do not commute".into(),
                    ));
                }
            }
        }
    }

    let source_window = crate::qlo::enumerate_p(emb.source, source_bound);
    // Order embedding in both directions, and joins carried to joins.
    for p in &source_window {
        for q in &source_window {
            let (ip, iq) = (emb.apply(p)?, emb.apply(q)?);
            if p.leq(q)? != ip.leq(&iq)? {
                return Err(Error::JoinNotPreserved(format!(
                    "order of {p} and {q} changes under the embedding"
                )));
            }
            let expect = match p.join(q)? {
                JoinResult::Element(j) => JoinResult::Element(emb.apply(&j)?),
                JoinResult::Infinity => JoinResult::Infinity,
            };
            if ip.join(&iq)? != expect {
                return Err(Error::JoinNotPreserved(format!(
                    "join of {p} and {q} changes under the embedding"
                )));
            }
        }
    }

    // Hereditariness of the image over the target window.
    let image: std::collections::HashSet<GroupElement> = source_window
        .iter()
        .map(|q| emb.apply(q))
        .collect::<Result<_>>()?;
    let target_window = crate::qlo::enumerate_p(emb.target, target_bound);
    for p in &target_window {
        for q in &target_window {
            let pq = p.multiply(q)?;
            if image.contains(&pq) {
                for (part, name) in [(p, "left"), (q, "right")] {
                    if !image.contains(part) {
                        return Err(Error::NotHereditary {
                            p: p.to_string(),
                            q: q.to_string(),
                            pq: pq.to_string(),
                            witness: format!("{part} ({name} factor)"),
                        });
                    }
                }
            }
        }
    }

    // Same paths and compositions, degrees pushed through the embedding.
    let (mut raw_paths, raw_compose) = graph.raw_parts();
    for rp in &mut raw_paths {
        rp.degree = emb.apply(&rp.degree)?;
    }
    let mode = match graph.mode() {
        GraphMode::Finite => GraphMode::Finite,
        GraphMode::Truncated(_) => GraphMode::Truncated(target_bound.clone()),
    };
    PGraph::from_parts(emb.target, mode, raw_paths, raw_compose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Exhaustive;

    #[test]
    fn interval_counts() {
        let g = build_interval(2).unwrap();
        assert_eq!(g.vertices().len(), 3);
        let nontrivial = g.all_paths().filter(|&p| !g.is_vertex(p)).count();
        assert_eq!(nontrivial, 3);
        assert!(g.validate().is_clean());
    }

    #[test]
    fn grid3_shape() {
        let g = build_grid(2, &[2, 2]).unwrap();
        assert_eq!(g.vertices().len(), 9);
        assert_eq!(g.len(), 36);
        let d11 = g.qlo().nk_element(&[1, 1]).unwrap();
        assert_eq!(g.by_degree(&d11).len(), 4);
        assert!(g.validate().is_clean());
    }

    #[test]
    fn grid_mce_is_singleton_or_empty() {
        let g = build_grid(2, &[2, 2]).unwrap();
        for mu in g.all_paths() {
            for nu in g.all_paths() {
                let m = g.mce(mu, nu).unwrap();
                assert!(m.len() <= 1, "grid MCE must be singleton or empty");
            }
        }
    }

    #[test]
    fn parallel_edges_exhaustive_witness() {
        let g = build_parallel_edges(2).unwrap();
        assert!(g.validate().is_clean());
        let v = g.lookup("v").unwrap();
        let e1 = g.lookup("e1").unwrap();
        let e2 = g.lookup("e2").unwrap();
        assert_eq!(g.is_exhaustive(v, &[e1]).unwrap(), Exhaustive::No(e2));
        assert_eq!(g.is_exhaustive(v, &[e1, e2]).unwrap(), Exhaustive::Yes);
        assert_eq!(g.is_exhaustive(v, &[v]).unwrap(), Exhaustive::Yes);
    }

    #[test]
    fn loop_graph_truncation() {
        let g = build_loop(4).unwrap();
        assert!(g.validate().is_clean());
        // Exhaustiveness is only ever known up to the bound here.
        let v = g.lookup("v").unwrap();
        let e1 = g.lookup("e1").unwrap();
        assert!(matches!(
            g.is_exhaustive(v, &[e1]).unwrap(),
            Exhaustive::UnknownUpTo(_)
        ));
        let e3 = g.lookup("e3").unwrap();
        let e2 = g.lookup("e2").unwrap();
        assert!(matches!(
            g.compose(e3, e2),
            Err(crate::error::Error::TruncationExceeded(_))
        ));
        assert_eq!(g.compose(e2, e2).unwrap(), g.lookup("e4").unwrap());
    }

    #[test]
    fn sy_endpoints_and_composition() {
        let g = build_sy(2, 2).unwrap();
        assert_eq!(g.len(), 26);
        assert!(g.validate().is_clean());
        let g03 = g.lookup("g0_1").unwrap();
        assert_eq!(g.id(g.range(g03)), "g0");
        let g1m2 = g.lookup("g1_-2").unwrap();
        assert_eq!(g.id(g.range(g1m2)), "f0");
        assert_eq!(g.id(g.source(g1m2)), "g0");
        // f_(0,1) . g_(1,0) = g_(1,1)
        let f01 = g.lookup("f0_1").unwrap();
        let g10 = g.lookup("g1_0").unwrap();
        assert_eq!(g.compose(f01, g10).unwrap(), g.lookup("g1_1").unwrap());
        // s in S and t outside S implies s <= t.
        for s in g.all_paths() {
            for t in g.all_paths() {
                let (sa, _) = lex_parts(g.degree(s));
                let (ta, _) = lex_parts(g.degree(t));
                if sa == 0 && ta >= 1 {
                    assert!(g.degree(s).leq(g.degree(t)).unwrap());
                }
            }
        }
    }

    #[test]
    fn sy_unique_paths_per_degree_and_vertex() {
        let g = build_sy(2, 2).unwrap();
        // Λ^s v is at most a singleton for every vertex and degree (each
        // vertex emits one path of each degree).
        let degrees: Vec<_> = g.degrees().cloned().collect();
        for &v in g.vertices() {
            for d in &degrees {
                let n = g
                    .at_source(v)
                    .iter()
                    .filter(|&&p| g.degree(p) == d)
                    .count();
                assert!(n <= 1);
            }
        }
    }

    #[test]
    fn hereditary_embedding_accepts_powers_of_a_letter() {
        let lam = build_loop(4).unwrap();
        let f2 = Qlo::FreeMonoid(2);
        let emb = MonoidEmbedding {
            source: Qlo::Nk(1),
            target: f2,
            gen_images: vec![f2.word_element(&[0]).unwrap()],
        };
        let lam_p = build_hereditary_embedding(
            &lam,
            &emb,
            &DegreeBound::Box(vec![BigInt::from(4)]),
            &DegreeBound::WordLen(4),
        )
        .unwrap();
        assert!(lam_p.validate().is_clean());
        // MCE sets transport elementwise under the identity map on paths.
        for mu in lam.all_paths() {
            for nu in lam.all_paths() {
                let a: Vec<String> = lam
                    .mce(mu, nu)
                    .map(|m| m.iter().map(|&x| lam.id(x).to_string()).collect())
                    .unwrap_or_default();
                let b: Vec<String> = lam_p
                    .mce(lam_p.lookup(lam.id(mu)).unwrap(), lam_p.lookup(lam.id(nu)).unwrap())
                    .map(|m| m.iter().map(|&x| lam_p.id(x).to_string()).collect())
                    .unwrap_or_default();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn relabelled_loop_graph_has_identical_relation_reports() {
        use crate::algebra::{checks, Flavor, Representation};
        use std::sync::Arc;
        let lam = build_loop(4).unwrap();
        let f2 = Qlo::FreeMonoid(2);
        let emb = MonoidEmbedding {
            source: Qlo::Nk(1),
            target: f2,
            gen_images: vec![f2.word_element(&[0]).unwrap()],
        };
        let lam_p = build_hereditary_embedding(
            &lam,
            &emb,
            &DegreeBound::Box(vec![BigInt::from(4)]),
            &DegreeBound::WordLen(4),
        )
        .unwrap();
        // The degree re-labelling changes nothing about the representation
        // relations: the reports agree check by check.
        let summarise = |g: &PGraph| -> Vec<(String, crate::report::CheckStatus)> {
            let rep = Representation::new(Arc::new(g.clone()), Flavor::Filters).unwrap();
            checks::check_path_relations(&rep, None)
                .unwrap()
                .into_iter()
                .map(|r| (r.id, r.status))
                .collect()
        };
        assert_eq!(summarise(&lam), summarise(&lam_p));
    }

    #[test]
    fn non_hereditary_embedding_is_rejected_with_witness() {
        let lam = build_loop(3).unwrap();
        let n2 = Qlo::Nk(2);
        let emb = MonoidEmbedding {
            source: Qlo::Nk(1),
            target: n2,
            gen_images: vec![n2.nk_element(&[1, 1]).unwrap()],
        };
        let err = build_hereditary_embedding(
            &lam,
            &emb,
            &DegreeBound::Box(vec![BigInt::from(3)]),
            &DegreeBound::Box(vec![BigInt::from(2), BigInt::from(2)]),
        )
        .unwrap_err();
        match err {
            Error::NotHereditary { pq, .. } => assert_eq!(pq, "(1,1)"),
            other => panic!("expected hereditariness failure, got {other}"),
        }
    }
}
