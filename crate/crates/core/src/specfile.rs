//! The line-oriented graph description format.
//!
//! ```text
//! # comments start with '#'
//! group nk 2 | group freemonoid <n> | group freeprod-n2n | group lex-z2
//! bound <args>            # nk: b1,..,bk; freemonoid: len;
//!                         # freeprod-n2n: <max_blocks> <max_seg>; lex-z2: <a> <b>
//! vertex <id>
//! edge <id> <range> <source> <gen>       # gen: x1..xk or a letter
//! square <e> <f'> = <f> <e''>            # e.f' = f.e'' with colours swapped
//! builtin sy                             # lex-z2 only
//! [hybrid]                               # freeprod-n2n only
//! dgraph default | dgraph v: a,b e: id r s, id r s
//! egraph0 v: ... e: ...   (likewise egraph1, fgraph0, fgraph1)
//! attach0 <v> <w>
//! attach1 <v> <w>
//! ```
//!
//! For `nk k` with k >= 2 the squares must cover every two-colour
//! composable edge pair exactly once and be consistent on all composable
//! edge triples; the generated paths are colour-sorted normal words.

use crate::error::{Error, Result};
use crate::graph::{GraphMode, PGraph, RawCompose, RawPath};
use crate::qlo::{DegreeBound, Qlo};
use crate::spielberg::{
    build_hybrid, default_connecting_graph, DirectedGraph, Hybrid, HybridBound, HybridSpec,
};
use num_bigint::BigInt;
use sha2::{Digest, Sha256};
use std::collections::HashMap;

/// A parsed graph: a plain path table, or a hybrid with its segment
/// structure.
pub enum ParsedGraph {
    Plain(PGraph),
    Hybrid(Hybrid),
}

impl ParsedGraph {
    pub fn graph(&self) -> &PGraph {
        match self {
            ParsedGraph::Plain(g) => g,
            ParsedGraph::Hybrid(h) => &h.graph,
        }
    }

    pub fn as_hybrid(&self) -> Option<&Hybrid> {
        match self {
            ParsedGraph::Hybrid(h) => Some(h),
            ParsedGraph::Plain(_) => None,
        }
    }
}

/// Parsed document: the graph plus identifying metadata.
pub struct ParsedDoc {
    pub graph: ParsedGraph,
    /// Content hash of the source text.
    pub source_hash: String,
    pub bound_label: Option<String>,
}

#[derive(Debug, Clone)]
struct EdgeDecl {
    id: String,
    range: String,
    source: String,
    gen: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct SquareDecl {
    e: String,
    fp: String,
    f: String,
    epp: String,
    line: usize,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_directed_graph(line_no: usize, rest: &str) -> Result<DirectedGraph> {
    if rest.trim() == "default" {
        return Ok(default_connecting_graph());
    }
    let body = rest.trim();
    let v_pos = body
        .find("v:")
        .ok_or_else(|| perr(line_no, "expected `v:` section"))?;
    let e_pos = body
        .find("e:")
        .ok_or_else(|| perr(line_no, "expected `e:` section"))?;
    if e_pos < v_pos {
        return Err(perr(line_no, "`v:` must precede `e:`"));
    }
    let vertices: Vec<String> = body[v_pos + 2..e_pos]
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let mut edges = Vec::new();
    for part in body[e_pos + 2..].split(',') {
        let toks: Vec<&str> = part.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 {
            return Err(perr(
                line_no,
                format!("edge triple `{part}` needs id range source"),
            ));
        }
        edges.push((toks[0].to_string(), toks[1].to_string(), toks[2].to_string()));
    }
    if vertices.is_empty() {
        return Err(perr(line_no, "empty vertex list"));
    }
    Ok(DirectedGraph { vertices, edges })
}

/// Parse a graph description and build the graph it denotes.
pub fn parse_spec(text: &str) -> Result<ParsedDoc> {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let source_hash: String = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();

    let mut group: Option<(Qlo, usize)> = None;
    let mut bound_args: Option<(String, usize)> = None;
    let mut vertices: Vec<(String, usize)> = Vec::new();
    let mut edges: Vec<EdgeDecl> = Vec::new();
    let mut squares: Vec<SquareDecl> = Vec::new();
    let mut builtin: Option<(String, usize)> = None;
    let mut in_hybrid = false;
    let mut hybrid_parts: HashMap<String, (String, usize)> = HashMap::new();

    for (ix, raw) in text.lines().enumerate() {
        let line_no = ix + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[hybrid]" {
            in_hybrid = true;
            continue;
        }
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        if in_hybrid {
            match keyword {
                "dgraph" | "egraph0" | "egraph1" | "fgraph0" | "fgraph1" | "attach0"
                | "attach1" => {
                    if hybrid_parts
                        .insert(keyword.to_string(), (rest.to_string(), line_no))
                        .is_some()
                    {
                        return Err(perr(line_no, format!("duplicate `{keyword}`")));
                    }
                }
                other => {
                    return Err(perr(line_no, format!("unknown hybrid directive `{other}`")))
                }
            }
            continue;
        }
        match keyword {
            "group" => {
                if group.is_some() {
                    return Err(perr(line_no, "duplicate `group`"));
                }
                let toks: Vec<&str> = rest.split_whitespace().collect();
                let qlo = match toks.as_slice() {
                    ["nk", k] => Qlo::Nk(
                        k.parse()
                            .map_err(|_| perr(line_no, "nk arity must be an integer"))?,
                    ),
                    ["freemonoid", n] => Qlo::FreeMonoid(
                        n.parse()
                            .map_err(|_| perr(line_no, "alphabet size must be an integer"))?,
                    ),
                    ["freeprod-n2n"] => Qlo::FreeProductN2N,
                    ["lex-z2"] => Qlo::LexZ2,
                    _ => return Err(perr(line_no, format!("unknown group `{rest}`"))),
                };
                group = Some((qlo, line_no));
            }
            "bound" => {
                if bound_args.is_some() {
                    return Err(perr(line_no, "duplicate `bound`"));
                }
                bound_args = Some((rest.to_string(), line_no));
            }
            "vertex" => {
                if rest.is_empty() || rest.split_whitespace().count() != 1 {
                    return Err(perr(line_no, "vertex takes one id"));
                }
                vertices.push((rest.to_string(), line_no));
            }
            "edge" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() != 4 {
                    return Err(perr(line_no, "edge takes: id range source generator"));
                }
                edges.push(EdgeDecl {
                    id: toks[0].into(),
                    range: toks[1].into(),
                    source: toks[2].into(),
                    gen: toks[3].into(),
                    line: line_no,
                });
            }
            "square" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() != 5 || toks[2] != "=" {
                    return Err(perr(line_no, "square takes: e f' = f e''"));
                }
                squares.push(SquareDecl {
                    e: toks[0].into(),
                    fp: toks[1].into(),
                    f: toks[3].into(),
                    epp: toks[4].into(),
                    line: line_no,
                });
            }
            "builtin" => {
                if builtin.is_some() {
                    return Err(perr(line_no, "duplicate `builtin`"));
                }
                builtin = Some((rest.to_string(), line_no));
            }
            other => return Err(perr(line_no, format!("unknown directive `{other}`"))),
        }
    }

    let (qlo, group_line) = group.ok_or_else(|| perr(0, "missing `group` line"))?;
    let bound_label = bound_args.as_ref().map(|(a, _)| a.clone());

    match qlo {
        Qlo::LexZ2 => {
            let (b, bline) = builtin
                .ok_or_else(|| perr(group_line, "lex-z2 graphs are built in: add `builtin sy`"))?;
            if b != "sy" {
                return Err(perr(bline, format!("unknown builtin `{b}`")));
            }
            if !vertices.is_empty() || !edges.is_empty() || !squares.is_empty() {
                return Err(perr(bline, "builtin graphs take no vertex or edge lines"));
            }
            let (args, aline) =
                bound_args.ok_or_else(|| perr(bline, "builtin sy needs `bound <a_max> <b_max>`"))?;
            let toks: Vec<&str> = args.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(perr(aline, "bound takes two integers"));
            }
            let a: i64 = toks[0].parse().map_err(|_| perr(aline, "bad bound"))?;
            let b: i64 = toks[1].parse().map_err(|_| perr(aline, "bad bound"))?;
            Ok(ParsedDoc {
                graph: ParsedGraph::Plain(crate::catalog::build_sy(a, b)?),
                source_hash,
                bound_label,
            })
        }
        Qlo::FreeProductN2N => {
            if !vertices.is_empty() || !edges.is_empty() || !squares.is_empty() {
                return Err(perr(
                    group_line,
                    "freeprod-n2n graphs are described by the [hybrid] section",
                ));
            }
            let get = |k: &str| -> Result<(String, usize)> {
                hybrid_parts
                    .get(k)
                    .cloned()
                    .ok_or_else(|| perr(group_line, format!("hybrid section needs `{k}`")))
            };
            let (args, aline) = bound_args
                .ok_or_else(|| perr(group_line, "hybrid needs `bound <blocks> <seg>`"))?;
            let toks: Vec<&str> = args.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(perr(aline, "bound takes two integers"));
            }
            let max_blocks: usize = toks[0].parse().map_err(|_| perr(aline, "bad bound"))?;
            let max_seg: u64 = toks[1].parse().map_err(|_| perr(aline, "bad bound"))?;
            let (d_raw, d_line) = get("dgraph")?;
            let d = parse_directed_graph(d_line, &d_raw)?;
            let marks = if d_raw.trim() == "default" {
                ["u0".to_string(), "u1".to_string()]
            } else {
                if d.vertices.len() < 2 {
                    return Err(perr(d_line, "connecting graph needs two mark vertices"));
                }
                // The first two declared vertices are the marks.
                [d.vertices[0].clone(), d.vertices[1].clone()]
            };
            let sub = |k: &str| -> Result<DirectedGraph> {
                let (raw, line) = get(k)?;
                parse_directed_graph(line, &raw)
            };
            let attach = |k: &str| -> Result<(String, String)> {
                let (raw, line) = get(k)?;
                let toks: Vec<&str> = raw.split_whitespace().collect();
                if toks.len() != 2 {
                    return Err(perr(line, "attach takes two vertex names"));
                }
                Ok((toks[0].to_string(), toks[1].to_string()))
            };
            let spec = HybridSpec {
                d,
                marks,
                e: [sub("egraph0")?, sub("egraph1")?],
                f: [sub("fgraph0")?, sub("fgraph1")?],
                attach: [attach("attach0")?, attach("attach1")?],
            };
            let hybrid = build_hybrid(
                spec,
                HybridBound {
                    max_blocks,
                    max_seg,
                },
            )?;
            Ok(ParsedDoc {
                graph: ParsedGraph::Hybrid(hybrid),
                source_hash,
                bound_label,
            })
        }
        Qlo::Nk(k) => {
            if vertices.is_empty() {
                return Err(perr(group_line, "empty vertex list"));
            }
            let bound = match &bound_args {
                Some((args, aline)) => {
                    let parts: Vec<i64> = args
                        .split(',')
                        .map(|t| t.trim().parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| perr(*aline, "bound takes k comma-separated integers"))?;
                    if parts.len() != k {
                        return Err(perr(*aline, format!("bound needs {k} entries")));
                    }
                    Some(DegreeBound::Box(
                        parts.into_iter().map(BigInt::from).collect(),
                    ))
                }
                None => None,
            };
            let g = build_colored(qlo, k, &vertices, &edges, &squares, bound)?;
            Ok(ParsedDoc {
                graph: ParsedGraph::Plain(g),
                source_hash,
                bound_label,
            })
        }
        Qlo::FreeMonoid(n) => {
            if vertices.is_empty() {
                return Err(perr(group_line, "empty vertex list"));
            }
            if let Some(sq) = squares.first() {
                return Err(perr(sq.line, "free-monoid graphs admit no squares"));
            }
            let bound = match &bound_args {
                Some((args, aline)) => Some(DegreeBound::WordLen(
                    args.trim()
                        .parse()
                        .map_err(|_| perr(*aline, "bound takes one integer"))?,
                )),
                None => None,
            };
            let g = build_colored(qlo, n, &vertices, &edges, &squares, bound)?;
            Ok(ParsedDoc {
                graph: ParsedGraph::Plain(g),
                source_hash,
                bound_label,
            })
        }
    }
}

const PATH_CAP: usize = 200_000;

/// Build the category generated by a coloured skeleton. For a lattice cone
/// on two or more generators the squares define the factorisations and the
/// normal form is the colour-sorted edge word; over the free monoid the
/// edge word itself is the normal form.
fn build_colored(
    qlo: Qlo,
    _n_colors: usize,
    vertices: &[(String, usize)],
    edges: &[EdgeDecl],
    squares: &[SquareDecl],
    bound: Option<DegreeBound>,
) -> Result<PGraph> {
    let sorted_colors = matches!(qlo, Qlo::Nk(_));

    // Resolve names.
    let vnames: Vec<&str> = vertices.iter().map(|(v, _)| v.as_str()).collect();
    for (v, line) in vertices {
        if vnames.iter().filter(|x| **x == v.as_str()).count() > 1 {
            return Err(perr(*line, format!("duplicate vertex `{v}`")));
        }
    }
    let mut edge_ix: HashMap<&str, usize> = HashMap::new();
    let mut colors: Vec<usize> = Vec::new();
    for (ix, e) in edges.iter().enumerate() {
        if edge_ix.insert(e.id.as_str(), ix).is_some() {
            return Err(perr(e.line, format!("duplicate edge `{}`", e.id)));
        }
        for endpoint in [&e.range, &e.source] {
            if !vnames.contains(&endpoint.as_str()) {
                return Err(perr(e.line, format!("undeclared vertex `{endpoint}`")));
            }
        }
        let color = match qlo {
            Qlo::Nk(k) => {
                let t = e.gen.strip_prefix('x').ok_or_else(|| {
                    perr(e.line, format!("generator `{}` must be x1..x{k}", e.gen))
                })?;
                let c: usize = t
                    .parse()
                    .map_err(|_| perr(e.line, format!("bad generator `{}`", e.gen)))?;
                if c == 0 || c > k {
                    return Err(perr(e.line, format!("generator `{}` out of range", e.gen)));
                }
                c - 1
            }
            Qlo::FreeMonoid(n) => {
                let b = e.gen.as_bytes();
                if b.len() != 1 || !(b'a'..b'a' + n as u8).contains(&b[0]) {
                    return Err(perr(
                        e.line,
                        format!("generator `{}` must be one of the first {n} letters", e.gen),
                    ));
                }
                (b[0] - b'a') as usize
            }
            _ => unreachable!(),
        };
        colors.push(color);
    }

    // Square system: an involutive pairing of two-colour composable pairs.
    let mut swap: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    if sorted_colors {
        for sq in squares {
            let get = |name: &str| {
                edge_ix
                    .get(name)
                    .copied()
                    .ok_or_else(|| perr(sq.line, format!("unknown edge `{name}` in square")))
            };
            let (e, fp, f, epp) = (get(&sq.e)?, get(&sq.fp)?, get(&sq.f)?, get(&sq.epp)?);
            let ed = |i: usize| &edges[i];
            if colors[e] != colors[epp] || colors[f] != colors[fp] || colors[e] == colors[f] {
                return Err(perr(sq.line, "square colours must swap"));
            }
            if ed(e).source != ed(fp).range
                || ed(f).source != ed(epp).range
                || ed(e).range != ed(f).range
                || ed(fp).source != ed(epp).source
            {
                return Err(perr(sq.line, "square endpoints do not close"));
            }
            for (key, val) in [((e, fp), (f, epp)), ((f, epp), (e, fp))] {
                if swap.insert(key, val).is_some() {
                    return Err(perr(
                        sq.line,
                        format!(
                            "edge pair {} {} is covered by two squares",
                            edges[key.0].id, edges[key.1].id
                        ),
                    ));
                }
            }
        }
        // Completeness over all mixed-colour composable pairs.
        for (a, ea) in edges.iter().enumerate() {
            for (b, eb) in edges.iter().enumerate() {
                if ea.source == eb.range && colors[a] != colors[b] && !swap.contains_key(&(a, b)) {
                    return Err(Error::IncompleteSquares(ea.id.clone(), eb.id.clone()));
                }
            }
        }
    }

    // Append one edge at the source end of a colour-sorted word, bubbling
    // it leftwards through higher colours via the squares.
    let append = |word: &[usize], e: usize| -> Vec<usize> {
        let mut w = word.to_vec();
        w.push(e);
        if sorted_colors {
            let mut i = w.len() - 1;
            while i > 0 && colors[w[i - 1]] > colors[w[i]] {
                let (x, y) = swap[&(w[i - 1], w[i])];
                w[i - 1] = x;
                w[i] = y;
                i -= 1;
            }
        }
        w
    };

    // Consistency of the squares on all composable triples: the two
    // bracketings must produce the same normal word.
    if sorted_colors && !squares.is_empty() {
        for (x, ex) in edges.iter().enumerate() {
            for (y, ey) in edges.iter().enumerate() {
                if ex.source != ey.range {
                    continue;
                }
                for (z, ez) in edges.iter().enumerate() {
                    if ey.source != ez.range {
                        continue;
                    }
                    let left = append(&append(&[x], y), z);
                    let mut right = vec![x];
                    for &e in &append(&[y], z) {
                        right = append(&right, e);
                    }
                    if left != right {
                        return Err(Error::InconsistentSquares(format!(
                            "{} {} {}",
                            ex.id, ey.id, ez.id
                        )));
                    }
                }
            }
        }
    }

    let word_degree = |word: &[usize]| -> GroupElementResult {
        match qlo {
            Qlo::Nk(k) => {
                let mut counts = vec![0i64; k];
                for &e in word {
                    counts[colors[e]] += 1;
                }
                qlo.nk_element(&counts)
            }
            Qlo::FreeMonoid(_) => {
                let letters: Vec<u8> = word.iter().map(|&e| colors[e] as u8).collect();
                qlo.word_element(&letters)
            }
            _ => unreachable!(),
        }
    };

    let in_bound = |word: &[usize]| -> bool {
        match &bound {
            None => true,
            Some(b) => word_degree(word).map(|d| b.contains(&d)).unwrap_or(false),
        }
    };

    // Enumerate all in-bound paths by extension; the key is the pair
    // (range vertex, normal word).
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct Key {
        range: String,
        word: Vec<usize>,
    }
    let word_source = |key: &Key| -> String {
        match key.word.last() {
            None => key.range.clone(),
            Some(&e) => edges[e].source.clone(),
        }
    };
    let word_id = |key: &Key| -> String {
        if key.word.is_empty() {
            key.range.clone()
        } else {
            key.word
                .iter()
                .map(|&e| edges[e].id.clone())
                .collect::<Vec<_>>()
                .join(".")
        }
    };

    let mut seen: Vec<Key> = Vec::new();
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut frontier: Vec<Key> = Vec::new();
    for (v, _) in vertices {
        let key = Key {
            range: v.clone(),
            word: Vec::new(),
        };
        index.insert(key.clone(), seen.len());
        seen.push(key.clone());
        frontier.push(key);
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for key in &frontier {
            let src = word_source(key);
            for (e, ed) in edges.iter().enumerate() {
                if ed.range != src {
                    continue;
                }
                let word = append(&key.word, e);
                if !in_bound(&word) {
                    continue;
                }
                let new_key = Key {
                    range: key.range.clone(),
                    word,
                };
                if !index.contains_key(&new_key) {
                    index.insert(new_key.clone(), seen.len());
                    seen.push(new_key.clone());
                    next.push(new_key);
                    if seen.len() > PATH_CAP {
                        return Err(Error::CapExceeded(format!(
                            "more than {PATH_CAP} paths; add or tighten a `bound`"
                        )));
                    }
                }
            }
        }
        frontier = next;
    }

    let mut raw_paths = Vec::with_capacity(seen.len());
    for key in &seen {
        raw_paths.push(RawPath {
            id: word_id(key),
            range: key.range.clone(),
            source: word_source(key),
            degree: word_degree(&key.word)?,
        });
    }

    // Compositions: fold the second word into the first.
    let mut raw_compose = Vec::new();
    for a in &seen {
        if a.word.is_empty() {
            continue;
        }
        let a_src = word_source(a);
        for b in &seen {
            if b.word.is_empty() || b.range != a_src {
                continue;
            }
            let mut word = a.word.clone();
            for &e in &b.word {
                word = append(&word, e);
            }
            let result = if in_bound(&word) {
                let key = Key {
                    range: a.range.clone(),
                    word,
                };
                Some(word_id(&key))
            } else {
                None
            };
            raw_compose.push(RawCompose {
                first: word_id(a),
                second: word_id(b),
                result,
            });
        }
    }

    let mode = match bound {
        None => GraphMode::Finite,
        Some(b) => GraphMode::Truncated(b),
    };
    PGraph::from_parts(qlo, mode, raw_paths, raw_compose)
}

type GroupElementResult = Result<crate::qlo::GroupElement>;
