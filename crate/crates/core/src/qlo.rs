//! Quasi-lattice ordered groups (G, P).
//!
//! A quasi-lattice ordered group is a discrete group G with a subsemigroup P
//! such that P ∩ P⁻¹ = {e}, where under the left-invariant partial order
//! p ≤ q ⇔ p⁻¹q ∈ P any two elements with a common upper bound in P have a
//! least one, written p ∨ q. Four instances are built in:
//!
//! * `Nk(k)` — ℕᵏ inside ℤᵏ; join is the componentwise maximum.
//! * `FreeMonoid(n)` — the free monoid on n letters inside the free group;
//!   the order is the prefix order.
//! * `FreeProductN2N` — ℕ² ∗ ℕ inside ℤ² ∗ ℤ; elements are alternating
//!   words of nonzero ℕ²-blocks and ℕ-blocks.
//! * `LexZ2` — P = ({0} × ℕ) ∪ ((ℕ∖{0}) × ℤ) inside ℤ²; the induced order
//!   is the lexicographic order, which is total on P.
//!
//! Elements of P carry a unique normal form, so equality is payload
//! equality, and all arithmetic is exact big-integer arithmetic.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Instance tag for a quasi-lattice ordered group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qlo {
    /// ℕᵏ in ℤᵏ.
    Nk(usize),
    /// Free monoid on n letters in the free group on n letters.
    FreeMonoid(usize),
    /// ℕ² ∗ ℕ in ℤ² ∗ ℤ.
    FreeProductN2N,
    /// The lexicographic pair: P = ({0} × ℕ) ∪ ((ℕ∖{0}) × ℤ) in ℤ².
    LexZ2,
}

impl fmt::Display for Qlo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qlo::Nk(k) => write!(f, "nk {k}"),
            Qlo::FreeMonoid(n) => write!(f, "freemonoid {n}"),
            Qlo::FreeProductN2N => write!(f, "freeprod-n2n"),
            Qlo::LexZ2 => write!(f, "lex-z2"),
        }
    }
}

/// One block of an alternating ℕ² ∗ ℕ word. Blocks are never zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    /// An ℕ²-block.
    Plane(BigInt, BigInt),
    /// An ℕ-block.
    Line(BigInt),
}

impl Block {
    pub fn is_zero(&self) -> bool {
        match self {
            Block::Plane(a, b) => a.is_zero() && b.is_zero(),
            Block::Line(a) => a.is_zero(),
        }
    }

    fn same_type(&self, other: &Block) -> bool {
        matches!(
            (self, other),
            (Block::Plane(..), Block::Plane(..)) | (Block::Line(..), Block::Line(..))
        )
    }

    fn add(&self, other: &Block) -> Block {
        match (self, other) {
            (Block::Plane(a, b), Block::Plane(c, d)) => Block::Plane(a + c, b + d),
            (Block::Line(a), Block::Line(b)) => Block::Line(a + b),
            _ => unreachable!("adding blocks of different type"),
        }
    }

    /// Componentwise `self ≤ other`; only meaningful for same-type blocks.
    fn leq(&self, other: &Block) -> bool {
        match (self, other) {
            (Block::Plane(a, b), Block::Plane(c, d)) => a <= c && b <= d,
            (Block::Line(a), Block::Line(b)) => a <= b,
            _ => false,
        }
    }

    fn join(&self, other: &Block) -> Option<Block> {
        match (self, other) {
            (Block::Plane(a, b), Block::Plane(c, d)) => {
                Some(Block::Plane(a.max(c).clone(), b.max(d).clone()))
            }
            (Block::Line(a), Block::Line(b)) => Some(Block::Line(a.max(b).clone())),
            _ => None,
        }
    }

    fn sub(&self, other: &Block) -> Block {
        match (self, other) {
            (Block::Plane(a, b), Block::Plane(c, d)) => Block::Plane(a - c, b - d),
            (Block::Line(a), Block::Line(b)) => Block::Line(a - b),
            _ => unreachable!("subtracting blocks of different type"),
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Plane(a, b) => write!(f, "({a},{b})"),
            Block::Line(a) => write!(f, "{a}"),
        }
    }
}

/// Normal-form payload of an element of P.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    /// Coordinate vector: used by `Nk` (entries ≥ 0) and `LexZ2` (pair in P).
    Vector(Vec<BigInt>),
    /// Letter sequence, letters indexed 0..n: used by `FreeMonoid`.
    Letters(Vec<u8>),
    /// Alternating nonzero blocks: used by `FreeProductN2N`.
    Blocks(Vec<Block>),
}

/// A normal-form element of the positive cone P of a quasi-lattice ordered
/// group. Two elements are equal iff their payloads are identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    qlo: Qlo,
    payload: Payload,
}

/// Result of a join computation: either the least common upper bound in P,
/// or the marker that no common upper bound exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinResult {
    Element(GroupElement),
    Infinity,
}

impl JoinResult {
    pub fn into_option(self) -> Option<GroupElement> {
        match self {
            JoinResult::Element(g) => Some(g),
            JoinResult::Infinity => None,
        }
    }

    pub fn as_option(&self) -> Option<&GroupElement> {
        match self {
            JoinResult::Element(g) => Some(g),
            JoinResult::Infinity => None,
        }
    }
}

fn big(i: i64) -> BigInt {
    BigInt::from(i)
}

impl Qlo {
    /// The identity element e of P (empty word / zero vector).
    pub fn identity(&self) -> GroupElement {
        let payload = match self {
            Qlo::Nk(k) => Payload::Vector(vec![BigInt::zero(); *k]),
            Qlo::FreeMonoid(_) => Payload::Letters(Vec::new()),
            Qlo::FreeProductN2N => Payload::Blocks(Vec::new()),
            Qlo::LexZ2 => Payload::Vector(vec![BigInt::zero(), BigInt::zero()]),
        };
        GroupElement { qlo: *self, payload }
    }

    /// Build an ℕᵏ element from integer coordinates.
    pub fn nk_element(&self, coords: &[i64]) -> Result<GroupElement> {
        match self {
            Qlo::Nk(k) => {
                if coords.len() != *k {
                    return Err(Error::InvalidGraph(format!(
                        "expected {k} coordinates, got {}",
                        coords.len()
                    )));
                }
                if coords.iter().any(|c| *c < 0) {
                    return Err(Error::InvalidGraph(format!(
                        "negative coordinate in {coords:?}"
                    )));
                }
                Ok(GroupElement {
                    qlo: *self,
                    payload: Payload::Vector(coords.iter().map(|c| big(*c)).collect()),
                })
            }
            _ => Err(Error::InstanceMismatch(
                self.to_string(),
                "nk element".into(),
            )),
        }
    }

    /// Build a free-monoid word from letter indices.
    pub fn word_element(&self, letters: &[u8]) -> Result<GroupElement> {
        match self {
            Qlo::FreeMonoid(n) => {
                if letters.iter().any(|l| (*l as usize) >= *n) {
                    return Err(Error::InvalidGraph(format!(
                        "letter out of range in {letters:?} (alphabet size {n})"
                    )));
                }
                Ok(GroupElement {
                    qlo: *self,
                    payload: Payload::Letters(letters.to_vec()),
                })
            }
            _ => Err(Error::InstanceMismatch(
                self.to_string(),
                "word element".into(),
            )),
        }
    }

    /// Build an ℕ² ∗ ℕ element from blocks; rejects zero blocks and adjacent
    /// blocks of the same type.
    pub fn blocks_element(&self, blocks: Vec<Block>) -> Result<GroupElement> {
        match self {
            Qlo::FreeProductN2N => {
                for b in &blocks {
                    if b.is_zero() {
                        return Err(Error::InvalidGraph("zero block in word".into()));
                    }
                    let neg = match b {
                        Block::Plane(a, c) => a.is_negative() || c.is_negative(),
                        Block::Line(a) => a.is_negative(),
                    };
                    if neg {
                        return Err(Error::InvalidGraph("negative block in word".into()));
                    }
                }
                for w in blocks.windows(2) {
                    if w[0].same_type(&w[1]) {
                        return Err(Error::InvalidGraph(
                            "adjacent blocks of the same type".into(),
                        ));
                    }
                }
                Ok(GroupElement {
                    qlo: *self,
                    payload: Payload::Blocks(blocks),
                })
            }
            _ => Err(Error::InstanceMismatch(
                self.to_string(),
                "blocks element".into(),
            )),
        }
    }

    /// Build a lexicographic-pair element (a, b); rejects pairs outside P.
    pub fn lex_element(&self, a: i64, b: i64) -> Result<GroupElement> {
        match self {
            Qlo::LexZ2 => {
                if !(a >= 1 || (a == 0 && b >= 0)) {
                    return Err(Error::InvalidGraph(format!("({a},{b}) is not in P")));
                }
                Ok(GroupElement {
                    qlo: *self,
                    payload: Payload::Vector(vec![big(a), big(b)]),
                })
            }
            _ => Err(Error::InstanceMismatch(
                self.to_string(),
                "lex element".into(),
            )),
        }
    }
}

impl GroupElement {
    pub fn qlo(&self) -> Qlo {
        self.qlo
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn is_identity(&self) -> bool {
        match &self.payload {
            Payload::Vector(v) => v.iter().all(|c| c.is_zero()),
            Payload::Letters(w) => w.is_empty(),
            Payload::Blocks(b) => b.is_empty(),
        }
    }

    fn check_instance(&self, other: &GroupElement) -> Result<()> {
        if self.qlo != other.qlo {
            Err(Error::InstanceMismatch(
                self.qlo.to_string(),
                other.qlo.to_string(),
            ))
        } else {
            Ok(())
        }
    }

    /// Semigroup product pq in normal form.
    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        self.check_instance(other)?;
        let payload = match (&self.payload, &other.payload) {
            (Payload::Vector(a), Payload::Vector(b)) => {
                Payload::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Payload::Letters(a), Payload::Letters(b)) => {
                let mut w = a.clone();
                w.extend_from_slice(b);
                Payload::Letters(w)
            }
            (Payload::Blocks(a), Payload::Blocks(b)) => {
                let mut w = a.clone();
                let mut rest = b.iter();
                if let (Some(last), Some(first)) = (w.last(), b.first()) {
                    if last.same_type(first) {
                        let merged = last.add(first);
                        *w.last_mut().unwrap() = merged;
                        rest.next();
                    }
                }
                w.extend(rest.cloned());
                Payload::Blocks(w)
            }
            _ => unreachable!("instance check passed but payloads differ"),
        };
        Ok(GroupElement {
            qlo: self.qlo,
            payload,
        })
    }

    /// The partial order p ≤ q ⇔ p⁻¹q ∈ P.
    pub fn leq(&self, other: &GroupElement) -> Result<bool> {
        self.check_instance(other)?;
        Ok(match (&self.payload, &other.payload) {
            (Payload::Vector(a), Payload::Vector(b)) => match self.qlo {
                Qlo::Nk(_) => a.iter().zip(b).all(|(x, y)| x <= y),
                Qlo::LexZ2 => {
                    // q - p must lie in P.
                    let da = &b[0] - &a[0];
                    let db = &b[1] - &a[1];
                    da.is_positive() || (da.is_zero() && !db.is_negative())
                }
                _ => unreachable!(),
            },
            (Payload::Letters(a), Payload::Letters(b)) => {
                a.len() <= b.len() && &b[..a.len()] == a.as_slice()
            }
            (Payload::Blocks(a), Payload::Blocks(b)) => blocks_leq(a, b),
            _ => unreachable!(),
        })
    }

    /// Least common upper bound in P, or Infinity when none exists.
    pub fn join(&self, other: &GroupElement) -> Result<JoinResult> {
        self.check_instance(other)?;
        let payload = match (&self.payload, &other.payload) {
            (Payload::Vector(a), Payload::Vector(b)) => match self.qlo {
                Qlo::Nk(_) => {
                    Payload::Vector(a.iter().zip(b).map(|(x, y)| x.max(y).clone()).collect())
                }
                Qlo::LexZ2 => {
                    // The order on P is total, so the join is the larger element.
                    if self.leq(other)? {
                        other.payload.clone()
                    } else {
                        self.payload.clone()
                    }
                }
                _ => unreachable!(),
            },
            (Payload::Letters(_), Payload::Letters(_)) => {
                if self.leq(other)? {
                    other.payload.clone()
                } else if other.leq(self)? {
                    self.payload.clone()
                } else {
                    return Ok(JoinResult::Infinity);
                }
            }
            (Payload::Blocks(a), Payload::Blocks(b)) => match blocks_join(a, b) {
                Some(w) => Payload::Blocks(w),
                None => return Ok(JoinResult::Infinity),
            },
            _ => unreachable!(),
        };
        Ok(JoinResult::Element(GroupElement {
            qlo: self.qlo,
            payload,
        }))
    }

    /// The unique x ∈ P with p · x = q; requires p ≤ q.
    pub fn left_quotient(&self, other: &GroupElement) -> Result<GroupElement> {
        if !self.leq(other)? {
            return Err(Error::NotLowerBound(self.to_string(), other.to_string()));
        }
        let payload = match (&self.payload, &other.payload) {
            (Payload::Vector(a), Payload::Vector(b)) => {
                Payload::Vector(a.iter().zip(b).map(|(x, y)| y - x).collect())
            }
            (Payload::Letters(a), Payload::Letters(b)) => Payload::Letters(b[a.len()..].to_vec()),
            (Payload::Blocks(a), Payload::Blocks(b)) => {
                if a.is_empty() {
                    Payload::Blocks(b.clone())
                } else {
                    let m = a.len();
                    let mut w = Vec::new();
                    let last = &a[m - 1];
                    if last != &b[m - 1] {
                        w.push(b[m - 1].sub(last));
                    }
                    w.extend(b[m..].iter().cloned());
                    Payload::Blocks(w)
                }
            }
            _ => unreachable!(),
        };
        Ok(GroupElement {
            qlo: self.qlo,
            payload,
        })
    }

    /// Image in the ambient group G, as a reduced signed word.
    pub fn to_group_word(&self) -> GroupWord {
        match &self.payload {
            Payload::Vector(v) => GroupWord::Abelian(v.clone()),
            Payload::Letters(w) => {
                let mut out: Vec<(u8, BigInt)> = Vec::new();
                for l in w {
                    match out.last_mut() {
                        Some((head, exp)) if head == l => *exp += 1,
                        _ => out.push((*l, BigInt::one())),
                    }
                }
                GroupWord::Free(out)
            }
            Payload::Blocks(b) => GroupWord::ProdZ2Z(b.clone()),
        }
    }

    /// Short token usable as part of a path id or CLI argument.
    pub fn token(&self) -> String {
        match &self.payload {
            Payload::Vector(v) => v
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("_"),
            Payload::Letters(w) => {
                if w.is_empty() {
                    "e".to_string()
                } else {
                    w.iter().map(|l| (b'a' + l) as char).collect()
                }
            }
            Payload::Blocks(b) => {
                if b.is_empty() {
                    "e".to_string()
                } else {
                    b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
                }
            }
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::Vector(v) => {
                write!(f, "(")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            _ => write!(f, "{}", self.token()),
        }
    }
}

/// p ≤ q in the block-prefix order of ℕ² ∗ ℕ: all blocks but the last must
/// match exactly, and the last block of p must be a same-type componentwise
/// lower bound of the block of q at that position.
fn blocks_leq(a: &[Block], b: &[Block]) -> bool {
    if a.is_empty() {
        return true;
    }
    let m = a.len();
    if m > b.len() {
        return false;
    }
    if a[..m - 1] != b[..m - 1] {
        return false;
    }
    let (pa, qa) = (&a[m - 1], &b[m - 1]);
    if !pa.same_type(qa) || !pa.leq(qa) {
        return false;
    }
    // A strict sub-block consumes the whole position only when p ends there.
    true
}

fn blocks_join(a: &[Block], b: &[Block]) -> Option<Vec<Block>> {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return Some(long.to_vec());
    }
    let m = short.len();
    if short[..m - 1] != long[..m - 1] {
        return None;
    }
    let (sb, lb) = (&short[m - 1], &long[m - 1]);
    if short.len() == long.len() {
        let joined = sb.join(lb)?;
        let mut w = long[..m - 1].to_vec();
        w.push(joined);
        Some(w)
    } else {
        // Every common upper bound agrees with `long` on block m-1 exactly,
        // so the last block of `short` must already sit below it.
        if sb.same_type(lb) && sb.leq(lb) {
            Some(long.to_vec())
        } else {
            None
        }
    }
}

/// Closure of a finite subset of P under joins:
/// F̄ = { ∨G : G ⊆ F, ∨G ≠ ∞ }.
pub fn vee_closure(set: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let mut out: Vec<GroupElement> = Vec::new();
    for g in set {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    loop {
        let mut added = false;
        let n = out.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if let JoinResult::Element(g) = out[i].join(&out[j])? {
                    if !out.contains(&g) {
                        out.push(g);
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

/// The elements of F with nothing else in F strictly below them.
pub fn minimal_elements(set: &[GroupElement]) -> Result<Vec<GroupElement>> {
    if set.is_empty() {
        return Err(Error::EmptyInput("minimal_elements"));
    }
    let mut out = Vec::new();
    'outer: for p in set {
        for q in set {
            if q != p && q.leq(p)? {
                continue 'outer;
            }
        }
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    out.sort();
    Ok(out)
}

/// A truncation bound on degrees; used by graph builders and by the
/// splitting/element enumerators below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeBound {
    /// Componentwise box 0..=bᵢ for ℕᵏ.
    Box(Vec<BigInt>),
    /// Maximum word length for the free monoid.
    WordLen(usize),
    /// At most `max_blocks` blocks, each block entry in 0..=`max_entry`.
    Segments { max_blocks: usize, max_entry: u64 },
    /// 0 ≤ a ≤ a_max and |b| ≤ b_max for the lexicographic pair.
    LexBox { a_max: i64, b_max: i64 },
}

impl DegreeBound {
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g.payload()) {
            (DegreeBound::Box(bs), Payload::Vector(v)) => {
                v.len() == bs.len() && v.iter().zip(bs).all(|(c, b)| c <= b)
            }
            (DegreeBound::WordLen(n), Payload::Letters(w)) => w.len() <= *n,
            (DegreeBound::Segments { max_blocks, max_entry }, Payload::Blocks(bs)) => {
                let cap = big(*max_entry as i64);
                bs.len() <= *max_blocks
                    && bs.iter().all(|b| match b {
                        Block::Plane(x, y) => x <= &cap && y <= &cap,
                        Block::Line(x) => x <= &cap,
                    })
            }
            (DegreeBound::LexBox { a_max, b_max }, Payload::Vector(v)) => {
                v[0] <= big(*a_max) && v[1].abs() <= big(*b_max)
            }
            _ => false,
        }
    }
}

impl fmt::Display for DegreeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeBound::Box(bs) => write!(
                f,
                "box {}",
                bs.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
            ),
            DegreeBound::WordLen(n) => write!(f, "word length {n}"),
            DegreeBound::Segments { max_blocks, max_entry } => {
                write!(f, "{max_blocks} blocks, entries <= {max_entry}")
            }
            DegreeBound::LexBox { a_max, b_max } => write!(f, "a <= {a_max}, |b| <= {b_max}"),
        }
    }
}

/// All splittings d = p · q with p, q ∈ P. The boolean is false when the
/// full set is infinite and only the in-bound part is returned.
pub fn splittings(
    d: &GroupElement,
    bound: Option<&DegreeBound>,
) -> (Vec<(GroupElement, GroupElement)>, bool) {
    let qlo = d.qlo();
    match d.payload() {
        Payload::Vector(v) => match qlo {
            Qlo::Nk(_) => {
                let mut out = Vec::new();
                let mut p = vec![BigInt::zero(); v.len()];
                enumerate_box(v, 0, &mut p, &mut |p| {
                    let pe = GroupElement {
                        qlo,
                        payload: Payload::Vector(p.to_vec()),
                    };
                    let qe = pe.left_quotient(d).expect("box element below d");
                    out.push((pe, qe));
                });
                (out, true)
            }
            Qlo::LexZ2 => {
                // Splittings (s, d-s) with both parts in P. For d outside
                // {0} x N this set is infinite; enumerate within the bound.
                let a = &v[0];
                let b = &v[1];
                let (a_cap, b_cap, complete) = if a.is_zero() {
                    (BigInt::zero(), b.clone(), true)
                } else {
                    match bound {
                        Some(DegreeBound::LexBox { a_max, b_max }) => {
                            (big(*a_max).min(a.clone()), big(*b_max), false)
                        }
                        _ => (a.clone(), big(8), false),
                    }
                };
                let mut out = Vec::new();
                let mut x = BigInt::zero();
                while x <= a_cap {
                    let mut y = -b_cap.clone();
                    while y <= b_cap {
                        let in_p = |u: &BigInt, w: &BigInt| {
                            u.is_positive() || (u.is_zero() && !w.is_negative())
                        };
                        let (rx, ry) = (a - &x, b - &y);
                        if in_p(&x, &y) && in_p(&rx, &ry) {
                            let pe = GroupElement {
                                qlo,
                                payload: Payload::Vector(vec![x.clone(), y.clone()]),
                            };
                            let qe = GroupElement {
                                qlo,
                                payload: Payload::Vector(vec![rx, ry]),
                            };
                            out.push((pe, qe));
                        }
                        y += 1;
                    }
                    x += 1;
                }
                (out, complete)
            }
            _ => unreachable!(),
        },
        Payload::Letters(w) => {
            let out = (0..=w.len())
                .map(|i| {
                    (
                        GroupElement {
                            qlo,
                            payload: Payload::Letters(w[..i].to_vec()),
                        },
                        GroupElement {
                            qlo,
                            payload: Payload::Letters(w[i..].to_vec()),
                        },
                    )
                })
                .collect();
            (out, true)
        }
        Payload::Blocks(bs) => {
            let mut out = Vec::new();
            let make = |blocks: Vec<Block>| GroupElement {
                qlo,
                payload: Payload::Blocks(blocks),
            };
            // Boundary splits between blocks.
            for i in 0..=bs.len() {
                out.push((make(bs[..i].to_vec()), make(bs[i..].to_vec())));
            }
            // Interior splits of a single block.
            for i in 0..bs.len() {
                let mut sub_parts: Vec<Block> = Vec::new();
                match &bs[i] {
                    Block::Line(n) => {
                        let mut x = BigInt::one();
                        while &x < n {
                            sub_parts.push(Block::Line(x.clone()));
                            x += 1;
                        }
                    }
                    Block::Plane(a, b) => {
                        let mut x = BigInt::zero();
                        while &x <= a {
                            let mut y = BigInt::zero();
                            while &y <= b {
                                let blk = Block::Plane(x.clone(), y.clone());
                                if !blk.is_zero() && blk != bs[i] {
                                    sub_parts.push(blk);
                                }
                                y += 1;
                            }
                            x += 1;
                        }
                    }
                }
                for part in sub_parts {
                    let mut p = bs[..i].to_vec();
                    let mut q = vec![bs[i].sub(&part)];
                    p.push(part);
                    q.extend(bs[i + 1..].iter().cloned());
                    out.push((make(p), make(q)));
                }
            }
            (out, true)
        }
    }
}

fn enumerate_box(
    caps: &[BigInt],
    i: usize,
    cur: &mut Vec<BigInt>,
    f: &mut impl FnMut(&[BigInt]),
) {
    if i == caps.len() {
        f(cur);
        return;
    }
    let mut x = BigInt::zero();
    while x <= caps[i] {
        cur[i] = x.clone();
        enumerate_box(caps, i + 1, cur, f);
        x += 1;
    }
}

/// All elements of P within the bound, sorted in normal-form order.
pub fn enumerate_p(qlo: Qlo, bound: &DegreeBound) -> Vec<GroupElement> {
    let mut out = Vec::new();
    match (qlo, bound) {
        (Qlo::Nk(k), DegreeBound::Box(bs)) => {
            assert_eq!(bs.len(), k, "bound arity mismatch");
            let mut cur = vec![BigInt::zero(); k];
            enumerate_box(bs, 0, &mut cur, &mut |v| {
                out.push(GroupElement {
                    qlo,
                    payload: Payload::Vector(v.to_vec()),
                });
            });
        }
        (Qlo::FreeMonoid(n), DegreeBound::WordLen(len)) => {
            let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
            out.push(qlo.identity());
            for _ in 0..*len {
                let mut next = Vec::new();
                for w in &frontier {
                    for l in 0..n {
                        let mut w2 = w.clone();
                        w2.push(l as u8);
                        out.push(GroupElement {
                            qlo,
                            payload: Payload::Letters(w2.clone()),
                        });
                        next.push(w2);
                    }
                }
                frontier = next;
            }
        }
        (Qlo::FreeProductN2N, DegreeBound::Segments { max_blocks, max_entry }) => {
            fn blocks_of_type(plane: bool, cap: i64) -> Vec<Block> {
                let mut out = Vec::new();
                if plane {
                    for x in 0..=cap {
                        for y in 0..=cap {
                            let b = Block::Plane(big(x), big(y));
                            if !b.is_zero() {
                                out.push(b);
                            }
                        }
                    }
                } else {
                    for x in 1..=cap {
                        out.push(Block::Line(big(x)));
                    }
                }
                out
            }
            fn extend(
                qlo: Qlo,
                cur: &mut Vec<Block>,
                remaining: usize,
                cap: i64,
                out: &mut Vec<GroupElement>,
            ) {
                out.push(GroupElement {
                    qlo,
                    payload: Payload::Blocks(cur.clone()),
                });
                if remaining == 0 {
                    return;
                }
                let types: Vec<bool> = match cur.last() {
                    None => vec![true, false],
                    Some(Block::Plane(..)) => vec![false],
                    Some(Block::Line(..)) => vec![true],
                };
                for plane in types {
                    for b in blocks_of_type(plane, cap) {
                        cur.push(b);
                        extend(qlo, cur, remaining - 1, cap, out);
                        cur.pop();
                    }
                }
            }
            let mut cur = Vec::new();
            extend(qlo, &mut cur, *max_blocks, *max_entry as i64, &mut out);
        }
        (Qlo::LexZ2, DegreeBound::LexBox { a_max, b_max }) => {
            for a in 0..=*a_max {
                for b in -*b_max..=*b_max {
                    if a >= 1 || (a == 0 && b >= 0) {
                        out.push(qlo.lex_element(a, b).unwrap());
                    }
                }
            }
        }
        _ => panic!("bound kind does not match instance"),
    }
    out.sort();
    out.dedup();
    out
}

/// Reduced signed words of the ambient group G; used for grades d(μ)d(ν)⁻¹.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupWord {
    /// ℤᵏ (also ℤ² for the lexicographic instance).
    Abelian(Vec<BigInt>),
    /// Free group: reduced word of (letter, nonzero exponent) pairs with
    /// distinct adjacent letters.
    Free(Vec<(u8, BigInt)>),
    /// ℤ² ∗ ℤ: alternating nonzero blocks with signed entries.
    ProdZ2Z(Vec<Block>),
}

impl GroupWord {
    pub fn is_identity(&self) -> bool {
        match self {
            GroupWord::Abelian(v) => v.iter().all(|c| c.is_zero()),
            GroupWord::Free(w) => w.is_empty(),
            GroupWord::ProdZ2Z(w) => w.is_empty(),
        }
    }

    pub fn inverse(&self) -> GroupWord {
        match self {
            GroupWord::Abelian(v) => GroupWord::Abelian(v.iter().map(|c| -c).collect()),
            GroupWord::Free(w) => {
                GroupWord::Free(w.iter().rev().map(|(l, e)| (*l, -e)).collect())
            }
            GroupWord::ProdZ2Z(w) => GroupWord::ProdZ2Z(
                w.iter()
                    .rev()
                    .map(|b| match b {
                        Block::Plane(a, c) => Block::Plane(-a, -c),
                        Block::Line(a) => Block::Line(-a),
                    })
                    .collect(),
            ),
        }
    }

    pub fn multiply(&self, other: &GroupWord) -> GroupWord {
        match (self, other) {
            (GroupWord::Abelian(a), GroupWord::Abelian(b)) => {
                GroupWord::Abelian(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupWord::Free(a), GroupWord::Free(b)) => {
                let mut w = a.clone();
                for (l, e) in b {
                    match w.last_mut() {
                        Some((hl, he)) if hl == l => {
                            *he += e;
                            if he.is_zero() {
                                w.pop();
                            }
                        }
                        _ => w.push((*l, e.clone())),
                    }
                }
                GroupWord::Free(w)
            }
            (GroupWord::ProdZ2Z(a), GroupWord::ProdZ2Z(b)) => {
                let mut w = a.clone();
                for blk in b {
                    match w.last() {
                        Some(last) if last.same_type(blk) => {
                            let merged = last.add(blk);
                            w.pop();
                            if !merged.is_zero() {
                                w.push(merged);
                            }
                        }
                        _ => w.push(blk.clone()),
                    }
                }
                GroupWord::ProdZ2Z(w)
            }
            _ => panic!("multiplying group words of different instances"),
        }
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupWord::Abelian(v) => {
                write!(f, "(")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            GroupWord::Free(w) => {
                if w.is_empty() {
                    return write!(f, "e");
                }
                for (l, e) in w {
                    write!(f, "{}", (b'a' + l) as char)?;
                    if !e.is_one() {
                        write!(f, "^{e}")?;
                    }
                }
                Ok(())
            }
            GroupWord::ProdZ2Z(w) => {
                if w.is_empty() {
                    return write!(f, "e");
                }
                write!(
                    f,
                    "{}",
                    w.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(".")
                )
            }
        }
    }
}
