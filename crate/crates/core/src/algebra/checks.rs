//! Verification suites for the representation relations: the balanced
//! relations, the four path relations, gap projections over exhaustive
//! sets, matrix-unit families, the range-projection decomposition, the
//! norm lower bound, the balanced dimension count, and the grading and
//! conditional-expectation laws.

use crate::algebra::formal::FormalElement;
use crate::algebra::matrix::{rational_rank, MatrixOp};
use crate::algebra::rep::{Flavor, Representation};
use crate::error::{Error, Result};
use crate::graph::{Exhaustive, PathIx};
use crate::qlo::{GroupElement, JoinResult};
use crate::report::{CheckRecord, CheckStatus};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const NORM_SLACK: f64 = 1e-9;

fn pair_label(rep: &Representation, mu: PathIx, nu: PathIx) -> String {
    format!("({}, {})", rep.graph().id(mu), rep.graph().id(nu))
}

/// Verify the two balanced relations as exact matrix identities: the
/// adjoint rule on every balanced pair and the MCE product expansion on
/// every pair of balanced pairs (optionally capped, deterministically).
pub fn check_balanced_relations(
    rep: &Representation,
    quad_cap: Option<usize>,
) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let pairs = graph.balanced_pairs();
    let mut records = Vec::new();

    let mut adjoint_bad = 0usize;
    let mut matrices: BTreeMap<(PathIx, PathIx), MatrixOp> = BTreeMap::new();
    for &(mu, nu) in &pairs {
        matrices.insert((mu, nu), rep.pair_matrix(mu, nu)?);
    }
    for &(mu, nu) in &pairs {
        let a = &matrices[&(mu, nu)];
        let b = &matrices[&(nu, mu)];
        if !a.adjoint_consistent(b)? {
            adjoint_bad += 1;
            records.push(CheckRecord::fail(
                format!("balanced-adjoint {}", pair_label(rep, mu, nu)),
                "B1",
                format!("adjoint of {} is not {}", pair_label(rep, mu, nu), pair_label(rep, nu, mu)),
            ));
        }
    }
    if adjoint_bad == 0 {
        records.push(CheckRecord::pass_with(
            "balanced-adjoint",
            "B1",
            format!("{} balanced pairs", pairs.len()),
        ));
    }

    let mut quads = 0usize;
    let mut quad_failures = 0usize;
    let mut quad_skipped = 0usize;
    let cap = quad_cap.unwrap_or(usize::MAX);
    'outer: for &(mu, nu) in &pairs {
        for &(xi, eta) in &pairs {
            if quads >= cap {
                break 'outer;
            }
            quads += 1;
            let x = FormalElement::pair(&graph, mu, nu)?;
            let y = FormalElement::pair(&graph, xi, eta)?;
            let product = match x.mult(&graph, &y) {
                Ok(p) => p,
                Err(Error::TruncationExceeded(_)) => {
                    quad_skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let lhs = matrices[&(mu, nu)].mul(&matrices[&(xi, eta)])?;
            let rhs = rep.to_matrix(&product)?;
            let cmp = lhs.compare_columns(&rhs)?;
            if !cmp.equal {
                quad_failures += 1;
                records.push(CheckRecord::fail(
                    format!(
                        "balanced-product {} * {}",
                        pair_label(rep, mu, nu),
                        pair_label(rep, xi, eta)
                    ),
                    "B2",
                    format!(
                        "matrix product differs from the MCE expansion at entry {:?}",
                        lhs.first_difference(&rhs)
                    ),
                ));
            }
        }
    }
    if quad_failures == 0 {
        records.push(CheckRecord::pass_with(
            "balanced-product",
            "B2",
            format!("{quads} products checked, {quad_skipped} beyond the bound"),
        ));
    }
    Ok(records)
}

/// Bitsets of basis-filter membership per path.
fn membership_bitsets(rep: &Representation) -> Vec<Vec<u64>> {
    let graph = rep.graph();
    let words = rep.dim().div_ceil(64);
    let mut bits = vec![vec![0u64; words]; graph.len()];
    for (j, f) in rep.basis().iter().enumerate() {
        for &p in f.elements() {
            bits[p as usize][j / 64] |= 1 << (j % 64);
        }
    }
    bits
}

/// Verify the path relations: mutually orthogonal vertex projections,
/// multiplicativity over composition, the range identity, and the MCE sum,
/// all as exact identities over the basis.
pub fn check_path_relations(
    rep: &Representation,
    pair_cap: Option<usize>,
) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let mut records = Vec::new();
    let mut fails = 0usize;

    // Vertex projections: diagonal, pairwise orthogonal.
    for &v in graph.vertices() {
        for &w in graph.vertices() {
            let pv = rep.range_projection(v);
            let pw = rep.range_projection(w);
            let prod = pv.mul(&pw)?;
            let ok = if v == w {
                prod == pv
            } else {
                prod.is_zero()
            };
            if !ok {
                fails += 1;
                records.push(CheckRecord::fail(
                    format!("vertex-projections {} {}", graph.id(v), graph.id(w)),
                    "T1",
                    "vertex projections are not mutually orthogonal".to_string(),
                ));
            }
        }
    }
    if fails == 0 {
        records.push(CheckRecord::pass_with(
            "vertex-projections",
            "T1",
            format!("{} vertices", graph.vertices().len()),
        ));
    }

    // Multiplicativity: T_mu T_nu = T_{mu nu} on composable pairs.
    let mut t2_checked = 0usize;
    let mut t2_failures = 0usize;
    let mut t2_skipped = 0usize;
    let cap = pair_cap.unwrap_or(usize::MAX);
    let mut gens: BTreeMap<PathIx, MatrixOp> = BTreeMap::new();
    let mut gen = |rep: &Representation, p: PathIx| -> Result<MatrixOp> {
        if let Some(m) = gens.get(&p) {
            return Ok(m.clone());
        }
        let m = rep.generator(p)?;
        gens.insert(p, m.clone());
        Ok(m)
    };
    't2: for mu in graph.all_paths() {
        for &nu in graph.at_range(graph.source(mu)) {
            if t2_checked >= cap {
                break 't2;
            }
            t2_checked += 1;
            let composite = match graph.compose(mu, nu) {
                Ok(c) => c,
                Err(Error::TruncationExceeded(_)) => {
                    t2_skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let lhs = gen(rep, mu)?.mul(&gen(rep, nu)?)?;
            let rhs = gen(rep, composite)?;
            if !lhs.compare_columns(&rhs)?.equal {
                t2_failures += 1;
                records.push(CheckRecord::fail(
                    format!("composition {} . {}", graph.id(mu), graph.id(nu)),
                    "T2",
                    format!(
                        "generator product differs from the composite at {:?}",
                        lhs.first_difference(&rhs)
                    ),
                ));
            }
        }
    }
    if t2_failures == 0 {
        records.push(CheckRecord::pass_with(
            "composition",
            "T2",
            format!("{t2_checked} composable pairs, {t2_skipped} beyond the bound"),
        ));
    }

    // Range identity: T*_mu T_mu = P_{s(mu)}, and T_mu T*_mu = P_mu.
    let mut t3_failures = 0usize;
    for mu in graph.all_paths() {
        let t = gen(rep, mu)?;
        let t_star = rep.generator_adjoint(mu)?;
        let lhs = t_star.mul(&t)?;
        let rhs = rep.range_projection(graph.source(mu));
        if !lhs.compare_columns(&rhs)?.equal {
            t3_failures += 1;
            records.push(CheckRecord::fail(
                format!("range-identity {}", graph.id(mu)),
                "T3",
                format!("T* T differs from the source projection for {}", graph.id(mu)),
            ));
        }
        let left = t.mul(&t_star)?;
        let right = rep.range_projection(mu);
        if !left.compare_columns(&right)?.equal {
            t3_failures += 1;
            records.push(CheckRecord::fail(
                format!("range-projection {}", graph.id(mu)),
                "T3",
                format!("T T* differs from the membership projection for {}", graph.id(mu)),
            ));
        }
    }
    if t3_failures == 0 {
        records.push(CheckRecord::pass_with(
            "range-identity",
            "T3",
            format!("{} paths", graph.len()),
        ));
    }

    // MCE sum: P_mu P_nu = sum over MCE(mu, nu) of P_lambda, via membership
    // bitsets (the projections are total even over truncations).
    let bits = membership_bitsets(rep);
    let words = rep.dim().div_ceil(64);
    let mut t4_checked = 0usize;
    let mut t4_failures = 0usize;
    let mut t4_skipped = 0usize;
    let n = graph.len() as PathIx;
    't4: for mu in 0..n {
        for nu in mu..n {
            if t4_checked >= cap {
                break 't4;
            }
            t4_checked += 1;
            let mces = match graph.mce(mu, nu) {
                Ok(m) => m,
                Err(Error::TruncationExceeded(_)) => {
                    t4_skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            // Distinct minimal common extensions never share a filter, so
            // the projection sum is itself a projection.
            let mut disjoint = true;
            for (i, &l1) in mces.iter().enumerate() {
                for &l2 in &mces[i + 1..] {
                    if (0..words)
                        .any(|w| bits[l1 as usize][w] & bits[l2 as usize][w] != 0)
                    {
                        disjoint = false;
                    }
                }
            }
            let mut ok = disjoint;
            if ok {
                for w in 0..words {
                    let lhs = bits[mu as usize][w] & bits[nu as usize][w];
                    let mut rhs = 0u64;
                    for &l in &mces {
                        rhs |= bits[l as usize][w];
                    }
                    if lhs != rhs {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                t4_failures += 1;
                records.push(CheckRecord::fail(
                    format!("mce-sum {}", pair_label(rep, mu, nu)),
                    "T4",
                    format!(
                        "projection product differs from the MCE sum for {}",
                        pair_label(rep, mu, nu)
                    ),
                ));
            }
        }
    }
    if t4_failures == 0 {
        records.push(CheckRecord::pass_with(
            "mce-sum",
            "T4",
            format!("{t4_checked} pairs, {t4_skipped} beyond the bound"),
        ));
    }

    // On the maximal-filter basis of a 1-graph, receiving vertices satisfy
    // the full sum relation: the edges at v sum to the vertex projection.
    if rep.flavor() == Flavor::Ultrafilters && graph.qlo() == crate::qlo::Qlo::Nk(1) {
        let one = graph.qlo().nk_element(&[1])?;
        let mut ck_failures = 0usize;
        let mut ck_checked = 0usize;
        for &v in graph.vertices() {
            let edges: Vec<PathIx> = graph
                .at_range(v)
                .iter()
                .copied()
                .filter(|&p| graph.degree(p) == &one)
                .collect();
            if edges.is_empty() {
                continue;
            }
            ck_checked += 1;
            let mut sum = MatrixOp::zero(rep.dim());
            for &e in &edges {
                sum = sum.add(&rep.pair_matrix(e, e)?)?;
            }
            if !sum.compare_columns(&rep.range_projection(v))?.equal {
                ck_failures += 1;
                records.push(CheckRecord::fail(
                    format!("vertex-sum {}", graph.id(v)),
                    "CK",
                    format!("edge range projections do not sum to {}", graph.id(v)),
                ));
            }
        }
        if ck_failures == 0 && ck_checked > 0 {
            records.push(CheckRecord::pass_with(
                "vertex-sum",
                "CK",
                format!("{ck_checked} receiving vertices"),
            ));
        }
    }

    Ok(records)
}

/// The gap projection of μ against a finite set E at s(μ): the product of
/// the differences P_μ − P_{μα} over α ∈ E, with the empty product being
/// P_μ itself.
pub fn gap_projection(
    rep: &Representation,
    mu: PathIx,
    set: &[PathIx],
) -> Result<MatrixOp> {
    let graph = rep.graph();
    let mut acc = rep.range_projection(mu);
    for &alpha in set {
        if graph.range(alpha) != graph.source(mu) {
            return Err(Error::RootMismatch(format!(
                "{} does not start at the source of {}",
                graph.id(alpha),
                graph.id(mu)
            )));
        }
        let extended = graph.compose(mu, alpha)?;
        let factor = rep.range_projection(mu).sub(&rep.range_projection(extended))?;
        acc = acc.mul(&factor)?;
    }
    Ok(acc)
}

/// θ-family over Λᵖv cut down by a finite H ⊆ vΛ∖{v}:
/// θ_{μ,ν} = M(μ,ν) · Π_{λ∈H} (M(ν,ν) − M(νλ,νλ)).
pub fn theta_family(
    rep: &Representation,
    p: &GroupElement,
    v: PathIx,
    h: &[PathIx],
) -> Result<BTreeMap<(PathIx, PathIx), MatrixOp>> {
    let graph = rep.graph().clone();
    let members: Vec<PathIx> = graph
        .at_source(v)
        .iter()
        .copied()
        .filter(|&m| graph.degree(m) == p)
        .collect();
    for &lambda in h {
        if graph.range(lambda) != v || lambda == v {
            return Err(Error::RootMismatch(format!(
                "{} is not a nontrivial path at {}",
                graph.id(lambda),
                graph.id(v)
            )));
        }
    }
    let mut out = BTreeMap::new();
    for &mu in &members {
        for &nu in &members {
            let mut acc = rep.pair_matrix(mu, nu)?;
            for &lambda in h {
                let nl = graph.compose(nu, lambda)?;
                let factor = rep
                    .range_projection(nu)
                    .sub(&rep.range_projection(nl))?;
                acc = acc.mul(&factor)?;
            }
            out.insert((mu, nu), acc);
        }
    }
    Ok(out)
}

/// Matrix-unit relations for one θ-family; in the all-filters flavor every
/// diagonal θ is additionally required to be nonzero.
pub fn check_theta(
    rep: &Representation,
    p: &GroupElement,
    v: PathIx,
    h: &[PathIx],
) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let family = theta_family(rep, p, v, h)?;
    let members: Vec<PathIx> = family.keys().map(|&(m, _)| m).collect::<Vec<_>>();
    let mut members = members;
    members.sort();
    members.dedup();
    let mut records = Vec::new();
    let label = format!(
        "p={} v={} H={{{}}}",
        p,
        graph.id(v),
        h.iter().map(|&x| graph.id(x)).collect::<Vec<_>>().join(",")
    );
    let mut fails = 0usize;
    for (&(mu, nu), m) in &family {
        let t = m.transpose()?;
        if t != family[&(nu, mu)] {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("theta-adjoint {label}"),
                "matrix-units",
                format!("adjoint mismatch at {}", pair_label(rep, mu, nu)),
            ));
        }
    }
    for &(mu, nu) in family.keys() {
        for &(rho, sigma) in family.keys() {
            let prod = family[&(mu, nu)].mul(&family[&(rho, sigma)])?;
            let expect = if nu == rho {
                family[&(mu, sigma)].clone()
            } else {
                MatrixOp::zero(rep.dim())
            };
            if prod != expect {
                fails += 1;
                records.push(CheckRecord::fail(
                    format!("theta-product {label}"),
                    "matrix-units",
                    format!(
                        "theta{} theta{} is wrong",
                        pair_label(rep, mu, nu),
                        pair_label(rep, rho, sigma)
                    ),
                ));
            }
        }
    }
    if rep.flavor() == Flavor::Filters {
        for &mu in &members {
            if family[&(mu, mu)].is_zero() {
                fails += 1;
                records.push(CheckRecord::fail(
                    format!("theta-nonzero {label}"),
                    "matrix-units",
                    format!("theta({0},{0}) vanished", graph.id(mu)),
                ));
            }
        }
    }
    if fails == 0 {
        records.push(CheckRecord::pass_with(
            format!("theta {label}"),
            "matrix-units",
            format!("{} members", members.len()),
        ));
    }
    Ok(records)
}

/// Decompose the range projection of μ over the ∨-closure of a finite set
/// E at s(μ): P_μ = Π_{α}(P_μ − P_{μα}) + Σ_α Q_{μα} with
/// Q_{μα} = P_{μα} · Π_{αζ ∈ ∨E∖{α}} (P_{μα} − P_{μαζ}).
pub fn projection_decomposition(
    rep: &Representation,
    mu: PathIx,
    set: &[PathIx],
) -> Result<(MatrixOp, Vec<(PathIx, MatrixOp)>)> {
    let graph = rep.graph().clone();
    let closure = graph.vee_paths(set)?;
    let gap = gap_projection(rep, mu, &closure)?;
    let mut qs = Vec::new();
    for &alpha in &closure {
        let ma = graph.compose(mu, alpha)?;
        let mut q = rep.range_projection(ma);
        for &x in &closure {
            if x != alpha && graph.is_prefix(alpha, x) {
                let mx = graph.compose(mu, x)?;
                let factor = rep.range_projection(ma).sub(&rep.range_projection(mx))?;
                q = q.mul(&factor)?;
            }
        }
        qs.push((alpha, q));
    }
    Ok((gap, qs))
}

/// Exact identity and mutual orthogonality for the decomposition above.
pub fn check_decomposition(
    rep: &Representation,
    mu: PathIx,
    set: &[PathIx],
) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let label = format!(
        "mu={} E={{{}}}",
        graph.id(mu),
        set.iter().map(|&x| graph.id(x)).collect::<Vec<_>>().join(",")
    );
    let (gap, qs) = projection_decomposition(rep, mu, set)?;
    let mut records = Vec::new();
    let mut sum = gap.clone();
    for (_, q) in &qs {
        sum = sum.add(q)?;
    }
    let mut fails = 0usize;
    if sum != rep.range_projection(mu) {
        fails += 1;
        records.push(CheckRecord::fail(
            format!("decomposition-identity {label}"),
            "projection-decomposition",
            "the gap and tail projections do not sum to the range projection".to_string(),
        ));
    }
    let mut summands: Vec<(&str, &MatrixOp)> = vec![("gap", &gap)];
    let q_named: Vec<(String, &MatrixOp)> = qs
        .iter()
        .map(|(a, q)| (format!("Q[{}]", graph.id(*a)), q))
        .collect();
    for (name, q) in &q_named {
        summands.push((name.as_str(), q));
    }
    for (i, (na, a)) in summands.iter().enumerate() {
        for (nb, b) in &summands[i + 1..] {
            if !a.mul(b)?.is_zero() {
                fails += 1;
                records.push(CheckRecord::fail(
                    format!("decomposition-orthogonality {label}"),
                    "projection-decomposition",
                    format!("{na} and {nb} are not orthogonal"),
                ));
            }
        }
    }
    if fails == 0 {
        records.push(CheckRecord::pass_with(
            format!("decomposition {label}"),
            "projection-decomposition",
            format!("{} tail projections", qs.len()),
        ));
    }
    Ok(records)
}

/// Outcome of a norm lower-bound trial.
#[derive(Debug, Clone)]
pub struct NormBoundOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub minimal: GroupElement,
    pub record: CheckRecord,
}

/// For a ∨-closed degree set F with per-degree path sets X_p and rational
/// coefficients on the balanced pairs of X = ∪X_p, verify
/// ‖Σ a M‖ ≥ ‖Σ over X_m‖ − 1e-9 where m is the least minimal element of F.
pub fn check_norm_lower_bound(
    rep: &Representation,
    x_sets: &BTreeMap<GroupElement, Vec<PathIx>>,
    coeffs: &BTreeMap<(PathIx, PathIx), BigRational>,
    trial_label: &str,
) -> Result<NormBoundOutcome> {
    let graph = rep.graph().clone();
    let degrees: Vec<GroupElement> = x_sets.keys().cloned().collect();
    for p in &degrees {
        for q in &degrees {
            if let JoinResult::Element(j) = p.join(q)? {
                if !degrees.contains(&j) {
                    return Err(Error::InvalidGraph(format!(
                        "degree set is not join-closed: {p} v {q} = {j} is missing"
                    )));
                }
            }
        }
    }
    let minimal = crate::qlo::minimal_elements(&degrees)?
        .into_iter()
        .next()
        .expect("nonempty degree set");
    if rep.flavor() != Flavor::Filters {
        return Ok(NormBoundOutcome {
            lhs: 0.0,
            rhs: 0.0,
            minimal: minimal.clone(),
            record: CheckRecord::skipped(
                format!("norm-bound {trial_label}"),
                "norm-lower-bound",
                "gap products can vanish on the maximal-filter basis; hypotheses unavailable",
            ),
        });
    }
    let x_m = &x_sets[&minimal];
    let mut full = FormalElement::zero();
    let mut small = FormalElement::zero();
    for (&(mu, nu), c) in coeffs {
        let in_x = |p: PathIx| {
            x_sets
                .get(graph.degree(p))
                .map(|xs| xs.contains(&p))
                .unwrap_or(false)
        };
        if graph.degree(mu) != graph.degree(nu) || !in_x(mu) || !in_x(nu) {
            return Err(Error::InvalidGraph(format!(
                "coefficient pair {} is not balanced inside X",
                pair_label(rep, mu, nu)
            )));
        }
        let term = FormalElement::pair_scaled(&graph, mu, nu, c.clone())?;
        full = full.add(&term);
        if x_m.contains(&mu) && x_m.contains(&nu) {
            small = small.add(&term);
        }
    }
    let norms = rep
        .to_matrix(&full)?
        .operator_norm()
        .and_then(|l| rep.to_matrix(&small)?.operator_norm().map(|r| (l, r)));
    let (lhs, rhs) = match norms {
        Ok(pair) => pair,
        Err(Error::PartialMatrix(_)) => {
            return Ok(NormBoundOutcome {
                lhs: 0.0,
                rhs: 0.0,
                minimal: minimal.clone(),
                record: CheckRecord::skipped(
                    format!("norm-bound {trial_label}"),
                    "norm-lower-bound",
                    "matrices are only partially defined under the bound",
                ),
            })
        }
        Err(e) => return Err(e),
    };
    let ok = lhs >= rhs - NORM_SLACK;
    let record = if ok {
        CheckRecord::pass_with(
            format!("norm-bound {trial_label}"),
            "norm-lower-bound",
            format!("lhs {lhs:.12} >= rhs {rhs:.12} - 1e-9 at m = {minimal}"),
        )
    } else {
        CheckRecord::fail(
            format!("norm-bound {trial_label}"),
            "norm-lower-bound",
            format!("lhs {lhs:.12} < rhs {rhs:.12} - 1e-9 at m = {minimal}"),
        )
    };
    Ok(NormBoundOutcome {
        lhs,
        rhs,
        minimal,
        record,
    })
}

/// The span of the balanced pair matrices at one degree has dimension
/// Σ_v |Λᵖv|², and pairs over distinct source vertices multiply to zero.
pub fn balanced_dim_check(rep: &Representation, p: &GroupElement) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let paths: Vec<PathIx> = graph.by_degree(p).to_vec();
    let mut records = Vec::new();
    let mut vectors = Vec::new();
    let mut expected = 0usize;
    for &v in graph.vertices() {
        let at_v: Vec<PathIx> = paths
            .iter()
            .copied()
            .filter(|&m| graph.source(m) == v)
            .collect();
        expected += at_v.len() * at_v.len();
        for &mu in &at_v {
            for &nu in &at_v {
                vectors.push(rep.pair_matrix(mu, nu)?.to_dense()?);
            }
        }
    }
    let rank = rational_rank(vectors);
    if rank == expected {
        records.push(CheckRecord::pass_with(
            format!("balanced-dimension p={p}"),
            "balanced-dimension",
            format!("rank {rank}"),
        ));
    } else {
        records.push(CheckRecord::fail(
            format!("balanced-dimension p={p}"),
            "balanced-dimension",
            format!("rank {rank} differs from the vertex-count formula {expected}"),
        ));
    }
    let mut cross_fails = 0usize;
    for &mu in &paths {
        for &nu in &paths {
            if graph.source(mu) != graph.source(nu) {
                let prod = rep
                    .pair_matrix(mu, mu)?
                    .mul(&rep.pair_matrix(nu, nu)?)?;
                if !prod.is_zero() {
                    cross_fails += 1;
                    records.push(CheckRecord::fail(
                        format!("balanced-cross p={p}"),
                        "balanced-dimension",
                        format!(
                            "projections of {} and {} overlap",
                            graph.id(mu),
                            graph.id(nu)
                        ),
                    ));
                }
            }
        }
    }
    if cross_fails == 0 {
        records.push(CheckRecord::pass_with(
            format!("balanced-cross p={p}"),
            "balanced-dimension",
            format!("{} paths", paths.len()),
        ));
    }
    Ok(records)
}

/// All exhaustive subsets E ⊆ s(μ)Λ∖{s(μ)} with |E| ≤ max_size, per path μ.
pub fn exhaustive_subsets(
    rep: &Representation,
    mu: PathIx,
    max_size: usize,
) -> Result<Vec<Vec<PathIx>>> {
    let graph = rep.graph().clone();
    let v = graph.source(mu);
    let pool: Vec<PathIx> = graph
        .at_range(v)
        .iter()
        .copied()
        .filter(|&p| p != v)
        .collect();
    let mut out = Vec::new();
    let n = pool.len();
    if n > 20 {
        return Err(Error::CapExceeded(format!(
            "{n} candidate extensions at {}",
            graph.id(v)
        )));
    }
    for mask in 1u32..(1 << n) {
        if (mask.count_ones() as usize) > max_size {
            continue;
        }
        let set: Vec<PathIx> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pool[i]).collect();
        if graph.is_exhaustive(v, &set)? == Exhaustive::Yes {
            out.push(set);
        }
    }
    Ok(out)
}

/// Gap dichotomy sweep: over every path μ and every finite exhaustive
/// E ⊆ s(μ)Λ∖{s(μ)} with |E| ≤ max_size, the gap projection is nonzero on
/// the all-filters basis and exactly zero on the maximal-filter basis.
pub fn suite_gaps(rep: &Representation, max_size: usize) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let mut records = Vec::new();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut fails = 0usize;
    for mu in graph.all_paths() {
        for set in exhaustive_subsets(rep, mu, max_size)? {
            let gap = match gap_projection(rep, mu, &set) {
                Ok(g) => g,
                Err(Error::TruncationExceeded(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            checked += 1;
            if !gap.is_projection()? {
                fails += 1;
                records.push(CheckRecord::fail(
                    format!("gap-projection mu={}", graph.id(mu)),
                    "gap",
                    "gap product is not a projection".to_string(),
                ));
            }
            let ids = set.iter().map(|&x| graph.id(x)).collect::<Vec<_>>().join(",");
            match rep.flavor() {
                Flavor::Filters => {
                    if gap.is_zero() {
                        fails += 1;
                        records.push(CheckRecord::fail(
                            format!("gap-nonzero mu={} E={{{ids}}}", graph.id(mu)),
                            "gap-nonzero",
                            "gap product vanished on the all-filters basis".to_string(),
                        ));
                    }
                }
                Flavor::Ultrafilters => {
                    if !gap.is_zero() {
                        fails += 1;
                        records.push(CheckRecord::fail(
                            format!("gap-vanishes mu={} E={{{ids}}}", graph.id(mu)),
                            "gap-vanishes",
                            "gap product survived on the maximal-filter basis".to_string(),
                        ));
                    }
                }
            }
        }
    }
    if fails == 0 {
        let anchor = match rep.flavor() {
            Flavor::Filters => "gap-nonzero",
            Flavor::Ultrafilters => "gap-vanishes",
        };
        records.push(CheckRecord::pass_with(
            "gap-dichotomy",
            anchor,
            format!("{checked} exhaustive sets, {skipped} beyond the bound"),
        ));
    }
    Ok(records)
}

/// θ sweep over given degrees and all H ⊆ vΛ∖{v} of size at most max_h.
pub fn suite_theta(
    rep: &Representation,
    degrees: &[GroupElement],
    max_h: usize,
) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let mut records = Vec::new();
    let mut families = 0usize;
    let mut theta_skipped = 0usize;
    for p in degrees {
        for &v in graph.vertices() {
            let pool: Vec<PathIx> = graph
                .at_range(v)
                .iter()
                .copied()
                .filter(|&x| x != v)
                .collect();
            let n = pool.len();
            if n > 20 {
                return Err(Error::CapExceeded(format!(
                    "{n} candidate extensions at {}",
                    graph.id(v)
                )));
            }
            for mask in 0u32..(1 << n) {
                if (mask.count_ones() as usize) > max_h {
                    continue;
                }
                let h: Vec<PathIx> =
                    (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pool[i]).collect();
                let recs = match check_theta(rep, p, v, &h) {
                    Ok(r) => r,
                    Err(Error::TruncationExceeded(_)) => {
                        theta_skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                families += 1;
                records.extend(recs.into_iter().filter(|r| r.status == CheckStatus::Fail));
            }
        }
    }
    if crate::report::failures(&records) == 0 {
        records.push(CheckRecord::pass_with(
            "theta-families",
            "matrix-units",
            format!("{families} families, {theta_skipped} beyond the bound"),
        ));
    }
    Ok(records)
}

/// Decomposition sweep over every path and every E ⊆ s(μ)Λ with |E| ≤
/// max_size.
pub fn suite_decomposition(rep: &Representation, max_size: usize) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let mut records = Vec::new();
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for mu in graph.all_paths() {
        let pool: Vec<PathIx> = graph.at_range(graph.source(mu)).to_vec();
        let n = pool.len();
        if n > 20 {
            return Err(Error::CapExceeded(format!("{n} extensions")));
        }
        for mask in 1u32..(1 << n) {
            if (mask.count_ones() as usize) > max_size {
                continue;
            }
            let set: Vec<PathIx> =
                (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pool[i]).collect();
            let recs = match check_decomposition(rep, mu, &set) {
                Ok(r) => r,
                Err(Error::TruncationExceeded(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            checked += 1;
            records.extend(recs.into_iter().filter(|r| r.status == CheckStatus::Fail));
        }
    }
    if crate::report::failures(&records) == 0 {
        records.push(CheckRecord::pass_with(
            "decomposition-sweep",
            "projection-decomposition",
            format!("{checked} (path, set) cases, {skipped} beyond the bound"),
        ));
    }
    Ok(records)
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let numerator: i64 = rng.random_range(-64..=64);
    BigRational::new(BigInt::from(numerator), BigInt::from(64))
}

/// Seeded random-coefficient trials of the norm lower bound over the full
/// per-degree path sets of the given ∨-closed degree family.
pub fn suite_norms(
    rep: &Representation,
    degree_family: &[GroupElement],
    trials: usize,
    seed: u64,
) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let closed = crate::qlo::vee_closure(degree_family)?;
    let mut x_sets: BTreeMap<GroupElement, Vec<PathIx>> = BTreeMap::new();
    for p in &closed {
        x_sets.insert(p.clone(), graph.by_degree(p).to_vec());
    }
    let mut pairs: Vec<(PathIx, PathIx)> = Vec::new();
    for xs in x_sets.values() {
        for &mu in xs {
            for &nu in xs {
                if graph.source(mu) == graph.source(nu) {
                    pairs.push((mu, nu));
                }
            }
        }
    }
    pairs.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut fails = 0usize;
    let family_label = closed
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",");
    for trial in 0..trials {
        let coeffs: BTreeMap<(PathIx, PathIx), BigRational> = pairs
            .iter()
            .map(|&k| (k, random_rational(&mut rng)))
            .collect();
        let outcome =
            check_norm_lower_bound(rep, &x_sets, &coeffs, &format!("F={{{family_label}}} trial {trial}"))?;
        if outcome.record.status == CheckStatus::Fail {
            fails += 1;
            records.push(outcome.record);
        } else if outcome.record.status == CheckStatus::Skipped {
            records.push(outcome.record);
            break;
        }
    }
    if fails == 0 {
        records.push(CheckRecord::pass_with(
            format!("norm-bound F={{{family_label}}}"),
            "norm-lower-bound",
            format!("{trials} seeded trials"),
        ));
    }
    Ok(records)
}

fn random_formal(
    rep: &Representation,
    pairs: &[(PathIx, PathIx)],
    rng: &mut ChaCha8Rng,
) -> Result<FormalElement> {
    let graph = rep.graph();
    let n_terms = rng.random_range(1..=4usize);
    let mut x = FormalElement::zero();
    for _ in 0..n_terms {
        let &(mu, nu) = &pairs[rng.random_range(0..pairs.len())];
        x = x.add(&FormalElement::pair_scaled(
            graph,
            mu,
            nu,
            random_rational(rng),
        )?);
    }
    Ok(x)
}

/// Grading and conditional-expectation laws on seeded random elements:
/// homogeneous parts multiply into the product grade, bilinearity across
/// the decomposition, idempotence of the expectation, and contractivity of
/// the expectation in matrix norm.
pub fn suite_grading(rep: &Representation, trials: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let graph = rep.graph().clone();
    let pairs = graph.source_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut fails = 0usize;
    let mut skipped = 0usize;
    let mut norm_skipped = 0usize;
    for trial in 0..trials {
        let x = random_formal(rep, &pairs, &mut rng)?;
        let y = random_formal(rep, &pairs, &mut rng)?;
        let product = match x.mult(&graph, &y) {
            Ok(p) => p,
            Err(Error::TruncationExceeded(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        // Homogeneous parts multiply homogeneously into the product grade,
        // and the parts reassemble the product.
        let dx = x.grade_decompose(&graph);
        let dy = y.grade_decompose(&graph);
        let mut reassembled = FormalElement::zero();
        for (gx, part_x) in &dx {
            for (gy, part_y) in &dy {
                let part = part_x.mult(&graph, part_y)?;
                reassembled = reassembled.add(&part);
                if !part.is_zero() {
                    let grade = part.homogeneous_grade(&graph);
                    if grade.as_ref() != Some(&gx.multiply(gy)) {
                        fails += 1;
                        records.push(CheckRecord::fail(
                            format!("grade-multiplicative trial {trial}"),
                            "grading",
                            format!("part of grade {gx} times {gy} is not homogeneous"),
                        ));
                    }
                }
            }
        }
        if reassembled != product {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("grade-bilinear trial {trial}"),
                "grading",
                "graded parts do not reassemble the product".to_string(),
            ));
        }
        // Expectation: grade-e compression, idempotent, contractive.
        let ex = x.expectation(&graph);
        if ex.expectation(&graph) != ex {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("expectation-idempotent trial {trial}"),
                "expectation",
                "expectation is not idempotent".to_string(),
            ));
        }
        let identity_part = dx
            .iter()
            .find(|(g, _)| g.is_identity())
            .map(|(_, part)| part.clone())
            .unwrap_or_else(FormalElement::zero);
        if ex != identity_part {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("expectation-grade trial {trial}"),
                "expectation",
                "expectation differs from the identity-grade part".to_string(),
            ));
        }
        // Norm contractivity needs fully defined matrices; under a
        // truncation the affected trials are reported as skipped.
        let norms = rep
            .to_matrix(&x)?
            .operator_norm()
            .and_then(|nx| rep.to_matrix(&ex)?.operator_norm().map(|ne| (nx, ne)));
        let (norm_x, norm_ex) = match norms {
            Ok(pair) => pair,
            Err(Error::PartialMatrix(_)) => {
                norm_skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if norm_ex > norm_x + NORM_SLACK {
            fails += 1;
            records.push(CheckRecord::fail(
                format!("expectation-contractive trial {trial}"),
                "expectation",
                format!("expectation norm {norm_ex:.12} exceeds {norm_x:.12}"),
            ));
        }
    }
    if fails == 0 {
        records.push(CheckRecord::pass_with(
            "grading-expectation",
            "grading",
            format!("{trials} seeded trials, {skipped} beyond the bound, {norm_skipped} norms hidden by it"),
        ));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_grid, build_interval, build_parallel_edges};
    use crate::graph::PGraph;
    use crate::report::failures;
    use num_traits::{One, Zero};
    use std::sync::Arc;

    fn rep_of(graph: PGraph, flavor: Flavor) -> Representation {
        Representation::new(Arc::new(graph), flavor).unwrap()
    }

    fn grid_rep(flavor: Flavor) -> Representation {
        rep_of(build_grid(2, &[2, 2]).unwrap(), flavor)
    }

    #[test]
    fn balanced_relations_hold_on_fixtures() {
        for flavor in [Flavor::Filters, Flavor::Ultrafilters] {
            for graph in [
                build_grid(2, &[2, 2]).unwrap(),
                build_parallel_edges(2).unwrap(),
                build_interval(4).unwrap(),
            ] {
                let rep = rep_of(graph, flavor);
                let recs = check_balanced_relations(&rep, None).unwrap();
                assert_eq!(failures(&recs), 0);
            }
        }
    }

    #[test]
    fn path_relations_hold_on_fixtures() {
        for flavor in [Flavor::Filters, Flavor::Ultrafilters] {
            for graph in [
                build_grid(2, &[2, 2]).unwrap(),
                build_parallel_edges(2).unwrap(),
                build_interval(4).unwrap(),
            ] {
                let rep = rep_of(graph, flavor);
                let recs = check_path_relations(&rep, None).unwrap();
                assert_eq!(failures(&recs), 0, "{recs:?}");
            }
        }
    }

    #[test]
    fn corrupted_matrix_is_reported() {
        // Flip one entry of one generator product and compare against the
        // honest expansion: the comparison notices.
        let rep = grid_rep(Flavor::Filters);
        let g = rep.graph().clone();
        let e = g.lookup("v0_0_d1_0").unwrap();
        let honest = rep.pair_matrix(e, e).unwrap();
        let mut cols: Vec<Option<Vec<(u32, BigRational)>>> = Vec::new();
        for j in 0..rep.dim() {
            let mut col: Vec<(u32, BigRational)> = (0..rep.dim())
                .filter_map(|i| {
                    let x = honest.entry(i, j).unwrap();
                    if x.is_zero() {
                        None
                    } else {
                        Some((i as u32, x))
                    }
                })
                .collect();
            if j == 0 {
                col.push((1, BigRational::one()));
            }
            cols.push(Some(col));
        }
        let corrupted = MatrixOp::from_columns(rep.dim(), cols);
        let cmp = corrupted.compare_columns(&honest).unwrap();
        assert!(!cmp.equal);
        assert!(corrupted.first_difference(&honest).is_some());
    }

    #[test]
    fn gap_dichotomy_on_parallel_edges() {
        let graph = build_parallel_edges(2).unwrap();
        let v = graph.lookup("v").unwrap();
        let e1 = graph.lookup("e1").unwrap();
        let e2 = graph.lookup("e2").unwrap();

        let t = rep_of(graph.clone(), Flavor::Filters);
        let gap = gap_projection(&t, v, &[e1, e2]).unwrap();
        assert!(!gap.is_zero());
        // The gap fixes exactly the principal filter of v.
        let ix = t
            .basis()
            .iter()
            .position(|f| f.top() == v)
            .unwrap();
        assert_eq!(gap.entry(ix, ix).unwrap(), BigRational::one());

        let omega = rep_of(graph, Flavor::Ultrafilters);
        let gap = gap_projection(&omega, v, &[e1, e2]).unwrap();
        assert!(gap.is_zero());
    }

    #[test]
    fn gap_empty_set_gives_range_projection() {
        let rep = grid_rep(Flavor::Filters);
        let g = rep.graph().clone();
        for mu in g.all_paths().take(8) {
            assert_eq!(
                gap_projection(&rep, mu, &[]).unwrap(),
                rep.range_projection(mu)
            );
        }
    }

    #[test]
    fn gap_sweeps_pass_both_flavors() {
        for flavor in [Flavor::Filters, Flavor::Ultrafilters] {
            let rep = grid_rep(flavor);
            let recs = suite_gaps(&rep, 2).unwrap();
            assert_eq!(failures(&recs), 0, "{recs:?}");
            let rep = rep_of(build_parallel_edges(2).unwrap(), flavor);
            let recs = suite_gaps(&rep, 2).unwrap();
            assert_eq!(failures(&recs), 0, "{recs:?}");
        }
    }

    #[test]
    fn theta_families_on_parallel_edges() {
        // Two parallel edges give a genuine 2x2 matrix-unit family.
        let rep = rep_of(build_parallel_edges(2).unwrap(), Flavor::Filters);
        let g = rep.graph().clone();
        let w = g.lookup("w").unwrap();
        let one_deg = g.qlo().nk_element(&[1]).unwrap();
        let fam = theta_family(&rep, &one_deg, w, &[]).unwrap();
        assert_eq!(fam.len(), 4);
        let recs = check_theta(&rep, &one_deg, w, &[]).unwrap();
        assert_eq!(failures(&recs), 0);
        // H = empty gives plain pair matrices.
        let e1 = g.lookup("e1").unwrap();
        let e2 = g.lookup("e2").unwrap();
        assert_eq!(fam[&(e1, e2)], rep.pair_matrix(e1, e2).unwrap());
    }

    #[test]
    fn theta_sweep_on_grid() {
        let rep = grid_rep(Flavor::Filters);
        let q = rep.graph().qlo();
        let degrees = vec![
            q.nk_element(&[1, 0]).unwrap(),
            q.nk_element(&[0, 1]).unwrap(),
            q.nk_element(&[1, 1]).unwrap(),
        ];
        let recs = suite_theta(&rep, &degrees, 1).unwrap();
        assert_eq!(failures(&recs), 0, "{recs:?}");
    }

    #[test]
    fn decomposition_identity() {
        let rep = grid_rep(Flavor::Filters);
        let g = rep.graph().clone();
        // E = {s(mu)}: the gap vanishes and the single tail is P_mu.
        for mu in g.all_paths().take(6) {
            let s = g.source(mu);
            let (gap, qs) = projection_decomposition(&rep, mu, &[s]).unwrap();
            assert!(gap.is_zero());
            assert_eq!(qs.len(), 1);
            assert_eq!(qs[0].1, rep.range_projection(mu));
        }
        // Vertex with the two unit edges: three orthogonal tails plus gap.
        let v = g.lookup("v0_0").unwrap();
        let e1 = g.lookup("v0_0_d1_0").unwrap();
        let f1 = g.lookup("v0_0_d0_1").unwrap();
        let (gap, qs) = projection_decomposition(&rep, v, &[e1, f1]).unwrap();
        assert_eq!(qs.len(), 3);
        assert!(gap.is_projection().unwrap());
        let recs = check_decomposition(&rep, v, &[e1, f1]).unwrap();
        assert_eq!(failures(&recs), 0);
    }

    #[test]
    fn decomposition_sweep_small() {
        let rep = grid_rep(Flavor::Filters);
        let recs = suite_decomposition(&rep, 2).unwrap();
        assert_eq!(failures(&recs), 0, "{recs:?}");
    }

    #[test]
    fn norm_bound_single_degree_and_concentrated() {
        let rep = grid_rep(Flavor::Filters);
        let g = rep.graph().clone();
        let q10 = g.qlo().nk_element(&[1, 0]).unwrap();
        // Single-degree family: lhs = rhs exactly.
        let mut x_sets = BTreeMap::new();
        x_sets.insert(q10.clone(), g.by_degree(&q10).to_vec());
        let coeffs: BTreeMap<(PathIx, PathIx), BigRational> = g
            .by_degree(&q10)
            .iter()
            .map(|&m| ((m, m), BigRational::new(BigInt::from(1), BigInt::from(3))))
            .collect();
        let out = check_norm_lower_bound(&rep, &x_sets, &coeffs, "single").unwrap();
        assert_eq!(out.record.status, CheckStatus::Pass);
        assert!((out.lhs - out.rhs).abs() < 1e-10);
        assert_eq!(out.minimal, q10);
        // Coefficients supported on X_m only: equality again.
        let q11 = g.qlo().nk_element(&[1, 1]).unwrap();
        let mut x_sets = BTreeMap::new();
        x_sets.insert(q10.clone(), g.by_degree(&q10).to_vec());
        x_sets.insert(q11.clone(), g.by_degree(&q11).to_vec());
        let out = check_norm_lower_bound(&rep, &x_sets, &coeffs, "concentrated").unwrap();
        assert_eq!(out.record.status, CheckStatus::Pass);
        assert!((out.lhs - out.rhs).abs() < 1e-10);
    }

    #[test]
    fn norm_bound_trials_on_grid() {
        let rep = grid_rep(Flavor::Filters);
        let q = rep.graph().qlo();
        let f = vec![q.nk_element(&[1, 0]).unwrap(), q.nk_element(&[1, 1]).unwrap()];
        let recs = suite_norms(&rep, &f, 10, 0).unwrap();
        assert_eq!(failures(&recs), 0, "{recs:?}");
        // The maximal-filter flavor reports the hypotheses as unavailable.
        let omega = grid_rep(Flavor::Ultrafilters);
        let recs = suite_norms(&omega, &f, 2, 0).unwrap();
        assert!(recs.iter().any(|r| r.status == CheckStatus::Skipped));
    }

    #[test]
    fn balanced_dimension_on_grid() {
        let rep = grid_rep(Flavor::Filters);
        let q = rep.graph().qlo();
        // p = e: dimension equals the number of vertices.
        let e = q.identity();
        let recs = balanced_dim_check(&rep, &e).unwrap();
        assert_eq!(failures(&recs), 0);
        assert!(recs
            .iter()
            .any(|r| r.witness.as_deref() == Some("rank 9")));
        for p in [
            q.nk_element(&[1, 0]).unwrap(),
            q.nk_element(&[0, 1]).unwrap(),
            q.nk_element(&[1, 1]).unwrap(),
        ] {
            let recs = balanced_dim_check(&rep, &p).unwrap();
            assert_eq!(failures(&recs), 0, "{recs:?}");
        }
    }

    #[test]
    fn grading_trials_on_grid() {
        let rep = grid_rep(Flavor::Filters);
        let recs = suite_grading(&rep, 50, 7).unwrap();
        assert_eq!(failures(&recs), 0, "{recs:?}");
    }
}
