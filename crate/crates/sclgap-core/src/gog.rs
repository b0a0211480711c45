//! Graphs of groups: relative torsion bounds, tight loops and the
//! `1/2 - 1/n` certificates, the turn-polytope identity, and
//! letter-quasimorphisms for amalgams and HNN extensions of lattices.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circle::{f2, infer_period, letter_axiom_holds, letter_qm_pullback, GEN_A, GEN_B};
use crate::error::{Error, Result};
use crate::graph_products::{gp_rtf, half_minus_inverse, GraphProductSpec};
use crate::lattice::{maximal_minor_gcd, mat_vec, solve_combination, to_qvec, unimodular_completion, QVec};
use crate::lp::{LpOutcome, LpProblem};
use crate::norms::Side;
use crate::qm::SclCertificate;
use crate::rational::{fmt_q, q, qi, Q};
use crate::words::{Alphabet, Order, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    FiniteCyclic(u32),
    Integers,
    Lattice(usize),
    Free(usize),
    GraphProduct(GraphProductSpec),
}

/// Image of an edge group inside a vertex group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subgroup {
    /// `mZ`, or the subgroup generated by `m` in a finite cyclic group.
    Multiples(i64),
    /// Spanned by independent integer vectors.
    Sublattice(Vec<Vec<i64>>),
    /// Generated by words of a free group.
    Generated(Vec<Word>),
    /// The graph product on a full subgraph.
    Special(BTreeSet<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    Int(i64),
    Vector(Vec<i64>),
    Word(Word),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RtfMethod {
    ClosedForm,
    QuotientOrder,
    /// A left-invariant order on the cosets.
    ConvexOrder,
    FreeFactor,
    SpecialSubgroup,
    Abelianization,
    BruteForce { k_max: u32 },
}

impl RtfMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RtfMethod::ClosedForm => "closed-form",
            RtfMethod::QuotientOrder => "quotient-order",
            RtfMethod::ConvexOrder => "convex-order",
            RtfMethod::FreeFactor => "free-factor",
            RtfMethod::SpecialSubgroup => "special-subgroup",
            RtfMethod::Abelianization => "abelianization",
            RtfMethod::BruteForce { .. } => "brute-force",
        }
    }
}

/// `g` is not a relative `k`-torsion for any `2 <= k < n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RtfCertificate {
    pub n: Order,
    pub method: RtfMethod,
}

impl fmt::Display for RtfCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.n {
            Order::Finite(k) => write!(f, "{k}-RTF ({})", self.method.as_str()),
            Order::Infinite => write!(f, "inf-RTF ({})", self.method.as_str()),
        }
    }
}

fn in_subgroup() -> Error {
    Error::Precondition("element lies in the subgroup".into())
}

fn order_of_quotient(n: u64) -> Order {
    Order::Finite(u32::try_from(n).unwrap_or(u32::MAX))
}

/// Certified lower bound on the relative torsion order of `g` in `(G, H)`.
pub fn rtf_lower_bound(group: &GroupSpec, sub: &Subgroup, g: &Element) -> Result<RtfCertificate> {
    let unsupported = || Err(Error::Unsupported("no relative torsion bound for this pair".into()));
    match (group, sub, g) {
        (GroupSpec::Integers, Subgroup::Multiples(m), Element::Int(x)) => {
            if *m == 0 {
                return Err(Error::Precondition("subgroup must be nontrivial".into()));
            }
            let m = m.unsigned_abs();
            let r = x.rem_euclid(m as i64) as u64;
            if r == 0 {
                return Err(in_subgroup());
            }
            Ok(RtfCertificate { n: order_of_quotient(m / r.gcd(&m)), method: RtfMethod::ClosedForm })
        }
        (GroupSpec::FiniteCyclic(o), Subgroup::Multiples(d), Element::Int(x)) => {
            let o = *o as i64;
            if o == 0 {
                return Err(Error::Precondition("order must be positive".into()));
            }
            // the subgroup generated by d is generated by gcd(d, o)
            let d = d.gcd(&o) as u64;
            let r = x.rem_euclid(d as i64) as u64;
            if r == 0 {
                return Err(in_subgroup());
            }
            Ok(RtfCertificate { n: order_of_quotient(d / r.gcd(&d)), method: RtfMethod::QuotientOrder })
        }
        (GroupSpec::Lattice(k), Subgroup::Sublattice(gens), Element::Vector(x)) => {
            if x.len() != *k || gens.iter().any(|c| c.len() != *k) {
                return Err(Error::Precondition("vector of wrong dimension".into()));
            }
            let cols: Vec<QVec> = gens.iter().map(|c| to_qvec(c)).collect();
            if crate::lattice::rank(&cols) != cols.len() {
                return Err(Error::Precondition("sublattice generators are dependent".into()));
            }
            match solve_combination(&cols, &to_qvec(x)) {
                None => {
                    let saturated = gens.is_empty() || maximal_minor_gcd(gens).is_one();
                    let method = if saturated { RtfMethod::ConvexOrder } else { RtfMethod::QuotientOrder };
                    Ok(RtfCertificate { n: Order::Infinite, method })
                }
                Some(c) => {
                    let den = c.iter().fold(num_bigint::BigInt::one(), |acc, t| acc.lcm(t.denom()));
                    let den = u64::try_from(den).map_err(|_| Error::Budget("index too large".into()))?;
                    if den == 1 {
                        return Err(in_subgroup());
                    }
                    Ok(RtfCertificate { n: order_of_quotient(den), method: RtfMethod::QuotientOrder })
                }
            }
        }
        (GroupSpec::Free(r), Subgroup::Generated(ws), Element::Word(x)) => {
            if x.syllables().iter().any(|s| s.0 >= *r) {
                return Err(Error::Precondition("word uses a generator outside the group".into()));
            }
            let basis: Option<BTreeSet<usize>> = ws
                .iter()
                .map(|w| match w.syllables() {
                    [(g, e)] if e.abs() == 1 => Some(*g),
                    _ => None,
                })
                .collect();
            if let Some(b) = basis {
                if x.syllables().iter().all(|s| b.contains(&s.0)) {
                    return Err(in_subgroup());
                }
                return Ok(RtfCertificate { n: Order::Infinite, method: RtfMethod::FreeFactor });
            }
            // k ab(x) + ab(h) = 0 is impossible when ab(x) is not in the span of ab(H)
            let ab = |w: &Word| -> QVec {
                let mut v = alloc::vec![Q::zero(); *r];
                for &(g, e) in w.syllables() {
                    v[g] += qi(e);
                }
                v
            };
            let cols: Vec<QVec> = ws.iter().map(ab).collect();
            if crate::lattice::Subspace::span(*r, &cols).contains(&ab(x)) {
                return unsupported();
            }
            Ok(RtfCertificate { n: Order::Infinite, method: RtfMethod::Abelianization })
        }
        (GroupSpec::GraphProduct(spec), Subgroup::Special(vs), Element::Word(x)) => match gp_rtf(spec, x, vs) {
            None => Err(in_subgroup()),
            Some(n) => Ok(RtfCertificate { n, method: RtfMethod::SpecialSubgroup }),
        },
        _ => unsupported(),
    }
}

/// Searches `g h_1 ... g h_k = 0` in `Z/o` with `h_i` in `<d>` for `k < k_max`.
pub fn rtf_brute_force_cyclic(o: u32, d: i64, g: i64, k_max: u32) -> Result<RtfCertificate> {
    if o == 0 {
        return Err(Error::Precondition("order must be positive".into()));
    }
    let o = o as i64;
    let h: BTreeSet<i64> = (0..o).map(|j| (j * d).rem_euclid(o)).collect();
    if h.contains(&g.rem_euclid(o)) {
        return Err(in_subgroup());
    }
    let step = |s: &BTreeSet<i64>| -> BTreeSet<i64> {
        s.iter().flat_map(|&x| h.iter().map(move |&y| (x + g + y).rem_euclid(o))).collect()
    };
    let mut reach = step(&[0].into_iter().collect());
    for k in 2..k_max {
        reach = step(&reach);
        if reach.contains(&0) {
            return Ok(RtfCertificate { n: Order::Finite(k), method: RtfMethod::BruteForce { k_max } });
        }
    }
    Ok(RtfCertificate { n: Order::Finite(k_max), method: RtfMethod::BruteForce { k_max } })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GogEdge {
    pub origin: usize,
    pub terminus: usize,
    pub group: GroupSpec,
    pub at_origin: Subgroup,
    pub at_terminus: Subgroup,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphOfGroups {
    pub vertices: Vec<GroupSpec>,
    pub edges: Vec<GogEdge>,
}

impl GraphOfGroups {
    pub fn new(vertices: Vec<GroupSpec>, edges: Vec<GogEdge>) -> Result<Self> {
        for e in &edges {
            if e.origin >= vertices.len() || e.terminus >= vertices.len() {
                return Err(Error::Precondition("edge endpoint out of range".into()));
            }
        }
        Ok(GraphOfGroups { vertices, edges })
    }

    fn origin(&self, s: OrientedEdge) -> usize {
        let e = &self.edges[s.edge];
        if s.reversed { e.terminus } else { e.origin }
    }

    fn terminus(&self, s: OrientedEdge) -> usize {
        let e = &self.edges[s.edge];
        if s.reversed { e.origin } else { e.terminus }
    }

    /// Edge group image at the origin of the oriented edge.
    fn image_at_origin(&self, s: OrientedEdge) -> &Subgroup {
        let e = &self.edges[s.edge];
        if s.reversed { &e.at_terminus } else { &e.at_origin }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedEdge {
    pub edge: usize,
    pub reversed: bool,
}

impl OrientedEdge {
    pub fn bar(self) -> Self {
        OrientedEdge { edge: self.edge, reversed: !self.reversed }
    }
}

/// Arcs `a_i` in vertex groups joined by edges: `steps[i]` leaves arc `i` and
/// enters arc `i + 1` (cyclically).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TightLoop {
    pub arcs: Vec<(usize, Element)>,
    pub steps: Vec<OrientedEdge>,
}

impl TightLoop {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Arcs entered and left through the same edge.
    pub fn backtracks(&self) -> Vec<usize> {
        let l = self.len();
        (0..l).filter(|&i| self.steps[(i + l - 1) % l] == self.steps[i].bar()).collect()
    }

    pub fn validate(&self, gog: &GraphOfGroups) -> Result<()> {
        let l = self.len();
        if l == 0 || self.steps.len() != l {
            return Err(Error::Precondition("loop needs one step per arc".into()));
        }
        for i in 0..l {
            let s = self.steps[i];
            if s.edge >= gog.edges.len() {
                return Err(Error::Precondition(alloc::format!("step {i} uses an unknown edge")));
            }
            if gog.origin(s) != self.arcs[i].0 || gog.terminus(s) != self.arcs[(i + 1) % l].0 {
                return Err(Error::Precondition(alloc::format!("step {i} does not connect its arcs")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapReport {
    pub certificate: SclCertificate,
    pub n: Order,
    /// Per backtrack arc.
    pub arcs: Vec<(usize, RtfCertificate)>,
}

/// `scl >= 1/2 - 1/n` relative to the vertex groups, `n` the least relative
/// torsion bound over backtracking arcs.
pub fn gap_hyperbolic(gog: &GraphOfGroups, lp: &TightLoop) -> Result<GapReport> {
    lp.validate(gog)?;
    let mut n = Order::Infinite;
    let mut arcs = Vec::new();
    for i in lp.backtracks() {
        let (v, w) = &lp.arcs[i];
        let sub = gog.image_at_origin(lp.steps[i]);
        let cert = rtf_lower_bound(&gog.vertices[*v], sub, w).map_err(|e| match e {
            Error::Precondition(m) if m.contains("lies in") => {
                Error::Precondition(alloc::format!("loop is not tight at arc {i}"))
            }
            e => e,
        })?;
        n = n.min(cert.n);
        arcs.push((i, cert));
    }
    let bound = match n {
        Order::Finite(k) if k < 3 => Q::zero(),
        n => half_minus_inverse(n),
    };
    let ns = match n {
        Order::Finite(k) => alloc::format!("{k}"),
        Order::Infinite => "inf".into(),
    };
    let certificate = SclCertificate::formula("n-rtf-gap", bound)
        .with_input("n", ns)
        .with_input("arcs", alloc::format!("{}", lp.len()))
        .with_input("backtracks", alloc::format!("{}", arcs.len()))
        .with_note("lower bound relative to the vertex groups");
    Ok(GapReport { certificate, n, arcs })
}

/// `BS(m, l) = <a, t | a^m = t a^l t^-1>` as an HNN extension of `Z`.
pub fn baumslag_solitar(m: i64, l: i64) -> Result<GraphOfGroups> {
    if m == 0 || l == 0 {
        return Err(Error::Precondition("m and l must be nonzero".into()));
    }
    let e = GogEdge {
        origin: 0,
        terminus: 0,
        group: GroupSpec::Integers,
        at_origin: Subgroup::Multiples(m),
        at_terminus: Subgroup::Multiples(l),
    };
    GraphOfGroups::new(alloc::vec![GroupSpec::Integers], alloc::vec![e])
}

pub fn bs_alphabet() -> Alphabet {
    Alphabet::free(&["a", "t"])
}

/// Tight loop of a word in `a, t` after cyclic Britton reduction.
pub fn bs_tight_loop(m: i64, l: i64, w: &Word) -> Result<TightLoop> {
    if m == 0 || l == 0 {
        return Err(Error::Precondition("m and l must be nonzero".into()));
    }
    // cyclic list of (eps, winding after t^eps)
    let mut items: Vec<(i64, i64)> = Vec::new();
    let mut lead = 0i64;
    for &(g, e) in w.syllables() {
        if g == 0 {
            match items.last_mut() {
                Some(it) => it.1 += e,
                None => lead += e,
            }
        } else {
            for _ in 0..e.abs() {
                items.push((e.signum(), 0));
            }
        }
    }
    if items.is_empty() {
        return Err(Error::NotHyperbolic);
    }
    items.last_mut().expect("nonempty").1 += lead;
    loop {
        let n = items.len();
        let pinch = (0..n).find(|&i| {
            let (eps, w) = items[i];
            let next = items[(i + 1) % n].0;
            next == -eps && w % if eps == 1 { l } else { m } == 0
        });
        let Some(i) = pinch else { break };
        if n == 2 {
            return Err(Error::NotHyperbolic);
        }
        let (eps, w) = items[i];
        let moved = if eps == 1 { w / l * m } else { w / m * l };
        let j = (i + 1) % n;
        let after = items[j].1;
        let prev = (i + n - 1) % n;
        items[prev].1 += moved + after;
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        items.remove(hi);
        items.remove(lo);
    }
    let n = items.len();
    let arcs = items.iter().map(|&(_, w)| (0usize, Element::Int(w))).collect();
    let steps = (0..n).map(|i| OrientedEdge { edge: 0, reversed: items[(i + 1) % n].0 == -1 }).collect();
    Ok(TightLoop { arcs, steps })
}

/// Values of `sum c_ij t_ij` at sampled vertices of the turn polytope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaircaseReport {
    pub l: usize,
    pub n: u32,
    pub feasible: bool,
    pub expected: Q,
    pub values: Vec<Q>,
    /// `sum_{i<j} t_ij`, expected `(L - 2)/2`.
    pub upper_sums: Vec<Q>,
}

impl StaircaseReport {
    pub fn passes(&self) -> bool {
        let half = q(self.l as i64 - 2, 2);
        self.feasible && self.values.iter().all(|v| *v == self.expected) && self.upper_sums.iter().all(|s| *s == half)
    }
}

/// Constraints on `t_ij` (row-major): `t_{i,i+1} = 0`, `t_ij = t_{j-1,i+1}`,
/// row and column sums `1`, indices mod `L`.
pub fn turn_constraints(l: usize) -> (Vec<QVec>, QVec) {
    let idx = |i: usize, j: usize| (i % l) * l + (j % l);
    let nv = l * l;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let unit = |k: usize| {
        let mut r = alloc::vec![Q::zero(); nv];
        r[k] = Q::one();
        r
    };
    for i in 0..l {
        rows.push(unit(idx(i, i + 1)));
        rhs.push(Q::zero());
    }
    for i in 0..l {
        for j in 0..l {
            let (a, b) = (idx(i, j), idx(j + l - 1, i + 1));
            if a != b {
                let mut r = unit(a);
                r[b] -= Q::one();
                rows.push(r);
                rhs.push(Q::zero());
            }
        }
    }
    for i in 0..l {
        let mut row = alloc::vec![Q::zero(); nv];
        let mut col = alloc::vec![Q::zero(); nv];
        for j in 0..l {
            row[idx(i, j)] = Q::one();
            col[idx(j, i)] = Q::one();
        }
        rows.push(row);
        rhs.push(Q::one());
        rows.push(col);
        rhs.push(Q::one());
    }
    (rows, rhs)
}

/// `c_ij = 1 - 1/n` for `i < j` and `1/n` otherwise.
pub fn turn_costs(l: usize, n: u32) -> QVec {
    let mut c = Vec::with_capacity(l * l);
    for i in 0..l {
        for j in 0..l {
            c.push(if i < j { Q::one() - q(1, n as i64) } else { q(1, n as i64) });
        }
    }
    c
}

/// Checks `sum c_ij t_ij = L/2 - (1 - 2/n)` at vertices picked by random objectives.
pub fn staircase_check(l: usize, n: u32, trials: usize, seed: u64) -> Result<StaircaseReport> {
    if l < 3 || n < 3 {
        return Err(Error::Precondition("need L >= 3 and n >= 3".into()));
    }
    let (rows, rhs) = turn_constraints(l);
    let cost = turn_costs(l, n);
    let expected = q(l as i64, 2) - (Q::one() - q(2, n as i64));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = StaircaseReport { l, n, feasible: true, expected, values: Vec::new(), upper_sums: Vec::new() };
    for _ in 0..trials {
        let obj: QVec = (0..l * l).map(|_| q(rng.gen_range(-20..=20), rng.gen_range(1..=5))).collect();
        let lp = LpProblem::new(rows.clone(), rhs.clone(), obj)?;
        let x = match lp.minimize() {
            LpOutcome::Optimal(s) => s.x,
            LpOutcome::Infeasible => {
                rep.feasible = false;
                return Ok(rep);
            }
            LpOutcome::Unbounded => unreachable!("the polytope is bounded"),
        };
        debug_assert!(lp.is_feasible(&x));
        rep.values.push(x.iter().zip(&cost).fold(Q::zero(), |acc, (a, b)| acc + a * b));
        let mut upper = Q::zero();
        for i in 0..l {
            for j in i + 1..l {
                upper += &x[i * l + j];
            }
        }
        rep.upper_sums.push(upper);
    }
    Ok(rep)
}

/// Lexicographic sign of `v` modulo `c`, read off after a unimodular change of
/// basis sending `c` to `e_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct CosetSign {
    c: Vec<i64>,
    u: Vec<Vec<i64>>,
    uinv: Vec<Vec<i64>>,
}

impl CosetSign {
    fn new(c: &[i64]) -> Result<Self> {
        let (u, uinv) = unimodular_completion(c)?;
        Ok(CosetSign { c: c.to_vec(), u, uinv })
    }

    /// `(j, rep)` with `v = j c + rep` and `rep` the canonical coset representative.
    fn split(&self, v: &[i64]) -> (i64, Vec<i64>) {
        let mut w = mat_vec(&self.u, v);
        let j = w[0];
        w[0] = 0;
        (j, mat_vec(&self.uinv, &w))
    }

    fn sign(&self, v: &[i64]) -> i8 {
        let w = mat_vec(&self.u, v);
        w[1..].iter().find(|&&x| x != 0).map_or(0, |&x| x.signum() as i8)
    }
}

/// `Z^ka *_Z Z^kb` amalgamated along primitive vectors `c_A` and `c_B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeAmalgam {
    a: CosetSign,
    b: CosetSign,
}

/// Normal form `p_1 p_2 ...` with alternating sides; every piece but a lone
/// one lies outside `C`, and the `C`-parts are pushed into the last piece.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AmalgamElement {
    pieces: Vec<(SideKey, Vec<i64>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum SideKey {
    A,
    B,
}

impl From<Side> for SideKey {
    fn from(s: Side) -> Self {
        match s {
            Side::A => SideKey::A,
            Side::B => SideKey::B,
        }
    }
}

impl AmalgamElement {
    pub fn pieces(&self) -> Vec<(Side, Vec<i64>)> {
        self.pieces
            .iter()
            .map(|(s, v)| (if *s == SideKey::A { Side::A } else { Side::B }, v.clone()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

impl LatticeAmalgam {
    pub fn new(c_a: &[i64], c_b: &[i64]) -> Result<Self> {
        let a = CosetSign::new(c_a).map_err(|_| Error::Precondition("c_A is not primitive".into()))?;
        let b = CosetSign::new(c_b).map_err(|_| Error::Precondition("c_B is not primitive".into()))?;
        Ok(LatticeAmalgam { a, b })
    }

    /// `Z^2 *_Z Z^2` with `c_A = c_B = (1, 0)`.
    pub fn standard() -> Self {
        LatticeAmalgam::new(&[1, 0], &[1, 0]).expect("primitive")
    }

    pub fn rank_a(&self) -> usize {
        self.a.c.len()
    }

    pub fn rank_b(&self) -> usize {
        self.b.c.len()
    }

    fn cs(&self, s: SideKey) -> &CosetSign {
        match s {
            SideKey::A => &self.a,
            SideKey::B => &self.b,
        }
    }

    pub fn sign_a(&self, v: &[i64]) -> i8 {
        self.a.sign(v)
    }

    pub fn sign_b(&self, v: &[i64]) -> i8 {
        self.b.sign(v)
    }

    pub fn identity(&self) -> AmalgamElement {
        AmalgamElement { pieces: Vec::new() }
    }

    /// Any product of pieces, reduced to normal form.
    pub fn element(&self, pieces: &[(Side, Vec<i64>)]) -> Result<AmalgamElement> {
        let mut raw = Vec::with_capacity(pieces.len());
        for (s, v) in pieces {
            let k = SideKey::from(*s);
            if v.len() != self.cs(k).c.len() {
                return Err(Error::Precondition("piece of wrong dimension".into()));
            }
            raw.push((k, v.clone()));
        }
        Ok(self.normalize(raw))
    }

    fn add(v: &mut [i64], w: &[i64], f: i64) {
        for (x, y) in v.iter_mut().zip(w) {
            *x += f * y;
        }
    }

    fn normalize(&self, raw: Vec<(SideKey, Vec<i64>)>) -> AmalgamElement {
        let mut st: Vec<(SideKey, Vec<i64>)> = Vec::with_capacity(raw.len());
        for (s, v) in raw {
            match st.last_mut() {
                Some(top) if top.0 == s => Self::add(&mut top.1, &v, 1),
                Some(top) => {
                    // a piece in C passes into its left neighbour
                    let (j, rep) = self.cs(s).split(&v);
                    if rep.iter().all(|&x| x == 0) {
                        let c = self.cs(top.0).c.clone();
                        Self::add(&mut top.1, &c, j);
                    } else {
                        st.push((s, v));
                    }
                }
                None => st.push((s, v)),
            }
            // the top may have fallen into C; fold it back until stable
            while st.len() >= 2 {
                let top = st.last().expect("nonempty");
                let (j, rep) = self.cs(top.0).split(&top.1);
                if rep.iter().any(|&x| x != 0) {
                    break;
                }
                st.pop();
                let below = st.last_mut().expect("nonempty");
                let c = self.cs(below.0).c.clone();
                Self::add(&mut below.1, &c, j);
            }
        }
        // a lone element of C is stored on side A
        if st.len() == 1 {
            let (j, rep) = self.cs(st[0].0).split(&st[0].1);
            if rep.iter().all(|&x| x == 0) {
                st[0] = (SideKey::A, self.a.c.iter().map(|x| x * j).collect());
            }
        }
        if st.len() == 1 && st[0].1.iter().all(|&x| x == 0) {
            st.clear();
        }
        // push C-parts to the right
        for i in 0..st.len().saturating_sub(1) {
            let (j, rep) = self.cs(st[i].0).split(&st[i].1);
            st[i].1 = rep;
            let c = self.cs(st[i + 1].0).c.clone();
            Self::add(&mut st[i + 1].1, &c, j);
        }
        if st.len() >= 2 && st[0].1.iter().all(|&x| x == 0) {
            st.remove(0);
        }
        AmalgamElement { pieces: st }
    }

    pub fn mul(&self, x: &AmalgamElement, y: &AmalgamElement) -> AmalgamElement {
        let mut raw = x.pieces.clone();
        raw.extend(y.pieces.iter().cloned());
        self.normalize(raw)
    }

    pub fn inverse(&self, x: &AmalgamElement) -> AmalgamElement {
        self.normalize(x.pieces.iter().rev().map(|(s, v)| (*s, v.iter().map(|t| -t).collect())).collect())
    }

    pub fn pow(&self, x: &AmalgamElement, n: usize) -> AmalgamElement {
        let mut raw = Vec::with_capacity(x.pieces.len() * n);
        for _ in 0..n {
            raw.extend(x.pieces.iter().cloned());
        }
        self.normalize(raw)
    }

    pub fn in_edge_group(&self, x: &AmalgamElement) -> bool {
        x.pieces.len() <= 1 && x.pieces.iter().all(|(s, v)| self.cs(*s).split(v).1.iter().all(|&t| t == 0))
    }

    /// Not conjugate into a factor.
    pub fn is_hyperbolic(&self, x: &AmalgamElement) -> bool {
        let mut p = x.pieces.clone();
        while p.len() >= 3 && p[0].0 == p[p.len() - 1].0 {
            // conjugate the last piece to the front
            let last = p.pop().expect("nonempty");
            p.insert(0, last);
            p = self.normalize(p).pieces;
        }
        p.len() >= 2 && p[0].0 != p[p.len() - 1].0
    }

    /// `a^{sign(p_1)} b^{sign(p_2)} ...`, empty on `C`.
    pub fn letter_map(&self, x: &AmalgamElement) -> Word {
        if self.in_edge_group(x) {
            return Word::empty();
        }
        let raw: Vec<(usize, i64)> = x
            .pieces
            .iter()
            .map(|(s, v)| match s {
                SideKey::A => (GEN_A, self.a.sign(v) as i64),
                SideKey::B => (GEN_B, self.b.sign(v) as i64),
            })
            .collect();
        f2().reduce(&raw)
    }

    /// Alternating product of `2 * pairs` pieces outside `C`, starting on side A.
    pub fn random_hyperbolic<R: Rng + ?Sized>(&self, rng: &mut R, pairs: usize, coord: i64) -> AmalgamElement {
        let mut raw = Vec::new();
        for i in 0..2 * pairs {
            let s = if i % 2 == 0 { SideKey::A } else { SideKey::B };
            let k = self.cs(s).c.len();
            let v = loop {
                let v: Vec<i64> = (0..k).map(|_| rng.gen_range(-coord..=coord)).collect();
                if self.cs(s).sign(&v) != 0 {
                    break v;
                }
            };
            raw.push((s, v));
        }
        self.normalize(raw)
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, max_pieces: usize, coord: i64) -> AmalgamElement {
        let n = rng.gen_range(0..=max_pieces);
        let first = if rng.gen_bool(0.5) { SideKey::A } else { SideKey::B };
        let raw = (0..n)
            .map(|i| {
                let s = if (i % 2 == 0) == (first == SideKey::A) { SideKey::A } else { SideKey::B };
                let k = self.cs(s).c.len();
                (s, (0..k).map(|_| rng.gen_range(-coord..=coord)).collect())
            })
            .collect();
        self.normalize(raw)
    }

    pub fn format(&self, x: &AmalgamElement) -> String {
        if x.pieces.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = x
            .pieces
            .iter()
            .map(|(s, v)| {
                let name = if *s == SideKey::A { "A" } else { "B" };
                let cs: Vec<String> = v.iter().map(|t| alloc::format!("{t}")).collect();
                alloc::format!("{name}({})", cs.join(","))
            })
            .collect();
        parts.join(" ")
    }
}

/// Rescales a circle pullback certificate to defect 1.
fn normalized(cert: SclCertificate) -> Result<SclCertificate> {
    let value = &cert.value / &cert.defect;
    let mut out = SclCertificate::bavard(alloc::format!("normalized({})", cert.witness), value, Q::one())?;
    out.inputs = cert.inputs;
    out.notes = cert.notes;
    Ok(out.with_note(alloc::format!("scaled by 1/{}", fmt_q(&cert.defect))))
}

/// Bavard bound from the letter-quasimorphism of the amalgam and a circle
/// quasimorphism, normalized to defect 1.
pub fn lrc_gap_certificate_amalgam(am: &LatticeAmalgam, g: &AmalgamElement) -> Result<SclCertificate> {
    if !am.is_hyperbolic(g) {
        return Err(Error::NotHyperbolic);
    }
    let phi = |x: &AmalgamElement| am.letter_map(x);
    let pow = |x: &AmalgamElement, n: usize| am.pow(x, n);
    let (k, b0) = infer_period(&phi, &pow, g).ok_or_else(|| Error::ShapeMismatch("no eventual period".into()))?;
    let cert = letter_qm_pullback(&phi, &pow, g, k, &b0)?;
    Ok(normalized(cert)?.with_input("element", am.format(g)))
}

/// Checks the letter-quasimorphism axiom on random triples; returns the number checked.
pub fn check_letter_axiom<G, R: Rng>(
    rng: &mut R,
    trials: usize,
    random: impl Fn(&mut R) -> G,
    mul: impl Fn(&G, &G) -> G,
    phi: impl Fn(&G) -> Word,
) -> Result<usize> {
    for i in 0..trials {
        let g = random(rng);
        let h = random(rng);
        let gh = mul(&g, &h);
        let (pg, ph, pgh) = (phi(&g), phi(&h), phi(&gh));
        if !letter_axiom_holds(&pg, &ph, &pgh) {
            let al = f2();
            return Err(Error::OracleViolation(alloc::format!(
                "triple {i}: Phi(g) = {}, Phi(h) = {}, Phi(gh) = {}",
                al.format_word(&pg),
                al.format_word(&ph),
                al.format_word(&pgh)
            )));
        }
    }
    Ok(trials)
}

/// `v_0 t^{e_0} v_1 ... t^{e_{n-1}} v_n` with `v_i` in `Z^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HnnElement {
    pub v: Vec<Vec<i64>>,
    pub eps: Vec<i8>,
}

impl HnnElement {
    pub fn vertex(v: Vec<i64>) -> Self {
        HnnElement { v: alloc::vec![v], eps: Vec::new() }
    }

    /// Number of stable letters.
    pub fn t_len(&self) -> usize {
        self.eps.len()
    }
}

pub type SignOracle = Arc<dyn Fn(&HnnElement) -> i8 + Send + Sync>;

/// HNN extension of `Z^k` with `t alpha t^-1 = beta`.
#[derive(Clone)]
pub struct LatticeHnn {
    k: usize,
    alpha: Vec<i64>,
    beta: Vec<i64>,
    oracle: SignOracle,
}

impl fmt::Debug for LatticeHnn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeHnn").field("alpha", &self.alpha).field("beta", &self.beta).finish()
    }
}

/// Pinching steps allowed per multiplication.
const PINCH_BUDGET: usize = 1 << 16;

impl LatticeHnn {
    /// `oracle(x)` is the sign of the coset `x A` in a left-invariant order on `G/A`.
    pub fn new(alpha: &[i64], beta: &[i64], oracle: SignOracle) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.is_empty() {
            return Err(Error::Precondition("alpha and beta need the same positive dimension".into()));
        }
        if alpha.iter().all(|&x| x == 0) || beta.iter().all(|&x| x == 0) {
            return Err(Error::Precondition("edge subgroups must be infinite cyclic".into()));
        }
        Ok(LatticeHnn { k: alpha.len(), alpha: alpha.to_vec(), beta: beta.to_vec(), oracle })
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    /// `j` with `v = j gen`, if any.
    fn multiple_of(v: &[i64], gen: &[i64]) -> Option<i64> {
        let p = gen.iter().position(|&x| x != 0)?;
        if v[p] % gen[p] != 0 {
            return None;
        }
        let j = v[p] / gen[p];
        v.iter().zip(gen).all(|(a, b)| *a == j * b).then_some(j)
    }

    pub fn element(&self, v: Vec<Vec<i64>>, eps: Vec<i8>) -> Result<HnnElement> {
        if v.len() != eps.len() + 1 || v.iter().any(|x| x.len() != self.k) || eps.iter().any(|e| e.abs() != 1) {
            return Err(Error::Precondition("malformed HNN word".into()));
        }
        self.britton(v, eps)
    }

    /// Pinches `t a t^-1 -> phi(a)` and `t^-1 b t -> phi^-1(b)` until none is left.
    fn britton(&self, v: Vec<Vec<i64>>, eps: Vec<i8>) -> Result<HnnElement> {
        let mut out_v: Vec<Vec<i64>> = alloc::vec![v[0].clone()];
        let mut out_e: Vec<i8> = Vec::new();
        let mut steps = 0;
        for (i, &e) in eps.iter().enumerate() {
            out_e.push(e);
            out_v.push(v[i + 1].clone());
            // pinch at the junction while possible
            while out_e.len() >= 2 {
                let n = out_e.len();
                let (e1, e2) = (out_e[n - 2], out_e[n - 1]);
                if e1 != -e2 {
                    break;
                }
                let mid = &out_v[n - 1];
                let (from, to) = if e1 == 1 { (&self.alpha, &self.beta) } else { (&self.beta, &self.alpha) };
                let Some(j) = Self::multiple_of(mid, from) else { break };
                steps += 1;
                if steps > PINCH_BUDGET {
                    return Err(Error::Budget("pinch rewriting".into()));
                }
                let last = out_v.pop().expect("nonempty");
                out_v.pop();
                out_e.pop();
                out_e.pop();
                let before = out_v.last_mut().expect("nonempty");
                for ((x, y), z) in before.iter_mut().zip(to).zip(&last) {
                    *x += j * y + z;
                }
            }
        }
        Ok(HnnElement { v: out_v, eps: out_e })
    }

    pub fn mul(&self, x: &HnnElement, y: &HnnElement) -> Result<HnnElement> {
        let mut v = x.v.clone();
        let mut first = y.v[0].clone();
        let last = v.pop().expect("nonempty");
        for (a, b) in first.iter_mut().zip(&last) {
            *a += b;
        }
        v.push(first);
        v.extend(y.v[1..].iter().cloned());
        let mut eps = x.eps.clone();
        eps.extend_from_slice(&y.eps);
        self.britton(v, eps)
    }

    pub fn inverse(&self, x: &HnnElement) -> HnnElement {
        HnnElement {
            v: x.v.iter().rev().map(|w| w.iter().map(|t| -t).collect()).collect(),
            eps: x.eps.iter().rev().map(|e| -e).collect(),
        }
    }

    pub fn pow(&self, x: &HnnElement, n: usize) -> Result<HnnElement> {
        let mut acc = HnnElement::vertex(alloc::vec![0; self.k]);
        for _ in 0..n {
            acc = self.mul(&acc, x)?;
        }
        Ok(acc)
    }

    /// Sign of `t_l v_i t_r` with the stable letters adjacent to `v_i`.
    fn interior_sign(&self, x: &HnnElement, i: usize) -> Result<i8> {
        let mut v = Vec::new();
        let mut eps = Vec::new();
        let zero = alloc::vec![0; self.k];
        if x.eps[i - 1] == -1 {
            v.push(zero.clone());
            eps.push(-1);
        }
        v.push(x.v[i].clone());
        if x.eps[i] == 1 {
            eps.push(1);
            v.push(zero);
        }
        let s = (self.oracle)(&HnnElement { v, eps });
        if s != 1 && s != -1 {
            return Err(Error::OracleViolation(alloc::format!("sign {s} on an interior coset")));
        }
        Ok(s)
    }

    /// `a b^{e_0} a^{s_1} b^{e_1} ... b^{e_{n-1}} a^-1`, empty on `V`.
    pub fn letter_map(&self, x: &HnnElement) -> Result<Word> {
        let n = x.eps.len();
        if n == 0 {
            return Ok(Word::empty());
        }
        let mut raw = alloc::vec![(GEN_A, 1i64), (GEN_B, x.eps[0] as i64)];
        for i in 1..n {
            raw.push((GEN_A, self.interior_sign(x, i)? as i64));
            raw.push((GEN_B, x.eps[i] as i64));
        }
        raw.push((GEN_A, -1));
        Ok(f2().reduce(&raw))
    }

    /// Conjugates until the cyclic word has no pinch; `None` if it lands in `V`.
    pub fn cyclically_reduce(&self, x: &HnnElement) -> Result<Option<HnnElement>> {
        let mut cur = x.clone();
        loop {
            if cur.eps.is_empty() {
                return Ok(None);
            }
            // move v_n to the front
            let last = cur.v.last().expect("nonempty").clone();
            let pre = HnnElement::vertex(last.clone());
            let mut body = cur.clone();
            *body.v.last_mut().expect("nonempty") = alloc::vec![0; self.k];
            cur = self.mul(&pre, &body)?;
            // pinch across the seam: t^{e_last} v_0 t^{e_0}
            let n = cur.eps.len();
            let (el, e0) = (cur.eps[n - 1], cur.eps[0]);
            let from = if el == 1 { &self.alpha } else { &self.beta };
            if el == -e0 && Self::multiple_of(&cur.v[0], from).is_some() {
                // conjugate by v_0 t^{e_0}
                let head = HnnElement { v: alloc::vec![cur.v[0].clone(), alloc::vec![0; self.k]], eps: alloc::vec![e0] };
                cur = self.mul(&self.mul(&self.inverse(&head), &cur)?, &head)?;
                continue;
            }
            return Ok(Some(cur));
        }
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, max_t: usize, coord: i64) -> Result<HnnElement> {
        let n = rng.gen_range(0..=max_t);
        let v = (0..=n).map(|_| (0..self.k).map(|_| rng.gen_range(-coord..=coord)).collect()).collect();
        let eps = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        self.element(v, eps)
    }

    /// Rejects the oracle unless the axiom holds on `trials` random triples.
    pub fn validate(&self, trials: usize, seed: u64) -> Result<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..trials {
            let g = self.random_element(&mut rng, 4, 2)?;
            let h = self.random_element(&mut rng, 4, 2)?;
            let gh = self.mul(&g, &h)?;
            let (pg, ph, pgh) = (self.letter_map(&g)?, self.letter_map(&h)?, self.letter_map(&gh)?);
            if !letter_axiom_holds(&pg, &ph, &pgh) {
                return Err(Error::OracleViolation(alloc::format!("letter axiom fails on triple {i}")));
            }
        }
        Ok(trials)
    }
}

pub fn lrc_gap_certificate_hnn(hnn: &LatticeHnn, g: &HnnElement) -> Result<SclCertificate> {
    if hnn.cyclically_reduce(g)?.is_none() {
        return Err(Error::NotHyperbolic);
    }
    // letter maps on powers; errors surface as an empty image and fail the shape check
    let phi = |x: &HnnElement| hnn.letter_map(x).unwrap_or_default();
    let pow = |x: &HnnElement, n: usize| hnn.pow(x, n).unwrap_or_else(|_| x.clone());
    for n in 1..=7 {
        hnn.letter_map(&hnn.pow(g, n)?)?;
    }
    let (k, b0) = infer_period(&phi, &pow, g).ok_or_else(|| Error::ShapeMismatch("no eventual period".into()))?;
    normalized(letter_qm_pullback(&phi, &pow, g, k, &b0)?)
}
