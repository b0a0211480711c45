//! Polyhedral degenerate norms on `Q^d`.
//!
//! A norm is given by its domain `V^f`, its vanishing locus `V^z` and a
//! symmetric point set `P`; the unit ball is `conv(P) + V^z`. Outside the
//! domain the norm is `+inf`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{is_zero, neg, rank, zero_vec, QVec, Subspace};
use crate::lp::{LpOutcome, LpProblem};
use crate::qm::{Quasimorphism, QuasimorphismHandle, SclCertificate};
use crate::rational::{fmt_q, q, qi, Q};
use crate::words::{Alphabet, Word};

/// A norm value, possibly `+inf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormValue {
    Finite(Q),
    Infinite,
}

impl NormValue {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            NormValue::Finite(x) => Some(x),
            NormValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, NormValue::Infinite)
    }
}

impl PartialOrd for NormValue {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        use core::cmp::Ordering::*;
        Some(match (self, other) {
            (NormValue::Finite(a), NormValue::Finite(b)) => a.cmp(b),
            (NormValue::Finite(_), NormValue::Infinite) => Less,
            (NormValue::Infinite, NormValue::Finite(_)) => Greater,
            (NormValue::Infinite, NormValue::Infinite) => Equal,
        })
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Finite(x) => f.write_str(&fmt_q(x)),
            NormValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyhedralSeminorm {
    dim: usize,
    domain: Subspace,
    vanishing: Subspace,
    points: Vec<QVec>,
}

impl PolyhedralSeminorm {
    /// Points are symmetrized. The points and `V^z` must span the domain.
    pub fn new(dim: usize, domain: &[QVec], vanishing: &[QVec], points: &[QVec]) -> Result<Self> {
        let bad = |s: &str| Err(Error::Precondition(alloc::format!("invalid norm: {s}")));
        if domain.iter().chain(vanishing).chain(points).any(|v| v.len() != dim) {
            return bad("vector of wrong dimension");
        }
        let domain = Subspace::span(dim, domain);
        let vanishing = Subspace::span(dim, vanishing);
        if !domain.contains_space(&vanishing) {
            return bad("vanishing locus not inside the domain");
        }
        if points.iter().any(|p| !domain.contains(p)) {
            return bad("ball point outside the domain");
        }
        let mut set: BTreeSet<QVec> = BTreeSet::new();
        for p in points {
            if !is_zero(p) {
                set.insert(p.clone());
                set.insert(neg(p));
            }
        }
        let points: Vec<QVec> = set.into_iter().collect();
        if Subspace::span(dim, &points).sum(&vanishing) != domain {
            return bad("ball does not span the domain");
        }
        Ok(PolyhedralSeminorm { dim, domain, vanishing, points })
    }

    /// Domain spanned by the ball.
    pub fn from_ball(dim: usize, points: &[QVec], vanishing: &[QVec]) -> Result<Self> {
        let mut dom = points.to_vec();
        dom.extend(vanishing.iter().cloned());
        PolyhedralSeminorm::new(dim, &dom, vanishing, points)
    }

    /// The norm that is `0` at `0` and `+inf` elsewhere.
    pub fn trivial(dim: usize) -> Self {
        PolyhedralSeminorm { dim, domain: Subspace::zero(dim), vanishing: Subspace::zero(dim), points: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Subspace {
        &self.domain
    }

    pub fn vanishing(&self) -> &Subspace {
        &self.vanishing
    }

    pub fn points(&self) -> &[QVec] {
        &self.points
    }

    /// `min { t : v in t * ball }`.
    pub fn eval(&self, v: &[Q]) -> NormValue {
        assert_eq!(v.len(), self.dim, "vector of wrong dimension");
        if !self.domain.contains(v) {
            return NormValue::Infinite;
        }
        if self.vanishing.contains(v) {
            return NormValue::Finite(Q::zero());
        }
        let zs = self.vanishing.basis();
        let nv = self.points.len() + 2 * zs.len();
        let rows: Vec<QVec> = (0..self.dim)
            .map(|i| {
                let mut r = Vec::with_capacity(nv);
                r.extend(self.points.iter().map(|p| p[i].clone()));
                r.extend(zs.iter().map(|z| z[i].clone()));
                r.extend(zs.iter().map(|z| -&z[i]));
                r
            })
            .collect();
        let mut c = alloc::vec![Q::one(); self.points.len()];
        c.extend(core::iter::repeat(Q::zero()).take(2 * zs.len()));
        let lp = LpProblem::new(rows, v.to_vec(), c).expect("consistent shapes");
        match lp.minimize() {
            LpOutcome::Optimal(s) => NormValue::Finite(s.value),
            // the ball spans the domain, so this cannot happen
            LpOutcome::Infeasible | LpOutcome::Unbounded => NormValue::Infinite,
        }
    }

    /// Ball `pi(ball)` on the target of the integer matrix `pi` (rows = target coordinates).
    pub fn quotient(&self, pi: &[Vec<i64>]) -> Result<PolyhedralSeminorm> {
        if pi.iter().any(|r| r.len() != self.dim) {
            return Err(Error::Precondition("map has wrong source dimension".into()));
        }
        let r = pi.len();
        let cols: Vec<QVec> = (0..self.dim).map(|j| pi.iter().map(|row| qi(row[j])).collect()).collect();
        if rank(&cols) != r {
            return Err(Error::Precondition("map is not surjective".into()));
        }
        let apply = |v: &QVec| -> QVec {
            pi.iter().map(|row| row.iter().zip(v).fold(Q::zero(), |acc, (a, x)| acc + qi(*a) * x)).collect()
        };
        let pts: Vec<QVec> = self.points.iter().map(apply).collect();
        let van: Vec<QVec> = self.vanishing.basis().iter().map(apply).collect();
        let dom: Vec<QVec> = self.domain.basis().iter().map(apply).collect();
        PolyhedralSeminorm::new(r, &dom, &van, &pts)
    }
}

/// The l1-mixture: ball `conv(B_1 u B_2)`, vanishing `V_1^z + V_2^z`.
pub fn mixture(a: &PolyhedralSeminorm, b: &PolyhedralSeminorm) -> Result<PolyhedralSeminorm> {
    if a.dim != b.dim {
        return Err(Error::Precondition("norms of different dimensions".into()));
    }
    let mut pts = a.points.clone();
    pts.extend(b.points.iter().cloned());
    let van: Vec<QVec> = a.vanishing.sum(&b.vanishing).basis().to_vec();
    let dom: Vec<QVec> = a.domain.sum(&b.domain).basis().to_vec();
    PolyhedralSeminorm::new(a.dim, &dom, &van, &pts)
}

/// The l1-product on the direct sum, `||(x_i)|| = sum ||x_i||_i`.
pub fn product(norms: &[&PolyhedralSeminorm]) -> Result<PolyhedralSeminorm> {
    let total: usize = norms.iter().map(|n| n.dim).sum();
    let mut off = 0;
    let (mut pts, mut van, mut dom) = (Vec::new(), Vec::new(), Vec::new());
    for n in norms {
        let pad = |v: &QVec| {
            let mut w = zero_vec(total);
            w[off..off + n.dim].clone_from_slice(v);
            w
        };
        pts.extend(n.points.iter().map(pad));
        van.extend(n.vanishing.basis().iter().map(pad));
        dom.extend(n.domain.basis().iter().map(pad));
        off += n.dim;
    }
    PolyhedralSeminorm::new(total, &dom, &van, &pts)
}

pub fn quotient_norm(n: &PolyhedralSeminorm, pi: &[Vec<i64>]) -> Result<PolyhedralSeminorm> {
    n.quotient(pi)
}

/// `scl_G(c)` for `c` in the edge group of `A *_C B`, from the pulled-back norms.
pub fn edge_scl_amalgam(na: &PolyhedralSeminorm, nb: &PolyhedralSeminorm, c: &[Q]) -> Result<NormValue> {
    Ok(mixture(na, nb)?.eval(c))
}

/// Smallest nonzero norm on integer points, with an integer point attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeGap {
    pub gap: Q,
    pub witness: Vec<BigInt>,
    /// Points examined.
    pub searched: usize,
}

fn lcm_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}

/// Minimum of the norm over integer points outside the vanishing locus.
///
/// Integer points project to a lattice in a coordinate complement `K` of `V^z`
/// containing `Z^K`, with denominators dividing `N0`. The ball projects into a
/// box of radius `R`, so `||x|| >= |x|_inf / R`; any `e_k` gives an upper bound
/// `U`, and the search covers the box of radius `U R` exactly.
pub fn lattice_gap(n: &PolyhedralSeminorm, budget: usize) -> Result<LatticeGap> {
    let d = n.dim;
    if n.domain.dim() != d {
        return Err(Error::Precondition("integer lattice is not inside the domain".into()));
    }
    if n.vanishing.dim() == d {
        return Err(Error::Precondition("norm vanishes identically".into()));
    }
    // coordinate complement: greedily add unit vectors
    let mut span = n.vanishing.clone();
    let mut comp = Vec::new();
    for k in 0..d {
        let mut e = zero_vec(d);
        e[k] = Q::one();
        if !span.contains(&e) {
            span = span.sum(&Subspace::span(d, &[e]));
            comp.push(k);
        }
    }
    let rest: Vec<usize> = (0..d).filter(|k| !comp.contains(k)).collect();
    // w_j in V^z with coordinates delta_j on `rest`
    let zb = n.vanishing.basis();
    let mut w: Vec<QVec> = Vec::new();
    for &j in &rest {
        let target: QVec = rest.iter().map(|&i| if i == j { Q::one() } else { Q::zero() }).collect();
        let cols: Vec<QVec> = zb.iter().map(|z| rest.iter().map(|&i| z[i].clone()).collect()).collect();
        let coef = crate::lattice::solve_combination(&cols, &target).expect("vanishing locus projects onto rest");
        let mut v = zero_vec(d);
        for (c, z) in coef.iter().zip(zb) {
            for i in 0..d {
                v[i] += c * &z[i];
            }
        }
        w.push(v);
    }
    let project = |p: &[Q]| -> QVec {
        comp.iter()
            .map(|&k| {
                let mut x = p[k].clone();
                for (jj, &j) in rest.iter().enumerate() {
                    x -= &p[j] * &w[jj][k];
                }
                x
            })
            .collect()
    };
    let embed = |x: &[Q]| -> QVec {
        let mut v = zero_vec(d);
        for (xi, &k) in x.iter().zip(&comp) {
            v[k] = xi.clone();
        }
        v
    };
    let mut n0 = BigInt::one();
    for v in &w {
        for &k in &comp {
            n0 = lcm_big(&n0, v[k].denom());
        }
    }
    let r = n
        .points
        .iter()
        .flat_map(|p| project(p))
        .map(|x| x.abs())
        .max()
        .ok_or_else(|| Error::Precondition("empty ball".into()))?;
    let mut best: Option<(Q, QVec)> = None;
    for &k in &comp {
        let mut e = zero_vec(d);
        e[k] = Q::one();
        let v = n.eval(&e).finite().cloned().expect("domain is everything");
        if best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, project(&e)));
        }
    }
    let (u, _) = best.clone().expect("complement is nonempty");
    let n0i = n0.to_i64().ok_or_else(|| Error::Budget("denominator too large".into()))?;
    let radius = (&u * &r * qi(n0i)).floor().to_integer().to_i64().ok_or_else(|| Error::Budget("box too large".into()))?;
    let kdim = comp.len();
    let side = 2 * radius as u64 + 1;
    if side.checked_pow(kdim as u32).is_none_or(|n| n > budget as u64) {
        return Err(Error::Budget(alloc::format!("search box has side {side} in dimension {kdim}")));
    }
    // classes of projected integer points modulo Z^K, as N0 * x mod N0, with lifts
    let gens: Vec<(Vec<i64>, usize)> = rest
        .iter()
        .enumerate()
        .map(|(jj, _)| {
            let g: Vec<i64> = comp
                .iter()
                .map(|&k| {
                    let t = -&w[jj][k] * qi(n0i);
                    t.to_integer().to_i64().expect("small").rem_euclid(n0i)
                })
                .collect();
            (g, jj)
        })
        .collect();
    let mut classes: BTreeMap<Vec<i64>, Vec<i64>> = BTreeMap::new();
    classes.insert(alloc::vec![0; kdim], alloc::vec![0; rest.len()]);
    let mut queue = alloc::vec![alloc::vec![0i64; kdim]];
    while let Some(c) = queue.pop() {
        let lift = classes[&c].clone();
        for (g, jj) in &gens {
            let nc: Vec<i64> = c.iter().zip(g).map(|(a, b)| (a + b).rem_euclid(n0i)).collect();
            if !classes.contains_key(&nc) {
                let mut nl = lift.clone();
                nl[*jj] += 1;
                classes.insert(nc.clone(), nl);
                queue.push(nc);
            }
        }
    }
    let mut searched = 0;
    let mut y = alloc::vec![-radius; kdim];
    loop {
        let cls: Vec<i64> = y.iter().map(|v| v.rem_euclid(n0i)).collect();
        if y.iter().any(|&v| v != 0) && classes.contains_key(&cls) {
            let x: QVec = y.iter().map(|&v| q(v, n0i)).collect();
            let inf = x.iter().map(|t| t.abs()).max().expect("nonempty");
            if inf / &r < best.as_ref().expect("set").0 {
                searched += 1;
                let v = n.eval(&embed(&x)).finite().cloned().expect("domain is everything");
                if v < best.as_ref().expect("set").0 {
                    best = Some((v, x));
                }
            }
        }
        let mut i = 0;
        while i < kdim {
            y[i] += 1;
            if y[i] <= radius {
                break;
            }
            y[i] = -radius;
            i += 1;
        }
        if i == kdim {
            break;
        }
    }
    let (gap, x) = best.expect("set");
    // integer lift: P_rest = c, P_comp = x + sum c_j w_j|comp
    let cls: Vec<i64> = x.iter().map(|t| (t * qi(n0i)).to_integer().to_i64().expect("small").rem_euclid(n0i)).collect();
    let cvec = classes.get(&cls).cloned().unwrap_or_else(|| alloc::vec![0; rest.len()]);
    let mut p = zero_vec(d);
    for (jj, &j) in rest.iter().enumerate() {
        p[j] = qi(cvec[jj]);
    }
    for (xi, &k) in x.iter().zip(&comp) {
        let mut v = xi.clone();
        for (jj, _) in rest.iter().enumerate() {
            v += qi(cvec[jj]) * &w[jj][k];
        }
        p[k] = v;
    }
    debug_assert!(p.iter().all(|t| t.is_integer()));
    Ok(LatticeGap { gap, witness: p.iter().map(|t| t.to_integer()).collect(), searched })
}

/// Which factor of `A *_C B` a normal-form piece lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

type PieceFn = Arc<dyn Fn(&Word) -> Vec<(Side, Word)> + Send + Sync>;
type SideQm = Arc<dyn Fn(&Word) -> Q + Send + Sync>;

/// Inputs for gluing extremal quasimorphisms of the factors along `C = <t>`.
///
/// `phi_a` and `phi_b` are assumed to satisfy `phi(c g) = phi(c) + phi(g)` and
/// `phi(g c) = phi(g) + phi(c)` for `c` in `C`; this is not checked.
#[derive(Clone)]
pub struct EdgeExtremalInput {
    pub alphabet: Alphabet,
    pub t: Word,
    /// The same element written in the generators of `B`.
    pub t_b: Word,
    /// Splits an element into pieces `a_1 b_1 ... a_n b_n`.
    pub normal_form: PieceFn,
    pub phi_a: SideQm,
    pub phi_b: SideQm,
    pub scl_a: Q,
    pub scl_b: Q,
    pub defect_a: Q,
    pub defect_b: Q,
}

/// `phi(a_1 b_1 ... a_n b_n) = sum phi_A(a_i) + phi_B(b_i)`, of defect at most `1/4`.
pub fn amalgam_edge_extremal(inp: &EdgeExtremalInput) -> Result<QuasimorphismHandle> {
    let mismatch = |s: String| Err(Error::NormalizationMismatch(s));
    if inp.scl_a > inp.scl_b || !inp.scl_a.is_positive() {
        return mismatch("need 0 < scl_A(t) <= scl_B(t)".into());
    }
    let pa = (inp.phi_a)(&inp.t);
    let pb = (inp.phi_b)(&inp.t_b);
    if pa != inp.scl_a || pb != inp.scl_a {
        return mismatch(alloc::format!(
            "phi_A(t) = {}, phi_B(t) = {}, scl_A(t) = {}",
            fmt_q(&pa),
            fmt_q(&pb),
            fmt_q(&inp.scl_a)
        ));
    }
    if inp.defect_a != q(1, 4) || inp.defect_b != &inp.scl_a / (qi(4) * &inp.scl_b) {
        return mismatch("defects must be 1/4 and scl_A(t) / (4 scl_B(t))".into());
    }
    let nf = inp.normal_form.clone();
    let (fa, fb) = (inp.phi_a.clone(), inp.phi_b.clone());
    let id = alloc::format!("edge-extremal({})", inp.alphabet.format_word(&inp.t));
    QuasimorphismHandle::new(id, inp.alphabet.clone(), q(1, 4), false, move |w| {
        nf(w).iter().fold(Q::zero(), |acc, (s, piece)| {
            acc + match s {
                Side::A => fa(piece),
                Side::B => fb(piece),
            }
        })
    })
}

/// Bavard bound for `t` from the glued quasimorphism: `phi(t^k) = k phi(t)` is
/// checked for small `k`, and the homogenization has defect at most `1/2`.
pub fn edge_extremal_certificate(phi: &QuasimorphismHandle, t: &Word) -> Result<SclCertificate> {
    let al = phi.alphabet().clone();
    let v = phi.eval(t);
    for k in 2..=4 {
        if phi.eval(&al.pow(t, k)) != &v * qi(k) {
            return Err(Error::OracleViolation("phi is not additive on powers of t".into()));
        }
    }
    let cert = SclCertificate::bavard(alloc::format!("homogenized({})", phi.id()), v, q(1, 2))?
        .with_input("t", al.format_word(t))
        .with_note("defect of homogenization at most twice 1/4");
    Ok(cert)
}

/// `<a, b | a^p = b^q>` amalgamated over `t = a^p = b^q`, which is central.
///
/// A synthetic test bed for [`amalgam_edge_extremal`]:
/// `phi_A(a^k) = (floor(k/p) + ceil(k/p))/8` is odd, shifts by `1/4` under `t`
/// and has defect `1/8`; `phi_B(b^k) = k/(4q)` is a homomorphism.
#[derive(Clone, Debug)]
pub struct TorusKnotModel {
    pub p: i64,
    pub q: i64,
    alphabet: Alphabet,
}

impl TorusKnotModel {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if p < 2 || q < 2 {
            return Err(Error::Precondition("p and q must be at least 2".into()));
        }
        Ok(TorusKnotModel { p, q, alphabet: Alphabet::free(&["a", "b"]) })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn t(&self) -> Word {
        self.alphabet.reduce(&[(0, self.p)])
    }

    /// `(m, syllables)`: the element `t^m s_1 ... s_k` with residues in `(0, p)` or `(0, q)`.
    pub fn normalize(&self, w: &Word) -> (i64, Vec<(usize, i64)>) {
        let mut m = 0i64;
        let mut st: Vec<(usize, i64)> = Vec::new();
        for &(g, e) in w.syllables() {
            let mut k = e;
            if let Some(&(tg, te)) = st.last() {
                if tg == g {
                    st.pop();
                    k += te;
                }
            }
            let o = if g == 0 { self.p } else { self.q };
            m += k.div_euclid(o);
            let r = k.rem_euclid(o);
            if r != 0 {
                st.push((g, r));
            }
        }
        (m, st)
    }

    /// Pieces `a_1 b_1 ...`, with the central part absorbed into `a_1`.
    pub fn pieces(&self, w: &Word) -> Vec<(Side, Word)> {
        let (m, st) = self.normalize(w);
        let mut out = Vec::new();
        let mut first = true;
        let side = |g: usize| if g == 0 { Side::A } else { Side::B };
        if st.first().map(|s| s.0) != Some(0) {
            out.push((Side::A, self.alphabet.reduce(&[(0, m * self.p)])));
            first = false;
        }
        for &(g, r) in &st {
            let e = if first { r + m * self.p } else { r };
            first = false;
            out.push((side(g), self.alphabet.reduce(&[(g, e)])));
        }
        out
    }

    pub fn mul(&self, x: &Word, y: &Word) -> Word {
        self.alphabet.mul(x, y)
    }

    pub fn phi_a(p: i64) -> impl Fn(&Word) -> Q + Send + Sync + Clone {
        move |w: &Word| {
            let k: i64 = w.syllables().iter().map(|s| s.1).sum();
            let fl = k.div_euclid(p);
            let ce = fl + i64::from(k.rem_euclid(p) != 0);
            q(fl + ce, 8)
        }
    }

    pub fn phi_b(qq: i64) -> impl Fn(&Word) -> Q + Send + Sync + Clone {
        move |w: &Word| {
            let k: i64 = w.syllables().iter().map(|s| s.1).sum();
            q(k, 4 * qq)
        }
    }

    pub fn edge_input(&self) -> EdgeExtremalInput {
        let me = self.clone();
        EdgeExtremalInput {
            alphabet: self.alphabet.clone(),
            t: self.t(),
            t_b: self.alphabet.reduce(&[(1, self.q)]),
            normal_form: Arc::new(move |w| me.pieces(w)),
            phi_a: Arc::new(Self::phi_a(self.p)),
            phi_b: Arc::new(Self::phi_b(self.q)),
            scl_a: q(1, 4),
            scl_b: q(1, 2),
            defect_a: q(1, 4),
            defect_b: q(1, 8),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{add, scale, to_qvec};
    use crate::qm::{bavard_bound, sample_defect_with, Homogenization};
    use crate::words::Chain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[i64]) -> QVec {
        to_qvec(xs)
    }

    fn fin(x: NormValue) -> Q {
        x.finite().cloned().expect("finite")
    }

    fn surgery(p: i64, qq: i64) -> (PolyhedralSeminorm, PolyhedralSeminorm) {
        let a = PolyhedralSeminorm::from_ball(2, &[v(&[2, 0])], &[]).unwrap();
        let b = PolyhedralSeminorm::from_ball(2, &[v(&[2 * p, 2 * qq])], &[]).unwrap();
        (a, b)
    }

    /// Facets `a.x <= 1` of a full-dimensional symmetric polygon by brute force.
    fn facets_2d(pts: &[QVec]) -> Vec<QVec> {
        let mut out = Vec::new();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let (p, r) = (&pts[i], &pts[j]);
                let det = &p[0] * &r[1] - &p[1] * &r[0];
                if det.is_zero() {
                    continue;
                }
                // a.p = a.r = 1
                let a = alloc::vec![(&r[1] - &p[1]) / &det, (&p[0] - &r[0]) / &det];
                if pts.iter().all(|x| &a[0] * &x[0] + &a[1] * &x[1] <= Q::one()) {
                    out.push(a);
                }
            }
        }
        out
    }

    fn facet_norm(facets: &[QVec], x: &[Q]) -> Q {
        facets.iter().map(|a| &a[0] * &x[0] + &a[1] * &x[1]).max().unwrap().max(Q::zero())
    }

    fn random_norm<R: Rng>(rng: &mut R, d: usize, with_vanishing: bool) -> PolyhedralSeminorm {
        loop {
            let k = rng.gen_range(d..d + 3);
            let pts: Vec<QVec> =
                (0..k).map(|_| (0..d).map(|_| q(rng.gen_range(-4..=4), rng.gen_range(1..=3))).collect()).collect();
            let van: Vec<QVec> = if with_vanishing {
                alloc::vec![(0..d).map(|_| qi(rng.gen_range(-2..=2))).collect()]
            } else {
                Vec::new()
            };
            if let Ok(n) = PolyhedralSeminorm::new(d, &Subspace::full(d).basis().to_vec(), &van, &pts) {
                if n.vanishing().dim() < d {
                    return n;
                }
            }
        }
    }

    #[test]
    fn eval_examples() {
        let (a, _) = surgery(1, 1);
        assert_eq!(a.eval(&v(&[0, 0])), NormValue::Finite(Q::zero()));
        assert_eq!(a.eval(&v(&[1, 0])), NormValue::Finite(q(1, 2)));
        assert_eq!(a.eval(&v(&[0, 1])), NormValue::Infinite);
        let t = PolyhedralSeminorm::trivial(2);
        assert_eq!(t.eval(&v(&[0, 0])), NormValue::Finite(Q::zero()));
        assert!(t.eval(&v(&[1, 0])).is_infinite());
        assert!(PolyhedralSeminorm::new(2, &[v(&[1, 0])], &[v(&[0, 1])], &[]).is_err());
        assert!(PolyhedralSeminorm::new(2, &[v(&[1, 0]), v(&[0, 1])], &[], &[v(&[1, 0])]).is_err());
    }

    #[test]
    fn surgery_family() {
        // The hull meets the positive y-axis at (0, 2q/(p+1)), so the value on
        // (0, 1) is (p+1)/(2q).
        for (p, qq, want) in [(1, 1, qi(1)), (1, 2, q(1, 2)), (3, 2, qi(1)), (2, 5, q(3, 10))] {
            let (a, b) = surgery(p, qq);
            let m = mixture(&a, &b).unwrap();
            let f = facets_2d(m.points());
            assert_eq!(facet_norm(&f, &v(&[0, 1])), want);
            assert_eq!(fin(m.eval(&v(&[0, 1]))), want);
            assert_eq!(fin(edge_scl_amalgam(&a, &b, &v(&[0, 1])).unwrap()), q(p + 1, 2 * qq));
            let verts: BTreeSet<QVec> = m.points().iter().cloned().collect();
            let expect: BTreeSet<QVec> =
                [v(&[2, 0]), v(&[-2, 0]), v(&[2 * p, 2 * qq]), v(&[-2 * p, -2 * qq])].into_iter().collect();
            assert_eq!(verts, expect);
            // the same norm as a quotient of the product under addition
            let prod = product(&[&a, &b]).unwrap();
            let quo = quotient_norm(&prod, &[alloc::vec![1, 0, 1, 0], alloc::vec![0, 1, 0, 1]]).unwrap();
            for x in [v(&[0, 1]), v(&[1, 0]), v(&[3, -2]), v(&[1, 1])] {
                assert_eq!(quo.eval(&x), m.eval(&x));
            }
        }
    }

    #[test]
    fn rank_one_edge() {
        let a = PolyhedralSeminorm::from_ball(1, &[v(&[2])], &[]).unwrap();
        let b = PolyhedralSeminorm::from_ball(1, &[alloc::vec![q(1, 2)]], &[]).unwrap();
        assert_eq!(fin(a.eval(&v(&[1]))), q(1, 2));
        assert_eq!(fin(b.eval(&v(&[1]))), qi(2));
        assert_eq!(fin(edge_scl_amalgam(&a, &b, &v(&[1])).unwrap()), q(1, 2));
        assert_eq!(fin(edge_scl_amalgam(&a, &b, &v(&[0])).unwrap()), qi(0));
        let m = mixture(&a, &PolyhedralSeminorm::trivial(1)).unwrap();
        assert_eq!(m, a);
    }

    #[test]
    fn quotient_of_two_lines() {
        let unit = PolyhedralSeminorm::from_ball(1, &[v(&[1])], &[]).unwrap();
        let prod = product(&[&unit, &unit]).unwrap();
        let sum = quotient_norm(&prod, &[alloc::vec![1, 1]]).unwrap();
        assert_eq!(fin(sum.eval(&v(&[1]))), qi(1));
        assert_eq!(fin(sum.eval(&v(&[2]))), qi(2));
        let id = quotient_norm(&prod, &[alloc::vec![1, 0], alloc::vec![0, 1]]).unwrap();
        assert_eq!(id, prod);
        assert!(quotient_norm(&prod, &[alloc::vec![1, 1], alloc::vec![2, 2]]).is_err());
    }

    #[test]
    fn norm_axioms_on_random_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for i in 0..200 {
            let d = rng.gen_range(1..=3);
            let n = random_norm(&mut rng, d, i % 3 == 0);
            let x: QVec = (0..d).map(|_| q(rng.gen_range(-5..=5), rng.gen_range(1..=2))).collect();
            let y: QVec = (0..d).map(|_| qi(rng.gen_range(-5..=5))).collect();
            let (nx, ny, nxy) = (fin(n.eval(&x)), fin(n.eval(&y)), fin(n.eval(&add(&x, &y))));
            assert!(nxy <= &nx + &ny);
            assert_eq!(fin(n.eval(&scale(&x, &qi(2)))), &nx * qi(2));
            assert_eq!(fin(n.eval(&scale(&x, &qi(-3)))), &nx * qi(3));
            for z in n.vanishing().basis() {
                assert_eq!(fin(n.eval(&add(&x, z))), nx);
            }
        }
    }

    #[test]
    fn mixture_matches_polygon_facets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        while checked < 300 {
            let a = random_norm(&mut rng, 2, false);
            let b = random_norm(&mut rng, 2, false);
            let m = mixture(&a, &b).unwrap();
            let f = facets_2d(m.points());
            let x: QVec = (0..2).map(|_| q(rng.gen_range(-6..=6), rng.gen_range(1..=3))).collect();
            let got = fin(m.eval(&x));
            assert_eq!(got, facet_norm(&f, &x));
            assert!(got <= fin(a.eval(&x)) && got <= fin(b.eval(&x)));
            for p in a.points() {
                assert!(fin(m.eval(p)) <= Q::one());
            }
            checked += 1;
        }
    }

    #[test]
    fn quotient_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let n = random_norm(&mut rng, 3, false);
            let pi = loop {
                let m: Vec<Vec<i64>> = (0..2).map(|_| (0..3).map(|_| rng.gen_range(-2..=2)).collect()).collect();
                if rank(&(0..3).map(|j| m.iter().map(|r| qi(r[j])).collect()).collect::<Vec<QVec>>()) == 2 {
                    break m;
                }
            };
            let qn = quotient_norm(&n, &pi).unwrap();
            let x: QVec = (0..3).map(|_| qi(rng.gen_range(-4..=4))).collect();
            let px: QVec = pi.iter().map(|r| r.iter().zip(&x).fold(Q::zero(), |a, (c, t)| a + qi(*c) * t)).collect();
            assert!(fin(qn.eval(&px)) <= fin(n.eval(&x)));
        }
    }

    fn box_min(n: &PolyhedralSeminorm, radius: i64) -> Q {
        let d = n.dim();
        let mut best: Option<Q> = None;
        let mut y = alloc::vec![-radius; d];
        loop {
            let x: QVec = y.iter().map(|&t| qi(t)).collect();
            if !n.vanishing().contains(&x) {
                let v = fin(n.eval(&x));
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v);
                }
            }
            let mut i = 0;
            while i < d {
                y[i] += 1;
                if y[i] <= radius {
                    break;
                }
                y[i] = -radius;
                i += 1;
            }
            if i == d {
                break;
            }
        }
        best.unwrap()
    }

    #[test]
    fn lattice_gap_examples() {
        let unit = PolyhedralSeminorm::from_ball(1, &[v(&[1])], &[]).unwrap();
        assert_eq!(lattice_gap(&unit, 10_000).unwrap().gap, qi(1));
        let (a, b) = surgery(1, 1);
        let m = mixture(&a, &b).unwrap();
        let g = lattice_gap(&m, 10_000).unwrap();
        assert_eq!(g.gap, box_min(&m, 8));
        assert_eq!(g.gap, q(1, 2));
        assert_eq!(fin(m.eval(&v(&[1, 0]))), q(1, 2));
        assert_eq!(fin(m.eval(&v(&[0, 1]))), qi(1));
        // vanishing along (1, 1): classes are indexed by x - y
        let n = PolyhedralSeminorm::new(2, &Subspace::full(2).basis().to_vec(), &[v(&[1, 1])], &[v(&[3, 0])]).unwrap();
        let g = lattice_gap(&n, 10_000).unwrap();
        assert_eq!(g.gap, q(1, 3));
        assert_eq!(fin(n.eval(&g.witness.iter().map(|t| Q::from_integer(t.clone())).collect::<QVec>())), g.gap);
        assert!(lattice_gap(&a, 10_000).is_err());
    }

    #[test]
    fn lattice_gap_matches_box_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for i in 0..20 {
            let d = if i < 12 { 2 } else { 3 };
            let n = random_norm(&mut rng, d, i % 4 == 3);
            let g = lattice_gap(&n, 200_000).unwrap();
            let w: QVec = g.witness.iter().map(|t| Q::from_integer(t.clone())).collect();
            assert!(!n.vanishing().contains(&w));
            assert_eq!(fin(n.eval(&w)), g.gap);
            let radius = if d == 2 { 8 } else { 4 };
            assert_eq!(g.gap, box_min(&n, radius), "norm {i}");
        }
    }

    #[test]
    fn edge_extremal_on_torus_knot_model() {
        let model = TorusKnotModel::new(3, 5).unwrap();
        let inp = model.edge_input();
        let phi = amalgam_edge_extremal(&inp).unwrap();
        let t = model.t();
        assert_eq!(phi.eval(&t), q(1, 4));
        let al = model.alphabet().clone();
        let d = sample_defect_with(
            |w: &Word| phi.eval(w),
            |x: &Word, y: &Word| model.mul(x, y),
            |rng: &mut ChaCha8Rng| al.random_word(rng, 12),
            2000,
            7,
        );
        assert!(d <= q(1, 4), "sampled defect {d}");
        assert!(d.is_positive());
        let cert = edge_extremal_certificate(&phi, &t).unwrap();
        assert_eq!(cert.bound, inp.scl_a);
        // the handle is not homogeneous; the horizon estimate brackets the value
        let h: Homogenization = crate::qm::homogenize(&phi, &t, 8).unwrap();
        assert_eq!(h.value, q(1, 4));
        assert!(bavard_bound(&phi, &Chain::single(t.clone()).unwrap()).is_err());
        // normal forms are unique: equal group elements get equal pieces
        let w = al.parse_word("a^3 b a^-1").unwrap();
        let w2 = al.parse_word("b^6 a^2 b^-5").unwrap();
        assert_eq!(model.normalize(&w), model.normalize(&w2));
        assert_eq!(model.normalize(&al.parse_word("a b^5 a").unwrap()), (1, alloc::vec![(0, 2)]));
    }

    #[test]
    fn edge_extremal_rejects_bad_normalization() {
        let model = TorusKnotModel::new(2, 3).unwrap();
        let mut inp = model.edge_input();
        inp.scl_a = q(1, 3);
        assert!(matches!(amalgam_edge_extremal(&inp), Err(Error::NormalizationMismatch(_))));
        let mut inp = model.edge_input();
        inp.defect_b = q(1, 4);
        assert!(amalgam_edge_extremal(&inp).is_err());
    }
}
