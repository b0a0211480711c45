//! Graph products of cyclic groups: normal forms and the gap dichotomy.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::qm::SclCertificate;
use crate::rational::{q, Q};
use crate::words::{Alphabet, Order, Word};

/// Syllables `(vertex, exponent)`.
pub type GpWord = Word;

/// A simple graph with a cyclic group at each vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphProductSpec {
    alphabet: Alphabet,
    adj: Vec<Vec<bool>>,
}

impl GraphProductSpec {
    pub fn new(vertices: Vec<(String, Order)>, edges: &[(usize, usize)]) -> Result<Self> {
        let alphabet = Alphabet::new(vertices)?;
        let n = alphabet.len();
        let mut adj = alloc::vec![alloc::vec![false; n]; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Precondition(alloc::format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::Precondition("graph has a loop".into()));
            }
            if adj[u][v] {
                return Err(Error::Precondition("graph has a multiple edge".into()));
            }
            adj[u][v] = true;
            adj[v][u] = true;
        }
        Ok(GraphProductSpec { alphabet, adj })
    }

    /// Vertices as in `"u/3 v w/5"`, edges by name.
    pub fn parse(vertices: &str, edges: &[(&str, &str)]) -> Result<Self> {
        let al = Alphabet::parse(vertices)?;
        let verts = (0..al.len()).map(|i| (String::from(al.name(i)), al.order(i))).collect();
        let es = edges.iter().map(|(u, v)| Ok((al.index_of(u)?, al.index_of(v)?))).collect::<Result<Vec<_>>>()?;
        GraphProductSpec::new(verts, &es)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_vertices(&self) -> usize {
        self.alphabet.len()
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_vertices();
        (0..n).flat_map(|u| (u + 1..n).filter(move |&v| self.adj[u][v]).map(move |v| (u, v))).collect()
    }

    pub fn is_clique(&self, vs: &BTreeSet<usize>) -> bool {
        vs.iter().all(|&u| vs.iter().all(|&v| u == v || self.adj[u][v]))
    }

    pub fn parse_word(&self, s: &str) -> Result<GpWord> {
        self.alphabet.parse_word(s)
    }

    pub fn format_word(&self, w: &GpWord) -> String {
        self.alphabet.format_word(w)
    }

    /// Order of `g_v^e`.
    pub fn syllable_order(&self, v: usize, e: i64) -> Order {
        match self.alphabet.order(v) {
            Order::Infinite => Order::Infinite,
            Order::Finite(o) => Order::Finite(o / (e.gcd(&(o as i64)) as u32)),
        }
    }

    pub fn mul(&self, a: &GpWord, b: &GpWord) -> GpWord {
        let mut s = a.syllables().to_vec();
        s.extend_from_slice(b.syllables());
        self.reduce_raw(&s)
    }

    pub fn inverse(&self, w: &GpWord) -> GpWord {
        self.reduce_raw(&w.syllables().iter().rev().map(|&(v, e)| (v, -e)).collect::<Vec<_>>())
    }

    pub fn pow(&self, w: &GpWord, k: i64) -> GpWord {
        let base = if k < 0 { self.inverse(w) } else { w.clone() };
        let mut s = Vec::new();
        for _ in 0..k.unsigned_abs() {
            s.extend_from_slice(base.syllables());
        }
        self.reduce_raw(&s)
    }

    fn reduce_raw(&self, raw: &[(usize, i64)]) -> GpWord {
        let mut s: Vec<(usize, i64)> = raw
            .iter()
            .map(|&(v, e)| (v, self.alphabet.normalize_exp(v, e)))
            .filter(|x| x.1 != 0)
            .collect();
        'outer: loop {
            for i in 0..s.len() {
                let v = s[i].0;
                for j in i + 1..s.len() {
                    if s[j].0 == v {
                        let e = self.alphabet.normalize_exp(v, s[i].1 + s[j].1);
                        s.remove(j);
                        if e == 0 {
                            s.remove(i);
                        } else {
                            s[i].1 = e;
                        }
                        continue 'outer;
                    }
                    if !self.adj[v][s[j].0] {
                        break;
                    }
                }
            }
            break;
        }
        Word::from_reduced(self.canonical_order(s))
    }

    /// Lexicographically least shuffle: repeatedly take the smallest vertex
    /// that commutes with everything before it.
    fn canonical_order(&self, mut s: Vec<(usize, i64)>) -> Vec<(usize, i64)> {
        let mut out = Vec::with_capacity(s.len());
        while !s.is_empty() {
            let mut best: Option<usize> = None;
            for i in 0..s.len() {
                if s[..i].iter().all(|x| self.adj[x.0][s[i].0]) && best.is_none_or(|b| s[i].0 < s[b].0) {
                    best = Some(i);
                }
            }
            out.push(s.remove(best.expect("first syllable is always a candidate")));
        }
        out
    }
}

/// Reduced form in canonical shuffle order.
pub fn gp_reduce(spec: &GraphProductSpec, w: &GpWord) -> GpWord {
    spec.reduce_raw(w.syllables())
}

/// Whether no syllable can be shuffled to both ends and cancelled by conjugation.
pub fn gp_is_cyclically_reduced(spec: &GraphProductSpec, w: &GpWord) -> bool {
    find_end_pair(spec, w.syllables()).is_none()
}

/// `(i, j)`, `i != j`, same vertex, `i` movable to the front and `j` to the back.
fn find_end_pair(spec: &GraphProductSpec, s: &[(usize, i64)]) -> Option<(usize, usize)> {
    let front = |i: usize| s[..i].iter().all(|x| spec.adj[x.0][s[i].0]);
    let back = |j: usize| s[j + 1..].iter().all(|x| spec.adj[x.0][s[j].0]);
    for i in (0..s.len()).filter(|&i| front(i)) {
        for j in (0..s.len()).filter(|&j| j != i && s[j].0 == s[i].0) {
            if back(j) {
                return Some((i, j));
            }
        }
    }
    None
}

/// `(c, core)` with `w = c core c^-1` and `core` cyclically reduced.
pub fn gp_cyclically_reduce(spec: &GraphProductSpec, w: &GpWord) -> (GpWord, GpWord) {
    let mut cur = gp_reduce(spec, w).syllables().to_vec();
    let mut conj: Vec<(usize, i64)> = Vec::new();
    while let Some((i, j)) = find_end_pair(spec, &cur) {
        // w = x rest y = x (rest y x) x^-1
        let x = cur[i];
        let mut rest = cur.clone();
        rest.remove(i.max(j));
        rest.remove(i.min(j));
        rest.push((x.0, cur[j].1 + x.1));
        conj.push(x);
        cur = gp_reduce(spec, &Word::from_reduced(rest)).syllables().to_vec();
    }
    (spec.reduce_raw(&conj), Word::from_reduced(cur))
}

/// Exact values on cliques of cyclic groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactScl {
    Zero,
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GpGapOutcome {
    Exact(ExactScl),
    Bound(SclCertificate),
    Inapplicable(String),
}

/// The clique dichotomy for a nontrivial cyclically reduced element.
pub fn gp_gap(spec: &GraphProductSpec, w: &GpWord) -> Result<GpGapOutcome> {
    if w.is_empty() {
        return Err(Error::Precondition("element is trivial".into()));
    }
    if gp_reduce(spec, w).syllable_len() != w.syllable_len() {
        return Err(Error::Precondition("word is not reduced".into()));
    }
    if !gp_is_cyclically_reduced(spec, &gp_reduce(spec, w)) {
        return Err(Error::Precondition("word is not cyclically reduced".into()));
    }
    let support: BTreeSet<usize> = w.syllables().iter().map(|s| s.0).collect();
    if spec.is_clique(&support) {
        let inf = w.syllables().iter().any(|&(v, e)| spec.syllable_order(v, e) == Order::Infinite);
        return Ok(GpGapOutcome::Exact(if inf { ExactScl::Infinite } else { ExactScl::Zero }));
    }
    let n = w.syllables().iter().map(|&(v, e)| spec.syllable_order(v, e)).min().expect("nonempty");
    let bound = match n {
        Order::Infinite => q(1, 2),
        Order::Finite(k) if k >= 3 => q(1, 2) - q(1, k as i64),
        Order::Finite(_) => return Ok(GpGapOutcome::Inapplicable("order-2 syllable present".into())),
    };
    let cert = SclCertificate::formula("graph-product-gap", bound)
        .with_input("word", spec.format_word(w))
        .with_input("n", order_str(n));
    Ok(GpGapOutcome::Bound(cert))
}

fn order_str(o: Order) -> String {
    match o {
        Order::Finite(k) => alloc::format!("{k}"),
        Order::Infinite => "inf".into(),
    }
}

/// Lower bound `n` such that `w` is `n`-RTF in `(G, G_sub)`; `None` if `w` lies in `G_sub`.
///
/// Uses the minimum syllable order when every syllable has order at least 3,
/// and the trivial bound 2 otherwise.
pub fn gp_rtf(spec: &GraphProductSpec, w: &GpWord, sub: &BTreeSet<usize>) -> Option<Order> {
    let w = gp_reduce(spec, w);
    if w.syllables().iter().all(|s| sub.contains(&s.0)) {
        return None;
    }
    let n = w.syllables().iter().map(|&(v, e)| spec.syllable_order(v, e)).min().expect("nonempty");
    Some(match n {
        Order::Finite(k) if k < 3 => Order::Finite(2),
        o => o,
    })
}

/// `1/2 - 1/n`, or `1/2` for `n = inf`.
pub fn half_minus_inverse(n: Order) -> Q {
    match n {
        Order::Infinite => q(1, 2),
        Order::Finite(k) => q(1, 2) - q(1, k as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path3() -> GraphProductSpec {
        // u - v - w
        GraphProductSpec::parse("u/3 v w/5", &[("u", "v"), ("v", "w")]).unwrap()
    }

    fn random_spec<R: Rng>(rng: &mut R) -> GraphProductSpec {
        let n = rng.gen_range(2..=5);
        let verts = (0..n)
            .map(|i| {
                let o = if rng.gen_bool(0.3) { Order::Infinite } else { Order::Finite(rng.gen_range(2..=6)) };
                (alloc::format!("g{i}"), o)
            })
            .collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.4) {
                    edges.push((u, v));
                }
            }
        }
        GraphProductSpec::new(verts, &edges).unwrap()
    }

    fn random_raw<R: Rng>(rng: &mut R, spec: &GraphProductSpec, len: usize) -> Vec<(usize, i64)> {
        (0..len)
            .map(|_| {
                let v = rng.gen_range(0..spec.num_vertices());
                let mut e = rng.gen_range(-3..=3);
                if e == 0 {
                    e = 1;
                }
                (v, e)
            })
            .collect()
    }

    /// Checks the reduced-form conditions directly.
    fn is_reduced(spec: &GraphProductSpec, w: &GpWord) -> bool {
        let s = w.syllables();
        if s.iter().any(|&(v, e)| spec.alphabet().normalize_exp(v, e) == 0) {
            return false;
        }
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if s[i].0 == s[j].0 && s[i + 1..j].iter().all(|x| spec.adjacent(x.0, s[i].0)) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn reduce_examples() {
        let g = path3();
        let w = g.parse_word("u v u").unwrap();
        assert_eq!(gp_reduce(&g, &w), g.parse_word("u^2 v").unwrap());
        assert!(gp_reduce(&g, &g.parse_word("u^3").unwrap()).is_empty());
        let w = g.parse_word("u w u").unwrap();
        assert_eq!(gp_reduce(&g, &w).syllable_len(), 3);
        // w commutes with v, so v moves in front of w
        assert_eq!(gp_reduce(&g, &g.parse_word("w v").unwrap()), g.parse_word("v w").unwrap());
        assert!(GraphProductSpec::parse("u v", &[("u", "u")]).is_err());
        assert!(GraphProductSpec::parse("u v", &[("u", "v"), ("v", "u")]).is_err());
    }

    #[test]
    fn reduce_is_canonical_under_relators() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let mut done = 0;
        while done < 500 {
            let spec = random_spec(&mut rng);
            let es = spec.edges();
            if es.is_empty() {
                continue;
            }
            let len = rng.gen_range(0..12);
            let raw = random_raw(&mut rng, &spec, len);
            let w = gp_reduce(&spec, &Word::from_reduced(raw.clone()));
            assert!(is_reduced(&spec, &w));
            assert_eq!(gp_reduce(&spec, &w), w);
            let (u, v) = es[rng.gen_range(0..es.len())];
            let (a, b) = (rng.gen_range(1..4), rng.gen_range(1..4));
            let rel = [(u, a), (v, b), (u, -a), (v, -b)];
            let at = rng.gen_range(0..=raw.len());
            let mut raw2 = raw[..at].to_vec();
            raw2.extend_from_slice(&rel);
            raw2.extend_from_slice(&raw[at..]);
            assert_eq!(gp_reduce(&spec, &Word::from_reduced(raw2)), w);
            // inserting x x^-1 is also invisible
            let x = (rng.gen_range(0..spec.num_vertices()), rng.gen_range(1..4));
            let mut raw3 = raw[..at].to_vec();
            raw3.extend_from_slice(&[x, (x.0, -x.1)]);
            raw3.extend_from_slice(&raw[at..]);
            assert_eq!(gp_reduce(&spec, &Word::from_reduced(raw3)), w);
            done += 1;
        }
    }

    #[test]
    fn products_are_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..300 {
            let spec = random_spec(&mut rng);
            let ws: Vec<GpWord> =
                (0..3).map(|_| gp_reduce(&spec, &Word::from_reduced(random_raw(&mut rng, &spec, 6)))).collect();
            let l = spec.mul(&spec.mul(&ws[0], &ws[1]), &ws[2]);
            let r = spec.mul(&ws[0], &spec.mul(&ws[1], &ws[2]));
            assert_eq!(l, r);
            assert!(spec.mul(&ws[0], &spec.inverse(&ws[0])).is_empty());
        }
    }

    /// Canonical forms reachable from `core` by rotating and reshuffling.
    fn rotation_closure(spec: &GraphProductSpec, core: &GpWord) -> BTreeSet<GpWord> {
        let mut seen = BTreeSet::new();
        let mut todo = alloc::vec![gp_reduce(spec, core)];
        while let Some(w) = todo.pop() {
            if !seen.insert(w.clone()) {
                continue;
            }
            let s = w.syllables();
            for k in 0..s.len() {
                if !s[..k].iter().all(|x| spec.adjacent(x.0, s[k].0)) {
                    continue;
                }
                let mut r = s.to_vec();
                let x = r.remove(k);
                r.push(x);
                let r = gp_reduce(spec, &Word::from_reduced(r));
                if r.syllable_len() == s.len() {
                    todo.push(r);
                }
            }
        }
        seen
    }

    #[test]
    fn cyclic_reduction() {
        let g = GraphProductSpec::parse("u v", &[]).unwrap();
        let w = g.parse_word("u v u^-1").unwrap();
        let (c, core) = gp_cyclically_reduce(&g, &w);
        assert_eq!(c, g.parse_word("u").unwrap());
        assert_eq!(core, g.parse_word("v").unwrap());
        let w = g.parse_word("u v u^-1 v^-1").unwrap();
        assert_eq!(gp_cyclically_reduce(&g, &w), (Word::empty(), w.clone()));

        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..300 {
            let spec = random_spec(&mut rng);
            let w = gp_reduce(&spec, &Word::from_reduced(random_raw(&mut rng, &spec, 7)));
            let u = gp_reduce(&spec, &Word::from_reduced(random_raw(&mut rng, &spec, 4)));
            let (c0, core0) = gp_cyclically_reduce(&spec, &w);
            assert_eq!(spec.mul(&spec.mul(&c0, &core0), &spec.inverse(&c0)), w);
            assert!(gp_is_cyclically_reduced(&spec, &core0));
            let conj = spec.mul(&spec.mul(&u, &w), &spec.inverse(&u));
            let (c1, core1) = gp_cyclically_reduce(&spec, &conj);
            assert_eq!(spec.mul(&spec.mul(&c1, &core1), &spec.inverse(&c1)), conj);
            assert_eq!(core1.syllable_len(), core0.syllable_len());
            assert!(
                rotation_closure(&spec, &core0).contains(&core1),
                "{} vs {}",
                spec.format_word(&core0),
                spec.format_word(&core1)
            );
        }
    }

    #[test]
    fn gap_examples() {
        for (m, n) in [(3u32, 3u32), (3, 5), (4, 7), (2, 5)] {
            let g = GraphProductSpec::new(
                alloc::vec![("u".into(), Order::Finite(m)), ("v".into(), Order::Finite(n)), ("w".into(), Order::Infinite)],
                &[(0, 2), (1, 2)],
            )
            .unwrap();
            let c = g.parse_word("u v u^-1 v^-1").unwrap();
            let out = gp_gap(&g, &c).unwrap();
            if m.min(n) >= 3 {
                let GpGapOutcome::Bound(cert) = out else { panic!("expected a bound") };
                assert_eq!(cert.bound, q(1, 2) - q(1, m.min(n) as i64));
            } else {
                assert!(matches!(out, GpGapOutcome::Inapplicable(_)));
            }
            // u and w commute: torsion in a direct product, or infinite order in Z
            assert_eq!(gp_gap(&g, &g.parse_word("u w^2").unwrap()).unwrap(), GpGapOutcome::Exact(ExactScl::Infinite));
            assert_eq!(gp_gap(&g, &g.parse_word("u").unwrap()).unwrap(), GpGapOutcome::Exact(ExactScl::Zero));
        }
        let raag = GraphProductSpec::parse("a b c", &[("a", "b")]).unwrap();
        let w = raag.parse_word("a c b^-1 c^-1").unwrap();
        let GpGapOutcome::Bound(cert) = gp_gap(&raag, &w).unwrap() else { panic!() };
        assert_eq!(cert.bound, q(1, 2));
        assert!(gp_gap(&raag, &raag.parse_word("a c a^-1").unwrap()).is_err());
        assert!(gp_gap(&raag, &Word::empty()).is_err());
    }

    #[test]
    fn clique_dichotomy_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..300 {
            let spec = random_spec(&mut rng);
            let w = gp_reduce(&spec, &Word::from_reduced(random_raw(&mut rng, &spec, 6)));
            let (_, core) = gp_cyclically_reduce(&spec, &w);
            if core.is_empty() {
                continue;
            }
            let vs: Vec<usize> = core.syllables().iter().map(|s| s.0).collect();
            let clique = vs.iter().all(|&a| vs.iter().all(|&b| a == b || spec.adjacent(a, b)));
            let exact = matches!(gp_gap(&spec, &core).unwrap(), GpGapOutcome::Exact(_));
            assert_eq!(clique, exact);
        }
    }

    #[test]
    fn rtf_in_graph_products() {
        let g = path3();
        let sub: BTreeSet<usize> = [0, 1].into_iter().collect();
        assert_eq!(gp_rtf(&g, &g.parse_word("u v").unwrap(), &sub), None);
        assert_eq!(gp_rtf(&g, &g.parse_word("u w").unwrap(), &sub), Some(Order::Finite(3)));
        assert_eq!(gp_rtf(&g, &g.parse_word("v w^2").unwrap(), &sub), Some(Order::Finite(5)));
        let only_u: BTreeSet<usize> = [0].into_iter().collect();
        assert_eq!(gp_rtf(&g, &g.parse_word("v^2").unwrap(), &only_u), Some(Order::Infinite));
        assert_eq!(half_minus_inverse(Order::Finite(3)), q(1, 6));
    }
}
