//! Circle words: a combinatorial copy of the line carrying an honest action.
//!
//! A circle word is a pair `(w, n)` where `w` is a reduced word in letters
//! `x_0, ..., x_{M-1}` built by prepending letters allowed by the level of the
//! suffix, and `n` is a shift by `M`. The level `lambda` plays the role of the
//! nearest integer, and the order refines it letter by letter.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{One, ToPrimitive, Zero};

use crate::circle::AltWord;
use crate::error::{Error, Result};
use crate::rational::{q, qi, Q};
use crate::words::{Alphabet, Letter, Word};

/// `x_idx` or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XLetter {
    pub idx: usize,
    pub inv: bool,
}

impl XLetter {
    pub fn new(idx: usize, inv: bool) -> Self {
        XLetter { idx, inv }
    }

    pub fn inverse(self) -> Self {
        XLetter { idx: self.idx, inv: !self.inv }
    }
}

impl fmt::Display for XLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inv {
            write!(f, "x{}^-1", self.idx)
        } else {
            write!(f, "x{}", self.idx)
        }
    }
}

/// Change of level when `y` is prepended to a word whose level is `r` mod `m`.
fn level_step(m: usize, r: usize, y: XLetter) -> Option<i8> {
    let prev = (r + m - 1) % m;
    if y.idx == r {
        Some(if y.inv { 0 } else { 1 })
    } else if y.idx == prev {
        Some(if y.inv { -1 } else { 0 })
    } else {
        None
    }
}

fn parse_xletter(m: usize, tok: &str) -> Result<XLetter> {
    let bad = || Error::Parse(alloc::format!("bad circle letter `{tok}`"));
    let body = tok.strip_prefix('x').ok_or_else(bad)?;
    let (num, inv) = match body.split_once('^') {
        Some((n, "-1")) => (n, true),
        Some((n, "1")) => (n, false),
        Some(_) => return Err(bad()),
        None => (body, false),
    };
    let idx: usize = num.parse().map_err(|_| bad())?;
    if idx >= m {
        return Err(Error::Precondition(alloc::format!("letter index {idx} out of range for M = {m}")));
    }
    Ok(XLetter { idx, inv })
}

/// An element `(w, n)` of the circle words with period `M`.
///
/// Letters are stored last-first, each with the level change it caused.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CircleWord {
    m: usize,
    stack: Vec<(XLetter, i8)>,
    level: i64,
    shift: i64,
}

impl CircleWord {
    pub fn empty(m: usize, shift: i64) -> Self {
        assert!(m >= 2, "period must be at least 2");
        CircleWord { m, stack: Vec::new(), level: 0, shift }
    }

    /// Validates `letters` (first letter first) by replaying the prepends.
    pub fn new(m: usize, letters: &[XLetter], shift: i64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition("period must be at least 2".into()));
        }
        let mut w = CircleWord::empty(m, shift);
        for &y in letters.iter().rev() {
            if y.idx >= m {
                return Err(Error::Precondition(alloc::format!("letter {y} out of range for M = {m}")));
            }
            if w.first_letter() == Some(y.inverse()) {
                return Err(Error::Precondition("word is not reduced".into()));
            }
            let r = w.level.rem_euclid(m as i64) as usize;
            let d = level_step(m, r, y).ok_or_else(|| {
                Error::Precondition(alloc::format!("{y} cannot be prepended at level {}", w.level))
            })?;
            w.stack.push((y, d));
            w.level += i64::from(d);
        }
        Ok(w)
    }

    /// Parses e.g. `x1 x0^-1`; `1` or blank is the empty word.
    pub fn parse(m: usize, s: &str, shift: i64) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return CircleWord::new(m, &[], shift);
        }
        let ls = s.split_whitespace().map(|t| parse_xletter(m, t)).collect::<Result<Vec<_>>>()?;
        CircleWord::new(m, &ls, shift)
    }

    pub fn period(&self) -> usize {
        self.m
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    /// Letters, first letter first.
    pub fn letters(&self) -> Vec<XLetter> {
        self.stack.iter().rev().map(|e| e.0).collect()
    }

    pub fn first_letter(&self) -> Option<XLetter> {
        self.stack.last().map(|e| e.0)
    }

    /// Level of the word alone, ignoring the shift.
    pub fn word_level(&self) -> i64 {
        self.level
    }

    pub fn lambda(&self) -> i64 {
        self.level + self.shift * self.m as i64
    }

    fn residue(&self) -> usize {
        self.level.rem_euclid(self.m as i64) as usize
    }

    /// Drops the first letter, keeping the shift.
    pub fn tail(&self) -> Option<CircleWord> {
        let mut t = self.clone();
        let (_, d) = t.stack.pop()?;
        t.level -= i64::from(d);
        Some(t)
    }

    /// `y w` reduced. Panics if `y` is not allowed at this level.
    fn prepend(&mut self, y: XLetter) {
        if let Some(&(top, d)) = self.stack.last() {
            if top == y.inverse() {
                self.stack.pop();
                self.level -= i64::from(d);
                return;
            }
        }
        let d = level_step(self.m, self.residue(), y).expect("letter not allowed at this level");
        self.stack.push((y, d));
        self.level += i64::from(d);
    }

    /// Acts when the level is `i` or `i + 1` mod `M`, otherwise fixes the word.
    pub fn psi_apply(&self, x: XLetter) -> CircleWord {
        let mut w = self.clone();
        let r = w.residue();
        if r == x.idx || r == (x.idx + 1) % self.m {
            w.prepend(x);
        }
        w
    }

    pub fn tau(&self, k: i64) -> CircleWord {
        CircleWord { shift: self.shift + k, ..self.clone() }
    }

    /// Level first, then the first letter (`x_i^-1` before the empty word
    /// before `x_{i-1}`), then the tails.
    pub fn compare(&self, other: &CircleWord) -> Ordering {
        assert_eq!(self.m, other.m, "circle words of different periods");
        let (mut i, mut j) = (self.stack.len(), other.stack.len());
        let (mut la, mut lb) = (self.lambda(), other.lambda());
        loop {
            match la.cmp(&lb) {
                Ordering::Equal => {}
                o => return o,
            }
            let rank = |k: usize, st: &[(XLetter, i8)]| match k {
                0 => 1,
                _ if st[k - 1].0.inv => 0,
                _ => 2,
            };
            let (ra, rb) = (rank(i, &self.stack), rank(j, &other.stack));
            match ra.cmp(&rb) {
                Ordering::Equal => {}
                o => return o,
            }
            if i == 0 {
                return Ordering::Equal;
            }
            debug_assert_eq!(self.stack[i - 1].0, other.stack[j - 1].0);
            la -= i64::from(self.stack[i - 1].1);
            lb -= i64::from(other.stack[j - 1].1);
            i -= 1;
            j -= 1;
        }
    }

    pub fn format_word(&self) -> String {
        if self.stack.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = self.stack.iter().rev().map(|e| alloc::format!("{}", e.0)).collect();
        parts.join(" ")
    }
}

impl fmt::Display for CircleWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.format_word(), self.shift)
    }
}

impl PartialOrd for CircleWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CircleWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.m.cmp(&other.m).then_with(|| self.compare(other))
    }
}

/// All words of length at most `k` (shift 0), in increasing order.
pub fn enumerate(m: usize, k: usize) -> Vec<CircleWord> {
    let mut all = alloc::vec![CircleWord::empty(m, 0)];
    let mut frontier = all.clone();
    for _ in 0..k {
        let mut next = Vec::new();
        for w in &frontier {
            let r = w.residue();
            let prev = (r + m - 1) % m;
            for y in [XLetter::new(r, false), XLetter::new(r, true), XLetter::new(prev, false), XLetter::new(prev, true)] {
                if w.first_letter() == Some(y.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.prepend(y);
                next.push(v);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all.sort();
    all
}

/// Generators of the group acting on circle words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CircleGen {
    Psi(XLetter),
    Tau,
    TauInv,
}

impl CircleGen {
    pub fn inverse(self) -> Self {
        match self {
            CircleGen::Psi(x) => CircleGen::Psi(x.inverse()),
            CircleGen::Tau => CircleGen::TauInv,
            CircleGen::TauInv => CircleGen::Tau,
        }
    }
}

/// A composition of generators; the last one acts first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleHomeo {
    m: usize,
    gens: Vec<CircleGen>,
}

impl CircleHomeo {
    pub fn identity(m: usize) -> Self {
        CircleHomeo { m, gens: Vec::new() }
    }

    pub fn new(m: usize, gens: Vec<CircleGen>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition("period must be at least 2".into()));
        }
        if gens.iter().any(|g| matches!(g, CircleGen::Psi(x) if x.idx >= m)) {
            return Err(Error::Precondition("letter index out of range".into()));
        }
        Ok(CircleHomeo { m, gens })
    }

    pub fn tau(m: usize) -> Self {
        CircleHomeo { m, gens: alloc::vec![CircleGen::Tau] }
    }

    pub fn psi(m: usize, x: XLetter) -> Self {
        CircleHomeo { m, gens: alloc::vec![CircleGen::Psi(x)] }
    }

    pub fn period(&self) -> usize {
        self.m
    }

    pub fn gens(&self) -> &[CircleGen] {
        &self.gens
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &CircleHomeo) -> CircleHomeo {
        let mut gens = self.gens.clone();
        gens.extend_from_slice(&other.gens);
        CircleHomeo { m: self.m, gens }
    }

    pub fn inverse(&self) -> CircleHomeo {
        CircleHomeo { m: self.m, gens: self.gens.iter().rev().map(|g| g.inverse()).collect() }
    }

    pub fn pow(&self, k: usize) -> CircleHomeo {
        let mut gens = Vec::with_capacity(self.gens.len() * k);
        for _ in 0..k {
            gens.extend_from_slice(&self.gens);
        }
        CircleHomeo { m: self.m, gens }
    }

    pub fn apply(&self, w: &CircleWord) -> CircleWord {
        let mut w = w.clone();
        for g in self.gens.iter().rev() {
            w = match *g {
                CircleGen::Psi(x) => w.psi_apply(x),
                CircleGen::Tau => w.tau(1),
                CircleGen::TauInv => w.tau(-1),
            };
        }
        w
    }
}

/// The generators for one letter `y` of `F(a, b)`: `psi_{x_i}` where the base
/// has `y` at position `i`, `psi_{x_i^-1}` where it has `y^-1`.
pub fn rho_b_letter(b: &AltWord, y: Letter) -> CircleHomeo {
    let mut gens = Vec::new();
    for (i, z) in b.letters().iter().enumerate() {
        if *z == y {
            gens.push(CircleGen::Psi(XLetter::new(i, false)));
        } else if z.gen == y.gen && z.exp == -y.exp {
            gens.push(CircleGen::Psi(XLetter::new(i, true)));
        }
    }
    CircleHomeo { m: b.len(), gens }
}

pub fn rho_b_action(b: &AltWord, al: &Alphabet, w: &Word) -> CircleHomeo {
    let mut h = CircleHomeo::identity(b.len());
    for l in al.letters(w) {
        h = h.compose(&rho_b_letter(b, l));
    }
    h
}

/// Rotation number of a circle homeomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RotM {
    Exact(Q),
    /// The value lies in `[lo, hi]`.
    Interval { lo: Q, hi: Q },
}

impl RotM {
    pub fn exact(&self) -> Option<&Q> {
        match self {
            RotM::Exact(v) => Some(v),
            RotM::Interval { .. } => None,
        }
    }

    pub fn contains(&self, v: &Q) -> bool {
        match self {
            RotM::Exact(x) => x == v,
            RotM::Interval { lo, hi } => lo <= v && v <= hi,
        }
    }
}

const BOTTOM: usize = 0;

/// Persistent stack of `(letter, level step)` entries sharing tails.
struct Arena {
    nodes: Vec<((XLetter, i8), usize, usize)>,
}

impl Arena {
    fn entry(&self, n: usize) -> (XLetter, i8) {
        self.nodes[n].0
    }
    fn parent(&self, n: usize) -> usize {
        self.nodes[n].1
    }
    fn depth(&self, n: usize) -> usize {
        self.nodes[n].2
    }
    fn push(&mut self, top: usize, e: (XLetter, i8)) -> usize {
        let d = self.depth(top) + 1;
        self.nodes.push((e, top, d));
        self.nodes.len() - 1
    }
}

/// Iterates `h` on `(empty, 0)`.
///
/// The process is a pushdown system reading only the top letter and the level
/// mod `M`. If between two iterates the stack never drops below depth `d`, the
/// part above `d` (plus the entry at `d`) reappears on top with the same level
/// residue, and the stack has not shrunk, then the increments repeat forever
/// and the value is exact. Otherwise the interval from `n_max` iterates is
/// returned, using `|lambda_n - n rot| < M + 1/2`.
pub fn rot_m(h: &CircleHomeo, n_max: usize) -> Result<RotM> {
    let m = h.m;
    if n_max < m + 1 {
        return Err(Error::Precondition(alloc::format!("n_max must be at least M + 1 = {}", m + 1)));
    }
    let mi = m as i64;
    let sentinel = (XLetter::new(usize::MAX, false), 0i8);
    let mut arena = Arena { nodes: alloc::vec![(sentinel, BOTTOM, 0)] };
    let mut top = BOTTOM;
    let mut lam: i64 = 0;
    // per boundary: (top node, level); per application: min depth
    let mut bounds: Vec<(usize, i64)> = alloc::vec![(BOTTOM, 0)];
    let mut lows: Vec<usize> = Vec::new();
    for k2 in 1..=n_max {
        let mut low = arena.depth(top);
        for g in h.gens.iter().rev() {
            match *g {
                CircleGen::Tau => lam += mi,
                CircleGen::TauInv => lam -= mi,
                CircleGen::Psi(x) => {
                    let r = lam.rem_euclid(mi) as usize;
                    if r != x.idx && r != (x.idx + 1) % m {
                        continue;
                    }
                    if top != BOTTOM && arena.entry(top).0 == x.inverse() {
                        lam -= i64::from(arena.entry(top).1);
                        top = arena.parent(top);
                        low = low.min(arena.depth(top));
                    } else {
                        let d = level_step(m, r, x).expect("psi acts only where its letter is allowed");
                        top = arena.push(top, (x, d));
                        lam += i64::from(d);
                    }
                }
            }
        }
        lows.push(low);
        bounds.push((top, lam));
        let (t2, l2) = bounds[k2];
        let d2 = arena.depth(t2);
        let mut d = usize::MAX;
        for k1 in (0..k2).rev() {
            d = d.min(lows[k1]);
            let (t1, l1) = bounds[k1];
            let d1 = arena.depth(t1);
            if l1.rem_euclid(mi) != l2.rem_euclid(mi) || d2 < d1 {
                continue;
            }
            let (mut a, mut b) = (t1, t2);
            let mut same = true;
            for _ in 0..(d1 - d) {
                if arena.entry(a) != arena.entry(b) {
                    same = false;
                    break;
                }
                a = arena.parent(a);
                b = arena.parent(b);
            }
            if !same {
                continue;
            }
            let tops_match = if a == BOTTOM { b == BOTTOM } else { b != BOTTOM && arena.entry(a) == arena.entry(b) };
            if tops_match {
                return Ok(RotM::Exact(q(l2 - l1, (k2 - k1) as i64)));
            }
        }
    }
    let bar = qi(mi) + q(1, 2);
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for (n, &(_, l)) in bounds.iter().enumerate().skip(1) {
        let nq = qi(n as i64);
        let a = (qi(l) - &bar) / &nq;
        let b = (qi(l) + &bar) / &nq;
        if lo.as_ref().is_none_or(|x| a > *x) {
            lo = Some(a);
        }
        if hi.as_ref().is_none_or(|x| b < *x) {
            hi = Some(b);
        }
    }
    Ok(RotM::Interval { lo: lo.unwrap_or_else(Q::zero), hi: hi.unwrap_or_else(Q::zero) })
}

/// Increasing piecewise-linear map of the line commuting with `t -> t + period`.
///
/// Stored by breakpoints over one period `[x_0, x_0 + period]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLMap {
    period: Q,
    pts: Vec<(Q, Q)>,
}

impl PLMap {
    pub fn new(period: Q, pts: Vec<(Q, Q)>) -> Result<Self> {
        let bad = |s: &str| Err(Error::Precondition(alloc::format!("invalid PL map: {s}")));
        if pts.len() < 2 || period <= Q::zero() {
            return bad("need two breakpoints and a positive period");
        }
        if pts.windows(2).any(|p| p[1].0 <= p[0].0 || p[1].1 <= p[0].1) {
            return bad("not strictly increasing");
        }
        let (f, l) = (&pts[0], &pts[pts.len() - 1]);
        if l.0.clone() - &f.0 != period || l.1.clone() - &f.1 != period {
            return bad("breakpoints do not span one period");
        }
        Ok(PLMap { period, pts })
    }

    pub fn breakpoints(&self) -> &[(Q, Q)] {
        &self.pts
    }

    pub fn apply(&self, t: &Q) -> Q {
        let x0 = &self.pts[0].0;
        let k = ((t - x0) / &self.period).floor();
        let s = t - &k * &self.period;
        let j = self.pts.windows(2).position(|p| p[0].0 <= s && s <= p[1].0).expect("point inside one period");
        let ((xa, ya), (xb, yb)) = (&self.pts[j], &self.pts[j + 1]);
        ya + (yb - ya) * (&s - xa) / (xb - xa) + k * &self.period
    }

    pub fn inverse(&self) -> PLMap {
        PLMap { period: self.period.clone(), pts: self.pts.iter().map(|(x, y)| (y.clone(), x.clone())).collect() }
    }
}

/// Nearest integer, rounding halves up.
pub fn big_lambda(t: &Q) -> i64 {
    (t + q(1, 2)).floor().to_integer().to_i64().expect("level fits in i64")
}

/// The maps `Psi_{x_i}` for one period `M`, and the embedding of circle words into the line.
#[derive(Clone, Debug)]
pub struct Realization {
    m: usize,
    maps: Vec<PLMap>,
    inverses: Vec<PLMap>,
}

/// `Psi_{x_i}`: identity off the intervals `(j - 1/2, j + 3/2)`, `j = i mod M`.
pub fn psi_pl(m: usize, i: usize) -> PLMap {
    let c = qi(i as i64);
    let mut pts = alloc::vec![
        (&c - q(1, 2), &c - q(1, 2)),
        (&c - q(1, 4), c.clone()),
        (c.clone(), &c + q(9, 8)),
        (&c + Q::one(), &c + q(11, 8)),
        (&c + q(3, 2), &c + q(3, 2)),
    ];
    if m > 2 {
        let e = &c - q(1, 2) + qi(m as i64);
        pts.push((e.clone(), e));
    }
    PLMap::new(qi(m as i64), pts).expect("concrete map is increasing")
}

/// Checks that forward iterates push `[i, i+1]` into `(i+1, i+3/2)`, backward
/// iterates into `(i-1/2, i)`, and that the map fixes the rest of the period.
pub fn confinement_holds(i: usize, f: &PLMap) -> bool {
    let c = qi(i as i64);
    let g = f.inverse();
    let lo = &c - q(1, 2);
    let hi = &c + q(3, 2);
    let fwd = f.apply(&c) > &c + Q::one() && f.apply(&(&c + Q::one())) > &c + Q::one() && f.apply(&hi) == hi;
    let fwd = fwd && f.apply(&(&c + Q::one())) < hi;
    let bwd = g.apply(&(&c + Q::one())) < c && g.apply(&c) < c && g.apply(&c) > lo && g.apply(&lo) == lo;
    // identity on [i + 3/2, i - 1/2 + M]
    let rest = f.breakpoints().iter().all(|(x, y)| x == y || (*x > lo && *x < hi));
    fwd && bwd && rest
}

pub fn theta_realize(m: usize) -> Result<Realization> {
    if m < 2 {
        return Err(Error::Precondition("period must be at least 2".into()));
    }
    let maps: Vec<PLMap> = (0..m).map(|i| psi_pl(m, i)).collect();
    for (i, f) in maps.iter().enumerate() {
        if !confinement_holds(i, f) {
            return Err(Error::OracleViolation(alloc::format!("Psi_x{i} fails orbit confinement")));
        }
    }
    let inverses = maps.iter().map(PLMap::inverse).collect();
    Ok(Realization { m, maps, inverses })
}

impl Realization {
    pub fn period(&self) -> usize {
        self.m
    }

    pub fn psi(&self, x: XLetter) -> &PLMap {
        if x.inv {
            &self.inverses[x.idx]
        } else {
            &self.maps[x.idx]
        }
    }

    /// `n M + Psi_{y_1}(... Psi_{y_k}(0))`.
    pub fn theta(&self, w: &CircleWord) -> Q {
        assert_eq!(w.period(), self.m);
        let mut t = Q::zero();
        for (y, _) in &w.stack {
            t = self.psi(*y).apply(&t);
        }
        t + qi(w.shift() * self.m as i64)
    }

    pub fn apply_gen(&self, g: CircleGen, t: &Q) -> Q {
        match g {
            CircleGen::Psi(x) => self.psi(x).apply(t),
            CircleGen::Tau => t + qi(self.m as i64),
            CircleGen::TauInv => t - qi(self.m as i64),
        }
    }
}
