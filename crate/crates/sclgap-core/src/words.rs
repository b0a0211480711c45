//! Words in free products of cyclic groups.
//!
//! A [`Word`] is a list of syllables `(generator, exponent)`. Exponents of
//! finite-order generators live in `(0, order)`. For subword counting and
//! rotations, a syllable `x^k` of an infinite-order generator splits into `|k|`
//! unit letters while a finite-order syllable `y^k` is a single letter.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::{is_integer, parse_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn is_finite(self) -> bool {
        matches!(self, Order::Finite(_))
    }
}

/// A single letter. Ordered by generator index, then exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub exp: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    syl: Vec<(usize, i64)>,
}

impl Word {
    pub fn empty() -> Self {
        Word { syl: Vec::new() }
    }

    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.syl
    }

    pub fn is_empty(&self) -> bool {
        self.syl.is_empty()
    }

    pub fn syllable_len(&self) -> usize {
        self.syl.len()
    }

    /// Builds a word from syllables that are already reduced.
    pub(crate) fn from_reduced(syl: Vec<(usize, i64)>) -> Self {
        Word { syl }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    terms: Vec<(Q, Word)>,
}

impl Chain {
    pub fn new(terms: Vec<(Q, Word)>) -> Result<Self> {
        for (c, w) in &terms {
            if c.is_zero() {
                return Err(Error::Precondition("chain coefficient is zero".into()));
            }
            if w.is_empty() {
                return Err(Error::Precondition("chain contains the empty word".into()));
            }
        }
        Ok(Chain { terms })
    }

    pub fn zero() -> Self {
        Chain { terms: Vec::new() }
    }

    pub fn single(w: Word) -> Result<Self> {
        Chain::new(vec![(Q::from_integer(1.into()), w)])
    }

    pub fn terms(&self) -> &[(Q, Word)] {
        &self.terms
    }

    pub fn is_integral(&self) -> bool {
        self.terms.iter().all(|(c, _)| is_integer(c))
    }
}

/// Exponent sums of a chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abelianization {
    /// One entry per infinite-order generator, in alphabet order.
    pub free: Vec<Q>,
    /// One residue per finite-order generator; `None` if some coefficient is
    /// not an integer.
    pub torsion: Option<Vec<u64>>,
}

impl Abelianization {
    pub fn is_rationally_zero(&self) -> bool {
        self.free.iter().all(|x| x.is_zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    orders: Vec<Order>,
}

fn valid_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

impl Alphabet {
    pub fn new(gens: Vec<(String, Order)>) -> Result<Self> {
        let mut names = Vec::new();
        let mut orders = Vec::new();
        for (n, o) in gens {
            if !valid_name(&n) {
                return Err(Error::InvalidAlphabet(alloc::format!("bad generator name `{n}`")));
            }
            if names.contains(&n) {
                return Err(Error::InvalidAlphabet(alloc::format!("duplicate generator `{n}`")));
            }
            if let Order::Finite(k) = o {
                if k < 2 {
                    return Err(Error::InvalidAlphabet(alloc::format!("order of `{n}` must be at least 2")));
                }
            }
            names.push(n);
            orders.push(o);
        }
        Ok(Alphabet { names, orders })
    }

    /// Free group on the given names.
    pub fn free(names: &[&str]) -> Self {
        Alphabet::new(names.iter().map(|n| (n.to_string(), Order::Infinite)).collect())
            .expect("valid free alphabet")
    }

    /// `"a b"` or `"a/2 b/3"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut gens = Vec::new();
        for tok in spec.split_whitespace() {
            match tok.split_once('/') {
                Some((n, o)) => {
                    let o: u32 = o
                        .parse()
                        .map_err(|_| Error::Parse(alloc::format!("bad order in `{tok}`")))?;
                    gens.push((n.to_string(), Order::Finite(o)));
                }
                None => gens.push((tok.to_string(), Order::Infinite)),
            }
        }
        if gens.is_empty() {
            return Err(Error::InvalidAlphabet("no generators".into()));
        }
        Alphabet::new(gens)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn order(&self, i: usize) -> Order {
        self.orders[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    pub fn is_torsion_free(&self) -> bool {
        self.orders.iter().all(|o| !o.is_finite())
    }

    /// Exponent normalized for the generator; `0` means trivial.
    pub fn normalize_exp(&self, gen: usize, e: i64) -> i64 {
        match self.orders[gen] {
            Order::Infinite => e,
            Order::Finite(o) => e.rem_euclid(o as i64),
        }
    }

    /// Free reduction with exponent arithmetic modulo finite orders.
    pub fn reduce(&self, raw: &[(usize, i64)]) -> Word {
        let mut st: Vec<(usize, i64)> = Vec::with_capacity(raw.len());
        for &(g, e) in raw {
            assert!(g < self.len(), "generator index out of range");
            let e = self.normalize_exp(g, e);
            if e == 0 {
                continue;
            }
            match st.last_mut() {
                Some(top) if top.0 == g => {
                    let s = self.normalize_exp(g, top.1 + e);
                    if s == 0 {
                        st.pop();
                    } else {
                        top.1 = s;
                    }
                }
                _ => st.push((g, e)),
            }
        }
        Word { syl: st }
    }

    pub fn reduce_named(&self, raw: &[(&str, i64)]) -> Result<Word> {
        let mut v = Vec::with_capacity(raw.len());
        for &(n, e) in raw {
            v.push((self.index_of(n)?, e));
        }
        Ok(self.reduce(&v))
    }

    pub fn mul(&self, a: &Word, b: &Word) -> Word {
        let mut v = a.syl.clone();
        v.extend_from_slice(&b.syl);
        self.reduce(&v)
    }

    pub fn product(&self, ws: &[&Word]) -> Word {
        let v: Vec<(usize, i64)> = ws.iter().flat_map(|w| w.syl.iter().copied()).collect();
        self.reduce(&v)
    }

    pub fn inverse(&self, w: &Word) -> Word {
        Word {
            syl: w.syl.iter().rev().map(|&(g, e)| (g, self.normalize_exp(g, -e))).collect(),
        }
    }

    pub fn pow(&self, w: &Word, k: i64) -> Word {
        let base = if k < 0 { self.inverse(w) } else { w.clone() };
        let mut v = Vec::with_capacity(base.syl.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.syl);
        }
        self.reduce(&v)
    }

    pub fn commutator(&self, u: &Word, v: &Word) -> Word {
        let ui = self.inverse(u);
        let vi = self.inverse(v);
        self.product(&[u, v, &ui, &vi])
    }

    pub fn letter_inverse(&self, l: Letter) -> Letter {
        Letter { gen: l.gen, exp: self.normalize_exp(l.gen, -l.exp) }
    }

    pub fn letters(&self, w: &Word) -> Vec<Letter> {
        let mut out = Vec::new();
        for &(g, e) in &w.syl {
            match self.orders[g] {
                Order::Infinite => {
                    let s = e.signum();
                    for _ in 0..e.unsigned_abs() {
                        out.push(Letter { gen: g, exp: s });
                    }
                }
                Order::Finite(_) => out.push(Letter { gen: g, exp: e }),
            }
        }
        out
    }

    pub fn letter_len(&self, w: &Word) -> usize {
        w.syl
            .iter()
            .map(|&(g, e)| match self.orders[g] {
                Order::Infinite => e.unsigned_abs() as usize,
                Order::Finite(_) => 1,
            })
            .sum()
    }

    pub fn from_letters(&self, ls: &[Letter]) -> Word {
        let v: Vec<(usize, i64)> = ls.iter().map(|l| (l.gen, l.exp)).collect();
        self.reduce(&v)
    }

    /// All letters of the alphabet, in letter order.
    pub fn all_letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for (g, o) in self.orders.iter().enumerate() {
            match o {
                Order::Infinite => {
                    out.push(Letter { gen: g, exp: -1 });
                    out.push(Letter { gen: g, exp: 1 });
                }
                Order::Finite(o) => {
                    for e in 1..*o as i64 {
                        out.push(Letter { gen: g, exp: e });
                    }
                }
            }
        }
        out
    }

    /// True if the last and first syllables neither cancel nor merge.
    pub fn is_cyclically_reduced(&self, w: &Word) -> bool {
        w.syl.len() <= 1 || w.syl[0].0 != w.syl[w.syl.len() - 1].0
    }

    /// Returns `(conjugator, core)` with `w = conjugator * core * conjugator^-1`.
    pub fn cyclic_reduce(&self, w: &Word) -> (Word, Word) {
        let mut conj: Vec<(usize, i64)> = Vec::new();
        let mut core = w.syl.clone();
        while core.len() >= 2 && core[0].0 == core[core.len() - 1].0 {
            let (g, p) = core[0];
            let (_, qq) = core[core.len() - 1];
            conj.push((g, -qq));
            core.pop();
            let s = self.normalize_exp(g, p + qq);
            if s == 0 {
                core.remove(0);
            } else {
                core[0].1 = s;
            }
        }
        (self.reduce(&conj), Word { syl: core })
    }

    /// Number of occurrences of the letters of `g` inside the letters of `h`.
    pub fn count_subword(&self, g: &Word, h: &Word) -> usize {
        let pat = self.letters(g);
        let text = self.letters(h);
        count_occurrences(&pat, &text)
    }

    /// True if `w = v u v` for some nonempty `v`.
    pub fn is_self_overlapping(&self, w: &Word) -> bool {
        let ls = self.letters(w);
        let f = failure_function(&ls);
        // the shortest border is at most half the length
        !ls.is_empty() && f[ls.len() - 1] > 0
    }

    /// `(root, power)` with `w = root^power` and `root` not a proper power.
    pub fn primitive_root(&self, w: &Word) -> (Word, usize) {
        let ls = self.letters(w);
        let n = ls.len();
        if n == 0 {
            return (Word::empty(), 1);
        }
        for p in 1..=n {
            if n % p == 0 && (p..n).all(|i| ls[i] == ls[i - p]) {
                return (self.from_letters(&ls[..p]), n / p);
            }
        }
        unreachable!()
    }

    /// Letter rotation of `w` starting at letter `k`.
    pub fn rotate(&self, w: &Word, k: usize) -> Word {
        let ls = self.letters(w);
        if ls.is_empty() {
            return Word::empty();
        }
        let k = k % ls.len();
        let mut r = ls[k..].to_vec();
        r.extend_from_slice(&ls[..k]);
        self.from_letters(&r)
    }

    /// Index of the lexicographically least letter rotation.
    fn least_rotation(ls: &[Letter]) -> usize {
        let n = ls.len();
        (0..n)
            .min_by(|&i, &j| {
                let a = ls[i..].iter().chain(&ls[..i]);
                let b = ls[j..].iter().chain(&ls[..j]);
                a.cmp(b)
            })
            .unwrap_or(0)
    }

    /// Lexicographically least rotation; never self-overlapping.
    pub fn minimal_cyclic_conjugate(&self, w: &Word) -> Result<Word> {
        if w.is_empty() {
            return Err(Error::Precondition("empty word".into()));
        }
        if !self.is_cyclically_reduced(w) {
            return Err(Error::Precondition("word is not cyclically reduced".into()));
        }
        let (_, k) = self.primitive_root(w);
        if k > 1 {
            return Err(Error::Precondition(alloc::format!("word is a proper power ({k})")));
        }
        let ls = self.letters(w);
        Ok(self.rotate(w, Self::least_rotation(&ls)))
    }

    /// Canonical representative of the conjugacy class of a cyclically reduced word.
    pub fn least_rotation_word(&self, w: &Word) -> Word {
        let ls = self.letters(w);
        self.rotate(w, Self::least_rotation(&ls))
    }

    /// True if two cyclically reduced words are letter rotations of each other.
    pub fn are_rotations(&self, u: &Word, v: &Word) -> bool {
        self.letter_len(u) == self.letter_len(v) && self.least_rotation_word(u) == self.least_rotation_word(v)
    }

    /// True if `w` is conjugate to its own inverse.
    pub fn is_conjugate_to_inverse(&self, w: &Word) -> bool {
        let (_, c) = self.cyclic_reduce(w);
        self.are_rotations(&c, &self.inverse(&c))
    }

    pub fn abelianize(&self, c: &Chain) -> Abelianization {
        let mut free = Vec::new();
        let mut tors = Vec::new();
        let integral = c.is_integral();
        for (g, o) in self.orders.iter().enumerate() {
            let mut s = Q::zero();
            for (coef, w) in &c.terms {
                let e: i64 = w.syl.iter().filter(|x| x.0 == g).map(|x| x.1).sum();
                s += coef * Q::from_integer(BigInt::from(e));
            }
            match o {
                Order::Infinite => free.push(s),
                Order::Finite(o) => {
                    if integral {
                        let r = s.numer().mod_floor(&BigInt::from(*o));
                        tors.push(r.to_u64().unwrap_or(0));
                    }
                }
            }
        }
        Abelianization { free, torsion: if integral { Some(tors) } else { None } }
    }

    /// Tokens `name`, `name^k`, `name^-k`; `1` or an empty string is the identity.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let mut raw = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (n, e) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e.parse().map_err(|_| Error::Parse(alloc::format!("bad exponent in `{tok}`")))?;
                    (n, e)
                }
                None => (tok, 1),
            };
            raw.push((self.index_of(n)?, e));
        }
        Ok(self.reduce(&raw))
    }

    /// Terms separated by `+`, each `coef*word` or just `word`.
    pub fn parse_chain(&self, s: &str) -> Result<Chain> {
        let mut terms = Vec::new();
        for t in s.split('+') {
            let t = t.trim();
            if t.is_empty() {
                continue;
            }
            let (c, w) = match t.split_once('*') {
                Some((c, w)) => (parse_q(c)?, self.parse_word(w)?),
                None => (Q::from_integer(1.into()), self.parse_word(t)?),
            };
            terms.push((c, w));
        }
        Chain::new(terms)
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = w
            .syl
            .iter()
            .map(|&(g, e)| if e == 1 { self.names[g].clone() } else { alloc::format!("{}^{}", self.names[g], e) })
            .collect();
        parts.join(" ")
    }

    pub fn format_chain(&self, c: &Chain) -> String {
        let parts: Vec<String> = c.terms.iter().map(|(q, w)| alloc::format!("{}*{}", q, self.format_word(w))).collect();
        parts.join(" + ")
    }

    pub fn display<'a>(&'a self, w: &'a Word) -> WordDisplay<'a> {
        WordDisplay { alph: self, word: w }
    }

    pub fn random_letter<R: Rng + ?Sized>(&self, rng: &mut R) -> Letter {
        let all = self.all_letters();
        all[rng.gen_range(0..all.len())]
    }

    /// Uniformly sized random reduced word with at most `max_len` letters.
    pub fn random_word<R: Rng + ?Sized>(&self, rng: &mut R, max_len: usize) -> Word {
        let n = rng.gen_range(0..=max_len);
        self.random_word_exact(rng, n)
    }

    /// Random reduced word with exactly `n` letters.
    pub fn random_word_exact<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Word {
        let all = self.all_letters();
        let mut ls: Vec<Letter> = Vec::with_capacity(n);
        while ls.len() < n {
            let l = all[rng.gen_range(0..all.len())];
            if let Some(&p) = ls.last() {
                if p.gen == l.gen && (self.orders[l.gen].is_finite() || p.exp != l.exp) {
                    continue;
                }
            }
            ls.push(l);
        }
        self.from_letters(&ls)
    }
}

pub struct WordDisplay<'a> {
    alph: &'a Alphabet,
    word: &'a Word,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.alph.format_word(self.word))
    }
}

fn failure_function<T: PartialEq>(p: &[T]) -> Vec<usize> {
    let mut f = vec![0; p.len()];
    let mut k = 0;
    for i in 1..p.len() {
        while k > 0 && p[i] != p[k] {
            k = f[k - 1];
        }
        if p[i] == p[k] {
            k += 1;
        }
        f[i] = k;
    }
    f
}

/// Knuth-Morris-Pratt occurrence count, overlaps included.
pub fn count_occurrences<T: PartialEq>(pat: &[T], text: &[T]) -> usize {
    if pat.is_empty() || pat.len() > text.len() {
        return 0;
    }
    let f = failure_function(pat);
    let (mut k, mut n) = (0, 0);
    for x in text {
        while k > 0 && *x != pat[k] {
            k = f[k - 1];
        }
        if *x == pat[k] {
            k += 1;
        }
        if k == pat.len() {
            n += 1;
            k = f[k - 1];
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Alphabet {
        Alphabet::free(&["a", "b"])
    }

    fn mixed() -> Alphabet {
        Alphabet::parse("a/2 b/3 c").unwrap()
    }

    // naive letter-stack reduction: expand into unit letters for infinite gens
    fn naive_reduce(al: &Alphabet, raw: &[(usize, i64)]) -> Vec<(usize, i64)> {
        let mut st: Vec<(usize, i64)> = Vec::new();
        let mut push = |g: usize, e: i64| {
            if let Some(&(h, f)) = st.last() {
                if h == g {
                    st.pop();
                    let s = f + e;
                    let s = match al.order(g) {
                        Order::Finite(o) => s.rem_euclid(o as i64),
                        Order::Infinite => s,
                    };
                    if s != 0 {
                        st.push((g, s));
                    }
                    return;
                }
            }
            st.push((g, e));
        };
        for &(g, e) in raw {
            match al.order(g) {
                Order::Infinite => {
                    for _ in 0..e.unsigned_abs() {
                        push(g, e.signum());
                    }
                }
                Order::Finite(o) => {
                    let e = e.rem_euclid(o as i64);
                    if e != 0 {
                        push(g, e);
                    }
                }
            }
        }
        st
    }

    fn naive_count(p: &[Letter], t: &[Letter]) -> usize {
        if p.is_empty() || p.len() > t.len() {
            return 0;
        }
        (0..=t.len() - p.len()).filter(|&i| t[i..i + p.len()] == *p).count()
    }

    #[test]
    fn reduce_examples() {
        let al = f2();
        assert!(al.parse_word("a a^-1").unwrap().is_empty());
        let z3 = Alphabet::parse("y/3").unwrap();
        assert!(z3.parse_word("y y y").unwrap().is_empty());
        let w = al.parse_word("a b b a^-1 a b").unwrap();
        assert_eq!(al.format_word(&w), "a b^3");
        let naive = naive_reduce(&al, &[(0, 1), (1, 1), (1, 1), (0, -1), (0, 1), (1, 1)]);
        assert_eq!(al.letters(&Word { syl: naive }), al.letters(&w));
        assert!(matches!(al.parse_word("a c"), Err(Error::UnknownGenerator(_))));
    }

    #[test]
    fn cyclic_reduce_examples() {
        let al = f2();
        let (c, k) = al.cyclic_reduce(&al.parse_word("a b a^-1").unwrap());
        assert_eq!((al.format_word(&c), al.format_word(&k)), ("a".into(), "b".into()));
        let w = al.parse_word("a b^2 a^-1 b^-1").unwrap();
        assert_eq!(al.cyclic_reduce(&w), (Word::empty(), w.clone()));
        let w = al.parse_word("a^-1 b a b a").unwrap();
        let (c, k) = al.cyclic_reduce(&w);
        assert_eq!(al.format_word(&c), "a^-1 b^-1");
        assert_eq!(al.format_word(&k), "b^2 a");
        assert_eq!(al.product(&[&c, &k, &al.inverse(&c)]), w);
    }

    #[test]
    fn subword_examples() {
        let al = f2();
        let ab = al.parse_word("a b").unwrap();
        assert_eq!(al.count_subword(&ab, &al.parse_word("a b a b").unwrap()), 2);
        assert_eq!(al.count_subword(&ab, &ab), 1);
        assert_eq!(al.count_subword(&ab, &Word::empty()), 0);
        assert!(al.is_self_overlapping(&al.parse_word("a b a").unwrap()));
        assert!(!al.is_self_overlapping(&ab));
        assert!(al.is_self_overlapping(&al.parse_word("a b a b").unwrap()));
        // finite letters compared with their exact exponent
        let m = mixed();
        let b1 = m.parse_word("a b").unwrap();
        assert_eq!(m.count_subword(&b1, &m.parse_word("a b a b^2").unwrap()), 1);
    }

    #[test]
    fn root_and_rotation_examples() {
        let al = f2();
        let (r, k) = al.primitive_root(&al.parse_word("a b a b").unwrap());
        assert_eq!((al.format_word(&r), k), ("a b".into(), 2));
        let w = al.parse_word("a b^2").unwrap();
        assert_eq!(al.primitive_root(&w), (w.clone(), 1));
        let m = al.minimal_cyclic_conjugate(&al.parse_word("b a").unwrap()).unwrap();
        assert_eq!(al.format_word(&m), "a b");
        assert!(al.minimal_cyclic_conjugate(&al.parse_word("a b a b").unwrap()).is_err());
    }

    #[test]
    fn abelianize_examples() {
        let al = f2();
        let c = al.parse_chain("a b a^-1 b^-1").unwrap();
        assert!(al.abelianize(&c).is_rationally_zero());
        let c = al.parse_chain("1*a + -1*a").unwrap();
        assert!(al.abelianize(&c).is_rationally_zero());
        let z = Alphabet::parse("a/2 b/3").unwrap();
        let ab = z.abelianize(&z.parse_chain("1*a b").unwrap());
        assert!(ab.free.is_empty());
        assert_eq!(ab.torsion, Some(vec![1, 1]));
        assert_eq!(al.abelianize(&al.parse_chain("1/2*a").unwrap()).free[0], crate::rational::q(1, 2));
    }

    #[test]
    fn alphabet_validation() {
        assert!(Alphabet::parse("a a").is_err());
        assert!(Alphabet::parse("a/1").is_err());
        assert!(Alphabet::parse("").is_err());
        assert!(Alphabet::parse("1x").is_err());
    }

    #[test]
    fn inverse_cancels_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for al in [f2(), mixed()] {
            for _ in 0..1000 {
                let w = al.random_word(&mut rng, 40);
                assert!(al.mul(&w, &al.inverse(&w)).is_empty());
            }
        }
    }

    #[test]
    fn counting_matches_naive_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for al in [f2(), mixed()] {
            for _ in 0..1000 {
                let g = al.random_word(&mut rng, 4);
                let h = al.random_word(&mut rng, 30);
                let n = naive_count(&al.letters(&g), &al.letters(&h));
                assert_eq!(al.count_subword(&g, &h), n);
            }
        }
    }

    #[test]
    fn minimal_conjugate_is_rotation_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let al = mixed();
        let mut seen = 0;
        while seen < 300 {
            let w = al.random_word(&mut rng, 12);
            let (_, c) = al.cyclic_reduce(&w);
            if c.is_empty() || al.primitive_root(&c).1 > 1 {
                continue;
            }
            seen += 1;
            let m = al.minimal_cyclic_conjugate(&c).unwrap();
            let n = al.letter_len(&c);
            assert!((0..n).any(|k| al.rotate(&c, k) == m));
            assert!(!al.is_self_overlapping(&m));
            assert!(al.is_cyclically_reduced(&m));
        }
    }

    fn raw_strategy() -> impl Strategy<Value = Vec<(usize, i64)>> {
        prop::collection::vec((0usize..3, -3i64..=3), 0..30)
    }

    proptest! {
        #[test]
        fn reduce_idempotent_and_matches_naive(raw in raw_strategy()) {
            let al = mixed();
            let w = al.reduce(&raw);
            prop_assert_eq!(al.reduce(w.syllables()), w.clone());
            let naive = naive_reduce(&al, &raw);
            prop_assert_eq!(al.letters(&w), al.letters(&Word { syl: naive }));
        }

        #[test]
        fn cyclic_reduce_identity(raw in raw_strategy()) {
            let al = mixed();
            let w = al.reduce(&raw);
            let (c, k) = al.cyclic_reduce(&w);
            prop_assert!(al.is_cyclically_reduced(&k));
            prop_assert_eq!(al.product(&[&c, &k, &al.inverse(&c)]), w);
        }

        #[test]
        fn root_of_cube(raw in raw_strategy()) {
            let al = mixed();
            let (_, w) = al.cyclic_reduce(&al.reduce(&raw));
            prop_assume!(w.syllable_len() >= 2 || (w.syllable_len() == 1 && w.syllables()[0].0 == 2));
            let (r, k) = al.primitive_root(&w);
            prop_assert_eq!(al.pow(&r, k as i64), w.clone());
            let (r3, k3) = al.primitive_root(&al.pow(&w, 3));
            prop_assert_eq!(r3, r);
            prop_assert_eq!(k3, 3 * k);
        }

        #[test]
        fn proper_powers_overlap(raw in raw_strategy(), k in 2i64..4) {
            let al = mixed();
            let (_, w) = al.cyclic_reduce(&al.reduce(&raw));
            prop_assume!(w.syllable_len() >= 2 || (w.syllable_len() == 1 && w.syllables()[0].0 == 2));
            prop_assert!(al.is_self_overlapping(&al.pow(&w, k)));
        }
    }
}
