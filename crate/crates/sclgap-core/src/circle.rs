//! Circle quasimorphisms on the free group `F(a, b)`.
//!
//! A base word `b = x_0 ... x_{M-1}` (alternating, even length) turns every
//! letter into a non-decreasing map of the integers commuting with `+M`.
//! Composing these along a word and taking the rotation number gives the
//! homogeneous quasimorphism `rot_b`, of defect at most `M`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::qm::{Quasimorphism, SclCertificate};
use crate::rational::{q, qi, Q};
use crate::words::{Alphabet, Letter, Word};

pub const GEN_A: usize = 0;
pub const GEN_B: usize = 1;

/// The alphabet `a b`.
pub fn f2() -> Alphabet {
    Alphabet::free(&["a", "b"])
}

/// A reduced word whose letters alternate between `a^{+-1}` and `b^{+-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AltWord {
    letters: Vec<Letter>,
}

impl AltWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        for l in &letters {
            if l.exp.abs() != 1 {
                return Err(Error::Precondition("alternating words use unit letters".into()));
            }
        }
        if letters.windows(2).any(|p| p[0].gen == p[1].gen) {
            return Err(Error::Precondition("letters do not alternate".into()));
        }
        Ok(AltWord { letters })
    }

    pub fn from_word(w: &Word) -> Result<Self> {
        let ls: Vec<Letter> = w.syllables().iter().map(|&(g, e)| Letter { gen: g, exp: e }).collect();
        AltWord::new(ls)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let al = f2();
        let w = al.parse_word(s)?;
        if al.letter_len(&w) != w.syllable_len() {
            return Err(Error::Precondition(alloc::format!("`{s}` is not alternating")));
        }
        AltWord::from_word(&w)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn reverse(&self) -> AltWord {
        AltWord { letters: self.letters.iter().rev().copied().collect() }
    }

    pub fn inverse(&self) -> AltWord {
        AltWord { letters: self.letters.iter().rev().map(|l| Letter { gen: l.gen, exp: -l.exp }).collect() }
    }

    pub fn to_word(&self) -> Word {
        Word::from_reduced(self.letters.iter().map(|l| (l.gen, l.exp)).collect())
    }

    pub fn format(&self) -> String {
        f2().format_word(&self.to_word())
    }
}

/// Sign collapse `y_1^{n_1} ... y_k^{n_k} -> y_1^{sign n_1} ... y_k^{sign n_k}`.
pub fn psi_letter_map(w: &Word) -> AltWord {
    AltWord {
        letters: w.syllables().iter().map(|&(g, e)| Letter { gen: g, exp: e.signum() }).collect(),
    }
}

pub fn reverse(x: &AltWord) -> AltWord {
    x.reverse()
}

/// Non-decreasing `f: Z -> Z` with `f(i + M) = f(i) + M`, stored on `0..M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonePeriodicMap {
    period: usize,
    vals: Vec<i64>,
}

impl MonotonePeriodicMap {
    pub fn identity(period: usize) -> Self {
        MonotonePeriodicMap { period, vals: (0..period as i64).collect() }
    }

    pub fn translation(period: usize, t: i64) -> Self {
        MonotonePeriodicMap { period, vals: (0..period as i64).map(|i| i + t).collect() }
    }

    pub fn from_values(vals: Vec<i64>) -> Result<Self> {
        let m = MonotonePeriodicMap { period: vals.len(), vals };
        if m.period == 0 || !m.is_valid() {
            return Err(Error::Precondition("not a monotone periodic map".into()));
        }
        Ok(m)
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn values(&self) -> &[i64] {
        &self.vals
    }

    pub fn apply(&self, x: i64) -> i64 {
        let m = self.period as i64;
        let r = x.rem_euclid(m);
        self.vals[r as usize] + (x - r)
    }

    /// `self` after `g`.
    pub fn compose(&self, g: &MonotonePeriodicMap) -> MonotonePeriodicMap {
        MonotonePeriodicMap { period: self.period, vals: g.vals.iter().map(|&v| self.apply(v)).collect() }
    }

    pub fn is_valid(&self) -> bool {
        let m = self.period as i64;
        self.vals.windows(2).all(|p| p[0] <= p[1]) && self.vals[self.period - 1] <= self.vals[0] + m
    }
}

/// The letter map: `i -> i+1` if `y = x_i`, `i -> i-1` if `y = x_{i-1}^-1`, else `i`.
pub fn elementary_map(b: &AltWord, y: Letter) -> MonotonePeriodicMap {
    let m = b.len();
    let x = b.letters();
    let vals = (0..m)
        .map(|i| {
            let up = x[i] == y;
            let prev = x[(i + m - 1) % m];
            let down = prev.gen == y.gen && prev.exp == -y.exp;
            assert!(!(up && down), "base is not cyclically reduced");
            i as i64 + i64::from(up) - i64::from(down)
        })
        .collect();
    MonotonePeriodicMap { period: m, vals }
}

/// `rho(y_1) o ... o rho(y_m)`; the last letter acts first.
pub fn rho_bar(b: &AltWord, al: &Alphabet, w: &Word) -> MonotonePeriodicMap {
    let mut acc = MonotonePeriodicMap::identity(b.len());
    for l in al.letters(w) {
        acc = acc.compose(&elementary_map(b, l));
    }
    acc
}

/// Exact `lim f^n(0) / n`; the increment depends only on the residue mod `M`.
pub fn rotation_number(f: &MonotonePeriodicMap) -> Q {
    let m = f.period;
    let mut seen = alloc::vec![usize::MAX; m];
    let mut xs: Vec<i64> = Vec::with_capacity(m + 1);
    let mut x = 0i64;
    loop {
        let r = x.rem_euclid(m as i64) as usize;
        if seen[r] != usize::MAX {
            let k1 = seen[r];
            let k2 = xs.len();
            return q(x - xs[k1], (k2 - k1) as i64);
        }
        seen[r] = xs.len();
        xs.push(x);
        x = f.apply(x);
    }
}

/// The circle quasimorphism with base `b`.
#[derive(Clone, Debug)]
pub struct CircleQM {
    base: AltWord,
    alphabet: Alphabet,
}

fn check_base(base: &AltWord) -> Result<()> {
    if base.is_empty() || base.len() % 2 != 0 {
        return Err(Error::Precondition("base must have positive even length".into()));
    }
    Ok(())
}

impl CircleQM {
    pub fn new(base: AltWord) -> Result<Self> {
        check_base(&base)?;
        Ok(CircleQM { base, alphabet: f2() })
    }

    /// Rejects alphabets with more than two generators, where `rot_b` fails to
    /// have defect `|b|`.
    pub fn with_alphabet(alphabet: &Alphabet, base: AltWord) -> Result<Self> {
        if alphabet.len() != 2 || !alphabet.is_torsion_free() {
            return Err(Error::Precondition("circle quasimorphisms need a free group of rank two".into()));
        }
        check_base(&base)?;
        Ok(CircleQM { base, alphabet: alphabet.clone() })
    }

    pub fn base(&self) -> &AltWord {
        &self.base
    }

    pub fn rot_bar(&self, w: &Word) -> Q {
        rot_bar_any_rank(&self.base, &self.alphabet, w)
    }
}

impl Quasimorphism for CircleQM {
    fn id(&self) -> String {
        alloc::format!("rot({})", self.base.format())
    }
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
    fn eval(&self, w: &Word) -> Q {
        self.rot_bar(w)
    }
    fn defect_bound(&self) -> Q {
        qi(self.base.len() as i64)
    }
    fn is_homogeneous(&self) -> bool {
        true
    }
}

pub fn rot_bar(b: &AltWord, w: &Word) -> Result<Q> {
    check_base(b)?;
    Ok(rot_bar_any_rank(b, &f2(), w))
}

/// Rotation number of the cyclic core over any free alphabet; letters outside
/// the base act trivially. Only rank two is a quasimorphism of defect `|b|`.
pub fn rot_bar_any_rank(b: &AltWord, al: &Alphabet, w: &Word) -> Q {
    let (_, core) = al.cyclic_reduce(w);
    rotation_number(&rho_bar(b, al, &core))
}

/// Rotates a cyclically reduced word of `F(a, b)` to start with an `a`-syllable.
fn rotate_to_a(w: &Word) -> Word {
    let s = w.syllables();
    let k = s.iter().position(|x| x.0 == GEN_A).unwrap_or(0);
    let mut v = s[k..].to_vec();
    v.extend_from_slice(&s[..k]);
    Word::from_reduced(v)
}

/// Base, value and defect of the extremal circle quasimorphism for `w`.
pub fn extremal_certificate(w: &Word) -> Result<SclCertificate> {
    let al = f2();
    if w.is_empty() {
        return Err(Error::Precondition("word is trivial".into()));
    }
    if !al.abelianize(&crate::words::Chain::single(w.clone())?).is_rationally_zero() {
        return Err(Error::Precondition("word is not in the commutator subgroup".into()));
    }
    let (_, core) = al.cyclic_reduce(w);
    let (root, k) = al.primitive_root(&core);
    let root = rotate_to_a(&root);
    let bbar = psi_letter_map(&root).reverse();
    let qm = CircleQM::new(bbar.clone())?;
    let value = qm.rot_bar(w);
    let cert = SclCertificate::bavard(qm.id(), value, qm.defect_bound())?
        .with_input("word", al.format_word(w))
        .with_input("base", bbar.format())
        .with_input("power", alloc::format!("{k}"));
    Ok(cert)
}

/// Checks `Phi(g0^n) = b_l b0^{n-K} b_r` for `n = K..K+3` up to conjugating
/// `b0`, i.e. `Phi(g0^{K+j}) Phi(g0^K)^-1 = u^j` with `u` conjugate to `b0`.
pub fn verify_period_shape(images: &[Word], b0: &Word) -> Result<()> {
    let al = f2();
    if images.len() < 4 {
        return Err(Error::ShapeMismatch("need four consecutive images".into()));
    }
    let base_inv = al.inverse(&images[0]);
    let u = al.mul(&images[1], &base_inv);
    for (j, img) in images.iter().enumerate().skip(2) {
        if al.mul(img, &base_inv) != al.pow(&u, j as i64) {
            return Err(Error::ShapeMismatch(alloc::format!("image {j} breaks the period")));
        }
    }
    let (_, cu) = al.cyclic_reduce(&u);
    let (_, cb) = al.cyclic_reduce(b0);
    if cu.is_empty() || !al.are_rotations(&cu, &cb) {
        return Err(Error::ShapeMismatch("period is not conjugate to the given b0".into()));
    }
    Ok(())
}

/// Finds `(K, b0)` with the eventual period shape among `K = 1..=4`.
pub fn infer_period<G>(phi: &dyn Fn(&G) -> Word, pow: &dyn Fn(&G, usize) -> G, g0: &G) -> Option<(usize, Word)> {
    let al = f2();
    let imgs: Vec<Word> = (1..=7).map(|n| phi(&pow(g0, n))).collect();
    for k in 1..=4 {
        let u = al.mul(&imgs[k], &al.inverse(&imgs[k - 1]));
        let (_, b0) = al.cyclic_reduce(&u);
        if verify_period_shape(&imgs[k - 1..k + 3], &b0).is_ok() {
            return Some((k, b0));
        }
    }
    None
}

/// Bavard certificate for `Phi^* rot_{b}` where `b` is the reversed sign
/// collapse of the eventual period `b0` of `Phi(g0^n)`.
pub fn letter_qm_pullback<G>(
    phi: &dyn Fn(&G) -> Word,
    pow: &dyn Fn(&G, usize) -> G,
    g0: &G,
    k: usize,
    b0: &Word,
) -> Result<SclCertificate> {
    let al = f2();
    if k == 0 {
        return Err(Error::Precondition("K must be positive".into()));
    }
    let imgs: Vec<Word> = (k..k + 4).map(|n| phi(&pow(g0, n))).collect();
    verify_period_shape(&imgs, b0)?;
    let (_, core) = al.cyclic_reduce(b0);
    if !core.syllables().iter().any(|s| s.0 == GEN_A) || !core.syllables().iter().any(|s| s.0 == GEN_B) {
        return Err(Error::ShapeMismatch("period is a power of a single generator".into()));
    }
    let (root, power) = al.primitive_root(&core);
    let bbar = psi_letter_map(&rotate_to_a(&root)).reverse();
    let qm = CircleQM::new(bbar.clone())?;
    // homogenized value of the pullback at g0
    let value = qm.rot_bar(&core);
    let cert = SclCertificate::bavard(alloc::format!("pullback({})", qm.id()), value, qm.defect_bound())?
        .with_input("period", al.format_word(b0))
        .with_input("base", bbar.format())
        .with_input("K", alloc::format!("{k}"))
        .with_input("power", alloc::format!("{power}"));
    Ok(cert)
}

/// Checks the two cases of the letter-quasimorphism axiom for one triple
/// `(Phi(g), Phi(h), Phi(gh))`.
pub fn letter_axiom_holds(pg: &Word, ph: &Word, pgh: &Word) -> bool {
    let al = f2();
    if al.mul(pg, ph) == *pgh {
        return true;
    }
    let lets = |w: &Word| al.letters(w);
    let xs = [lets(pg), lets(ph), lets(&al.inverse(pgh))];
    let inv = |v: &[Letter]| -> Vec<Letter> { v.iter().rev().map(|l| Letter { gen: l.gen, exp: -l.exp }).collect() };
    let alternating = |v: &[Letter]| v.windows(2).all(|p| p[0].gen != p[1].gen);
    for r in 0..3 {
        let y1 = &xs[r];
        let y2 = &xs[(r + 1) % 3];
        let y3 = &xs[(r + 2) % 3];
        for p in 0..y1.len() {
            let x = y1[p];
            let c1 = inv(&y1[..p]);
            let c2 = &y1[p + 1..];
            // y2 = c2^-1 x c3
            let c2i = inv(c2);
            if y2.len() < c2i.len() + 1 || y2[..c2i.len()] != c2i[..] || y2[c2i.len()] != x {
                continue;
            }
            let c3 = &y2[c2i.len() + 1..];
            // y3 = c3^-1 x^-1 c1
            let mut expect = inv(c3);
            expect.push(Letter { gen: x.gen, exp: -x.exp });
            expect.extend_from_slice(&c1);
            if *y3 == expect && alternating(&c1) && alternating(c2) && alternating(c3) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use crate::qm::sample_defect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base() -> AltWord {
        AltWord::parse("a b a^-1 b^-1").unwrap()
    }

    fn w(s: &str) -> Word {
        f2().parse_word(s).unwrap()
    }

    fn letter(s: &str) -> Letter {
        f2().letters(&w(s))[0]
    }

    fn random_base(rng: &mut ChaCha8Rng, max_half: usize) -> AltWord {
        loop {
            let m = 2 * rng.gen_range(1..=max_half);
            let first = rng.gen_range(0..2);
            let ls: Vec<Letter> = (0..m)
                .map(|i| Letter { gen: (first + i) % 2, exp: if rng.gen_bool(0.5) { 1 } else { -1 } })
                .collect();
            if let Ok(b) = AltWord::new(ls) {
                return b;
            }
        }
    }

    #[test]
    fn commutator_base_values() {
        let b = base();
        let al = f2();
        assert_eq!(elementary_map(&b, letter("a")).values(), &[1, 1, 2, 2]);
        assert_eq!(elementary_map(&b, letter("a^-1")).apply(2), 3);
        assert_eq!(rho_bar(&b, &al, &w("b^-1 a^-1 b a")).apply(0), 4);
        assert_eq!(rho_bar(&b, &al, &w("a b a b^-1")).apply(0), 2);
        assert_eq!(rot_bar(&b, &w("b^-1 a^-1 b a")).unwrap(), qi(4));
        assert_eq!(rot_bar(&b, &w("a b a b^-1")).unwrap(), qi(0));
        assert_eq!(rot_bar(&b, &w("b^-2 a^-1 b^2 a")).unwrap(), qi(4));
        // a letter outside the base support acts trivially
        let bb = AltWord::parse("a b").unwrap();
        let three = Alphabet::free(&["a", "b", "c"]);
        assert_eq!(rho_bar(&bb, &three, &three.parse_word("c").unwrap()), MonotonePeriodicMap::identity(2));
    }

    #[test]
    fn rotation_number_basics() {
        assert_eq!(rotation_number(&MonotonePeriodicMap::identity(4)), qi(0));
        assert_eq!(rotation_number(&MonotonePeriodicMap::translation(4, 4)), qi(4));
        assert_eq!(rotation_number(&MonotonePeriodicMap::from_values(vec![2, 2, 4, 4]).unwrap()), qi(2));
        assert!(MonotonePeriodicMap::from_values(vec![3, 0]).is_err());
    }

    #[test]
    fn psi_and_reverse() {
        let al = f2();
        assert_eq!(psi_letter_map(&w("a^3 b^-2")).format(), "a b^-1");
        let c = w("b^-2 a^-1 b^2 a");
        assert_eq!(psi_letter_map(&c).format(), "b^-1 a^-1 b a");
        assert_eq!(reverse(&psi_letter_map(&c)).format(), "a b a^-1 b^-1");
        assert_eq!(AltWord::parse("a b").unwrap().reverse().format(), "b a");
        let x = w("a^2 b^-1 a^-3");
        assert_eq!(psi_letter_map(&al.inverse(&x)), psi_letter_map(&x).inverse());
        assert!(AltWord::parse("a^2 b").is_err());
        assert!(CircleQM::new(AltWord::parse("a b a").unwrap()).is_err());
        assert!(CircleQM::with_alphabet(&Alphabet::free(&["a", "b", "c"]), base()).is_err());
    }

    #[test]
    fn three_generator_failure() {
        let three = Alphabet::free(&["a", "b", "c"]);
        let b = AltWord::parse("a b").unwrap();
        let g = three.parse_word("b a c a^-1").unwrap();
        let h = three.parse_word("a c^-1 a^-1 b").unwrap();
        let gh = three.mul(&g, &h);
        let vals = [&g, &h, &gh].map(|x| rot_bar_any_rank(&b, &three, x));
        assert_eq!(vals, [qi(2), qi(2), qi(0)]);
    }

    #[test]
    fn extremal_examples() {
        let al = f2();
        let c = extremal_certificate(&w("a b a^-1 b^-1")).unwrap();
        assert_eq!((c.value.clone(), c.defect.clone(), c.bound.clone()), (qi(4), qi(4), q(1, 2)));
        let c = extremal_certificate(&w("b^-2 a^-1 b^2 a")).unwrap();
        assert_eq!((c.value.clone(), c.defect.clone(), c.bound.clone()), (qi(4), qi(4), q(1, 2)));
        let c3 = al.pow(&w("a b a^-1 b^-1"), 3);
        let c = extremal_certificate(&c3).unwrap();
        assert_eq!((c.value.clone(), c.defect.clone(), c.bound.clone()), (qi(12), qi(4), q(3, 2)));
        assert!(extremal_certificate(&Word::empty()).is_err());
        assert!(extremal_certificate(&w("a b")).is_err());
    }

    #[test]
    fn maps_are_monotone_and_see_no_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let al = f2();
        for _ in 0..2000 {
            let b = random_base(&mut rng, 4);
            let x = al.random_word(&mut rng, 20);
            let f = rho_bar(&b, &al, &x);
            assert!(f.is_valid());
            // doubling a letter changes nothing
            let ls = al.letters(&x);
            if !ls.is_empty() {
                let i = rng.gen_range(0..ls.len());
                let mut d = ls.clone();
                d.insert(i, ls[i]);
                assert_eq!(rho_bar(&b, &al, &al.from_letters(&d)), f);
            }
        }
    }

    #[test]
    fn homogeneity_and_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let al = f2();
        for _ in 0..500 {
            let b = random_base(&mut rng, 4);
            let x = al.random_word(&mut rng, 15);
            let u = al.random_word(&mut rng, 8);
            let r = rot_bar(&b, &x).unwrap();
            for k in [2i64, 3, 5] {
                assert_eq!(rot_bar(&b, &al.pow(&x, k)).unwrap(), &r * qi(k));
            }
            assert_eq!(rot_bar(&b, &al.inverse(&x)).unwrap(), -r.clone());
            let conj = al.product(&[&u, &x, &al.inverse(&u)]);
            assert_eq!(rot_bar(&b, &conj).unwrap(), r);
        }
    }

    #[test]
    fn direct_orbit_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let al = f2();
        // residues of the orbit become periodic with period at most M <= 8,
        // so every period divides 840 and the difference quotient is exact
        let period = 840;
        for _ in 0..300 {
            let b = random_base(&mut rng, 4);
            let x = al.random_word(&mut rng, 12);
            let m = b.len();
            let orbit0 = |n: usize| {
                let mut p = 0i64;
                for l in al.letters(&al.pow(&x, n as i64)).iter().rev() {
                    p = elementary_map(&b, *l).apply(p);
                }
                p
            };
            let lhs = q(orbit0(m + period) - orbit0(m), period as i64);
            assert_eq!(lhs, rot_bar(&b, &x).unwrap());
        }
    }

    #[test]
    fn sampled_defect_within_base_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for i in 0..8 {
            let b = random_base(&mut rng, 4);
            let qm = CircleQM::new(b.clone()).unwrap();
            assert!(sample_defect(&qm, 1000, 12, i).abs() <= qi(b.len() as i64));
        }
    }

    #[test]
    fn psi_is_letter_quasimorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let al = f2();
        for _ in 0..2000 {
            let g = al.random_word(&mut rng, 10);
            let h = al.random_word(&mut rng, 10);
            let ok = letter_axiom_holds(
                &psi_letter_map(&g).to_word(),
                &psi_letter_map(&h).to_word(),
                &psi_letter_map(&al.mul(&g, &h)).to_word(),
            );
            assert!(ok);
        }
    }

    #[test]
    fn pullback_along_psi() {
        let al = f2();
        let phi = |g: &Word| psi_letter_map(g).to_word();
        let pw = |g: &Word, n: usize| al.pow(g, n as i64);
        let g0 = w("a b a^-1 b^-1");
        let (k, b0) = infer_period(&phi, &pw, &g0).unwrap();
        let c = letter_qm_pullback(&phi, &pw, &g0, k, &b0).unwrap();
        assert_eq!(c.bound, q(1, 2));
        assert!(letter_qm_pullback(&phi, &pw, &g0, k, &w("a b")).is_err());
        let pa = w("a^2");
        assert!(infer_period(&phi, &pw, &pa).map_or(true, |(k, b)| letter_qm_pullback(&phi, &pw, &pa, k, &b).is_err()));
    }
}
