//! Brooks counting quasimorphisms on free products of cyclic groups.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::qm::{bavard_bound, CertKind, Homogenized, Quasimorphism, SclCertificate};
use crate::rational::{qi, Q};
use crate::words::{count_occurrences, Alphabet, Chain, Letter, Word};

/// `h -> C_g(h) - C_{g^-1}(h)` for a base word `g`.
#[derive(Clone, Debug)]
pub struct BrooksQM {
    alphabet: Alphabet,
    base: Word,
    base_letters: Vec<Letter>,
    inv_letters: Vec<Letter>,
}

impl BrooksQM {
    pub fn new(alphabet: &Alphabet, base: Word) -> Result<Self> {
        if alphabet.letter_len(&base) < 2 {
            return Err(Error::Precondition("base needs at least two letters".into()));
        }
        if !alphabet.is_cyclically_reduced(&base) {
            return Err(Error::Precondition("base is not cyclically reduced".into()));
        }
        if alphabet.is_self_overlapping(&base) {
            return Err(Error::Precondition("base is self-overlapping".into()));
        }
        let inv = alphabet.inverse(&base);
        Ok(BrooksQM {
            alphabet: alphabet.clone(),
            base_letters: alphabet.letters(&base),
            inv_letters: alphabet.letters(&inv),
            base,
        })
    }

    pub fn base(&self) -> &Word {
        &self.base
    }

    pub fn torsion_free(&self) -> bool {
        self.alphabet.is_torsion_free()
    }

    pub fn eval_int(&self, h: &Word) -> i64 {
        let t = self.alphabet.letters(h);
        count_occurrences(&self.base_letters, &t) as i64 - count_occurrences(&self.inv_letters, &t) as i64
    }

    /// Occurrences starting in one period of the cyclic core.
    pub fn homogeneous_int(&self, h: &Word) -> i64 {
        let (_, core) = self.alphabet.cyclic_reduce(h);
        let ls = self.alphabet.letters(&core);
        let n = ls.len();
        if n == 0 {
            return 0;
        }
        let reps = self.base_letters.len().div_ceil(n) + 1;
        let text: Vec<Letter> = ls.iter().copied().cycle().take(n * reps).collect();
        let count = |p: &[Letter]| {
            (0..n).filter(|&i| i + p.len() <= text.len() && text[i..i + p.len()] == *p).count() as i64
        };
        count(&self.base_letters) - count(&self.inv_letters)
    }
}

impl Quasimorphism for BrooksQM {
    fn id(&self) -> String {
        alloc::format!("brooks({})", self.alphabet.format_word(&self.base))
    }
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
    fn eval(&self, w: &Word) -> Q {
        qi(self.eval_int(w))
    }
    fn defect_bound(&self) -> Q {
        qi(if self.torsion_free() { 2 } else { 3 })
    }
    fn is_homogeneous(&self) -> bool {
        false
    }
    fn homogeneous_value(&self, w: &Word) -> Option<Q> {
        Some(qi(self.homogeneous_int(w)))
    }
    fn has_exact_homogenization(&self) -> bool {
        true
    }
}

/// A chain after cyclic reduction, root extraction and merging of conjugates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalChain {
    /// Least-rotation primitive representatives with their merged coefficients.
    pub terms: Vec<(Q, Word)>,
    /// Input terms conjugate to their own inverse.
    pub dropped: Vec<Word>,
}

pub fn canonicalize_chain(alphabet: &Alphabet, c: &Chain) -> CanonicalChain {
    let mut merged: BTreeMap<Word, Q> = BTreeMap::new();
    let mut dropped = Vec::new();
    for (coef, w) in c.terms() {
        let (_, core) = alphabet.cyclic_reduce(w);
        let (root, k) = alphabet.primitive_root(&core);
        let fwd = alphabet.least_rotation_word(&root);
        let bwd = alphabet.least_rotation_word(&alphabet.inverse(&root));
        if fwd == bwd {
            dropped.push(w.clone());
            continue;
        }
        let (key, s) = if fwd < bwd { (fwd, 1) } else { (bwd, -1) };
        let add = coef * qi(k as i64 * s);
        *merged.entry(key).or_insert_with(Q::zero) += add;
    }
    let terms = merged.into_iter().filter(|(_, v)| !v.is_zero()).map(|(w, v)| (v, w)).collect();
    CanonicalChain { terms, dropped }
}

/// Lower bound for an integral null-homologous chain; at least 1/12 when nontrivial.
pub fn chain_gap_certificate(alphabet: &Alphabet, c: &Chain) -> Result<SclCertificate> {
    if !c.is_integral() {
        return Err(Error::Precondition("chain coefficients must be integers".into()));
    }
    for (_, w) in c.terms() {
        let (_, core) = alphabet.cyclic_reduce(w);
        if core.syllable_len() == 1 && alphabet.order(core.syllables()[0].0).is_finite() {
            return Err(Error::Precondition(alloc::format!(
                "`{}` has finite order",
                alphabet.format_word(w)
            )));
        }
    }
    if !alphabet.abelianize(c).is_rationally_zero() {
        return Err(Error::Precondition("chain is not null-homologous".into()));
    }
    let canon = canonicalize_chain(alphabet, c);
    let dropped: Vec<String> = canon.dropped.iter().map(|w| alphabet.format_word(w)).collect();
    let input = alphabet.format_chain(c);
    let Some((_, g1)) = canon.terms.iter().max_by(|a, b| {
        alphabet.letter_len(&a.1).cmp(&alphabet.letter_len(&b.1)).then_with(|| b.1.cmp(&a.1))
    }) else {
        let mut cert = SclCertificate::formula("trivial-chain", Q::zero()).with_input("chain", input);
        for d in dropped {
            cert = cert.with_note(alloc::format!("dropped self-inverse term {d}"));
        }
        return Ok(cert);
    };
    let q = BrooksQM::new(alphabet, g1.clone())?;
    let hq = Homogenized::new(&q)?;
    let mut cert = bavard_bound(&hq, c)?;
    debug_assert_eq!(cert.kind, CertKind::Bavard);
    debug_assert!(!cert.bound.is_negative());
    for d in dropped {
        cert = cert.with_note(alloc::format!("dropped self-inverse term {d}"));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qm::{homogenize, sample_defect};
    use crate::rational::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_examples() {
        let al = Alphabet::free(&["a", "b"]);
        let g = al.parse_word("a b").unwrap();
        let q = BrooksQM::new(&al, g.clone()).unwrap();
        assert_eq!(q.eval_int(&g), 1);
        assert_eq!(q.eval_int(&al.parse_word("a b a b").unwrap()), 2);
        let h = al.parse_word("b^-1 a^-1 b^2").unwrap();
        assert_eq!(q.eval_int(&al.inverse(&h)), -q.eval_int(&h));
        assert_eq!(homogenize(&q, &g, 4).unwrap().value, qi(1));
        assert!(BrooksQM::new(&al, al.parse_word("a b a").unwrap()).is_err());
        assert!(BrooksQM::new(&al, al.parse_word("a").unwrap()).is_err());
    }

    #[test]
    fn short_words_vanish() {
        let al = Alphabet::free(&["a", "b"]);
        let q = BrooksQM::new(&al, al.parse_word("a a b").unwrap()).unwrap();
        for s in ["a b", "a b^-1", "a^2 b^-1", "a^-1 b^-2", "b a"] {
            assert_eq!(q.homogeneous_int(&al.parse_word(s).unwrap()), 0, "{s}");
        }
        assert_eq!(q.homogeneous_int(&al.parse_word("b a^2").unwrap()), 1);
    }

    #[test]
    fn homogeneous_matches_power_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let al = Alphabet::parse("a/2 b/3 c").unwrap();
        let mut n = 0;
        while n < 300 {
            let g = al.random_word(&mut rng, 6);
            let Ok(q) = BrooksQM::new(&al, g) else { continue };
            n += 1;
            let h = al.random_word(&mut rng, 10);
            let slope = q.eval_int(&al.pow(&h, 9)) - q.eval_int(&al.pow(&h, 8));
            assert_eq!(q.homogeneous_int(&h), slope);
            for k in [2, 3] {
                assert_eq!(q.homogeneous_int(&al.pow(&h, k)), k * q.homogeneous_int(&h));
            }
        }
    }

    #[test]
    fn sampled_defects_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for al in [Alphabet::parse("a/2 b/3 c").unwrap(), Alphabet::free(&["a", "b"])] {
            let mut n = 0;
            while n < 5 {
                let g = al.random_word(&mut rng, 5);
                let Ok(q) = BrooksQM::new(&al, g) else { continue };
                n += 1;
                assert!(sample_defect(&q, 2000, 16, n as u64) <= q.defect_bound());
            }
        }
    }

    #[test]
    fn chain_examples() {
        let z = Alphabet::parse("a/2 b/3").unwrap();
        let cert = chain_gap_certificate(&z, &z.parse_chain("1*a b").unwrap()).unwrap();
        assert_eq!(cert.bound, q(1, 12));
        assert_eq!(cert.defect, qi(6));
        let f = Alphabet::free(&["a", "b"]);
        let cert = chain_gap_certificate(&f, &f.parse_chain("a b a^-1 b^-1").unwrap()).unwrap();
        assert_eq!(cert.witness, "homogenized(brooks(a^-1 b^-1 a b))");
        assert_eq!(cert.bound, q(1, 8));
        let cert = chain_gap_certificate(&f, &f.parse_chain("1*a b + -1*a b").unwrap()).unwrap();
        assert_eq!(cert.bound, qi(0));
        assert_eq!(cert.kind, CertKind::GapFormula);
        assert!(chain_gap_certificate(&f, &f.parse_chain("a").unwrap()).is_err());
        assert!(chain_gap_certificate(&f, &f.parse_chain("1/2*a b a^-1 b^-1").unwrap()).is_err());
        assert!(chain_gap_certificate(&z, &z.parse_chain("b").unwrap()).is_err());
    }

    #[test]
    fn chain_canonicalization_merges_conjugates() {
        let f = Alphabet::free(&["a", "b"]);
        // conjugate and inverse conjugate of the same commutator cancel
        let c = f.parse_chain("1*a b a^-1 b^-1 + 1*b a b^-1 a^-1").unwrap();
        assert!(canonicalize_chain(&f, &c).terms.is_empty());
        let c = f.parse_chain("1*a b a b + -2*b a").unwrap();
        assert!(canonicalize_chain(&f, &c).terms.is_empty());
        let c = f.parse_chain("a^2 b^2 a^-2 b^-2").unwrap();
        assert_eq!(canonicalize_chain(&f, &c).terms.len(), 1);
        let z = Alphabet::parse("a/2 b/2").unwrap();
        let c = z.parse_chain("a b").unwrap();
        assert_eq!(canonicalize_chain(&z, &c).dropped.len(), 1);
    }

    #[test]
    fn gap_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let al = Alphabet::parse("a/2 b/3 c").unwrap();
        for _ in 0..100 {
            let u = al.random_word(&mut rng, 5);
            let v = al.random_word(&mut rng, 5);
            let w = al.commutator(&u, &v);
            if w.is_empty() {
                continue;
            }
            let c = Chain::single(w).unwrap();
            let cert = chain_gap_certificate(&al, &c).unwrap();
            let canon = canonicalize_chain(&al, &c);
            if !canon.terms.is_empty() {
                assert!(cert.bound >= q(1, 12));
            }
        }
    }
}
