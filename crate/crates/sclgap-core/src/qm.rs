//! Quasimorphisms, homogenization and Bavard lower bounds.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::Q;
use crate::words::{Alphabet, Chain, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertKind {
    Bavard,
    GapFormula,
    NormEval,
}

impl CertKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertKind::Bavard => "bavard",
            CertKind::GapFormula => "gap-formula",
            CertKind::NormEval => "norm-eval",
        }
    }
}

/// A certified lower bound on scl.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SclCertificate {
    pub bound: Q,
    pub witness: String,
    /// Signed homogeneous value on the chain, or the formula's input value.
    pub value: Q,
    pub defect: Q,
    pub kind: CertKind,
    pub inputs: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl SclCertificate {
    pub fn bavard(witness: impl Into<String>, value: Q, defect: Q) -> Result<Self> {
        if !defect.is_positive() {
            return Err(Error::Precondition("defect bound must be positive".into()));
        }
        let bound = value.abs() / (Q::from_integer(BigInt::from(2)) * &defect);
        Ok(SclCertificate {
            bound,
            witness: witness.into(),
            value,
            defect,
            kind: CertKind::Bavard,
            inputs: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    pub fn formula(witness: impl Into<String>, bound: Q) -> Self {
        SclCertificate {
            value: bound.clone(),
            bound,
            witness: witness.into(),
            defect: Q::zero(),
            kind: CertKind::GapFormula,
            inputs: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_input(mut self, k: &str, v: impl Into<String>) -> Self {
        self.inputs.insert(k.to_string(), v.into());
        self
    }

    pub fn with_note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    /// True if the stored bound matches the Bavard identity exactly.
    pub fn is_consistent(&self) -> bool {
        match self.kind {
            CertKind::Bavard => {
                self.defect.is_positive()
                    && self.bound == self.value.abs() / (Q::from_integer(BigInt::from(2)) * &self.defect)
            }
            _ => !self.bound.is_negative(),
        }
    }
}

pub trait Quasimorphism {
    fn id(&self) -> String;
    fn alphabet(&self) -> &Alphabet;
    fn eval(&self, w: &Word) -> Q;
    /// Proved bound on the defect.
    fn defect_bound(&self) -> Q;
    fn is_homogeneous(&self) -> bool;
    /// Exact homogenization, for families where it is computable.
    fn homogeneous_value(&self, _w: &Word) -> Option<Q> {
        None
    }
    fn has_exact_homogenization(&self) -> bool {
        self.is_homogeneous()
    }
}

type Evaluator = Box<dyn Fn(&Word) -> Q + Send + Sync>;

/// A quasimorphism given by closures.
pub struct QuasimorphismHandle {
    id: String,
    alphabet: Alphabet,
    eval: Evaluator,
    exact: Option<Evaluator>,
    defect: Q,
    homogeneous: bool,
}

impl QuasimorphismHandle {
    pub fn new(
        id: impl Into<String>,
        alphabet: Alphabet,
        defect: Q,
        homogeneous: bool,
        eval: impl Fn(&Word) -> Q + Send + Sync + 'static,
    ) -> Result<Self> {
        if defect.is_negative() {
            return Err(Error::Precondition("negative defect bound".into()));
        }
        Ok(QuasimorphismHandle { id: id.into(), alphabet, eval: Box::new(eval), exact: None, defect, homogeneous })
    }

    pub fn with_exact_homogenization(mut self, f: impl Fn(&Word) -> Q + Send + Sync + 'static) -> Self {
        self.exact = Some(Box::new(f));
        self
    }
}

impl Quasimorphism for QuasimorphismHandle {
    fn id(&self) -> String {
        self.id.clone()
    }
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
    fn eval(&self, w: &Word) -> Q {
        (self.eval)(w)
    }
    fn defect_bound(&self) -> Q {
        self.defect.clone()
    }
    fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }
    fn homogeneous_value(&self, w: &Word) -> Option<Q> {
        if self.homogeneous {
            return Some((self.eval)(w));
        }
        self.exact.as_ref().map(|f| f(w))
    }
    fn has_exact_homogenization(&self) -> bool {
        self.homogeneous || self.exact.is_some()
    }
}

/// Homogenized value with an error bar; the error is zero when exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homogenization {
    pub value: Q,
    pub error: Q,
}

pub fn homogenize(phi: &dyn Quasimorphism, g: &Word, horizon: u32) -> Result<Homogenization> {
    if horizon < 2 {
        return Err(Error::Precondition("horizon must be at least 2".into()));
    }
    if phi.is_homogeneous() {
        return Ok(Homogenization { value: phi.eval(g), error: Q::zero() });
    }
    if let Some(v) = phi.homogeneous_value(g) {
        return Ok(Homogenization { value: v, error: Q::zero() });
    }
    let n = Q::from_integer(BigInt::from(horizon));
    let gn = phi.alphabet().pow(g, horizon as i64);
    Ok(Homogenization { value: phi.eval(&gn) / &n, error: phi.defect_bound() / n })
}

pub fn defect_of_homogenization(d: &Q) -> Result<Q> {
    if d.is_negative() {
        return Err(Error::Precondition("negative defect".into()));
    }
    Ok(d * Q::from_integer(BigInt::from(2)))
}

/// The homogenization of a quasimorphism with an exact strategy.
pub struct Homogenized<'a> {
    inner: &'a dyn Quasimorphism,
}

impl<'a> Homogenized<'a> {
    pub fn new(inner: &'a dyn Quasimorphism) -> Result<Self> {
        if !inner.has_exact_homogenization() {
            return Err(Error::Unsupported("quasimorphism has no exact homogenization".into()));
        }
        Ok(Homogenized { inner })
    }
}

impl Quasimorphism for Homogenized<'_> {
    fn id(&self) -> String {
        if self.inner.is_homogeneous() {
            self.inner.id()
        } else {
            alloc::format!("homogenized({})", self.inner.id())
        }
    }
    fn alphabet(&self) -> &Alphabet {
        self.inner.alphabet()
    }
    fn eval(&self, w: &Word) -> Q {
        if self.inner.is_homogeneous() {
            self.inner.eval(w)
        } else {
            self.inner.homogeneous_value(w).expect("checked at construction")
        }
    }
    fn defect_bound(&self) -> Q {
        if self.inner.is_homogeneous() {
            self.inner.defect_bound()
        } else {
            self.inner.defect_bound() * Q::from_integer(BigInt::from(2))
        }
    }
    fn is_homogeneous(&self) -> bool {
        true
    }
}

/// Value of a homogeneous quasimorphism on a chain.
pub fn chain_value(phi: &dyn Quasimorphism, c: &Chain) -> Q {
    c.terms().iter().fold(Q::zero(), |acc, (k, w)| acc + k * phi.eval(w))
}

pub fn bavard_bound(phi: &dyn Quasimorphism, c: &Chain) -> Result<SclCertificate> {
    if !phi.is_homogeneous() {
        return Err(Error::Precondition("quasimorphism is not homogeneous".into()));
    }
    let d = phi.defect_bound();
    if d.is_zero() {
        return Err(Error::Precondition("defect bound is zero".into()));
    }
    let value = chain_value(phi, c);
    Ok(SclCertificate::bavard(phi.id(), value, d)?.with_input("chain", phi.alphabet().format_chain(c)))
}

/// Largest `|phi(g) + phi(h) - phi(gh)|` over random reduced pairs.
pub fn sample_defect(phi: &dyn Quasimorphism, trials: usize, max_len: usize, seed: u64) -> Q {
    let al = phi.alphabet().clone();
    sample_defect_with(
        |w: &Word| phi.eval(w),
        |g: &Word, h: &Word| al.mul(g, h),
        |rng: &mut ChaCha8Rng| al.random_word(rng, max_len),
        trials,
        seed,
    )
}

/// Defect sampling for any group given by a multiplication and a generator.
pub fn sample_defect_with<G>(
    eval: impl Fn(&G) -> Q,
    mul: impl Fn(&G, &G) -> G,
    mut random: impl FnMut(&mut ChaCha8Rng) -> G,
    trials: usize,
    seed: u64,
) -> Q {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Q::zero();
    for _ in 0..trials {
        let g = random(&mut rng);
        let h = random(&mut rng);
        let gh = mul(&g, &h);
        let d = (eval(&g) + eval(&h) - eval(&gh)).abs();
        if d > worst {
            worst = d;
        }
    }
    worst
}
