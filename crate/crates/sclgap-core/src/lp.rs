//! Exact rational simplex.
//!
//! Solves `min c.x` subject to `A x = b`, `x >= 0` with a dense two-phase
//! tableau and Bland's rule, so it always terminates.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{QVec, Subspace};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpProblem {
    a: Vec<QVec>,
    b: QVec,
    c: QVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub x: QVec,
    pub value: Q,
    /// Dual prices, one per constraint row: `A^T y <= c` and `b.y = value`.
    pub duals: QVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

struct Tableau {
    t: Vec<QVec>,
    basis: Vec<usize>,
    cost: QVec,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.t[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let inv = self.t[r][s].recip();
        for x in self.t[r].iter_mut() {
            *x *= &inv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r && !row[s].is_zero() {
                let f = row[s].clone();
                for (x, p) in row.iter_mut().zip(&prow) {
                    if !p.is_zero() {
                        *x -= p * &f;
                    }
                }
            }
        }
        if !self.cost[s].is_zero() {
            let f = self.cost[s].clone();
            for (x, p) in self.cost.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= p * &f;
                }
            }
        }
        self.basis[r] = s;
    }

    /// Reduced costs for column costs `c` (the last entry is minus the objective).
    fn set_cost(&mut self, c: &[Q]) {
        let mut cost: QVec = c.to_vec();
        cost.push(Q::zero());
        for (i, &bv) in self.basis.iter().enumerate() {
            if !c[bv].is_zero() {
                let f = c[bv].clone();
                for (x, v) in cost.iter_mut().zip(&self.t[i]) {
                    *x -= v * &f;
                }
            }
        }
        self.cost = cost;
    }

    /// Runs Bland's rule over the allowed entering columns; false if unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let Some(s) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.t.len() {
                if self.t[i][s].is_positive() {
                    let ratio = self.rhs(i) / &self.t[i][s];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, s),
            }
        }
    }
}

impl LpProblem {
    pub fn new(a: Vec<QVec>, b: QVec, c: QVec) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Precondition("row count mismatch".into()));
        }
        if a.iter().any(|r| r.len() != c.len()) {
            return Err(Error::Precondition("column count mismatch".into()));
        }
        Ok(LpProblem { a, b, c })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn minimize(&self) -> LpOutcome {
        let n = self.c.len();
        // keep a maximal independent set of rows; dependent rows must be consistent
        let mut keep = Vec::new();
        let mut plain = Subspace::zero(n);
        let mut augmented = Subspace::zero(n + 1);
        for (i, row) in self.a.iter().enumerate() {
            let mut aug = row.clone();
            aug.push(self.b[i].clone());
            if plain.contains(row) {
                if !augmented.contains(&aug) {
                    return LpOutcome::Infeasible;
                }
                continue;
            }
            plain = plain.sum(&Subspace::span(n, &[row.clone()]));
            augmented = augmented.sum(&Subspace::span(n + 1, &[aug]));
            keep.push(i);
        }
        let m = keep.len();
        let mut flip = vec![false; m];
        let mut t: Vec<QVec> = Vec::with_capacity(m);
        for (r, &i) in keep.iter().enumerate() {
            let neg = self.b[i].is_negative();
            flip[r] = neg;
            let mut row: QVec = Vec::with_capacity(n + m + 1);
            for x in &self.a[i] {
                row.push(if neg { -x } else { x.clone() });
            }
            for k in 0..m {
                row.push(if k == r { Q::one() } else { Q::zero() });
            }
            row.push(if neg { -&self.b[i] } else { self.b[i].clone() });
            t.push(row);
        }
        let ncols = n + m;
        let mut tab = Tableau { t, basis: (n..n + m).collect(), cost: Vec::new(), ncols };
        let mut c1 = vec![Q::zero(); ncols];
        for x in c1.iter_mut().skip(n) {
            *x = Q::one();
        }
        tab.set_cost(&c1);
        tab.run(n);
        if !tab.cost[ncols].is_zero() {
            return LpOutcome::Infeasible;
        }
        // drive artificial variables out of the basis; full row rank guarantees a pivot
        for r in 0..m {
            if tab.basis[r] >= n {
                if let Some(s) = (0..n).find(|&j| !tab.t[r][j].is_zero()) {
                    tab.pivot(r, s);
                }
            }
        }
        let mut c2 = self.c.clone();
        c2.extend(core::iter::repeat(Q::zero()).take(m));
        tab.set_cost(&c2);
        if !tab.run(n) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Q::zero(); n];
        for (r, &bv) in tab.basis.iter().enumerate() {
            if bv < n {
                x[bv] = tab.rhs(r).clone();
            }
        }
        let value = x.iter().zip(&self.c).fold(Q::zero(), |acc, (a, b)| acc + a * b);
        let mut duals = vec![Q::zero(); self.a.len()];
        for (r, &i) in keep.iter().enumerate() {
            let y = -tab.cost[n + r].clone();
            duals[i] = if flip[r] { -y } else { y };
        }
        LpOutcome::Optimal(LpSolution { x, value, duals })
    }

    pub fn maximize(&self) -> LpOutcome {
        let neg = LpProblem { a: self.a.clone(), b: self.b.clone(), c: self.c.iter().map(|x| -x).collect() };
        match neg.minimize() {
            LpOutcome::Optimal(mut s) => {
                s.value = -s.value;
                s.duals = s.duals.into_iter().map(|y| -y).collect();
                LpOutcome::Optimal(s)
            }
            o => o,
        }
    }

    /// Checks `x` against the constraints exactly.
    pub fn is_feasible(&self, x: &[Q]) -> bool {
        x.len() == self.c.len()
            && x.iter().all(|v| !v.is_negative())
            && self.a.iter().zip(&self.b).all(|(row, bi)| {
                row.iter().zip(x).fold(Q::zero(), |acc, (a, v)| acc + a * v) == *bi
            })
    }

    pub fn rows(&self) -> &[QVec] {
        &self.a
    }

    pub fn rhs(&self) -> &[Q] {
        &self.b
    }

    pub fn costs(&self) -> &[Q] {
        &self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{solve_combination, to_qvec};
    use crate::rational::{q, qi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(a: &[&[i64]], b: &[i64], c: &[i64]) -> LpProblem {
        LpProblem::new(a.iter().map(|r| to_qvec(r)).collect(), to_qvec(b), to_qvec(c)).unwrap()
    }

    fn check_certificate(p: &LpProblem, s: &LpSolution) {
        assert!(p.is_feasible(&s.x));
        // dual feasibility and complementary slackness
        for j in 0..p.num_vars() {
            let aty = p.rows().iter().zip(&s.duals).fold(Q::zero(), |acc, (r, y)| acc + &r[j] * y);
            let slack = &p.costs()[j] - aty;
            assert!(!slack.is_negative(), "dual infeasible at {j}");
            assert!(slack.is_zero() || s.x[j].is_zero(), "slackness fails at {j}");
        }
        let by = p.rhs().iter().zip(&s.duals).fold(Q::zero(), |acc, (b, y)| acc + b * y);
        assert_eq!(by, s.value);
    }

    // brute force over all column subsets of size rank
    fn vertex_oracle(p: &LpProblem) -> Option<Q> {
        let n = p.num_vars();
        let mut best: Option<Q> = None;
        for mask in 0u32..(1 << n) {
            let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            let cv: Vec<QVec> = cols.iter().map(|&j| p.rows().iter().map(|r| r[j].clone()).collect()).collect();
            if let Some(sol) = solve_combination(&cv, p.rhs()) {
                let mut x = vec![Q::zero(); n];
                for (k, &j) in cols.iter().enumerate() {
                    x[j] = sol[k].clone();
                }
                if p.is_feasible(&x) {
                    let v = x.iter().zip(p.costs()).fold(Q::zero(), |acc, (a, b)| acc + a * b);
                    if best.as_ref().map_or(true, |b| v < *b) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn small_examples() {
        // min x + y, x + 2y = 4, x - y = 1
        let p = lp(&[&[1, 2], &[1, -1]], &[4, 1], &[1, 1]);
        let s = p.minimize().optimal().unwrap();
        assert_eq!(s.x, vec![q(2, 1), q(1, 1)]);
        check_certificate(&p, &s);
        let p = lp(&[&[1, 1]], &[-1], &[1, 1]);
        assert_eq!(p.minimize(), LpOutcome::Infeasible);
        let p = lp(&[&[1, -1]], &[0], &[-1, 0]);
        assert_eq!(p.minimize(), LpOutcome::Unbounded);
        // dependent and inconsistent rows
        let p = lp(&[&[1, 1], &[2, 2]], &[1, 2], &[1, 2]);
        let s = p.minimize().optimal().unwrap();
        assert_eq!(s.value, qi(1));
        check_certificate(&p, &s);
        assert_eq!(lp(&[&[1, 1], &[2, 2]], &[1, 3], &[1, 1]).minimize(), LpOutcome::Infeasible);
    }

    #[test]
    fn random_against_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut optimal = 0;
        for _ in 0..300 {
            let m = rng.gen_range(1..4);
            let n = rng.gen_range(m..7);
            let a: Vec<QVec> = (0..m).map(|_| (0..n).map(|_| qi(rng.gen_range(-3..=3))).collect()).collect();
            let b: QVec = (0..m).map(|_| qi(rng.gen_range(-4..=4))).collect();
            let c: QVec = (0..n).map(|_| q(rng.gen_range(-3..=5), rng.gen_range(1..4))).collect();
            let p = LpProblem::new(a, b, c).unwrap();
            let oracle = vertex_oracle(&p);
            match p.minimize() {
                LpOutcome::Optimal(s) => {
                    optimal += 1;
                    check_certificate(&p, &s);
                    assert_eq!(Some(s.value), oracle);
                }
                LpOutcome::Infeasible => assert!(oracle.is_none()),
                LpOutcome::Unbounded => assert!(oracle.is_some()),
            }
        }
        assert!(optimal > 50);
    }

    #[test]
    fn maximize_flips() {
        let p = lp(&[&[1, 1]], &[3], &[2, 1]);
        let s = p.maximize().optimal().unwrap();
        assert_eq!(s.value, qi(6));
    }
}
