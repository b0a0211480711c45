//! Exact linear algebra over the rationals and small integer lattice tools.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{common_denominator, qi, Q};

pub type QVec = Vec<Q>;

pub fn zero_vec(n: usize) -> QVec {
    vec![Q::zero(); n]
}

pub fn to_qvec(v: &[i64]) -> QVec {
    v.iter().map(|&x| qi(x)).collect()
}

pub fn add(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Q], s: &Q) -> QVec {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[Q]) -> QVec {
    a.iter().map(|x| -x).collect()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn is_zero(a: &[Q]) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Reduced row echelon form; returns the nonzero rows and pivot columns.
pub fn rref(rows: &[QVec]) -> (Vec<QVec>, Vec<usize>) {
    let mut m: Vec<QVec> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..ncols {
                    let t = &m[r][j] * &f;
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(rows: &[QVec]) -> usize {
    rref(rows).0.len()
}

/// A linear subspace of `Q^dim`, stored as an RREF basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    dim: usize,
    basis: Vec<QVec>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(dim: usize) -> Self {
        Subspace { dim, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        let gens: Vec<QVec> = (0..dim)
            .map(|i| {
                let mut v = zero_vec(dim);
                v[i] = Q::one();
                v
            })
            .collect();
        Subspace::span(dim, &gens)
    }

    pub fn span(dim: usize, gens: &[QVec]) -> Self {
        let gens: Vec<QVec> = gens.iter().filter(|g| !is_zero(g)).cloned().collect();
        if gens.is_empty() {
            return Subspace::zero(dim);
        }
        let (basis, pivots) = rref(&gens);
        Subspace { dim, basis, pivots }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[QVec] {
        &self.basis
    }

    /// Component of `v` after eliminating the pivot coordinates.
    pub fn residual(&self, v: &[Q]) -> QVec {
        let mut r = v.to_vec();
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for j in 0..self.dim {
                    let t = &b[j] * &f;
                    r[j] -= t;
                }
            }
        }
        r
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        is_zero(&self.residual(v))
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|b| self.contains(b))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut g = self.basis.clone();
        g.extend(other.basis.iter().cloned());
        Subspace::span(self.dim, &g)
    }
}

/// Solves `sum_i x_i cols[i] = v`, returning one solution if any.
pub fn solve_combination(cols: &[QVec], v: &[Q]) -> Option<QVec> {
    let n = cols.len();
    let d = v.len();
    // augmented rows: one per coordinate
    let rows: Vec<QVec> = (0..d)
        .map(|i| {
            let mut r: QVec = cols.iter().map(|c| c[i].clone()).collect();
            r.push(v[i].clone());
            r
        })
        .collect();
    if rows.is_empty() {
        return Some(zero_vec(n));
    }
    let (m, piv) = rref(&rows);
    if piv.last() == Some(&n) {
        return None;
    }
    let mut x = zero_vec(n);
    for (r, &p) in m.iter().zip(&piv) {
        x[p] = r[n].clone();
    }
    Some(x)
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let d = common_denominator(v);
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(d.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn content(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |acc, &x| acc.gcd(&x))
}

/// Unimodular `U` and its inverse with `U c = e_1`, for primitive `c`.
pub fn unimodular_completion(c: &[i64]) -> Result<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let k = c.len();
    if k == 0 || content(c) != 1 {
        return Err(Error::Precondition("vector is not primitive".into()));
    }
    let mut u: Vec<Vec<i64>> = (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
    let mut uinv = u.clone();
    let mut v = c.to_vec();
    // row op R_i += f R_j on (u, v) corresponds to column op C_j -= f C_i on uinv
    let op = |u: &mut Vec<Vec<i64>>, uinv: &mut Vec<Vec<i64>>, v: &mut Vec<i64>, i: usize, j: usize, f: i64| {
        v[i] += f * v[j];
        for col in 0..k {
            u[i][col] += f * u[j][col];
        }
        for row in 0..k {
            uinv[row][j] -= f * uinv[row][i];
        }
    };
    loop {
        let nz: Vec<usize> = (0..k).filter(|&i| v[i] != 0).collect();
        if nz.len() == 1 {
            let p = nz[0];
            if p != 0 {
                // move the entry to the first slot by three elementary ops (a signed swap)
                op(&mut u, &mut uinv, &mut v, 0, p, 1);
                op(&mut u, &mut uinv, &mut v, p, 0, -1);
            }
            if v[0] < 0 {
                for col in 0..k {
                    u[0][col] = -u[0][col];
                }
                for row in 0..k {
                    uinv[row][0] = -uinv[row][0];
                }
                v[0] = -v[0];
            }
            debug_assert_eq!(v[0], 1);
            return Ok((u, uinv));
        }
        let p = *nz.iter().min_by_key(|&&i| v[i].abs()).unwrap();
        for &i in &nz {
            if i != p {
                let f = -v[i].div_euclid(v[p]);
                op(&mut u, &mut uinv, &mut v, i, p, f);
            }
        }
    }
}

pub fn mat_vec(m: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Determinant of a small integer matrix.
pub fn det(m: &[Vec<i64>]) -> BigInt {
    let rows: Vec<QVec> = m.iter().map(|r| to_qvec(r)).collect();
    let n = rows.len();
    let mut a = rows;
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return BigInt::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        for i in c + 1..n {
            let f = &a[i][c] / &a[c][c];
            for j in c..n {
                let t = &a[c][j] * &f;
                a[i][j] -= t;
            }
        }
    }
    d.to_integer()
}

/// Gcd of the maximal minors of a `k x r` integer matrix given by its columns.
/// Equal to one iff the columns span a saturated sublattice.
pub fn maximal_minor_gcd(cols: &[Vec<i64>]) -> BigInt {
    let r = cols.len();
    let k = cols.first().map_or(0, |c| c.len());
    let mut g = BigInt::zero();
    let mut idx: Vec<usize> = (0..r).collect();
    if r > k {
        return g;
    }
    loop {
        let m: Vec<Vec<i64>> = idx.iter().map(|&i| cols.iter().map(|c| c[i]).collect()).collect();
        g = g.gcd(&det(&m));
        // next combination
        let mut i = r;
        loop {
            if i == 0 {
                return g.abs();
            }
            i -= 1;
            if idx[i] < k - r + i {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn q_to_i64(x: &Q) -> Option<i64> {
    if x.is_integer() {
        x.to_integer().to_i64()
    } else {
        None
    }
}
