//! Multi-index arithmetic: factorials, the componentwise partial order,
//! multi-binomials and differences.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of natural numbers, one entry per generator or coordinate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// Unit vector `e_i` of the given length.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = vec![0; len];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Componentwise sum. Panics on length mismatch (internal use only).
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.len(), other.len(), "multi-index length mismatch");
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All multi-indices of this length with total degree ≤ `d`, in lexicographic order.
    pub fn all_up_to(len: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; len];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if pos == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for e in 0..=left {
                cur[pos] = e;
                rec(pos + 1, left - e, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, d, &mut cur, &mut out);
        out
    }

    /// All `p` with `p ≤ self` componentwise.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::with_capacity(self.len()))];
        for &m in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (m as usize + 1));
            for p in &out {
                for e in 0..=m {
                    let mut q = p.0.clone();
                    q.push(e);
                    next.push(MultiIndex(q));
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

fn factorial(n: u32) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

fn binomial(n: u32, k: u32) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn same_len(p: &MultiIndex, m: &MultiIndex) -> Result<()> {
    if p.len() != m.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: m.len(),
        });
    }
    Ok(())
}

/// `m! = ∏ mᵢ!`, exact.
pub fn mfactorial(m: &MultiIndex) -> BigUint {
    m.0.iter().fold(BigUint::one(), |acc, &e| acc * factorial(e))
}

/// `p ≤ m` componentwise.
pub fn mleq(p: &MultiIndex, m: &MultiIndex) -> Result<bool> {
    same_len(p, m)?;
    Ok(p.0.iter().zip(&m.0).all(|(a, b)| a <= b))
}

/// Product of binomials `∏ C(mᵢ, pᵢ)`.
pub fn mcomb(m: &MultiIndex, p: &MultiIndex) -> Result<BigUint> {
    if !mleq(p, m)? {
        return Err(Error::Precondition(format!("{p:?} is not ≤ {m:?}")));
    }
    Ok(m.0
        .iter()
        .zip(&p.0)
        .fold(BigUint::one(), |acc, (&mi, &pi)| acc * binomial(mi, pi)))
}

/// Componentwise difference `m − p`.
pub fn msub(m: &MultiIndex, p: &MultiIndex) -> Result<MultiIndex> {
    if !mleq(p, m)? {
        return Err(Error::Precondition(format!("{p:?} is not ≤ {m:?}")));
    }
    Ok(MultiIndex(m.0.iter().zip(&p.0).map(|(a, b)| a - b).collect()))
}
