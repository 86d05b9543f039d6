//! Monomial indices alpha in Z^d for b^alpha = b_1^{a_1} ... b_d^{a_d}.

use serde::{Deserialize, Serialize};

/// An exponent vector in Z^d. Signed total degree follows the main-text
/// convention deg(alpha) = sum_i alpha_i.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonomialIndex(pub Vec<i64>);

impl MonomialIndex {
    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().sum()
    }

    /// The appendix's |alpha| = sum |alpha_i|, used for enumeration order.
    pub fn abs_degree(&self) -> i64 {
        self.0.iter().map(|a| a.abs()).sum()
    }

    pub fn max_abs_coord(&self) -> i64 {
        self.0.iter().map(|a| a.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, k: i64) -> Self {
        Self(self.0.iter().map(|a| a * k).collect())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&a| a >= 0)
    }
}

impl std::fmt::Display for MonomialIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if a == 1 {
                write!(f, "b{}", i + 1)?;
            } else {
                write!(f, "b{}^{}", i + 1, a)?;
            }
        }
        Ok(())
    }
}

/// All alpha in Z^d with |alpha_i| <= coord_cap and deg_lo <= deg <= deg_hi,
/// in lexicographic order.
pub fn enumerate_indices(d: usize, coord_cap: i64, deg_lo: i64, deg_hi: i64) -> Vec<MonomialIndex> {
    let mut out = Vec::new();
    let mut cur = vec![-coord_cap; d];
    loop {
        let deg: i64 = cur.iter().sum();
        if deg >= deg_lo && deg <= deg_hi {
            out.push(MonomialIndex(cur.clone()));
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < coord_cap {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -coord_cap;
                }
                break;
            }
        }
    }
}
