//! Exact norm values and radius exponents.
//!
//! Every norm in this crate is a power of p with a rational exponent; values
//! are compared as exact rationals, never as floats.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};

pub type Rat = Rational64;

/// A radius rho = p^{-e} with 0 < e < 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadiusExponent(Rat);

impl RadiusExponent {
    pub fn new(e: Rat) -> Result<Self> {
        if e <= Rat::from_integer(0) || e >= Rat::from_integer(1) {
            return Err(Error::InvalidRadius(e.to_string()));
        }
        Ok(Self(e))
    }

    pub fn from_fraction(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidRadius(format!("{num}/{den}")));
        }
        Self::new(Rat::new(num, den))
    }

    /// The reference radius p^{-1/2} used by the rewriting algorithm.
    pub fn reference() -> Self {
        Self(Rat::new(1, 2))
    }

    pub fn exponent(&self) -> Rat {
        self.0
    }
}

/// A norm value p^{-e} (exact rational e) or the zero sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NormValue(Option<Rat>);

impl NormValue {
    pub fn zero() -> Self {
        Self(None)
    }

    pub fn from_exponent(e: Rat) -> Self {
        Self(Some(e))
    }

    pub fn one() -> Self {
        Self(Some(Rat::from_integer(0)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_none()
    }

    /// Exponent e with value = p^{-e}; None for the zero norm (e = +infinity).
    pub fn exponent(&self) -> Option<Rat> {
        self.0
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self.0, other.0) {
            (Some(a), Some(b)) => Self(Some(a + b)),
            _ => Self(None),
        }
    }

    /// Ratio self/other; None if other is zero.
    pub fn div(&self, other: &Self) -> Option<Self> {
        match (self.0, other.0) {
            (_, None) => None,
            (None, Some(_)) => Some(Self(None)),
            (Some(a), Some(b)) => Some(Self(Some(a - b))),
        }
    }
}

impl PartialOrd for NormValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NormValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0, other.0) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            // larger exponent means smaller value
            (Some(a), Some(b)) => b.cmp(&a),
        }
    }
}

impl std::fmt::Display for NormValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            None => write!(f, "0"),
            Some(e) => write!(f, "p^{}", -e),
        }
    }
}

/// Parse a rational `a/b` or integer `a`.
pub fn parse_rational(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
        let d: i64 = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
        if d == 0 {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        Ok(Rat::new(n, d))
    } else {
        let n: i64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
        Ok(Rat::from_integer(n))
    }
}
