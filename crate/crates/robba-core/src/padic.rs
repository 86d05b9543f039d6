//! Exact p-adic scalars at finite precision.
//!
//! A nonzero scalar is `p^val * unit` where the unit residue is known modulo
//! `p^prec`. Cancellation in addition reduces `prec`; multiplication keeps the
//! minimum of the operands' precisions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global precision configuration: an odd prime and a digit count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    p: u64,
    n: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PrecisionPolicy {
    /// p must be an odd prime (the kappa = 2 conventions for p = 2 are out of
    /// scope) and p^n must fit comfortably in a u64.
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        if n < 1 || p.checked_pow(n).map_or(true, |m| m >= 1 << 62) {
            return Err(Error::InvalidPrecision { p, n });
        }
        Ok(Self { p, n })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn digits(&self) -> u32 {
        self.n
    }

    /// p^digits, for digits <= n (checked at construction).
    pub fn modulus(&self, digits: u32) -> u64 {
        self.p.pow(digits)
    }
}

/// An element of Q_p known to finite precision.
///
/// Zero is exact (valuation +infinity); a nonzero value stores its valuation
/// and a unit residue mod p^prec with `unit` coprime to p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u64,
    val: i64,
    unit: u64,
    prec: u32,
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

/// v_p(i!) by Legendre's formula.
pub fn factorial_valuation(p: u64, i: u64) -> u64 {
    let mut v = 0;
    let mut q = p;
    while q <= i {
        v += i / q;
        match q.checked_mul(p) {
            Some(next) => q = next,
            None => break,
        }
    }
    v
}

impl PadicScalar {
    pub fn zero(policy: PrecisionPolicy) -> Self {
        Self {
            p: policy.p(),
            val: 0,
            unit: 0,
            prec: 0,
        }
    }

    pub fn one(policy: PrecisionPolicy) -> Self {
        Self {
            p: policy.p(),
            val: 0,
            unit: 1,
            prec: policy.digits(),
        }
    }

    /// Reduce an exact integer to policy precision.
    pub fn from_bigint(policy: PrecisionPolicy, x: &BigInt) -> Self {
        if x.is_zero() {
            return Self::zero(policy);
        }
        let p = BigInt::from(policy.p());
        let mut v = 0i64;
        let mut rest = x.clone();
        while (&rest % &p).is_zero() {
            rest /= &p;
            v += 1;
        }
        let m = BigInt::from(policy.modulus(policy.digits()));
        let unit = rest.mod_floor(&m).to_u64().expect("residue fits u64");
        Self {
            p: policy.p(),
            val: v,
            unit,
            prec: policy.digits(),
        }
    }

    pub fn from_integer(policy: PrecisionPolicy, x: i64) -> Self {
        Self::from_bigint(policy, &BigInt::from(x))
    }

    /// p^v * u with u an exact integer unit lift.
    pub fn from_parts(policy: PrecisionPolicy, val: i64, unit: i64) -> Result<Self> {
        if unit == 0 {
            return Ok(Self::zero(policy));
        }
        let s = Self::from_bigint(policy, &BigInt::from(unit));
        Ok(Self {
            val: s.val + val,
            ..s
        })
    }

    fn from_residue(p: u64, residue: u64, digits: u32) -> Self {
        // residue known mod p^digits; strips the valuation off the residue.
        if residue == 0 {
            return Self {
                p,
                val: 0,
                unit: 0,
                prec: 0,
            };
        }
        let mut v = 0u32;
        let mut u = residue;
        while u % p == 0 {
            u /= p;
            v += 1;
        }
        let prec = digits - v;
        Self {
            p,
            val: v as i64,
            unit: u % p.pow(prec),
            prec,
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.unit == 0
    }

    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// The unit residue reduced to `digits` known digits.
    pub fn unit_mod(&self, digits: u32) -> u64 {
        debug_assert!(digits <= self.prec);
        self.unit % self.p.pow(digits)
    }

    fn check_p(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_p(other)?;
        if self.is_zero() {
            return Ok(*other);
        }
        if other.is_zero() {
            return Ok(*self);
        }
        let v = self.val.min(other.val);
        // absolute precision is the min of the operands'
        let abs = (self.val + self.prec as i64).min(other.val + other.prec as i64);
        let digits = abs - v;
        if digits <= 0 {
            // every known digit cancels against the unknown region
            return Ok(Self {
                p: self.p,
                val: 0,
                unit: 0,
                prec: 0,
            });
        }
        let digits = digits as u32;
        let m = self.p.pow(digits);
        let lift = |x: &Self| {
            let shift = (x.val - v) as u32;
            if shift >= digits {
                0
            } else {
                mulmod(x.unit % m, powmod(x.p, shift as u64, m), m)
            }
        };
        let sum = (lift(self) + lift(other)) % m;
        let mut r = Self::from_residue(self.p, sum, digits);
        r.val += v;
        Ok(r)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let m = self.p.pow(self.prec);
        Self {
            unit: m - self.unit,
            ..*self
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_p(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self {
                p: self.p,
                val: 0,
                unit: 0,
                prec: 0,
            });
        }
        let prec = self.prec.min(other.prec);
        let m = self.p.pow(prec);
        Ok(Self {
            p: self.p,
            val: self.val + other.val,
            unit: mulmod(self.unit % m, other.unit % m, m),
            prec,
        })
    }

    /// Multiplicative inverse; the unit part is inverted mod p^prec.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::NotAUnit("zero has no inverse".into()));
        }
        let m = self.p.pow(self.prec);
        // p^prec is odd so the order of the unit group is phi(p^prec)
        let phi = m / self.p * (self.p - 1);
        let inv = powmod(self.unit, phi - 1, m);
        debug_assert_eq!(mulmod(inv, self.unit, m), 1);
        Ok(Self {
            unit: inv,
            val: -self.val,
            ..*self
        })
    }

    /// The p-adic binomial coefficient C(x, i) for x in Z_p, i >= 0.
    ///
    /// Works on the canonical lift of the known residue, so the result loses
    /// v_p(i!) digits of precision relative to the input.
    pub fn binomial(&self, i: u64) -> Result<Self> {
        if self.valuation().map_or(false, |v| v < 0) {
            return Err(Error::InsufficientPrecision(
                "binomial requires an argument in Z_p".into(),
            ));
        }
        if i == 0 {
            let prec = if self.is_zero() { self.prec_cap() } else { self.prec };
            return Ok(Self {
                p: self.p,
                val: 0,
                unit: 1,
                prec,
            });
        }
        let avail = if self.is_zero() {
            i64::MAX
        } else {
            self.val + self.prec as i64
        };
        let loss = factorial_valuation(self.p, i) as i64;
        if avail != i64::MAX && avail - loss <= 0 {
            return Err(Error::InsufficientPrecision(format!(
                "binomial index {i} needs {loss} guard digits, only {avail} absolute digits known"
            )));
        }
        let lift = if self.is_zero() {
            BigInt::zero()
        } else {
            BigInt::from(self.unit) * BigInt::from(self.p).pow(self.val as u32)
        };
        let c = binomial_int(&lift, i);
        if c.is_zero() {
            // only possible for exact small nonnegative integer lifts
            return Ok(Self {
                p: self.p,
                val: 0,
                unit: 0,
                prec: 0,
            });
        }
        let mut r = {
            let p = BigInt::from(self.p);
            let mut v = 0i64;
            let mut rest = c.clone();
            while (&rest % &p).is_zero() {
                rest /= &p;
                v += 1;
            }
            let known = if avail == i64::MAX {
                self.prec_cap()
            } else {
                ((avail - loss - v).max(0) as u32).min(self.prec_cap())
            };
            if known == 0 {
                return Err(Error::InsufficientPrecision(format!(
                    "binomial index {i}: no certified digits remain"
                )));
            }
            let m = BigInt::from(self.p).pow(known);
            let unit = rest.mod_floor(&m).to_u64().expect("residue fits u64");
            Self {
                p: self.p,
                val: v,
                unit,
                prec: known,
            }
        };
        if r.unit == 0 {
            r = Self {
                p: self.p,
                val: 0,
                unit: 0,
                prec: 0,
            };
        }
        Ok(r)
    }

    /// Forget digits down to `digits` known digits (no-op if already coarser).
    pub fn truncate_to(&self, digits: u32) -> Self {
        if self.is_zero() || digits >= self.prec {
            return *self;
        }
        let d = digits.max(1);
        Self {
            unit: self.unit % self.p.pow(d),
            prec: d,
            ..*self
        }
    }

    fn prec_cap(&self) -> u32 {
        let mut n = 38u32; // 3^38 < 2^62; shrink for larger p
        while self.p.checked_pow(n).map_or(true, |m| m >= 1 << 62) {
            n -= 1;
        }
        n
    }
}

/// Exact integer binomial C(x, i) = x(x-1)...(x-i+1)/i! for x in Z.
pub fn binomial_int(x: &BigInt, i: u64) -> BigInt {
    let mut num = BigInt::from(1);
    for k in 0..i {
        num *= x - BigInt::from(k);
    }
    let mut den = BigInt::from(1);
    for k in 2..=i {
        den *= BigInt::from(k);
    }
    let (q, r) = num.div_rem(&den);
    debug_assert!(r.is_zero());
    q
}

// Text form `p^v*u`; zero prints as `0`.
impl std::fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else if self.val == 0 {
            write!(f, "{}", self.unit)
        } else {
            write!(f, "p^{}*{}", self.val, self.unit)
        }
    }
}

/// Parse `p^v*u`, a bare integer, or `0`.
pub fn parse_scalar(policy: PrecisionPolicy, s: &str) -> Result<PadicScalar> {
    let s = s.trim();
    if s == "0" {
        return Ok(PadicScalar::zero(policy));
    }
    if let Some(rest) = s.strip_prefix("p^") {
        let (v, u) = rest
            .split_once('*')
            .ok_or_else(|| Error::Parse(format!("expected p^v*u, got `{s}`")))?;
        let val: i64 = v
            .parse()
            .map_err(|_| Error::Parse(format!("bad valuation `{v}`")))?;
        let unit: i64 = u
            .parse()
            .map_err(|_| Error::Parse(format!("bad unit `{u}`")))?;
        PadicScalar::from_parts(policy, val, unit)
    } else {
        let x: i64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer `{s}`")))?;
        Ok(PadicScalar::from_integer(policy, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(p: u64, n: u32) -> PrecisionPolicy {
        PrecisionPolicy::new(p, n).unwrap()
    }

    #[test]
    fn rejects_two_and_composites() {
        assert!(PrecisionPolicy::new(2, 4).is_err());
        assert!(PrecisionPolicy::new(9, 4).is_err());
        assert!(PrecisionPolicy::new(1, 4).is_err());
        assert!(PrecisionPolicy::new(3, 0).is_err());
    }

    #[test]
    fn add_records_cancellation() {
        // (p*1) + (p*(p-1)) = p^2 with one digit of the unit cancelled
        let pol = policy(5, 4);
        let x = PadicScalar::from_parts(pol, 1, 1).unwrap();
        let y = PadicScalar::from_parts(pol, 1, 4).unwrap();
        let s = x.add(&y).unwrap();
        assert_eq!(s.valuation(), Some(2));
        assert_eq!(s.unit_mod(s.precision()), 1);
        assert_eq!(s.precision(), 3);
    }

    #[test]
    fn add_identity_and_carry() {
        let pol = policy(5, 4);
        let x = PadicScalar::from_integer(pol, 7);
        assert_eq!(x.add(&PadicScalar::zero(pol)).unwrap(), x);
        let one = PadicScalar::one(pol);
        let four = PadicScalar::from_integer(pol, 4);
        let s = one.add(&four).unwrap();
        assert_eq!(s.valuation(), Some(1));
        assert_eq!(s.unit_mod(3), 1);
    }

    #[test]
    fn mul_examples() {
        let pol = policy(3, 2);
        let a = PadicScalar::from_parts(pol, 2, 3).unwrap(); // p^2*3 has val 3
        let b = PadicScalar::from_parts(pol, -1, 2).unwrap();
        assert_eq!(a.mul(&b).unwrap().valuation(), Some(2));
        let x = PadicScalar::from_integer(pol, 7);
        assert_eq!(x.mul(&PadicScalar::one(pol)).unwrap(), x);
        let two = PadicScalar::from_integer(pol, 2);
        let four = two.mul(&two).unwrap();
        assert_eq!(four.valuation(), Some(0));
        assert_eq!(four.unit_mod(2), 4);
    }

    #[test]
    fn binomial_examples() {
        let pol = policy(5, 4);
        let p = PadicScalar::from_integer(pol, 5);
        let c = p.binomial(1).unwrap();
        assert_eq!(c.valuation(), Some(1));
        assert_eq!(c.unit_mod(1), 1);

        let minus_one = PadicScalar::from_integer(pol, -1);
        let c = minus_one.binomial(2).unwrap();
        assert_eq!(c.valuation(), Some(0));
        assert_eq!(c.unit_mod(c.precision().min(4)), 1);

        let x = PadicScalar::from_integer(pol, 17);
        let c = x.binomial(0).unwrap();
        assert_eq!(c.valuation(), Some(0));
        assert_eq!(c.unit_mod(1), 1);
    }

    #[test]
    fn binomial_integrality_and_vandermonde() {
        let pol = policy(3, 5);
        for xv in [-7i64, -1, 0, 2, 9, 12] {
            for yv in [-4i64, 1, 6] {
                let x = PadicScalar::from_integer(pol, xv);
                let y = PadicScalar::from_integer(pol, yv);
                for i in 0..=6u64 {
                    let c = x.binomial(i).unwrap();
                    assert!(c.valuation().map_or(true, |v| v >= 0), "C({xv},{i}) not integral");
                    // Vandermonde: sum_k C(x,k) C(y,i-k) = C(x+y,i)
                    let mut acc = PadicScalar::zero(pol);
                    for k in 0..=i {
                        let t = x.binomial(k).unwrap().mul(&y.binomial(i - k).unwrap()).unwrap();
                        acc = acc.add(&t).unwrap();
                    }
                    let whole = PadicScalar::from_integer(pol, xv + yv).binomial(i).unwrap();
                    let d = acc.sub(&whole).unwrap();
                    assert!(
                        d.valuation().map_or(true, |v| v >= 3),
                        "Vandermonde failed at x={xv}, y={yv}, i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn valuation_additivity_and_ultrametric() {
        let pol = policy(5, 6);
        let samples = [
            PadicScalar::from_integer(pol, 7),
            PadicScalar::from_parts(pol, 2, 3).unwrap(),
            PadicScalar::from_parts(pol, -1, 11).unwrap(),
            PadicScalar::from_integer(pol, -50),
        ];
        for x in &samples {
            for y in &samples {
                let prod = x.mul(y).unwrap();
                assert_eq!(
                    prod.valuation().unwrap(),
                    x.valuation().unwrap() + y.valuation().unwrap()
                );
                let s = x.add(y).unwrap();
                if let Some(sv) = s.valuation() {
                    assert!(sv >= x.valuation().unwrap().min(y.valuation().unwrap()));
                }
                if x.valuation() != y.valuation() {
                    assert_eq!(
                        s.valuation().unwrap(),
                        x.valuation().unwrap().min(y.valuation().unwrap())
                    );
                }
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let pol = policy(5, 4);
        for s in ["0", "p^2*3", "7", "p^-1*2"] {
            let x = parse_scalar(pol, s).unwrap();
            let y = parse_scalar(pol, &x.to_string()).unwrap();
            assert_eq!(x, y);
        }
    }
}
