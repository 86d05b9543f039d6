//! Truncation policy and the error ledger.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{NormValue, RadiusExponent, Rat};
use crate::padic::PrecisionPolicy;

/// Where a finite series is cut: coefficient precision N, a signed-degree
/// window, a per-coordinate cap A, and a drop threshold T on the reference
/// norm exponent (terms with exponent >= T are discarded into the ledger).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub prec: PrecisionPolicy,
    pub deg_lo: i64,
    pub deg_hi: i64,
    pub cap: i64,
    pub drop_exp: Rat,
    pub rho_ref: RadiusExponent,
}

impl TruncationPolicy {
    pub fn new(
        prec: PrecisionPolicy,
        deg_lo: i64,
        deg_hi: i64,
        cap: i64,
        drop_exp: Rat,
        rho_ref: RadiusExponent,
    ) -> Result<Self> {
        if deg_lo > 0 || deg_hi < 0 {
            return Err(Error::InvalidPolicy(format!(
                "degree window [{deg_lo}, {deg_hi}] must contain 0"
            )));
        }
        if cap < deg_hi.max(-deg_lo) {
            return Err(Error::InvalidPolicy(format!(
                "coordinate cap {cap} smaller than the degree window"
            )));
        }
        // coefficient truncation alone must not reach the threshold:
        // T <= N + |deg_lo| * e_ref
        let limit = Rat::from_integer(prec.digits() as i64)
            + Rat::from_integer(-deg_lo) * rho_ref.exponent();
        if drop_exp > limit {
            return Err(Error::InvalidPolicy(format!(
                "threshold {drop_exp} exceeds N + |deg_lo|*e_ref = {limit}"
            )));
        }
        if drop_exp <= Rat::zero() {
            return Err(Error::InvalidPolicy("threshold must be positive".into()));
        }
        Ok(Self {
            prec,
            deg_lo,
            deg_hi,
            cap,
            drop_exp,
            rho_ref,
        })
    }

    pub fn with_default_rho(
        prec: PrecisionPolicy,
        deg_lo: i64,
        deg_hi: i64,
        cap: i64,
        drop_exp: Rat,
    ) -> Result<Self> {
        Self::new(prec, deg_lo, deg_hi, cap, drop_exp, RadiusExponent::reference())
    }

    /// The intersection of two policies (tightest common window).
    pub fn meet(&self, other: &Self) -> Result<Self> {
        if self.prec != other.prec || self.rho_ref != other.rho_ref {
            return Err(Error::InvalidPolicy(
                "cannot mix precision policies or reference radii".into(),
            ));
        }
        Self::new(
            self.prec,
            self.deg_lo.max(other.deg_lo),
            self.deg_hi.min(other.deg_hi),
            self.cap.min(other.cap),
            self.drop_exp.min(other.drop_exp),
            self.rho_ref,
        )
    }
}

/// Certified bound on everything a computation has discarded: all dropped
/// content has reference norm <= p^{-exponent}. `None` means nothing was
/// dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct ErrBound(Option<Rat>);

impl ErrBound {
    pub fn none() -> Self {
        Self(None)
    }

    pub fn from_exponent(e: Rat) -> Self {
        Self(Some(e))
    }

    pub fn exponent(&self) -> Option<Rat> {
        self.0
    }

    pub fn is_none(&self) -> bool {
        self.0.is_none()
    }

    /// Account for newly dropped content of norm <= p^{-e}.
    pub fn absorb(&mut self, e: Rat) {
        self.0 = Some(match self.0 {
            None => e,
            Some(cur) => cur.min(e),
        });
    }

    pub fn combine(&self, other: &Self) -> Self {
        match (self.0, other.0) {
            (None, b) => Self(b),
            (a, None) => Self(a),
            (Some(a), Some(b)) => Self(Some(a.min(b))),
        }
    }

    /// Shift the bound by an extra norm-exponent factor (e.g. when the
    /// discarded content gets multiplied by something of norm p^{-shift}).
    pub fn shifted(&self, shift: Rat) -> Self {
        Self(self.0.map(|e| e + shift))
    }

    pub fn as_norm(&self) -> NormValue {
        match self.0 {
            None => NormValue::zero(),
            Some(e) => NormValue::from_exponent(e),
        }
    }

    /// True if a value of the given norm is strictly above the ledger bound,
    /// i.e. the value is certified nonzero content rather than noise.
    pub fn certifies(&self, value: &NormValue) -> bool {
        match (self.0, value.exponent()) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(e), Some(v)) => v < e,
        }
    }
}

impl std::fmt::Display for ErrBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            None => write!(f, "exact"),
            Some(e) => write!(f, "<=p^{}", -e),
        }
    }
}
