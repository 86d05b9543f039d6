//! Sparse truncated Laurent series sum_alpha d_alpha b^alpha with exact norms
//! and the commutative oracle product.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomial::MonomialIndex;
use crate::norms::{parse_rational, NormValue, RadiusExponent, Rat};
use crate::padic::{parse_scalar, PadicScalar, PrecisionPolicy};
use crate::policy::{ErrBound, TruncationPolicy};

/// Reference-norm exponent of a single term c * b^alpha at radius p^{-e}:
/// v(c) + deg(alpha) * e. None for a zero coefficient.
pub fn term_exponent(coeff: &PadicScalar, alpha: &MonomialIndex, e: Rat) -> Option<Rat> {
    coeff
        .valuation()
        .map(|v| Rat::from_integer(v) + Rat::from_integer(alpha.degree()) * e)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentSeries {
    d: usize,
    trunc: TruncationPolicy,
    terms: BTreeMap<MonomialIndex, PadicScalar>,
    err: ErrBound,
}

/// Accumulates raw terms and applies the truncation policy once at the end,
/// so every construction path cuts the series identically.
pub struct SeriesBuilder {
    d: usize,
    trunc: TruncationPolicy,
    pending: BTreeMap<MonomialIndex, PadicScalar>,
    err: ErrBound,
    strict: bool,
}

impl SeriesBuilder {
    pub fn new(d: usize, trunc: TruncationPolicy) -> Self {
        Self {
            d,
            trunc,
            pending: BTreeMap::new(),
            err: ErrBound::none(),
            strict: false,
        }
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.trunc
    }

    pub fn absorb_err(&mut self, other: &ErrBound) {
        self.err = self.err.combine(other);
    }

    pub fn push(&mut self, alpha: MonomialIndex, coeff: PadicScalar) -> Result<()> {
        if alpha.dim() != self.d {
            return Err(Error::DimensionMismatch(alpha.dim(), self.d));
        }
        if coeff.is_zero() {
            return Ok(());
        }
        match self.pending.entry(alpha) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&coeff)?;
                if s.is_zero() {
                    e.remove();
                } else {
                    e.insert(s);
                }
            }
        }
        Ok(())
    }

    /// Drop out-of-window and below-threshold terms, recording what was lost.
    pub fn finish(self) -> Result<LaurentSeries> {
        let t = &self.trunc;
        let e_ref = t.rho_ref.exponent();
        let mut err = self.err;
        let mut terms = BTreeMap::new();
        for (alpha, coeff) in self.pending {
            let exp = term_exponent(&coeff, &alpha, e_ref).expect("no zero coefficients pending");
            let deg = alpha.degree();
            let in_window =
                deg >= t.deg_lo && deg <= t.deg_hi && alpha.max_abs_coord() <= t.cap;
            if in_window && exp < t.drop_exp {
                terms.insert(alpha, coeff);
            } else {
                if exp < t.drop_exp {
                    // window/cap cut above the certified threshold
                    if self.strict {
                        return Err(Error::CapOverflow {
                            norm_exp: exp.to_string(),
                            threshold: t.drop_exp.to_string(),
                        });
                    }
                    err.absorb(exp);
                } else {
                    err.absorb(t.drop_exp);
                }
            }
        }
        Ok(LaurentSeries {
            d: self.d,
            trunc: self.trunc,
            terms,
            err,
        })
    }
}

impl LaurentSeries {
    pub fn zero(d: usize, trunc: TruncationPolicy) -> Self {
        Self {
            d,
            trunc,
            terms: BTreeMap::new(),
            err: ErrBound::none(),
        }
    }

    pub fn one(d: usize, trunc: TruncationPolicy) -> Self {
        Self::from_scalar(d, trunc, PadicScalar::one(trunc.prec))
    }

    pub fn from_scalar(d: usize, trunc: TruncationPolicy, c: PadicScalar) -> Self {
        let mut b = SeriesBuilder::new(d, trunc);
        b.push(MonomialIndex::zero(d), c).expect("dimension matches");
        b.finish().expect("non-strict")
    }

    pub fn monomial(
        d: usize,
        trunc: TruncationPolicy,
        alpha: MonomialIndex,
        c: PadicScalar,
    ) -> Result<Self> {
        let mut b = SeriesBuilder::new(d, trunc);
        b.push(alpha, c)?;
        b.finish()
    }

    pub fn generator(d: usize, trunc: TruncationPolicy, i: usize) -> Self {
        Self::monomial(
            d,
            trunc,
            MonomialIndex::unit(d, i),
            PadicScalar::one(trunc.prec),
        )
        .expect("unit index in window")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.trunc
    }

    pub fn err(&self) -> ErrBound {
        self.err
    }

    pub fn with_err(mut self, err: ErrBound) -> Self {
        self.err = err;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialIndex, &PadicScalar)> {
        self.terms.iter()
    }

    /// Terms in reference-norm decreasing order, ties by degree then lex.
    pub fn sorted_terms(&self) -> Vec<(&MonomialIndex, &PadicScalar)> {
        let e = self.trunc.rho_ref.exponent();
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, ca), (b, cb)| {
            let ea = term_exponent(ca, a, e).expect("stored coefficients nonzero");
            let eb = term_exponent(cb, b, e).expect("stored coefficients nonzero");
            ea.cmp(&eb)
                .then(a.degree().cmp(&b.degree()))
                .then(a.cmp(b))
        });
        v
    }

    pub fn coefficient(&self, alpha: &MonomialIndex) -> PadicScalar {
        self.terms
            .get(alpha)
            .copied()
            .unwrap_or_else(|| PadicScalar::zero(self.trunc.prec))
    }

    pub fn constant_term(&self) -> PadicScalar {
        self.coefficient(&MonomialIndex::zero(self.d))
    }

    pub fn norm_rho(&self, rho: RadiusExponent) -> NormValue {
        let e = rho.exponent();
        self.terms
            .iter()
            .filter_map(|(a, c)| term_exponent(c, a, e))
            .map(NormValue::from_exponent)
            .max()
            .unwrap_or_else(NormValue::zero)
    }

    pub fn norm_two_radius(&self, rho1: RadiusExponent, rho2: RadiusExponent) -> NormValue {
        self.norm_rho(rho1).max(self.norm_rho(rho2))
    }

    pub fn sup_norm(&self) -> NormValue {
        self.terms
            .values()
            .filter_map(|c| c.valuation())
            .map(|v| NormValue::from_exponent(Rat::from_integer(v)))
            .max()
            .unwrap_or_else(NormValue::zero)
    }

    /// The diagonal norms |x|_{r,r} along a radius sequence; the tail should
    /// approach sup_norm for bounded elements.
    pub fn radius_limit_check(&self, radii: &[RadiusExponent]) -> Vec<NormValue> {
        radii.iter().map(|r| self.norm_rho(*r)).collect()
    }

    fn check_compat(&self, other: &Self) -> Result<TruncationPolicy> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(self.d, other.d));
        }
        self.trunc.meet(&other.trunc)
    }

    pub fn add_series(&self, other: &Self) -> Result<Self> {
        let trunc = self.check_compat(other)?;
        let mut b = SeriesBuilder::new(self.d, trunc);
        b.absorb_err(&self.err);
        b.absorb_err(&other.err);
        for (a, c) in &self.terms {
            b.push(a.clone(), *c)?;
        }
        for (a, c) in &other.terms {
            b.push(a.clone(), *c)?;
        }
        b.finish()
    }

    pub fn negate(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub_series(&self, other: &Self) -> Result<Self> {
        self.add_series(&other.negate())
    }

    pub fn scale(&self, c: &PadicScalar) -> Result<Self> {
        let mut b = SeriesBuilder::new(self.d, self.trunc);
        // scaling multiplies the discarded content's norm too
        if let Some(v) = c.valuation() {
            b.absorb_err(&self.err.shifted(Rat::from_integer(v)));
            for (a, x) in &self.terms {
                b.push(a.clone(), c.mul(x)?)?;
            }
        }
        b.finish()
    }

    /// The abelianized Cauchy product: the intrinsic multiplication when the
    /// chart is abelian, and the independent oracle otherwise.
    pub fn mul_commutative(&self, other: &Self) -> Result<Self> {
        let trunc = self.check_compat(other)?;
        let mut b = SeriesBuilder::new(self.d, trunc);
        b.absorb_err(&mul_err(self, other));
        for (a, ca) in &self.terms {
            for (bb, cb) in &other.terms {
                b.push(a.add(bb), ca.mul(cb)?)?;
            }
        }
        b.finish()
    }
}

/// Error ledger for a product: dropped content of one factor meets the other
/// factor's full norm, and the two dropped parts meet each other. The bound is
/// min(E_x + n_y, E_y + n_x, E_x + E_y) in exponents at the reference radius.
pub fn mul_err(x: &LaurentSeries, y: &LaurentSeries) -> ErrBound {
    let rho = x.trunc.rho_ref;
    let nx = x.norm_rho(rho).exponent();
    let ny = y.norm_rho(rho).exponent();
    let mut out = ErrBound::none();
    if let Some(ex) = x.err.exponent() {
        if let Some(n) = ny {
            out.absorb(ex + n);
        }
        if let Some(ey) = y.err.exponent() {
            out.absorb(ex + ey);
        }
    }
    if let Some(ey) = y.err.exponent() {
        if let Some(n) = nx {
            out.absorb(ey + n);
        }
    }
    out
}

// --- serialization ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermJson {
    alpha: Vec<i64>,
    val: i64,
    unit: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prec: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct PrecJson {
    p: u64,
    #[serde(rename = "N")]
    n: u32,
    mlo: i64,
    mhi: i64,
    #[serde(rename = "A")]
    a: i64,
    #[serde(rename = "T")]
    t: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    err: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    d: usize,
    terms: Vec<TermJson>,
    prec: PrecJson,
}

fn rat_to_string(r: Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl LaurentSeries {
    pub fn to_json(&self) -> String {
        let t = &self.trunc;
        let terms = self
            .sorted_terms()
            .into_iter()
            .map(|(a, c)| TermJson {
                alpha: a.0.clone(),
                val: c.valuation().expect("stored coefficients nonzero"),
                unit: c.unit_mod(c.precision()),
                prec: (c.precision() < t.prec.digits()).then(|| c.precision()),
            })
            .collect();
        let prec = PrecJson {
            p: t.prec.p(),
            n: t.prec.digits(),
            mlo: t.deg_lo,
            mhi: t.deg_hi,
            a: t.cap,
            t: rat_to_string(t.drop_exp),
            rho: (t.rho_ref != RadiusExponent::reference())
                .then(|| rat_to_string(t.rho_ref.exponent())),
            err: self.err.exponent().map(rat_to_string),
        };
        serde_json::to_string(&SeriesJson {
            d: self.d,
            terms,
            prec,
        })
        .expect("series serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SeriesJson =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("series json: {e}")))?;
        let prec = PrecisionPolicy::new(raw.prec.p, raw.prec.n)?;
        let rho = match &raw.prec.rho {
            None => RadiusExponent::reference(),
            Some(r) => RadiusExponent::new(parse_rational(r)?)?,
        };
        let trunc = TruncationPolicy::new(
            prec,
            raw.prec.mlo,
            raw.prec.mhi,
            raw.prec.a,
            parse_rational(&raw.prec.t)?,
            rho,
        )?;
        let mut b = SeriesBuilder::new(raw.d, trunc);
        for t in raw.terms {
            let digits = t.prec.unwrap_or(prec.digits()).min(prec.digits()).max(1);
            let c = PadicScalar::from_parts(prec, t.val, t.unit as i64)?;
            let c = c.truncate_to(digits);
            b.push(MonomialIndex(t.alpha), c)?;
        }
        if let Some(e) = raw.prec.err {
            b.absorb_err(&ErrBound::from_exponent(parse_rational(&e)?));
        }
        b.finish()
    }

    /// Parse the text form `p^1*3 * b1^2*b2^-1 + ...` for a given policy.
    pub fn parse_text(d: usize, trunc: TruncationPolicy, s: &str) -> Result<Self> {
        let mut b = SeriesBuilder::new(d, trunc);
        let s = s.trim();
        if s == "0" {
            return b.finish();
        }
        for part in s.split('+') {
            let part = part.trim();
            let (coeff_s, mono_s) = match part.split_once(" * ") {
                Some((c, m)) => (c, Some(m)),
                None => {
                    if part.starts_with('b') {
                        ("1", Some(part))
                    } else {
                        (part, None)
                    }
                }
            };
            let coeff = parse_scalar(trunc.prec, coeff_s)?;
            let mut alpha = MonomialIndex::zero(d);
            if let Some(m) = mono_s {
                for factor in m.split('*') {
                    let factor = factor.trim();
                    let rest = factor
                        .strip_prefix('b')
                        .ok_or_else(|| Error::Parse(format!("bad monomial `{factor}`")))?;
                    let (idx_s, exp) = match rest.split_once('^') {
                        Some((i, e)) => (
                            i,
                            e.parse::<i64>()
                                .map_err(|_| Error::Parse(format!("bad exponent `{e}`")))?,
                        ),
                        None => (rest, 1),
                    };
                    let idx: usize = idx_s
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad generator `{factor}`")))?;
                    if idx == 0 || idx > d {
                        return Err(Error::Parse(format!("generator b{idx} out of range")));
                    }
                    alpha.0[idx - 1] += exp;
                }
            }
            b.push(alpha, coeff)?;
        }
        b.finish()
    }
}

impl std::fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in self.sorted_terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if a.is_zero() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c} * {a}")?;
            }
        }
        Ok(())
    }
}
