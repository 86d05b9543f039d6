//! The constant-term pairing, dual basis f^(alpha), lattice membership,
//! graded-ring multiplication, and the single-variable unit decomposition.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::monomial::MonomialIndex;
use crate::norms::{NormValue, Rat};
use crate::padic::{binomial_int, PadicScalar};
use crate::policy::{ErrBound, TruncationPolicy};
use crate::rewriter::Multiplier;
use crate::series::LaurentSeries;

/// A pairing value together with the certified bound on what truncation may
/// have contributed to it.
#[derive(Clone, Copy, Debug)]
pub struct PairingValue {
    pub value: PadicScalar,
    pub err: ErrBound,
}

impl PairingValue {
    /// True if the value's norm exceeds the truncation bound, so its leading
    /// digits are certified.
    pub fn is_certified(&self) -> bool {
        match self.value.valuation() {
            None => false,
            Some(v) => self.err.certifies(&NormValue::from_exponent(Rat::from_integer(v))),
        }
    }
}

/// The constant term of x * y (Thm. 5.5's pairing), with its error bound.
pub fn pairing(mult: &Multiplier, x: &LaurentSeries, y: &LaurentSeries) -> Result<PairingValue> {
    let prod = mult.series_product(x, y)?;
    Ok(PairingValue {
        value: prod.constant_term(),
        err: prod.err(),
    })
}

/// Pairing of x against a single monomial b^beta.
pub fn pairing_monomial(
    mult: &Multiplier,
    x: &LaurentSeries,
    beta: &MonomialIndex,
    trunc: TruncationPolicy,
) -> Result<PairingValue> {
    let mut acc = PadicScalar::zero(trunc.prec);
    let mut err = x.err();
    for (alpha, c) in x.terms() {
        let prod = mult.monomial_product(alpha, beta, trunc)?;
        acc = acc.add(&c.mul(&prod.constant_term())?)?;
        if let Some(v) = c.valuation() {
            err = err.combine(&prod.err().shifted(Rat::from_integer(v)));
        }
    }
    Ok(PairingValue { value: acc, err })
}

#[derive(Clone, Debug)]
pub struct DualBasisElement {
    pub alpha: MonomialIndex,
    pub series: LaurentSeries,
    /// Max over the swept grid of |(series, b^beta) - delta_{alpha beta}|.
    pub defect: NormValue,
    /// The beta grid the defect was certified over.
    pub grid_size: usize,
    /// True if the target defect was not reached before corrections left the
    /// window (partial result).
    pub exhausted: bool,
}

/// Iterative construction of f^(alpha): start from b^{-alpha} and repeatedly
/// cancel the worst pairing defect against b^{-gamma}, choosing among the
/// worst defects a gamma of maximal degree.
pub fn dual_basis(
    mult: &Multiplier,
    alpha: &MonomialIndex,
    grid: &[MonomialIndex],
    trunc: TruncationPolicy,
    target_exp: Rat,
) -> Result<DualBasisElement> {
    let d = mult.dim();
    let mut f = LaurentSeries::monomial(
        d,
        trunc,
        alpha.neg(),
        PadicScalar::one(trunc.prec),
    )?;
    let mut exhausted = false;
    // each round improves the worst defect by at least one p-power, so the
    // target exponent bounds the rounds
    let max_rounds = (target_exp.ceil().to_integer().max(1) as usize + 1) * grid.len().max(1);
    let mut worst = NormValue::zero();
    for _ in 0..max_rounds {
        // worst defect over the grid; among the worst, maximal degree
        worst = NormValue::zero();
        let mut pick: Option<(MonomialIndex, PadicScalar)> = None;
        for beta in grid {
            let pv = pairing_monomial(mult, &f, beta, trunc)?;
            let expected = if beta == alpha { 1 } else { 0 };
            let defect = pv.value.sub(&PadicScalar::from_integer(trunc.prec, expected))?;
            let n = defect
                .valuation()
                .map(|v| NormValue::from_exponent(Rat::from_integer(v)))
                .unwrap_or_else(NormValue::zero);
            if n > worst {
                worst = n;
                pick = Some((beta.clone(), defect));
            } else if n == worst && !n.is_zero() {
                if let Some((cur, _)) = &pick {
                    if beta.degree() > cur.degree() {
                        pick = Some((beta.clone(), defect));
                    }
                }
            }
        }
        let below_target = match worst.exponent() {
            None => true,
            Some(e) => e >= target_exp,
        };
        if below_target {
            return Ok(DualBasisElement {
                alpha: alpha.clone(),
                series: f,
                defect: worst,
                grid_size: grid.len(),
                exhausted: false,
            });
        }
        let (gamma, defect) = pick.expect("worst defect is nonzero");
        let minus_gamma = gamma.neg();
        let deg = minus_gamma.degree();
        if deg < trunc.deg_lo
            || deg > trunc.deg_hi
            || minus_gamma.max_abs_coord() > trunc.cap
        {
            exhausted = true;
            break;
        }
        // (b^{-gamma}, b^{gamma}) is a unit in Z_p
        let unit = pairing_monomial(
            mult,
            &LaurentSeries::monomial(d, trunc, minus_gamma.clone(), PadicScalar::one(trunc.prec))?,
            &gamma,
            trunc,
        )?
        .value;
        if unit.valuation() != Some(0) {
            return Err(Error::NotAUnit(format!(
                "(b^-{gamma}, b^{gamma}) = {unit}"
            )));
        }
        let c = defect.mul(&unit.inverse()?)?;
        let correction =
            LaurentSeries::monomial(d, trunc, minus_gamma, c)?;
        f = f.sub_series(&correction)?;
    }
    Ok(DualBasisElement {
        alpha: alpha.clone(),
        series: f,
        defect: worst,
        grid_size: grid.len(),
        exhausted,
    })
}

/// Membership in the lattice L_{x0} = { sum d_alpha b^alpha :
/// |c_{0,-alpha}| |d_alpha| <= 1 for all alpha } where c_{0,alpha} are the
/// coefficients of x0.
pub fn lattice_member(x0: &LaurentSeries, x: &LaurentSeries) -> bool {
    x.terms().all(|(alpha, d)| {
        let c = x0.coefficient(&alpha.neg());
        match (c.valuation(), d.valuation()) {
            (None, _) | (_, None) => true,
            (Some(a), Some(b)) => a + b >= 0,
        }
    })
}

/// A monomial of the graded ring: c X_0^k X^alpha with c in F_p^x.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMonomial {
    pub p: u64,
    pub coeff: u64,
    pub x0_pow: i64,
    pub alpha: MonomialIndex,
}

impl GradedMonomial {
    pub fn new(p: u64, coeff: u64, x0_pow: i64, alpha: MonomialIndex) -> Result<Self> {
        if coeff % p == 0 {
            return Err(Error::NotAUnit(format!("{coeff} mod {p}")));
        }
        Ok(Self {
            p,
            coeff: coeff % p,
            x0_pow,
            alpha,
        })
    }
}

/// The annihilation rule: X^alpha X^beta = 0 when deg alpha and deg beta have
/// strictly opposite signs, X^{alpha+beta} otherwise.
pub fn graded_mul(u: &GradedMonomial, v: &GradedMonomial) -> Option<GradedMonomial> {
    let (a, b) = (u.alpha.degree(), v.alpha.degree());
    if (a < 0 && b > 0) || (a > 0 && b < 0) {
        return None;
    }
    Some(GradedMonomial {
        p: u.p,
        coeff: (u.coeff * v.coeff) % u.p,
        x0_pow: u.x0_pow + v.x0_pow,
        alpha: u.alpha.add(&v.alpha),
    })
}

/// A truncated power series in one variable Z over Q_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivariateSeries(pub Vec<PadicScalar>);

impl UnivariateSeries {
    pub fn sup_norm(&self) -> NormValue {
        self.0
            .iter()
            .filter_map(|c| c.valuation())
            .map(|v| NormValue::from_exponent(Rat::from_integer(v)))
            .max()
            .unwrap_or_else(NormValue::zero)
    }

    pub fn mul_trunc(
        &self,
        other: &Self,
        policy: crate::padic::PrecisionPolicy,
        len: usize,
    ) -> Result<Self> {
        let mut out = vec![PadicScalar::zero(policy); len];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                out[i + j] = out[i + j].add(&a.mul(b)?)?;
            }
        }
        Ok(Self(out))
    }
}

/// Truncated (1+Z)^t - 1 for an exact integer exponent t.
fn one_plus_z_pow(policy: crate::padic::PrecisionPolicy, t: &BigInt, len: usize) -> UnivariateSeries {
    let coeffs = (0..len)
        .map(|i| {
            if i == 0 {
                PadicScalar::zero(policy)
            } else {
                PadicScalar::from_bigint(policy, &binomial_int(t, i as u64))
            }
        })
        .collect();
    UnivariateSeries(coeffs)
}

/// Write x = p^m y and return (m, u) with (1+Z)^x - 1 = ((1+Z)^{p^m} - 1) u,
/// u = sum_{i>=1} C(y,i) W^{i-1} where W = (1+Z)^{p^m} - 1; sup-norm of u is 1.
pub fn unit_decompose(
    x: &PadicScalar,
    trunc: TruncationPolicy,
) -> Result<(i64, UnivariateSeries)> {
    let m = x
        .valuation()
        .ok_or_else(|| Error::NotAUnit("cannot decompose zero".into()))?;
    if m < 0 {
        return Err(Error::InsufficientPrecision(
            "unit decomposition needs x in Z_p".into(),
        ));
    }
    let policy = trunc.prec;
    let len = (trunc.deg_hi as usize) + 1;
    let y = BigInt::from(x.unit_mod(x.precision()));
    let pm = BigInt::from(policy.p()).pow(m as u32);
    let w = one_plus_z_pow(policy, &pm, len);

    // u = sum_{i>=1} C(y,i) W^{i-1}; W has order 1 in Z so i <= len terms
    let mut u = vec![PadicScalar::zero(policy); len];
    let mut w_pow = {
        let mut one = vec![PadicScalar::zero(policy); len];
        one[0] = PadicScalar::one(policy);
        UnivariateSeries(one)
    };
    for i in 1..=len as u64 {
        let c = PadicScalar::from_bigint(policy, &binomial_int(&y, i));
        for (k, wc) in w_pow.0.iter().enumerate() {
            u[k] = u[k].add(&c.mul(wc)?)?;
        }
        if i < len as u64 {
            w_pow = w_pow.mul_trunc(&w, policy, len)?;
        }
    }
    Ok((m, UnivariateSeries(u)))
}
