//! Uniform pro-p groups presented by a global chart psi: Z_p^d -> G.
//!
//! Coordinates are exact integer lifts (the integers are dense in Z_p and
//! every chart law here is polynomial, so group multiplication is exact).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::monomial::MonomialIndex;
use crate::norms::Rat;
use crate::padic::{binomial_int, PadicScalar};
use crate::policy::TruncationPolicy;
use crate::series::{LaurentSeries, SeriesBuilder};

/// The multiplication law of G in chart coordinates. `law` must satisfy
/// law(x,0) = law(0,x) = x, be associative, and have commutators in G^p.
pub trait GroupChart: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn law(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt>;
    fn is_abelian(&self) -> bool {
        false
    }
}

pub struct AbelianChart {
    d: usize,
}

impl AbelianChart {
    pub fn new(d: usize) -> Self {
        Self { d }
    }
}

impl GroupChart for AbelianChart {
    fn name(&self) -> String {
        format!("abelian:{}", self.d)
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn law(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        x.iter().zip(y).map(|(a, b)| a + b).collect()
    }

    fn is_abelian(&self) -> bool {
        true
    }
}

/// The group 1 + p * (strictly upper triangular 3x3 over Z_p) with
/// h1 = I + p E12, h2 = I + p E23, h3 = I + p E13 and chart coordinates
/// x1 = m12/p, x2 = m23/p, x3 = m13/p - p x1 x2.
pub struct HeisenbergChart {
    p: u64,
}

impl HeisenbergChart {
    pub fn new(p: u64) -> Self {
        Self { p }
    }
}

impl GroupChart for HeisenbergChart {
    fn name(&self) -> String {
        "heisenberg".into()
    }

    fn dim(&self) -> usize {
        3
    }

    fn law(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        let p = BigInt::from(self.p);
        vec![
            &x[0] + &y[0],
            &x[1] + &y[1],
            &x[2] + &y[2] - p * &y[0] * &x[1],
        ]
    }
}

/// A single monomial c * p^{p_pow} * x^xe * y^ye of a coordinate polynomial.
#[derive(Deserialize)]
struct LawMonomial {
    coeff: i64,
    #[serde(default)]
    p_pow: u32,
    x: Vec<u32>,
    y: Vec<u32>,
}

#[derive(Deserialize)]
struct ChartFile {
    name: String,
    d: usize,
    law: Vec<Vec<LawMonomial>>,
}

/// A user-supplied polynomial chart law, validated at registration.
pub struct PolynomialChart {
    name: String,
    d: usize,
    law: Vec<Vec<(BigInt, Vec<u32>, Vec<u32>)>>,
}

impl PolynomialChart {
    pub fn from_json(p: u64, json: &str) -> Result<Self> {
        let raw: ChartFile =
            serde_json::from_str(json).map_err(|e| Error::Parse(format!("chart file: {e}")))?;
        if raw.law.len() != raw.d {
            return Err(Error::Parse(format!(
                "chart `{}` declares d={} but {} coordinate polynomials",
                raw.name,
                raw.d,
                raw.law.len()
            )));
        }
        let mut law = Vec::with_capacity(raw.d);
        for poly in &raw.law {
            let mut terms = Vec::with_capacity(poly.len());
            for m in poly {
                if m.x.len() != raw.d || m.y.len() != raw.d {
                    return Err(Error::Parse(format!(
                        "chart `{}`: exponent vectors must have length {}",
                        raw.name, raw.d
                    )));
                }
                let c = BigInt::from(m.coeff) * BigInt::from(p).pow(m.p_pow);
                terms.push((c, m.x.clone(), m.y.clone()));
            }
            law.push(terms);
        }
        Ok(Self {
            name: raw.name,
            d: raw.d,
            law,
        })
    }
}

impl GroupChart for PolynomialChart {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn law(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        self.law
            .iter()
            .map(|poly| {
                let mut acc = BigInt::zero();
                for (c, xe, ye) in poly {
                    let mut t = c.clone();
                    for (b, &e) in x.iter().zip(xe) {
                        t *= b.pow(e);
                    }
                    for (b, &e) in y.iter().zip(ye) {
                        t *= b.pow(e);
                    }
                    acc += t;
                }
                acc
            })
            .collect()
    }
}

fn unit_vec(d: usize, i: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); d];
    v[i] = BigInt::from(1);
    v
}

/// Registration self-test: identity, associativity on random triples, and
/// uniformity (generator commutators divisible by p).
pub fn chart_self_test(chart: &dyn GroupChart, p: u64, seed: u64) -> Result<()> {
    let d = chart.dim();
    let zero = vec![BigInt::zero(); d];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<BigInt> {
        (0..d).map(|_| BigInt::from(rng.gen_range(-50i64..=50))).collect()
    };
    for _ in 0..20 {
        let x = sample(&mut rng);
        if chart.law(&x, &zero) != x || chart.law(&zero, &x) != x {
            return Err(Error::ChartSelfTest(format!(
                "`{}` does not fix the identity",
                chart.name()
            )));
        }
        let y = sample(&mut rng);
        let z = sample(&mut rng);
        let lhs = chart.law(&chart.law(&x, &y), &z);
        let rhs = chart.law(&x, &chart.law(&y, &z));
        if lhs != rhs {
            return Err(Error::ChartSelfTest(format!(
                "`{}` is not associative",
                chart.name()
            )));
        }
    }
    let pb = BigInt::from(p);
    for i in 0..d {
        for j in 0..d {
            let ei = unit_vec(d, i);
            let ej = unit_vec(d, j);
            let a = chart.law(&ei, &ej);
            let b = chart.law(&ej, &ei);
            for (u, v) in a.iter().zip(&b) {
                if !((u - v) % &pb).is_zero() {
                    return Err(Error::ChartSelfTest(format!(
                        "`{}` commutator [h{},h{}] not in G^p",
                        chart.name(),
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// One way of building a chart from a selector string; registered by name.
pub trait ChartBuilder: Send + Sync {
    fn build(&self, selector: &str, p: u64) -> Option<Result<Arc<dyn GroupChart>>>;
}

struct AbelianBuilder;

impl ChartBuilder for AbelianBuilder {
    fn build(&self, selector: &str, _p: u64) -> Option<Result<Arc<dyn GroupChart>>> {
        let d = selector.strip_prefix("abelian:")?;
        Some(match d.parse::<usize>() {
            Ok(d) if d >= 1 => Ok(Arc::new(AbelianChart::new(d))),
            _ => Err(Error::UnknownChart(selector.into())),
        })
    }
}

struct HeisenbergBuilder;

impl ChartBuilder for HeisenbergBuilder {
    fn build(&self, selector: &str, p: u64) -> Option<Result<Arc<dyn GroupChart>>> {
        (selector == "heisenberg").then(|| Ok(Arc::new(HeisenbergChart::new(p)) as _))
    }
}

struct FileBuilder;

impl ChartBuilder for FileBuilder {
    fn build(&self, selector: &str, p: u64) -> Option<Result<Arc<dyn GroupChart>>> {
        let path = selector.strip_prefix("file:")?;
        Some(
            std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("chart file `{path}`: {e}")))
                .and_then(|s| PolynomialChart::from_json(p, &s))
                .map(|c| Arc::new(c) as Arc<dyn GroupChart>),
        )
    }
}

/// Resolves `--group` selectors: `abelian:<d>`, `heisenberg`, or
/// `file:<path>` for a declarative polynomial law. Every resolved chart has
/// passed the registration self-test.
pub struct ChartRegistry {
    builders: Vec<Box<dyn ChartBuilder>>,
}

impl Default for ChartRegistry {
    fn default() -> Self {
        Self {
            builders: vec![
                Box::new(AbelianBuilder),
                Box::new(HeisenbergBuilder),
                Box::new(FileBuilder),
            ],
        }
    }
}

impl ChartRegistry {
    pub fn register(&mut self, b: Box<dyn ChartBuilder>) {
        self.builders.push(b);
    }

    pub fn resolve(&self, selector: &str, p: u64) -> Result<Arc<dyn GroupChart>> {
        for b in &self.builders {
            if let Some(r) = b.build(selector, p) {
                let chart = r?;
                chart_self_test(chart.as_ref(), p, 0x7261)?;
                return Ok(chart);
            }
        }
        Err(Error::UnknownChart(selector.into()))
    }
}

/// Truncated expansion of the Dirac distribution
/// delta_{psi(x)} = prod_i (1+b_i)^{x_i} = sum_alpha prod_i C(x_i, alpha_i) b^alpha.
pub fn dirac_expand(x: &[BigInt], trunc: TruncationPolicy) -> Result<LaurentSeries> {
    let d = x.len();
    let mut b = SeriesBuilder::new(d, trunc);
    let mut alpha = vec![0i64; d];
    let one = BigInt::from(1);
    let coord_cap = trunc.cap.min(trunc.deg_hi);
    // depth-first over alpha in N_0^d with sum <= deg_hi, carrying the exact
    // partial coefficient product
    fn rec(
        b: &mut SeriesBuilder,
        x: &[BigInt],
        alpha: &mut Vec<i64>,
        i: usize,
        budget: i64,
        cap: i64,
        partial: &BigInt,
    ) -> Result<()> {
        if i == x.len() {
            b.push(
                MonomialIndex(alpha.clone()),
                PadicScalar::from_bigint(b_policy(b), partial),
            )?;
            return Ok(());
        }
        for k in 0..=budget.min(cap) {
            let c = binomial_int(&x[i], k as u64);
            if c.is_zero() {
                // C(x,k) = 0 only for nonnegative integer x < k; later k vanish too
                break;
            }
            alpha[i] = k;
            rec(b, x, alpha, i + 1, budget - k, cap, &(partial * &c))?;
        }
        alpha[i] = 0;
        Ok(())
    }
    fn b_policy(b: &SeriesBuilder) -> crate::padic::PrecisionPolicy {
        b.policy().prec
    }
    rec(&mut b, x, &mut alpha, 0, trunc.deg_hi, coord_cap, &one)?;
    let mut out = b.finish()?;
    // tail beyond the window: coefficients are in Z_p, degree >= deg_hi + 1
    let exact = x.iter().all(|c| !c.is_negative())
        && x.iter().sum::<BigInt>() <= BigInt::from(trunc.deg_hi);
    if !exact {
        let tail = Rat::from_integer(trunc.deg_hi + 1) * trunc.rho_ref.exponent();
        let mut err = out.err();
        err.absorb(tail.min(trunc.drop_exp));
        out = out.with_err(err);
    }
    Ok(out)
}

/// Truncated canonical expansion of b_i b_j - b_j b_i for i > j, via
/// delta_{psi(law(e_i,e_j))} - delta_{psi(law(e_j,e_i))}.
pub fn commutator_series(
    chart: &dyn GroupChart,
    i: usize,
    j: usize,
    trunc: TruncationPolicy,
) -> Result<LaurentSeries> {
    let d = chart.dim();
    if !(1 <= j && j < i && i <= d) {
        return Err(Error::DimensionMismatch(i, j));
    }
    let ei = unit_vec(d, i - 1);
    let ej = unit_vec(d, j - 1);
    let a = chart.law(&ei, &ej);
    let b = chart.law(&ej, &ei);
    if a == b {
        // identical coordinates: the infinite expansions cancel exactly
        return Ok(LaurentSeries::zero(d, trunc));
    }
    dirac_expand(&a, trunc)?.sub_series(&dirac_expand(&b, trunc)?)
}

/// Lazy per-(i,j) cache of commutator expansions; readers always see fully
/// computed entries.
pub struct CommutatorTable {
    chart: Arc<dyn GroupChart>,
    central: Vec<bool>,
    cache: RwLock<HashMap<(usize, usize, TruncationPolicy), Arc<LaurentSeries>>>,
}

impl CommutatorTable {
    pub fn new(chart: Arc<dyn GroupChart>) -> Self {
        let d = chart.dim();
        // a generator is central when its chart commutators vanish identically
        let central = (1..=d)
            .map(|j| {
                (1..=d).all(|i| {
                    i == j || {
                        let (hi, lo) = (i.max(j), i.min(j));
                        let a = chart.law(&unit_vec(d, hi - 1), &unit_vec(d, lo - 1));
                        let b = chart.law(&unit_vec(d, lo - 1), &unit_vec(d, hi - 1));
                        a == b
                    }
                })
            })
            .collect();
        Self {
            chart,
            central,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn chart(&self) -> &Arc<dyn GroupChart> {
        &self.chart
    }

    /// Whether generator j (1-based) commutes exactly with every generator.
    pub fn is_central(&self, j: u16) -> bool {
        self.central[j as usize - 1]
    }

    pub fn get(&self, i: usize, j: usize, trunc: TruncationPolicy) -> Result<Arc<LaurentSeries>> {
        let key = (i, j, trunc);
        if let Some(s) = self.cache.read().expect("lock").get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(commutator_series(self.chart.as_ref(), i, j, trunc)?);
        let mut w = self.cache.write().expect("lock");
        Ok(w.entry(key).or_insert(s).clone())
    }
}

/// Parse comma-separated integer chart coordinates.
pub fn parse_coords(d: usize, s: &str) -> Result<Vec<BigInt>> {
    let v: std::result::Result<Vec<BigInt>, _> =
        s.split(',').map(|t| t.trim().parse::<BigInt>()).collect();
    let v = v.map_err(|_| Error::Parse(format!("bad coordinates `{s}`")))?;
    if v.len() != d {
        return Err(Error::DimensionMismatch(v.len(), d));
    }
    Ok(v)
}
