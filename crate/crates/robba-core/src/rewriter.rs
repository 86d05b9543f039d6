//! The noncommutative product: canonical Laurent expansions of b^alpha b^beta
//! via word rewriting, extended bilinearly to series.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::group::CommutatorTable;
use crate::monomial::MonomialIndex;
use crate::norms::{NormValue, RadiusExponent, Rat};
use crate::padic::PadicScalar;
use crate::policy::TruncationPolicy;
use crate::series::{mul_err, LaurentSeries, SeriesBuilder};

/// A word in the free group on b_1..b_d; letters are (generator, +-1).
/// Canonical ("not bad") means generator indices are nondecreasing.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SignedWord(pub Vec<(u16, i8)>);

impl SignedWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// The canonical word b_1^{a_1} ... b_d^{a_d}.
    pub fn from_monomial(alpha: &MonomialIndex) -> Self {
        let mut letters = Vec::new();
        for (i, &a) in alpha.0.iter().enumerate() {
            let sign = if a >= 0 { 1i8 } else { -1 };
            for _ in 0..a.abs() {
                letters.push((i as u16 + 1, sign));
            }
        }
        Self(letters)
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v).freely_reduced()
    }

    /// Cancel adjacent inverse pairs until stable.
    pub fn freely_reduced(&self) -> Self {
        let mut out: Vec<(u16, i8)> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            match out.last() {
                Some(&(g, e)) if g == l.0 && e == -l.1 => {
                    out.pop();
                }
                _ => out.push(l),
            }
        }
        Self(out)
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|&(_, e)| e as i64).sum()
    }

    /// Signed degree in generator j (1-based).
    pub fn gen_degree(&self, j: u16) -> i64 {
        self.0
            .iter()
            .filter(|&&(g, _)| g == j)
            .map(|&(_, e)| e as i64)
            .sum()
    }

    pub fn max_gen_degree(&self, d: usize) -> i64 {
        (1..=d as u16).map(|j| self.gen_degree(j)).max().unwrap_or(0)
    }

    /// Smallest position t with x_t > x_{t+1}, if any.
    pub fn first_violation(&self) -> Option<usize> {
        self.0.windows(2).position(|w| w[0].0 > w[1].0)
    }

    pub fn is_canonical(&self) -> bool {
        self.first_violation().is_none()
    }

    /// Inverted-pair count: the disorder measure D(w).
    pub fn disorder(&self) -> usize {
        let mut n = 0;
        for i in 0..self.0.len() {
            for j in i + 1..self.0.len() {
                if self.0[i].0 > self.0[j].0 {
                    n += 1;
                }
            }
        }
        n
    }

    /// Letter-order-independent exponent sum.
    pub fn exponents(&self, d: usize) -> MonomialIndex {
        let mut alpha = MonomialIndex::zero(d);
        for &(g, e) in &self.0 {
            alpha.0[g as usize - 1] += e as i64;
        }
        alpha
    }

    /// Exponent vector of a canonical word.
    pub fn to_monomial(&self, d: usize) -> MonomialIndex {
        debug_assert!(self.is_canonical());
        self.exponents(d)
    }
}

impl std::fmt::Display for SignedWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, &(g, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if e == 1 {
                write!(f, "b{g}")?;
            } else {
                write!(f, "b{g}^-1")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct WeightedTerm {
    pub coeff: PadicScalar,
    pub word: SignedWord,
}

/// The integer potential f(c,w) = 2 v(c) + deg(w) + max_j m_j(w); constant on
/// head swaps and nondecreasing on corrections.
pub fn potential(d: usize, coeff: &PadicScalar, word: &SignedWord) -> Option<i64> {
    coeff
        .valuation()
        .map(|v| 2 * v + word.degree() + word.max_gen_degree(d))
}

/// One rewriting step recorded for `--trace-potential`.
#[derive(Clone, Debug)]
pub struct PotentialEvent {
    pub word: String,
    pub f_input: i64,
    pub corrections: usize,
    pub f_min_correction: Option<i64>,
}

/// Apply the swap identity at violation position t: the head term with
/// letters t, t+1 exchanged, plus corrections wrapping the commutator
/// expansion of the two generators with inverse letters.
pub fn swap_expand(
    table: &CommutatorTable,
    coeff: &PadicScalar,
    word: &SignedWord,
    t: usize,
    trunc: TruncationPolicy,
) -> Result<Vec<WeightedTerm>> {
    let d = table.chart().dim();
    let (x, e) = word.0[t];
    let (y, f) = word.0[t + 1];
    debug_assert!(x > y);

    let mut head = word.clone();
    head.0.swap(t, t + 1);
    let mut out = vec![WeightedTerm {
        coeff: *coeff,
        word: head.freely_reduced(),
    }];

    let comm = table.get(x as usize, y as usize, trunc)?;
    if comm.is_zero() {
        return Ok(out);
    }
    let sign_flip = (e as i64) * (f as i64) < 0;
    let mut xwrap = Vec::new();
    if e == -1 {
        xwrap.push((x, -1i8));
    }
    let mut ywrap = Vec::new();
    if f == -1 {
        ywrap.push((y, -1i8));
    }
    for (gamma, a) in comm.terms() {
        let mut letters = word.0[..t].to_vec();
        letters.extend_from_slice(&xwrap);
        letters.extend_from_slice(&ywrap);
        letters.extend_from_slice(&SignedWord::from_monomial(gamma).0);
        letters.extend_from_slice(&ywrap);
        letters.extend_from_slice(&xwrap);
        letters.extend_from_slice(&word.0[t + 2..]);
        let mut c = coeff.mul(a)?;
        if sign_flip {
            c = c.neg();
        }
        if c.is_zero() {
            continue;
        }
        out.push(WeightedTerm {
            coeff: c,
            word: SignedWord(letters).freely_reduced(),
        });
    }
    // z49: f(head) = f(input), f(correction) >= f(input)
    if let Some(f_in) = potential(d, coeff, word) {
        for term in &out[1..] {
            if let Some(fc) = potential(d, &term.coeff, &term.word) {
                if fc < f_in {
                    return Err(Error::PotentialViolation(format!(
                        "f({}) = {fc} < f({word}) = {f_in}",
                        term.word
                    )));
                }
            }
        }
    }
    Ok(out)
}

const MAX_STEPS: usize = 4_000_000;

/// Reduce a worklist of weighted words to a canonical series: repeatedly take
/// the term of largest reference norm with a bad word, swap at its first
/// violation, and drop content below the threshold.
fn worklist_reduce(
    table: &CommutatorTable,
    initial: Vec<WeightedTerm>,
    trunc: TruncationPolicy,
    mut trace: Option<&mut Vec<PotentialEvent>>,
    steps: &mut usize,
    mut builder: SeriesBuilder,
) -> Result<LaurentSeries> {
    let d = table.chart().dim();
    let e_ref = trunc.rho_ref.exponent();

    let word_exp = |c: &PadicScalar, w: &SignedWord| -> Rat {
        Rat::from_integer(c.valuation().expect("nonzero")) + Rat::from_integer(w.degree()) * e_ref
    };

    // central letters commute exactly with everything; collecting them in a
    // sorted tail merges the placement variants that otherwise blow up the
    // worklist
    let normalize = |w: SignedWord| -> SignedWord {
        if w.0.iter().all(|&(g, _)| !table.is_central(g)) {
            return w;
        }
        let mut central = vec![0i64; d];
        let mut stripped = Vec::with_capacity(w.0.len());
        for &(g, e) in &w.0 {
            if table.is_central(g) {
                central[g as usize - 1] += e as i64;
            } else {
                stripped.push((g, e));
            }
        }
        let mut out = SignedWord(stripped).freely_reduced();
        for (idx, &c) in central.iter().enumerate() {
            let sign = if c >= 0 { 1i8 } else { -1 };
            for _ in 0..c.abs() {
                out.0.push((idx as u16 + 1, sign));
            }
        }
        out
    };
    // swaps only happen between non-central letters; the central tail stands
    let prefix_violation = |w: &SignedWord| -> Option<usize> {
        w.0.windows(2).position(|pair| {
            pair[0].0 > pair[1].0 && !table.is_central(pair[0].0) && !table.is_central(pair[1].0)
        })
    };

    let mut pending: HashMap<SignedWord, PadicScalar> = HashMap::new();
    let mut heap: BinaryHeap<Reverse<(Rat, SignedWord)>> = BinaryHeap::new();
    for mut term in initial {
        if term.coeff.is_zero() {
            continue;
        }
        term.word = normalize(term.word);
        match pending.entry(term.word.clone()) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(term.coeff);
            }
            std::collections::hash_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&term.coeff)?;
                if s.is_zero() {
                    o.remove();
                    continue;
                }
                o.insert(s);
            }
        }
        let c = pending[&term.word];
        heap.push(Reverse((word_exp(&c, &term.word), term.word)));
    }

    while let Some(Reverse((exp, word))) = heap.pop() {
        let coeff = match pending.get(&word) {
            Some(c) if word_exp(c, &word) == exp => *c,
            _ => continue, // stale entry
        };
        pending.remove(&word);
        if exp >= trunc.drop_exp {
            builder.absorb_err(&crate::policy::ErrBound::from_exponent(trunc.drop_exp));
            continue;
        }
        // a coordinate beyond the cap: the term can no longer reach a stored
        // canonical monomial; move it to the ledger with its norm bound
        if (1..=d as u16).any(|j| word.gen_degree(j).abs() > trunc.cap) {
            builder.absorb_err(&crate::policy::ErrBound::from_exponent(exp));
            continue;
        }
        if let Some(t) = prefix_violation(&word) {
            *steps += 1;
            if *steps > MAX_STEPS {
                return Err(Error::WindowExhausted(format!(
                    "rewriting exceeded {MAX_STEPS} steps at word {word}"
                )));
            }
            let terms = swap_expand(table, &coeff, &word, t, trunc)?;
            if let Some(tr) = trace.as_deref_mut() {
                let f_in = potential(d, &coeff, &word).expect("nonzero");
                tr.push(PotentialEvent {
                    word: word.to_string(),
                    f_input: f_in,
                    corrections: terms.len() - 1,
                    f_min_correction: terms[1..]
                        .iter()
                        .filter_map(|t| potential(d, &t.coeff, &t.word))
                        .min(),
                });
            }
            for mut term in terms {
                if term.coeff.is_zero() {
                    continue;
                }
                term.word = normalize(term.word);
                let entry = pending.entry(term.word.clone());
                let merged = match entry {
                    std::collections::hash_map::Entry::Vacant(v) => {
                        v.insert(term.coeff);
                        Some(term.coeff)
                    }
                    std::collections::hash_map::Entry::Occupied(mut o) => {
                        let s = o.get().add(&term.coeff)?;
                        if s.is_zero() {
                            o.remove();
                            None
                        } else {
                            o.insert(s);
                            Some(s)
                        }
                    }
                };
                if let Some(c) = merged {
                    heap.push(Reverse((word_exp(&c, &term.word), term.word)));
                }
            }
        } else {
            builder.push(word.exponents(d), coeff)?;
        }
    }
    builder.finish()
}

/// Canonical Laurent expansion of b^alpha b^beta. The letters of b^beta are
/// folded in one at a time, re-canonicalizing between letters, so partial
/// results merge instead of accumulating as distinct bad words.
pub fn monomial_product(
    table: &CommutatorTable,
    alpha: &MonomialIndex,
    beta: &MonomialIndex,
    trunc: TruncationPolicy,
    mut trace: Option<&mut Vec<PotentialEvent>>,
) -> Result<LaurentSeries> {
    let d = table.chart().dim();
    let e_ref = trunc.rho_ref.exponent();

    // fully commutative chart: the product is the exact single term b^{alpha+beta},
    // returned over a widened window so that callers merging several pairs
    // apply the window and threshold cuts once, after cancellation -- this is
    // what makes series_product agree with the commutative oracle bit for bit
    if (1..=d as u16).all(|j| table.is_central(j)) {
        let wide = TruncationPolicy::new(
            trunc.prec,
            2 * trunc.deg_lo,
            2 * trunc.deg_hi,
            2 * trunc.cap,
            Rat::from_integer(trunc.prec.digits() as i64)
                + Rat::from_integer(-2 * trunc.deg_lo) * e_ref,
            trunc.rho_ref,
        )?;
        let mut b = SeriesBuilder::new(d, wide);
        b.push(alpha.add(beta), PadicScalar::one(trunc.prec))?;
        return b.finish();
    }

    let mut steps = 0usize;

    let mut s = {
        let initial = vec![WeightedTerm {
            coeff: PadicScalar::one(trunc.prec),
            word: SignedWord::from_monomial(alpha),
        }];
        worklist_reduce(
            table,
            initial,
            trunc,
            trace.as_deref_mut(),
            &mut steps,
            SeriesBuilder::new(d, trunc),
        )?
    };
    for &letter in &SignedWord::from_monomial(beta).0 {
        let initial: Vec<WeightedTerm> = s
            .terms()
            .map(|(gamma, c)| {
                let mut w = SignedWord::from_monomial(gamma);
                w.0.push(letter);
                WeightedTerm {
                    coeff: *c,
                    word: w.freely_reduced(),
                }
            })
            .collect();
        let mut b = SeriesBuilder::new(d, trunc);
        // previously dropped content gets multiplied by this letter: its norm
        // bound shifts by the letter's degree
        b.absorb_err(&s.err().shifted(Rat::from_integer(letter.1 as i64) * e_ref));
        s = worklist_reduce(table, initial, trunc, trace.as_deref_mut(), &mut steps, b)?;
    }
    Ok(s)
}

/// Caches monomial products per (alpha, beta, policy) and extends them
/// bilinearly to full series.
pub struct Multiplier {
    table: Arc<CommutatorTable>,
    cache: RwLock<HashMap<(MonomialIndex, MonomialIndex, TruncationPolicy), Arc<LaurentSeries>>>,
}

impl Multiplier {
    pub fn new(table: Arc<CommutatorTable>) -> Self {
        Self {
            table,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn table(&self) -> &Arc<CommutatorTable> {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.table.chart().dim()
    }

    pub fn monomial_product(
        &self,
        alpha: &MonomialIndex,
        beta: &MonomialIndex,
        trunc: TruncationPolicy,
    ) -> Result<Arc<LaurentSeries>> {
        let key = (alpha.clone(), beta.clone(), trunc);
        if let Some(s) = self.cache.read().expect("lock").get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(monomial_product(&self.table, alpha, beta, trunc, None)?);
        let mut w = self.cache.write().expect("lock");
        Ok(w.entry(key).or_insert(s).clone())
    }

    /// The intrinsic product sum_{alpha,beta} x_alpha y_beta b^alpha b^beta.
    /// On an abelian chart this agrees with `mul_commutative` bit for bit:
    /// both routes push the identical per-pair terms through one builder.
    pub fn series_product(&self, x: &LaurentSeries, y: &LaurentSeries) -> Result<LaurentSeries> {
        let trunc = x.policy().meet(y.policy())?;
        let d = self.dim();
        let mut b = SeriesBuilder::new(d, trunc);
        b.absorb_err(&mul_err(x, y));
        for (alpha, ca) in x.terms() {
            for (beta, cb) in y.terms() {
                let c = ca.mul(cb)?;
                let prod = self.monomial_product(alpha, beta, trunc)?;
                for (gamma, cg) in prod.terms() {
                    b.push(gamma.clone(), c.mul(cg)?)?;
                }
                if let Some(v) = c.valuation() {
                    b.absorb_err(&prod.err().shifted(Rat::from_integer(v)));
                }
            }
        }
        b.finish()
    }
}

/// Empirical quasi-abelian witness: the largest ratio
/// |xy - yx|_rho / |xy|_rho over the samples, as a NormValue gamma-hat.
/// Errors if some sample has ratio >= 1.
pub fn qa_gamma_estimate(
    mult: &Multiplier,
    rho: RadiusExponent,
    samples: &[(LaurentSeries, LaurentSeries)],
) -> Result<NormValue> {
    let mut gamma = NormValue::zero();
    for (index, (x, y)) in samples.iter().enumerate() {
        let xy = mult.series_product(x, y)?;
        let yx = mult.series_product(y, x)?;
        let diff = xy.sub_series(&yx)?;
        // truncation-dominated samples say nothing about gamma: both norms
        // must be certified above the err ledger (kept at the reference
        // radius) before the ratio counts
        let rho_ref = xy.policy().rho_ref;
        if !xy.err().certifies(&xy.norm_rho(rho_ref)) {
            continue;
        }
        let num = diff.norm_rho(rho);
        if num.is_zero() {
            continue;
        }
        if !diff.err().certifies(&diff.norm_rho(rho_ref)) {
            continue;
        }
        let den = xy.norm_rho(rho);
        let ratio = match num.div(&den) {
            Some(r) => r,
            None => return Err(Error::QaViolation { index }),
        };
        if ratio >= NormValue::one() {
            return Err(Error::QaViolation { index });
        }
        gamma = gamma.max(ratio);
    }
    Ok(gamma)
}
