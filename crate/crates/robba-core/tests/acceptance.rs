//! Acceptance suite: one pass/fail line per criterion. Runs without the
//! default harness so the lines always reach the console.

use std::process::ExitCode;
use std::sync::Arc;

use num_traits::Signed;

use robba_core::duality::{dual_basis, graded_mul, GradedMonomial};
use robba_core::group::{
    dirac_expand, AbelianChart, CommutatorTable, GroupChart, HeisenbergChart,
};
use robba_core::microloc::{ore_approx, NormedAlgebraHandle};
use robba_core::monomial::enumerate_indices;
use robba_core::padic::PrecisionPolicy;
use robba_core::rewriter::{qa_gamma_estimate, Multiplier};
use robba_core::sampling::{
    random_group_coords, random_pairs, random_scalar, random_series, seeded_rng,
};
use robba_core::{
    ErrBound, LaurentSeries, MonomialIndex, NormValue, PadicScalar, Rat, RadiusExponent,
    SeriesBuilder, TruncationPolicy,
};

/// Random series supported on small nonnegative exponents, so products stay
/// inside the retained window and results are certifiable.
fn small_series(
    rng: &mut rand_chacha::ChaCha8Rng,
    tr: TruncationPolicy,
    max_deg: i64,
    max_val: u32,
    terms: usize,
) -> LaurentSeries {
    use rand::Rng;
    let mut b = SeriesBuilder::new(3, tr);
    for _ in 0..terms {
        let alpha = loop {
            let a = MonomialIndex((0..3).map(|_| rng.gen_range(0..=max_deg)).collect());
            if a.degree() <= max_deg {
                break a;
            }
        };
        b.push(alpha, random_scalar(rng, &tr, max_val)).unwrap();
    }
    b.finish().unwrap()
}

fn trunc(p: u64) -> TruncationPolicy {
    TruncationPolicy::with_default_rho(
        PrecisionPolicy::new(p, 6).unwrap(),
        -4,
        4,
        4,
        Rat::from_integer(6),
    )
    .unwrap()
}

fn multiplier(chart: Arc<dyn GroupChart>) -> Arc<Multiplier> {
    Arc::new(Multiplier::new(Arc::new(CommutatorTable::new(chart))))
}

fn heisenberg(p: u64) -> Arc<Multiplier> {
    multiplier(Arc::new(HeisenbergChart::new(p)))
}

/// Three-way comparison of a computed value against an exact bound in the
/// presence of an err ledger: the true value v satisfies
/// |v| <= max(|computed|, err), and |v| = |computed| when certified.
enum BoundCheck {
    Holds,
    Violated(String),
    Uncertified,
    /// The bound is finer than the truncation ledger can resolve.
    Untestable,
}

fn check_bound(computed: &PadicScalar, err: &ErrBound, bound: &NormValue) -> BoundCheck {
    let norm = match computed.valuation() {
        None => NormValue::zero(),
        Some(v) => NormValue::from_exponent(Rat::from_integer(v)),
    };
    if norm > *bound && err.certifies(&norm) {
        return BoundCheck::Violated(format!("|{computed}| > {bound}"));
    }
    if err.as_norm() > *bound {
        return BoundCheck::Untestable;
    }
    if norm.max(err.as_norm()) <= *bound {
        return BoundCheck::Holds;
    }
    BoundCheck::Uncertified
}

fn c1_abelian_oracle() -> Result<String, String> {
    let mut total = 0;
    for (d, p) in [(1usize, 3u64), (2, 5), (3, 5)] {
        let mult = multiplier(Arc::new(AbelianChart::new(d)));
        let tr = trunc(p);
        let mut rng = seeded_rng(0xA1 + d as u64);
        for (x, y) in random_pairs(&mut rng, d, tr, 4, 200) {
            let lhs = mult.series_product(&x, &y).map_err(|e| e.to_string())?;
            let rhs = x.mul_commutative(&y).map_err(|e| e.to_string())?;
            if lhs.to_json() != rhs.to_json() {
                return Err(format!("d={d} x={x} y={y}: {lhs} != {rhs}"));
            }
            total += 1;
        }
    }
    Ok(format!("{total} pairs bit-exact"))
}

fn c2_master_homomorphism() -> Result<String, String> {
    let p = 5;
    let mult = heisenberg(p);
    let tr = trunc(p);
    let chart = mult.table().chart().clone();
    let mut rng = seeded_rng(0xA2);
    for i in 0..100 {
        let x = random_group_coords(&mut rng, 3, 50);
        let y = random_group_coords(&mut rng, 3, 50);
        let lhs = dirac_expand(&chart.law(&x, &y), tr).map_err(|e| e.to_string())?;
        let rhs = mult
            .series_product(
                &dirac_expand(&x, tr).map_err(|e| e.to_string())?,
                &dirac_expand(&y, tr).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
        let diff = lhs.sub_series(&rhs).map_err(|e| e.to_string())?;
        let n = diff.norm_rho(tr.rho_ref);
        if diff.err().certifies(&n) {
            return Err(format!("sample {i}: |delta(law) - product| = {n} > err {}", diff.err()));
        }
    }
    Ok("100 coordinate pairs within err".into())
}

/// Shared grid sweep for criteria 3, 4, and 6.
struct GridSweep {
    mult: Arc<Multiplier>,
    tr: TruncationPolicy,
    grid: Vec<MonomialIndex>,
}

impl GridSweep {
    fn new(p: u64, coord_cap: i64) -> Self {
        Self {
            mult: heisenberg(p),
            tr: trunc(p),
            grid: enumerate_indices(3, coord_cap, -4, 4),
        }
    }
}

fn c3_pairing_bounds(sweep: &GridSweep) -> Result<String, String> {
    let p = sweep.tr.prec.p();
    let mut uncertified = 0usize;
    let mut untestable = 0usize;
    let mut total = 0usize;
    for alpha in &sweep.grid {
        for beta in &sweep.grid {
            if *beta == alpha.neg() {
                continue;
            }
            total += 1;
            let prod = sweep
                .mult
                .monomial_product(alpha, beta, sweep.tr)
                .map_err(|e| e.to_string())?;
            let value = prod.constant_term();
            let s = alpha.degree() + beta.degree();
            // |(b^a, b^b)| <= min(1, p^{-deg a - deg b}); <= p^{-1} at s = 0
            let exp = if s == 0 { 1 } else { s.max(0) };
            let bound = NormValue::from_exponent(Rat::from_integer(exp));
            match check_bound(&value, &prod.err(), &bound) {
                BoundCheck::Holds => {}
                BoundCheck::Uncertified => uncertified += 1,
                BoundCheck::Untestable => untestable += 1,
                BoundCheck::Violated(w) => {
                    return Err(format!("({alpha}, {beta}): {w}, p={p}"));
                }
            }
        }
    }
    let tested = total - untestable;
    if tested * 2 < total {
        return Err(format!("only {tested}/{total} entries resolvable at this precision"));
    }
    if uncertified > tested / 20 {
        return Err(format!("{uncertified}/{tested} uncertifiable entries (> 5%)"));
    }
    Ok(format!("{tested}/{total} testable pairs, {uncertified} uncertifiable"))
}

fn c4_quantitative_estimate(sweep: &GridSweep) -> Result<String, String> {
    let mut uncertified = 0usize;
    let mut untestable = 0usize;
    let mut total = 0usize;
    for alpha in &sweep.grid {
        for beta in &sweep.grid {
            if *beta == alpha.neg() {
                continue;
            }
            total += 1;
            let prod = sweep
                .mult
                .monomial_product(alpha, beta, sweep.tr)
                .map_err(|e| e.to_string())?;
            let value = prod.constant_term();
            let m = (0..3)
                .map(|j| alpha.0[j] + beta.0[j])
                .max()
                .unwrap();
            let exp = Rat::new(alpha.degree() + beta.degree() + m, 2);
            let bound = NormValue::from_exponent(exp.max(Rat::from_integer(0)));
            match check_bound(&value, &prod.err(), &bound) {
                BoundCheck::Holds => {}
                BoundCheck::Uncertified => uncertified += 1,
                BoundCheck::Untestable => untestable += 1,
                BoundCheck::Violated(w) => {
                    return Err(format!("({alpha}, {beta}): {w}"));
                }
            }
        }
    }
    let tested = total - untestable;
    if tested * 2 < total {
        return Err(format!("only {tested}/{total} entries resolvable at this precision"));
    }
    if uncertified > tested / 20 {
        return Err(format!("{uncertified}/{tested} uncertifiable entries (> 5%)"));
    }
    Ok(format!("{tested}/{total} testable pairs, {uncertified} uncertifiable"))
}

fn c6_coefficient_bounds(sweep: &GridSweep) -> Result<String, String> {
    let one = PadicScalar::one(sweep.tr.prec);
    let mut uncertified = 0usize;
    let mut untestable = 0usize;
    let mut total = 0usize;
    for beta in &sweep.grid {
        for gamma in &sweep.grid {
            let prod = sweep
                .mult
                .monomial_product(beta, gamma, sweep.tr)
                .map_err(|e| e.to_string())?;
            let lead = beta.add(gamma);
            for (alpha, c) in prod.terms() {
                total += 1;
                let (value, exp) = if *alpha == lead {
                    // |c - 1| < 1
                    (c.sub(&one).map_err(|e| e.to_string())?, Rat::from_integer(1))
                } else {
                    let e = beta.degree() + gamma.degree() - alpha.degree();
                    (*c, Rat::from_integer(e.max(0)))
                };
                match check_bound(&value, &prod.err(), &NormValue::from_exponent(exp)) {
                    BoundCheck::Holds => {}
                    BoundCheck::Uncertified => uncertified += 1,
                    BoundCheck::Untestable => untestable += 1,
                    BoundCheck::Violated(w) => {
                        return Err(format!("b^{beta} b^{gamma} at {alpha}: {w}"));
                    }
                }
            }
        }
    }
    let tested = total - untestable;
    if tested * 2 < total {
        return Err(format!("only {tested}/{total} coefficients resolvable at this precision"));
    }
    if uncertified > tested / 20 {
        return Err(format!("{uncertified}/{tested} uncertifiable coefficients (> 5%)"));
    }
    Ok(format!("{tested}/{total} testable coefficients, {uncertified} uncertifiable"))
}

fn c5_dual_basis() -> Result<String, String> {
    let p = 5;
    let mult = heisenberg(p);
    let tr = trunc(p);
    let grid = enumerate_indices(3, 2, -3, 3);
    let radii = [
        RadiusExponent::reference(),
        RadiusExponent::from_fraction(1, 4).unwrap(),
    ];
    let alphas = enumerate_indices(3, 1, -3, 3);
    let mut count = 0;
    for alpha in &alphas {
        let el = dual_basis(&mult, alpha, &grid, tr, Rat::from_integer(3))
            .map_err(|e| e.to_string())?;
        if el.exhausted || !(el.defect <= NormValue::from_exponent(Rat::from_integer(3))) {
            return Err(format!(
                "alpha={alpha}: defect {} (exhausted: {})",
                el.defect, el.exhausted
            ));
        }
        for rho in radii {
            let expect = NormValue::from_exponent(Rat::from_integer(-alpha.degree()) * rho.exponent());
            let got = el.series.norm_rho(rho);
            if got != expect {
                return Err(format!("alpha={alpha}: |f|_rho = {got}, |b^-a|_rho = {expect}"));
            }
        }
        count += 1;
    }
    Ok(format!("{count} alphas, defect <= p^-3, norms preserved"))
}

fn c7_ore_postconditions() -> Result<String, String> {
    let p = 5;
    let mult = heisenberg(p);
    // wider window than the shared policy: t = s^ell and the chain terms reach
    // total degree 6 for degree-2 denominators
    let tr = TruncationPolicy::with_default_rho(
        PrecisionPolicy::new(p, 8).unwrap(),
        -6,
        6,
        6,
        Rat::from_integer(8),
    )
    .map_err(|e| e.to_string())?;
    let norms = vec![
        RadiusExponent::reference(),
        RadiusExponent::from_fraction(1, 4).unwrap(),
    ];
    let mut rng = seeded_rng(0xA7);
    // low-degree gamma samples: full-window pairs under the wide policy cost
    // minutes of rewriting without changing the witnessed gamma
    let samples: Vec<_> = (0..4)
        .map(|_| {
            (
                small_series(&mut rng, tr, 2, 1, 2),
                small_series(&mut rng, tr, 2, 1, 2),
            )
        })
        .collect();
    let handle =
        NormedAlgebraHandle::new(mult, norms, &samples).map_err(|e| e.to_string())?;
    let denominators = [
        MonomialIndex(vec![1, 0, 0]),
        MonomialIndex(vec![0, 1, 0]),
        MonomialIndex(vec![0, 0, 1]),
        MonomialIndex(vec![1, 1, 0]),
        MonomialIndex(vec![0, 1, 1]),
    ];
    let mut checked = 0;
    for i in 0..25 {
        let s = &denominators[i % denominators.len()];
        // unit coefficients: a high-valuation numerator puts the relative
        // target eps |a| |t| below what the truncation policy can resolve
        let a = small_series(&mut rng, tr, 2, 0, 2);
        // eps = p^-2 needs t = s^4: representable in the window only for
        // degree-1 denominators
        let eps_exps: &[i64] = if s.degree() > 1 { &[1] } else { &[1, 2] };
        for &eps_exp in eps_exps {
            let eps = NormValue::from_exponent(Rat::from_integer(eps_exp));
            let res = ore_approx(&handle, eps, s, &a).map_err(|e| e.to_string())?;
            if !res.achieved {
                return Err(format!(
                    "sample {i} s={s} eps=p^-{eps_exp}: achieved only {:?}",
                    res.eps_achieved
                ));
            }
            if !res.norm_preserved {
                return Err(format!("sample {i} s={s}: |s||b| != |a||t|"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} Ore runs, both norms exact"))
}

fn c8_qa_witness() -> Result<String, String> {
    let rho = RadiusExponent::reference();
    let mut rng = seeded_rng(0xA8);
    let tr5 = trunc(5);
    let pairs = random_pairs(&mut rng, 3, tr5, 3, 200);
    let gamma = qa_gamma_estimate(&heisenberg(5), rho, &pairs).map_err(|e| e.to_string())?;
    if !(gamma <= NormValue::from_exponent(Rat::new(1, 2))) {
        return Err(format!("heisenberg gamma-hat = {gamma} > p^-1/2"));
    }
    let tr3 = trunc(3);
    let pairs = random_pairs(&mut rng, 2, tr3, 3, 200);
    let ab = qa_gamma_estimate(
        &multiplier(Arc::new(AbelianChart::new(2))),
        rho,
        &pairs,
    )
    .map_err(|e| e.to_string())?;
    if !ab.is_zero() {
        return Err(format!("abelian gamma-hat = {ab} != 0"));
    }
    Ok(format!("heisenberg gamma-hat = {gamma}, abelian 0"))
}

fn c9_norm_multiplicativity() -> Result<String, String> {
    let p = 5;
    let mult = heisenberg(p);
    let tr = trunc(p);
    let radii = [
        RadiusExponent::reference(),
        RadiusExponent::from_fraction(1, 3).unwrap(),
    ];
    let mut rng = seeded_rng(0xA9);
    let mut certified = 0;
    for (x, y) in random_pairs(&mut rng, 3, tr, 3, 200) {
        let prod = mult.series_product(&x, &y).map_err(|e| e.to_string())?;
        // certification is kept at the reference radius
        let expect_ref = x.norm_rho(tr.rho_ref).mul(&y.norm_rho(tr.rho_ref));
        if !prod.err().certifies(&expect_ref) {
            continue;
        }
        certified += 1;
        for rho in radii {
            let expect = x.norm_rho(rho).mul(&y.norm_rho(rho));
            let got = prod.norm_rho(rho);
            if got != expect {
                return Err(format!("|xy| = {got} != |x||y| = {expect} at rho exp {}", rho.exponent()));
            }
        }
    }
    if certified < 50 {
        return Err(format!("only {certified}/200 certified samples"));
    }
    Ok(format!("{certified} certified pairs, both radii exact"))
}

fn c10_radius_limit() -> Result<String, String> {
    let p = 5;
    let tr = trunc(p);
    let mut rng = seeded_rng(0xAA);
    for i in 0..50 {
        let x = random_series(&mut rng, 3, tr, 4);
        if x.is_zero() {
            continue;
        }
        let sup = x.sup_norm().exponent().unwrap();
        let max_deg = x
            .terms()
            .map(|(a, _)| a.degree().abs())
            .max()
            .unwrap();
        let radii: Vec<RadiusExponent> = (2..=32)
            .map(|k| RadiusExponent::from_fraction(1, k).unwrap())
            .collect();
        let seq: Vec<Rat> = x
            .radius_limit_check(&radii)
            .iter()
            .map(|n| n.exponent().unwrap())
            .collect();
        // eventually monotone: distances to the sup-norm exponent are
        // non-increasing over the last third of the sequence
        let dist: Vec<Rat> = seq.iter().map(|e| (*e - sup).abs()).collect();
        let tail = &dist[dist.len() - 10..];
        if tail.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("sample {i}: tail not monotone: {tail:?}"));
        }
        let bound = Rat::new(6 * max_deg, 32);
        if dist[dist.len() - 1] > bound {
            return Err(format!(
                "sample {i}: k=32 gap {} > {bound}",
                dist[dist.len() - 1]
            ));
        }
    }
    Ok("50 series, affine tail bound holds".into())
}

fn c11_comparison_lemma() -> Result<String, String> {
    let p = 5;
    let mult = heisenberg(p);
    let tr = trunc(p);
    let rho1 = RadiusExponent::reference();
    let rho2 = RadiusExponent::from_fraction(1, 3).unwrap();
    let mut rng = seeded_rng(0xAB);
    let mut checked = 0;
    for _ in 0..100 {
        let e = small_series(&mut rng, tr, 2, 3, 3);
        let f = small_series(&mut rng, tr, 2, 3, 3);
        let ef = mult.series_product(&e, &f).map_err(|err| err.to_string())?;
        let circ = e.mul_commutative(&f).map_err(|err| err.to_string())?;
        let diff = ef.sub_series(&circ).map_err(|err| err.to_string())?;
        let lhs = diff.norm_two_radius(rho1, rho2);
        let rhs = ef.norm_two_radius(rho1, rho2);
        // only certified samples witness the strict inequality
        if !ef.err().certifies(&ef.norm_rho(tr.rho_ref)) {
            continue;
        }
        if !diff.is_zero() && !diff.err().certifies(&diff.norm_rho(tr.rho_ref)) {
            continue;
        }
        checked += 1;
        if !(lhs < rhs) {
            return Err(format!("|ef - e.f| = {lhs} >= |ef| = {rhs}"));
        }
    }
    if checked < 30 {
        return Err(format!("only {checked}/100 certified samples"));
    }
    Ok(format!("{checked} certified pairs, strict inequality"))
}

fn c12_graded_ring() -> Result<String, String> {
    let p = 5;
    let mono = |deg_sign: i64| -> GradedMonomial {
        let alpha = match deg_sign {
            1 => MonomialIndex(vec![1, 0, 0]),
            -1 => MonomialIndex(vec![-1, 0, 0]),
            _ => MonomialIndex(vec![0, 0, 0]),
        };
        GradedMonomial::new(p, 2, 0, alpha).unwrap()
    };
    // sign table: annihilation exactly on strictly opposite degree signs
    for (a, b) in [(1i64, 1i64), (1, 0), (0, 1), (0, 0), (-1, -1), (-1, 0), (0, -1), (1, -1), (-1, 1)] {
        let got = graded_mul(&mono(a), &mono(b)).is_none();
        let expect = (a > 0 && b < 0) || (a < 0 && b > 0);
        if got != expect {
            return Err(format!("sign case ({a}, {b}): annihilated = {got}"));
        }
    }
    // exhaustive associativity over |alpha_i| <= 2, d = 3
    let grid = enumerate_indices(3, 2, -6, 6);
    let make = |alpha: &MonomialIndex| GradedMonomial::new(p, 2, 1, alpha.clone()).unwrap();
    let mul3 = |x: Option<GradedMonomial>, y: &GradedMonomial| -> Option<GradedMonomial> {
        x.and_then(|x| graded_mul(&x, y))
    };
    let mut triples = 0u64;
    for a in &grid {
        let ga = make(a);
        for b in &grid {
            let gb = make(b);
            let ab = graded_mul(&ga, &gb);
            for c in &grid {
                let gc = make(c);
                let lhs = mul3(ab.clone(), &gc);
                let rhs = graded_mul(&gb, &gc).and_then(|bc| graded_mul(&ga, &bc));
                if lhs != rhs {
                    return Err(format!("associativity fails at ({a}, {b}, {c})"));
                }
                triples += 1;
            }
        }
    }
    Ok(format!("sign table and {triples} associativity triples"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let t0 = std::time::Instant::now();
    let mut last = std::time::Instant::now();
    let mut run = |n: u32, name: &str, result: Result<String, String>| {
        let dt = last.elapsed().as_secs_f64();
        last = std::time::Instant::now();
        match result {
            Ok(detail) => println!("criterion {n:2} ({name}): pass - {detail} [{dt:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:2} ({name}): FAIL - {detail} [{dt:.1}s]");
            }
        }
    };

    run(1, "abelian oracle equivalence", c1_abelian_oracle());
    run(2, "group-law master homomorphism", c2_master_homomorphism());
    let sweep = GridSweep::new(5, 2);
    run(3, "pairing bounds", c3_pairing_bounds(&sweep));
    run(4, "quantitative pairing estimate", c4_quantitative_estimate(&sweep));
    run(5, "dual basis defect and norms", c5_dual_basis());
    run(6, "product coefficient bounds", c6_coefficient_bounds(&sweep));
    run(7, "ore postconditions", c7_ore_postconditions());
    run(8, "quasi-abelian witness", c8_qa_witness());
    run(9, "norm multiplicativity", c9_norm_multiplicativity());
    run(10, "radius limit to sup norm", c10_radius_limit());
    run(11, "comparison lemma", c11_comparison_lemma());
    run(12, "graded ring", c12_graded_ring());

    println!(
        "acceptance: {} of 12 criteria passed in {:.1}s",
        12 - failures,
        t0.elapsed().as_secs_f64()
    );
    if failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
