//! The quantitative experiments: weighted prime counts theta(x;C,q,a) by
//! residue class, their character twists, the average-square-error sum
//! V(x,Q) over admissible moduli (by two independent algorithms), slope
//! fits for the full-range asymptotic, and the prime-power gap bound.

use crate::characters::{CharValue, CharacterGroup, DirichletCharacter};
use crate::error::{Error, Result};
use crate::galois::{admissible_modulus, FrobeniusTable, GaloisContext};
use crate::kahan::{KahanComplex, KahanSum};
use crate::poly::ddf_cycle_type;
use crate::sieve::{gcd, sieve_primes, SpfTable};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// Default cap on the number of prime pairs the divisor-switching variance
/// path will enumerate.
pub const DEFAULT_PAIR_BUDGET: u64 = 100_000_000;

/// Default memory budget for theta tables (bytes).
pub const DEFAULT_THETA_BUDGET: u64 = 4 << 30;

/// Accumulated theta(x;C,q,a) for every admissible q <= Q and residue a
/// coprime to q (residues labeled 1..=q).
#[derive(Debug, Clone)]
pub struct ThetaTable {
    pub x: u64,
    pub q_max: u64,
    values: BTreeMap<(u64, u64), f64>,
}

impl ThetaTable {
    pub fn value(&self, q: u64, a: u64) -> Option<f64> {
        self.values.get(&(q, a)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.values.iter().map(|(&(q, a), &v)| (q, a, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn theta_table(ctx: &GaloisContext, table: &FrobeniusTable, q_max: u64) -> Result<ThetaTable> {
    theta_table_budgeted(ctx, table, q_max, DEFAULT_THETA_BUDGET)
}

pub fn theta_table_budgeted(
    ctx: &GaloisContext,
    table: &FrobeniusTable,
    q_max: u64,
    budget_bytes: u64,
) -> Result<ThetaTable> {
    if q_max < 1 {
        return Err(Error::Domain("theta table needs Q >= 1".into()));
    }
    let spf = SpfTable::new(q_max);
    let qs: Vec<u64> = (1..=q_max).filter(|&q| admissible_modulus(ctx, q)).collect();
    let cells: u64 = qs.iter().map(|&q| spf.phi(q)).sum();
    let estimate = cells.saturating_mul(64);
    if estimate > budget_bytes {
        return Err(Error::Resource(format!(
            "theta table for Q = {q_max} needs ~{cells} cells (~{estimate} bytes) but the \
             budget is {budget_bytes}; lower Q or raise memory_budget_mb"
        )));
    }
    let in_c = table.in_c_primes();
    let mut values = BTreeMap::new();
    let mut buckets: Vec<KahanSum> = Vec::new();
    for &q in &qs {
        buckets.clear();
        buckets.resize(q as usize, KahanSum::new());
        for &(p, lp) in &in_c {
            buckets[(p % q) as usize].add(lp);
        }
        for a in 1..=q {
            if gcd(a, q) == 1 {
                values.insert((q, a), buckets[(a % q) as usize].value());
            }
        }
    }
    Ok(ThetaTable {
        x: table.x,
        q_max,
        values,
    })
}

/// A character-twisted error term: the twisted log-weighted count, with the
/// expected main term removed when the character is principal.
#[derive(Debug, Clone)]
pub struct TwistedError {
    pub chi: DirichletCharacter,
    pub value: Complex64,
}

pub fn twisted_error(
    ctx: &GaloisContext,
    table: &FrobeniusTable,
    chi: &DirichletCharacter,
) -> TwistedError {
    let q = chi.modulus();
    let values = chi.complex_table();
    let mut acc = KahanComplex::new();
    for e in &table.entries {
        if e.in_c {
            acc.add(values[(e.p % q) as usize] * e.log_p);
        }
    }
    let mut value = acc.value();
    if chi.is_principal() {
        value.re -= ctx.class_density.value() * table.x as f64;
    }
    TwistedError {
        chi: chi.clone(),
        value,
    }
}

/// Rebuild theta(x;C,q,a) from the character twists:
/// main/phi(q) + (1/phi(q)) * sum over chi of conj(chi(a)) * E(x; chi).
/// Cross-checks the residue-bucket path through a completely different
/// decomposition.
pub fn reconstruct_theta(
    ctx: &GaloisContext,
    table: &FrobeniusTable,
    group: &CharacterGroup,
    a: u64,
) -> Result<f64> {
    let q = group.modulus();
    if gcd(a, q) != 1 {
        return Err(Error::Domain(format!(
            "residue {a} is not coprime to the modulus {q}"
        )));
    }
    if !admissible_modulus(ctx, q) {
        return Err(Error::Domain(format!(
            "modulus {q} is not admissible for context {}",
            ctx.name
        )));
    }
    let phi = group.len() as f64;
    let mut acc = KahanComplex::new();
    for chi in group.coset_representatives() {
        let e = twisted_error(ctx, table, chi);
        let weight = match chi.eval(a) {
            CharValue::Root(r) => r.conj().to_complex(),
            CharValue::Zero => unreachable!("a is coprime to q"),
        };
        acc.add(weight * e.value);
    }
    let main = ctx.class_density.value() * table.x as f64 / phi;
    Ok(main + acc.value().re / phi)
}

#[inline]
fn modulus_prime_corrections(
    spf: &SpfTable,
    q: u64,
    x: u64,
    in_c_log: &HashMap<u64, f64>,
) -> (f64, f64) {
    let mut w1 = 0.0;
    let mut w2 = 0.0;
    for l in spf.prime_divisors(q) {
        if l <= x {
            if let Some(&lp) = in_c_log.get(&l) {
                w1 += lp;
                w2 += lp * lp;
            }
        }
    }
    (w1, w2)
}

/// V(x,Q) = sum over admissible q <= Q, residues a coprime to q, of
/// (theta(x;C,q,a) - (|C|/|G|) x / phi(q))^2, by direct residue bucketing.
///
/// Expanding the square per modulus: with b_a the bucket sums, S the total
/// in-class log sum, and W1/W2 the (log, log^2) contributions of in-class
/// primes dividing q (which land alone in non-coprime buckets),
///   V_q = (sum_all b^2 - W2) - 2 m (S - W1) + phi(q) m^2.
/// Parallel over q; the final reduction runs in ascending q order so output
/// bits do not depend on the worker count.
pub fn variance_bucketed(ctx: &GaloisContext, table: &FrobeniusTable, q_max: u64) -> f64 {
    assert!(q_max >= 1, "variance needs Q >= 1");
    let x = table.x;
    let xf = x as f64;
    let density = ctx.class_density.value();
    let in_c = table.in_c_primes();
    let s_c = in_c.iter().map(|&(_, lp)| lp).collect::<KahanSum>().value();
    let in_c_log: HashMap<u64, f64> = in_c.iter().copied().collect();
    let spf = SpfTable::new(q_max);
    let qs: Vec<u64> = (1..=q_max).filter(|&q| admissible_modulus(ctx, q)).collect();

    let terms: Vec<f64> = qs
        .par_iter()
        .map_init(
            || {
                (
                    vec![KahanSum::new(); q_max as usize],
                    Vec::<u32>::with_capacity(in_c.len().min(q_max as usize)),
                )
            },
            |(buckets, touched), &q| {
                for &(p, lp) in &in_c {
                    let i = (p % q) as usize;
                    if buckets[i].is_zero() {
                        touched.push(i as u32);
                    }
                    buckets[i].add(lp);
                }
                let mut total_sq = KahanSum::new();
                for &i in touched.iter() {
                    let b = buckets[i as usize].value();
                    total_sq.add(b * b);
                    buckets[i as usize] = KahanSum::new();
                }
                touched.clear();
                let phi = spf.phi(q) as f64;
                let m = density * xf / phi;
                let (w1, w2) = modulus_prime_corrections(&spf, q, x, &in_c_log);
                (total_sq.value() - w2) - 2.0 * m * (s_c - w1) + phi * m * m
            },
        )
        .collect();

    terms.into_iter().collect::<KahanSum>().value()
}

pub fn variance_pairpath(ctx: &GaloisContext, table: &FrobeniusTable, q_max: u64) -> Result<f64> {
    variance_pairpath_budgeted(ctx, table, q_max, DEFAULT_PAIR_BUDGET)
}

/// The same sum as `variance_bucketed`, by switching divisors: expand
/// sum_a theta^2 into a diagonal term plus twice the sum of
/// log p1 log p2 over in-class pairs p1 < p2 with q | (p2 - p1), then sum
/// the pair weights per difference and walk multiples of each q. No pair
/// with p1 | q can occur (q | p2 - p1 and p1 | q would force p1 = p2), so
/// only the diagonal needs the dividing-prime correction.
pub fn variance_pairpath_budgeted(
    ctx: &GaloisContext,
    table: &FrobeniusTable,
    q_max: u64,
    pair_budget: u64,
) -> Result<f64> {
    if q_max < 1 {
        return Err(Error::Domain("variance needs Q >= 1".into()));
    }
    let in_c = table.in_c_primes();
    let n = in_c.len() as u64;
    if n.saturating_mul(n) > pair_budget {
        return Err(Error::Resource(format!(
            "pair enumeration needs {n}^2 = {} steps, over the budget of {pair_budget}; \
             lower x or raise pair_budget",
            n.saturating_mul(n)
        )));
    }
    let x = table.x;
    let xf = x as f64;
    let density = ctx.class_density.value();

    let mut diag = KahanSum::new();
    let mut s_acc = KahanSum::new();
    let mut diff: Vec<KahanSum> = vec![KahanSum::new(); x as usize + 1];
    for i in 0..in_c.len() {
        let (pi, li) = in_c[i];
        diag.add(li * li);
        s_acc.add(li);
        for &(pj, lj) in &in_c[i + 1..] {
            diff[(pj - pi) as usize].add(li * lj);
        }
    }
    let s_c = s_acc.value();
    let in_c_log: HashMap<u64, f64> = in_c.iter().copied().collect();
    let spf = SpfTable::new(q_max);

    let mut total = KahanSum::new();
    for q in 1..=q_max {
        if !admissible_modulus(ctx, q) {
            continue;
        }
        let mut pairs = KahanSum::new();
        let mut k = q;
        while k <= x {
            pairs.add(diff[k as usize].value());
            k += q;
        }
        let phi = spf.phi(q) as f64;
        let m = density * xf / phi;
        let (w1, w2) = modulus_prime_corrections(&spf, q, x, &in_c_log);
        total.add((diag.value() - w2) + 2.0 * pairs.value() - 2.0 * m * (s_c - w1) + phi * m * m);
    }
    Ok(total.value())
}

/// How Q is chosen from x in variance runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QRule {
    /// Q = x (full range)
    Full,
    /// Q = floor(x / (log x)^k)
    LogPow(f64),
    /// fixed Q
    Explicit(u64),
}

impl QRule {
    pub fn q_for(self, x: u64) -> u64 {
        match self {
            QRule::Full => x,
            QRule::LogPow(k) => {
                let xf = x as f64;
                (xf / xf.ln().powf(k)).floor() as u64
            }
            QRule::Explicit(q) => q,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarianceRow {
    pub x: u64,
    pub q_max: u64,
    pub v: f64,
    pub xq_log_x: f64,
    pub ratio_thm1: f64,
    pub s_over_x2: f64,
    pub log_x: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    pub fitted_slope: Option<f64>,
    pub fitted_intercept: Option<f64>,
    pub fitted_cprime: Option<f64>,
}

fn make_row(ctx: &GaloisContext, table: &FrobeniusTable, x: u64, q: u64) -> VarianceRow {
    let v = variance_bucketed(ctx, table, q);
    let xf = x as f64;
    let xq_log_x = xf * q as f64 * xf.ln();
    VarianceRow {
        x,
        q_max: q,
        v,
        xq_log_x,
        ratio_thm1: v / xq_log_x,
        s_over_x2: v / (xf * xf),
        log_x: xf.ln(),
    }
}

fn check_report_inputs(table: &FrobeniusTable, xs: &[u64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Config("x list must be nonempty".into()));
    }
    for &x in xs {
        if x < 2 {
            return Err(Error::Config(format!("x values must be >= 2, got {x}")));
        }
        if x > table.x {
            return Err(Error::Domain(format!(
                "classification table covers [2, {}], need x = {x}",
                table.x
            )));
        }
    }
    Ok(())
}

/// One variance row per x with Q from the rule; no constraint between Q and
/// x beyond Q >= 1.
pub fn variance_report(
    ctx: &GaloisContext,
    table: &FrobeniusTable,
    xs: &[u64],
    q_rule: QRule,
) -> Result<VarianceReport> {
    check_report_inputs(table, xs)?;
    let mut rows = Vec::with_capacity(xs.len());
    let mut seen = std::collections::BTreeSet::new();
    for &x in xs {
        let q = q_rule.q_for(x);
        if q < 1 {
            return Err(Error::Config(format!("Q rule yields Q = 0 at x = {x}")));
        }
        if !seen.insert((x, q)) {
            return Err(Error::Config(format!("duplicate report row (x, Q) = ({x}, {q})")));
        }
        rows.push(make_row(ctx, &table.truncated(x), x, q));
    }
    Ok(VarianceReport {
        rows,
        ..Default::default()
    })
}

/// Like `variance_report`, but every row must sit inside the window
/// x (log x)^(-M) <= Q <= x where the square-error bound applies.
pub fn thm1_report(
    ctx: &GaloisContext,
    table: &FrobeniusTable,
    xs: &[u64],
    q_rule: QRule,
    m_exponent: f64,
) -> Result<VarianceReport> {
    check_report_inputs(table, xs)?;
    for &x in xs {
        let q = q_rule.q_for(x);
        let xf = x as f64;
        let lower = xf * xf.ln().powf(-m_exponent);
        if q < 1 || (q as f64) < lower || q > x {
            return Err(Error::Config(format!(
                "Q = {q} outside the bound window [{lower:.3}, {x}] for x = {x}, M = {m_exponent}"
            )));
        }
    }
    variance_report(ctx, table, xs, q_rule)
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Full-range asymptotics: compute S(x) = V(x, x) at every x, fit
/// S(x)/x^2 against log x (slope estimates the class density, intercept the
/// constant term), and estimate the partial-range constant c' at Q = x/2 by
/// removing both known main terms:
///   V(x,Q) ~ d x Q log x - d^2 x Q log(x/Q) + c' x Q,  d = |C|/|G|.
/// Requires a context with abelian conductor 1 so the full modulus range is
/// admissible.
pub fn thm2_report(ctx: &GaloisContext, table: &FrobeniusTable, xs: &[u64]) -> Result<VarianceReport> {
    if ctx.abelian_conductor != 1 {
        return Err(Error::Domain(format!(
            "full-range asymptotics need every modulus admissible (abelian conductor 1); \
             context {} has conductor {}",
            ctx.name, ctx.abelian_conductor
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Config(format!(
            "slope fit needs at least 3 x values, got {}",
            xs.len()
        )));
    }
    check_report_inputs(table, xs)?;
    let mut seen = std::collections::BTreeSet::new();
    for &x in xs {
        if !seen.insert(x) {
            return Err(Error::Config(format!("duplicate x value {x}")));
        }
    }
    let density = ctx.class_density.value();
    let mut rows = Vec::with_capacity(xs.len());
    let mut cprime = KahanSum::new();
    for &x in xs {
        let truncated = table.truncated(x);
        rows.push(make_row(ctx, &truncated, x, x));

        let qp = (x / 2).max(1);
        let v_partial = variance_bucketed(ctx, &truncated, qp);
        let xf = x as f64;
        let qf = qp as f64;
        let resid = v_partial - density * xf * qf * xf.ln()
            + density * density * xf * qf * (xf / qf).ln();
        cprime.add(resid / (xf * qf));
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.log_x, r.s_over_x2)).collect();
    let (slope, intercept) = least_squares(&points);
    Ok(VarianceReport {
        rows,
        fitted_slope: Some(slope),
        fitted_intercept: Some(intercept),
        fitted_cprime: Some(cprime.value() / xs.len() as f64),
    })
}

/// Gap between the prime-power-weighted and prime-weighted counts,
/// restricted to unramified primes, against its theoretical allowance
/// sqrt(x) log x + (2/|G|) log|d_L|. The gap collects log p over in-class
/// prime powers p^m <= x with m >= 2, where the class membership of p^m is
/// the cycle type of the m-th power of the Frobenius of p.
pub fn psi_gap_check(ctx: &GaloisContext, x: u64) -> Result<(f64, f64)> {
    if x < 2 {
        return Err(Error::Domain(format!("gap check needs x >= 2, got {x}")));
    }
    let mut root = (x as f64).sqrt() as u64;
    while root * root > x {
        root -= 1;
    }
    while (root + 1) * (root + 1) <= x {
        root += 1;
    }
    let primes = sieve_primes(root)?;
    let mut gap = KahanSum::new();
    for (i, &p) in primes.primes.iter().enumerate() {
        if ctx.ramified_primes.contains(&p) {
            continue;
        }
        let base = ddf_cycle_type(&ctx.defining_poly, p)?;
        let mut pm = p * p;
        let mut m = 2u64;
        loop {
            if ctx.class_spec.contains(&base.power(m)) {
                gap.add(primes.logs[i]);
            }
            match pm.checked_mul(p) {
                Some(next) if next <= x => {
                    pm = next;
                    m += 1;
                }
                _ => break,
            }
        }
    }
    let xf = x as f64;
    let bound = xf.sqrt() * xf.ln() + 2.0 / ctx.group_order as f64 * ctx.log_disc_l;
    Ok((gap.value(), bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::test_fixtures::{s3_spec, trivial_spec};
    use crate::galois::{build_context, classify_primes, ContextSpec};
    use crate::kahan::approx_eq;

    fn spec(name: &str) -> ContextSpec {
        match name {
            "s3" => s3_spec(),
            "trivial" => trivial_spec(),
            _ => panic!(),
        }
    }

    fn ctx_and_table(name: &str, x: u64) -> (GaloisContext, FrobeniusTable) {
        let ctx = build_context(&spec(name)).unwrap();
        let primes = sieve_primes(x).unwrap();
        let table = classify_primes(&ctx, x, &primes).unwrap();
        (ctx, table)
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn theta_trivial_x10() {
        let (ctx, table) = ctx_and_table("trivial", 10);
        let t = theta_table(&ctx, &table, 3).unwrap();
        assert!(approx_eq(t.value(3, 1).unwrap(), 7f64.ln(), 1e-12, 0.0));
        assert!(approx_eq(t.value(3, 2).unwrap(), LN2 + 5f64.ln(), 1e-12, 0.0));
        let all: f64 = LN2 + 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!(approx_eq(t.value(1, 1).unwrap(), all, 1e-12, 0.0));
        assert_eq!(t.value(3, 3), None);
        assert_eq!(t.value(4, 1), None); // beyond q_max
    }

    #[test]
    fn theta_s3_x20() {
        let (ctx, table) = ctx_and_table("s3", 20);
        let t = theta_table(&ctx, &table, 5).unwrap();
        // in-class primes are 5, 11, 17
        assert!(approx_eq(
            t.value(4, 1).unwrap(),
            5f64.ln() + 17f64.ln(),
            1e-12,
            0.0
        ));
        assert!(approx_eq(t.value(4, 3).unwrap(), 11f64.ln(), 1e-12, 0.0));
        // q = 3 is inadmissible for this context: no entries at all
        assert_eq!(t.value(3, 1), None);
        assert_eq!(t.value(3, 2), None);
        // 5 divides q = 5, so it falls in no coprime class
        assert!(approx_eq(
            t.value(5, 1).unwrap(),
            11f64.ln(),
            1e-12,
            0.0
        ));
        assert!(approx_eq(t.value(5, 2).unwrap(), 17f64.ln(), 1e-12, 0.0));
        assert_eq!(t.value(5, 3).unwrap(), 0.0);
        assert_eq!(t.value(5, 4).unwrap(), 0.0);
    }

    #[test]
    fn theta_partition_identity() {
        for name in ["trivial", "s3"] {
            let (ctx, table) = ctx_and_table(name, 10_000);
            let t = theta_table(&ctx, &table, 50).unwrap();
            let whole = t.value(1, 1).unwrap();
            let in_c_log: HashMap<u64, f64> = table.in_c_primes().into_iter().collect();
            for q in 1..=50u64 {
                if !admissible_modulus(&ctx, q) {
                    continue;
                }
                let mut sum = KahanSum::new();
                for a in 1..=q {
                    if gcd(a, q) == 1 {
                        sum.add(t.value(q, a).unwrap());
                    }
                }
                for (p, lp) in &in_c_log {
                    if q % p == 0 {
                        sum.add(*lp);
                    }
                }
                assert!(
                    approx_eq(sum.value(), whole, 1e-9, 1e-12),
                    "{name} q={q}: {} vs {whole}",
                    sum.value()
                );
            }
        }
    }

    #[test]
    fn theta_budget_error() {
        let (ctx, table) = ctx_and_table("trivial", 100);
        assert!(matches!(
            theta_table_budgeted(&ctx, &table, 100, 64),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn twisted_error_examples() {
        let (ctx, table) = ctx_and_table("trivial", 10);
        // principal mod 1: all primes, main term removed
        let g1 = CharacterGroup::new(1);
        let e = twisted_error(&ctx, &table, g1.principal());
        let expect = LN2 + 3f64.ln() + 5f64.ln() + 7f64.ln() - 10.0;
        assert!(approx_eq(e.value.re, expect, 1e-12, 0.0), "{}", e.value.re);
        assert_eq!(e.value.im, 0.0);

        // mod 4: principal drops p = 2 but keeps the main term
        let g4 = CharacterGroup::new(4);
        let e0 = twisted_error(&ctx, &table, g4.principal());
        let expect0 = 3f64.ln() + 5f64.ln() + 7f64.ln() - 10.0;
        assert!(approx_eq(e0.value.re, expect0, 1e-12, 0.0));

        // the quadratic character mod 4: chi(3) = chi(7) = -1, chi(5) = 1
        let chi = g4.iter().find(|c| !c.is_principal()).unwrap();
        let e1 = twisted_error(&ctx, &table, chi);
        let expect1 = -3f64.ln() + 5f64.ln() - 7f64.ln();
        assert!(approx_eq(e1.value.re, expect1, 1e-12, 0.0));
        assert_eq!(e1.value.im, 0.0);
    }

    #[test]
    fn twisted_error_empty_range() {
        let ctx = build_context(&spec("trivial")).unwrap();
        let primes = sieve_primes(10).unwrap();
        let table = classify_primes(&ctx, 1, &primes).unwrap();
        let g1 = CharacterGroup::new(1);
        let e = twisted_error(&ctx, &table, g1.principal());
        assert_eq!(e.value.re, -1.0); // -(density) * x with x = 1
        let g4 = CharacterGroup::new(4);
        let chi = g4.iter().find(|c| !c.is_principal()).unwrap();
        assert_eq!(twisted_error(&ctx, &table, chi).value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn reconstruct_matches_direct_bucketing() {
        let (ctx, table) = ctx_and_table("trivial", 10);
        let g4 = CharacterGroup::new(4);
        let rebuilt = reconstruct_theta(&ctx, &table, &g4, 1).unwrap();
        assert!(approx_eq(rebuilt, 5f64.ln(), 1e-9, 1e-12), "{rebuilt}");

        // q = 1 reproduces the full sum
        let g1 = CharacterGroup::new(1);
        let whole = reconstruct_theta(&ctx, &table, &g1, 1).unwrap();
        let t = theta_table(&ctx, &table, 1).unwrap();
        assert!(approx_eq(whole, t.value(1, 1).unwrap(), 1e-12, 1e-12));
    }

    #[test]
    fn reconstruct_identity_at_scale() {
        for name in ["trivial", "s3"] {
            let (ctx, table) = ctx_and_table(name, 1_000);
            let t = theta_table(&ctx, &table, 30).unwrap();
            for q in 1..=30u64 {
                if !admissible_modulus(&ctx, q) {
                    continue;
                }
                let group = CharacterGroup::new(q);
                for a in 1..=q {
                    if gcd(a, q) != 1 {
                        continue;
                    }
                    let rebuilt = reconstruct_theta(&ctx, &table, &group, a).unwrap();
                    let direct = t.value(q, a).unwrap();
                    assert!(
                        approx_eq(rebuilt, direct, 1e-9, 1e-12),
                        "{name} q={q} a={a}: {rebuilt} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn reconstruct_rejects_bad_inputs() {
        let (ctx, table) = ctx_and_table("s3", 100);
        let g4 = CharacterGroup::new(4);
        assert!(reconstruct_theta(&ctx, &table, &g4, 2).is_err()); // gcd(2,4)>1
        let g3 = CharacterGroup::new(3);
        assert!(reconstruct_theta(&ctx, &table, &g3, 1).is_err()); // inadmissible
    }

    /// Direct-enumeration value for the trivial context at x = 10, Q = 3:
    /// buckets spelled out by hand from the primes {2, 3, 5, 7}.
    fn hand_variance_10_3() -> f64 {
        let (l2, l3, l5, l7) = (LN2, 3f64.ln(), 5f64.ln(), 7f64.ln());
        let q1 = {
            let b = l2 + l3 + l5 + l7;
            (b - 10.0) * (b - 10.0)
        };
        let q2 = {
            let b1 = l3 + l5 + l7; // odd primes
            (b1 - 10.0) * (b1 - 10.0)
        };
        let q3 = {
            let b1 = l7;
            let b2 = l2 + l5;
            (b1 - 5.0) * (b1 - 5.0) + (b2 - 5.0) * (b2 - 5.0)
        };
        q1 + q2 + q3
    }

    #[test]
    fn variance_hand_example() {
        let (ctx, table) = ctx_and_table("trivial", 10);
        let v = variance_bucketed(&ctx, &table, 3);
        let expect = hand_variance_10_3();
        assert!(approx_eq(v, expect, 1e-12, 0.0), "{v} vs {expect}");
        assert!((v - 66.833).abs() < 1e-3);
        let vp = variance_pairpath(&ctx, &table, 3).unwrap();
        assert!(approx_eq(vp, expect, 1e-9, 1e-12), "{vp} vs {expect}");
    }

    #[test]
    fn variance_empty_range() {
        let ctx = build_context(&spec("trivial")).unwrap();
        let primes = sieve_primes(10).unwrap();
        let table = classify_primes(&ctx, 1, &primes).unwrap();
        assert_eq!(variance_bucketed(&ctx, &table, 1), 1.0); // (0 - 1)^2
        assert_eq!(variance_pairpath(&ctx, &table, 1).unwrap(), 1.0);
    }

    #[test]
    fn variance_cross_path_at_scale() {
        for name in ["trivial", "s3"] {
            let (ctx, table) = ctx_and_table(name, 1_000);
            let vb = variance_bucketed(&ctx, &table, 50);
            let vp = variance_pairpath(&ctx, &table, 50).unwrap();
            assert!(approx_eq(vb, vp, 1e-9, 1e-12), "{name}: {vb} vs {vp}");

            let vb1 = variance_bucketed(&ctx, &table, 1);
            let vp1 = variance_pairpath(&ctx, &table, 1).unwrap();
            assert!(approx_eq(vb1, vp1, 1e-9, 1e-12));
        }
    }

    #[test]
    fn variance_monotone_in_q() {
        let (ctx, table) = ctx_and_table("s3", 1_000);
        let mut last = 0.0;
        for q_max in [1u64, 5, 10, 20, 35, 50] {
            let v = variance_bucketed(&ctx, &table, q_max);
            assert!(v >= last, "V({q_max}) = {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn variance_pair_budget() {
        let (ctx, table) = ctx_and_table("trivial", 1_000);
        assert!(matches!(
            variance_pairpath_budgeted(&ctx, &table, 10, 100),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn variance_deterministic_across_worker_counts() {
        let (ctx, table) = ctx_and_table("s3", 10_000);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| variance_bucketed(&ctx, &table, 500))
        };
        let v1 = run(1);
        let v4 = run(4);
        let v8 = run(8);
        assert_eq!(v1.to_bits(), v4.to_bits());
        assert_eq!(v1.to_bits(), v8.to_bits());
    }

    #[test]
    fn q_rule_values() {
        assert_eq!(QRule::Full.q_for(123), 123);
        assert_eq!(QRule::Explicit(7).q_for(123), 7);
        assert_eq!(QRule::LogPow(2.0).q_for(1_000_000), 5239);
        assert_eq!(QRule::LogPow(2.0).q_for(100_000), 754);
    }

    #[test]
    fn variance_report_rows() {
        let (ctx, table) = ctx_and_table("trivial", 10);
        let report = variance_report(&ctx, &table, &[10], QRule::Explicit(3)).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(approx_eq(report.rows[0].v, hand_variance_10_3(), 1e-12, 0.0));
        assert!(report.fitted_slope.is_none());
        // no window constraint: Q beyond x is allowed here
        assert!(variance_report(&ctx, &table, &[10], QRule::Explicit(20)).is_ok());
        assert!(matches!(
            variance_report(&ctx, &table, &[10, 10], QRule::Explicit(3)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn thm1_report_rows_and_errors() {
        let (ctx, table) = ctx_and_table("trivial", 1_000);
        let report = thm1_report(&ctx, &table, &[100, 1_000], QRule::LogPow(1.0), 2.0).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.v > 0.0);
            assert!(approx_eq(
                row.ratio_thm1,
                row.v / row.xq_log_x,
                1e-12,
                0.0
            ));
        }
        // Q > x
        assert!(matches!(
            thm1_report(&ctx, &table, &[100], QRule::Explicit(200), 2.0),
            Err(Error::Config(_))
        ));
        // Q below the window
        assert!(matches!(
            thm1_report(&ctx, &table, &[1_000], QRule::Explicit(2), 1.0),
            Err(Error::Config(_))
        ));
        // x beyond the table
        assert!(matches!(
            thm1_report(&ctx, &table, &[2_000], QRule::Full, 2.0),
            Err(Error::Domain(_))
        ));
        // duplicate rows
        assert!(matches!(
            thm1_report(&ctx, &table, &[100, 100], QRule::Full, 2.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn thm2_report_validation() {
        let (s3, table) = ctx_and_table("s3", 100);
        assert!(matches!(
            thm2_report(&s3, &table, &[10, 50, 100]),
            Err(Error::Domain(_))
        ));
        let (ctx, table) = ctx_and_table("trivial", 100);
        assert!(matches!(
            thm2_report(&ctx, &table, &[50, 100]),
            Err(Error::Config(_))
        ));
        let report = thm2_report(&ctx, &table, &[20, 50, 100]).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.fitted_slope.is_some());
        assert!(report.fitted_intercept.is_some());
        assert!(report.fitted_cprime.is_some());
        for row in &report.rows {
            assert_eq!(row.x, row.q_max);
        }
    }

    #[test]
    fn least_squares_recovers_line() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 3.0 * i as f64 - 2.0)).collect();
        let (slope, intercept) = least_squares(&pts);
        assert!(approx_eq(slope, 3.0, 1e-12, 1e-12));
        assert!(approx_eq(intercept, -2.0, 1e-12, 1e-12));
    }

    #[test]
    fn psi_gap_examples() {
        let (ctx, _) = ctx_and_table("trivial", 10);
        let (gap, bound) = psi_gap_check(&ctx, 10).unwrap();
        let expect = 2.0 * LN2 + 3f64.ln(); // 4, 8, 9
        assert!(approx_eq(gap, expect, 1e-12, 0.0), "{gap}");
        let expect_bound = 10f64.sqrt() * 10f64.ln();
        assert!(approx_eq(bound, expect_bound, 1e-12, 0.0));
        assert!(gap <= bound);

        let (gap2, bound2) = psi_gap_check(&ctx, 2).unwrap();
        assert_eq!(gap2, 0.0);
        assert!(gap2 <= bound2);
        assert!(psi_gap_check(&ctx, 1).is_err());
    }

    #[test]
    fn psi_gap_s3() {
        let (ctx, _) = ctx_and_table("s3", 10);
        // in-class prime powers p^m <= 1e5 need transposition type for
        // sigma_p^m, which forces p = 2 mod 3 and odd m >= 3
        let (gap, bound) = psi_gap_check(&ctx, 100_000).unwrap();
        let mut expect = KahanSum::new();
        for p in [5u64, 11, 17, 23, 29, 41] {
            expect.add((p as f64).ln()); // p^3 <= 1e5
        }
        expect.add(5f64.ln()); // 5^5 = 3125
        expect.add(5f64.ln()); // 5^7 = 78125
        assert!(approx_eq(gap, expect.value(), 1e-12, 0.0), "{gap}");
        assert!(gap <= bound);
    }
}
