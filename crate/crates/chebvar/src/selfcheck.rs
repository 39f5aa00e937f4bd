//! Runtime property checks behind the `check` subcommand: fast invariants
//! that any correctly configured context must satisfy. Only the context
//! block and the seed influence these; x is pinned small so the whole
//! suite runs in well under a minute.

use crate::characters::{
    conductor, induce_primitive, large_sieve_check, seeded_complex_vectors, CharacterGroup,
};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::{
    psi_gap_check, reconstruct_theta, theta_table, variance_bucketed, variance_pairpath,
};
use crate::galois::{admissible_modulus, build_context, chebotarev_fraction, classify_primes};
use crate::kahan::{approx_eq, KahanSum, ABS_FLOOR, REL_TOL};
use crate::poly::{cyclotomic_disc, cyclotomic_polynomial, discriminant};
use crate::sieve::{gcd, sieve_primes};

const CHECK_X: u64 = 10_000;
const DENSITY_BAND: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, pass, detail }
}

pub fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = build_context(&cfg.context)?;
    let primes = sieve_primes(CHECK_X)?;
    let table = classify_primes(&ctx, CHECK_X, &primes)?;
    let mut out = Vec::new();

    // empirical class frequency against the declared density
    {
        let fraction = chebotarev_fraction(&table)?;
        let density = ctx.class_density.value();
        let err = (fraction - density).abs();
        out.push(outcome(
            "chebotarev-band",
            err <= DENSITY_BAND,
            format!(
                "fraction {fraction:.4} vs density {density:.4} at x = {CHECK_X} \
                 (|diff| = {err:.4}, band {DENSITY_BAND})"
            ),
        ));
    }

    // buckets of each modulus partition the full weighted count
    {
        let t = theta_table(&ctx, &table, 20)?;
        let whole = t.value(1, 1).unwrap_or(0.0);
        let in_c = table.in_c_primes();
        let mut worst: (f64, u64) = (0.0, 0);
        for q in 1..=20u64 {
            if !admissible_modulus(&ctx, q) {
                continue;
            }
            let mut sum = KahanSum::new();
            for a in 1..=q {
                if gcd(a, q) == 1 {
                    sum.add(t.value(q, a).unwrap());
                }
            }
            for &(p, lp) in &in_c {
                if q % p == 0 {
                    sum.add(lp);
                }
            }
            let err = (sum.value() - whole).abs();
            if err > worst.0 {
                worst = (err, q);
            }
        }
        let tol = REL_TOL * whole.abs() + ABS_FLOOR;
        out.push(outcome(
            "partition-identity",
            worst.0 <= tol,
            format!(
                "worst |bucket sum - total| = {:.3e} at q = {} (tol {tol:.3e})",
                worst.0, worst.1
            ),
        ));
    }

    // character-twist reconstruction equals direct bucketing
    {
        let t = theta_table(&ctx, &table, 12)?;
        let mut worst: (f64, u64, u64) = (0.0, 0, 0);
        for q in 1..=12u64 {
            if !admissible_modulus(&ctx, q) {
                continue;
            }
            let group = CharacterGroup::new(q);
            for a in 1..=q {
                if gcd(a, q) != 1 {
                    continue;
                }
                let direct = t.value(q, a).unwrap();
                let rebuilt = reconstruct_theta(&ctx, &table, &group, a)?;
                let scale = direct.abs().max(rebuilt.abs()).max(1.0);
                let rel = (rebuilt - direct).abs() / scale;
                if rel > worst.0 {
                    worst = (rel, q, a);
                }
            }
        }
        out.push(outcome(
            "orthogonality-reconstruction",
            worst.0 <= REL_TOL,
            format!(
                "worst relative error {:.3e} at (q, a) = ({}, {}) (tol {REL_TOL:.0e})",
                worst.0, worst.1, worst.2
            ),
        ));
    }

    // the two variance algorithms agree
    {
        let small = table.truncated(1_000);
        let vb = variance_bucketed(&ctx, &small, 50);
        let vp = variance_pairpath(&ctx, &small, 50)?;
        out.push(outcome(
            "variance-cross-path",
            approx_eq(vb, vp, REL_TOL, ABS_FLOOR),
            format!("bucketed {vb:.6} vs pair-sum {vp:.6} at (x, Q) = (1000, 50)"),
        ));
    }

    // V(x, Q) never decreases as Q grows
    {
        let small = table.truncated(1_000);
        let mut last = f64::NEG_INFINITY;
        let mut pass = true;
        let mut values = Vec::new();
        for q in [1u64, 10, 25, 50] {
            let v = variance_bucketed(&ctx, &small, q);
            values.push(format!("V(1000,{q}) = {v:.3}"));
            if v < last {
                pass = false;
            }
            last = v;
        }
        out.push(outcome("variance-monotone", pass, values.join(", ")));
    }

    // prime-power correction stays inside its allowance
    {
        let mut pass = true;
        let mut details = Vec::new();
        for x in [1_000u64, 10_000] {
            let (gap, bound) = psi_gap_check(&ctx, x)?;
            details.push(format!("x = {x}: gap {gap:.3} <= bound {bound:.3}"));
            if gap > bound {
                pass = false;
            }
        }
        out.push(outcome("psi-theta-gap", pass, details.join("; ")));
    }

    // mean-square character sums respect the sieve bound
    {
        let mut pass = true;
        let mut worst_margin = f64::INFINITY;
        for coeffs in seeded_complex_vectors(cfg.run.seed, 25, 30) {
            let (lhs, rhs) = large_sieve_check(10, 0, 30, &coeffs)?;
            if lhs > rhs * (1.0 + 1e-12) {
                pass = false;
            }
            worst_margin = worst_margin.min(rhs - lhs);
        }
        let (lhs1, rhs1) = large_sieve_check(1, 0, 1, &[num_complex::Complex64::new(1.0, 0.0)])?;
        let equality = lhs1 == rhs1;
        out.push(outcome(
            "large-sieve",
            pass && equality,
            format!(
                "25 seeded vectors at (Q, N) = (10, 30), smallest slack {worst_margin:.3}; \
                 Q = 1 equality {}",
                if equality { "exact" } else { "VIOLATED" }
            ),
        ));
    }

    // inducing at the conductor is stable
    {
        let mut pass = true;
        let mut checked = 0u32;
        for q in 1..=20u64 {
            for chi in CharacterGroup::new(q).iter() {
                let prim = induce_primitive(chi);
                if conductor(&prim) != conductor(chi) || induce_primitive(&prim) != prim {
                    pass = false;
                }
                checked += 1;
            }
        }
        out.push(outcome(
            "conductor-idempotent",
            pass,
            format!("{checked} characters of modulus <= 20"),
        ));
    }

    // factored cyclotomic discriminants match the generic routine
    {
        let mut pass = true;
        for q in 3..=16u64 {
            let direct = discriminant(&cyclotomic_polynomial(q)?)?;
            let closed = cyclotomic_disc(q)?.to_i128()?;
            if direct != closed {
                pass = false;
            }
        }
        out.push(outcome(
            "cyclotomic-disc",
            pass,
            "closed form vs resultant route, 3 <= q <= 16".into(),
        ));
    }

    Ok(out)
}
