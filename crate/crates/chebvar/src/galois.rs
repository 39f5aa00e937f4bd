//! Galois contexts: a monic defining polynomial together with the class and
//! group data needed to classify primes, plus the per-prime classification
//! table and the admissible-modulus test.

use crate::error::{Error, Result};
use crate::poly::{ddf_cycle_type, discriminant, CycleType, IntPolynomial};
use crate::sieve::{factor_integer, gcd, PrimeList};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

/// Exact class density |C|/|G|, stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassDensity {
    pub num: u64,
    pub den: u64,
}

impl ClassDensity {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::Domain(format!(
                "class density {num}/{den} must lie in (0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Raw, unvalidated description of a context; the configuration file's
/// context block parses into this.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSpec {
    pub name: String,
    /// ascending coefficients, monic
    pub polynomial: Vec<i64>,
    pub group_order: u64,
    pub class_types: Vec<CycleType>,
    /// as written, e.g. (24, 60); reduced during validation
    pub class_density: (u64, u64),
    pub abelian_conductor: u64,
    pub log_disc_l: Option<f64>,
    pub admissibility_overrides: Vec<(u64, bool)>,
}

/// Validated context: everything needed to classify primes and weight sums.
#[derive(Debug, Clone)]
pub struct GaloisContext {
    pub name: String,
    pub defining_poly: IntPolynomial,
    pub group_order: u64,
    pub class_spec: BTreeSet<CycleType>,
    pub class_density: ClassDensity,
    pub disc_f: i128,
    /// prime divisors of disc_f, ascending (recomputed, never trusted)
    pub ramified_primes: Vec<u64>,
    /// conductor m of the maximal abelian subfield; 1 means the extension
    /// meets no cyclotomic field beyond the rationals
    pub abelian_conductor: u64,
    /// slack term for the prime-power gap bound
    pub log_disc_l: f64,
    pub admissibility_overrides: BTreeMap<u64, bool>,
}

pub fn build_context(spec: &ContextSpec) -> Result<GaloisContext> {
    let defining_poly = IntPolynomial::new(spec.polynomial.clone())?;
    let deg = defining_poly.degree();
    if spec.group_order == 0 {
        return Err(Error::Domain("group_order must be positive".into()));
    }
    if spec.class_types.is_empty() {
        return Err(Error::Domain("class_types must be nonempty".into()));
    }
    let mut class_spec = BTreeSet::new();
    for t in &spec.class_types {
        if t.degree() != deg {
            return Err(Error::Domain(format!(
                "class type {t} is not a partition of the polynomial degree {deg}"
            )));
        }
        class_spec.insert(t.clone());
    }
    let class_density = ClassDensity::new(spec.class_density.0, spec.class_density.1)?;
    if spec.group_order % class_density.den != 0 {
        return Err(Error::Domain(format!(
            "class density denominator {} does not divide group order {}",
            class_density.den, spec.group_order
        )));
    }
    if spec.abelian_conductor == 0 {
        return Err(Error::Domain("abelian_conductor must be >= 1".into()));
    }
    let disc_f = discriminant(&defining_poly)?;
    if disc_f == 0 {
        return Err(Error::Domain(
            "defining polynomial is not squarefree (discriminant 0)".into(),
        ));
    }
    let abs_disc = disc_f.unsigned_abs();
    let abs_disc64 = u64::try_from(abs_disc)
        .map_err(|_| Error::Overflow("discriminant too large to factor"))?;
    let ramified_primes: Vec<u64> = factor_integer(abs_disc64)
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let log_disc_l = match spec.log_disc_l {
        Some(v) => {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "log_disc_l must be a nonnegative finite number, got {v}"
                )));
            }
            v
        }
        None => (abs_disc64 as f64).ln(),
    };
    let mut admissibility_overrides = BTreeMap::new();
    for &(q, allow) in &spec.admissibility_overrides {
        if q == 0 {
            return Err(Error::Domain("admissibility override for q = 0".into()));
        }
        if admissibility_overrides.insert(q, allow).is_some() {
            return Err(Error::Domain(format!(
                "duplicate admissibility override for q = {q}"
            )));
        }
    }
    Ok(GaloisContext {
        name: spec.name.clone(),
        defining_poly,
        group_order: spec.group_order,
        class_spec,
        class_density,
        disc_f,
        ramified_primes,
        abelian_conductor: spec.abelian_conductor,
        log_disc_l,
        admissibility_overrides,
    })
}

/// True when the modulus participates in variance sums: explicit override if
/// present, otherwise gcd(q, abelian conductor) = 1.
pub fn admissible_modulus(ctx: &GaloisContext, q: u64) -> bool {
    if let Some(&forced) = ctx.admissibility_overrides.get(&q) {
        return forced;
    }
    gcd(q, ctx.abelian_conductor) == 1
}

#[derive(Debug, Clone, Copy)]
pub struct FrobeniusEntry {
    pub p: u64,
    pub log_p: f64,
    pub type_idx: u32,
    pub in_c: bool,
}

/// Per-prime classification of all unramified primes up to x. Cycle types
/// are interned; entries carry an index into `types`.
#[derive(Debug, Clone)]
pub struct FrobeniusTable {
    pub x: u64,
    types: Vec<CycleType>,
    pub entries: Vec<FrobeniusEntry>,
    pub skipped_ramified: Vec<u64>,
}

impl FrobeniusTable {
    pub fn types(&self) -> &[CycleType] {
        &self.types
    }

    pub fn cycle_type(&self, e: &FrobeniusEntry) -> &CycleType {
        &self.types[e.type_idx as usize]
    }

    /// Prefix of the table containing only primes <= x.
    pub fn truncated(&self, x: u64) -> FrobeniusTable {
        assert!(x <= self.x, "cannot extend a table by truncation");
        let n = self.entries.partition_point(|e| e.p <= x);
        FrobeniusTable {
            x,
            types: self.types.clone(),
            entries: self.entries[..n].to_vec(),
            skipped_ramified: self
                .skipped_ramified
                .iter()
                .copied()
                .filter(|&p| p <= x)
                .collect(),
        }
    }

    /// (p, log p) for the in-class primes, ascending.
    pub fn in_c_primes(&self) -> Vec<(u64, f64)> {
        self.entries
            .iter()
            .filter(|e| e.in_c)
            .map(|e| (e.p, e.log_p))
            .collect()
    }
}

/// Classify every unramified prime <= x by the factorization pattern of the
/// defining polynomial. Parallel over primes; output order is ascending
/// regardless of worker count.
pub fn classify_primes(ctx: &GaloisContext, x: u64, primes: &PrimeList) -> Result<FrobeniusTable> {
    if primes.limit < x {
        return Err(Error::Domain(format!(
            "prime list covers only [2, {}], need [2, {x}]",
            primes.limit
        )));
    }
    let n = primes.partition_point(x);
    let ram: HashSet<u64> = ctx.ramified_primes.iter().copied().collect();
    let classified: Vec<Option<CycleType>> = primes.primes[..n]
        .par_iter()
        .map(|&p| {
            if ram.contains(&p) {
                Ok(None)
            } else {
                ddf_cycle_type(&ctx.defining_poly, p).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let mut types: Vec<CycleType> = Vec::new();
    let mut index: HashMap<CycleType, u32> = HashMap::new();
    let mut entries = Vec::with_capacity(n);
    let mut skipped_ramified = Vec::new();
    for (i, t) in classified.into_iter().enumerate() {
        let p = primes.primes[i];
        match t {
            None => skipped_ramified.push(p),
            Some(t) => {
                let in_c = ctx.class_spec.contains(&t);
                let type_idx = *index.entry(t.clone()).or_insert_with(|| {
                    types.push(t);
                    (types.len() - 1) as u32
                });
                entries.push(FrobeniusEntry {
                    p,
                    log_p: primes.logs[i],
                    type_idx,
                    in_c,
                });
            }
        }
    }
    Ok(FrobeniusTable {
        x,
        types,
        entries,
        skipped_ramified,
    })
}

/// Fraction of classified primes whose Frobenius lies in the class.
pub fn chebotarev_fraction(table: &FrobeniusTable) -> Result<f64> {
    if table.entries.is_empty() {
        return Err(Error::Domain(
            "cannot take class fraction of an empty table".into(),
        ));
    }
    let hits = table.entries.iter().filter(|e| e.in_c).count();
    Ok(hits as f64 / table.entries.len() as f64)
}

/// (cycle type, count, fraction) for every observed type, sorted by type.
/// The counts partition the table exactly.
pub fn type_frequencies(table: &FrobeniusTable) -> Vec<(CycleType, u64, f64)> {
    let total = table.entries.len() as u64;
    let mut counts: BTreeMap<&CycleType, u64> = BTreeMap::new();
    for e in &table.entries {
        *counts.entry(table.cycle_type(e)).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(t, c)| (t.clone(), c, c as f64 / total as f64))
        .collect()
}
