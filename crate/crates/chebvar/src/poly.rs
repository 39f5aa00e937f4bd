//! Integer polynomials, discriminants, and distinct-degree factorization
//! over prime fields. Cycle types of Frobenius elements are read off as the
//! degree pattern of the factorization of the defining polynomial mod p.

use crate::error::{Error, Result};
use crate::sieve::{euler_phi, factor_integer, gcd, pow_mod};
use std::collections::BTreeMap;
use std::fmt;

/// Largest prime modulus accepted by the mod-p polynomial kernels. Products
/// accumulate in u128, so any p below 2^61 is exact even for degree ~30.
const MAX_FIELD_PRIME: u64 = 1 << 61;

/// Multiset of cycle lengths of a permutation, stored ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleType {
    parts: Vec<u32>,
}

impl CycleType {
    pub fn new(mut parts: Vec<u32>) -> Self {
        assert!(parts.iter().all(|&d| d >= 1), "cycle parts must be >= 1");
        parts.sort_unstable();
        Self { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn degree(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Cycle type of the m-th power of a permutation with this type: each
    /// cycle of length d splits into gcd(d,m) cycles of length d/gcd(d,m).
    pub fn power(&self, m: u64) -> CycleType {
        let mut parts = Vec::new();
        for &d in &self.parts {
            let g = gcd(d as u64, m) as u32;
            for _ in 0..g {
                parts.push(d / g);
            }
        }
        CycleType::new(parts)
    }

    /// Parse "1+2" style labels.
    pub fn parse(s: &str) -> Result<CycleType> {
        let mut parts = Vec::new();
        for piece in s.split('+') {
            let d: u32 = piece
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad cycle type part {piece:?} in {s:?}")))?;
            if d == 0 {
                return Err(Error::Config(format!("cycle type part 0 in {s:?}")));
            }
            parts.push(d);
        }
        if parts.is_empty() {
            return Err(Error::Config(format!("empty cycle type {s:?}")));
        }
        Ok(CycleType::new(parts))
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Monic integer polynomial, coefficients ascending by power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Domain(
                "polynomial must have degree >= 1".to_string(),
            ));
        }
        if *coeffs.last().unwrap() != 1 {
            return Err(Error::Domain(
                "polynomial must be monic (leading coefficient 1)".to_string(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    /// Reduce coefficients into [0, p).
    fn reduce_mod(&self, p: u64) -> Vec<u64> {
        self.coeffs
            .iter()
            .map(|&c| c.rem_euclid(p as i64) as u64)
            .collect()
    }
}

// --- dense polynomial arithmetic over F_p ----------------------------------
// Vectors are coefficient lists, ascending, with no trailing zeros (the zero
// polynomial is the empty vector).

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_derivative(f: &[u64], p: u64) -> Vec<u64> {
    let mut out: Vec<u64> = f
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| (k as u64 % p).wrapping_mul(c) % p)
        .collect();
    trim(&mut out);
    out
}

/// Remainder of a mod g; g must be monic and nonconstant.
fn poly_rem(a: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    debug_assert!(g.len() >= 2 && *g.last().unwrap() == 1);
    let mut r: Vec<u64> = a.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dg;
        if lead != 0 {
            for (i, &gc) in g.iter().enumerate().take(dg) {
                let idx = shift + i;
                let sub = (lead as u128 * gc as u128 % p as u128) as u64;
                r[idx] = (r[idx] + p - sub) % p;
            }
        }
        r.pop();
        trim(&mut r);
        if r.len() <= dg {
            break;
        }
    }
    trim(&mut r);
    r
}

/// Exact quotient a / g for monic g dividing a.
fn poly_quotient(a: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    debug_assert!(g.len() >= 2 && *g.last().unwrap() == 1);
    let mut r: Vec<u64> = a.to_vec();
    let dg = g.len() - 1;
    if r.len() <= dg {
        return Vec::new();
    }
    let mut q = vec![0u64; r.len() - dg];
    for qi in (0..q.len()).rev() {
        let lead = if r.len() == qi + dg + 1 {
            *r.last().unwrap()
        } else {
            0
        };
        q[qi] = lead;
        if lead != 0 {
            for (i, &gc) in g.iter().enumerate() {
                let sub = (lead as u128 * gc as u128 % p as u128) as u64;
                r[qi + i] = (r[qi + i] + p - sub) % p;
            }
        }
        trim(&mut r);
    }
    trim(&mut q);
    q
}

fn make_monic(v: &mut Vec<u64>, p: u64) {
    if let Some(&lead) = v.last() {
        if lead != 1 {
            let inv = pow_mod(lead, p - 2, p);
            for c in v.iter_mut() {
                *c = (*c as u128 * inv as u128 % p as u128) as u64;
            }
        }
    }
}

/// Monic gcd; gcd(f, 0) = monic f.
fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        make_monic(&mut b, p);
        let r = if b.len() >= 2 {
            poly_rem(&a, &b, p)
        } else {
            Vec::new() // constant divides everything
        };
        a = std::mem::replace(&mut b, r);
    }
    make_monic(&mut a, p);
    a
}

/// (a * b) mod g, with g monic.
fn poly_mulmod(a: &[u64], b: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u128; a.len() + b.len() - 1];
    for (i, &ac) in a.iter().enumerate() {
        if ac == 0 {
            continue;
        }
        for (j, &bc) in b.iter().enumerate() {
            prod[i + j] += ac as u128 * bc as u128;
        }
    }
    let mut red: Vec<u64> = prod.iter().map(|&c| (c % p as u128) as u64).collect();
    trim(&mut red);
    poly_rem(&red, g, p)
}

/// base^exp mod g, with g monic.
fn poly_powmod(base: &[u64], mut exp: u64, g: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut sq = base.to_vec();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = poly_mulmod(&acc, &sq, g, p);
        }
        exp >>= 1;
        if exp > 0 {
            sq = poly_mulmod(&sq, &sq, g, p);
        }
    }
    acc
}

/// Degrees of the irreducible factors of f mod p, via distinct-degree
/// factorization: gcd(x^(p^d) - x, f) collects all factors of degree d.
/// Only degrees are extracted; no equal-degree splitting is performed.
pub fn ddf_cycle_type(f: &IntPolynomial, p: u64) -> Result<CycleType> {
    if p < 2 || p >= MAX_FIELD_PRIME {
        return Err(Error::Domain(format!("modulus {p} out of range for ddf")));
    }
    let fp = f.reduce_mod(p);
    let fd = poly_derivative(&fp, p);
    let sq = poly_gcd(&fp, &fd, p);
    if sq.len() != 1 {
        return Err(Error::Ramified { p });
    }

    let mut g = fp;
    let mut parts: Vec<u32> = Vec::new();
    // h = x^(p^d) mod g, advanced one Frobenius power per round
    let mut h = poly_rem(&[0, 1], &g, p);
    let mut d = 1u32;
    while 2 * d <= g.len() as u32 - 1 {
        h = poly_powmod(&h, p, &g, p);
        // gcd(h - x, g)
        let mut hx = h.clone();
        if hx.len() < 2 {
            hx.resize(2, 0);
        }
        hx[1] = (hx[1] + p - 1) % p;
        trim(&mut hx);
        let u = poly_gcd(&hx, &g, p);
        if u.len() > 1 {
            let du = (u.len() - 1) as u32;
            for _ in 0..du / d {
                parts.push(d);
            }
            g = poly_quotient(&g, &u, p);
            if g.len() >= 2 {
                h = poly_rem(&h, &g, p);
            }
        }
        d += 1;
    }
    if g.len() > 1 {
        parts.push((g.len() - 1) as u32);
    }
    Ok(CycleType::new(parts))
}

// --- exact integer linear algebra -------------------------------------------

fn checked(v: Option<i128>) -> Result<i128> {
    v.ok_or(Error::Overflow("integer overflow in determinant"))
}

/// Fraction-free Bareiss determinant; exact over the integers.
fn bareiss_det(mut m: Vec<Vec<i128>>) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return Ok(0);
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = checked(m[i][j].checked_mul(m[k][k]))?;
                let b = checked(m[i][k].checked_mul(m[k][j]))?;
                m[i][j] = checked(a.checked_sub(b))? / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    Ok(sign * m[n - 1][n - 1])
}

/// Resultant of two integer polynomials (ascending coefficients) via the
/// Sylvester matrix.
pub fn resultant(f: &[i64], g: &[i64]) -> Result<i128> {
    let df = f.len() - 1;
    let dg = g.len() - 1;
    if dg == 0 {
        return checked((g[0] as i128).checked_pow(df as u32));
    }
    if df == 0 {
        return checked((f[0] as i128).checked_pow(dg as u32));
    }
    let n = df + dg;
    let mut m = vec![vec![0i128; n]; n];
    for row in 0..dg {
        for (k, &c) in f.iter().rev().enumerate() {
            m[row][row + k] = c as i128;
        }
    }
    for row in 0..df {
        for (k, &c) in g.iter().rev().enumerate() {
            m[dg + row][row + k] = c as i128;
        }
    }
    bareiss_det(m)
}

/// Exact discriminant of a monic polynomial:
/// (-1)^(n(n-1)/2) * Res(f, f').
pub fn discriminant(f: &IntPolynomial) -> Result<i128> {
    let n = f.degree() as usize;
    if n == 1 {
        return Ok(1);
    }
    let fp: Vec<i64> = f
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| {
            c.checked_mul(k as i64)
                .ok_or(Error::Overflow("derivative coefficient overflow"))
        })
        .collect::<Result<_>>()?;
    let res = resultant(f.coeffs(), &fp)?;
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
    Ok(sign * res)
}

/// Sign and prime factorization of a discriminant-like integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedFactorization {
    pub sign: i8,
    pub factors: Vec<(u64, u32)>,
}

impl SignedFactorization {
    pub fn to_i128(&self) -> Result<i128> {
        let mut v = self.sign as i128;
        for &(l, e) in &self.factors {
            for _ in 0..e {
                v = v
                    .checked_mul(l as i128)
                    .ok_or(Error::Overflow("factored value exceeds i128"))?;
            }
        }
        Ok(v)
    }
}

/// Exact quotient a / b for monic b dividing a; panics in debug builds if
/// the division leaves a remainder.
fn divide_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let n = a.len() - 1;
    let m = b.len() - 1;
    debug_assert_eq!(b[m], 1);
    debug_assert!(n >= m);
    let mut rem = a.to_vec();
    let mut quot = vec![0i64; n - m + 1];
    for k in (0..=n - m).rev() {
        let c = rem[k + m];
        quot[k] = c;
        if c != 0 {
            for (j, &bj) in b.iter().enumerate().take(m) {
                rem[k + j] -= c * bj;
            }
            rem[k + m] = 0;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0), "division not exact");
    quot
}

/// The q-th cyclotomic polynomial, by peeling every proper divisor's factor
/// off x^q - 1 in ascending divisor order.
pub fn cyclotomic_polynomial(q: u64) -> Result<IntPolynomial> {
    if q < 1 {
        return Err(Error::Domain("cyclotomic polynomial needs q >= 1".into()));
    }
    let mut memo: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
    for d in 1..=q {
        if q % d != 0 {
            continue;
        }
        let mut cur = vec![0i64; d as usize + 1];
        cur[0] = -1;
        cur[d as usize] = 1;
        for (&e, phi_e) in &memo {
            if d % e == 0 {
                cur = divide_exact(&cur, phi_e);
            }
        }
        memo.insert(d, cur);
    }
    IntPolynomial::new(memo.remove(&q).unwrap())
}

/// Discriminant of the q-th cyclotomic field, in factored form:
/// sign (-1)^(phi(q)/2), and |d| = q^phi(q) / prod_{l | q} l^(phi(q)/(l-1)),
/// i.e. exponent of each prime l^e || q is e*phi(q) - phi(q)/(l-1).
pub fn cyclotomic_disc(q: u64) -> Result<SignedFactorization> {
    if q < 3 {
        return Err(Error::Domain(format!(
            "cyclotomic discriminant needs q >= 3, got {q}"
        )));
    }
    let phi = euler_phi(q);
    let sign = if (phi / 2) % 2 == 0 { 1 } else { -1 };
    let mut factors = Vec::new();
    for (l, e) in factor_integer(q) {
        let exp = (e as u64) * phi - phi / (l - 1);
        if exp > 0 {
            factors.push((l, exp as u32));
        }
    }
    Ok(SignedFactorization { sign, factors })
}
