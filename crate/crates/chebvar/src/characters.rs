//! Exact Dirichlet characters: unit-group structure, character groups,
//! conductors, primitive induction, and the large sieve inequality. Values
//! are exact roots of unity; complex doubles appear only at sum boundaries.

use crate::error::{Error, Result};
use crate::kahan::{KahanComplex, KahanSum};
use crate::sieve::{euler_phi, factor_integer, gcd, lcm, pow_mod};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Arc;

/// e^(2*pi*i*num/den) with 0 <= num < den, reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootOfUnity {
    num: u64,
    den: u64,
}

impl RootOfUnity {
    pub const ONE: RootOfUnity = RootOfUnity { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "root of unity needs positive denominator");
        let num = num % den;
        let g = gcd(num, den);
        if num == 0 {
            Self::ONE
        } else {
            Self {
                num: num / g,
                den: den / g,
            }
        }
    }

    pub fn exponent(self) -> (u64, u64) {
        (self.num, self.den)
    }

    pub fn is_one(self) -> bool {
        self.num == 0
    }

    pub fn mul(self, other: Self) -> Self {
        let den = lcm(self.den, other.den);
        let num = self.num * (den / self.den) + other.num * (den / other.den);
        Self::new(num, den)
    }

    pub fn conj(self) -> Self {
        Self::new(self.den - self.num, self.den)
    }

    pub fn pow(self, k: u64) -> Self {
        Self::new((self.num % self.den) * (k % self.den), self.den)
    }

    /// Exact on the four axis points so that real characters produce
    /// exactly real sums.
    pub fn to_complex(self) -> Complex64 {
        match (self.num, self.den) {
            (0, _) => Complex64::new(1.0, 0.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            (n, d) => {
                let t = 2.0 * std::f64::consts::PI * (n as f64 / d as f64);
                Complex64::new(t.cos(), t.sin())
            }
        }
    }
}

/// A character value: zero off the coprime residues, a root of unity on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharValue {
    Zero,
    Root(RootOfUnity),
}

impl CharValue {
    pub fn to_complex(self) -> Complex64 {
        match self {
            CharValue::Zero => Complex64::new(0.0, 0.0),
            CharValue::Root(r) => r.to_complex(),
        }
    }

    pub fn is_one(self) -> bool {
        matches!(self, CharValue::Root(r) if r.is_one())
    }
}

/// One cyclic factor of (Z/qZ)*, with a full discrete-log table keyed by the
/// residue mod its prime power.
#[derive(Debug)]
struct CyclicComponent {
    prime_power: u64,
    order: u64,
    dlog: HashMap<u64, u64>,
}

/// Structure of (Z/qZ)* under the fixed generator conventions: odd prime
/// powers use their smallest primitive root; 2 contributes nothing; 4 uses
/// the generator -1; higher powers of two use the pair (-1, 5).
#[derive(Debug)]
pub struct UnitGroup {
    pub modulus: u64,
    components: Vec<CyclicComponent>,
    phi: u64,
}

fn multiplicative_order_is(g: u64, modulus: u64, order: u64, order_factors: &[(u64, u32)]) -> bool {
    if pow_mod(g, order, modulus) != 1 {
        return false;
    }
    order_factors
        .iter()
        .all(|&(l, _)| pow_mod(g, order / l, modulus) != 1)
}

fn smallest_primitive_root(prime_power: u64, p: u64) -> u64 {
    let phi = prime_power / p * (p - 1);
    let factors = factor_integer(phi);
    (2..prime_power)
        .find(|&g| g % p != 0 && multiplicative_order_is(g, prime_power, phi, &factors))
        .expect("odd prime power has a primitive root")
}

fn dlog_table(generator: u64, order: u64, modulus: u64) -> HashMap<u64, u64> {
    let mut map = HashMap::with_capacity(order as usize);
    let mut v = 1u64;
    for j in 0..order {
        map.insert(v, j);
        v = (v as u128 * generator as u128 % modulus as u128) as u64;
    }
    map
}

impl UnitGroup {
    pub fn new(q: u64) -> Arc<UnitGroup> {
        assert!(q >= 1);
        let mut components = Vec::new();
        for (p, e) in factor_integer(q) {
            let pe = p.pow(e);
            if p == 2 {
                match e {
                    1 => {}
                    2 => components.push(CyclicComponent {
                        prime_power: 4,
                        order: 2,
                        dlog: HashMap::from([(1, 0), (3, 1)]),
                    }),
                    _ => {
                        // joint decomposition a = (-1)^j * 5^l mod 2^e
                        let half = pe / 4; // 2^(e-2)
                        let mut dlog_sign = HashMap::with_capacity(2 * half as usize);
                        let mut dlog_five = HashMap::with_capacity(2 * half as usize);
                        let mut v = 1u64;
                        for l in 0..half {
                            dlog_sign.insert(v, 0);
                            dlog_five.insert(v, l);
                            dlog_sign.insert(pe - v, 1);
                            dlog_five.insert(pe - v, l);
                            v = v * 5 % pe;
                        }
                        components.push(CyclicComponent {
                            prime_power: pe,
                            order: 2,
                            dlog: dlog_sign,
                        });
                        components.push(CyclicComponent {
                            prime_power: pe,
                            order: half,
                            dlog: dlog_five,
                        });
                    }
                }
            } else {
                let g = smallest_primitive_root(pe, p);
                let order = pe / p * (p - 1);
                components.push(CyclicComponent {
                    prime_power: pe,
                    order,
                    dlog: dlog_table(g, order, pe),
                });
            }
        }
        let phi = components.iter().map(|c| c.order).product();
        Arc::new(UnitGroup {
            modulus: q,
            components,
            phi,
        })
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn component_orders(&self) -> Vec<u64> {
        self.components.iter().map(|c| c.order).collect()
    }

    /// Exponent vector of a against the component generators; None when
    /// gcd(a, q) > 1.
    pub fn decompose(&self, a: u64) -> Option<Vec<u64>> {
        let a = a % self.modulus;
        if gcd(a, self.modulus) != 1 {
            return None;
        }
        Some(
            self.components
                .iter()
                .map(|c| c.dlog[&(a % c.prime_power)])
                .collect(),
        )
    }
}

/// A Dirichlet character mod q, identified by its exponents against the
/// fixed generator convention; equality is structural.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    exponents: Vec<u64>,
    order: u64,
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.group.modulus == other.group.modulus && self.exponents == other.exponents
    }
}
impl Eq for DirichletCharacter {}

impl DirichletCharacter {
    fn new(group: Arc<UnitGroup>, exponents: Vec<u64>) -> Self {
        debug_assert_eq!(exponents.len(), group.components.len());
        let order = group
            .components
            .iter()
            .zip(&exponents)
            .map(|(c, &e)| c.order / gcd(c.order, e))
            .fold(1, lcm);
        Self {
            group,
            exponents,
            order,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    pub fn eval(&self, a: u64) -> CharValue {
        match self.group.decompose(a) {
            None => CharValue::Zero,
            Some(digits) => {
                let mut acc = RootOfUnity::ONE;
                for ((c, &e), d) in self.group.components.iter().zip(&self.exponents).zip(digits) {
                    acc = acc.mul(RootOfUnity::new(e % c.order * d, c.order));
                }
                CharValue::Root(acc)
            }
        }
    }

    /// chi(a) for a = 0..q-1 as complex doubles, for inner-loop sums.
    pub fn complex_table(&self) -> Vec<Complex64> {
        (0..self.group.modulus)
            .map(|a| self.eval(a).to_complex())
            .collect()
    }

    /// Pointwise product of two characters of the same modulus.
    pub fn mul(&self, other: &DirichletCharacter) -> DirichletCharacter {
        assert_eq!(self.modulus(), other.modulus());
        let exps = self
            .group
            .components
            .iter()
            .zip(self.exponents.iter().zip(&other.exponents))
            .map(|(c, (&a, &b))| (a + b) % c.order)
            .collect();
        DirichletCharacter::new(self.group.clone(), exps)
    }
}

/// All phi(q) characters mod q; the principal character sits at index 0.
#[derive(Debug)]
pub struct CharacterGroup {
    group: Arc<UnitGroup>,
    chars: Vec<DirichletCharacter>,
}

impl CharacterGroup {
    pub fn new(q: u64) -> CharacterGroup {
        let group = UnitGroup::new(q);
        let orders = group.component_orders();
        let total: u64 = orders.iter().product();
        let mut chars = Vec::with_capacity(total as usize);
        for idx in 0..total {
            let mut rem = idx;
            let exps: Vec<u64> = orders
                .iter()
                .map(|&o| {
                    let d = rem % o;
                    rem /= o;
                    d
                })
                .collect();
            chars.push(DirichletCharacter::new(group.clone(), exps));
        }
        CharacterGroup { group, chars }
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn principal(&self) -> &DirichletCharacter {
        &self.chars[0]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DirichletCharacter> {
        self.chars.iter()
    }

    /// The characters used in the error decomposition. Over the rationals
    /// the relevant quotient is trivial, so the coset representatives are
    /// simply all characters mod q.
    pub fn coset_representatives(&self) -> &[DirichletCharacter] {
        &self.chars
    }
}

fn divisors_ascending(q: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factor_integer(q) {
        let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
        for &d in &divs {
            let mut pk = 1u64;
            for _ in 0..=e {
                next.push(d * pk);
                pk *= p;
            }
        }
        divs = next;
    }
    divs.sort_unstable();
    divs
}

/// Smallest d | q such that chi is trivial on residues = 1 (mod d) coprime
/// to q; chi is primitive iff conductor(chi) = modulus.
pub fn conductor(chi: &DirichletCharacter) -> u64 {
    let q = chi.modulus();
    for d in divisors_ascending(q) {
        let trivial_on_kernel = (1..=q)
            .filter(|&a| a % d == 1 % d && gcd(a, q) == 1)
            .all(|a| chi.eval(a).is_one());
        if trivial_on_kernel {
            return d;
        }
    }
    q
}

/// The primitive character of modulus conductor(chi) that induces chi.
pub fn induce_primitive(chi: &DirichletCharacter) -> DirichletCharacter {
    let q = chi.modulus();
    let d = conductor(chi);
    if d == q {
        return chi.clone();
    }
    let target = CharacterGroup::new(d);
    target
        .iter()
        .find(|psi| {
            (1..=q)
                .filter(|&a| gcd(a, q) == 1)
                .all(|a| psi.eval(a % d) == chi.eval(a))
        })
        .expect("a character agreeing on coprime residues exists at the conductor")
        .clone()
}

/// All primitive characters mod q.
pub fn primitive_characters(q: u64) -> Vec<DirichletCharacter> {
    CharacterGroup::new(q)
        .iter()
        .filter(|chi| conductor(chi) == q)
        .cloned()
        .collect()
}

/// Both sides of the large sieve inequality:
/// lhs = sum_{q<=Q} (q/phi(q)) sum over primitive chi mod q of
///       |sum_n chi(n) a_n|^2, n running over N0+1 .. N0+N;
/// rhs = (Q^2 + N - 1) * sum |a_n|^2.
pub fn large_sieve_check(
    q_max: u64,
    n0: u64,
    n_len: u64,
    coeffs: &[Complex64],
) -> Result<(f64, f64)> {
    if q_max < 1 || n_len < 1 {
        return Err(Error::Domain(
            "large sieve needs Q >= 1 and N >= 1".into(),
        ));
    }
    if coeffs.len() as u64 != n_len {
        return Err(Error::Domain(format!(
            "coefficient vector has length {}, expected N = {n_len}",
            coeffs.len()
        )));
    }
    let mut lhs = KahanSum::new();
    for q in 1..=q_max {
        let phi = euler_phi(q) as f64;
        for chi in primitive_characters(q) {
            let table = chi.complex_table();
            let mut s = KahanComplex::new();
            for (j, &a) in coeffs.iter().enumerate() {
                let n = n0 + 1 + j as u64;
                s.add(table[(n % q) as usize] * a);
            }
            lhs.add(q as f64 / phi * s.value().norm_sqr());
        }
    }
    let mut norm = KahanSum::new();
    for &a in coeffs {
        norm.add(a.norm_sqr());
    }
    let rhs = ((q_max * q_max + n_len - 1) as f64) * norm.value();
    Ok((lhs.value(), rhs))
}

/// Deterministic test vectors with entries uniform in [-1, 1) on both axes.
pub fn seeded_complex_vectors(seed: u64, count: usize, len: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..len)
                .map(|_| {
                    let re = rng.gen::<f64>() * 2.0 - 1.0;
                    let im = rng.gen::<f64>() * 2.0 - 1.0;
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect()
}
