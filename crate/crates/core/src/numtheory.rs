//! Modular arithmetic over 64-bit primes: primality, orders, primitive
//! roots and the residue orbits `q, q^2, ..., q^r (mod r)` that drive the
//! algebraic spacer sequences.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumberTheoryError {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{value} is not a unit modulo {modulus}")]
    NotAUnit { value: u64, modulus: u64 },
    #[error("{value} is not a primitive root modulo {modulus}")]
    NotAGenerator { value: u64, modulus: u64 },
    #[error("invalid scan range [{lo}, {hi}]")]
    InvalidRange { lo: u64, hi: u64 },
}

/// An odd prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(r: u64) -> Result<Self, NumberTheoryError> {
        if r < 3 || !is_prime(r) {
            return Err(NumberTheoryError::NotOddPrime(r));
        }
        Ok(Self(r))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for PrimeModulus {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = u64::deserialize(deserializer)?;
        PrimeModulus::new(r).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_unchecked(base: u64, mut exp: u64, m: u64) -> u64 {
    let mut result = 1 % m;
    let mut base = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    result
}

/// `base^exp mod modulus`, with 128-bit intermediates.
pub fn mod_pow(base: u64, exp: u64, modulus: u64) -> Result<u64, NumberTheoryError> {
    if modulus < 2 {
        return Err(NumberTheoryError::InvalidModulus(modulus));
    }
    Ok(pow_mod_unchecked(base, exp, modulus))
}

// First twelve primes as Miller-Rabin witnesses: deterministic below 3.3e24.
const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin, exact for every `u64`. Returns false for 0 and 1.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod_unchecked(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n` in increasing order, by trial division.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut factors = Vec::new();
    if n < 2 {
        return factors;
    }
    if n.is_multiple_of(2) {
        factors.push(2);
        while n.is_multiple_of(2) {
            n /= 2;
        }
    }
    let mut p = 3u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            factors.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 2;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

/// Smallest `d >= 1` with `q^d = 1 (mod r)`.
///
/// Starts from `r - 1` and strips each prime factor for as long as the
/// power stays at one, so only divisors of `r - 1` are ever tested.
pub fn multiplicative_order(q: u64, r: PrimeModulus) -> Result<u64, NumberTheoryError> {
    let m = r.get();
    if q.is_multiple_of(m) {
        return Err(NumberTheoryError::NotAUnit { value: q, modulus: m });
    }
    let mut order = m - 1;
    for p in distinct_prime_factors(m - 1) {
        while order.is_multiple_of(p) && pow_mod_unchecked(q, order / p, m) == 1 {
            order /= p;
        }
    }
    Ok(order)
}

fn is_generator_with(q: u64, m: u64, cofactors: &[u64]) -> bool {
    !q.is_multiple_of(m) && cofactors.iter().all(|&e| pow_mod_unchecked(q, e, m) != 1)
}

pub fn is_primitive_root(q: u64, r: PrimeModulus) -> bool {
    let m = r.get();
    let cofactors: Vec<u64> = distinct_prime_factors(m - 1)
        .into_iter()
        .map(|p| (m - 1) / p)
        .collect();
    is_generator_with(q, m, &cofactors)
}

/// Smallest `q >= 2` generating the multiplicative group modulo `r`.
pub fn minimal_primitive_root(r: PrimeModulus) -> u64 {
    let m = r.get();
    let cofactors: Vec<u64> = distinct_prime_factors(m - 1)
        .into_iter()
        .map(|p| (m - 1) / p)
        .collect();
    (2..m)
        .find(|&q| is_generator_with(q, m, &cofactors))
        .expect("every odd prime has a primitive root")
}

/// The orbit `rho[i] = q^i mod r` for `i = 1..=r`.
///
/// Indexing is 1-based through [`ResidueSequence::rho`]. The last entry
/// `rho[r]` wraps to `rho[1]` because `q^r = q (mod r)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueSequence {
    modulus: PrimeModulus,
    generator: u64,
    residues: Vec<u64>,
}

impl ResidueSequence {
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// `rho[i]` for `1 <= i <= r`.
    #[inline]
    pub fn rho(&self, i: usize) -> u64 {
        self.residues[i - 1]
    }

    /// `rho[1..=r]` as a slice (position 0 holds `rho[1]`).
    pub fn as_slice(&self) -> &[u64] {
        &self.residues
    }
}

pub fn residue_sequence(q: u64, r: PrimeModulus) -> Result<ResidueSequence, NumberTheoryError> {
    let m = r.get();
    if !is_primitive_root(q, r) {
        return Err(NumberTheoryError::NotAGenerator { value: q, modulus: m });
    }
    let len = usize::try_from(m).expect("modulus exceeds address space");
    let step = q % m;
    let mut residues = Vec::with_capacity(len);
    let mut x = step;
    for _ in 0..len {
        residues.push(x);
        x = mul_mod(x, step, m);
    }
    Ok(ResidueSequence {
        modulus: r,
        generator: step,
        residues,
    })
}

/// One prime of a [`burgess_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurgessRow {
    pub prime: u64,
    pub q_min: u64,
    /// `q_min < sqrt(prime)`, decided in integers.
    pub sqrt_bound_ok: bool,
    pub ratio_sqrt: f64,
    pub ratio_fourth_root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurgessReport {
    pub lo: u64,
    pub hi: u64,
    pub rows: Vec<BurgessRow>,
    pub primes: usize,
    pub below_sqrt: usize,
    pub fraction_below_sqrt: f64,
    pub max_ratio_fourth_root: f64,
}

impl BurgessReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("prime,q_min,sqrt_ok,ratio4\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                row.prime, row.q_min, row.sqrt_bound_ok, row.ratio_fourth_root
            );
        }
        out
    }
}

/// Odd primes in `[lo, hi]`, ascending.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo.max(3)..=hi).filter(|&n| n % 2 == 1 && is_prime(n)).collect()
}

/// Minimal primitive root of every prime in `[lo, hi]`, with aggregates.
pub fn burgess_scan(lo: u64, hi: u64) -> Result<BurgessReport, NumberTheoryError> {
    if lo < 3 || lo > hi {
        return Err(NumberTheoryError::InvalidRange { lo, hi });
    }
    let rows: Vec<BurgessRow> = primes_in(lo, hi)
        .into_par_iter()
        .map(|p| {
            let q = minimal_primitive_root(PrimeModulus(p));
            BurgessRow {
                prime: p,
                q_min: q,
                sqrt_bound_ok: (q as u128) * (q as u128) < p as u128,
                ratio_sqrt: q as f64 / (p as f64).sqrt(),
                ratio_fourth_root: q as f64 / (p as f64).powf(0.25),
            }
        })
        .collect();
    let below_sqrt = rows.iter().filter(|row| row.sqrt_bound_ok).count();
    let fraction_below_sqrt = if rows.is_empty() {
        0.0
    } else {
        below_sqrt as f64 / rows.len() as f64
    };
    let max_ratio_fourth_root = rows
        .iter()
        .map(|row| row.ratio_fourth_root)
        .fold(0.0, f64::max);
    Ok(BurgessReport {
        lo,
        hi,
        primes: rows.len(),
        below_sqrt,
        fraction_below_sqrt,
        max_ratio_fourth_root,
        rows,
    })
}
