//! Exact integer and rational primitives: factorization, square-free
//! reduction and valuations.
//!
//! Every square class of `Q^x / Q^x^2` is carried as its unique square-free
//! integer representative ([`SquareClass`]). Rationals ([`Rat`]) only appear
//! at the API boundary and are reduced to square classes as soon as possible.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trial division bound used before switching to Pollard rho.
pub const DEFAULT_TRIAL_BOUND: u64 = 10_000;

/// An exact rational number with positive denominator in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(numerator: i64, denominator: i64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::domain("zero denominator"));
        }
        Ok(Rat(BigRational::new(numerator.into(), denominator.into())))
    }

    pub fn from_big(value: BigRational) -> Self {
        Rat(value)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// True iff this is the square of a rational number.
    pub fn is_square(&self) -> bool {
        if self.0.is_negative() || self.0.is_zero() {
            return false;
        }
        let n = self.0.numer().magnitude();
        let d = self.0.denom().magnitude();
        is_perfect_square(n) && is_perfect_square(d)
    }
}

fn is_perfect_square(n: &BigUint) -> bool {
    let r = n.sqrt();
    &(&r * &r) == n
}

impl From<i64> for Rat {
    fn from(v: i64) -> Self {
        Rat(BigRational::from_integer(v.into()))
    }
}

impl From<SquareClass> for Rat {
    fn from(s: SquareClass) -> Self {
        Rat::from(s.value())
    }
}

impl Mul for &Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        Rat(&self.0 * &rhs.0)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_int = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|e| Error::Parse(format!("bad integer `{t}`: {e}")))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(Error::Parse("zero denominator".into()));
                }
                Ok(Rat(BigRational::new(parse_int(n)?, d)))
            }
            None => Ok(Rat(BigRational::from_integer(parse_int(s)?))),
        }
    }
}

impl Serialize for Rat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(v) => Ok(Rat::from(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// An element of `Q^x / Q^x^2`, stored as its square-free integer
/// representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct SquareClass(i64);

impl SquareClass {
    pub const ONE: SquareClass = SquareClass(1);
    pub const MINUS_ONE: SquareClass = SquareClass(-1);

    /// Reduces a nonzero integer to its square class.
    pub fn of_int(value: i64) -> Result<Self> {
        if value == 0 {
            return Err(Error::domain("zero has no square class"));
        }
        squarefree_rep(&Rat::from(value))
    }

    /// Wraps an integer already known to be square-free.
    pub fn from_squarefree(value: i64) -> Result<Self> {
        if value == 0 || !is_squarefree(value.unsigned_abs()) {
            return Err(Error::domain(format!("{value} is not a nonzero square-free integer")));
        }
        Ok(SquareClass(value))
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Square-free product, failing on 64-bit overflow.
    pub fn checked_mul(self, rhs: SquareClass) -> Result<SquareClass> {
        let g = self.0.unsigned_abs().gcd(&rhs.0.unsigned_abs()) as i64;
        (self.0 / g)
            .checked_mul(rhs.0 / g)
            .map(SquareClass)
            .ok_or(Error::Overflow)
    }

    /// True iff `p` divides the representative.
    pub fn divisible_by(self, p: u64) -> bool {
        self.0.unsigned_abs().is_multiple_of(p)
    }

    /// Prime divisors, ascending.
    pub fn primes(self) -> Vec<u64> {
        factor_u64(self.0.unsigned_abs()).into_iter().map(|(p, _)| p).collect()
    }

    /// Order used by candidate searches: by absolute value, positive first.
    pub fn search_key(self) -> (u64, bool) {
        (self.0.unsigned_abs(), self.0 < 0)
    }
}

impl Mul for SquareClass {
    type Output = SquareClass;

    /// Panics on 64-bit overflow; use [`SquareClass::checked_mul`] when the
    /// operands are untrusted.
    fn mul(self, rhs: SquareClass) -> SquareClass {
        self.checked_mul(rhs).expect("square class product overflow")
    }
}

impl Neg for SquareClass {
    type Output = SquareClass;
    fn neg(self) -> SquareClass {
        SquareClass(-self.0)
    }
}

impl fmt::Display for SquareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for SquareClass {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = Rat::deserialize(deserializer)?;
        squarefree_rep(&r).map_err(serde::de::Error::custom)
    }
}

/// The unique square-free integer `s` with `r * s` a nonzero rational square.
pub fn squarefree_rep(r: &Rat) -> Result<SquareClass> {
    squarefree_rep_with_bound(r, DEFAULT_TRIAL_BOUND)
}

/// [`squarefree_rep`] with an explicit trial-division bound.
pub fn squarefree_rep_with_bound(r: &Rat, trial_bound: u64) -> Result<SquareClass> {
    if r.is_zero() {
        return Err(Error::domain("square class of zero"));
    }
    // n/d and n*d differ by the square d^2.
    let mut odd_primes: BTreeSet<u64> = BTreeSet::new();
    for part in [r.numer().magnitude(), r.denom().magnitude()] {
        for (p, e) in factor_biguint(part, trial_bound)? {
            if e % 2 == 1 && !odd_primes.remove(&p) {
                odd_primes.insert(p);
            }
        }
    }
    let mut value: i64 = if r.is_negative() { -1 } else { 1 };
    for p in odd_primes {
        let p = i64::try_from(p).map_err(|_| Error::Overflow)?;
        value = value.checked_mul(p).ok_or(Error::Overflow)?;
    }
    Ok(SquareClass(value))
}

/// Exponent of the prime `p` in `r`.
pub fn padic_valuation(p: u64, r: &Rat) -> Result<i64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if r.is_zero() {
        return Err(Error::domain("valuation of zero"));
    }
    let p = BigUint::from(p);
    let count = |n: &BigUint| {
        let mut n = n.clone();
        let mut k = 0i64;
        while (&n % &p).is_zero() {
            n /= &p;
            k += 1;
        }
        k
    };
    Ok(count(r.numer().magnitude()) - count(r.denom().magnitude()))
}

/// Primes dividing any of `items`, always including 2.
pub fn prime_support(items: &[SquareClass]) -> BTreeSet<u64> {
    let mut out = BTreeSet::from([2]);
    for s in items {
        out.extend(s.primes());
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factor_u64(n).iter().all(|&(_, e)| e == 1)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
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

/// Legendre symbol `(a | p)` for an odd prime `p`, as -1, 0 or 1.
pub fn legendre(a: i64, p: u64) -> i32 {
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

// Brent's variant of Pollard rho; returns a nontrivial factor of the odd
// composite `n`.
fn pollard_rho(n: u64) -> u64 {
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            g = x.abs_diff(y).gcd(&n);
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn factor_rec(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    factor_rec(d, out);
    factor_rec(n / d, out);
}

/// Prime factorization of a positive 64-bit integer, ascending.
pub fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    factor_u64_with_bound(n, DEFAULT_TRIAL_BOUND)
}

fn factor_u64_with_bound(mut n: u64, trial_bound: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    let mut p = 2u64;
    while p <= trial_bound && p * p <= n {
        while n.is_multiple_of(p) {
            primes.push(p);
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        if p * p > n {
            primes.push(n);
        } else {
            factor_rec(n, &mut primes);
        }
    }
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for q in primes {
        match out.last_mut() {
            Some((last, e)) if *last == q => *e += 1,
            _ => out.push((q, 1)),
        }
    }
    out
}

fn factor_biguint(n: &BigUint, trial_bound: u64) -> Result<Vec<(u64, u32)>> {
    if let Some(small) = n.to_u64() {
        return Ok(factor_u64_with_bound(small, trial_bound));
    }
    let mut n = n.clone();
    let mut out = Vec::new();
    let mut p = 2u64;
    while p <= trial_bound {
        let bp = BigUint::from(p);
        let mut e = 0;
        while (&n % &bp).is_zero() {
            n /= &bp;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let rest = n.to_u64().ok_or_else(|| Error::TooLarge(n.to_string()))?;
    for (q, e) in factor_u64_with_bound(rest, trial_bound) {
        match out.iter_mut().find(|(r, _)| *r == q) {
            Some((_, f)) => *f += e,
            None => out.push((q, e)),
        }
    }
    out.sort_unstable();
    Ok(out)
}
