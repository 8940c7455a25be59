//! Exact scalars, p-adic valuations, primes and CRT residue systems.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};

use crate::error::{Error, Result};

/// Coefficient ring for [`crate::poly::Poly`].
///
/// `poly_mul` multiplies dense coefficient vectors; the default is the
/// schoolbook product and `BigInt` overrides it with Kronecker substitution.
pub trait Scalar: Num + Clone + Debug + PartialEq + Neg<Output = Self> {
    fn poly_mul(a: &[Self], b: &[Self]) -> Vec<Self> {
        schoolbook(a, b)
    }
}

pub(crate) fn schoolbook<T: Num + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

impl Scalar for BigInt {
    fn poly_mul(a: &[Self], b: &[Self]) -> Vec<Self> {
        if a.len().min(b.len()) < 12 {
            schoolbook(a, b)
        } else {
            crate::poly::kronecker_mul(a, b)
        }
    }
}

impl Scalar for BigRational {}
impl Scalar for i64 {}
impl Scalar for i128 {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }
}

impl std::fmt::Display for Valuation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

/// Exponent of a prime in a scalar. Callers guarantee `p` is prime.
pub trait PValued {
    fn valuation(&self, p: u64) -> Valuation;
}

fn vp_biguint(x: &BigUint, p: u64) -> i64 {
    if p == 2 {
        return x.trailing_zeros().unwrap_or(0) as i64;
    }
    let (chunk, width) = {
        let mut c = p;
        let mut w = 1;
        while let Some(next) = c.checked_mul(p) {
            c = next;
            w += 1;
        }
        (c, w)
    };
    let mut m = x.clone();
    let mut v = 0i64;
    while (&m % chunk).is_zero() {
        m /= chunk;
        v += width;
    }
    while (&m % p).is_zero() {
        m /= p;
        v += 1;
    }
    v
}

impl PValued for BigInt {
    fn valuation(&self, p: u64) -> Valuation {
        if self.is_zero() {
            Valuation::Infinity
        } else {
            Valuation::Finite(vp_biguint(self.magnitude(), p))
        }
    }
}

impl PValued for BigRational {
    fn valuation(&self, p: u64) -> Valuation {
        if self.is_zero() {
            return Valuation::Infinity;
        }
        let n = vp_biguint(self.numer().magnitude(), p);
        let d = vp_biguint(self.denom().magnitude(), p);
        Valuation::Finite(n - d)
    }
}

impl PValued for i64 {
    fn valuation(&self, p: u64) -> Valuation {
        if *self == 0 {
            return Valuation::Infinity;
        }
        let mut m = self.unsigned_abs();
        let mut v = 0;
        while m.is_multiple_of(p) {
            m /= p;
            v += 1;
        }
        Valuation::Finite(v)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::invalid("p must be prime"))
    }
}

/// Valuation of `x` at the prime `p`; rejects composite `p`.
pub fn vp<T: PValued>(p: u64, x: &T) -> Result<Valuation> {
    require_prime(p)?;
    Ok(x.valuation(p))
}

/// All primes `<= bound`, ascending.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

/// Smallest positive solution of a system of congruences with pairwise
/// coprime positive moduli.
pub fn crt(congruences: &[(BigInt, BigInt)]) -> Result<BigInt> {
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for (r, m) in congruences {
        if !m.is_positive() {
            return Err(Error::invalid(format!("modulus {m} is not positive")));
        }
        let g = modulus.extended_gcd(m);
        if !g.gcd.is_one() {
            return Err(Error::invalid(format!(
                "moduli are not pairwise coprime (gcd {} with {m})",
                g.gcd
            )));
        }
        // x + modulus * t ≡ r (mod m)  with  modulus * g.x ≡ 1 (mod m)
        let t = ((r - &x) * &g.x).mod_floor(m);
        x += &modulus * t;
        modulus *= m;
        x = x.mod_floor(&modulus);
    }
    if x.is_zero() {
        x = modulus;
    }
    Ok(x)
}

/// Representatives r_1..r_p of the residue classes mod p; class s holds
/// the integers congruent to s-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueSystem {
    pub p: u64,
    pub sigma: u64,
    pub reps: Vec<BigInt>,
}

impl ResidueSystem {
    pub fn q(&self) -> usize {
        self.reps.len()
    }

    /// r_s for a 1-based class index.
    pub fn rep(&self, s: usize) -> &BigInt {
        &self.reps[s - 1]
    }

    /// r_s - r_1.
    pub fn offset(&self, s: usize) -> BigInt {
        self.rep(s) - self.rep(1)
    }
}

pub fn residue_system(p: u64, sigma: u64) -> Result<ResidueSystem> {
    require_prime(p)?;
    if sigma < 1 {
        return Err(Error::invalid("sigma must be at least 1"));
    }
    let others: BigInt = primes_up_to(sigma)
        .into_iter()
        .filter(|&l| l != p)
        .map(BigInt::from)
        .product();
    let pb = BigInt::from(p);
    let mut reps = vec![pb.clone()];
    for s in 2..=p {
        reps.push(crt(&[
            (BigInt::from(s - 1), pb.clone()),
            (pb.clone(), others.clone()),
        ])?);
    }
    Ok(ResidueSystem { p, sigma, reps })
}

/// Class index (1-based) of an integer modulo p.
pub fn class_of(p: u64, a: &BigInt) -> usize {
    let r = a.mod_floor(&BigInt::from(p));
    let r: u64 = r.try_into().expect("residue below p");
    r as usize + 1
}
