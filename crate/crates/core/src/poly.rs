//! Dense univariate polynomials and Newton polygons.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::exactnum::{require_prime, PValued, Scalar, Valuation};

/// Coefficients in ascending degree; no trailing zeros are stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `c * X^d`.
    pub fn monomial(c: T, d: usize) -> Self {
        let mut coeffs = vec![T::zero(); d];
        coeffs.push(c);
        Poly::new(coeffs)
    }

    pub fn x() -> Self {
        Poly::monomial(T::one(), 1)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.is_one())
    }

    pub fn eval(&self, a: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * a.clone() + c.clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        Poly::new(self.coeffs.iter().map(|x| x.clone() * c.clone()).collect())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }

    /// The composition `f(X - t)`.
    pub fn shift(&self, t: &T) -> Self {
        let n = self.coeffs.len();
        if n == 0 {
            return Poly::zero();
        }
        // Horner in the basis of powers of (X - t), updated in place.
        let mut acc: Vec<T> = Vec::with_capacity(n);
        for c in self.coeffs.iter().rev() {
            acc.insert(0, T::zero());
            for i in 0..acc.len() - 1 {
                let next = acc[i + 1].clone();
                acc[i] = acc[i].clone() - t.clone() * next;
            }
            acc[0] = acc[0].clone() + c.clone();
        }
        Poly::new(acc)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Poly::new(T::poly_mul(&self.coeffs, &other.coeffs))
    }

    /// Product of a sequence, multiplied as a balanced tree.
    pub fn product(fs: &[Self]) -> Self {
        match fs.len() {
            0 => Poly::one(),
            1 => fs[0].clone(),
            n => {
                let (l, r) = fs.split_at(n / 2);
                Poly::mul(&Poly::product(l), &Poly::product(r))
            }
        }
    }

    pub fn pow(&self, e: usize) -> Self {
        Poly::product(&vec![self.clone(); e])
    }
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        Poly::mul(self, rhs)
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<T: Scalar> Add for Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: Poly<T>) -> Poly<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: Poly<T>) -> Poly<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Mul for Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: Poly<T>) -> Poly<T> {
        Poly::mul(&self, &rhs)
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 if c.is_one() => write!(f, "X")?,
                1 => write!(f, "({c})*X")?,
                _ if c.is_one() => write!(f, "X^{i}")?,
                _ => write!(f, "({c})*X^{i}")?,
            }
        }
        Ok(())
    }
}

impl<T: Scalar + fmt::Display> fmt::Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Packs signed coefficients into one integer at `w` 32-bit digits per slot
/// and reads the product back as balanced digits.
pub(crate) fn kronecker_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let bits = |c: &[BigInt]| c.iter().map(|x| x.bits()).max().unwrap_or(0);
    let m = a.len().min(b.len()) as u64;
    let slot_bits = bits(a) + bits(b) + (64 - m.leading_zeros() as u64) + 2;
    let w = slot_bits.div_ceil(32) as usize;

    let pack = |c: &[BigInt]| -> BigInt {
        let mut pos = vec![0u32; c.len() * w];
        let mut neg = vec![0u32; c.len() * w];
        for (i, x) in c.iter().enumerate() {
            let digits = x.magnitude().to_u32_digits();
            let dst = if x.is_negative() { &mut neg } else { &mut pos };
            dst[i * w..i * w + digits.len()].copy_from_slice(&digits);
        }
        BigInt::from_biguint(Sign::Plus, BigUint::new(pos))
            - BigInt::from_biguint(Sign::Plus, BigUint::new(neg))
    };

    let prod = pack(a) * pack(b);
    let negative = prod.is_negative();
    let digits = prod.magnitude().to_u32_digits();
    let n_out = a.len() + b.len() - 1;
    let full = BigUint::one() << (32 * w);
    let half = BigUint::one() << (32 * w - 1);
    let mut out = Vec::with_capacity(n_out);
    let mut carry = false;
    for i in 0..n_out {
        let lo = (i * w).min(digits.len());
        let hi = ((i + 1) * w).min(digits.len());
        let mut v = BigUint::from_slice(&digits[lo..hi]);
        if carry {
            v += 1u32;
        }
        let c = if v >= half {
            carry = true;
            -BigInt::from_biguint(Sign::Plus, &full - v)
        } else {
            carry = false;
            BigInt::from_biguint(Sign::Plus, v)
        };
        out.push(if negative { -c } else { c });
    }
    debug_assert!(!carry);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    /// Lower hull vertices `(i, vp(a_i))`, ascending in `i`.
    pub vertices: Vec<(usize, i64)>,
    /// Strictly increasing.
    pub slopes: Vec<Ratio<i64>>,
}

impl NewtonPolygon {
    /// `(slope, horizontal length)` per segment.
    pub fn segments(&self) -> Vec<(Ratio<i64>, usize)> {
        self.vertices
            .windows(2)
            .zip(&self.slopes)
            .map(|(w, s)| (*s, w[1].0 - w[0].0))
            .collect()
    }

    /// Height of the polygon above `i`, for `i` within its span.
    pub fn height_at(&self, i: usize) -> Option<Ratio<i64>> {
        let first = self.vertices.first()?;
        if i == first.0 {
            return Some(Ratio::from_integer(first.1));
        }
        for (w, s) in self.vertices.windows(2).zip(&self.slopes) {
            if w[0].0 < i && i <= w[1].0 {
                return Some(Ratio::from_integer(w[0].1) + s * Ratio::from_integer((i - w[0].0) as i64));
            }
        }
        None
    }
}

pub fn newton_polygon<T: Scalar + PValued>(p: u64, f: &Poly<T>) -> Result<NewtonPolygon> {
    require_prime(p)?;
    if f.is_zero() {
        return Err(Error::invalid("Newton polygon of the zero polynomial"));
    }
    let points = f.coeffs().iter().enumerate().filter_map(|(i, c)| match c.valuation(p) {
        Valuation::Finite(v) => Some((i, v)),
        Valuation::Infinity => None,
    });
    let mut hull: Vec<(usize, i64)> = Vec::new();
    for pt in points {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 as i128 - o.0 as i128) * (pt.1 as i128 - o.1 as i128)
                - (a.1 as i128 - o.1 as i128) * (pt.0 as i128 - o.0 as i128);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let slopes = hull
        .windows(2)
        .map(|w| Ratio::new(w[1].1 - w[0].1, (w[1].0 - w[0].0) as i64))
        .collect();
    Ok(NewtonPolygon { vertices: hull, slopes })
}

/// True when the polygon is one segment from index 0 to the degree with
/// slope λ/n in lowest terms, which proves irreducibility over ℚ.
/// False only means no certificate.
pub fn slope_irreducible<T: Scalar + PValued>(p: u64, f: &Poly<T>) -> Result<bool> {
    let n = match f.degree() {
        Some(n) if n >= 1 => n,
        _ => return Err(Error::invalid("slope certificate needs a non-constant polynomial")),
    };
    let np = newton_polygon(p, f)?;
    if np.vertices.len() != 2 || np.vertices[0].0 != 0 || np.vertices[1].0 != n {
        return Ok(false);
    }
    let lambda = (np.vertices[1].1 - np.vertices[0].1).unsigned_abs();
    Ok(lambda.gcd(&(n as u64)) == 1)
}
