//! Integral Weierstrass models, standard invariants, and exact traces of
//! Frobenius by point counting.
//!
//! Everything lives on the long Weierstrass form
//! y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6 with integer coefficients, as
//! produced by the Frey constructions. The invariants b2, b4, b6, b8, c4 and
//! Δ follow the textbook formulas; no minimal models or Tate's algorithm —
//! the sieve only ever asks for a_p at primes of good reduction, and the one
//! j-invariant question that arises is about its denominator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CurveError {
    #[error("curve is singular (discriminant 0)")]
    SingularCurve,
    #[error("p = {0} is not prime")]
    NotPrime(u64),
    #[error("bad reduction at p = {0} (p divides the discriminant)")]
    BadReduction(u64),
}

/// Long Weierstrass model with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    pub a1: BigInt,
    pub a2: BigInt,
    pub a3: BigInt,
    pub a4: BigInt,
    pub a6: BigInt,
}

/// j-invariant in lowest terms; the denominator is kept positive so that
/// divisibility questions about it are well posed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalJ {
    numerator: BigInt,
    denominator: BigInt,
}

impl RationalJ {
    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn denominator_divisible_by(&self, m: u64) -> bool {
        (&self.denominator % BigInt::from(m)).is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.denominator.is_one()
    }
}

impl std::fmt::Display for RationalJ {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(out, "{}/{}", self.numerator, self.denominator)
    }
}

impl WeierstrassCurve {
    /// Construct a model intended as an elliptic curve; rejects Δ = 0.
    pub fn new(
        a1: BigInt,
        a2: BigInt,
        a3: BigInt,
        a4: BigInt,
        a6: BigInt,
    ) -> Result<Self, CurveError> {
        let e = WeierstrassCurve { a1, a2, a3, a4, a6 };
        if e.discriminant().is_zero() {
            return Err(CurveError::SingularCurve);
        }
        Ok(e)
    }

    pub fn from_i64(a: [i64; 5]) -> Result<Self, CurveError> {
        Self::new(
            BigInt::from(a[0]),
            BigInt::from(a[1]),
            BigInt::from(a[2]),
            BigInt::from(a[3]),
            BigInt::from(a[4]),
        )
    }

    pub fn b2(&self) -> BigInt {
        &self.a1 * &self.a1 + 4 * &self.a2
    }

    pub fn b4(&self) -> BigInt {
        2 * &self.a4 + &self.a1 * &self.a3
    }

    pub fn b6(&self) -> BigInt {
        &self.a3 * &self.a3 + 4 * &self.a6
    }

    pub fn b8(&self) -> BigInt {
        &self.a1 * &self.a1 * &self.a6 + 4 * &self.a2 * &self.a6
            - &self.a1 * &self.a3 * &self.a4
            + &self.a2 * &self.a3 * &self.a3
            - &self.a4 * &self.a4
    }

    pub fn c4(&self) -> BigInt {
        let b2 = self.b2();
        &b2 * &b2 - 24 * self.b4()
    }

    pub fn discriminant(&self) -> BigInt {
        let (b2, b4, b6, b8) = (self.b2(), self.b4(), self.b6(), self.b8());
        -&b2 * &b2 * &b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * b2 * b4 * b6
    }

    /// c4³/Δ in lowest terms.
    pub fn j_invariant(&self) -> Result<RationalJ, CurveError> {
        let disc = self.discriminant();
        if disc.is_zero() {
            return Err(CurveError::SingularCurve);
        }
        let c4 = self.c4();
        let num = &c4 * &c4 * &c4;
        let g = num.gcd(&disc);
        let (mut num, mut den) = (num / &g, disc / g);
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        Ok(RationalJ {
            numerator: num,
            denominator: den,
        })
    }
}

/// a_p = p + 1 − #E(F_p) by exhaustive counting (point at infinity included).
///
/// Only good reduction is accepted; the sieve never needs traces at bad
/// primes. For p ≥ 5 the count completes the square and walks a
/// quadratic-residue table, O(p) time and space; p = 2, 3 enumerate the long
/// form directly.
pub fn ap_trace(e: &WeierstrassCurve, p: u64) -> Result<i64, CurveError> {
    if !crate::algebra::is_prime(p) {
        return Err(CurveError::NotPrime(p));
    }
    let pb = BigInt::from(p);
    if e.discriminant().mod_floor(&pb).is_zero() {
        return Err(CurveError::BadReduction(p));
    }
    if p < 5 {
        let m = |x: &BigInt| -> u64 { x.mod_floor(&pb).try_into().unwrap() };
        let (a1, a2, a3, a4, a6) = (m(&e.a1), m(&e.a2), m(&e.a3), m(&e.a4), m(&e.a6));
        let mut count = 1u64; // infinity
        for x in 0..p {
            for y in 0..p {
                let lhs = y * y + a1 * x * y + a3 * y;
                let rhs = ((x * x % p) * x) % p + a2 * x * x + a4 * x + a6;
                if (lhs + p * p) % p == (rhs + p * p) % p {
                    count += 1;
                }
            }
        }
        return Ok(p as i64 + 1 - count as i64);
    }

    // 2 is invertible: (2y + a1 x + a3)² = 4x³ + b2 x² + 2 b4 x + b6, so the
    // number of y over each x is 1 + χ(f(x)) with χ the quadratic character.
    let m = |x: BigInt| -> u64 { x.mod_floor(&pb).try_into().unwrap() };
    let b2 = m(e.b2());
    let b4 = m(e.b4());
    let b6 = m(e.b6());
    let mut is_square = vec![false; p as usize];
    for t in 0..p {
        is_square[((t as u128 * t as u128) % p as u128) as usize] = true;
    }
    let mut sum: i64 = 0; // Σ χ(f(x))
    for x in 0..p as u128 {
        let pw = p as u128;
        let fx = ((4 * x % pw * x % pw * x) % pw + (b2 as u128 * x % pw * x) % pw
            + (2 * b4 as u128 * x) % pw
            + b6 as u128)
            % pw;
        if fx == 0 {
            continue;
        }
        sum += if is_square[fx as usize] { 1 } else { -1 };
    }
    // #E = 1 + Σ_x (1 + χ(f(x))) = p + 1 + sum, hence a_p = −sum
    Ok(-sum)
}
