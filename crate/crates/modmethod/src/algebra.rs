//! Integer polynomials, norms via resultants, and factored conductor levels.
//!
//! The elimination sieve needs one piece of algebraic number theory: for a
//! Hecke eigenvalue c ∈ K = ℚ[x]/(f) written as a polynomial g(θ) in the
//! generator, the field norm Norm_{K/ℚ}(c) equals ∏ᵢ g(θᵢ) over the roots of
//! f, i.e. the resultant of f and g up to the classical normalization. With
//! f monic this is an exact integer computation — no floating point, which
//! matters because eliminations hinge on divisibility of these norms by a
//! candidate exponent n.
//!
//! [`FactoredLevel`] keeps conductor exponents *signed*: the case tables for
//! (p,p,2) produce intermediate exponents like 2^(−1) that only become
//! integral once all contributions are merged (45 = 2⁻¹·3²·(2·5) is the
//! standard example). Integrality is therefore asserted at realization, not
//! at construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("resultant requires a monic polynomial of degree >= 1, got {0}")]
    NotMonic(String),
    #[error("polynomial is zero modulo {0}; roots are not a finite set")]
    ZeroModP(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("level is not integral: prime {prime} has merged exponent {exponent}")]
    NonIntegralLevel { prime: u64, exponent: i64 },
}

/// Polynomial with arbitrary-precision integer coefficients, ascending by
/// degree (`coeffs[i]` multiplies xⁱ). The representation is canonical: no
/// trailing zeros, and the zero polynomial is the empty coefficient list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    /// The monomial x − a, handy for norm-of-difference computations.
    pub fn x_minus(a: &BigInt) -> Self {
        Self::new(vec![-a.clone(), BigInt::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().map(One::is_one).unwrap_or(false)
    }

    /// Coefficient of xⁱ (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Exact evaluation by Horner's rule.
    pub fn eval(&self, a: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * a + c;
        }
        acc
    }

    /// f(a) mod m in canonical range [0, m), reducing at every Horner step.
    pub fn eval_mod(&self, a: &BigInt, m: &BigInt) -> BigInt {
        assert!(m.is_positive(), "modulus must be >= 1");
        let a = a.mod_floor(m);
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc * &a + c).mod_floor(m);
        }
        acc
    }

    /// Remainder of `self` modulo the monic polynomial `f` (exact division in
    /// ℤ[x] since the leading coefficient is 1).
    fn rem_monic(&self, f: &IntPoly) -> IntPoly {
        let d = f.degree().expect("modulus polynomial must be nonzero");
        let mut r = self.coeffs.clone();
        while r.len() > d {
            let lead = r.pop().unwrap();
            if lead.is_zero() {
                continue;
            }
            let k = r.len() - d; // subtract lead * x^k * f, minus its leading term
            for i in 0..d {
                let t = &lead * &f.coeffs[i];
                r[k + i] -= t;
            }
        }
        IntPoly::new(r)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if first {
                if c.is_negative() {
                    write!(out, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(out, " - ")?;
            } else {
                write!(out, " + ")?;
            }
            let a = c.abs();
            match i {
                0 => write!(out, "{a}")?,
                _ => {
                    if !a.is_one() {
                        write!(out, "{a}")?;
                    }
                    if i == 1 {
                        write!(out, "x")?;
                    } else {
                        write!(out, "x^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// ∏ g(θᵢ) over the roots θᵢ of the monic polynomial f — the norm form used
/// throughout the sieve. Computed as det of the multiplication-by-g map on
/// ℤ[x]/(f) with a fraction-free Bareiss elimination, so the result is exact.
///
/// With f monic this agrees with the classical resultant Res(f, g).
pub fn resultant(f: &IntPoly, g: &IntPoly) -> Result<BigInt, AlgebraError> {
    let d = match f.degree() {
        Some(d) if d >= 1 && f.is_monic() => d,
        _ => return Err(AlgebraError::NotMonic(f.to_string())),
    };
    // columns of M: coordinates of xⁱ·g mod f for i = 0..d
    let mut m = vec![vec![BigInt::zero(); d]; d];
    let mut col = g.rem_monic(f);
    for j in 0..d {
        for i in 0..d {
            m[i][j] = col.coeff(i);
        }
        // multiply by x and reduce
        let mut shifted = vec![BigInt::zero()];
        shifted.extend(col.coeffs.iter().cloned());
        col = IntPoly::new(shifted).rem_monic(f);
    }
    Ok(bareiss_det(m))
}

/// Determinant of an integer matrix by fraction-free Gaussian elimination
/// (Bareiss). Divisions are exact at every step.
fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = t / &prev; // exact by Bareiss' identity
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// All r in [0, n) with f(r) ≡ 0 (mod n), by exhaustive evaluation. Fine for
/// the moduli that occur here (witness primes and surviving exponents, well
/// under 10⁶); a root-finding algorithm would be overkill.
pub fn roots_mod_prime(f: &IntPoly, n: u64) -> Result<Vec<u64>, AlgebraError> {
    if !is_prime(n) {
        return Err(AlgebraError::NotPrime(n));
    }
    let nb = BigInt::from(n);
    if f.coeffs.iter().all(|c| c.mod_floor(&nb).is_zero()) {
        return Err(AlgebraError::ZeroModP(n));
    }
    let mut roots = Vec::new();
    for r in 0..n {
        if f.eval_mod(&BigInt::from(r), &nb).is_zero() {
            roots.push(r);
        }
    }
    Ok(roots)
}

/// Deterministic trial-division primality check; the numbers this library
/// feeds it (witnesses, survivors, level factors) are tiny.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization by trial division, smallest prime first.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factorize expects a positive integer");
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Radical of n: the product of its distinct prime divisors.
pub fn radical(n: u64) -> u64 {
    factorize(n).into_iter().map(|(p, _)| p).product()
}

/// A conductor-style level kept in factored form with *signed* exponents.
///
/// The case tables produce exponents like −1 at 2 that must cancel against
/// later contributions; only [`FactoredLevel::realize`] demands integrality.
/// `excludes_n` records that factors equal to the working exponent prime n
/// were omitted when the level was assembled (the level-lowered conductor is
/// prime to n), purely as bookkeeping for certificates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactoredLevel {
    factors: BTreeMap<u64, i64>,
    excludes_n: Option<u64>,
}

impl FactoredLevel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Multiply by pᵉ (e may be negative). p must be prime.
    pub fn mul_prime_power(&mut self, p: u64, e: i64) {
        assert!(is_prime(p), "FactoredLevel keys must be prime, got {p}");
        if e == 0 {
            return;
        }
        let slot = self.factors.entry(p).or_insert(0);
        *slot += e;
        if *slot == 0 {
            self.factors.remove(&p);
        }
    }

    /// Multiply by an arbitrary positive integer, factored on the way in.
    /// Primes equal to `skip` are omitted (and recorded via `excludes_n`).
    pub fn mul_integer_skipping(&mut self, n: u64, skip: Option<u64>) {
        for (p, e) in factorize(n) {
            if Some(p) == skip {
                self.excludes_n = skip;
                continue;
            }
            self.mul_prime_power(p, e as i64);
        }
    }

    pub fn mul_integer(&mut self, n: u64) {
        self.mul_integer_skipping(n, None);
    }

    /// Merge another factored level into this one (product of levels).
    pub fn merge(&mut self, other: &FactoredLevel) {
        for (&p, &e) in &other.factors {
            self.mul_prime_power(p, e);
        }
        if other.excludes_n.is_some() {
            self.excludes_n = other.excludes_n;
        }
    }

    pub fn set_excludes_n(&mut self, n: u64) {
        self.excludes_n = Some(n);
    }

    pub fn excludes_n(&self) -> Option<u64> {
        self.excludes_n
    }

    pub fn exponent_of(&self, p: u64) -> i64 {
        self.factors.get(&p).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.factors.iter().map(|(&p, &e)| (p, e))
    }

    /// The integer ∏ pᵉ. Errors if any merged exponent is negative.
    pub fn realize(&self) -> Result<BigInt, AlgebraError> {
        let mut out = BigInt::one();
        for (&p, &e) in &self.factors {
            if e < 0 {
                return Err(AlgebraError::NonIntegralLevel {
                    prime: p,
                    exponent: e,
                });
            }
            out *= BigInt::from(p).pow(e as u32);
        }
        Ok(out)
    }
}

impl fmt::Display for FactoredLevel {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(out, "1");
        }
        let mut first = true;
        for (&p, &e) in &self.factors {
            if !first {
                write!(out, " * ")?;
            }
            first = false;
            if e == 1 {
                write!(out, "{p}")?;
            } else {
                write!(out, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Set of canonical residues modulo a fixed positive modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueSet {
    modulus: u64,
    residues: BTreeSet<u64>,
}

impl ResidueSet {
    pub fn empty(modulus: u64) -> Self {
        assert!(modulus >= 1);
        ResidueSet {
            modulus,
            residues: BTreeSet::new(),
        }
    }

    /// Build from signed representatives; e.g. `[0, 3, -3]` mod 6 → {0, 3}.
    pub fn from_signed(modulus: u64, values: &[i64]) -> Self {
        let mut set = Self::empty(modulus);
        for &v in values {
            set.insert_signed(v);
        }
        set
    }

    pub fn insert_signed(&mut self, v: i64) {
        let m = self.modulus as i64;
        self.residues.insert(v.rem_euclid(m) as u64);
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn contains_signed(&self, v: i64) -> bool {
        let m = self.modulus as i64;
        self.residues.contains(&(v.rem_euclid(m) as u64))
    }

    pub fn contains(&self, v: u64) -> bool {
        self.residues.contains(&(v % self.modulus))
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.residues.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn intersect(&self, other: &ResidueSet) -> ResidueSet {
        assert_eq!(self.modulus, other.modulus, "modulus mismatch");
        ResidueSet {
            modulus: self.modulus,
            residues: self.residues.intersection(&other.residues).copied().collect(),
        }
    }

    pub fn is_disjoint(&self, other: &ResidueSet) -> bool {
        assert_eq!(self.modulus, other.modulus, "modulus mismatch");
        self.residues.is_disjoint(&other.residues)
    }
}

impl fmt::Display for ResidueSet {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "{{")?;
        for (i, r) in self.residues.iter().enumerate() {
            if i > 0 {
                write!(out, ",")?;
            }
            write!(out, "{r}")?;
        }
        write!(out, "}} mod {}", self.modulus)
    }
}
