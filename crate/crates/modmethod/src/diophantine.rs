//! Classical (pre-modular) machinery for the `xy = ±1` branches.
//!
//! When the unknowns degenerate to units, the ternary equations collapse to
//! exponential Diophantine problems that close by elementary means, and this
//! module collects those means:
//!
//! * the two disjoint parametrizations of `x² + p·y² = z²` (Cohen,
//!   Corollary 6.3.15) for a positive **or negative** odd prime `p`, plus a
//!   desk-scale exhaustive check that they really are disjoint and cover;
//! * the parity argument they power: `2^{2x} − b^y = ±3z²` has no solutions
//!   with `y` even and `x > 1`, because the family-2 expression for `2^x`
//!   has 2-adic valuation 0 (for `+3`) or 1 (for `−3`), never ≥ 2;
//! * congruence sweeps of the form `c ± b^α (mod m)` against the residues a
//!   quadratic form can take — the `64 − 5^α ≡ 5 (mod 6)` style endgame;
//! * the reduction of `2^α ± B = C·z³` to Mordell equations `Y² = X³ + k`
//!   (multiplying through by `C²`, and by a further 8 when `α` is odd), a
//!   bounded exhaustive search for integral points, and the scale/2-power
//!   filter that maps the points back — in the theorems, to nothing.
//!
//! The bounded search deliberately replaces an unconditional integral-point
//! solver: every certificate that quotes it carries the bound, and
//! completeness beyond the bound is never claimed.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::algebra::ResidueSet;
use crate::frey::TernaryEquation;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DioError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported equation shape: {0}")]
    UnsupportedShape(String),
}

// ---------------------------------------------------------------------------
// conic parametrizations

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicFamily {
    One,
    Two,
}

impl std::fmt::Display for ConicFamily {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConicFamily::One => write!(out, "1"),
            ConicFamily::Two => write!(out, "2"),
        }
    }
}

/// Parameters selecting one point of `x² + p·y² = z²`.
///
/// Family 1: `x = ±(s² − p·t²)`, `y = 2st`, `z = ±(s² + p·t²)`, requiring
/// `p ∤ s`.  Family 2: `x = ±(((p−1)/2)(s² + t²) + (p+1)st)`,
/// `y = s² − t²`, `z = ±(((p+1)/2)(s² + t²) + (p−1)st)`, requiring
/// `s ≢ t (mod p)`.  Both need `s, t` coprime and of opposite parity; the
/// two `±` are chosen independently by the flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConicParams {
    pub p: i64,
    pub family: ConicFamily,
    pub s: i64,
    pub t: i64,
    pub negate_x: bool,
    pub negate_z: bool,
}

fn check_conic_prime(p: i64) -> Result<(), DioError> {
    let abs = p.unsigned_abs();
    if abs == 2 || !crate::algebra::is_prime(abs) {
        return Err(DioError::InvalidParams(format!(
            "p = {p} must be an odd prime (up to sign)"
        )));
    }
    Ok(())
}

fn check_st(s: i64, t: i64) -> Result<(), DioError> {
    if s.gcd(&t) != 1 {
        return Err(DioError::InvalidParams(format!(
            "s = {s}, t = {t} are not coprime"
        )));
    }
    if (s + t).rem_euclid(2) == 0 {
        return Err(DioError::InvalidParams(format!(
            "s = {s}, t = {t} must have opposite parity"
        )));
    }
    Ok(())
}

/// Evaluate one parametrized solution of `x² + p·y² = z²`.
pub fn conic_point(params: &ConicParams) -> Result<(i64, i64, i64), DioError> {
    let ConicParams {
        p,
        family,
        s,
        t,
        negate_x,
        negate_z,
    } = *params;
    check_conic_prime(p)?;
    check_st(s, t)?;
    let (x, y, z) = match family {
        ConicFamily::One => {
            if s.rem_euclid(p.abs()) == 0 {
                return Err(DioError::InvalidParams(format!("family 1 needs p ∤ s (s = {s})")));
            }
            (s * s - p * t * t, 2 * s * t, s * s + p * t * t)
        }
        ConicFamily::Two => {
            if (s - t).rem_euclid(p.abs()) == 0 {
                return Err(DioError::InvalidParams(format!(
                    "family 2 needs s ≢ t (mod {p})"
                )));
            }
            let sq = s * s + t * t;
            (
                (p - 1) / 2 * sq + (p + 1) * s * t,
                s * s - t * t,
                (p + 1) / 2 * sq + (p - 1) * s * t,
            )
        }
    };
    let x = if negate_x { -x } else { x };
    let z = if negate_z { -z } else { z };
    debug_assert_eq!(x * x + p * y * y, z * z);
    Ok((x, y, z))
}

/// Outcome of checking both parametrizations against an exhaustive list of
/// primitive solutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConicCoverReport {
    pub p: i64,
    pub bound: i64,
    /// Primitive solutions examined, canonicalized to `x, y, z ≥ 0`.
    pub checked: usize,
    pub family_one: usize,
    pub family_two: usize,
    pub unmatched: Vec<(i64, i64, i64)>,
    pub doubly_matched: Vec<(i64, i64, i64)>,
}

impl ConicCoverReport {
    /// Every solution matched exactly one family.
    pub fn is_clean(&self) -> bool {
        self.unmatched.is_empty() && self.doubly_matched.is_empty()
    }
}

fn positive_divisors(n: i64) -> Vec<i64> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out
}

fn matches_family_one(p: i64, x: i64, y: i64, z: i64) -> bool {
    let candidates: Vec<(i64, i64)> = if y == 0 {
        vec![(1, 0)]
    } else if y % 2 != 0 {
        return false;
    } else {
        let half = y / 2;
        positive_divisors(half)
            .into_iter()
            .map(|d| (d, half / d))
            .collect()
    };
    for (s, t) in candidates {
        if s.gcd(&t) != 1 || (s + t).rem_euclid(2) == 0 || s.rem_euclid(p.abs()) == 0 {
            continue;
        }
        if (s * s - p * t * t).abs() == x && (s * s + p * t * t).abs() == z {
            return true;
        }
    }
    false
}

fn matches_family_two(p: i64, x: i64, y: i64, z: i64) -> bool {
    if y.rem_euclid(2) == 0 {
        return false; // s² − t² is odd when s, t have opposite parity
    }
    for d in positive_divisors(y) {
        for d in [d, -d] {
            let e = y / d;
            let s = (d + e) / 2;
            let t = (e - d) / 2;
            if s.gcd(&t) != 1 || (s - t).rem_euclid(p.abs()) == 0 {
                continue;
            }
            let sq = s * s + t * t;
            let fx = (p - 1) / 2 * sq + (p + 1) * s * t;
            let fz = (p + 1) / 2 * sq + (p - 1) * s * t;
            if fx.abs() == x && fz.abs() == z {
                return true;
            }
        }
    }
    false
}

/// Exhaustively enumerate primitive solutions of `x² + p·y² = z²` with
/// `|y|, |z| ≤ bound` and verify each arises from exactly one family.
///
/// The solution list comes from a perfect-square scan, independent of the
/// parametrization formulas; candidate `(s, t)` pairs are reconstructed
/// from the divisors of `y`, so the check is exact.  For negative `p` the
/// solution set with `|z| ≤ bound` alone is infinite (Pell), hence the
/// additional `|y|` cap.
pub fn conic_cover_check(p: i64, bound: i64) -> Result<ConicCoverReport, DioError> {
    check_conic_prime(p)?;
    if !(1..=10_000).contains(&bound) {
        return Err(DioError::InvalidParams(format!(
            "bound {bound} out of range 1..=10000"
        )));
    }
    let mut report = ConicCoverReport {
        p,
        bound,
        checked: 0,
        family_one: 0,
        family_two: 0,
        unmatched: vec![],
        doubly_matched: vec![],
    };
    for y in 0..=bound {
        for z in 0..=bound {
            let w = z * z - p * y * y;
            if w < 0 {
                continue;
            }
            let x = w.sqrt();
            if x * x != w || x.gcd(&y) != 1 {
                continue;
            }
            report.checked += 1;
            let one = matches_family_one(p, x, y, z);
            let two = matches_family_two(p, x, y, z);
            match (one, two) {
                (true, false) => report.family_one += 1,
                (false, true) => report.family_two += 1,
                (true, true) => report.doubly_matched.push((x, y, z)),
                (false, false) => report.unmatched.push((x, y, z)),
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// the 2^{2x} − b^y = ±3z² proposition

/// 2-adic valuation of the family-2 expression for `2^x` with `p = ±3`.
///
/// With `s, t` coprime of opposite parity, `s² + t²` and `s² + st + t²` are
/// odd, so the expression `((±3−1)/2)(s²+t²) + (±3+1)st` has valuation 0
/// for `+3` and exactly 1 for `−3` — never the ≥ 2 that `4 | 2^x` demands.
pub fn prop3_obstruction(sign3: i64, s: i64, t: i64) -> Result<u32, DioError> {
    if sign3 != 3 && sign3 != -3 {
        return Err(DioError::InvalidParams(format!(
            "sign must be ±3, got {sign3}"
        )));
    }
    check_st(s, t)?;
    let value = (sign3 - 1) / 2 * (s * s + t * t) + (sign3 + 1) * s * t;
    debug_assert!(value != 0, "coprime s, t of opposite parity never vanish here");
    Ok(value.unsigned_abs().trailing_zeros())
}

/// Exhaustive scan for solutions of `2^{2x} − b^y = ±3z²` with even `y` and
/// `x_min ≤ x ≤ x_max`, `z ≥ 1`.
///
/// The proposition says the list is empty once `x_min ≥ 2`; the scan exists
/// to corroborate that and to expose the `x = 1` escape hatch (`b = 1`
/// gives `4 − 1 = 3·1²`), which is why the lower bound is a parameter here.
pub fn prop3_scan(b: u64, x_min: u32, x_max: u32, y_max: u32) -> Vec<(u32, u32, u64)> {
    assert!(b % 2 == 1, "the proposition is about odd b");
    let mut out = Vec::new();
    for x in x_min..=x_max {
        let four_x = BigInt::from(4).pow(x);
        let mut y = 2;
        while y <= y_max {
            let n: BigInt = &four_x - BigInt::from(b).pow(y);
            if !n.is_zero() && (&n % BigInt::from(3)).is_zero() {
                let zz: BigInt = n.abs() / BigInt::from(3);
                let z = zz.sqrt();
                if &z * &z == zz && !z.is_zero() {
                    out.push((x, y, u64::try_from(&z).expect("z fits in u64 at scan scale")));
                }
            }
            y += 2;
        }
    }
    out
}

/// The scan restricted to the proposition's hypothesis `x > 1`.
pub fn prop3_search(b: u64, x_max: u32, y_max: u32) -> Vec<(u32, u32, u64)> {
    prop3_scan(b, 2, x_max, y_max)
}

// ---------------------------------------------------------------------------
// congruence sweeps

/// The value family `constant + sign·base^α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerTemplate {
    pub constant: i64,
    pub sign: i8,
    pub base: u64,
}

impl PowerTemplate {
    pub fn residue(&self, alpha: u32, modulus: u64) -> u64 {
        let m = BigInt::from(modulus);
        let pow = BigInt::from(self.base).modpow(&BigInt::from(alpha), &m);
        let v = BigInt::from(self.constant) + BigInt::from(self.sign) * pow;
        u64::try_from(&v.mod_floor(&m)).expect("reduced residue fits u64")
    }
}

impl std::fmt::Display for PowerTemplate {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = if self.sign >= 0 { '+' } else { '-' };
        write!(out, "{} {} {}^a", self.constant, op, self.base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongruenceVerdict {
    pub alpha: u32,
    pub residue: u64,
    pub obstructed: bool,
}

/// For each exponent `α`, reduce the template mod the set's modulus and
/// test membership; `obstructed` means the value escapes every residue the
/// right-hand side can take.
pub fn congruence_obstruction(
    template: &PowerTemplate,
    allowed: &ResidueSet,
    alphas: impl IntoIterator<Item = u32>,
) -> Vec<CongruenceVerdict> {
    alphas
        .into_iter()
        .map(|alpha| {
            let residue = template.residue(alpha, allowed.modulus());
            CongruenceVerdict {
                alpha,
                residue,
                obstructed: !allowed.contains(residue),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Mordell reduction, search, and filter

/// One Mordell equation `Y² = X³ + k` produced by a unit-case reduction,
/// with the scale data needed to map its points back: a relevant point has
/// `x_scale | X` and `Y = y_scale·2^m` with `m ≥ min_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MordellInstance {
    pub k: i64,
    pub x_scale: u64,
    pub y_scale: u64,
    pub min_m: u32,
    pub origin: String,
}

/// Search output; both signs of `Y` are implied by the canonical `Y ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MordellSolutionSet {
    pub k: i64,
    pub bound: i64,
    pub solutions: Vec<(i64, i64)>,
}

/// Reduce a unit branch `2^α·(±1)ⁿ + B·(±1)ⁿ = C·z³` to its two Mordell
/// instances, one per parity of `α`.
///
/// Writing `xy = ±1` and `w = xz`, the equation becomes
/// `2^α + (xy)·B = C·w³`; multiplying by `C²` (even `α = 2m`, `m ≥ 1`)
/// gives `(C·2^m)² = (Cw)³ − (xy)·C²B`, and by a further 8 (odd
/// `α = 2m+1`, `m ≥ 0`) gives `(4C·2^m)² = (2Cw)³ − 8(xy)·C²B`.  Note the
/// odd instance starts at `m = 0` so that `α = 1` is covered.
pub fn reduce_unit_case(
    eq: &TernaryEquation,
    xy_sign: i8,
) -> Result<(MordellInstance, MordellInstance), DioError> {
    if eq.m() != 3 {
        return Err(DioError::UnsupportedShape(
            "unit-case reduction applies to the cube signature".into(),
        ));
    }
    if !(xy_sign == 1 || xy_sign == -1) {
        return Err(DioError::InvalidParams("xy sign must be ±1".into()));
    }
    let a = eq.a();
    let two_power = a > &BigInt::from(1) && (a & (a - BigInt::from(1))).is_zero();
    if !two_power {
        return Err(DioError::UnsupportedShape(format!(
            "coefficient {a} is not a power of two ≥ 2"
        )));
    }
    let b: i64 = eq.b().try_into().map_err(|_| {
        DioError::UnsupportedShape("coefficient B too large for the reduction".into())
    })?;
    let c: i64 = eq.c().try_into().map_err(|_| {
        DioError::UnsupportedShape("coefficient C too large for the reduction".into())
    })?;
    let base = (c as i128) * (c as i128) * (b as i128) * (-(xy_sign as i128));
    let k_even = i64::try_from(base)
        .map_err(|_| DioError::UnsupportedShape("C²·B overflows the search range".into()))?;
    let k_odd = i64::try_from(8 * base)
        .map_err(|_| DioError::UnsupportedShape("8·C²·B overflows the search range".into()))?;
    let sign_name = if xy_sign == 1 { "xy = +1" } else { "xy = -1" };
    let c_abs = c.unsigned_abs();
    Ok((
        MordellInstance {
            k: k_even,
            x_scale: c_abs,
            y_scale: c_abs,
            min_m: 1,
            origin: format!("alpha even, {sign_name}"),
        },
        MordellInstance {
            k: k_odd,
            x_scale: 2 * c_abs,
            y_scale: 4 * c_abs,
            min_m: 0,
            origin: format!("alpha odd, {sign_name}"),
        },
    ))
}

/// All integral points of `Y² = X³ + k` with `|X| ≤ bound`, `Y ≥ 0`,
/// sorted by `X`.
///
/// Exhaustive within the bound (perfect-square test on `X³ + k` in 128-bit
/// arithmetic) and nothing more: no completeness claim past the bound.
/// The X range is partitioned across threads; the merge is in partition
/// order, so the output is independent of scheduling.
pub fn mordell_search(k: i64, bound: i64) -> MordellSolutionSet {
    assert!(k != 0, "k = 0 is not a Mordell equation");
    assert!(bound >= 1);
    // Cheap rejection first (squares mod 16 lie in {0,1,4,9}), then an
    // f64 square-root candidate corrected to exactness; for |v| < 2^100 the
    // candidate is within a few units of the truth, so the correction loop
    // terminates immediately.
    let exact_sqrt = |v: i128| -> Option<i128> {
        debug_assert!(v >= 0);
        if !matches!(v & 15, 0 | 1 | 4 | 9) {
            return None;
        }
        let mut y = (v as f64).sqrt() as i128;
        while y > 0 && y * y > v {
            y -= 1;
        }
        while (y + 1) * (y + 1) <= v {
            y += 1;
        }
        (y * y == v).then_some(y)
    };
    let scan = |from: i64, to: i64| -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for x in from..=to {
            let v = (x as i128) * (x as i128) * (x as i128) + k as i128;
            if v < 0 {
                continue;
            }
            if let Some(y) = exact_sqrt(v) {
                out.push((x, y as i64));
            }
        }
        out
    };
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8);
    let total = 2 * bound + 1;
    let solutions = if workers <= 1 || total < 20_000 {
        scan(-bound, bound)
    } else {
        let chunk = total / workers as i64 + 1;
        let mut parts: Vec<Vec<(i64, i64)>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            let mut from = -bound;
            while from <= bound {
                let to = (from + chunk - 1).min(bound);
                handles.push(scope.spawn(move || scan(from, to)));
                from = to + 1;
            }
            for h in handles {
                parts.push(h.join().expect("search worker panicked"));
            }
        });
        parts.concat()
    };
    MordellSolutionSet {
        k,
        bound,
        solutions,
    }
}

/// Keep the points of `set` that fit the instance's scale template:
/// `x_scale | X`, `X ≠ 0`, and `Y = y_scale·2^m` with `m ≥ min_m`.
pub fn filter_mordell_solutions(
    set: &MordellSolutionSet,
    inst: &MordellInstance,
) -> Vec<(i64, i64)> {
    assert_eq!(set.k, inst.k, "solution set belongs to a different k");
    set.solutions
        .iter()
        .copied()
        .filter(|&(x, y)| {
            if x == 0 || x.unsigned_abs() % inst.x_scale != 0 {
                return false;
            }
            if y <= 0 || y.unsigned_abs() % inst.y_scale != 0 {
                return false;
            }
            let q = y.unsigned_abs() / inst.y_scale;
            q.is_power_of_two() && q.trailing_zeros() >= inst.min_m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: i64, family: ConicFamily, s: i64, t: i64) -> ConicParams {
        ConicParams {
            p,
            family,
            s,
            t,
            negate_x: false,
            negate_z: false,
        }
    }

    #[test]
    fn conic_points_match_hand_values() {
        assert_eq!(
            conic_point(&params(3, ConicFamily::One, 2, 1)).unwrap(),
            (1, 4, 7)
        );
        assert_eq!(
            conic_point(&params(3, ConicFamily::Two, 2, 1)).unwrap(),
            (13, 3, 14)
        );
        assert_eq!(
            conic_point(&params(-3, ConicFamily::Two, 2, 1)).unwrap(),
            (-14, 3, -13)
        );
        let mut q = params(3, ConicFamily::One, 2, 1);
        q.negate_x = true;
        q.negate_z = true;
        assert_eq!(conic_point(&q).unwrap(), (-1, 4, -7));
    }

    #[test]
    fn conic_params_are_validated() {
        for bad in [
            params(2, ConicFamily::One, 2, 1),  // p = 2
            params(9, ConicFamily::One, 2, 1),  // p not prime
            params(3, ConicFamily::One, 3, 1),  // both odd
            params(3, ConicFamily::One, 2, 4),  // not coprime (and same parity)
            params(3, ConicFamily::One, 3, 2),  // p | s
            params(3, ConicFamily::Two, 4, 1),  // s ≡ t (mod 3)
        ] {
            assert!(conic_point(&bad).is_err(), "{bad:?} should be rejected");
        }
    }

    proptest! {
        #[test]
        fn conic_points_satisfy_identity_and_coprimality(
            p in prop::sample::select(vec![3i64, -3, 5, -5, 7, 11, -13]),
            s in -60i64..=60,
            t in -60i64..=60,
            family_two in any::<bool>(),
            negate_x in any::<bool>(),
            negate_z in any::<bool>(),
        ) {
            let family = if family_two { ConicFamily::Two } else { ConicFamily::One };
            let q = ConicParams { p, family, s, t, negate_x, negate_z };
            if let Ok((x, y, z)) = conic_point(&q) {
                prop_assert_eq!(x * x + p * y * y, z * z);
                prop_assert_eq!(x.gcd(&y), 1);
            }
        }
    }

    #[test]
    fn parametrizations_cover_and_are_disjoint_at_desk_scale() {
        for p in [3i64, -3, 5] {
            let report = conic_cover_check(p, 200).unwrap();
            assert!(report.is_clean(), "p = {p}: {report:?}");
            assert!(report.family_one > 0 && report.family_two > 0, "p = {p}");
        }
        assert!(conic_cover_check(3, 0).is_err());
        assert!(conic_cover_check(4, 100).is_err());
    }

    #[test]
    fn two_adic_valuations_power_the_parity_argument() {
        assert_eq!(prop3_obstruction(3, 2, 1).unwrap(), 0);
        assert_eq!(prop3_obstruction(-3, 2, 1).unwrap(), 1);
        assert_eq!(prop3_obstruction(-3, 4, 1).unwrap(), 1);
        assert!(prop3_obstruction(5, 2, 1).is_err());
        assert!(prop3_obstruction(3, 3, 1).is_err());
    }

    proptest! {
        #[test]
        fn valuation_is_constant_per_sign(s in -100i64..=100, t in -100i64..=100) {
            prop_assume!(s.gcd(&t) == 1 && (s + t).rem_euclid(2) == 1);
            prop_assert_eq!(prop3_obstruction(3, s, t).unwrap(), 0);
            prop_assert_eq!(prop3_obstruction(-3, s, t).unwrap(), 1);
        }
    }

    #[test]
    fn even_exponent_power_gap_scan_is_empty() {
        for b in [3u64, 5, 7, 9] {
            assert!(prop3_search(b, 12, 12).is_empty(), "b = {b}");
        }
    }

    #[test]
    fn x_equal_one_control_finds_the_escape_hatch() {
        let hits = prop3_scan(1, 1, 6, 6);
        assert!(hits.contains(&(1, 2, 1))); // 4 − 1 = 3·1²
        assert!(hits.iter().all(|&(x, _, _)| x == 1));
    }

    #[test]
    fn congruence_sweeps_reproduce_the_endgame() {
        // 64 − 5^α ≡ 5 (mod 6) for odd α, never a value of ±3z².
        let t = PowerTemplate {
            constant: 64,
            sign: -1,
            base: 5,
        };
        let allowed = ResidueSet::from_signed(6, &[0, 3, -3]);
        let verdicts = congruence_obstruction(&t, &allowed, (1..=99).step_by(2));
        assert!(verdicts.iter().all(|v| v.residue == 5 && v.obstructed));

        // 64 + 5^α ≡ 4 (mod 5) always, while ±3z² mod 5 ∈ {0, 2, 3}.
        let t = PowerTemplate {
            constant: 64,
            sign: 1,
            base: 5,
        };
        let allowed = ResidueSet::from_signed(5, &[0, 2, 3]);
        let verdicts = congruence_obstruction(&t, &allowed, 1..=99);
        assert!(verdicts.iter().all(|v| v.residue == 4 && v.obstructed));

        // Trivial non-obstruction: 0 mod 6 against {0}.
        let t = PowerTemplate {
            constant: -6,
            sign: 1,
            base: 6,
        };
        let allowed = ResidueSet::from_signed(6, &[0]);
        let verdicts = congruence_obstruction(&t, &allowed, [1u32, 2, 3]);
        assert!(verdicts.iter().all(|v| v.residue == 0 && !v.obstructed));
    }

    fn eq3(a: i64, b: i64, c: i64) -> TernaryEquation {
        TernaryEquation::ppp3(a, b, c).unwrap()
    }

    #[test]
    fn unit_case_reductions_match_the_published_constants() {
        let (even, odd) = reduce_unit_case(&eq3(2, 27, 7), 1).unwrap();
        assert_eq!((even.k, even.x_scale, even.y_scale, even.min_m), (-1323, 7, 7, 1));
        assert_eq!((odd.k, odd.x_scale, odd.y_scale, odd.min_m), (-10584, 14, 28, 0));
        let (even, odd) = reduce_unit_case(&eq3(2, 27, 7), -1).unwrap();
        assert_eq!((even.k, odd.k), (1323, 10584));

        let (even, odd) = reduce_unit_case(&eq3(4, 27, 13), 1).unwrap();
        assert_eq!((even.k, even.x_scale, even.y_scale), (-4563, 13, 13));
        assert_eq!((odd.k, odd.x_scale, odd.y_scale), (-36504, 26, 52));

        let (even, odd) = reduce_unit_case(&eq3(2, 27, 1), -1).unwrap();
        assert_eq!((even.k, even.x_scale, even.y_scale), (27, 1, 1));
        assert_eq!((odd.k, odd.x_scale, odd.y_scale), (216, 2, 4));
    }

    #[test]
    fn unit_case_rejects_wrong_shapes() {
        assert!(matches!(
            reduce_unit_case(&eq3(5, 27, 7), 1),
            Err(DioError::UnsupportedShape(_))
        ));
        assert!(matches!(
            reduce_unit_case(&eq3(2, 27, 7), 2),
            Err(DioError::InvalidParams(_))
        ));
        let eq2 = TernaryEquation::ppp2(5, 64, 3).unwrap();
        assert!(matches!(
            reduce_unit_case(&eq2, 1),
            Err(DioError::UnsupportedShape(_))
        ));
    }

    proptest! {
        #[test]
        fn reduction_identity_is_exact(
            alpha in 1u32..=20,
            w in -50i64..=50,
            xy_neg in any::<bool>(),
            c in prop::sample::select(vec![1i64, 7, 13]),
        ) {
            prop_assume!(w != 0);
            let xy: i64 = if xy_neg { -1 } else { 1 };
            let eq = eq3(2, 27, c);
            let (even, odd) = reduce_unit_case(&eq, xy as i8).unwrap();
            let big = BigInt::from;
            // residual of the unit equation 2^α + xy·B = C·w³
            let residual = big(c) * big(w).pow(3) - big(xy) * big(27) - big(2).pow(alpha);
            if alpha % 2 == 0 {
                let x = big(c) * big(w);
                let y = big(c) * big(2).pow(alpha / 2);
                let lhs = x.pow(3) + big(even.k) - &y * &y;
                prop_assert_eq!(lhs, big(c) * big(c) * &residual);
            } else {
                let x = big(2) * big(c) * big(w);
                let y = big(4) * big(c) * big(2).pow((alpha - 1) / 2);
                let lhs = x.pow(3) + big(odd.k) - &y * &y;
                prop_assert_eq!(lhs, big(8) * big(c) * big(c) * &residual);
            }
        }
    }

    #[test]
    fn mordell_searches_reproduce_published_point_lists() {
        assert_eq!(mordell_search(1323, 1000).solutions, vec![(-3, 36)]);
        assert_eq!(
            mordell_search(-10584, 1000).solutions,
            vec![
                (22, 8),
                (25, 71),
                (42, 252),
                (105, 1071),
                (294, 5040),
                (394, 7820)
            ]
        );
        assert_eq!(mordell_search(-4563, 1000).solutions, vec![(39, 234)]);
        assert_eq!(mordell_search(36504, 1000).solutions, vec![(30, 252)]);
    }

    proptest! {
        #[test]
        fn mordell_search_is_sound_sorted_and_monotone(k in prop::sample::select(
            vec![1323i64, -1323, 10584, -10584, 4563, -4563, 36504, -36504, 17, -2]
        )) {
            let small = mordell_search(k, 300);
            let large = mordell_search(k, 800);
            for &(x, y) in &large.solutions {
                prop_assert!(y >= 0);
                prop_assert_eq!((y as i128) * (y as i128), (x as i128).pow(3) + k as i128);
            }
            let mut sorted = large.solutions.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(&sorted, &large.solutions);
            // growing the bound only appends
            for pair in &small.solutions {
                prop_assert!(large.solutions.contains(pair));
            }
            for &(x, _) in &large.solutions {
                if x.abs() <= 300 {
                    prop_assert!(small.solutions.iter().any(|&(sx, _)| sx == x));
                }
            }
        }
    }

    #[test]
    fn scale_filters_empty_every_published_list() {
        let t2 = eq3(2, 27, 7);
        let t3 = eq3(2, 27, 13);
        for (eq, xy) in [(&t2, 1i8), (&t2, -1), (&t3, 1), (&t3, -1)] {
            let (even, odd) = reduce_unit_case(eq, xy).unwrap();
            for inst in [even, odd] {
                let set = mordell_search(inst.k, 1000);
                let kept = filter_mordell_solutions(&set, &inst);
                assert!(kept.is_empty(), "{} k = {} kept {kept:?}", inst.origin, inst.k);
            }
        }
    }

    #[test]
    fn scale_filter_keeps_a_synthetic_match() {
        let set = MordellSolutionSet {
            k: 3120,
            bound: 10,
            solutions: vec![(2, 56), (4, 8), (6, 28)],
        };
        let inst = MordellInstance {
            k: 3120,
            x_scale: 2,
            y_scale: 28,
            min_m: 0,
            origin: "synthetic".into(),
        };
        // 56 = 28·2¹ and 28 = 28·2⁰ qualify; 8 is no multiple of 28.
        assert_eq!(filter_mordell_solutions(&set, &inst), vec![(2, 56), (6, 28)]);
        // min_m = 1 demands at least one factor of two on top of the scale.
        let strict = MordellInstance { min_m: 1, ..inst };
        assert_eq!(filter_mordell_solutions(&set, &strict), vec![(2, 56)]);
    }
}
