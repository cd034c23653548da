//! The elimination sieve: ruling newforms out as sources of the Frey
//! representation.
//!
//! Level lowering leaves finitely many conjugacy classes of weight-2
//! newforms at the Artin level, and the proof closes by showing none of
//! them can give rise to the mod-`n` representation of the Frey curve.
//! Three weapons do all the work here:
//!
//! * **Norm sieve** (Kraus; as in Bennett–Skinner Lemma 4.3 and
//!   Bennett–Vatsal–Yazdani Proposition 4.2).  At a witness prime `p`
//!   coprime to `n` and the level, the trace of the Frey curve lies in a
//!   finite admissible set: either `a_p ∈ S_{p,m}` — Hasse-bounded integers
//!   with a parity (signature `m = 2`) or mod-3 (signature `m = 3`)
//!   congruence — or `a_p = ±(p+1)`.  If `f` gave rise to the
//!   representation then `n | Norm_{K_f/ℚ}(c_p − a_p)` for one of those
//!   `a_p`, so computing the finitely many norms bounds `n`.  Norms are
//!   exact resultants; survivors are read off the prime factorizations,
//!   never by scanning a range of `n`.
//! * **Residue refinement.**  A survivor `n` pins `c_p ≡ a_p` modulo a
//!   prime `℘ | n` of the Hecke field.  When `℘` has degree one it is
//!   visible as a root of the defining polynomial mod `n`, and a second
//!   prime `q` then forces `c_q mod ℘` into the admissible set mod `n` —
//!   often a contradiction (the `a_5 ≡ ±20 (mod 83)` step at level 338).
//! * **j-denominator obstruction** (Bennett–Skinner Proposition 4.4).  For
//!   a rational class with attached curve `E″`, the denominator of `j(E″)`
//!   may not be divisible by any odd prime `p ≠ n` dividing `C`; a prime
//!   that does divide it kills every exponent at once (the level-45 step).
//!
//! One hypothesis is deliberately left to the caller: whether the special
//! traces `±(p+1)` belong in the admissible set.  The source arguments are
//! not consistent about this — dropping them eliminates the level-338
//! classes with `c_7 = ±3` for all `n ≥ 11`, keeping them leaves `n = 11`
//! alive there while simultaneously being what produces the norm 83 that
//! the `n = 83` refinement then kills.  [`SpecialTraceConvention`] makes
//! the choice explicit, reports record it, and nothing here silently picks
//! a side.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::algebra;
use crate::newforms::{self, NewformError, NewformRecord, RationalNewformCurve};

#[derive(Debug, Error)]
pub enum ElimError {
    #[error("signature m = {0} is not supported (expected 2 or 3)")]
    BadSignature(u8),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("witness {p} is invalid for level {level} (must be an odd prime coprime to the level)")]
    InvalidWitness { p: u64, level: u64 },
    #[error("{label} stores no eigenvalue at witness {p}")]
    InsufficientEigenvalues { label: String, p: u64 },
    #[error("every witness left the exponent unconstrained (some norm vanished); survivors are not a finite set")]
    NoFiniteWitness,
    #[error("refinement at q = {q} needs q ∤ level and q ≠ n")]
    BadRefinementPrime { q: u64 },
    #[error(transparent)]
    Newform(#[from] NewformError),
}

/// Whether the admissible trace set includes the special values `±(p+1)`.
///
/// `Always` is the conservative reading (never misses a solution class);
/// `Never` is the aggressive one the level-338 witness-7 eliminations
/// implicitly rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialTraceConvention {
    Always,
    Never,
}

impl std::fmt::Display for SpecialTraceConvention {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpecialTraceConvention::Always => write!(out, "always"),
            SpecialTraceConvention::Never => write!(out, "never"),
        }
    }
}

impl std::str::FromStr for SpecialTraceConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "always" => Ok(SpecialTraceConvention::Always),
            "never" => Ok(SpecialTraceConvention::Never),
            other => Err(format!("unknown convention `{other}` (use always|never)")),
        }
    }
}

/// The finite set of traces a Frey curve can have at a good prime `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibleTraces {
    pub p: u64,
    pub m: u8,
    /// `S_{p,m}`: integers `|x| < 2√p` with `x` even (m = 2) or
    /// `x ≡ p + 1 (mod 3)` (m = 3), ascending.
    pub small: Vec<i64>,
    /// `±(p+1)`, present only under [`SpecialTraceConvention::Always`].
    pub special: Vec<i64>,
    pub convention: SpecialTraceConvention,
}

impl AdmissibleTraces {
    /// Every admissible trace, small set first.
    pub fn all(&self) -> Vec<i64> {
        let mut v = self.small.clone();
        v.extend_from_slice(&self.special);
        v
    }
}

/// Admissible traces at a prime `p` for signature `(n,n,m)`.
///
/// The bound `|x| < 2√p` is strict and is evaluated exactly as `x² < 4p`.
/// For `m = 3` and `p = 3` the congruence reads `x ≡ 1 (mod 3)`; the small
/// set is `{−2, 1}` and the sieve at witness 3 uses exactly that.
pub fn admissible_traces(
    p: u64,
    m: u8,
    convention: SpecialTraceConvention,
) -> Result<AdmissibleTraces, ElimError> {
    if m != 2 && m != 3 {
        return Err(ElimError::BadSignature(m));
    }
    if !algebra::is_prime(p) {
        return Err(ElimError::NotPrime(p));
    }
    let mut small = Vec::new();
    let mut x = -(2 * (p as f64).sqrt().ceil() as i64) - 2;
    while x * x >= 4 * p as i64 {
        x += 1; // walk up to the first value inside the open Hasse interval
    }
    while x * x < 4 * p as i64 {
        let fits = match m {
            2 => x % 2 == 0,
            _ => x.rem_euclid(3) == ((p + 1) % 3) as i64,
        };
        if fits {
            small.push(x);
        }
        x += 1;
    }
    let special = match convention {
        SpecialTraceConvention::Always => vec![-((p + 1) as i64), (p + 1) as i64],
        SpecialTraceConvention::Never => vec![],
    };
    Ok(AdmissibleTraces {
        p,
        m,
        small,
        special,
        convention,
    })
}

/// What one witness prime says about the exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessConstraint {
    /// `n` must lie in this set (primes ≥ n_floor dividing some norm).
    Primes(BTreeSet<u64>),
    /// Some admissible norm vanished; this witness constrains nothing.
    Unconstrained,
}

/// The full norm table at one witness, kept for replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessRecord {
    pub p: u64,
    /// `(a_p, Norm(c_p − a_p))` for every admissible trace, in trace order.
    pub norms: Vec<(i64, BigInt)>,
    pub constraint: WitnessConstraint,
}

/// A prime exponent the sieve could not rule out, with the traces that
/// realize the divisibility at each witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivingPrime {
    pub n: u64,
    pub witness_traces: BTreeMap<u64, Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElimStatus {
    Eliminated,
    Survives(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineOutcome {
    Contradiction,
    Consistent,
}

/// One run of the degree-one residue refinement, with everything needed to
/// replay it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueRefinement {
    pub form_label: String,
    pub n: u64,
    pub q: u64,
    /// Roots of the defining polynomial mod `n` consistent with the
    /// survivor's witnessing trace (all roots when no trace was pinned).
    pub matched_roots: Vec<u64>,
    /// `c_q mod ℘` over the matched roots.
    pub eigen_residues: BTreeSet<u64>,
    /// Admissible `a_q` reduced mod `n`.
    pub admissible_residues: BTreeSet<u64>,
    pub outcome: RefineOutcome,
}

/// Everything the sieve learned about one newform class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationReport {
    pub form_label: String,
    pub m: u8,
    pub n_floor: u64,
    pub n_excluded: BTreeSet<u64>,
    pub convention: SpecialTraceConvention,
    pub witnesses: Vec<WitnessRecord>,
    pub survivors: Vec<SurvivingPrime>,
    pub refinements: Vec<ResidueRefinement>,
    pub status: ElimStatus,
}

impl EliminationReport {
    /// Attach a refinement run and fold a contradiction into the status.
    pub fn apply_refinement(&mut self, refinement: ResidueRefinement) {
        assert_eq!(refinement.form_label, self.form_label);
        self.refinements.push(refinement);
        self.recompute_status();
    }

    fn recompute_status(&mut self) {
        let refuted: BTreeSet<u64> = self
            .refinements
            .iter()
            .filter(|r| r.outcome == RefineOutcome::Contradiction)
            .map(|r| r.n)
            .collect();
        let open: Vec<u64> = self
            .survivors
            .iter()
            .map(|s| s.n)
            .filter(|n| !refuted.contains(n))
            .collect();
        self.status = if open.is_empty() {
            ElimStatus::Eliminated
        } else {
            ElimStatus::Survives(open)
        };
    }

    /// Exponents still alive after sieve and refinements.
    pub fn open_primes(&self) -> Vec<u64> {
        match &self.status {
            ElimStatus::Eliminated => vec![],
            ElimStatus::Survives(v) => v.clone(),
        }
    }
}

/// Run the norm sieve for one newform class.
///
/// For each witness `p` (odd, prime, coprime to the level, with a stored
/// eigenvalue) the full table `Norm(c_p − a_p)` over the admissible traces
/// is computed exactly.  A vanishing norm makes the witness unconstraining;
/// otherwise the witness pins `n` to the primes `≥ n_floor` (outside
/// `n_excluded`, and ≠ p) dividing some table entry.  Survivors are the
/// intersection over witnesses — a witness equal to a candidate `n` is
/// skipped for that candidate, since the underlying congruence needs
/// `p ∤ nN`.  Each survivor records the traces that realize the
/// divisibility so the verdict replays from the report alone.
pub fn sieve_form(
    f: &NewformRecord,
    m: u8,
    witnesses: &[u64],
    n_floor: u64,
    n_excluded: &BTreeSet<u64>,
    convention: SpecialTraceConvention,
) -> Result<EliminationReport, ElimError> {
    if m != 2 && m != 3 {
        return Err(ElimError::BadSignature(m));
    }
    let mut records = Vec::new();
    for &p in witnesses {
        if !algebra::is_prime(p) || f.level() % p == 0 {
            return Err(ElimError::InvalidWitness {
                p,
                level: f.level(),
            });
        }
        if f.eigenvalue(p).is_none() {
            return Err(ElimError::InsufficientEigenvalues {
                label: f.label().to_string(),
                p,
            });
        }
        let traces = admissible_traces(p, m, convention)?;
        let mut norms = Vec::new();
        let mut vanished = false;
        let mut divisors: BTreeSet<u64> = BTreeSet::new();
        for a in traces.all() {
            let norm = newforms::eigenvalue_norm_diff(f, p, &BigInt::from(a))?;
            if norm.is_zero() {
                vanished = true;
            } else {
                let abs = norm.magnitude().try_into().unwrap_or(u64::MAX);
                for (r, _) in algebra::factorize(abs) {
                    if r >= n_floor && r != p && !n_excluded.contains(&r) {
                        divisors.insert(r);
                    }
                }
            }
            norms.push((a, norm));
        }
        records.push(WitnessRecord {
            p,
            norms,
            constraint: if vanished {
                WitnessConstraint::Unconstrained
            } else {
                WitnessConstraint::Primes(divisors)
            },
        });
    }

    if records
        .iter()
        .all(|w| w.constraint == WitnessConstraint::Unconstrained)
    {
        return Err(ElimError::NoFiniteWitness);
    }

    let mut candidates: BTreeSet<u64> = BTreeSet::new();
    for w in &records {
        if let WitnessConstraint::Primes(set) = &w.constraint {
            candidates.extend(set.iter().copied());
        }
        // A witness prime at or above the floor is a candidate in its own
        // right: that witness cannot constrain n = p, only the others can.
        if w.p >= n_floor && !n_excluded.contains(&w.p) {
            candidates.insert(w.p);
        }
    }
    let mut survivors = Vec::new();
    for n in candidates {
        let n_big = BigInt::from(n);
        let passes = records.iter().all(|w| match &w.constraint {
            _ if w.p == n => true, // witness cannot speak about n = p
            WitnessConstraint::Unconstrained => true,
            WitnessConstraint::Primes(set) => set.contains(&n),
        });
        if !passes {
            continue;
        }
        let mut witness_traces = BTreeMap::new();
        for w in &records {
            if w.p == n {
                continue;
            }
            let traces: Vec<i64> = w
                .norms
                .iter()
                .filter(|(_, norm)| (norm % &n_big).is_zero())
                .map(|&(a, _)| a)
                .collect();
            witness_traces.insert(w.p, traces);
        }
        survivors.push(SurvivingPrime { n, witness_traces });
    }

    let mut report = EliminationReport {
        form_label: f.label().to_string(),
        m,
        n_floor,
        n_excluded: n_excluded.clone(),
        convention,
        witnesses: records,
        survivors,
        refinements: vec![],
        status: ElimStatus::Eliminated,
    };
    report.recompute_status();
    Ok(report)
}

/// The residue refinement at a second prime `q` for a sieve survivor `n`.
///
/// `matched_witness = Some((p, a_p))` pins the degree-one primes above `n`
/// to the roots `r` of the defining polynomial with `c_p ≡ a_p (mod ℘_r)`,
/// exactly the primes a survivor via that trace can live at; `None` keeps
/// all degree-one primes.  The outcome is a contradiction iff, at every
/// matched prime, `c_q mod ℘` avoids the admissible set mod `n`.  When `n`
/// has no (matching) degree-one prime the refinement is inapplicable and
/// the survivor stands.
pub fn refine_residue(
    f: &NewformRecord,
    n: u64,
    q: u64,
    m: u8,
    convention: SpecialTraceConvention,
    matched_witness: Option<(u64, i64)>,
) -> Result<ResidueRefinement, ElimError> {
    if !algebra::is_prime(n) {
        return Err(ElimError::NotPrime(n));
    }
    if !algebra::is_prime(q) || q == n || f.level() % q == 0 {
        return Err(ElimError::BadRefinementPrime { q });
    }
    let q_residues = newforms::eigenvalue_residues(f, q, n)?;
    let matched_roots: Vec<u64> = match matched_witness {
        None => q_residues.iter().map(|&(r, _)| r).collect(),
        Some((p, a)) => {
            let p_residues = newforms::eigenvalue_residues(f, p, n)?;
            let target = a.rem_euclid(n as i64) as u64;
            let roots: Vec<u64> = p_residues
                .iter()
                .filter(|&&(_, c)| c == target)
                .map(|&(r, _)| r)
                .collect();
            if roots.is_empty() {
                // The divisibility lives at a higher-degree prime.
                return Err(ElimError::Newform(NewformError::NoDegreeOnePrime {
                    label: f.label().to_string(),
                    n,
                }));
            }
            roots
        }
    };
    let eigen_residues: BTreeSet<u64> = q_residues
        .iter()
        .filter(|(r, _)| matched_roots.contains(r))
        .map(|&(_, c)| c)
        .collect();
    let admissible_residues: BTreeSet<u64> = admissible_traces(q, m, convention)?
        .all()
        .iter()
        .map(|a| a.rem_euclid(n as i64) as u64)
        .collect();
    let outcome = if eigen_residues.is_disjoint(&admissible_residues) {
        RefineOutcome::Contradiction
    } else {
        RefineOutcome::Consistent
    };
    Ok(ResidueRefinement {
        form_label: f.label().to_string(),
        n,
        q,
        matched_roots,
        eigen_residues,
        admissible_residues,
        outcome,
    })
}

/// A rational class killed through the denominator of its curve's
/// j-invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JObstruction {
    pub form_label: String,
    pub j_denominator: BigInt,
    pub offending_prime: u64,
    /// True when the offending prime is below `n_floor`, so `p ≠ n` holds
    /// for every exponent in play and the obstruction is unconditional.
    pub unconditional: bool,
}

/// Check the j-denominator obstruction for a rational class against the
/// coefficient `C` of the equation.
///
/// An isomorphic mod-`n` representation forces `den(j)` to avoid every odd
/// prime `p ≠ n` dividing `C`; finding such a prime in the denominator
/// refutes the class for all `n` (unconditionally when `p < n_floor`,
/// otherwise for `n ≠ p`).  Returns `None` when the denominator is clean —
/// the obstruction simply does not apply.
pub fn j_obstruction(
    companion: &RationalNewformCurve,
    c_coeff: &BigInt,
    n_floor: u64,
) -> Option<JObstruction> {
    let j = companion
        .curve
        .j_invariant()
        .expect("companion curves are nonsingular by construction");
    if j.is_integral() {
        return None;
    }
    let c_abs: u64 = c_coeff.magnitude().try_into().ok()?;
    if c_abs == 0 {
        return None;
    }
    for (p, _) in algebra::factorize(c_abs) {
        if p % 2 == 1 && j.denominator_divisible_by(p) {
            return Some(JObstruction {
                form_label: companion.label.clone(),
                j_denominator: j.denominator().clone(),
                offending_prime: p,
                unconditional: p < n_floor,
            });
        }
    }
    None
}
