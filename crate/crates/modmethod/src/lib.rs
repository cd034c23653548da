//! Exact machinery for the modular method on ternary Diophantine equations
//! of signatures (p,p,2) and (p,p,3).
//!
//! The pipeline mirrors how such equations are dispatched in practice:
//!
//! 1. a hypothetical primitive solution of `A xⁿ + B yⁿ = C z^m` (m ∈ {2,3})
//!    is attached to a Frey elliptic curve ([`frey`]);
//! 2. level lowering (Wiles–Ribet–BCDT, taken as an axiom here) says the
//!    mod-n representation arises from a weight-2 newform at a small,
//!    explicitly computable level ([`frey::artin_level_ppp2`] and friends);
//! 3. each newform class at that level is eliminated by exact divisibility
//!    constraints on Hecke eigenvalues (the Kraus sieve, [`eliminator`]),
//!    by residue refinements modulo a surviving exponent, or by a
//!    j-invariant denominator obstruction;
//! 4. the degenerate `xy = ±1` branches reduce to congruence obstructions
//!    and Mordell equations `Y² = X³ + k` searched exactly ([`diophantine`]);
//! 5. every step is serialized into a deterministic, replayable certificate
//!    ([`certify`]).
//!
//! All number theory is done in exact integer arithmetic (`num-bigint`);
//! floating point appears only in the Hasse-bound plausibility check on
//! ingested eigenvalue data, never in a proof step.

pub mod algebra;
pub mod certify;
pub mod diophantine;
pub mod eliminator;
pub mod ellcurve;
pub mod frey;
pub mod newforms;
