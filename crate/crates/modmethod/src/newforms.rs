//! Weight-2 newform eigenvalue data and exact arithmetic in Hecke fields.
//!
//! The sieve's raw material is, for each Galois-conjugacy class `f` of
//! weight-2 trivial-character newforms at a given level, the Hecke
//! eigenvalues `c_q` at small primes `q`.  Each class is stored once, with
//! `c_q` written in the power basis of a root `θ` of the class's defining
//! polynomial; conjugate classes that differ only by a sign choice (such as
//! the pair with `c₅ = ±(2θ² − 12)` at level 338) appear as separate records
//! with the signs made explicit.  Everything downstream needs only two exact
//! quantities, both computed here without ever leaving ℤ:
//!
//! * `Norm_{K_f/ℚ}(c_q − a)`, obtained as `resultant(field_poly, c_q(x) − a)`
//!   — the quantity whose divisibility by the exponent `n` the sieve tests;
//! * for a prime `n` with a degree-one prime of `K_f` above it, the residues
//!   `c_q mod ℘`, obtained by evaluating the coordinate vector at the roots
//!   of the defining polynomial mod `n`.
//!
//! Records at the levels the built-in proofs need (45, 98, 338) are compiled
//! into the binary; they were computed with modular symbols in the style of
//! Cremona's algorithms and cross-checked against the Hasse bound and, where
//! a rational class corresponds to a known elliptic curve, against point
//! counts of that curve.  A small HTTP client can mirror other levels from a
//! remote database into a local cache; ingest re-validates everything, and a
//! fetch failure is not fatal for levels that ship with the crate.
//!
//! Floating point appears in exactly one place: the plausibility check that
//! every complex embedding of a stored eigenvalue obeys `|c_q| ≤ 2√q`.  It
//! guards against corrupted data files and is never part of a proof step —
//! the proofs consume only the exact integer computations above.

use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;
use thiserror::Error;

use crate::algebra::{self, IntPoly};
use crate::ellcurve::WeierstrassCurve;

/// Every record must carry eigenvalues at all primes up to this bound.
pub const REQUIRED_COVERAGE: u64 = 50;

/// Numeric tolerance for the Hasse plausibility check.
const HASSE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum NewformError {
    #[error("no newform data available for level {0}")]
    LevelNotAvailable(u64),
    #[error("malformed newform record: {0}")]
    MalformedRecord(String),
    #[error("remote data does not match the expected schema: {0}")]
    RemoteSchemaMismatch(String),
    #[error("cached newform data is corrupt: {0}")]
    CacheCorrupt(String),
    #[error("record {label} has no stored eigenvalue at {q}")]
    MissingEigenvalue { label: String, q: u64 },
    #[error("the field of {label} has no degree-one prime above {n}")]
    NoDegreeOnePrime { label: String, n: u64 },
    #[error("{n} meets the discriminant or denominator of {label}; residue evaluation refused")]
    RamifiedPrime { label: String, n: u64 },
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("http error: {0}")]
    Http(#[from] reqwest::Error),
}

/// One Hecke eigenvalue, written in the power basis of the record's field:
/// `c_q = (coords[0] + coords[1]·θ + …) / den` with `den ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eigenvalue {
    pub coords: Vec<BigInt>,
    pub den: BigInt,
}

impl Eigenvalue {
    fn integral(coords: Vec<BigInt>) -> Eigenvalue {
        Eigenvalue {
            coords,
            den: BigInt::one(),
        }
    }
}

/// A Galois-conjugacy class of weight-2 trivial-character newforms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewformRecord {
    label: String,
    level: u64,
    weight: u8,
    field_poly: IntPoly,
    eigenvalues: BTreeMap<u64, Eigenvalue>,
}

impl NewformRecord {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn field_poly(&self) -> &IntPoly {
        &self.field_poly
    }

    /// Degree of the Hecke eigenvalue field over ℚ.
    pub fn degree(&self) -> usize {
        self.field_poly.degree().unwrap_or(0)
    }

    pub fn is_rational(&self) -> bool {
        self.degree() == 1
    }

    pub fn eigenvalue(&self, q: u64) -> Option<&Eigenvalue> {
        self.eigenvalues.get(&q)
    }

    /// Primes with stored eigenvalues, ascending.
    pub fn stored_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.eigenvalues.keys().copied()
    }
}

/// An elliptic curve over ℚ attached to a rational newform class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalNewformCurve {
    pub label: String,
    pub curve: WeierstrassCurve,
}

/// Where newform data comes from.
#[derive(Debug, Clone)]
pub enum NewformSource {
    /// The records compiled into the crate (levels 45, 98, 338).
    Bundled,
    /// A remote database mirrored into `cache_dir`; the cache is consulted
    /// first and a miss triggers one HTTP fetch.
    Remote { endpoint: String, cache_dir: PathBuf },
}

// ---------------------------------------------------------------------------
// record text format

/// Parse one record from the plain-text format:
///
/// ```text
/// label 338.7
/// level 338
/// weight 2
/// field_poly 13,-4,-3,1
/// 2: -1,0,0
/// 3: 0,1,0
/// ```
///
/// Coefficients are ascending in degree; an eigenvalue line may end in
/// `/den` for a global denominator.  Parsing validates the record, including
/// the numeric Hasse check, so a successfully parsed record is usable as-is.
pub fn parse_record(text: &str) -> Result<NewformRecord, NewformError> {
    let bad = |msg: &str| NewformError::MalformedRecord(msg.to_string());
    let mut lines = text.lines();
    let mut header = |key: &str| -> Result<String, NewformError> {
        let line = lines
            .next()
            .ok_or_else(|| bad(&format!("missing `{key}` line")))?;
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| bad(&format!("expected `{key} …`, found `{line}`")))?;
        Ok(rest.trim().to_string())
    };
    let label = header("label")?;
    let level: u64 = header("level")?
        .parse()
        .map_err(|_| bad("level is not an integer"))?;
    let weight: u8 = header("weight")?
        .parse()
        .map_err(|_| bad("weight is not an integer"))?;
    let poly_coeffs = parse_int_list(&header("field_poly")?)
        .ok_or_else(|| bad("field_poly coefficients unreadable"))?;
    let field_poly = IntPoly::new(poly_coeffs);

    let mut eigenvalues = BTreeMap::new();
    let mut last_q = 0u64;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (q_part, rest) = line
            .split_once(':')
            .ok_or_else(|| bad(&format!("eigenvalue line without `:`: `{line}`")))?;
        let q: u64 = q_part
            .trim()
            .parse()
            .map_err(|_| bad("eigenvalue prime unreadable"))?;
        if q <= last_q {
            return Err(bad("eigenvalue primes must be strictly ascending"));
        }
        last_q = q;
        let (coord_part, den) = match rest.split_once('/') {
            Some((c, d)) => {
                let den: BigInt = d
                    .trim()
                    .parse()
                    .map_err(|_| bad("denominator unreadable"))?;
                (c, den)
            }
            None => (rest, BigInt::one()),
        };
        let coords = parse_int_list(coord_part.trim())
            .ok_or_else(|| bad(&format!("coordinates unreadable in `{line}`")))?;
        eigenvalues.insert(q, Eigenvalue { coords, den });
    }

    let record = NewformRecord {
        label,
        level,
        weight,
        field_poly,
        eigenvalues,
    };
    validate_record(&record)?;
    Ok(record)
}

fn parse_int_list(s: &str) -> Option<Vec<BigInt>> {
    s.split(',').map(|t| t.trim().parse().ok()).collect()
}

/// Serialize a record to the canonical text form; `parse_record` of the
/// result gives back an equal record, and records parsed from canonical text
/// serialize back to the identical bytes.
pub fn serialize_record(rec: &NewformRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("label {}\n", rec.label));
    out.push_str(&format!("level {}\n", rec.level));
    out.push_str(&format!("weight {}\n", rec.weight));
    let coeffs: Vec<String> = rec
        .field_poly
        .coeffs()
        .iter()
        .map(|c| c.to_string())
        .collect();
    out.push_str(&format!("field_poly {}\n", coeffs.join(",")));
    for (q, eig) in &rec.eigenvalues {
        let coords: Vec<String> = eig.coords.iter().map(|c| c.to_string()).collect();
        if eig.den.is_one() {
            out.push_str(&format!("{}: {}\n", q, coords.join(",")));
        } else {
            out.push_str(&format!("{}: {}/{}\n", q, coords.join(","), eig.den));
        }
    }
    out
}

/// Structural and numeric sanity for a record.
///
/// Structure: weight 2, monic defining polynomial, every coordinate vector of
/// the field's degree, positive denominators.  Numerics: at each stored prime
/// `q` not dividing the level, every complex embedding of `c_q` must obey the
/// Hasse bound `|c_q| ≤ 2√q` within [`HASSE_TOLERANCE`].
pub fn validate_record(rec: &NewformRecord) -> Result<(), NewformError> {
    let fail = |msg: String| Err(NewformError::ValidationFailed(msg));
    if rec.label.is_empty() {
        return fail("empty label".into());
    }
    if rec.level == 0 {
        return fail(format!("{}: level 0", rec.label));
    }
    if rec.weight != 2 {
        return fail(format!("{}: weight {} != 2", rec.label, rec.weight));
    }
    if !rec.field_poly.is_monic() {
        return fail(format!("{}: field_poly is not monic", rec.label));
    }
    let deg = rec.degree();
    if deg == 0 {
        return fail(format!("{}: constant field_poly", rec.label));
    }
    for (q, eig) in &rec.eigenvalues {
        if eig.coords.len() != deg {
            return fail(format!(
                "{}: eigenvalue at {} has {} coordinates, field degree is {}",
                rec.label,
                q,
                eig.coords.len(),
                deg
            ));
        }
        if !eig.den.is_positive() {
            return fail(format!("{}: nonpositive denominator at {}", rec.label, q));
        }
    }
    let roots = complex_roots(&rec.field_poly);
    for (&q, eig) in &rec.eigenvalues {
        if rec.level % q == 0 {
            continue;
        }
        let bound = 2.0 * (q as f64).sqrt() + HASSE_TOLERANCE;
        let den = eig.den.to_f64().unwrap_or(1.0);
        for root in &roots {
            let mut v = Complex64::new(0.0, 0.0);
            for c in eig.coords.iter().rev() {
                v = v * root + Complex64::new(c.to_f64().unwrap_or(0.0), 0.0);
            }
            let abs = (v / den).norm();
            if abs > bound {
                return fail(format!(
                    "{}: embedding of c_{} has |·| = {:.6} > 2√{} (Hasse bound)",
                    rec.label, q, abs, q
                ));
            }
        }
    }
    Ok(())
}

/// All complex roots of an integer polynomial (Durand–Kerner iteration).
fn complex_roots(p: &IntPoly) -> Vec<Complex64> {
    let Some(deg) = p.degree() else { return vec![] };
    if deg == 0 {
        return vec![];
    }
    let lead = p.coeff(deg).to_f64().unwrap_or(1.0);
    let coeffs: Vec<f64> = (0..=deg)
        .map(|i| p.coeff(i).to_f64().unwrap_or(0.0) / lead)
        .collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            v = v * z + c;
        }
        v
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved += step.norm();
        }
        if moved < 1e-13 {
            break;
        }
    }
    roots
}

// ---------------------------------------------------------------------------
// exact arithmetic

/// Exact `Norm_{K_f/ℚ}(c_q − a)`, as `resultant(field_poly, c_q(x) − a)`.
///
/// With a global denominator `den`, the norm is
/// `resultant(f, num(x) − a·den) / den^deg`; the quotient is exact because
/// `c_q − a` is an algebraic integer.
pub fn eigenvalue_norm_diff(
    f: &NewformRecord,
    q: u64,
    a: &BigInt,
) -> Result<BigInt, NewformError> {
    let eig = f
        .eigenvalue(q)
        .ok_or_else(|| NewformError::MissingEigenvalue {
            label: f.label.clone(),
            q,
        })?;
    let mut coords = eig.coords.clone();
    coords[0] -= a * &eig.den;
    let g = IntPoly::new(coords);
    let r = algebra::resultant(&f.field_poly, &g).map_err(|e| {
        NewformError::ValidationFailed(format!("{}: resultant failed: {e}", f.label))
    })?;
    if eig.den.is_one() {
        return Ok(r);
    }
    let scale = eig.den.pow(f.degree() as u32);
    let (quot, rem) = r.div_rem(&scale);
    if !rem.is_zero() {
        return Err(NewformError::ValidationFailed(format!(
            "{}: norm of c_{} − a is not an integer",
            f.label, q
        )));
    }
    Ok(quot)
}

fn poly_derivative(p: &IntPoly) -> IntPoly {
    let Some(deg) = p.degree() else {
        return IntPoly::zero();
    };
    IntPoly::new(
        (1..=deg)
            .map(|i| p.coeff(i) * BigInt::from(i))
            .collect::<Vec<_>>(),
    )
}

/// Residues of `c_q` at the degree-one primes of `K_f` above `n`.
///
/// Each root `r` of the defining polynomial mod `n` corresponds to a prime
/// `℘ | n` with residue field 𝔽_n and `θ ≡ r (mod ℘)`; the returned pairs are
/// `(r, c_q(r) mod n)`.  Refuses primes dividing the polynomial discriminant
/// or the stored denominator, where root counting can misrepresent the prime
/// splitting.
pub fn eigenvalue_residues(
    f: &NewformRecord,
    q: u64,
    n: u64,
) -> Result<Vec<(u64, u64)>, NewformError> {
    let eig = f
        .eigenvalue(q)
        .ok_or_else(|| NewformError::MissingEigenvalue {
            label: f.label.clone(),
            q,
        })?;
    let n_big = BigInt::from(n);
    if f.degree() > 1 {
        let disc = algebra::resultant(&f.field_poly, &poly_derivative(&f.field_poly))
            .map_err(|e| NewformError::ValidationFailed(format!("{}: {e}", f.label)))?;
        if (&disc % &n_big).is_zero() {
            return Err(NewformError::RamifiedPrime {
                label: f.label.clone(),
                n,
            });
        }
    }
    if (&eig.den % &n_big).is_zero() {
        return Err(NewformError::RamifiedPrime {
            label: f.label.clone(),
            n,
        });
    }
    let roots = algebra::roots_mod_prime(&f.field_poly, n)
        .map_err(|e| NewformError::ValidationFailed(format!("{}: {e}", f.label)))?;
    if roots.is_empty() {
        return Err(NewformError::NoDegreeOnePrime {
            label: f.label.clone(),
            n,
        });
    }
    let den_inv = modular_inverse(&eig.den, &n_big).expect("den coprime to n checked above");
    let value_poly = IntPoly::new(eig.coords.clone());
    let mut out = Vec::with_capacity(roots.len());
    for r in roots {
        let v = value_poly.eval_mod(&BigInt::from(r), &n_big);
        let v = (v * &den_inv).mod_floor(&n_big);
        out.push((r, v.to_u64().expect("residue < n fits u64")));
    }
    Ok(out)
}

fn modular_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// bundled datastore

const BUNDLED_RECORDS: &[&str] = &[
    include_str!("../data/45.1.nf"),
    include_str!("../data/98.1.nf"),
    include_str!("../data/98.2.nf"),
    include_str!("../data/338.1.nf"),
    include_str!("../data/338.2.nf"),
    include_str!("../data/338.3.nf"),
    include_str!("../data/338.4.nf"),
    include_str!("../data/338.5.nf"),
    include_str!("../data/338.6.nf"),
    include_str!("../data/338.7.nf"),
    include_str!("../data/338.8.nf"),
];

const BUNDLED_CURVES: &str = include_str!("../data/curves.txt");

fn bundled_store() -> &'static BTreeMap<u64, Vec<NewformRecord>> {
    static STORE: OnceLock<BTreeMap<u64, Vec<NewformRecord>>> = OnceLock::new();
    STORE.get_or_init(|| {
        let mut map: BTreeMap<u64, Vec<NewformRecord>> = BTreeMap::new();
        for text in BUNDLED_RECORDS {
            let rec = parse_record(text).expect("bundled record must parse");
            map.entry(rec.level).or_default().push(rec);
        }
        for recs in map.values_mut() {
            recs.sort_by_key(|r| label_sort_key(&r.label));
        }
        map
    })
}

/// Sort "N.k" labels by their numeric class index.
pub(crate) fn label_sort_key(label: &str) -> (u64, u64) {
    let mut it = label.splitn(2, '.');
    let level = it.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let idx = it.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    (level, idx)
}

// ---------------------------------------------------------------------------
// loading and the remote mirror

/// All newform classes at level `N` from the given source.
///
/// For [`NewformSource::Remote`] the cache directory is consulted first; on a
/// miss one fetch is attempted (concurrent callers for the same level share
/// it), and if the fetch fails but the level ships with the crate, the
/// bundled copy is served so that offline runs never lose the built-in
/// levels.
pub fn load_level(n: u64, source: &NewformSource) -> Result<Vec<NewformRecord>, NewformError> {
    match source {
        NewformSource::Bundled => bundled_store()
            .get(&n)
            .cloned()
            .ok_or(NewformError::LevelNotAvailable(n)),
        NewformSource::Remote {
            endpoint,
            cache_dir,
        } => {
            let _guard = fetch_lock(endpoint, n);
            let _held = _guard.lock().unwrap();
            if let Some(records) = read_cached_level(cache_dir, n)? {
                return Ok(records);
            }
            match fetch_and_cache_locked(n, endpoint, cache_dir) {
                Ok(_) => read_cached_level(cache_dir, n)?
                    .ok_or(NewformError::LevelNotAvailable(n)),
                Err(err) => {
                    if let Some(recs) = bundled_store().get(&n) {
                        Ok(recs.clone())
                    } else {
                        Err(err)
                    }
                }
            }
        }
    }
}

/// The elliptic curve attached to a rational class, when one is on file.
pub fn companion_curve(
    label: &str,
    source: &NewformSource,
) -> Result<Option<RationalNewformCurve>, NewformError> {
    let parse_lines = |text: &str| -> Result<Option<RationalNewformCurve>, NewformError> {
        for line in text.lines() {
            let mut parts = line.split_whitespace();
            let Some(l) = parts.next() else { continue };
            if l != label {
                continue;
            }
            let nums: Vec<i64> = parts
                .map(|t| t.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| NewformError::CacheCorrupt(format!("curve line for {label}")))?;
            if nums.len() != 5 {
                return Err(NewformError::CacheCorrupt(format!(
                    "curve line for {label} must have 5 coefficients"
                )));
            }
            let curve = WeierstrassCurve::from_i64([nums[0], nums[1], nums[2], nums[3], nums[4]])
                .map_err(|e| NewformError::CacheCorrupt(format!("curve for {label}: {e}")))?;
            return Ok(Some(RationalNewformCurve {
                label: label.to_string(),
                curve,
            }));
        }
        Ok(None)
    };
    match source {
        NewformSource::Bundled => parse_lines(BUNDLED_CURVES),
        NewformSource::Remote { cache_dir, .. } => {
            let (level, _) = label_sort_key(label);
            let path = level_dir(cache_dir, level).join("curves.txt");
            match std::fs::read_to_string(&path) {
                Ok(text) => parse_lines(&text),
                Err(_) => parse_lines(BUNDLED_CURVES),
            }
        }
    }
}

fn level_dir(cache_dir: &Path, n: u64) -> PathBuf {
    cache_dir.join(format!("level_{n}"))
}

fn read_cached_level(
    cache_dir: &Path,
    n: u64,
) -> Result<Option<Vec<NewformRecord>>, NewformError> {
    let dir = level_dir(cache_dir, n);
    if !dir.is_dir() {
        return Ok(None);
    }
    let mut records = Vec::new();
    for entry in std::fs::read_dir(&dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("nf") {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let rec = parse_record(&text)
            .map_err(|e| NewformError::CacheCorrupt(format!("{}: {e}", path.display())))?;
        if rec.level != n {
            return Err(NewformError::CacheCorrupt(format!(
                "{} claims level {}",
                path.display(),
                rec.level
            )));
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Ok(None);
    }
    records.sort_by_key(|r| label_sort_key(&r.label));
    Ok(Some(records))
}

fn fetch_lock(endpoint: &str, n: u64) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<(String, u64), Arc<Mutex<()>>>>> = OnceLock::new();
    let locks = LOCKS.get_or_init(|| Mutex::new(HashMap::new()));
    locks
        .lock()
        .unwrap()
        .entry((endpoint.to_string(), n))
        .or_default()
        .clone()
}

/// What one remote ingest accomplished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestReport {
    pub level: u64,
    pub labels: Vec<String>,
    pub degrees: Vec<usize>,
    pub companion_curves: usize,
}

#[derive(Deserialize)]
struct RemoteRecord {
    label: String,
    level: u64,
    weight: u8,
    field_poly: Vec<i64>,
    eigenvalues: BTreeMap<String, RemoteEigenvalue>,
    #[serde(default)]
    companion_curve: Option<Vec<i64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RemoteEigenvalue {
    Integral(Vec<i64>),
    WithDen { coords: Vec<i64>, den: i64 },
}

/// Fetch level `N` from `endpoint` and install it in the cache.
///
/// `GET {endpoint}/newforms/{N}` must return a JSON array of records
/// (`label`, `level`, `weight`, `field_poly` ascending, `eigenvalues` mapping
/// primes to coordinate vectors, optional `companion_curve` with five
/// `a`-invariants).  Every record is validated — schema, Hasse bound, and
/// eigenvalue coverage at all primes up to [`REQUIRED_COVERAGE`] — before
/// anything is written; the install itself goes through temp files with
/// atomic renames, so a failed ingest leaves the cache untouched.
pub fn fetch_and_cache(
    n: u64,
    endpoint: &str,
    cache_dir: &Path,
) -> Result<IngestReport, NewformError> {
    let guard = fetch_lock(endpoint, n);
    let _held = guard.lock().unwrap();
    fetch_and_cache_locked(n, endpoint, cache_dir)
}

fn fetch_and_cache_locked(
    n: u64,
    endpoint: &str,
    cache_dir: &Path,
) -> Result<IngestReport, NewformError> {
    let url = format!("{}/newforms/{}", endpoint.trim_end_matches('/'), n);
    let client = reqwest::blocking::Client::builder()
        .timeout(std::time::Duration::from_secs(30))
        .build()?;
    let response = client.get(&url).send()?;
    if !response.status().is_success() {
        return Err(NewformError::RemoteSchemaMismatch(format!(
            "{url} answered {}",
            response.status()
        )));
    }
    let remote: Vec<RemoteRecord> = response
        .json()
        .map_err(|e| NewformError::RemoteSchemaMismatch(e.to_string()))?;
    if remote.is_empty() {
        return Err(NewformError::LevelNotAvailable(n));
    }

    let mut records = Vec::new();
    let mut curves = Vec::new();
    for raw in remote {
        if raw.level != n {
            return Err(NewformError::RemoteSchemaMismatch(format!(
                "record {} has level {}, requested {}",
                raw.label, raw.level, n
            )));
        }
        let mut eigenvalues = BTreeMap::new();
        for (k, v) in raw.eigenvalues {
            let q: u64 = k.parse().map_err(|_| {
                NewformError::RemoteSchemaMismatch(format!("non-integer prime key `{k}`"))
            })?;
            let eig = match v {
                RemoteEigenvalue::Integral(coords) => {
                    Eigenvalue::integral(coords.into_iter().map(BigInt::from).collect())
                }
                RemoteEigenvalue::WithDen { coords, den } => Eigenvalue {
                    coords: coords.into_iter().map(BigInt::from).collect(),
                    den: BigInt::from(den),
                },
            };
            eigenvalues.insert(q, eig);
        }
        let rec = NewformRecord {
            label: raw.label.clone(),
            level: raw.level,
            weight: raw.weight,
            field_poly: IntPoly::new(raw.field_poly.iter().map(|&c| BigInt::from(c)).collect()),
            eigenvalues,
        };
        validate_record(&rec)?;
        let mut q = 2u64;
        while q <= REQUIRED_COVERAGE {
            if rec.eigenvalue(q).is_none() {
                return Err(NewformError::ValidationFailed(format!(
                    "{}: missing eigenvalue at {} (coverage requires q ≤ {})",
                    rec.label, q, REQUIRED_COVERAGE
                )));
            }
            q = (q + 1..).find(|&k| algebra::is_prime(k)).unwrap();
        }
        if let Some(coeffs) = raw.companion_curve {
            if coeffs.len() != 5 {
                return Err(NewformError::RemoteSchemaMismatch(format!(
                    "companion curve of {} must have 5 coefficients",
                    raw.label
                )));
            }
            if !rec.is_rational() {
                return Err(NewformError::ValidationFailed(format!(
                    "{}: companion curve on an irrational class",
                    raw.label
                )));
            }
            let curve = WeierstrassCurve::from_i64([
                coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4],
            ])
            .map_err(|e| NewformError::ValidationFailed(format!("{}: {e}", raw.label)))?;
            curves.push((raw.label.clone(), curve));
        }
        records.push(rec);
    }
    records.sort_by_key(|r| label_sort_key(&r.label));

    let dir = level_dir(cache_dir, n);
    std::fs::create_dir_all(&dir)?;
    let mut labels = Vec::new();
    let mut degrees = Vec::new();
    for rec in &records {
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(serialize_record(rec).as_bytes())?;
        tmp.persist(dir.join(format!("{}.nf", rec.label)))
            .map_err(|e| NewformError::Io(e.error))?;
        labels.push(rec.label.clone());
        degrees.push(rec.degree());
    }
    if !curves.is_empty() {
        let mut body = String::new();
        for (label, c) in &curves {
            body.push_str(&format!(
                "{label} {} {} {} {} {}\n",
                c.a1, c.a2, c.a3, c.a4, c.a6
            ));
        }
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(body.as_bytes())?;
        tmp.persist(dir.join("curves.txt"))
            .map_err(|e| NewformError::Io(e.error))?;
    }
    Ok(IngestReport {
        level: n,
        labels,
        degrees,
        companion_curves: curves.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellcurve::ap_trace;
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;

    #[test]
    fn bundled_levels_load_with_expected_shapes() {
        let s = NewformSource::Bundled;
        let l45 = load_level(45, &s).unwrap();
        assert_eq!(l45.len(), 1);
        assert_eq!(l45[0].label(), "45.1");
        assert!(l45[0].is_rational());

        let l98 = load_level(98, &s).unwrap();
        assert_eq!(l98.len(), 2);
        assert_eq!(l98[1].label(), "98.2");
        assert_eq!(l98[1].field_poly(), &IntPoly::from_i64(&[-2, 0, 1]));

        let l338 = load_level(338, &s).unwrap();
        assert_eq!(l338.len(), 8);
        let cubic = IntPoly::from_i64(&[13, -4, -3, 1]);
        assert_eq!(l338[6].label(), "338.7");
        assert_eq!(l338[6].field_poly(), &cubic);
        assert_eq!(l338[7].field_poly(), &cubic);
        for rec in &l338[..6] {
            assert!(rec.is_rational(), "{} should be rational", rec.label());
        }

        assert!(matches!(
            load_level(11, &s),
            Err(NewformError::LevelNotAvailable(11))
        ));
    }

    #[test]
    fn bundled_records_cover_all_primes_up_to_fifty() {
        let s = NewformSource::Bundled;
        for level in [45u64, 98, 338] {
            for rec in load_level(level, &s).unwrap() {
                let mut q = 2u64;
                while q <= REQUIRED_COVERAGE {
                    assert!(
                        rec.eigenvalue(q).is_some(),
                        "{} misses c_{}",
                        rec.label(),
                        q
                    );
                    q = (q + 1..).find(|&k| algebra::is_prime(k)).unwrap();
                }
            }
        }
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        for text in BUNDLED_RECORDS {
            let rec = parse_record(text).unwrap();
            assert_eq!(&serialize_record(&rec), text);
            assert_eq!(parse_record(&serialize_record(&rec)).unwrap(), rec);
        }
    }

    #[test]
    fn denominator_lines_round_trip() {
        let text = "label 9.1\nlevel 9\nweight 2\nfield_poly -1,-2,1\n2: 1,1/2\n";
        // (1 + θ)/2 for θ² = 2θ + 1 (θ = 1 ± √2): embeddings ≈ 1.21, −0.21,
        // comfortably inside the Hasse bound at 2.
        let rec = parse_record(text).unwrap();
        assert_eq!(rec.eigenvalue(2).unwrap().den, BigInt::from(2));
        assert_eq!(serialize_record(&rec), text);
    }

    #[test]
    fn hasse_violations_are_rejected_at_parse_time() {
        let text = "label 45.9\nlevel 45\nweight 2\nfield_poly 0,1\n2: 100\n";
        assert!(matches!(
            parse_record(text),
            Err(NewformError::ValidationFailed(_))
        ));
        // The same value at a prime dividing the level is not constrained.
        let text = "label 45.9\nlevel 45\nweight 2\nfield_poly 0,1\n5: 100\n";
        assert!(parse_record(text).is_ok());
    }

    #[test]
    fn norm_diff_oracles() {
        let s = NewformSource::Bundled;
        let l98 = load_level(98, &s).unwrap();
        let f = &l98[1]; // field x² − 2, c₃ = θ
        assert_eq!(
            eigenvalue_norm_diff(f, 3, &BigInt::from(4)).unwrap(),
            BigInt::from(14)
        );
        assert_eq!(
            eigenvalue_norm_diff(f, 3, &BigInt::from(1)).unwrap(),
            BigInt::from(-1)
        );

        let l338 = load_level(338, &s).unwrap();
        let f7 = &l338[6]; // field x³ − 3x² − 4x + 13, c₃ = θ
        assert_eq!(
            eigenvalue_norm_diff(f7, 3, &BigInt::from(-4)).unwrap(),
            BigInt::from(83)
        );
        // Norm(θ − a) = −h(a): h(1) = 7, h(−2) = 1, h(4) = 13.
        assert_eq!(
            eigenvalue_norm_diff(f7, 3, &BigInt::from(1)).unwrap().abs(),
            BigInt::from(7)
        );
        assert_eq!(
            eigenvalue_norm_diff(f7, 3, &BigInt::from(-2))
                .unwrap()
                .abs(),
            BigInt::from(1)
        );
        assert_eq!(
            eigenvalue_norm_diff(f7, 3, &BigInt::from(4)).unwrap().abs(),
            BigInt::from(13)
        );

        // Rational class: the norm at the eigenvalue itself vanishes.
        let l45 = load_level(45, &s).unwrap();
        assert_eq!(
            eigenvalue_norm_diff(&l45[0], 5, &BigInt::from(-1)).unwrap(),
            BigInt::zero()
        );
        assert!(matches!(
            eigenvalue_norm_diff(&l45[0], 53, &BigInt::one()),
            Err(NewformError::MissingEigenvalue { q: 53, .. })
        ));
    }

    #[test]
    fn residue_oracles() {
        let s = NewformSource::Bundled;
        let l98 = load_level(98, &s).unwrap();
        // Roots of x² − 2 mod 7 are 3 and 4; c₃ = θ evaluates to the root.
        assert_eq!(
            eigenvalue_residues(&l98[1], 3, 7).unwrap(),
            vec![(3, 3), (4, 4)]
        );
        assert!(matches!(
            eigenvalue_residues(&l98[1], 3, 5),
            Err(NewformError::NoDegreeOnePrime { n: 5, .. })
        ));
        // 2 ramifies in ℚ(√2); residue evaluation must refuse it.
        assert!(matches!(
            eigenvalue_residues(&l98[1], 3, 2),
            Err(NewformError::RamifiedPrime { n: 2, .. })
        ));

        let l338 = load_level(338, &s).unwrap();
        // θ ≡ −4 ≡ 79 picks the degree-one prime above 83; there
        // c₅ = 2θ² − 12 ≡ 20 for 338.7 and ≡ 63 for its sign twin.
        let r7 = eigenvalue_residues(&l338[6], 5, 83).unwrap();
        assert!(r7.contains(&(79, 20)), "residues: {r7:?}");
        let r8 = eigenvalue_residues(&l338[7], 5, 83).unwrap();
        assert!(r8.contains(&(79, 63)), "residues: {r8:?}");

        // Rational class: θ = 0 is the single root, value c_q mod n.
        let l45 = load_level(45, &s).unwrap();
        assert_eq!(eigenvalue_residues(&l45[0], 11, 7).unwrap(), vec![(0, 4)]);
    }

    #[test]
    fn norm_divisibility_agrees_with_residues() {
        // n | Norm(c_q − a) iff a matches one of the degree-one residues,
        // for n where every prime above n has degree one… which holds at
        // n = 7 for x² − 2 (two roots) on the residue side.
        let s = NewformSource::Bundled;
        let f = &load_level(98, &s).unwrap()[1];
        let residues = eigenvalue_residues(f, 3, 7).unwrap();
        for a in -60i64..=60 {
            let norm = eigenvalue_norm_diff(f, 3, &BigInt::from(a)).unwrap();
            let divisible = (norm % BigInt::from(7)).is_zero();
            let matched = residues
                .iter()
                .any(|&(_, c)| (a - c as i64).rem_euclid(7) == 0);
            assert_eq!(divisible, matched, "a = {a}");
        }
    }

    #[test]
    fn companion_curve_agrees_with_its_newform() {
        let s = NewformSource::Bundled;
        let f = &load_level(45, &s).unwrap()[0];
        let companion = companion_curve("45.1", &s).unwrap().unwrap();
        for q in f.stored_primes() {
            if (companion.curve.discriminant() % BigInt::from(q)).is_zero() {
                continue; // bad reduction
            }
            let ap = ap_trace(&companion.curve, q).unwrap();
            assert_eq!(
                eigenvalue_norm_diff(f, q, &BigInt::from(ap)).unwrap(),
                BigInt::zero(),
                "trace mismatch at {q}"
            );
        }
        assert!(companion_curve("98.1", &s).unwrap().is_none());
    }

    fn spawn_server(
        responses: Vec<(String, String)>,
    ) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                reader.read_line(&mut request_line).unwrap();
                // Drain the headers so the client is happy with the reply.
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                seen.push(request_line.trim().to_string());
                let reply = format!(
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
            seen
        });
        (format!("http://{addr}"), handle)
    }

    fn level_45_json() -> String {
        let f = &load_level(45, &NewformSource::Bundled).unwrap()[0];
        let eigen: Vec<String> = f
            .stored_primes()
            .map(|q| {
                let c = &f.eigenvalue(q).unwrap().coords[0];
                format!("\"{q}\": [{c}]")
            })
            .collect();
        format!(
            "[{{\"label\": \"45.1\", \"level\": 45, \"weight\": 2, \"field_poly\": [0, 1], \
             \"eigenvalues\": {{{}}}, \"companion_curve\": [1, -1, 0, 0, -5]}}]",
            eigen.join(", ")
        )
    }

    #[test]
    fn remote_fetch_caches_and_matches_bundled() {
        let (endpoint, server) = spawn_server(vec![("200 OK".into(), level_45_json())]);
        let cache = tempfile::tempdir().unwrap();
        let report = fetch_and_cache(45, &endpoint, cache.path()).unwrap();
        assert_eq!(report.labels, vec!["45.1"]);
        assert_eq!(report.degrees, vec![1]);
        assert_eq!(report.companion_curves, 1);
        let requests = server.join().unwrap();
        assert_eq!(requests, vec!["GET /newforms/45 HTTP/1.1"]);

        // The cached copy round-trips through load_level and agrees with the
        // bundled records; no further HTTP traffic happens.
        let source = NewformSource::Remote {
            endpoint: "http://127.0.0.1:1".into(),
            cache_dir: cache.path().to_path_buf(),
        };
        let remote_recs = load_level(45, &source).unwrap();
        let bundled_recs = load_level(45, &NewformSource::Bundled).unwrap();
        assert_eq!(remote_recs, bundled_recs);
        let companion = companion_curve("45.1", &source).unwrap().unwrap();
        assert_eq!(companion.curve.a4, BigInt::zero());
    }

    #[test]
    fn failed_validation_leaves_cache_untouched() {
        // c₂ = 50 flagrantly violates the Hasse bound at a good prime.
        let body = r#"[{"label": "45.1", "level": 45, "weight": 2,
            "field_poly": [0, 1],
            "eigenvalues": {"2": [50], "3": [0], "5": [-1], "7": [0], "11": [4],
                "13": [-2], "17": [-2], "19": [4], "23": [0], "29": [2],
                "31": [0], "37": [-10], "41": [-10], "43": [4], "47": [-8]}}]"#;
        let (endpoint, server) = spawn_server(vec![("200 OK".into(), body.to_string())]);
        let cache = tempfile::tempdir().unwrap();
        let err = fetch_and_cache(45, &endpoint, cache.path()).unwrap_err();
        assert!(matches!(err, NewformError::ValidationFailed(_)), "{err}");
        assert!(!level_dir(cache.path(), 45).exists());
        server.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_still_serves_bundled_levels() {
        let cache = tempfile::tempdir().unwrap();
        let source = NewformSource::Remote {
            // Nothing listens here.
            endpoint: "http://127.0.0.1:1".into(),
            cache_dir: cache.path().to_path_buf(),
        };
        let recs = load_level(45, &source).unwrap();
        assert_eq!(recs.len(), 1);
        // A level outside the bundle propagates the failure.
        assert!(load_level(11, &source).is_err());
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert!(parse_record("label x\nlevel 5\n").is_err());
        assert!(parse_record("").is_err());
        // Non-monic field polynomial.
        let text = "label 1.1\nlevel 1\nweight 2\nfield_poly 1,2\n2: 0\n";
        assert!(matches!(
            parse_record(text),
            Err(NewformError::ValidationFailed(_))
        ));
        // Wrong coordinate length.
        let text = "label 1.1\nlevel 1\nweight 2\nfield_poly -2,0,1\n2: 1\n";
        assert!(parse_record(text).is_err());
        // Unsorted eigenvalue primes.
        let text = "label 1.1\nlevel 1\nweight 2\nfield_poly 0,1\n3: 0\n2: 0\n";
        assert!(parse_record(text).is_err());
    }

    #[test]
    fn complex_roots_find_quadratic_surds() {
        let roots = complex_roots(&IntPoly::from_i64(&[-2, 0, 1]));
        let mut reals: Vec<f64> = roots.iter().map(|z| z.re).collect();
        reals.sort_by(f64::total_cmp);
        assert!((reals[0] + std::f64::consts::SQRT_2).abs() < 1e-9);
        assert!((reals[1] - std::f64::consts::SQRT_2).abs() < 1e-9);
        for z in roots {
            assert!(z.im.abs() < 1e-9);
        }
    }
}
