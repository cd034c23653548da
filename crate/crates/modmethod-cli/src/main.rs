//! Command-line front end for the `modmethod` library.
//!
//! The binary exposes each stage of the pipeline on its own — newform
//! inspection, the elimination sieve, Mordell searches, conic
//! parametrizations, point counts — plus the two commands that tie them
//! together: `prove`, which runs a full catalogue argument and emits a
//! certificate, and `verify`, which replays a certificate from its own
//! embedded data and compares byte for byte.
//!
//! Exit codes are part of the contract: `0` means the requested check
//! closed (a proof finished, a certificate replayed and concluded closed,
//! every class was eliminated, every conic solution matched one family);
//! `2` means the run was sound but something stayed open (a surviving
//! exponent, an open certificate, an uncovered solution); `1` is an
//! operational failure — bad arguments, unreadable files, a certificate
//! that does not replay.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use modmethod::certify::{self, CertStatus, ProveConfig, VerifyOutcome};
use modmethod::diophantine::{self, ConicFamily, ConicParams};
use modmethod::eliminator::{sieve_form, ElimStatus, SpecialTraceConvention};
use modmethod::ellcurve::{ap_trace, WeierstrassCurve};
use modmethod::newforms::{self, NewformSource};

#[derive(Parser)]
#[command(name = "modmethod", version, about = "Modular-method proofs for ternary equations of signature (n,n,2) and (n,n,3)", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove a catalogue theorem and emit its certificate.
    Prove(ProveArgs),
    /// Replay a certificate and report whether it checks out.
    Verify {
        /// Certificate file produced by `prove`.
        #[arg(long)]
        cert: PathBuf,
    },
    /// Run the elimination sieve against every class at one level.
    Eliminate(EliminateArgs),
    /// List the integral points on Y² = X³ + k with |X| bounded.
    Mordell {
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
        #[arg(long, default_value_t = 1_000_000)]
        bound: i64,
    },
    /// Evaluate one parametrized solution of x² + p·y² = z².
    Conic(ConicArgs),
    /// Check that the two conic families tile the primitive solutions.
    ConicCover {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long)]
        bound: i64,
    },
    /// Trace of Frobenius at p by exact point counting.
    Ap {
        /// Five comma-separated coefficients a1,a2,a3,a4,a6.
        #[arg(long, allow_hyphen_values = true)]
        curve: String,
        #[arg(long)]
        p: u64,
    },
    /// List the newform classes on file at one level.
    Newforms(NewformsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    /// Treat a_p = ±(p+1) as admissible for every eligible trace set.
    Always,
    /// Drop the special traces entirely.
    Never,
}

impl From<Convention> for SpecialTraceConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Always => SpecialTraceConvention::Always,
            Convention::Never => SpecialTraceConvention::Never,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceKind {
    /// Records compiled into the library.
    Bundled,
    /// A remote database mirrored through an on-disk cache.
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignatureArg {
    Ppp2,
    Ppp3,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl From<FamilyArg> for ConicFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::One => ConicFamily::One,
            FamilyArg::Two => ConicFamily::Two,
        }
    }
}

#[derive(Args)]
struct ProveArgs {
    /// Catalogue entry: 1, 2, or 3.
    #[arg(long)]
    theorem: u8,
    #[arg(long, value_enum, default_value_t = Convention::Always)]
    convention: Convention,
    /// Radius of the exhaustive unit-branch search.
    #[arg(long, default_value_t = 1_000_000)]
    mordell_bound: i64,
    #[arg(long, value_enum, default_value_t = SourceKind::Bundled)]
    newform_source: SourceKind,
    /// Base URL of the remote database (with --newform-source remote).
    #[arg(long)]
    endpoint: Option<String>,
    /// Cache directory for remote records.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Exponent on the cube-side coefficient: 1 or 2.
    #[arg(long, default_value_t = 1)]
    c_power: u32,
    /// Write the certificate here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EliminateArgs {
    #[arg(long)]
    level: u64,
    /// Comma-separated witness primes, e.g. "3,5,7".
    #[arg(long)]
    witnesses: String,
    #[arg(long, value_enum)]
    signature: SignatureArg,
    #[arg(long)]
    n_floor: u64,
    /// Comma-separated exponents to set aside, e.g. "13".
    #[arg(long)]
    exclude: Option<String>,
    #[arg(long, value_enum, default_value_t = Convention::Always)]
    convention: Convention,
    #[arg(long, value_enum, default_value_t = SourceKind::Bundled)]
    newform_source: SourceKind,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ConicArgs {
    #[arg(long, allow_hyphen_values = true)]
    p: i64,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, allow_hyphen_values = true)]
    s: i64,
    #[arg(long, allow_hyphen_values = true)]
    t: i64,
    /// Flip the sign of x.
    #[arg(long)]
    negate_x: bool,
    /// Flip the sign of z.
    #[arg(long)]
    negate_z: bool,
}

#[derive(Args)]
struct NewformsArgs {
    #[arg(long)]
    level: u64,
    /// Pull the level from the remote database before listing.
    #[arg(long)]
    fetch: bool,
    /// Base URL of the remote database.
    #[arg(long)]
    endpoint: Option<String>,
    /// Cache directory for remote records.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Prove(args) => cmd_prove(args),
        Command::Verify { cert } => cmd_verify(&cert),
        Command::Eliminate(args) => cmd_eliminate(args),
        Command::Mordell { k, bound } => cmd_mordell(k, bound),
        Command::Conic(args) => cmd_conic(args),
        Command::ConicCover { p, bound } => cmd_conic_cover(p, bound),
        Command::Ap { curve, p } => cmd_ap(&curve, p),
        Command::Newforms(args) => cmd_newforms(args),
    }
}

// ---------------------------------------------------------------------------
// helpers

fn make_source(
    kind: SourceKind,
    endpoint: Option<String>,
    cache_dir: Option<PathBuf>,
) -> Result<NewformSource> {
    match kind {
        SourceKind::Bundled => Ok(NewformSource::Bundled),
        SourceKind::Remote => {
            let endpoint = endpoint.context("--newform-source remote needs --endpoint")?;
            Ok(NewformSource::Remote {
                endpoint,
                cache_dir: cache_dir.unwrap_or_else(default_cache_dir),
            })
        }
    }
}

fn default_cache_dir() -> PathBuf {
    std::env::temp_dir().join("modmethod-newforms")
}

fn parse_csv<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| anyhow::anyhow!("bad {what} {t:?} in {text:?}"))
        })
        .collect()
}

/// `"338.10"` after `"338.2"`: order labels numerically, not lexically.
fn label_key(label: &str) -> (u64, u64) {
    let mut parts = label.splitn(2, '.');
    let level = parts.next().and_then(|t| t.parse().ok()).unwrap_or(0);
    let index = parts.next().and_then(|t| t.parse().ok()).unwrap_or(0);
    (level, index)
}

fn exponent_word(n: u64) -> String {
    if n == 0 {
        "*".to_string()
    } else {
        n.to_string()
    }
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_prove(args: ProveArgs) -> Result<ExitCode> {
    let config = ProveConfig {
        convention: args.convention.into(),
        mordell_bound: args.mordell_bound,
        source: make_source(args.newform_source, args.endpoint, args.cache_dir)?,
        c_power: args.c_power,
    };
    let cert = certify::prove_theorem(args.theorem, &config)?;
    match &args.out {
        Some(path) => {
            cert.write_to(path)
                .with_context(|| format!("writing {}", path.display()))?;
            let word = if cert.is_closed() { "closed" } else { "open" };
            println!("theorem {} {word}: wrote {}", cert.theorem(), path.display());
        }
        None => print!("{}", cert.text()),
    }
    if cert.is_closed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (label, n) in cert.open_exponents() {
            eprintln!("open: class {label} at n = {}", exponent_word(*n));
        }
        Ok(ExitCode::from(2))
    }
}

fn cmd_verify(cert: &PathBuf) -> Result<ExitCode> {
    let text = std::fs::read_to_string(cert)
        .with_context(|| format!("reading {}", cert.display()))?;
    match certify::verify_certificate_text(&text)? {
        VerifyOutcome::Valid { checks } => match certify::read_status(&text)? {
            CertStatus::Closed => {
                println!("valid: {checks} lines replayed, conclusion closed");
                Ok(ExitCode::SUCCESS)
            }
            CertStatus::Open => {
                println!("valid: {checks} lines replayed, conclusion open");
                Ok(ExitCode::from(2))
            }
        },
        VerifyOutcome::Invalid { divergence } => {
            println!("invalid: {divergence}");
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_eliminate(args: EliminateArgs) -> Result<ExitCode> {
    let witnesses: Vec<u64> = parse_csv(&args.witnesses, "witness prime")?;
    if witnesses.is_empty() {
        bail!("--witnesses wants at least one prime");
    }
    let excluded: BTreeSet<u64> = match &args.exclude {
        Some(list) => parse_csv(list, "excluded exponent")?.into_iter().collect(),
        None => BTreeSet::new(),
    };
    let m = match args.signature {
        SignatureArg::Ppp2 => 2,
        SignatureArg::Ppp3 => 3,
    };
    let source = make_source(args.newform_source, args.endpoint, args.cache_dir)?;
    let mut forms = newforms::load_level(args.level, &source)?;
    if forms.is_empty() {
        bail!("no newform classes on file at level {}", args.level);
    }
    forms.sort_by_key(|f| label_key(f.label()));
    let mut survivors = 0usize;
    for f in &forms {
        let report = sieve_form(
            f,
            m,
            &witnesses,
            args.n_floor,
            &excluded,
            args.convention.into(),
        )?;
        match &report.status {
            ElimStatus::Eliminated => println!("{}: eliminated", f.label()),
            ElimStatus::Survives(ns) => {
                survivors += 1;
                let list: Vec<String> = ns.iter().map(u64::to_string).collect();
                println!("{}: survives n = {}", f.label(), list.join(", "));
            }
        }
    }
    if survivors == 0 {
        println!("all {} classes eliminated", forms.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{survivors} of {} classes survive", forms.len());
        Ok(ExitCode::from(2))
    }
}

fn cmd_mordell(k: i64, bound: i64) -> Result<ExitCode> {
    let set = diophantine::mordell_search(k, bound);
    println!(
        "Y² = X³ + ({k}), |X| ≤ {bound}: {} solutions up to the sign of Y",
        set.solutions.len()
    );
    for (x, y) in &set.solutions {
        if *y == 0 {
            println!("  ({x}, 0)");
        } else {
            println!("  ({x}, ±{y})");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_conic(args: ConicArgs) -> Result<ExitCode> {
    let params = ConicParams {
        p: args.p,
        family: args.family.into(),
        s: args.s,
        t: args.t,
        negate_x: args.negate_x,
        negate_z: args.negate_z,
    };
    let (x, y, z) = diophantine::conic_point(&params)?;
    let residue = i128::from(x) * i128::from(x) + i128::from(args.p) * i128::from(y) * i128::from(y)
        - i128::from(z) * i128::from(z);
    println!("x = {x}");
    println!("y = {y}");
    println!("z = {z}");
    println!("x² + ({})·y² − z² = {residue}", args.p);
    Ok(ExitCode::SUCCESS)
}

fn cmd_conic_cover(p: i64, bound: i64) -> Result<ExitCode> {
    let report = diophantine::conic_cover_check(p, bound)?;
    println!(
        "p = {p}, |z| ≤ {bound}: {} primitive solutions, {} from family 1, {} from family 2",
        report.checked, report.family_one, report.family_two
    );
    if report.is_clean() {
        println!("every solution matched exactly one family");
        return Ok(ExitCode::SUCCESS);
    }
    for (x, y, z) in &report.unmatched {
        println!("unmatched: ({x}, {y}, {z})");
    }
    for (x, y, z) in &report.doubly_matched {
        println!("doubly matched: ({x}, {y}, {z})");
    }
    Ok(ExitCode::from(2))
}

fn cmd_ap(curve: &str, p: u64) -> Result<ExitCode> {
    let a: Vec<i64> = parse_csv(curve, "curve coefficient")?;
    let [a1, a2, a3, a4, a6] = a[..] else {
        bail!("--curve wants five comma-separated integers a1,a2,a3,a4,a6");
    };
    let e = WeierstrassCurve::from_i64([a1, a2, a3, a4, a6])?;
    let trace = ap_trace(&e, p)?;
    println!("a_{p} = {trace}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_newforms(args: NewformsArgs) -> Result<ExitCode> {
    let source = if args.fetch || args.endpoint.is_some() {
        let endpoint = args.endpoint.context("--fetch needs --endpoint")?;
        let cache_dir = args.cache_dir.unwrap_or_else(default_cache_dir);
        if args.fetch {
            let report = newforms::fetch_and_cache(args.level, &endpoint, &cache_dir)?;
            println!(
                "fetched level {}: {} classes, {} companion curves",
                report.level,
                report.labels.len(),
                report.companion_curves
            );
        }
        NewformSource::Remote {
            endpoint,
            cache_dir,
        }
    } else {
        NewformSource::Bundled
    };
    let mut forms = newforms::load_level(args.level, &source)?;
    if forms.is_empty() {
        bail!("no newform classes on file at level {}", args.level);
    }
    forms.sort_by_key(|f| label_key(f.label()));
    for f in &forms {
        let primes: Vec<u64> = f.stored_primes().collect();
        let span = match (primes.first(), primes.last()) {
            (Some(lo), Some(hi)) => format!("a_q for {} primes in [{lo}, {hi}]", primes.len()),
            _ => "no stored eigenvalues".to_string(),
        };
        let companion = match newforms::companion_curve(f.label(), &source)? {
            Some(c) => format!(
                ", curve [{}, {}, {}, {}, {}]",
                c.curve.a1, c.curve.a2, c.curve.a3, c.curve.a4, c.curve.a6
            ),
            None => String::new(),
        };
        println!(
            "{}: degree {}, {span}{companion}",
            f.label(),
            f.degree()
        );
    }
    Ok(ExitCode::SUCCESS)
}
