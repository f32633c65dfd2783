use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use scone::ag::DEFAULT_TOL;
use scone::circuits::{classify_extreme, Circuit, CircuitFunction, Extremality, RayCandidate};
use scone::decompose::{decompose_to_circuits, simplex_fast_path, sonc_lower_bound, verify_certificate, FastPath};
use scone::dual::{dual_membership, DualMode};
use scone::member::{scone_membership, Certificate, Membership, MembershipConfig};
use scone::num::rat_from_f64;
use scone::univariate::{approx_step, putinar_polynomial, putinar_verify, qmodule_search, QModuleResult, UniPoly};
use scone::{DualVector, Exponent, Num, Parity, SFunction, SconeError};

const CERTIFIED: u8 = 0;
const REFUTED: u8 = 1;
const INDETERMINATE: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "scone", version, about = "Non-negativity certificates for signed sparse functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Tolerance for floating-point decisions.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Bisection tolerance for `bound`.
    #[arg(long, global = true, default_value_t = 1e-7)]
    gamma_tol: f64,

    /// Read every coefficient as an exact rational (also SCONE_EXACT=1).
    #[arg(long, global = true)]
    exact: bool,

    /// Only use reduced circuits when decomposing.
    #[arg(long, global = true)]
    reduced_only: bool,

    /// Iteration budget for the splitting solver.
    #[arg(long, global = true, default_value_t = 3000)]
    max_iters: usize,

    /// Seed for all sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide membership in the S-cone.
    Check { file: PathBuf },
    /// Decide membership of a functional in the dual cone.
    DualCheck {
        file: PathBuf,
        #[arg(long, default_value = "reduced")]
        mode: String,
    },
    /// Certify and rewrite the certificate as circuit functions.
    Decompose { file: PathBuf },
    /// Classify a circuit function or monomial term as an extreme ray.
    Extreme { file: PathBuf },
    /// Largest γ with f − γ certified.
    Bound { file: PathBuf },
    /// One step of the approximation sequence of a univariate polynomial.
    Approx {
        file: PathBuf,
        #[arg(long = "N")]
        n: usize,
        /// Relative tolerance on c*.
        #[arg(long, default_value_t = 1e-3)]
        c_tol: f64,
    },
    /// Exact check that (x − 1/2)⁴ + 1/1000 has no degree-d representation.
    Putinar {
        #[arg(long)]
        d: usize,
    },
    /// Search for a quadratic-module representation on [0, 1].
    Qmodule {
        /// Defaults to (x − 1/2)⁴ + 1/1000.
        file: Option<PathBuf>,
        #[arg(long)]
        d: usize,
    },
    /// Re-check a certificate against a function.
    Verify { file: PathBuf, certificate: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<SconeError> for Failure {
    fn from(e: SconeError) -> Failure {
        let code = match e {
            SconeError::Solver(_) | SconeError::NotApplicable(_) => INDETERMINATE,
            _ => USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: USAGE, message }
}

fn read_json(path: &PathBuf) -> Result<Value, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn exactify(x: &Num) -> Result<Num, Failure> {
    match x {
        Num::Exact(_) => Ok(x.clone()),
        Num::Float(f) => rat_from_f64(*f).map(Num::Exact).ok_or_else(|| usage(format!("{f} is not finite"))),
    }
}

fn exactify_all(v: &[Num]) -> Result<Vec<Num>, Failure> {
    v.iter().map(exactify).collect()
}

fn read_function(path: &PathBuf, exact: bool) -> Result<SFunction, Failure> {
    let f = SFunction::from_json(&read_json(path)?)?;
    if !exact {
        return Ok(f);
    }
    Ok(SFunction::new(f.support.clone(), exactify_all(&f.c)?, exactify_all(&f.d)?)?)
}

fn read_poly(path: &PathBuf, exact: bool) -> Result<UniPoly, Failure> {
    let p = UniPoly::from_json(&read_json(path)?)?;
    Ok(if exact { UniPoly::new(exactify_all(&p.coeffs)?) } else { p })
}

fn membership_json(m: &Membership) -> (u8, Value) {
    match m {
        Membership::Certified(dec) => (CERTIFIED, json!({ "status": "certified", "certificate": dec.to_json() })),
        Membership::Refuted(r) => (REFUTED, json!({ "status": "refuted", "certificate": r.to_json() })),
        Membership::Indeterminate { residual, reason } => (
            INDETERMINATE,
            json!({ "status": "indeterminate", "residual": residual.to_string(), "reason": reason }),
        ),
    }
}

/// Reads the nonzero terms of `f` as a circuit function or a single term;
/// `None` for a sum of several non-negative monomials.
fn ray_candidate(f: &SFunction) -> Result<Option<RayCandidate>, Failure> {
    let even: Vec<(Exponent, Num)> =
        f.support.even.iter().cloned().zip(f.c.iter().cloned()).filter(|(_, c)| !c.is_zero()).collect();
    let odd: Vec<(Exponent, Num)> =
        f.support.odd.iter().cloned().zip(f.d.iter().cloned()).filter(|(_, d)| !d.is_zero()).collect();
    let mut exps: Vec<&Exponent> = even.iter().chain(&odd).map(|(e, _)| e).collect();
    exps.sort();
    exps.dedup();
    if exps.len() == 1 {
        let beta = exps[0].clone();
        let abs_coeff = even.first().map(|t| t.1.clone()).unwrap_or_else(Num::zero);
        let odd_coeff = odd.first().map(|t| t.1.clone()).unwrap_or_else(Num::zero);
        return Ok(Some(RayCandidate::Monomial { beta, abs_coeff, odd_coeff }));
    }
    let (inner, d, parity, mut outer) = match odd.as_slice() {
        [(beta, d)] if even.iter().all(|(e, _)| e != beta) => (beta.clone(), d.clone(), Parity::Odd, even),
        [] => {
            let neg: Vec<usize> = (0..even.len()).filter(|&i| even[i].1.signum() < 0).collect();
            if neg.is_empty() {
                return Ok(None);
            }
            let [k] = neg.as_slice() else {
                return Err(usage("an even circuit function has exactly one negative coefficient".into()));
            };
            let (beta, d) = even[*k].clone();
            let mut rest = even;
            rest.remove(*k);
            (beta, d, Parity::Even, rest)
        }
        _ => return Err(usage("not a circuit function: expected one inner term".into())),
    };
    outer.sort_by(|a, b| a.0.cmp(&b.0));
    let circuit = Circuit::new(outer.iter().map(|t| t.0.clone()).collect(), inner, parity, &f.support.even)?;
    Ok(Some(RayCandidate::Circuit(CircuitFunction::new(circuit, outer.into_iter().map(|t| t.1).collect(), d)?)))
}

fn run(cli: &Cli) -> Result<(u8, Value), Failure> {
    let exact = cli.exact || std::env::var("SCONE_EXACT").is_ok_and(|v| v == "1");
    if !(cli.tol > 0.0 && cli.tol.is_finite()) || !(cli.gamma_tol > 0.0 && cli.gamma_tol.is_finite()) {
        return Err(usage("tolerances must be positive".into()));
    }
    let cfg = MembershipConfig { tol: cli.tol, max_iters: cli.max_iters, seed: cli.seed, ..MembershipConfig::default() };
    match &cli.command {
        Command::Check { file } => {
            let f = read_function(file, exact)?;
            let m = scone_membership(&f, &cfg)?;
            let (code, mut out) = membership_json(&m);
            // a fast-path circuit certificate is reported alongside when one exists
            if let (Membership::Indeterminate { .. }, Ok(FastPath::Certified(dec))) = (&m, simplex_fast_path(&f, &cfg)) {
                out = json!({ "status": "certified", "certificate": dec.to_json() });
                return Ok((CERTIFIED, with_kind(out)));
            }
            Ok((code, with_kind(out)))
        }
        Command::DualCheck { file, mode } => {
            let mode = DualMode::parse(mode)?;
            let mut u = DualVector::from_json(&read_json(file)?)?;
            if exact {
                u = DualVector::new(u.support.clone(), exactify_all(&u.v)?, exactify_all(&u.w)?)?;
            }
            let rep = dual_membership(&u, &u.support, mode)?;
            Ok((if rep.member { CERTIFIED } else { REFUTED }, rep.to_json()))
        }
        Command::Decompose { file } => {
            let f = read_function(file, exact)?;
            match scone_membership(&f, &cfg)? {
                Membership::Certified(dec) => {
                    let circ = decompose_to_circuits(&dec, cli.reduced_only)?;
                    Ok((CERTIFIED, circ.to_json()))
                }
                m => {
                    if let Ok(FastPath::Certified(dec)) = simplex_fast_path(&f, &cfg) {
                        return Ok((CERTIFIED, dec.to_json()));
                    }
                    let (code, out) = membership_json(&m);
                    Ok((code, with_kind(out)))
                }
            }
        }
        Command::Extreme { file } => {
            let f = read_function(file, exact)?;
            let e = match ray_candidate(&f)? {
                Some(cand) => classify_extreme(&cand, &f.support, cli.tol)?,
                None => Extremality::NotExtreme("sum of several non-negative monomials".into()),
            };
            let mut out = json!({ "kind": "extremality", "label": e.label(), "extreme": e.is_extreme() });
            if let Extremality::NotExtreme(why) = &e {
                out["reason"] = json!(why);
            }
            Ok((if e.is_extreme() { CERTIFIED } else { REFUTED }, out))
        }
        Command::Bound { file } => {
            let f = read_function(file, exact)?;
            let (gamma, dec) = sonc_lower_bound(&f, cli.gamma_tol, &cfg)?;
            Ok((CERTIFIED, json!({ "kind": "lower-bound", "gamma": gamma, "certificate": dec.to_json() })))
        }
        Command::Approx { file, n, c_tol } => {
            let p = read_poly(file, exact)?;
            let step = approx_step(&p, *n, *c_tol, &cfg)?;
            Ok((CERTIFIED, step.to_json()))
        }
        Command::Putinar { d } => {
            let rep = putinar_verify(*d)?;
            Ok((if rep.holds() { CERTIFIED } else { REFUTED }, rep.to_json()))
        }
        Command::Qmodule { file, d } => {
            let p = match file {
                Some(path) => read_poly(path, exact)?,
                None => putinar_polynomial(),
            };
            match qmodule_search(&p, *d, &cfg)? {
                QModuleResult::Found(cert) => Ok((CERTIFIED, cert.to_json())),
                QModuleResult::NoCertificateFound { tried } => Ok((
                    INDETERMINATE,
                    json!({ "kind": "qmodule-search", "found": false, "candidates_tried": tried }),
                )),
            }
        }
        Command::Verify { file, certificate } => {
            let f = read_function(file, exact)?;
            let doc = read_json(certificate)?;
            // the output of `check` wraps the certificate
            let doc = match doc.get("kind").and_then(Value::as_str) {
                Some("membership") => doc.get("certificate").cloned().ok_or_else(|| usage("no certificate to verify".into()))?,
                _ => doc,
            };
            let cert = Certificate::from_json(&doc)?;
            let v = verify_certificate(&f, &cert)?;
            let out = json!({ "kind": "verdict", "valid": v.valid, "certificate_kind": cert.kind(), "reason": v.reason });
            Ok((if v.valid { CERTIFIED } else { REFUTED }, out))
        }
    }
}

fn with_kind(mut v: Value) -> Value {
    v["kind"] = json!("membership");
    v
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok((code, out)) => {
            println!("{out}");
            let word = match code {
                CERTIFIED => "yes",
                REFUTED => "no",
                _ => "undecided",
            };
            eprintln!("scone: {word}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("scone: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
