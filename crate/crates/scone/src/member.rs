//! Membership in the S-cone: AG decompositions and refutations.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_traits::Signed;
use serde_json::{json, Value};

use crate::ag::{ag_nonneg_decide, AgDecision, AgFunction, AgWitness, DEFAULT_TOL};
use crate::circuits::{CircuitFunction, Circuit};
use crate::dual::{dual_membership, DualMode};
use crate::error::{Result, SconeError};
use crate::lp::{maximize, LpResult};
use crate::num::{rat_approx, rat_from_f64, Num, Rat};
use crate::oracle::{face_support, grid_min, GridSpec};
use crate::sage::{solve_sage, SageOutcome};
use crate::sfun::{abs_monomial, evaluate, pair, DualVector, Exponent, ExtReal, Parity, SFunction, Support};

#[derive(Clone, Debug)]
pub struct MembershipConfig {
    pub tol: f64,
    /// Newton step budget for the splitting solver.
    pub max_iters: usize,
    pub seed: u64,
    /// Random points tried before any solver runs.
    pub samples: usize,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig { tol: DEFAULT_TOL, max_iters: 3000, seed: 0, samples: 256 }
    }
}

pub fn support_to_json(s: &Support) -> Value {
    json!({
        "n": s.n,
        "even": s.even.iter().map(Exponent::to_json).collect::<Vec<_>>(),
        "odd": s.odd.iter().map(Exponent::to_json).collect::<Vec<_>>(),
    })
}

pub fn support_from_json(v: &Value) -> Result<Support> {
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| SconeError::Parse("support needs \"n\"".into()))? as usize;
    let list = |key: &str| -> Result<Vec<Exponent>> {
        match v.get(key) {
            None => Ok(vec![]),
            Some(Value::Array(a)) => a.iter().map(Exponent::from_json).collect(),
            Some(x) => Err(SconeError::Parse(format!("\"{key}\" must be a list, got {x}"))),
        }
    };
    Support::new(n, list("even")?, list("odd")?)
}

fn terms_to_json(t: &[(Exponent, Num)]) -> Value {
    Value::Array(t.iter().map(|(e, c)| json!([e.to_json(), c.to_json()])).collect())
}

fn terms_from_json(v: Option<&Value>) -> Result<Vec<(Exponent, Num)>> {
    let Some(Value::Array(a)) = v else {
        return Ok(vec![]);
    };
    a.iter()
        .map(|t| {
            let p = t
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| SconeError::Parse(format!("term {t} must be [exponent, coefficient]")))?;
            let c = Num::from_json(&p[1]).ok_or_else(|| SconeError::Parse(format!("bad coefficient {}", p[1])))?;
            Ok((Exponent::from_json(&p[0])?, c))
        })
        .collect()
}

fn nums_from_json(v: Option<&Value>, what: &str) -> Result<Vec<Num>> {
    v.and_then(Value::as_array)
        .ok_or_else(|| SconeError::Parse(format!("missing list \"{what}\"")))?
        .iter()
        .map(|x| Num::from_json(x).ok_or_else(|| SconeError::Parse(format!("bad number {x}"))))
        .collect()
}

fn num_field(v: &Value, key: &str) -> Result<Num> {
    v.get(key)
        .and_then(Num::from_json)
        .ok_or_else(|| SconeError::Parse(format!("missing number \"{key}\"")))
}

fn floats_field(v: &Value, key: &str) -> Result<Vec<f64>> {
    v.get(key)
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
        .ok_or_else(|| SconeError::Parse(format!("missing float list \"{key}\"")))
}

/// An AG function together with the witness of its non-negativity.
#[derive(Clone, Debug, PartialEq)]
pub struct AgPart {
    pub ag: AgFunction,
    pub witness: AgWitness,
}

impl AgPart {
    pub fn to_json(&self) -> Value {
        json!({
            "parity": self.ag.parity.as_str(),
            "outer": self.ag.outer.iter().map(Exponent::to_json).collect::<Vec<_>>(),
            "c": self.ag.c.iter().map(Num::to_json).collect::<Vec<_>>(),
            "inner": self.ag.beta.to_json(),
            "d": self.ag.d.to_json(),
            "witness": self.witness.to_json(),
        })
    }

    pub fn from_json(v: &Value) -> Result<AgPart> {
        let outer = v
            .get("outer")
            .and_then(Value::as_array)
            .ok_or_else(|| SconeError::Parse("AG part needs \"outer\"".into()))?
            .iter()
            .map(Exponent::from_json)
            .collect::<Result<Vec<_>>>()?;
        let beta = Exponent::from_json(v.get("inner").ok_or_else(|| SconeError::Parse("AG part needs \"inner\"".into()))?)?;
        let parity = Parity::parse(v.get("parity").and_then(Value::as_str).unwrap_or(""))?;
        let ag = AgFunction::new(outer, nums_from_json(v.get("c"), "c")?, beta, num_field(v, "d")?, parity)?;
        let witness = AgWitness::from_json(v.get("witness").unwrap_or(&Value::Null))?;
        Ok(AgPart { ag, witness })
    }
}

/// `f = Σ parts + Σ remainder_α |x|^α` with non-negative remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct AgDecomposition {
    pub support: Support,
    pub parts: Vec<AgPart>,
    pub remainder: Vec<(Exponent, Num)>,
}

impl AgDecomposition {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": "ag-decomposition",
            "support": support_to_json(&self.support),
            "parts": self.parts.iter().map(AgPart::to_json).collect::<Vec<_>>(),
            "remainder": terms_to_json(&self.remainder),
        })
    }

    pub fn from_json(v: &Value) -> Result<AgDecomposition> {
        let support = support_from_json(v.get("support").unwrap_or(&Value::Null))?;
        let parts = v
            .get("parts")
            .and_then(Value::as_array)
            .map(|a| a.iter().map(AgPart::from_json).collect::<Result<Vec<_>>>())
            .transpose()?
            .unwrap_or_default();
        Ok(AgDecomposition { support, parts, remainder: terms_from_json(v.get("remainder"))? })
    }

    /// Coefficients of the sum, keyed by exponent.
    pub fn totals(&self) -> Totals {
        let mut t = Totals::default();
        for p in &self.parts {
            for (e, c) in p.ag.outer.iter().zip(&p.ag.c) {
                t.add_even(e, c);
            }
            match p.ag.parity {
                Parity::Even => t.add_even(&p.ag.beta, &p.ag.d),
                Parity::Odd => t.add_odd(&p.ag.beta, &p.ag.d),
            }
        }
        for (e, c) in &self.remainder {
            t.add_even(e, c);
        }
        t
    }
}

/// `f = Σ circuit functions + Σ t_α |x|^α`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitDecomposition {
    pub support: Support,
    pub parts: Vec<CircuitFunction>,
    pub monomials: Vec<(Exponent, Num)>,
}

impl CircuitDecomposition {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": "circuit-decomposition",
            "support": support_to_json(&self.support),
            "parts": self.parts.iter().map(|cf| json!({
                "circuit": cf.circuit.to_json(),
                "c": cf.c.iter().map(Num::to_json).collect::<Vec<_>>(),
                "d": cf.d.to_json(),
                "theta": cf.theta(),
            })).collect::<Vec<_>>(),
            "monomials": terms_to_json(&self.monomials),
        })
    }

    pub fn from_json(v: &Value) -> Result<CircuitDecomposition> {
        let support = support_from_json(v.get("support").unwrap_or(&Value::Null))?;
        let mut parts = vec![];
        for p in v.get("parts").and_then(Value::as_array).cloned().unwrap_or_default() {
            let circ = Circuit::from_json(p.get("circuit").unwrap_or(&Value::Null), &support.even)?;
            parts.push(CircuitFunction::new(circ, nums_from_json(p.get("c"), "c")?, num_field(&p, "d")?)?);
        }
        Ok(CircuitDecomposition { support, parts, monomials: terms_from_json(v.get("monomials"))? })
    }

    pub fn totals(&self) -> Totals {
        let mut t = Totals::default();
        for cf in &self.parts {
            for (e, c) in cf.circuit.outer.iter().zip(&cf.c) {
                t.add_even(e, c);
            }
            match cf.circuit.parity {
                Parity::Even => t.add_even(&cf.circuit.inner, &cf.d),
                Parity::Odd => t.add_odd(&cf.circuit.inner, &cf.d),
            }
        }
        for (e, c) in &self.monomials {
            t.add_even(e, c);
        }
        t
    }
}

/// Coefficient sums of a decomposition.
#[derive(Clone, Debug, Default)]
pub struct Totals {
    pub even: BTreeMap<Exponent, Num>,
    pub odd: BTreeMap<Exponent, Num>,
}

impl Totals {
    fn add_even(&mut self, e: &Exponent, c: &Num) {
        let slot = self.even.entry(e.clone()).or_insert_with(Num::zero);
        *slot = slot.clone() + c.clone();
    }

    fn add_odd(&mut self, e: &Exponent, c: &Num) {
        let slot = self.odd.entry(e.clone()).or_insert_with(Num::zero);
        *slot = slot.clone() + c.clone();
    }

    /// `Ok(())` when the sums reproduce `f`; exact if everything is rational,
    /// otherwise to `1e-9` relative to the coefficient scale.
    pub fn matches(&self, f: &SFunction) -> std::result::Result<(), String> {
        let exact = f.is_exact()
            && self.even.values().chain(self.odd.values()).all(Num::is_exact);
        let tol = 1e-9 * f.coeff_scale().max(1e-300);
        let close = |a: &Num, b: &Num| -> bool {
            if exact {
                a == b
            } else {
                (a.to_f64() - b.to_f64()).abs() <= tol
            }
        };
        let zero = Num::zero();
        for (e, c) in f.support.even.iter().zip(&f.c) {
            let got = self.even.get(e).unwrap_or(&zero);
            if !close(got, c) {
                return Err(format!("even coefficient at {e}: parts sum to {got}, f has {c}"));
            }
        }
        for (e, d) in f.support.odd.iter().zip(&f.d) {
            let got = self.odd.get(e).unwrap_or(&zero);
            if !close(got, d) {
                return Err(format!("odd coefficient at {e}: parts sum to {got}, f has {d}"));
            }
        }
        for (e, c) in &self.even {
            if f.support.even_index(e).is_none() && !close(c, &zero) {
                return Err(format!("even term {e} outside the support of f"));
            }
        }
        for (e, d) in &self.odd {
            if f.support.odd_index(e).is_none() && !close(d, &zero) {
                return Err(format!("odd term {e} outside the support of f"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Refutation {
    /// `f(x) < 0`.
    Point { x: Vec<f64>, value: f64 },
    /// A member `u` of the dual cone with `u(f) < 0`.
    Dual { u: DualVector, pairing: Num },
}

impl Refutation {
    pub fn to_json(&self) -> Value {
        match self {
            Refutation::Point { x, value } => json!({ "kind": "point-refutation", "x": x, "value": value }),
            Refutation::Dual { u, pairing } => {
                json!({ "kind": "dual-refutation", "u": u.to_json(), "pairing": pairing.to_json() })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    Certified(AgDecomposition),
    Refuted(Refutation),
    Indeterminate { residual: f64, reason: String },
}

impl Membership {
    pub fn is_certified(&self) -> bool {
        matches!(self, Membership::Certified(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Membership::Refuted(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    Ag(AgDecomposition),
    Circuits(CircuitDecomposition),
    Refutation(Refutation),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Ag(_) => "ag-decomposition",
            Certificate::Circuits(_) => "circuit-decomposition",
            Certificate::Refutation(Refutation::Dual { .. }) => "dual-refutation",
            Certificate::Refutation(Refutation::Point { .. }) => "point-refutation",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Certificate::Ag(d) => d.to_json(),
            Certificate::Circuits(d) => d.to_json(),
            Certificate::Refutation(r) => r.to_json(),
        }
    }

    pub fn from_json(v: &Value) -> Result<Certificate> {
        match v.get("kind").and_then(Value::as_str) {
            Some("ag-decomposition") => Ok(Certificate::Ag(AgDecomposition::from_json(v)?)),
            Some("circuit-decomposition") => Ok(Certificate::Circuits(CircuitDecomposition::from_json(v)?)),
            Some("point-refutation") => Ok(Certificate::Refutation(Refutation::Point {
                x: floats_field(v, "x")?,
                value: v.get("value").and_then(Value::as_f64).unwrap_or(f64::NAN),
            })),
            Some("dual-refutation") => Ok(Certificate::Refutation(Refutation::Dual {
                u: DualVector::from_json(v.get("u").ok_or_else(|| SconeError::Parse("missing \"u\"".into()))?)?,
                pairing: num_field(v, "pairing")?,
            })),
            Some(k) => Err(SconeError::Parse(format!("unknown certificate kind {k:?}"))),
            None => Err(SconeError::Parse("certificate needs a \"kind\"".into())),
        }
    }
}

/// `f` written over `E = A ∪ B` with SAGE coefficients `a = c − |d|`.
pub(crate) struct Reduced {
    pub exps: Vec<Exponent>,
    pub c: Vec<Num>,
    pub d: Vec<Num>,
    pub a: Vec<Num>,
}

pub(crate) fn reduce(f: &SFunction) -> Reduced {
    let exps = f.support.union();
    let c: Vec<Num> = exps.iter().map(|e| f.even_coeff(e)).collect();
    let d: Vec<Num> = exps.iter().map(|e| f.odd_coeff(e)).collect();
    let a = c.iter().zip(&d).map(|(c, d)| c.clone() - d.abs()).collect();
    Reduced { exps, c, d, a }
}

/// Lowest value of `f` found on a coarse log grid and at seeded random points.
pub fn sample_min(f: &SFunction, seed: u64, samples: usize) -> Result<Option<(Vec<f64>, f64)>> {
    let n = f.n();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let offer = |x: Vec<f64>, v: f64, best: &mut Option<(Vec<f64>, f64)>| {
        if v.is_finite() && best.as_ref().map_or(true, |b| v < b.1) {
            *best = Some((x, v));
        }
    };
    let res = match n {
        1 => 41,
        2 => 13,
        3 => 7,
        4 => 5,
        _ => 3,
    };
    if n <= 6 {
        if let Ok((v, x)) = grid_min(f, &GridSpec::log(n, 1e-2, 1e2, res, 2)) {
            offer(x, v, &mut best);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let m = rng.gen_range(-4.0f64..4.0).exp();
                if rng.gen_bool(0.5) {
                    -m
                } else {
                    m
                }
            })
            .collect();
        if let ExtReal::Finite(v) = evaluate(f, &x)? {
            offer(x, v, &mut best);
        }
    }
    Ok(best)
}

fn negativity_threshold(f: &SFunction) -> f64 {
    -1e-9 * f.coeff_scale().max(1e-300)
}

/// Decides whether `f` lies in the S-cone of its support.
pub fn scone_membership(f: &SFunction, cfg: &MembershipConfig) -> Result<Membership> {
    let r = reduce(f);
    let pos: Vec<usize> = (0..r.a.len()).filter(|&i| r.a[i].signum() > 0).collect();
    let neg: Vec<usize> = (0..r.a.len()).filter(|&i| r.a[i].signum() < 0).collect();
    if neg.is_empty() {
        return match back_map(f, &r, vec![], cfg)? {
            Some(dec) => Ok(Membership::Certified(dec)),
            None => Ok(Membership::Indeterminate { residual: 0.0, reason: "monomial parts did not certify".into() }),
        };
    }
    if let Some((x, v)) = sample_min(f, cfg.seed, cfg.samples)? {
        if v < negativity_threshold(f) {
            return Ok(Membership::Refuted(Refutation::Point { x, value: v }));
        }
    }
    let pexps: Vec<Exponent> = pos.iter().map(|&i| r.exps[i].clone()).collect();
    for &g in &neg {
        if pos.is_empty() || face_support(&pexps, &r.exps[g]).is_empty() {
            return Ok(match age_refutation(f, &r, &pos, g, cfg)? {
                Some(rf) => Membership::Refuted(rf),
                None => Membership::Indeterminate {
                    residual: f64::NEG_INFINITY,
                    reason: format!("{} lies outside the hull of the positive terms", r.exps[g]),
                },
            });
        }
    }
    if neg.len() == 1 {
        let g = neg[0];
        let block = pos.iter().map(|&p| (p, r.a[p].clone())).collect();
        if let Some(dec) = back_map(f, &r, vec![(g, block)], cfg)? {
            return Ok(Membership::Certified(dec));
        }
        return Ok(match age_refutation(f, &r, &pos, g, cfg)? {
            Some(rf) => Membership::Refuted(rf),
            None => Membership::Indeterminate { residual: 0.0, reason: "single AG block at the boundary".into() },
        });
    }
    let af: Vec<f64> = r.a.iter().map(Num::to_f64).collect();
    match solve_sage(&r.exps, &af, cfg.max_iters)? {
        SageOutcome::Feasible { parts, margin } => {
            let blocks = blocks_from_split(&r, &parts, f.is_exact());
            Ok(match back_map(f, &r, blocks, cfg)? {
                Some(dec) => Membership::Certified(dec),
                None => Membership::Indeterminate { residual: margin, reason: "split parts did not certify".into() },
            })
        }
        SageOutcome::Infeasible { log_prices, bound } => Ok(match envelope_refutation(f, &r, &log_prices)? {
            Some(rf) => Membership::Refuted(rf),
            None => Membership::Indeterminate {
                residual: bound,
                reason: "split is infeasible but no separating functional verified".into(),
            },
        }),
        SageOutcome::Unknown { margin, parts, log_prices } => {
            let blocks = blocks_from_split(&r, &parts, f.is_exact());
            if let Some(dec) = back_map(f, &r, blocks, cfg)? {
                return Ok(Membership::Certified(dec));
            }
            if let Some(rf) = envelope_refutation(f, &r, &log_prices)? {
                return Ok(Membership::Refuted(rf));
            }
            Ok(Membership::Indeterminate { residual: margin, reason: "splitting solver stalled near the boundary".into() })
        }
    }
}

/// Rounds the solver split, keeping `Σ_γ C_γα ≤ a_α`.
fn blocks_from_split(r: &Reduced, parts: &[(usize, Vec<(usize, f64)>)], exact: bool) -> Vec<(usize, Vec<(usize, Num)>)> {
    let mut blocks: Vec<(usize, Vec<(usize, Num)>)> = parts
        .iter()
        .map(|(g, cs)| {
            let row = cs
                .iter()
                .map(|&(p, cv)| {
                    let v = if exact {
                        let ap = r.a[p].exact().unwrap().clone();
                        let frac = rat_approx(cv / r.a[p].to_f64(), 1_000_000_000).max(Rat::from_integer(0.into()));
                        Num::Exact(frac * ap)
                    } else {
                        Num::Float(cv.max(0.0))
                    };
                    (p, v)
                })
                .collect();
            (*g, row)
        })
        .collect();
    for p in 0..r.a.len() {
        let total: Num = blocks.iter().flat_map(|(_, row)| row.iter()).filter(|(q, _)| *q == p).map(|(_, v)| v.clone()).sum();
        if r.a[p].signum() > 0 && total.cmp_num(&r.a[p]) == std::cmp::Ordering::Greater {
            let k = match (&total, &r.a[p]) {
                (Num::Exact(t), Num::Exact(a)) => Num::Exact(a / t),
                _ => Num::Float(r.a[p].to_f64() / total.to_f64()),
            };
            for (_, row) in blocks.iter_mut() {
                for (q, v) in row.iter_mut() {
                    if *q == p {
                        *v = v.clone() * k.clone();
                    }
                }
            }
        }
    }
    blocks
}

/// Turns a split of the SAGE vector back into certified AG parts of `f`.
fn back_map(
    f: &SFunction,
    r: &Reduced,
    blocks: Vec<(usize, Vec<(usize, Num)>)>,
    cfg: &MembershipConfig,
) -> Result<Option<AgDecomposition>> {
    let mut used = vec![Num::zero(); r.exps.len()];
    let mut ags: Vec<AgFunction> = vec![];
    let in_blocks: Vec<usize> = blocks.iter().map(|(g, _)| *g).collect();
    for (g, row) in blocks {
        let row: Vec<(usize, Num)> = row.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        for (p, v) in &row {
            used[*p] = used[*p].clone() + v.clone();
        }
        let outer: Vec<Exponent> = row.iter().map(|(p, _)| r.exps[*p].clone()).collect();
        let cs: Vec<Num> = row.iter().map(|(_, v)| v.clone()).collect();
        let beta = r.exps[g].clone();
        let (cg, dg) = (&r.c[g], &r.d[g]);
        if dg.is_zero() {
            ags.push(AgFunction::new(outer, cs, beta, cg.clone(), Parity::Even)?);
        } else if cg.is_zero() {
            ags.push(AgFunction::new(outer, cs, beta, dg.clone(), Parity::Odd)?);
        } else if cg.signum() > 0 {
            let mut outer = outer;
            let mut cs = cs;
            outer.push(beta.clone());
            cs.push(cg.clone());
            ags.push(AgFunction::new(outer, cs, beta, dg.clone(), Parity::Odd)?);
        } else {
            // c_γ < 0 and d_γ ≠ 0: share the block in proportion |c| : |d|
            let (s, rest) = match (cg, dg) {
                (Num::Exact(c), Num::Exact(d)) => {
                    let s = c.abs() / (c.abs() + d.abs());
                    (Num::Exact(s.clone()), Num::Exact(Rat::from_integer(1.into()) - s))
                }
                _ => {
                    let (c, d) = (cg.to_f64().abs(), dg.to_f64().abs());
                    (Num::Float(c / (c + d)), Num::Float(d / (c + d)))
                }
            };
            let even_c = cs.iter().map(|v| v.clone() * s.clone()).collect();
            let odd_c = cs.iter().map(|v| v.clone() * rest.clone()).collect();
            ags.push(AgFunction::new(outer.clone(), even_c, beta.clone(), cg.clone(), Parity::Even)?);
            ags.push(AgFunction::new(outer, odd_c, beta, dg.clone(), Parity::Odd)?);
        }
    }
    let mut remainder = vec![];
    for i in 0..r.exps.len() {
        if in_blocks.contains(&i) {
            continue;
        }
        if !r.d[i].is_zero() {
            // c ≥ |d| here: |d||x|^β + d x^β ≥ 0
            let e = r.exps[i].clone();
            ags.push(AgFunction::new(vec![e.clone()], vec![r.d[i].abs()], e, r.d[i].clone(), Parity::Odd)?);
        }
        let mut rem = r.a[i].clone() - used[i].clone();
        if let Num::Float(x) = rem {
            if x < 0.0 && x.abs() <= 1e-12 * r.a[i].to_f64().abs().max(1e-300) {
                rem = Num::Float(0.0);
            }
        }
        if rem.signum() < 0 {
            return Ok(None);
        }
        if !rem.is_zero() {
            remainder.push((r.exps[i].clone(), rem));
        }
    }
    let mut parts = vec![];
    for ag in ags {
        match ag_nonneg_decide(&ag, cfg.tol)? {
            AgDecision::Certified(w) => parts.push(AgPart { ag, witness: w }),
            _ => return Ok(None),
        }
    }
    Ok(Some(AgDecomposition { support: f.support.clone(), parts, remainder }))
}

/// A refutation from the AG block of `γ` alone, when that block is not non-negative.
fn age_refutation(f: &SFunction, r: &Reduced, pos: &[usize], g: usize, cfg: &MembershipConfig) -> Result<Option<Refutation>> {
    let outer: Vec<Exponent> = pos.iter().map(|&p| r.exps[p].clone()).collect();
    let cs: Vec<Num> = pos.iter().map(|&p| r.a[p].clone()).collect();
    let ag = AgFunction::new(outer, cs, r.exps[g].clone(), r.a[g].clone(), Parity::Even)?;
    match ag_nonneg_decide(&ag, cfg.tol)? {
        AgDecision::Refuted(x) => refute_at_abs(f, &x),
        _ => Ok(None),
    }
}

/// Given a point where the SAGE function of `f` is negative at `|x|`, returns a point
/// refutation if some sign pattern makes `f` negative, else the flipped point functional.
pub(crate) fn refute_at_abs(f: &SFunction, x: &[f64]) -> Result<Option<Refutation>> {
    let n = f.n();
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let thr = negativity_threshold(f);
    if n <= 12 {
        for mask in 0..1usize << n {
            let y: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { -ax[j] } else { ax[j] }).collect();
            if let ExtReal::Finite(v) = evaluate(f, &y)? {
                if v < thr {
                    return Ok(Some(Refutation::Point { x: y, value: v }));
                }
            }
        }
    }
    let integral = f.support.even.iter().all(|e| e.0.iter().all(|q| q.is_integer()));
    let exact = f.is_exact() && integral && ax.iter().all(|v| *v > 0.0 && v.is_finite());
    let mono = |e: &Exponent| -> Num {
        if exact {
            let mut p = Rat::from_integer(1.into());
            for (xj, ej) in ax.iter().zip(&e.0) {
                let b = rat_from_f64(*xj).unwrap();
                let k = ej.to_integer();
                let k: i32 = num_traits::ToPrimitive::to_i32(&k).unwrap_or(0);
                p *= num_traits::pow::Pow::pow(&b, k);
            }
            Num::Exact(p)
        } else {
            Num::Float(abs_monomial(&ax, e).finite().unwrap_or(f64::MAX))
        }
    };
    let v: Vec<Num> = f.support.even.iter().map(mono).collect();
    let w: Vec<Num> = f
        .support
        .odd
        .iter()
        .zip(&f.d)
        .map(|(e, d)| if d.signum() > 0 { -mono(e) } else { mono(e) })
        .collect();
    let u = DualVector::new(f.support.clone(), v, w)?;
    let p = pair(&u, f)?;
    if p.signum() < 0 {
        Ok(Some(Refutation::Dual { u, pairing: p }))
    } else {
        Ok(None)
    }
}

/// Separating functional from the solver's capacity prices: the lower convex
/// envelope `ẑ` of the log prices gives `v = e^ẑ`, `w = −sgn(d) e^ẑ`.
fn envelope_refutation(f: &SFunction, r: &Reduced, log_prices: &[(usize, f64)]) -> Result<Option<Refutation>> {
    if log_prices.is_empty() || log_prices.iter().any(|(_, z)| !z.is_finite()) {
        return Ok(None);
    }
    let m = r.exps.len();
    let zmax = log_prices.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let zmin = log_prices.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let big = zmax + (zmax - zmin) + 40.0;
    let mut z = vec![big; m];
    for &(p, zp) in log_prices {
        z[p] = zp;
    }
    let pts: Vec<Vec<f64>> = r.exps.iter().map(Exponent::to_f64).collect();
    let n = f.n();
    let mut zh = z.clone();
    for (k, target) in pts.iter().enumerate() {
        // min Σ μ z over μ ≥ 0, Σ μ = 1, Σ μ e = target
        let mut a = vec![];
        let mut b = vec![];
        for i in 0..m {
            let mut row = vec![0.0; m];
            row[i] = -1.0;
            a.push(row);
            b.push(0.0);
        }
        for j in 0..=n {
            let row: Vec<f64> = (0..m).map(|i| if j < n { pts[i][j] } else { 1.0 }).collect();
            let rhs = if j < n { target[j] } else { 1.0 };
            a.push(row.clone());
            b.push(rhs);
            a.push(row.iter().map(|x| -x).collect());
            b.push(-rhs);
        }
        let c: Vec<f64> = z.iter().map(|x| -x).collect();
        if let LpResult::Optimal { value, .. } = maximize(&c, &a, &b) {
            zh[k] = (-value).min(z[k]);
        }
    }
    // a small strictly convex bump turns the envelope's equalities into strict
    // inequalities that survive rounding
    let center: Vec<f64> = (0..n).map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / m as f64).collect();
    let dist2 = |p: &[f64]| p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let spread = pts.iter().map(|p| dist2(p)).fold(0.0f64, f64::max).max(1e-300);
    for (k, p) in pts.iter().enumerate() {
        zh[k] += 1e-5 * dist2(p) / spread;
    }
    let zref = log_prices.iter().map(|&(p, _)| zh[p]).fold(f64::NEG_INFINITY, f64::max);
    let exact = f.is_exact();
    let to_num = |x: f64| -> Num {
        if exact {
            rat_from_f64(x).map(Num::Exact).unwrap_or(Num::Float(x))
        } else {
            Num::Float(x)
        }
    };
    let val = |e: &Exponent| (zh[r.exps.binary_search(e).unwrap()] - zref).exp();
    let v: Vec<Num> = f.support.even.iter().map(|e| to_num(val(e))).collect();
    let w: Vec<Num> = f
        .support
        .odd
        .iter()
        .zip(&f.d)
        .map(|(e, d)| {
            let mag = (1.0 - 1e-7) * val(e);
            to_num(if d.signum() > 0 { -mag } else { mag })
        })
        .collect();
    let u = DualVector::new(f.support.clone(), v, w)?;
    let p = pair(&u, f)?;
    if p.signum() >= 0 {
        return Ok(None);
    }
    if !dual_membership(&u, &f.support, DualMode::Reduced)?.member {
        return Ok(None);
    }
    Ok(Some(Refutation::Dual { u, pairing: p }))
}

/// Re-certifies `f` over exactly its non-zero support, given a certificate over
/// a larger support.
pub fn restrict_support(f: &SFunction, cert: &AgDecomposition, cfg: &MembershipConfig) -> Result<AgDecomposition> {
    let all_zero = f.c.iter().chain(&f.d).all(Num::is_zero);
    if all_zero {
        return Ok(AgDecomposition { support: cert.support.clone(), parts: vec![], remainder: vec![] });
    }
    let supp = f.nonzero_support()?;
    if !supp.is_subset_of(&cert.support) {
        return Err(SconeError::SupportMismatch("f has terms outside the certificate's support".into()));
    }
    if supp == cert.support && f.support == cert.support {
        return Ok(cert.clone());
    }
    let g = f.restrict_to(&supp)?;
    match scone_membership(&g, cfg)? {
        Membership::Certified(d) => Ok(d),
        Membership::Refuted(_) => Err(SconeError::Solver("the restricted function was refuted".into())),
        Membership::Indeterminate { reason, .. } => Err(SconeError::Solver(format!("restricted membership undecided: {reason}"))),
    }
}
