//! Circuit decompositions, the simplex fast path, lower bounds and
//! independent certificate checks.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};

use crate::ag::{check_witness, WitnessForm};
use crate::circuits::{affinely_independent, in_simplex, lambda_unique, lambda_vertex_decompose, Circuit, CircuitFunction};
use crate::dual::{dual_membership, DualMode};
use crate::error::{Result, SconeError};
use crate::member::{
    sample_min, scone_membership, AgDecomposition, Certificate, CircuitDecomposition, Membership, MembershipConfig,
    Refutation,
};
use crate::num::{rat_approx, rat_from_f64, rat_to_f64, Num, Rat};
use crate::oracle::polytope_vertices;
use crate::sfun::{evaluate, pair, Exponent, ExtReal, Parity, SFunction};

/// Monomials below this fraction of the coefficient scale are dropped in floating mode.
const DUST: f64 = 1e-14;

struct Builder {
    ambient: Vec<Exponent>,
    parts: Vec<CircuitFunction>,
    monos: BTreeMap<Exponent, Num>,
}

impl Builder {
    fn mono(&mut self, e: &Exponent, c: Num) {
        if c.is_zero() {
            return;
        }
        let slot = self.monos.entry(e.clone()).or_insert_with(Num::zero);
        *slot = slot.clone() + c;
    }

    fn circuit(&mut self, pairs: Vec<(Exponent, Num)>, inner: &Exponent, parity: Parity, d: Num) -> Result<CircuitFunction> {
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let outer: Vec<Exponent> = pairs.iter().map(|p| p.0.clone()).collect();
        let c = Circuit::new(outer, inner.clone(), parity, &self.ambient)?;
        CircuitFunction::new(c, pairs.into_iter().map(|p| p.1).collect(), d)
    }
}

/// Splits every AG part into circuit functions; with `reduced_only`, further
/// rewrites them over reduced circuits.
pub fn decompose_to_circuits(dec: &AgDecomposition, reduced_only: bool) -> Result<CircuitDecomposition> {
    let mut b = Builder { ambient: dec.support.even.clone(), parts: vec![], monos: BTreeMap::new() };
    for (e, c) in &dec.remainder {
        b.mono(e, c.clone());
    }
    for part in &dec.parts {
        let ag = &part.ag;
        let t = ag.threshold();
        let Some(lam) = part.witness.lambda.as_ref().filter(|_| t.signum() > 0) else {
            if t.signum() > 0 {
                return Err(SconeError::Invalid("AG part without a product witness".into()));
            }
            for (e, c) in ag.outer.iter().zip(&ag.c) {
                b.mono(e, c.clone());
            }
            match ag.parity {
                Parity::Even => b.mono(&ag.beta, ag.d.clone()),
                Parity::Odd if !ag.d.is_zero() => {
                    return Err(SconeError::Invalid("odd part with non-zero inner term has no witness".into()))
                }
                Parity::Odd => {}
            }
            continue;
        };
        for ((e, c), l) in ag.outer.iter().zip(&ag.c).zip(lam) {
            if l.is_zero() {
                b.mono(e, c.clone());
            }
        }
        let verts = lambda_vertex_decompose(&ag.outer, lam, &ag.beta)?;
        let exact = ag.is_exact();
        // outer coefficients of the j-th piece: μ_j λ^j_α c_α / λ*_α
        let pieces: Vec<Vec<(Exponent, Num)>> = verts
            .iter()
            .map(|(mu, lj)| {
                (0..ag.outer.len())
                    .filter(|&i| lj[i].is_positive())
                    .map(|i| {
                        let k = mu * &lj[i] / &lam[i];
                        let v = match &ag.c[i] {
                            Num::Exact(c) => Num::Exact(c * k),
                            Num::Float(c) => Num::Float(c * rat_to_f64(&k)),
                        };
                        (ag.outer[i].clone(), v)
                    })
                    .collect()
            })
            .collect();
        let mut cfs: Vec<CircuitFunction> = pieces
            .iter()
            .map(|p| b.circuit(p.clone(), &ag.beta, ag.parity, Num::zero()))
            .collect::<Result<_>>()?;
        let thetas: Vec<f64> = cfs.iter().map(CircuitFunction::theta).collect();
        let total: f64 = thetas.iter().sum();
        let assign = |cfs: &mut Vec<CircuitFunction>, w: &[Num]| {
            for (cf, wj) in cfs.iter_mut().zip(w) {
                cf.d = ag.d.clone() * wj.clone();
            }
        };
        if exact && cfs.len() == 1 {
            assign(&mut cfs, &[Num::int(1)]);
        } else if exact {
            let one = Rat::one();
            let mut w: Vec<Rat> = thetas[..thetas.len() - 1].iter().map(|t| rat_approx(t / total, 1_000_000_000)).collect();
            let rest = &one - w.iter().sum::<Rat>();
            w.push(rest);
            let wn: Vec<Num> = w.into_iter().map(Num::Exact).collect();
            assign(&mut cfs, &wn);
            if !cfs.iter().all(|cf| cf.is_nonnegative(0.0)) {
                // at the boundary all pieces are balanced and μ itself works
                let wn: Vec<Num> = verts.iter().map(|(mu, _)| Num::Exact(mu.clone())).collect();
                assign(&mut cfs, &wn);
            }
        } else {
            let wn: Vec<Num> = thetas.iter().map(|t| Num::Float(t / total)).collect();
            assign(&mut cfs, &wn);
        }
        for cf in cfs {
            if reduced_only && !cf.circuit.is_reduced() {
                reduce_circuit(&mut b, &cf)?;
            } else {
                b.parts.push(cf);
            }
        }
    }
    let scale = dec
        .parts
        .iter()
        .map(|p| p.ag.scale())
        .chain(dec.remainder.iter().map(|(_, c)| c.to_f64().abs()))
        .fold(0.0f64, f64::max);
    let monomials = b
        .monos
        .into_iter()
        .filter(|(_, c)| match c {
            Num::Float(x) => x.abs() > DUST * scale,
            Num::Exact(r) => !r.is_zero(),
        })
        .collect();
    Ok(CircuitDecomposition { support: dec.support.clone(), parts: b.parts, monomials })
}

/// Rewrites a non-negative circuit function over reduced circuits by repeatedly
/// splitting at an ambient point inside its simplex.
fn reduce_circuit(b: &mut Builder, cf: &CircuitFunction) -> Result<()> {
    let circ = &cf.circuit;
    let t = match circ.parity {
        Parity::Even => -cf.d.to_f64(),
        Parity::Odd => cf.d.to_f64().abs(),
    };
    if t <= 0.0 {
        for (e, c) in circ.outer.iter().zip(&cf.c) {
            b.mono(e, c.clone());
        }
        if circ.parity == Parity::Even {
            b.mono(&circ.inner, cf.d.clone());
        }
        return Ok(());
    }
    let theta = cf.theta();
    let s = (t / theta).min(1.0);
    let mut lnw = vec![];
    for ((e, c), l) in circ.outer.iter().zip(&cf.c).zip(&circ.lambda) {
        let c = c.to_f64();
        if s < 1.0 {
            b.mono(e, Num::Float((1.0 - s) * c));
        }
        lnw.push((s * c / rat_to_f64(l)).ln());
    }
    let sign = match circ.parity {
        Parity::Even => -1.0,
        Parity::Odd => cf.d.to_f64().signum(),
    };
    let top = circ.outer.clone();
    // w_p = Π w_α^{λ(A,p)_α}: the log-affine extension over aff(A)
    let w = |p: &Exponent| -> Result<f64> {
        let l = lambda_unique(&top, p)?;
        Ok(l.iter().zip(&lnw).map(|(li, lw)| rat_to_f64(li) * lw).sum::<f64>().exp())
    };
    split(b, &w, circ.outer.clone(), circ.inner.clone(), circ.parity, 1.0, sign, 0)
}

#[allow(clippy::too_many_arguments)]
fn split(
    b: &mut Builder,
    w: &dyn Fn(&Exponent) -> Result<f64>,
    outer: Vec<Exponent>,
    inner: Exponent,
    parity: Parity,
    mult: f64,
    sign: f64,
    depth: usize,
) -> Result<()> {
    let c = Circuit::new(outer, inner.clone(), parity, &b.ambient)?;
    let refs: Vec<&Exponent> = c.outer.iter().collect();
    let pivot = if c.is_reduced() || c.is_singleton() || depth > 32 {
        None
    } else {
        b.ambient
            .iter()
            .find(|p| !c.outer.contains(p) && (parity == Parity::Odd || **p != inner) && in_simplex(&refs, p))
            .cloned()
    };
    let Some(bp) = pivot else {
        let mut pairs = vec![];
        for (e, l) in c.outer.iter().zip(&c.lambda) {
            pairs.push((e.clone(), Num::Float(mult * rat_to_f64(l) * w(e)?)));
        }
        let d = match parity {
            Parity::Even => -mult * w(&inner)?,
            Parity::Odd => sign * mult * w(&inner)?,
        };
        let cf = b.circuit(pairs, &inner, parity, Num::Float(d))?;
        b.parts.push(cf);
        return Ok(());
    };
    let lam = &c.lambda;
    let lp = lambda_unique(&c.outer, &bp)?;
    let tau = (0..lam.len())
        .filter(|&i| lp[i].is_positive())
        .map(|i| &lam[i] / &lp[i])
        .min()
        .unwrap();
    let tilde: Vec<Rat> = lam.iter().zip(&lp).map(|(l, q)| l - &tau * q).collect();
    let mut outer1: Vec<Exponent> = (0..lam.len()).filter(|&i| tilde[i].is_positive()).map(|i| c.outer[i].clone()).collect();
    outer1.push(bp.clone());
    match parity {
        Parity::Even => {
            let tau_p = if lp.iter().all(|q| q.is_positive()) {
                (0..lam.len()).map(|i| &lp[i] / &lam[i]).min().unwrap()
            } else {
                Rat::zero()
            };
            let tilde_p: Vec<Rat> = lp.iter().zip(lam).map(|(q, l)| q - &tau_p * l).collect();
            let mut outer2: Vec<Exponent> =
                (0..lam.len()).filter(|&i| tilde_p[i].is_positive()).map(|i| c.outer[i].clone()).collect();
            if tau_p.is_positive() {
                outer2.push(inner.clone());
            }
            let denom = 1.0 - rat_to_f64(&(&tau * &tau_p));
            split(b, w, outer1, inner, Parity::Even, mult / denom, sign, depth + 1)?;
            split(b, w, outer2, bp, Parity::Even, mult * rat_to_f64(&tau) / denom, sign, depth + 1)
        }
        Parity::Odd => {
            let outer2: Vec<Exponent> = (0..lam.len()).filter(|&i| lp[i].is_positive()).map(|i| c.outer[i].clone()).collect();
            split(b, w, outer1, inner, Parity::Odd, mult, sign, depth + 1)?;
            split(b, w, outer2, bp, Parity::Even, mult * rat_to_f64(&tau), sign, depth + 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FastPath {
    Certified(CircuitDecomposition),
    Refuted { x: Vec<f64>, value: f64 },
    NotApplicable(String),
    Indeterminate(String),
}

/// Vertices of `conv(A)`, in the order of `A`.
pub fn hull_vertices(a: &[Exponent]) -> Vec<Exponent> {
    (0..a.len())
        .filter(|&i| {
            let others: Vec<Exponent> = a.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, e)| e.clone()).collect();
            others.is_empty() || polytope_vertices(&others, &a[i]).is_empty()
        })
        .map(|i| a[i].clone())
        .collect()
}

/// Decides non-negativity directly when `conv(A)` is a simplex, `B ⊆ conv(A)`,
/// every non-vertex even coefficient is `≤ 0` and every odd coefficient is `≤ 0`.
pub fn simplex_fast_path(f: &SFunction, cfg: &MembershipConfig) -> Result<FastPath> {
    let verts = hull_vertices(&f.support.even);
    let vrefs: Vec<&Exponent> = verts.iter().collect();
    if !affinely_independent(&vrefs) {
        return Ok(FastPath::NotApplicable("conv(A) is not a simplex".into()));
    }
    if let Some(b) = f.support.odd.iter().find(|b| !in_simplex(&vrefs, b)) {
        return Ok(FastPath::NotApplicable(format!("{b} lies outside conv(A)")));
    }
    for (e, c) in f.support.even.iter().zip(&f.c) {
        if !verts.contains(e) && c.signum() > 0 {
            return Ok(FastPath::NotApplicable(format!("positive coefficient at the non-vertex {e}")));
        }
    }
    if let Some((e, _)) = f.support.odd.iter().zip(&f.d).find(|(_, d)| d.signum() > 0) {
        return Ok(FastPath::NotApplicable(format!("positive odd coefficient at {e}")));
    }
    match scone_membership(f, cfg)? {
        Membership::Certified(dec) => Ok(FastPath::Certified(decompose_to_circuits(&dec, false)?)),
        Membership::Refuted(Refutation::Point { x, value }) => Ok(FastPath::Refuted { x, value }),
        Membership::Refuted(Refutation::Dual { u, .. }) => {
            // over a simplex the functional is a point evaluation: ln v is affine on the vertices
            let ln_v: Vec<f64> = verts
                .iter()
                .map(|e| u.v[f.support.even_index(e).unwrap()].to_f64().ln())
                .collect();
            if let Some(x) = affine_point(&verts, &ln_v) {
                if let ExtReal::Finite(v) = evaluate(f, &x)? {
                    if v < 0.0 {
                        return Ok(FastPath::Refuted { x, value: v });
                    }
                }
            }
            Ok(FastPath::Indeterminate("refuted by a functional but no point was recovered".into()))
        }
        Membership::Indeterminate { reason, .. } => Ok(FastPath::Indeterminate(reason)),
    }
}

/// `x = exp(y)` for the least-squares `(y, κ)` with `κ + αᵀy = ln v_α`.
fn affine_point(verts: &[Exponent], ln_v: &[f64]) -> Option<Vec<f64>> {
    let n = verts.first()?.dim();
    let m = verts.len();
    let a = DMatrix::from_fn(m, n + 1, |i, j| if j < n { rat_to_f64(&verts[i].0[j]) } else { 1.0 });
    let rhs = DVector::from_column_slice(ln_v);
    let sol = a.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let x: Vec<f64> = (0..n).map(|j| sol[j].exp()).collect();
    x.iter().all(|v| v.is_finite() && *v > 0.0).then_some(x)
}

/// The largest `γ` (within `gamma_tol`) with `f − γ` in the S-cone, and its certificate.
pub fn sonc_lower_bound(f: &SFunction, gamma_tol: f64, cfg: &MembershipConfig) -> Result<(f64, AgDecomposition)> {
    let base = f.add_constant(Num::zero())?;
    let exact = f.is_exact();
    let shifted = |g: f64| -> Result<SFunction> {
        let k = if exact { Num::Exact(-rat_from_f64(g).unwrap_or_else(Rat::zero)) } else { Num::Float(-g) };
        base.add_constant(k)
    };
    let member = |g: f64| -> Result<Option<AgDecomposition>> {
        match scone_membership(&shifted(g)?, cfg)? {
            Membership::Certified(d) => Ok(Some(d)),
            _ => Ok(None),
        }
    };
    let sampled = sample_min(&base, cfg.seed, cfg.samples)?.map(|s| s.1);
    let f0 = match evaluate(&base, &vec![0.0; f.n()])? {
        ExtReal::Finite(v) => Some(v),
        ExtReal::PosInf => None,
    };
    let mut hi = sampled.or(f0).ok_or_else(|| SconeError::Solver("no finite sample of f".into()))?;
    let mut width = 1.0f64.max(hi.abs() * 1e-3);
    let mut found = None;
    for _ in 0..30 {
        let lo = hi - width;
        if let Some(d) = member(lo)? {
            found = Some((lo, d));
            break;
        }
        hi = lo;
        width *= 4.0;
    }
    let Some((mut lo, mut cert)) = found else {
        return Err(SconeError::Solver("no lower bound found; f may be unbounded below".into()));
    };
    while hi - lo > gamma_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match member(mid)? {
            Some(d) => {
                lo = mid;
                cert = d;
            }
            None => hi = mid,
        }
    }
    Ok((lo, cert))
}

/// The outcome of an independent certificate check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub valid: bool,
    pub reason: String,
}

impl Verdict {
    fn ok(reason: &str) -> Verdict {
        Verdict { valid: true, reason: reason.into() }
    }

    fn fail(reason: String) -> Verdict {
        Verdict { valid: false, reason }
    }
}

/// Re-checks `cert` against `f` without running any solver.
pub fn verify_certificate(f: &SFunction, cert: &Certificate) -> Result<Verdict> {
    match cert {
        Certificate::Ag(dec) => {
            if let Err(e) = dec.totals().matches(f) {
                return Ok(Verdict::fail(e));
            }
            for (i, p) in dec.parts.iter().enumerate() {
                if p.ag.c.iter().any(|c| c.signum() < 0) {
                    return Ok(Verdict::fail(format!("part {i} has a negative outer coefficient")));
                }
                match check_witness(&p.ag, &p.witness, WitnessForm::Product) {
                    Ok(true) => {}
                    Ok(false) => return Ok(Verdict::fail(format!("part {i}: witness product is below the threshold"))),
                    Err(e) => return Ok(Verdict::fail(format!("part {i}: {e}"))),
                }
            }
            if let Some((e, _)) = dec.remainder.iter().find(|(_, c)| c.signum() < 0) {
                return Ok(Verdict::fail(format!("negative remainder at {e}")));
            }
            Ok(Verdict::ok("coefficients match and every AG part is certified"))
        }
        Certificate::Circuits(dec) => {
            if let Err(e) = dec.totals().matches(f) {
                return Ok(Verdict::fail(e));
            }
            for (i, cf) in dec.parts.iter().enumerate() {
                if !cf.is_nonnegative(1e-9) {
                    return Ok(Verdict::fail(format!(
                        "part {i}: inner coefficient {} exceeds the circuit number {}",
                        cf.d,
                        cf.theta()
                    )));
                }
            }
            if let Some((e, _)) = dec.monomials.iter().find(|(_, c)| c.signum() < 0) {
                return Ok(Verdict::fail(format!("negative monomial at {e}")));
            }
            Ok(Verdict::ok("coefficients match and every circuit function is non-negative"))
        }
        Certificate::Refutation(Refutation::Point { x, .. }) => {
            if x.len() != f.n() {
                return Ok(Verdict::fail("point has the wrong dimension".into()));
            }
            match evaluate(f, x)? {
                ExtReal::Finite(v) if v < 0.0 => Ok(Verdict::ok(&format!("f(x) = {v} < 0"))),
                v => Ok(Verdict::fail(format!("f(x) = {v:?} is not negative"))),
            }
        }
        Certificate::Refutation(Refutation::Dual { u, .. }) => {
            if u.support != f.support {
                return Ok(Verdict::fail("functional is over a different support".into()));
            }
            let p = pair(u, f)?;
            if p.signum() >= 0 {
                return Ok(Verdict::fail(format!("pairing {p} is not negative")));
            }
            let rep = dual_membership(u, &f.support, DualMode::Reduced)?;
            if !rep.member {
                return Ok(Verdict::fail("functional is not in the dual cone".into()));
            }
            Ok(Verdict::ok(&format!("dual member with pairing {p} < 0")))
        }
    }
}

#[cfg(test)]
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
