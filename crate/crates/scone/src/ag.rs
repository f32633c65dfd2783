//! Single AG functions: deciding non-negativity and producing witnesses.
//!
//! An even AG function is `Σ c_α |x|^α + d |x|^β` with `β ∉ A`, an odd one is
//! `Σ c_α |x|^α + d x^β`; in both cases `c ≥ 0`. Non-negativity holds iff
//! `inf_y Σ c_α e^{(α−β)ᵀy}` reaches `-d` (even) or `|d|` (odd). The infimum is
//! found by damped Newton on the log-sum-exp form over the face of `conv(A)`
//! containing `β`, and the optimal weights give `λ ∈ Λ(A, β)`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::circuits::circuit_number;
use crate::dual::compare_product;
use crate::error::{Result, SconeError};
use crate::linalg::{orthonormal_span, rref, solve, Solution};
use crate::lp;
use crate::num::{parse_rat, rat_approx, rat_str, rat_to_f64, Num, Rat};
use crate::oracle::{polytope_vertices, relint_point};
use crate::sfun::{evaluate, Exponent, ExtReal, Parity, SFunction};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative slack used when checking witnesses in floating point.
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct AgFunction {
    pub n: usize,
    pub outer: Vec<Exponent>,
    pub c: Vec<Num>,
    pub beta: Exponent,
    pub d: Num,
    pub parity: Parity,
}

impl AgFunction {
    pub fn new(outer: Vec<Exponent>, c: Vec<Num>, beta: Exponent, d: Num, parity: Parity) -> Result<AgFunction> {
        let n = beta.dim();
        if outer.len() != c.len() {
            return Err(SconeError::Invalid("one coefficient per outer exponent".into()));
        }
        if let Some(e) = outer.iter().find(|e| e.dim() != n) {
            return Err(SconeError::DimensionMismatch { expected: n, got: e.dim() });
        }
        let mut sorted = outer.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != outer.len() {
            return Err(SconeError::InvalidSupport("duplicate outer exponent".into()));
        }
        match parity {
            Parity::Even if outer.contains(&beta) => {
                return Err(SconeError::InvalidSupport("even AG function needs β outside A".into()))
            }
            Parity::Odd if !beta.is_odd_integer() => {
                return Err(SconeError::InvalidSupport(format!("{beta} is not an odd exponent")))
            }
            _ => {}
        }
        Ok(AgFunction { n, outer, c, beta, d, parity })
    }

    /// `-d` for even parity, `|d|` for odd.
    pub fn threshold(&self) -> Num {
        match self.parity {
            Parity::Even => -self.d.clone(),
            Parity::Odd => self.d.abs(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.c.iter().all(Num::is_exact) && self.d.is_exact()
    }

    pub fn scale(&self) -> f64 {
        self.c.iter().chain(std::iter::once(&self.d)).fold(0.0f64, |m, x| m.max(x.to_f64().abs()))
    }

    pub fn to_sfunction(&self) -> Result<SFunction> {
        let mut even: Vec<(Exponent, Num)> = self.outer.iter().cloned().zip(self.c.iter().cloned()).collect();
        let mut odd = vec![];
        match self.parity {
            Parity::Even => even.push((self.beta.clone(), self.d.clone())),
            Parity::Odd => odd.push((self.beta.clone(), self.d.clone())),
        }
        if even.is_empty() {
            // the support needs an even exponent; a zero term keeps the function unchanged
            even.push((self.beta.clone(), Num::zero()));
        }
        SFunction::from_terms(self.n, even, odd)
    }

    /// Reads an AG function off the non-zero terms of `f`.
    pub fn from_sfunction(f: &SFunction) -> Result<AgFunction> {
        let even: Vec<(Exponent, Num)> = f
            .support
            .even
            .iter()
            .zip(&f.c)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        let odd: Vec<(Exponent, Num)> = f
            .support
            .odd
            .iter()
            .zip(&f.d)
            .filter(|(_, d)| !d.is_zero())
            .map(|(e, d)| (e.clone(), d.clone()))
            .collect();
        let negatives = even.iter().filter(|(_, c)| c.signum() < 0).count();
        let (outer, c): (Vec<Exponent>, Vec<Num>) = even.iter().cloned().unzip();
        match (odd.len(), negatives) {
            (1, 0) => AgFunction::new(outer, c, odd[0].0.clone(), odd[0].1.clone(), Parity::Odd),
            (0, 1) => {
                let i = even.iter().position(|(_, c)| c.signum() < 0).unwrap();
                let mut outer = outer;
                let mut c = c;
                let beta = outer.remove(i);
                let d = c.remove(i);
                AgFunction::new(outer, c, beta, d, Parity::Even)
            }
            (0, 0) => {
                // all terms non-negative: any even term can play the inner role
                let (beta, d) = match even.first() {
                    Some(t) => t.clone(),
                    None => (f.support.even[0].clone(), Num::zero()),
                };
                let rest: Vec<(Exponent, Num)> = even.into_iter().skip(1).collect();
                let (outer, c) = rest.into_iter().unzip();
                AgFunction::new(outer, c, beta, d, Parity::Even)
            }
            _ => Err(SconeError::NotApplicable("not an AG function".into())),
        }
    }
}

/// Either form of the witness: normalized weights `λ` or unnormalized `ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgWitness {
    /// `None` only when the threshold is `≤ 0` and nothing needs certifying.
    pub lambda: Option<Vec<Rat>>,
    pub nu: Option<Vec<f64>>,
    /// `Π (c_α/λ_α)^{λ_α}` for the stated `λ`.
    pub value: f64,
    pub y: Vec<f64>,
}

impl AgWitness {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "kind": "ag-witness",
            "lambda": self.lambda.as_ref().map(|l| l.iter().map(rat_str).collect::<Vec<_>>()),
            "value": self.value,
            "y": self.y,
        });
        if let Some(nu) = &self.nu {
            v["nu"] = json!(nu);
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<AgWitness> {
        let lambda = match v.get("lambda") {
            None | Some(Value::Null) => None,
            Some(Value::Array(a)) => Some(
                a.iter()
                    .map(|x| {
                        x.as_str()
                            .and_then(parse_rat)
                            .or_else(|| x.as_i64().map(|i| Rat::from_integer(i.into())))
                            .ok_or_else(|| SconeError::Parse(format!("bad lambda entry {x}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Some(x) => return Err(SconeError::Parse(format!("bad lambda {x}"))),
        };
        let floats = |key: &str| -> Option<Vec<f64>> {
            v.get(key)?.as_array()?.iter().map(Value::as_f64).collect()
        };
        Ok(AgWitness {
            lambda,
            nu: floats("nu"),
            value: v.get("value").and_then(Value::as_f64).unwrap_or(0.0),
            y: floats("y").unwrap_or_default(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AgDecision {
    Certified(AgWitness),
    /// A point where the function is negative.
    Refuted(Vec<f64>),
    /// `g* − threshold`, too close to zero to decide.
    Indeterminate { margin: f64 },
}

impl AgDecision {
    pub fn is_certified(&self) -> bool {
        matches!(self, AgDecision::Certified(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, AgDecision::Refuted(_))
    }
}

/// Result of minimizing `G(y) = Σ c_α e^{(α−β)ᵀy}` over `y ∈ ℝⁿ`.
#[derive(Clone, Debug)]
pub struct PosyMin {
    /// The infimum `g*`; zero when `β ∉ conv(supp c)`.
    pub g_star: f64,
    /// Minimizer of the face part.
    pub y: Vec<f64>,
    /// Indices (into the outer list) of the face of `conv(supp c)` containing `β`.
    pub face: Vec<usize>,
    /// `λ_α ∝ c_α e^{(α−β)ᵀy}` on the face, zero elsewhere.
    pub weights: Vec<f64>,
    /// Direction along which the off-face terms (or all terms) decay.
    pub recession: Option<Vec<f64>>,
    /// `‖∇G(y)‖` at the returned point, restricted to the face terms.
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes `G` by damped Newton in log-sum-exp form.
pub fn minimize_posynomial(outer: &[Exponent], c: &[f64], beta: &Exponent) -> Result<PosyMin> {
    let n = beta.dim();
    let active: Vec<usize> = (0..outer.len()).filter(|&i| c[i] > 0.0).collect();
    let act_exps: Vec<Exponent> = active.iter().map(|&i| outer[i].clone()).collect();
    let bf = beta.to_f64();
    let diff = |e: &Exponent| -> Vec<f64> { e.to_f64().iter().zip(&bf).map(|(a, b)| a - b).collect() };
    let verts = polytope_vertices(&act_exps, beta);
    if verts.is_empty() {
        // strictly separate β from the active exponents
        let rows: Vec<Vec<f64>> = act_exps.iter().map(diff).collect();
        let s = lp::feasible(&rows, &vec![-1.0; rows.len()], n)
            .ok_or_else(|| SconeError::Solver("no separating direction found".into()))?;
        return Ok(PosyMin {
            g_star: 0.0,
            y: vec![0.0; n],
            face: vec![],
            weights: vec![0.0; outer.len()],
            recession: Some(s),
            grad_norm: 0.0,
            iterations: 0,
        });
    }
    let face_local: Vec<usize> =
        (0..act_exps.len()).filter(|&i| verts.iter().any(|v| !v[i].is_zero())).collect();
    let face: Vec<usize> = face_local.iter().map(|&i| active[i]).collect();
    let recession = if face.len() < active.len() {
        let mut rows = vec![];
        let mut rhs = vec![];
        for (li, &gi) in active.iter().enumerate() {
            let d = diff(&outer[gi]);
            if face_local.contains(&li) {
                rows.push(d.clone());
                rhs.push(0.0);
                rows.push(d.iter().map(|x| -x).collect());
                rhs.push(0.0);
            } else {
                rows.push(d);
                rhs.push(-1.0);
            }
        }
        Some(lp::feasible(&rows, &rhs, n).ok_or_else(|| SconeError::Solver("no exposing direction for the face".into()))?)
    } else {
        None
    };
    let diffs: Vec<Vec<f64>> = face.iter().map(|&i| diff(&outer[i])).collect();
    let basis = orthonormal_span(&diffs, n);
    let k = basis.len();
    let logc: Vec<f64> = face.iter().map(|&i| c[i].ln()).collect();
    let b: Vec<Vec<f64>> = diffs
        .iter()
        .map(|d| basis.iter().map(|u| u.iter().zip(d).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let (phi, z, p, iterations) = newton_lse(&logc, &b, k);
    let mut y = vec![0.0; n];
    for (zi, u) in z.iter().zip(&basis) {
        for j in 0..n {
            y[j] += zi * u[j];
        }
    }
    let g_star = phi.exp();
    let mut weights = vec![0.0; outer.len()];
    for (&i, pi) in face.iter().zip(&p) {
        weights[i] = *pi;
    }
    let mut grad = vec![0.0; n];
    for (d, pi) in diffs.iter().zip(&p) {
        for j in 0..n {
            grad[j] += g_star * pi * d[j];
        }
    }
    let grad_norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(PosyMin { g_star, y, face, weights, recession, grad_norm, iterations })
}

/// `(φ, ∇φ, ∇²φ)` of `φ(z) = ln Σ exp(logc_i + b_iᵀz)`, plus the softmax weights.
fn lse_eval(logc: &[f64], b: &[Vec<f64>], z: &[f64], k: usize) -> (f64, Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let t: Vec<f64> = logc
        .iter()
        .zip(b)
        .map(|(l, bi)| l + bi.iter().zip(z).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = t.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    let p: Vec<f64> = e.iter().map(|x| x / s).collect();
    let phi = m + s.ln();
    let mut g = vec![0.0; k];
    for (pi, bi) in p.iter().zip(b) {
        for j in 0..k {
            g[j] += pi * bi[j];
        }
    }
    let mut h = DMatrix::zeros(k, k);
    for (pi, bi) in p.iter().zip(b) {
        for r in 0..k {
            for c in 0..k {
                h[(r, c)] += pi * (bi[r] - g[r]) * (bi[c] - g[c]);
            }
        }
    }
    (phi, g, h, p)
}

fn newton_lse(logc: &[f64], b: &[Vec<f64>], k: usize) -> (f64, Vec<f64>, Vec<f64>, usize) {
    let mut z = vec![0.0; k];
    let phi_at = |z: &[f64]| lse_eval(logc, b, z, k).0;
    let mut iters = 0;
    for it in 0..400 {
        iters = it;
        let (phi, g, h, _) = lse_eval(logc, b, &z, k);
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-13 {
            break;
        }
        let gv = DVector::from_vec(g.clone());
        let step = match h.clone().cholesky() {
            Some(ch) => {
                let s = ch.solve(&(-&gv));
                if s.dot(&gv) < 0.0 {
                    s
                } else {
                    -gv.clone()
                }
            }
            None => -gv.clone(),
        };
        // a nearly flat Hessian (one dominant term) gives absurd Newton steps
        let norm = step.norm();
        let step = if norm > 8.0 { step * (8.0 / norm) } else { step };
        let slope = step.dot(&gv);
        if -slope < 1e-30 {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        if gn < 1e-6 {
            // near the minimum φ differences drown in rounding; judge by the gradient
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            let g2 = lse_eval(logc, b, &trial, k).1;
            if g2.iter().map(|x| x * x).sum::<f64>().sqrt() < 0.5 * gn {
                z = trial;
                continue;
            }
        }
        while t > 1e-20 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if phi_at(&trial) <= phi + 1e-4 * t * slope {
                z = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (phi, _, _, p) = lse_eval(logc, b, &z, k);
    (phi, z, p, iters)
}

/// Rational weights in `Λ(A, β)` near the float weights on the face, coarse first.
fn rational_candidates(outer: &[Exponent], face: &[usize], weights: &[f64], beta: &Exponent) -> Vec<Vec<Rat>> {
    let mut out: Vec<Vec<Rat>> = vec![];
    let mut order: Vec<usize> = face.to_vec();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap_or(Ordering::Equal));
    let pts: Vec<Exponent> = order.iter().map(|&i| outer[i].clone()).collect();
    let refs: Vec<&Exponent> = pts.iter().collect();
    let lifted = crate::circuits::lifted(&refs);
    let mut reduced = lifted.clone();
    let pivots = rref(&mut reduced);
    let rel = relint_point(&pts, beta);
    let mut rhs = beta.0.clone();
    rhs.push(Rat::from_integer(1.into()));
    for den in [12i64, 1000, 1_000_000, 1_000_000_000] {
        let mut lam = vec![Rat::zero(); pts.len()];
        let mut r = rhs.clone();
        for j in 0..pts.len() {
            if pivots.contains(&j) {
                continue;
            }
            lam[j] = rat_approx(weights[order[j]], den).max(Rat::zero());
            for (ri, row) in r.iter_mut().zip(&lifted) {
                *ri -= &row[j] * &lam[j];
            }
        }
        let mb: Vec<Vec<Rat>> = lifted.iter().map(|row| pivots.iter().map(|&j| row[j].clone()).collect()).collect();
        let Solution::Unique(xb) = solve(&mb, &r) else {
            continue;
        };
        for (&j, x) in pivots.iter().zip(xb) {
            lam[j] = x;
        }
        if lam.iter().any(|x| x.is_negative()) {
            let Some(rel) = &rel else { continue };
            let mut fixed = None;
            for t in [crate::num::rat(1, 1_000_000), crate::num::rat(1, 10_000), crate::num::rat(1, 100), crate::num::rat(1, 2)] {
                let mixed: Vec<Rat> = lam
                    .iter()
                    .zip(rel)
                    .map(|(a, b)| (Rat::from_integer(1.into()) - &t) * a + &t * b)
                    .collect();
                if mixed.iter().all(|x| !x.is_negative()) {
                    fixed = Some(mixed);
                    break;
                }
            }
            match fixed {
                Some(m) => lam = m,
                None => continue,
            }
        }
        let mut full = vec![Rat::zero(); outer.len()];
        for (j, &i) in order.iter().enumerate() {
            full[i] = lam[j].clone();
        }
        if !out.contains(&full) {
            out.push(full);
        }
    }
    if let Some(rel) = rel {
        let mut full = vec![Rat::zero(); outer.len()];
        for (j, &i) in order.iter().enumerate() {
            full[i] = rel[j].clone();
        }
        if !out.contains(&full) {
            out.push(full);
        }
    }
    out
}

/// `Π (c_α/λ_α)^{λ_α}` in floating point, zero when some `λ_α > 0` meets `c_α = 0`.
pub fn product_value(c: &[Num], lambda: &[Rat]) -> f64 {
    let cf: Vec<f64> = c.iter().map(Num::to_f64).collect();
    circuit_number(&cf, lambda)
}

/// Decides `f ≥ 0` on `ℝⁿ`.
pub fn ag_nonneg_decide(f: &AgFunction, tol: f64) -> Result<AgDecision> {
    if f.c.iter().any(|c| c.signum() < 0) {
        return Err(SconeError::Invalid("an outer coefficient is negative".into()));
    }
    let t = f.threshold();
    if t.signum() <= 0 {
        return Ok(AgDecision::Certified(AgWitness { lambda: None, nu: None, value: 0.0, y: vec![0.0; f.n] }));
    }
    let tf = t.to_f64();
    // measure closeness against the threshold itself so that huge outer
    // coefficients elsewhere do not widen the band
    let scale = tf;
    let cf: Vec<f64> = f.c.iter().map(Num::to_f64).collect();
    let m = minimize_posynomial(&f.outer, &cf, &f.beta)?;
    let g = m.g_star;
    if g >= tf - 1e-12 * scale && !m.face.is_empty() {
        for lam in rational_candidates(&f.outer, &m.face, &m.weights, &f.beta) {
            let w = witness_from_product(f, lam, m.y.clone());
            if check_witness(f, &w, WitnessForm::Product)? {
                return Ok(AgDecision::Certified(w));
            }
        }
        return Ok(AgDecision::Indeterminate { margin: g - tf });
    }
    if g > tf - tol * scale {
        return Ok(AgDecision::Indeterminate { margin: g - tf });
    }
    match refutation_point(f, &m)? {
        Some(x) => Ok(AgDecision::Refuted(x)),
        None => Ok(AgDecision::Indeterminate { margin: g - tf }),
    }
}

fn refutation_point(f: &AgFunction, m: &PosyMin) -> Result<Option<Vec<f64>>> {
    let tf = f.threshold().to_f64();
    let cf: Vec<f64> = f.c.iter().map(Num::to_f64).collect();
    let bf = f.beta.to_f64();
    let big_g = |y: &[f64]| -> f64 {
        f.outer
            .iter()
            .zip(&cf)
            .filter(|(_, c)| **c > 0.0)
            .map(|(e, c)| c * e.to_f64().iter().zip(&bf).zip(y).map(|((a, b), yj)| (a - b) * yj).sum::<f64>().exp())
            .sum()
    };
    let goal = 0.5 * (tf + m.g_star);
    let mut y = m.y.clone();
    if let Some(r) = &m.recession {
        let mut k = 1.0;
        loop {
            let trial: Vec<f64> = m.y.iter().zip(r).map(|(a, b)| a + k * b).collect();
            if big_g(&trial) < goal {
                y = trial;
                break;
            }
            k *= 2.0;
            if k > 1e8 {
                return Ok(None);
            }
        }
    }
    let mut x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    if x.iter().any(|v| !v.is_finite() || *v == 0.0) {
        return Ok(None);
    }
    if f.parity == Parity::Odd && f.d.signum() > 0 {
        let j = f.beta.0.iter().position(|e| num_integer::Integer::is_odd(e.numer())).unwrap();
        x[j] = -x[j];
    }
    let sf = f.to_sfunction()?;
    match evaluate(&sf, &x)? {
        ExtReal::Finite(v) if v < 0.0 => Ok(Some(x)),
        _ => Ok(None),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessForm {
    Entropy,
    Product,
}

/// Re-checks a witness against `f` without running any solver.
pub fn check_witness(f: &AgFunction, w: &AgWitness, form: WitnessForm) -> Result<bool> {
    let t = f.threshold();
    let tf = t.to_f64();
    match form {
        WitnessForm::Product => {
            let Some(lam) = &w.lambda else {
                if t.signum() <= 0 {
                    return Ok(true);
                }
                return Err(SconeError::Invalid("product witness needs lambda".into()));
            };
            validate_lambda(&f.outer, lam, &f.beta)?;
            if t.signum() <= 0 {
                return Ok(true);
            }
            if lam.iter().zip(&f.c).any(|(l, c)| l.is_positive() && c.signum() <= 0) {
                return Ok(false);
            }
            let idx: Vec<usize> = (0..lam.len()).filter(|&i| lam[i].is_positive()).collect();
            let l: Vec<Rat> = idx.iter().map(|&i| lam[i].clone()).collect();
            if f.is_exact() {
                let bases: Vec<Rat> = idx.iter().map(|&i| f.c[i].exact().unwrap() / &lam[i]).collect();
                return Ok(compare_product(t.exact().unwrap(), &bases, &l) != Ordering::Greater);
            }
            let prod = product_value(&f.c, lam);
            Ok(prod >= tf - WITNESS_TOL * tf.max(prod))
        }
        WitnessForm::Entropy => {
            let Some(nu) = &w.nu else {
                return Err(SconeError::Invalid("entropy witness needs nu".into()));
            };
            if nu.len() != f.outer.len() || nu.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                return Err(SconeError::Invalid("nu must be a non-negative vector over A".into()));
            }
            let total: f64 = nu.iter().sum();
            let bf = f.beta.to_f64();
            let spread = f
                .outer
                .iter()
                .flat_map(|e| e.to_f64().into_iter().zip(&bf).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
                .fold(1.0f64, f64::max);
            for j in 0..f.n {
                let s: f64 = nu.iter().zip(&f.outer).map(|(v, e)| v * (rat_to_f64(&e.0[j]) - bf[j])).sum();
                if s.abs() > 1e-10 * (1.0 + total) * spread {
                    return Err(SconeError::Invalid("nu violates the moment condition".into()));
                }
            }
            let mut dval = 0.0;
            for (v, c) in nu.iter().zip(&f.c) {
                if *v == 0.0 {
                    continue;
                }
                let c = c.to_f64();
                if c <= 0.0 {
                    return Ok(false);
                }
                dval += v * (v / (std::f64::consts::E * c)).ln();
            }
            Ok(dval <= -tf + WITNESS_TOL * (tf.abs() + dval.abs()).max(1e-300))
        }
    }
}

fn validate_lambda(outer: &[Exponent], lam: &[Rat], beta: &Exponent) -> Result<()> {
    if lam.len() != outer.len() {
        return Err(SconeError::Invalid("lambda length differs from |A|".into()));
    }
    if lam.iter().any(|x| x.is_negative()) {
        return Err(SconeError::Invalid("lambda has a negative entry".into()));
    }
    let s: Rat = lam.iter().sum();
    if s != Rat::from_integer(1.into()) {
        return Err(SconeError::Invalid("lambda does not sum to one".into()));
    }
    for j in 0..beta.dim() {
        let v: Rat = outer.iter().zip(lam).map(|(e, l)| &e.0[j] * l).sum();
        if v != beta.0[j] {
            return Err(SconeError::Invalid("lambda does not reproduce beta".into()));
        }
    }
    Ok(())
}

/// `λ = ν / Σν`, checking the moment condition `Σ ν_α α = (Σν) β` exactly.
pub fn witness_from_entropy(nu: &[Rat], outer: &[Exponent], beta: &Exponent) -> Result<Vec<Rat>> {
    if nu.len() != outer.len() || nu.iter().any(|x| x.is_negative()) {
        return Err(SconeError::Invalid("nu must be a non-negative vector over A".into()));
    }
    let total: Rat = nu.iter().sum();
    if total.is_zero() {
        return Err(SconeError::Invalid("nu is zero".into()));
    }
    let lam: Vec<Rat> = nu.iter().map(|x| x / &total).collect();
    validate_lambda(outer, &lam, beta)?;
    Ok(lam)
}

/// The complete witness for `λ`: the product value and `ν = Π·λ`, which
/// attains `D(ν, e·c) = −Π`.
pub fn witness_from_product(f: &AgFunction, lambda: Vec<Rat>, y: Vec<f64>) -> AgWitness {
    let value = product_value(&f.c, &lambda);
    let nu = lambda.iter().map(|l| value * rat_to_f64(l)).collect();
    AgWitness { lambda: Some(lambda), nu: Some(nu), value, y }
}
