//! Barycentric weights, circuits, circuit numbers and extreme rays.
//!
//! A circuit `(A, β)` has affinely independent outer exponents `A` and an
//! inner exponent `β` in the relative interior of `conv(A)`, i.e. all
//! barycentric weights `λ(A, β)` are strictly positive.

use std::cmp::Ordering;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::dual::compare_product;
use crate::error::{Result, SconeError};
use crate::linalg::{nullspace, rank, solve, Mat, Solution};
use crate::num::{parse_rat, rat_str, rat_to_f64, Num, Rat};
use crate::sfun::{Exponent, Parity, Support};

/// Columns are the points, lifted by a trailing row of ones.
pub fn lifted(points: &[&Exponent]) -> Mat {
    let n = points.first().map_or(0, |p| p.dim());
    let mut m: Mat = (0..n)
        .map(|j| points.iter().map(|p| p.0[j].clone()).collect())
        .collect();
    m.push(vec![Rat::one(); points.len()]);
    m
}

pub fn affinely_independent(points: &[&Exponent]) -> bool {
    points.is_empty() || rank(&lifted(points)) == points.len()
}

/// The unique `λ` with `Σλ_α = 1` and `Σλ_α α = β`. Entries may be negative.
pub fn lambda_unique(a: &[Exponent], beta: &Exponent) -> Result<Vec<Rat>> {
    let refs: Vec<&Exponent> = a.iter().collect();
    lambda_unique_refs(&refs, beta)
}

pub fn lambda_unique_refs(a: &[&Exponent], beta: &Exponent) -> Result<Vec<Rat>> {
    if a.is_empty() {
        return Err(SconeError::Geometry("empty outer set".into()));
    }
    let m = lifted(a);
    let mut rhs = beta.0.clone();
    rhs.push(Rat::one());
    match solve(&m, &rhs) {
        Solution::Unique(l) => Ok(l),
        Solution::Many(_) => Err(SconeError::Geometry("outer exponents are affinely dependent".into())),
        Solution::Inconsistent => {
            if affinely_independent(a) {
                Err(SconeError::Geometry(format!("{beta} is not in the affine hull")))
            } else {
                Err(SconeError::Geometry("outer exponents are affinely dependent".into()))
            }
        }
    }
}

pub fn all_positive(l: &[Rat]) -> bool {
    l.iter().all(|x| x.is_positive())
}

pub fn all_nonnegative(l: &[Rat]) -> bool {
    l.iter().all(|x| !x.is_negative())
}

/// `p ∈ conv(A)` for affinely independent `A`.
pub fn in_simplex(a: &[&Exponent], p: &Exponent) -> bool {
    lambda_unique_refs(a, p).map(|l| all_nonnegative(&l)).unwrap_or(false)
}

/// Reducedness counts `(r_e, r_o)` of `(A, β)` against the ambient even set.
pub fn reducedness(outer: &[Exponent], inner: &Exponent, ambient_even: &[Exponent]) -> (usize, usize) {
    let refs: Vec<&Exponent> = outer.iter().collect();
    let mut re = 0;
    let mut ro = 0;
    for p in ambient_even {
        if outer.contains(p) || !in_simplex(&refs, p) {
            continue;
        }
        ro += 1;
        if p != inner {
            re += 1;
        }
    }
    (re, ro)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub outer: Vec<Exponent>,
    pub inner: Exponent,
    pub parity: Parity,
    pub lambda: Vec<Rat>,
    pub r_even: usize,
    pub r_odd: usize,
}

impl Circuit {
    /// Validates `(A, β)` and computes its weights and reducedness counts.
    pub fn new(mut outer: Vec<Exponent>, inner: Exponent, parity: Parity, ambient_even: &[Exponent]) -> Result<Circuit> {
        outer.sort();
        outer.dedup();
        let lambda = lambda_unique(&outer, &inner)?;
        if !all_positive(&lambda) {
            return Err(SconeError::Geometry(format!(
                "{inner} is not in the relative interior of the outer simplex"
            )));
        }
        let (r_even, r_odd) = reducedness(&outer, &inner, ambient_even);
        Ok(Circuit { outer, inner, parity, lambda, r_even, r_odd })
    }

    pub fn is_singleton(&self) -> bool {
        self.outer.len() == 1
    }

    pub fn is_reduced(&self) -> bool {
        match self.parity {
            Parity::Even => self.r_even == 0,
            Parity::Odd => self.r_odd == 0,
        }
    }

    pub fn lambda_f64(&self) -> Vec<f64> {
        self.lambda.iter().map(rat_to_f64).collect()
    }

    fn key(&self) -> (Parity, &Exponent, &Vec<Exponent>) {
        (self.parity, &self.inner, &self.outer)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "outer": self.outer.iter().map(Exponent::to_json).collect::<Vec<_>>(),
            "inner": self.inner.to_json(),
            "parity": self.parity.as_str(),
            "lambda": self.lambda.iter().map(rat_str).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value, ambient_even: &[Exponent]) -> Result<Circuit> {
        let outer = v
            .get("outer")
            .and_then(Value::as_array)
            .ok_or_else(|| SconeError::Parse("circuit needs \"outer\"".into()))?
            .iter()
            .map(Exponent::from_json)
            .collect::<Result<Vec<_>>>()?;
        let inner = Exponent::from_json(
            v.get("inner").ok_or_else(|| SconeError::Parse("circuit needs \"inner\"".into()))?,
        )?;
        let parity = Parity::parse(v.get("parity").and_then(Value::as_str).unwrap_or("even"))?;
        let c = Circuit::new(outer, inner, parity, ambient_even)?;
        if let Some(l) = v.get("lambda").and_then(Value::as_array) {
            let given: Option<Vec<Rat>> = l.iter().map(|x| x.as_str().and_then(parse_rat)).collect();
            if given.as_ref() != Some(&c.lambda) {
                return Err(SconeError::Invalid("stated lambda does not match the circuit".into()));
            }
        }
        Ok(c)
    }
}

/// All circuits over `support` with at most `max_outer` outer exponents, in canonical order.
///
/// Even parity includes the singletons `({β}, β)` for `β ∈ A`; odd parity picks
/// them up naturally for `β ∈ A ∩ B`.
pub fn enumerate_circuits(support: &Support, parity: Parity, reduced_only: bool, max_outer: usize) -> Vec<Circuit> {
    let amb = &support.even;
    let inners: &[Exponent] = match parity {
        Parity::Even => &support.even,
        Parity::Odd => &support.odd,
    };
    let mut out = vec![];
    for k in 1..=max_outer.min(support.n + 1).min(amb.len()) {
        for subset in amb.iter().combinations(k) {
            if k > 1 && !affinely_independent(&subset) {
                continue;
            }
            for beta in inners {
                let Ok(lambda) = lambda_unique_refs(&subset, beta) else {
                    continue;
                };
                if !all_positive(&lambda) {
                    continue;
                }
                let outer: Vec<Exponent> = subset.iter().map(|e| (*e).clone()).collect();
                let (r_even, r_odd) = reducedness(&outer, beta, amb);
                let c = Circuit { outer, inner: beta.clone(), parity, lambda, r_even, r_odd };
                if reduced_only && !c.is_reduced() {
                    continue;
                }
                out.push(c);
            }
        }
    }
    out.sort_by(|a, b| a.key().cmp(&b.key()));
    out
}

/// `Θ = Π (c_α/λ_α)^{λ_α}` over entries with `λ_α ≠ 0`.
pub fn circuit_number(c: &[f64], lambda: &[Rat]) -> f64 {
    let mut s = 0.0;
    for (ci, li) in c.iter().zip(lambda) {
        if li.is_zero() {
            continue;
        }
        let l = rat_to_f64(li);
        if *ci <= 0.0 {
            return 0.0;
        }
        s += l * (ci / l).ln();
    }
    s.exp()
}

/// Same as [`circuit_number`] with float weights.
pub fn circuit_number_f(c: &[f64], lambda: &[f64]) -> f64 {
    let mut s = 0.0;
    for (ci, l) in c.iter().zip(lambda) {
        if *l <= 0.0 {
            continue;
        }
        if *ci <= 0.0 {
            return 0.0;
        }
        s += l * (ci / l).ln();
    }
    s.exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitFunction {
    pub circuit: Circuit,
    pub c: Vec<Num>,
    pub d: Num,
}

impl CircuitFunction {
    pub fn new(circuit: Circuit, c: Vec<Num>, d: Num) -> Result<CircuitFunction> {
        if c.len() != circuit.outer.len() {
            return Err(SconeError::Invalid("one outer coefficient per outer exponent".into()));
        }
        if c.iter().any(|x| x.signum() <= 0) {
            return Err(SconeError::Invalid("outer coefficients must be positive".into()));
        }
        Ok(CircuitFunction { circuit, c, d })
    }

    pub fn theta(&self) -> f64 {
        let c: Vec<f64> = self.c.iter().map(Num::to_f64).collect();
        circuit_number(&c, &self.circuit.lambda)
    }

    pub fn is_exact(&self) -> bool {
        self.c.iter().all(Num::is_exact) && self.d.is_exact()
    }

    /// Compares the inner magnitude that matters (`-d` for even, `|d|` for odd) with `Θ`.
    /// Exact when every coefficient is rational; otherwise uses relative tolerance `tol`.
    pub fn compare_to_theta(&self, tol: f64) -> Ordering {
        let t = match self.circuit.parity {
            Parity::Even => -self.d.clone(),
            Parity::Odd => self.d.abs(),
        };
        if t.signum() <= 0 {
            return Ordering::Less;
        }
        if self.is_exact() {
            let bases: Vec<Rat> = self
                .c
                .iter()
                .zip(&self.circuit.lambda)
                .map(|(c, l)| c.exact().unwrap() / l)
                .collect();
            return compare_product(t.exact().unwrap(), &bases, &self.circuit.lambda);
        }
        let th = self.theta();
        let tv = t.to_f64();
        if (tv - th).abs() <= tol * th.max(tv) {
            Ordering::Equal
        } else if tv < th {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    /// Non-negativity by the circuit number: `-d ≤ Θ` (even), `|d| ≤ Θ` (odd).
    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.compare_to_theta(tol) != Ordering::Greater
    }
}

/// Splits `λ ∈ Λ(A, β)` into a convex combination of vertices of `Λ(A, β)`,
/// each with affinely independent support.
pub fn lambda_vertex_decompose(a: &[Exponent], lambda: &[Rat], beta: &Exponent) -> Result<Vec<(Rat, Vec<Rat>)>> {
    if a.len() != lambda.len() {
        return Err(SconeError::Invalid("lambda length differs from |A|".into()));
    }
    if !all_nonnegative(lambda) {
        return Err(SconeError::Invalid("lambda has a negative entry".into()));
    }
    let sum: Rat = lambda.iter().sum();
    if !sum.is_one() {
        return Err(SconeError::Invalid("lambda does not sum to one".into()));
    }
    for j in 0..beta.dim() {
        let s: Rat = a.iter().zip(lambda).map(|(e, l)| &e.0[j] * l).sum();
        if s != beta.0[j] {
            return Err(SconeError::Invalid("lambda does not reproduce beta".into()));
        }
    }
    let mut out: Vec<(Rat, Vec<Rat>)> = vec![];
    split_rec(a, lambda.to_vec(), Rat::one(), &mut out);
    out.sort_by(|x, y| y.1.cmp(&x.1));
    Ok(out)
}

fn split_rec(a: &[Exponent], lambda: Vec<Rat>, weight: Rat, out: &mut Vec<(Rat, Vec<Rat>)>) {
    let supp: Vec<usize> = (0..a.len()).filter(|&i| lambda[i].is_positive()).collect();
    let pts: Vec<&Exponent> = supp.iter().map(|&i| &a[i]).collect();
    let ns = nullspace(&lifted(&pts), pts.len());
    let Some(z) = ns.into_iter().next() else {
        match out.iter_mut().find(|(_, l)| *l == lambda) {
            Some(entry) => entry.0 += weight,
            None => out.push((weight, lambda)),
        }
        return;
    };
    // both directions stay in Λ until a coordinate hits zero
    let t_minus = supp
        .iter()
        .zip(&z)
        .filter(|(_, zi)| zi.is_positive())
        .map(|(&i, zi)| &lambda[i] / zi)
        .min()
        .unwrap();
    let t_plus = supp
        .iter()
        .zip(&z)
        .filter(|(_, zi)| zi.is_negative())
        .map(|(&i, zi)| -(&lambda[i] / zi))
        .min()
        .unwrap();
    let shifted = |t: &Rat| -> Vec<Rat> {
        let mut l = lambda.clone();
        for (&i, zi) in supp.iter().zip(&z) {
            l[i] = &l[i] + t * zi;
            if l[i].is_negative() {
                l[i] = Rat::zero();
            }
        }
        l
    };
    let lo = shifted(&-t_minus.clone());
    let hi = shifted(&t_plus);
    let total = &t_minus + &t_plus;
    split_rec(a, lo, &weight * &t_plus / &total, out);
    split_rec(a, hi, &weight * &t_minus / &total, out);
}

#[derive(Clone, Debug, PartialEq)]
pub enum Extremality {
    ExtremeEven,
    ExtremeOdd,
    ExtremeSingle,
    NotExtreme(String),
}

impl Extremality {
    pub fn is_extreme(&self) -> bool {
        !matches!(self, Extremality::NotExtreme(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Extremality::ExtremeEven => "extreme-even",
            Extremality::ExtremeOdd => "extreme-odd",
            Extremality::ExtremeSingle => "extreme-single",
            Extremality::NotExtreme(_) => "not-extreme",
        }
    }
}

/// Either a circuit function or a single-exponent term `t|x|^β + s x^β`.
#[derive(Clone, Debug, PartialEq)]
pub enum RayCandidate {
    Circuit(CircuitFunction),
    Monomial { beta: Exponent, abs_coeff: Num, odd_coeff: Num },
}

/// Decides whether the candidate spans an extreme ray of the S-cone over `support`.
pub fn classify_extreme(cand: &RayCandidate, support: &Support, tol: f64) -> Result<Extremality> {
    match cand {
        RayCandidate::Monomial { beta, abs_coeff, odd_coeff } => classify_monomial(beta, abs_coeff, odd_coeff, support),
        RayCandidate::Circuit(cf) => {
            let circ = &cf.circuit;
            if support.even_index(&circ.inner).is_none() && support.odd_index(&circ.inner).is_none() {
                return Err(SconeError::Invalid("inner exponent not in the support".into()));
            }
            if circ.outer.iter().any(|e| support.even_index(e).is_none()) {
                return Err(SconeError::Invalid("outer exponent not in the support".into()));
            }
            if circ.is_singleton() {
                let (a, s) = match circ.parity {
                    Parity::Even => (cf.c[0].clone() + cf.d.clone(), Num::zero()),
                    Parity::Odd => (cf.c[0].clone(), cf.d.clone()),
                };
                return classify_monomial(&circ.inner, &a, &s, support);
            }
            // recompute reducedness against this support
            let fresh = Circuit::new(circ.outer.clone(), circ.inner.clone(), circ.parity, &support.even)?;
            let cmp = cf.compare_to_theta(tol);
            match circ.parity {
                Parity::Even => {
                    if fresh.r_even > 0 {
                        return Ok(Extremality::NotExtreme(format!(
                            "even circuit is not reduced (r_e = {})",
                            fresh.r_even
                        )));
                    }
                    if cf.d.signum() >= 0 || cmp != Ordering::Equal {
                        return Ok(Extremality::NotExtreme("inner coefficient is not -Θ".into()));
                    }
                    Ok(Extremality::ExtremeEven)
                }
                Parity::Odd => {
                    if fresh.r_odd > 0 {
                        return Ok(Extremality::NotExtreme(format!(
                            "odd circuit is not reduced (r_o = {})",
                            fresh.r_odd
                        )));
                    }
                    if cmp != Ordering::Equal {
                        return Ok(Extremality::NotExtreme("|inner coefficient| is not Θ".into()));
                    }
                    Ok(Extremality::ExtremeOdd)
                }
            }
        }
    }
}

fn classify_monomial(beta: &Exponent, t: &Num, s: &Num, support: &Support) -> Result<Extremality> {
    let in_a = support.even_index(beta).is_some();
    let in_b = support.odd_index(beta).is_some();
    if !in_a && !in_b {
        return Err(SconeError::Invalid(format!("{beta} not in the support")));
    }
    if t.is_zero() && s.is_zero() {
        return Ok(Extremality::NotExtreme("zero function".into()));
    }
    if !in_a || t.cmp_num(&s.abs()) == Ordering::Less {
        return Ok(Extremality::NotExtreme("not non-negative".into()));
    }
    if !in_b {
        return Ok(Extremality::ExtremeSingle);
    }
    if s.is_zero() {
        return Ok(Extremality::NotExtreme(
            "|x|^β = ½(|x|^β + x^β) + ½(|x|^β − x^β)".into(),
        ));
    }
    if t.cmp_num(&s.abs()) == Ordering::Equal {
        Ok(Extremality::ExtremeSingle)
    } else {
        Ok(Extremality::NotExtreme("|x|^β ± x^β plus a positive multiple of |x|^β".into()))
    }
}
