//! Dual S-cone membership: product inequalities over circuits or over the
//! vertices of `Λ(A, β)`, the per-pair dual AG cones, and the LP form.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::circuits::enumerate_circuits;
use crate::error::{Result, SconeError};
use crate::lp;
use crate::num::{rat_str, rat_to_f64, Num, Rat};
use crate::oracle::polytope_vertices;
use crate::sfun::{DualVector, Exponent, Parity, Support};

/// Log-domain slack for floating checks.
pub const DUAL_TOL: f64 = 1e-9;

/// Compares `|target|` with `Π bases_i^{λ_i}` exactly.
///
/// With `λ_i = p_i/q`, compares `|target|^q` against `Π bases_i^{p_i}` over the integers.
/// Bases must be non-negative and `λ ≥ 0`.
pub fn power_compare_exact(target: &Rat, bases: &[Rat], lambda: &[Rat]) -> Ordering {
    let t = target.abs();
    let q = lambda.iter().fold(BigInt::one(), |acc, l| acc.lcm(l.denom()));
    let qe = q.to_usize().expect("common denominator too large");
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (b, l) in bases.iter().zip(lambda) {
        if l.is_zero() {
            continue;
        }
        let p = (l * Rat::from_integer(q.clone())).to_integer().to_usize().expect("weight too large");
        if b.is_zero() {
            num = BigInt::zero();
            continue;
        }
        num *= num_traits::pow(b.numer().clone(), p);
        den *= num_traits::pow(b.denom().clone(), p);
    }
    // |t|^q = tn^q / td^q  versus  num / den
    let lhs = num_traits::pow(t.numer().clone(), qe) * &den;
    let rhs = num * num_traits::pow(t.denom().clone(), qe);
    lhs.cmp(&rhs)
}

/// Same result as [`power_compare_exact`], but settles clearly separated cases
/// in log space first so that large denominators in `λ` stay cheap.
pub fn compare_product(target: &Rat, bases: &[Rat], lambda: &[Rat]) -> Ordering {
    let t = target.abs();
    if !t.is_zero() && bases.iter().zip(lambda).all(|(b, l)| l.is_zero() || b.is_positive()) {
        let lhs = ln_rat(&t);
        let rhs: f64 = bases
            .iter()
            .zip(lambda)
            .filter(|(_, l)| !l.is_zero())
            .map(|(b, l)| rat_to_f64(l) * ln_rat(b))
            .sum();
        let gap = 1e-9 * (1.0 + lhs.abs().max(rhs.abs()));
        if lhs < rhs - gap {
            return Ordering::Less;
        }
        if lhs > rhs + gap {
            return Ordering::Greater;
        }
    }
    power_compare_exact(target, bases, lambda)
}

/// `ln r` for `r > 0`, safe for huge numerators and denominators.
pub fn ln_rat(r: &Rat) -> f64 {
    big_ln(r.numer()) - big_ln(r.denom())
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualMode {
    AllLambda,
    Circuits,
    Reduced,
    Lp,
}

impl DualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DualMode::AllLambda => "allLambda",
            DualMode::Circuits => "circuits",
            DualMode::Reduced => "reduced",
            DualMode::Lp => "lp",
        }
    }

    pub fn parse(s: &str) -> Result<DualMode> {
        match s {
            "allLambda" | "all-lambda" => Ok(DualMode::AllLambda),
            "circuits" => Ok(DualMode::Circuits),
            "reduced" => Ok(DualMode::Reduced),
            "lp" => Ok(DualMode::Lp),
            _ => Err(SconeError::Parse(format!("unknown dual mode {s:?}"))),
        }
    }
}

/// A failed inequality `ln|target| ≤ Σ λ_α ln v_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub outer: Vec<Exponent>,
    pub inner: Exponent,
    pub parity: Parity,
    pub lambda: Vec<Rat>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Violation {
    pub fn to_json(&self) -> Value {
        json!({
            "outer": self.outer.iter().map(Exponent::to_json).collect::<Vec<_>>(),
            "inner": self.inner.to_json(),
            "parity": self.parity.as_str(),
            "lambda": self.lambda.iter().map(rat_str).collect::<Vec<_>>(),
            "lhs": finite_or_str(self.lhs),
            "rhs": finite_or_str(self.rhs),
        })
    }
}

fn finite_or_str(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualMembershipReport {
    pub member: bool,
    pub mode: DualMode,
    pub exact: bool,
    /// An even exponent with `v_α < 0`.
    pub negative: Option<Exponent>,
    pub violated: Option<Violation>,
}

impl DualMembershipReport {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "kind": "dual-membership",
            "member": self.member,
            "mode": self.mode.as_str(),
            "exact": self.exact,
        });
        if let Some(e) = &self.negative {
            v["negative"] = e.to_json();
        }
        if let Some(c) = &self.violated {
            v["violated"] = c.to_json();
        }
        v
    }
}

fn ln_abs(x: &Num) -> f64 {
    let a = x.to_f64().abs();
    if a == 0.0 {
        f64::NEG_INFINITY
    } else {
        match x {
            Num::Exact(r) => ln_rat(&r.abs()),
            Num::Float(_) => a.ln(),
        }
    }
}

/// `Σ λ ln b` with `0·ln 0 = 0`.
fn weighted_log(bases: &[&Num], lambda: &[Rat]) -> f64 {
    let mut s = 0.0;
    for (b, l) in bases.iter().zip(lambda) {
        if l.is_zero() {
            continue;
        }
        s += rat_to_f64(l) * ln_abs(b);
    }
    s
}

/// Checks `|target| ≤ Π bases^λ`; returns `(holds, lhs, rhs)` in log form.
pub fn check_product(target: &Num, bases: &[&Num], lambda: &[Rat], exact: bool) -> (bool, f64, f64) {
    let lhs = ln_abs(target);
    let rhs = weighted_log(bases, lambda);
    if target.is_zero() {
        return (true, lhs, rhs);
    }
    if exact {
        let bs: Vec<Rat> = bases.iter().map(|b| b.to_rat()).collect();
        let holds = compare_product(&target.to_rat(), &bs, lambda) != Ordering::Greater;
        return (holds, lhs, rhs);
    }
    if rhs == f64::NEG_INFINITY {
        return (false, lhs, rhs);
    }
    (lhs <= rhs + DUAL_TOL * (1.0 + rhs.abs()), lhs, rhs)
}

/// Decides `u ∈ CS(A, B)*` by the product inequalities of the chosen family.
/// Exact whenever every entry of `u` is rational.
pub fn dual_membership(u: &DualVector, support: &Support, mode: DualMode) -> Result<DualMembershipReport> {
    if &u.support != support {
        return Err(SconeError::SupportMismatch("dual vector is indexed by a different support".into()));
    }
    let exact = u.is_exact();
    let mut report = DualMembershipReport { member: true, mode, exact, negative: None, violated: None };
    if let Some(i) = u.v.iter().position(|x| x.signum() < 0) {
        report.member = false;
        report.negative = Some(support.even[i].clone());
        return Ok(report);
    }
    let n = support.n;
    match mode {
        DualMode::Reduced | DualMode::Circuits => {
            let reduced = mode == DualMode::Reduced;
            for parity in [Parity::Even, Parity::Odd] {
                for c in enumerate_circuits(support, parity, reduced, n + 1) {
                    if parity == Parity::Even && c.is_singleton() {
                        continue;
                    }
                    let target = inner_value(u, support, &c.inner, parity);
                    let bases: Vec<&Num> = c.outer.iter().map(|e| &u.v[support.even_index(e).unwrap()]).collect();
                    let (ok, lhs, rhs) = check_product(target, &bases, &c.lambda, exact);
                    if !ok {
                        report.member = false;
                        report.violated =
                            Some(Violation { outer: c.outer, inner: c.inner, parity, lambda: c.lambda, lhs, rhs });
                        return Ok(report);
                    }
                }
            }
        }
        DualMode::AllLambda => {
            if let Some(v) = first_vertex_violation(u, support, exact, None) {
                report.member = false;
                report.violated = Some(v);
            }
        }
        DualMode::Lp => {
            for parity in [Parity::Even, Parity::Odd] {
                let inners = match parity {
                    Parity::Even => &support.even,
                    Parity::Odd => &support.odd,
                };
                for beta in inners {
                    let (a, v) = outer_set(u, support, beta, parity);
                    let target = inner_value(u, support, beta, parity);
                    if !dual_lp_characterization(&v, target, &a, beta, LpVariant::EntropyShift) {
                        report.member = false;
                        report.violated = first_vertex_violation(u, support, exact, Some((beta, parity)));
                        return Ok(report);
                    }
                }
            }
        }
    }
    Ok(report)
}

fn inner_value<'a>(u: &'a DualVector, support: &Support, beta: &Exponent, parity: Parity) -> &'a Num {
    match parity {
        Parity::Even => &u.v[support.even_index(beta).unwrap()],
        Parity::Odd => &u.w[support.odd_index(beta).unwrap()],
    }
}

/// Outer candidates for inner exponent `β`: all of `A`, minus `β` itself for even parity.
fn outer_set(u: &DualVector, support: &Support, beta: &Exponent, parity: Parity) -> (Vec<Exponent>, Vec<Num>) {
    support
        .even
        .iter()
        .zip(&u.v)
        .filter(|(e, _)| parity == Parity::Odd || *e != beta)
        .map(|(e, v)| (e.clone(), v.clone()))
        .unzip()
}

fn first_vertex_violation(
    u: &DualVector,
    support: &Support,
    exact: bool,
    only: Option<(&Exponent, Parity)>,
) -> Option<Violation> {
    for parity in [Parity::Even, Parity::Odd] {
        let inners = match parity {
            Parity::Even => &support.even,
            Parity::Odd => &support.odd,
        };
        for beta in inners {
            if let Some((b, p)) = only {
                if b != beta || p != parity {
                    continue;
                }
            }
            let (a, v) = outer_set(u, support, beta, parity);
            let target = inner_value(u, support, beta, parity);
            for lam in polytope_vertices(&a, beta) {
                let idx: Vec<usize> = (0..a.len()).filter(|&i| !lam[i].is_zero()).collect();
                let bases: Vec<&Num> = idx.iter().map(|&i| &v[i]).collect();
                let l: Vec<Rat> = idx.iter().map(|&i| lam[i].clone()).collect();
                let (ok, lhs, rhs) = check_product(target, &bases, &l, exact);
                if !ok {
                    return Some(Violation {
                        outer: idx.iter().map(|&i| a[i].clone()).collect(),
                        inner: beta.clone(),
                        parity,
                        lambda: l,
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    None
}

/// Membership in the dual of the non-negative AG functions on `(A, β)`.
pub fn dual_ag_membership(v: &[Num], w_beta: &Num, a: &[Exponent], beta: &Exponent, parity: Parity) -> bool {
    if v.iter().any(|x| x.signum() < 0) {
        return false;
    }
    if parity == Parity::Even && w_beta.signum() < 0 {
        return false;
    }
    let exact = v.iter().all(Num::is_exact) && w_beta.is_exact();
    polytope_vertices(a, beta).iter().all(|lam| {
        let idx: Vec<usize> = (0..a.len()).filter(|&i| !lam[i].is_zero()).collect();
        let bases: Vec<&Num> = idx.iter().map(|&i| &v[i]).collect();
        let l: Vec<Rat> = idx.iter().map(|&i| lam[i].clone()).collect();
        check_product(w_beta, &bases, &l, exact).0
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpVariant {
    /// `|w| ln(|w|/v_α) ≤ (β−α)ᵀτ` for all `α`.
    EntropyShift,
    /// `ln(v*/v_α) ≤ (β−α)ᵀσ` with `v* = |w|`.
    ScaledTau,
}

/// Feasibility form of the per-pair dual condition, for `v ≥ 0`.
///
/// `w = 0` is always feasible; a zero `v_α` with `w ≠ 0` never is. Solved in
/// floating point: the right-hand sides are logarithms.
pub fn dual_lp_characterization(v: &[Num], w_beta: &Num, a: &[Exponent], beta: &Exponent, variant: LpVariant) -> bool {
    if v.iter().any(|x| x.signum() < 0) {
        return false;
    }
    if w_beta.is_zero() {
        return true;
    }
    if v.iter().any(Num::is_zero) {
        return false;
    }
    let lw = ln_abs(w_beta);
    let wabs = w_beta.to_f64().abs();
    let b = beta.to_f64();
    let rows: Vec<Vec<f64>> = a.iter().map(|al| al.to_f64().iter().zip(&b).map(|(x, y)| x - y).collect()).collect();
    let mut rhs: Vec<f64> = v
        .iter()
        .map(|vi| {
            let r = ln_abs(vi) - lw;
            match variant {
                LpVariant::EntropyShift => wabs * r,
                LpVariant::ScaledTau => r,
            }
        })
        .collect();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for r in rhs.iter_mut() {
        *r += DUAL_TOL * scale;
    }
    lp::feasible(&rows, &rhs, beta.dim()).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, rat_int};
    use proptest::prelude::*;

    fn e1(x: i64) -> Exponent {
        Exponent::from_ints(&[x])
    }

    fn uni_support(even: &[i64], odd: &[i64]) -> Support {
        Support::new(1, even.iter().map(|&x| e1(x)).collect(), odd.iter().map(|&x| e1(x)).collect()).unwrap()
    }

    #[test]
    fn power_compare_examples() {
        let o = power_compare_exact(&rat(5, 9), &[rat(25, 18), rat(1, 4)], &[rat(1, 2), rat(1, 2)]);
        assert_eq!(o, Ordering::Less);
        assert_eq!(power_compare_exact(&rat_int(1), &[rat_int(1), rat_int(1)], &[rat(1, 3), rat(2, 3)]), Ordering::Equal);
        assert_eq!(power_compare_exact(&rat_int(2), &[rat_int(1), rat_int(1)], &[rat(1, 2), rat(1, 2)]), Ordering::Greater);
        assert_eq!(power_compare_exact(&rat_int(-2), &[rat_int(4), rat_int(1)], &[rat(1, 2), rat(1, 2)]), Ordering::Equal);
        assert_eq!(power_compare_exact(&rat(1, 100), &[rat_int(0), rat_int(1)], &[rat(1, 2), rat(1, 2)]), Ordering::Greater);
    }

    #[test]
    fn remark_vector_is_not_a_member() {
        let s = uni_support(&[0, 1, 2], &[]);
        let u = DualVector::new(s.clone(), vec![Num::int(1), Num::int(-2), Num::int(1)], vec![]).unwrap();
        let r = dual_membership(&u, &s, DualMode::Reduced).unwrap();
        assert!(!r.member);
        // the other reading: v1 = -2 on the odd exponent 1
        let s2 = uni_support(&[0, 2], &[1]);
        let u2 = DualVector::new(s2.clone(), vec![Num::int(1), Num::int(1)], vec![Num::int(-2)]).unwrap();
        for mode in [DualMode::Reduced, DualMode::Circuits, DualMode::AllLambda, DualMode::Lp] {
            let r = dual_membership(&u2, &s2, mode).unwrap();
            assert!(!r.member, "{mode:?}");
            let c = r.violated.unwrap();
            assert_eq!(c.outer, vec![e1(0), e1(2)]);
            assert_eq!(c.inner, e1(1));
        }
    }

    #[test]
    fn point_functional_and_zero_are_members() {
        let s = uni_support(&[0, 1, 2, 4], &[1, 3]);
        let t = rat(1, 2);
        let pw = |k: i64| Num::Exact(num_traits::pow(t.clone(), k as usize));
        let u = DualVector::new(s.clone(), vec![pw(0), pw(1), pw(2), pw(4)], vec![pw(1), pw(3)]).unwrap();
        for mode in [DualMode::Reduced, DualMode::Circuits, DualMode::AllLambda, DualMode::Lp] {
            assert!(dual_membership(&u, &s, mode).unwrap().member);
            assert!(dual_membership(&DualVector::zero(&s), &s, mode).unwrap().member);
        }
    }

    #[test]
    fn negative_entry_is_immediate_rejection() {
        let s = uni_support(&[0, 2], &[]);
        let u = DualVector::new(s.clone(), vec![Num::int(1), Num::int(-1)], vec![]).unwrap();
        let r = dual_membership(&u, &s, DualMode::AllLambda).unwrap();
        assert_eq!(r.negative, Some(e1(2)));
    }

    #[test]
    fn ag_dual_cone_examples() {
        let a = [e1(0), e1(2)];
        let v = [Num::int(1), Num::int(1)];
        assert!(dual_ag_membership(&v, &Num::int(1), &a, &e1(1), Parity::Even));
        assert!(!dual_ag_membership(&v, &Num::int(-1), &a, &e1(1), Parity::Even));
        assert!(dual_ag_membership(&v, &Num::int(-1), &a, &e1(1), Parity::Odd));
    }

    #[test]
    fn lp_examples() {
        let a = [e1(0), e1(2)];
        let v = [Num::int(1), Num::int(1)];
        for var in [LpVariant::EntropyShift, LpVariant::ScaledTau] {
            assert!(dual_lp_characterization(&v, &Num::zero(), &a, &e1(1), var));
            assert!(!dual_lp_characterization(&[Num::int(0), Num::int(1)], &Num::int(1), &a, &e1(1), var));
            assert!(!dual_lp_characterization(&v, &Num::int(2), &a, &e1(1), var));
            assert!(dual_lp_characterization(&v, &Num::int(1), &a, &e1(1), var));
            // β outside conv(A): no constraint at all
            assert!(dual_lp_characterization(&v, &Num::int(50), &a, &e1(3), var));
        }
    }

    proptest! {
        #[test]
        fn point_functionals_lie_in_the_dual(x in 0.05f64..3.0, neg in any::<bool>()) {
            let s = uni_support(&[0, 1, 2, 3, 6], &[1, 3, 5]);
            let xs = if neg { -x } else { x };
            let u = DualVector::point(&s, &[xs]);
            for mode in [DualMode::Reduced, DualMode::Circuits, DualMode::AllLambda, DualMode::Lp] {
                prop_assert!(dual_membership(&u, &s, mode).unwrap().member);
            }
        }

        #[test]
        fn exact_and_float_agree_off_the_boundary(v in prop::collection::vec(1i64..20, 3), w in -20i64..20) {
            let s = uni_support(&[0, 2, 4], &[1]);
            let ex = DualVector::new(s.clone(), v.iter().map(|&x| Num::int(x)).collect(), vec![Num::int(w)]).unwrap();
            let fl = DualVector::new(s.clone(), v.iter().map(|&x| Num::Float(x as f64)).collect(),
                                     vec![Num::Float(w as f64)]).unwrap();
            let a = dual_membership(&ex, &s, DualMode::Reduced).unwrap();
            let b = dual_membership(&fl, &s, DualMode::Reduced).unwrap();
            // integers make equality cases exact in both modes
            prop_assert_eq!(a.member, b.member);
        }
    }
}
