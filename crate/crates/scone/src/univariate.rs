//! Univariate polynomials: the SAGE representative, its first positive root,
//! the approximation sequence `p_N = f + (c*/x₀^N) x^N`, the exact Putinar
//! counterexample check and a small quadratic-module search.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::dual::{dual_membership, DualMode};
use crate::error::{Result, SconeError};
use crate::member::{scone_membership, AgDecomposition, Membership, MembershipConfig};
use crate::num::{rat, rat_from_f64, rat_str, Num, Rat};
use crate::sfun::{pair, DualVector, Exponent, SFunction, Support};

/// `Σ c_i x^i`, coefficients indexed by degree.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    pub coeffs: Vec<Num>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Num>) -> UniPoly {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Num::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Num::zero());
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> UniPoly {
        UniPoly::new(c.iter().map(|&x| Num::int(x)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> Num {
        self.coeffs.get(i).cloned().unwrap_or_else(Num::zero)
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(Num::is_exact)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    /// Exact value at a rational point; `None` for floating coefficients.
    pub fn eval_exact(&self, x: &Rat) -> Option<Rat> {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.exact()?;
        }
        Some(acc)
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    /// Multiplication by a polynomial with small integer coefficients.
    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        let mut out = vec![Num::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        UniPoly::new(out)
    }

    /// Quotient and remainder by a monic divisor.
    pub fn div_monic(&self, divisor: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = divisor.degree();
        let lead = divisor.coeff(dd);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (UniPoly::new(vec![Num::zero()]), self.clone());
        }
        let mut q = vec![Num::zero(); rem.len() - dd];
        for k in (0..q.len()).rev() {
            let t = match (&rem[k + dd], &lead) {
                (Num::Exact(a), Num::Exact(b)) => Num::Exact(a / b),
                (a, b) => Num::Float(a.to_f64() / b.to_f64()),
            };
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - t.clone() * dc.clone();
            }
            q[k] = t;
        }
        rem.truncate(dd.max(1));
        (UniPoly::new(q), UniPoly::new(rem))
    }

    /// The S-function with `|x|^i` for even and `x^i` for odd degrees; zero
    /// coefficients are left out except for the constant term.
    pub fn to_sfunction(&self) -> Result<SFunction> {
        let mut even = vec![];
        let mut odd = vec![];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && i != 0 {
                continue;
            }
            if i % 2 == 0 {
                even.push((i as i64, c.clone()));
            } else {
                odd.push((i as i64, c.clone()));
            }
        }
        SFunction::univariate(&even, &odd)
    }

    /// Reads a univariate S-function with integer exponents.
    pub fn from_sfunction(f: &SFunction) -> Result<UniPoly> {
        if f.n() != 1 {
            return Err(SconeError::Invalid("expected a univariate function".into()));
        }
        let mut coeffs: Vec<Num> = vec![];
        let terms = f.support.even.iter().zip(&f.c).chain(f.support.odd.iter().zip(&f.d));
        for (e, c) in terms {
            let q = &e.0[0];
            if !q.is_integer() || q.is_negative() {
                return Err(SconeError::Invalid(format!("{e} is not a polynomial degree")));
            }
            let i: usize = q.to_integer().try_into().map_err(|_| SconeError::Invalid("degree too large".into()))?;
            if coeffs.len() <= i {
                coeffs.resize(i + 1, Num::zero());
            }
            coeffs[i] = coeffs[i].clone() + c.clone();
        }
        Ok(UniPoly::new(coeffs))
    }

    pub fn to_json(&self) -> Value {
        json!({ "coeffs": self.coeffs.iter().map(Num::to_json).collect::<Vec<_>>() })
    }

    /// Accepts `{"coeffs": [...]}` (lowest degree first) or an S-function document.
    pub fn from_json(v: &Value) -> Result<UniPoly> {
        if let Some(list) = v.get("coeffs").and_then(Value::as_array) {
            let c = list
                .iter()
                .map(|x| Num::from_json(x).ok_or_else(|| SconeError::Parse(format!("bad coefficient {x}"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(UniPoly::new(c));
        }
        UniPoly::from_sfunction(&SFunction::from_json(v)?)
    }
}

/// `(x − 1/2)⁴ + 1/1000`.
pub fn putinar_polynomial() -> UniPoly {
    UniPoly::new(vec![
        Num::frac(127, 2000),
        Num::frac(-1, 2),
        Num::frac(3, 2),
        Num::int(-2),
        Num::int(1),
    ])
}

/// `f̂ = c₀ − Σ_{0<i<d} |c_i| x^i + c_d x^d`.
pub fn sage_representative(f: &UniPoly) -> Result<UniPoly> {
    let d = f.degree();
    if d < 2 {
        return Err(SconeError::Invalid("degree must be at least 2".into()));
    }
    if f.coeff(0).signum() <= 0 {
        return Err(SconeError::Invalid("constant coefficient must be positive".into()));
    }
    let mut c = f.coeffs.clone();
    for ci in c.iter_mut().take(d).skip(1) {
        *ci = -ci.abs();
    }
    Ok(UniPoly::new(c))
}

fn negative_at(p: &UniPoly, x: f64) -> bool {
    let v = p.eval(x);
    if !p.is_exact() {
        return v < 0.0;
    }
    // floats only nominate, the sign is decided exactly
    if v > 1e-9 * (1.0 + p.coeff(0).to_f64().abs()) {
        return false;
    }
    match rat_from_f64(x).and_then(|r| p.eval_exact(&r)) {
        Some(r) => r.is_negative(),
        None => v < 0.0,
    }
}

/// `inf{x > 0 : f̂(x) < 0}`, or `+∞` when `f̂ ≥ 0` on the positive axis.
pub fn compute_x0(fhat: &UniPoly) -> Result<f64> {
    let d = fhat.degree();
    let lead = fhat.coeff(d).to_f64();
    if fhat.coeff(0).signum() <= 0 || lead < 0.0 {
        return Err(SconeError::Invalid("expected positive constant and non-negative leading coefficient".into()));
    }
    if lead == 0.0 {
        return Err(SconeError::Invalid("leading coefficient vanishes".into()));
    }
    let bound = 1.0 + fhat.coeffs[..d].iter().map(|c| (c.to_f64() / lead).abs()).fold(0.0, f64::max);
    let mut grid: Vec<f64> = (0..=240).map(|k| bound * 10f64.powf(-12.0 + k as f64 * 0.05)).collect();
    grid.extend((1..=20_000).map(|k| bound * k as f64 / 20_000.0));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut prev = 0.0;
    for &x in &grid {
        if negative_at(fhat, x) {
            let (mut lo, mut hi) = (prev, x);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if negative_at(fhat, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = x;
    }
    Ok(f64::INFINITY)
}

/// One member of the approximating sequence with its certificate.
#[derive(Clone, Debug)]
pub struct ApproxStep {
    /// The even degree actually used (`N − 1` for odd `N`).
    pub n: usize,
    pub x0: f64,
    pub c_star: f64,
    /// Coefficient of `x^N` in `p_N − f`, that is `c*/x₀^N`.
    pub coeff: Num,
    pub p: UniPoly,
    pub cert: AgDecomposition,
}

impl ApproxStep {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": "approx-step",
            "N": self.n,
            "x0": self.x0,
            "c_star": self.c_star,
            "coeff": self.coeff.to_json(),
            "p": self.p.to_json(),
            "certificate": self.cert.to_json(),
        })
    }
}

/// `p_N` for a given `c*`.
pub fn approx_poly(f: &UniPoly, n: usize, x0: f64, c_star: f64) -> (UniPoly, Num) {
    let k = c_star / x0.powi(n as i32);
    let coeff = if f.is_exact() {
        rat_from_f64(k).map(Num::Exact).unwrap_or(Num::Float(k))
    } else {
        Num::Float(k)
    };
    let mut mono = vec![Num::zero(); n + 1];
    mono[n] = coeff.clone();
    (f.add(&UniPoly::new(mono)), coeff)
}

/// Smallest `c*` (up to the relative tolerance `c_tol`) for which `p_N` is certified.
pub fn approx_step(f: &UniPoly, n: usize, c_tol: f64, cfg: &MembershipConfig) -> Result<ApproxStep> {
    let d = f.degree();
    let n = if n % 2 == 1 { n - 1 } else { n };
    if n <= d {
        return Err(SconeError::Invalid(format!("N must exceed the degree {d}")));
    }
    let x0 = compute_x0(&sage_representative(f)?)?;
    if !x0.is_finite() {
        return Err(SconeError::NotApplicable("f̂ is non-negative on the positive axis, so f itself is SONC".into()));
    }
    let certify = |c: f64| -> Result<Option<(UniPoly, Num, AgDecomposition)>> {
        let (p, coeff) = approx_poly(f, n, x0, c);
        match scone_membership(&p.to_sfunction()?, cfg)? {
            Membership::Certified(dec) => Ok(Some((p, coeff, dec))),
            _ => Ok(None),
        }
    };
    let cap = 10.0 * (1.0 + f.coeffs.iter().map(|c| c.to_f64().abs()).sum::<f64>()) * 2.0;
    let Some(mut best) = certify(cap)? else {
        return Err(SconeError::Solver(format!("no certified c* up to the cap {cap}")));
    };
    let (mut lo, mut hi) = (0.0, cap);
    // halve first, the threshold can sit many orders of magnitude below the cap
    for _ in 0..1000 {
        match certify(hi / 2.0)? {
            Some(b) if hi / 2.0 > 0.0 => {
                hi /= 2.0;
                best = b;
            }
            _ => {
                lo = hi / 2.0;
                break;
            }
        }
    }
    while hi - lo > c_tol * hi {
        let mid = 0.5 * (lo + hi);
        match certify(mid)? {
            Some(b) => {
                hi = mid;
                best = b;
            }
            None => lo = mid,
        }
    }
    let (p, coeff, cert) = best;
    Ok(ApproxStep { n, x0, c_star: hi, coeff, p, cert })
}

/// The support `({0,2,…}, {1,3,…})` of polynomials of degree at most `r`.
pub fn poly_support(r: usize) -> Support {
    let even = (0..=r).step_by(2).map(|i| Exponent::from_ints(&[i as i64])).collect();
    let odd = (1..=r).step_by(2).map(|i| Exponent::from_ints(&[i as i64])).collect();
    Support::new(1, even, odd).expect("degree supports are valid")
}

/// Reads a coefficient vector `(u_0, …, u_r)` as a functional on degree-`r` polynomials.
pub fn poly_functional(u: &[Rat]) -> DualVector {
    let r = u.len() - 1;
    let v = (0..=r).step_by(2).map(|i| Num::Exact(u[i].clone())).collect();
    let w = (1..=r).step_by(2).map(|i| Num::Exact(u[i].clone())).collect();
    DualVector::new(poly_support(r), v, w).expect("sizes match")
}

#[derive(Clone, Debug)]
pub struct PutinarReport {
    pub d: usize,
    pub v: Vec<Rat>,
    pub pairing: Rat,
    /// Pairing with `(x − 1/2)⁴` alone.
    pub pairing_unshifted: Rat,
    pub checks: Vec<(String, bool)>,
}

impl PutinarReport {
    pub fn holds(&self) -> bool {
        self.pairing.is_negative() && self.checks.iter().all(|c| c.1)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": "putinar-report",
            "d": self.d,
            "v": self.v.iter().map(rat_str).collect::<Vec<_>>(),
            "pairing": rat_str(&self.pairing),
            "pairing_unshifted": rat_str(&self.pairing_unshifted),
            "checks": self.checks.iter().map(|(n, ok)| json!({ "name": n, "member": ok })).collect::<Vec<_>>(),
            "holds": self.holds(),
        })
    }
}

/// Exact proof that `(x − 1/2)⁴ + 1/1000` has no representation
/// `p₀ + x p₁ + (1 − x) p₂ + x(1 − x) p₃` with SONC `p_i` of degree at most `d`.
pub fn putinar_verify(d: usize) -> Result<PutinarReport> {
    if d < 4 {
        return Err(SconeError::Invalid("d must be at least 4".into()));
    }
    let mut v = vec![rat(25, 18), rat(5, 9)];
    let mut p = rat(1, 4);
    for _ in 2..=d + 2 {
        v.push(p.clone());
        p /= Rat::from_integer(2.into());
    }
    let f = putinar_polynomial();
    let pair_with = |g: &UniPoly| -> Rat {
        g.coeffs.iter().enumerate().map(|(i, c)| &v[i] * c.exact().unwrap()).sum()
    };
    let pairing = pair_with(&f);
    let unshifted = f.add(&UniPoly::new(vec![Num::frac(-1, 1000)]));
    let pairing_unshifted = pair_with(&unshifted);
    // cross-check the pairing through the S-function machinery
    let mut full = vec![Num::zero(); d + 3];
    for (i, c) in f.coeffs.iter().enumerate() {
        full[i] = c.clone();
    }
    let sf = SFunction::new(
        poly_support(d + 2),
        (0..=d + 2).step_by(2).map(|i| full[i].clone()).collect(),
        (1..=d + 2).step_by(2).map(|i| full[i].clone()).collect(),
    )?;
    if pair(&poly_functional(&v), &sf)? != Num::Exact(pairing.clone()) {
        return Err(SconeError::Solver("pairing mismatch between the two evaluations".into()));
    }
    let shifted: Vec<Rat> = v[1..].to_vec();
    let diff: Vec<Rat> = (0..=d + 1).map(|i| &v[i] - &v[i + 1]).collect();
    let xx: Vec<Rat> = (0..=d).map(|i| &v[i + 1] - &v[i + 2]).collect();
    let mut checks = vec![];
    for (name, u) in [
        ("v in C(d+2)*", &v),
        ("shifted vector in C(d+1)*", &shifted),
        ("difference vector in C(d+1)*", &diff),
        ("x(1-x) vector in C(d)*", &xx),
    ] {
        let rep = dual_membership(&poly_functional(u), &poly_support(u.len() - 1), DualMode::AllLambda)?;
        if !rep.exact {
            return Err(SconeError::Solver("dual check fell back to floating point".into()));
        }
        checks.push((name.to_string(), rep.member));
    }
    Ok(PutinarReport { d, v, pairing, pairing_unshifted, checks })
}

/// A representation `f = p₀ + x p₁ + (1 − x) p₂ + x(1 − x) p₃` with certified `p_i`.
#[derive(Clone, Debug)]
pub struct QModuleCertificate {
    pub parts: Vec<(UniPoly, AgDecomposition)>,
}

impl QModuleCertificate {
    pub fn to_json(&self) -> Value {
        let names = ["p0", "p1", "p2", "p3"];
        let mut v = json!({ "kind": "qmodule-certificate" });
        for (name, (p, cert)) in names.iter().zip(&self.parts) {
            v[*name] = json!({ "poly": p.to_json(), "certificate": cert.to_json() });
        }
        v
    }
}

#[derive(Clone, Debug)]
pub enum QModuleResult {
    Found(QModuleCertificate),
    NoCertificateFound { tried: usize },
}

fn certify_poly(p: &UniPoly, cfg: &MembershipConfig) -> Result<Option<AgDecomposition>> {
    if p.coeffs.iter().all(Num::is_zero) {
        return Ok(Some(AgDecomposition { support: p.to_sfunction()?.support, parts: vec![], remainder: vec![] }));
    }
    match scone_membership(&p.to_sfunction()?, cfg)? {
        Membership::Certified(d) => Ok(Some(d)),
        _ => Ok(None),
    }
}

/// Best-effort search over a fixed family of candidate splittings: `f` itself,
/// division by `x`, by `1 − x`, and by `x(1 − x)` with a linear remainder
/// absorbed by constant multipliers of `x` and `1 − x`.
pub fn qmodule_search(f: &UniPoly, d: usize, cfg: &MembershipConfig) -> Result<QModuleResult> {
    if d > 64 {
        return Err(SconeError::Invalid("degree cap is 64".into()));
    }
    let zero = UniPoly::new(vec![Num::zero()]);
    let x = UniPoly::from_ints(&[0, 1]);
    let one_minus_x = UniPoly::from_ints(&[1, -1]);
    let xx = x.mul(&one_minus_x);
    let mut candidates: Vec<[UniPoly; 4]> = vec![[f.clone(), zero.clone(), zero.clone(), zero.clone()]];
    // f = f(0) + x q
    let (q, r) = f.div_monic(&x);
    candidates.push([r, q, zero.clone(), zero.clone()]);
    // f = f(1) + (1 − x)(−q′) where f = (x − 1) q′ + f(1)
    let (q, r) = f.div_monic(&UniPoly::from_ints(&[-1, 1]));
    candidates.push([r, zero.clone(), UniPoly::new(q.coeffs.iter().map(|c| -c.clone()).collect()), zero.clone()]);
    // f = x(1 − x) q + r₀ + r₁ x with r₀(1 − x) + (r₀ + r₁) x
    let (q, r) = f.div_monic(&UniPoly::from_ints(&[0, -1, 1]));
    let (r0, r1) = (r.coeff(0), r.coeff(1));
    candidates.push([
        zero.clone(),
        UniPoly::new(vec![r0.clone() + r1]),
        UniPoly::new(vec![r0]),
        UniPoly::new(q.coeffs.iter().map(|c| -c.clone()).collect()),
    ]);
    let tried = candidates.len();
    'next: for cand in candidates {
        let degs = [cand[0].degree(), cand[1].degree(), cand[2].degree(), cand[3].degree()];
        if degs.iter().any(|&g| g > d) {
            continue;
        }
        let total = cand[0].add(&x.mul(&cand[1])).add(&one_minus_x.mul(&cand[2])).add(&xx.mul(&cand[3]));
        let diff = total.add(&UniPoly::new(f.coeffs.iter().map(|c| -c.clone()).collect()));
        if diff.coeffs.iter().any(|c| c.to_f64().abs() > 1e-12) {
            continue;
        }
        let mut parts = vec![];
        for p in cand {
            match certify_poly(&p, cfg)? {
                Some(cert) => parts.push((p, cert)),
                None => continue 'next,
            }
        }
        return Ok(QModuleResult::Found(QModuleCertificate { parts }));
    }
    Ok(QModuleResult::NoCertificateFound { tried })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representative_of_putinar_polynomial() {
        let fh = sage_representative(&putinar_polynomial()).unwrap();
        assert_eq!(
            fh,
            UniPoly::new(vec![Num::frac(127, 2000), Num::frac(-1, 2), Num::frac(-3, 2), Num::int(-2), Num::int(1)])
        );
        let plain = UniPoly::from_ints(&[1, 0, 1]);
        assert_eq!(sage_representative(&plain).unwrap(), plain);
        assert!(sage_representative(&UniPoly::from_ints(&[0, 0, 1])).is_err());
    }

    #[test]
    fn first_root_of_representative() {
        let fh = sage_representative(&putinar_polynomial()).unwrap();
        let x0 = compute_x0(&fh).unwrap();
        assert!(fh.eval(0.09) > 0.0 && fh.eval(0.1) < 0.0);
        assert!(x0 > 0.09 && x0 < 0.1, "{x0}");
        assert!(fh.eval(x0 - 1e-9) > 0.0 && fh.eval(x0 + 1e-9) < 0.0);
        assert_eq!(compute_x0(&UniPoly::from_ints(&[1, 0, 0, 0, 1])).unwrap(), f64::INFINITY);
        assert_eq!(compute_x0(&UniPoly::from_ints(&[1, -2, 1])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn putinar_pairings_are_exact() {
        for d in [4, 20] {
            let rep = putinar_verify(d).unwrap();
            assert_eq!(rep.pairing, rat(-1, 480));
            assert_eq!(rep.pairing_unshifted, rat(-1, 288));
            assert!(rep.holds(), "{:?}", rep.checks);
        }
    }

    #[test]
    fn qmodule_trivial_cases() {
        let cfg = MembershipConfig::default();
        match qmodule_search(&UniPoly::from_ints(&[1, 1]), 2, &cfg).unwrap() {
            QModuleResult::Found(c) => {
                assert_eq!(c.parts[0].0, UniPoly::from_ints(&[1]));
                assert_eq!(c.parts[1].0, UniPoly::from_ints(&[1]));
            }
            r => panic!("{r:?}"),
        }
        match qmodule_search(&UniPoly::from_ints(&[0, 1, -1]), 2, &cfg).unwrap() {
            QModuleResult::Found(c) => assert_eq!(c.parts[3].0, UniPoly::from_ints(&[1])),
            r => panic!("{r:?}"),
        }
        assert!(matches!(
            qmodule_search(&putinar_polynomial(), 6, &cfg).unwrap(),
            QModuleResult::NoCertificateFound { .. }
        ));
    }

    #[test]
    fn approximation_gap_identity() {
        let f = putinar_polynomial();
        let step = approx_step(&f, 10, 1e-6, &MembershipConfig::default()).unwrap();
        assert!(step.c_star > 0.0);
        for i in 0..10 {
            assert_eq!(step.p.coeff(i), f.coeff(i));
        }
        let x = 0.9 * step.x0;
        let gap = (step.p.eval(x) - f.eval(x)).abs();
        assert!((gap - step.c_star * 0.9f64.powi(10)).abs() < 1e-12);
        let below = approx_poly(&f, 10, step.x0, step.c_star * 0.5).0;
        assert!(!scone_membership(&below.to_sfunction().unwrap(), &MembershipConfig::default())
            .unwrap()
            .is_certified());
    }

    #[test]
    fn division_round_trips() {
        let f = putinar_polynomial();
        let dv = UniPoly::from_ints(&[0, -1, 1]);
        let (q, r) = f.div_monic(&dv);
        assert_eq!(q.mul(&dv).add(&r), f);
    }
}
