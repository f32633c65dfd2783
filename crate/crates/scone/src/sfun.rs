//! Exponents, supports, S-functions and the dual pairing.
//!
//! An S-function is `f(x) = Σ_{α∈A} c_α |x|^α + Σ_{β∈B} d_β x^β` where the
//! even-role exponents `A` are rational vectors and the odd-role exponents `B`
//! are non-negative integer vectors with at least one odd coordinate.

use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Result, SconeError};
use crate::num::{parse_rat, powr, rat_int, rat_str, rat_to_f64, Num, Rat};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Exponent(pub Vec<Rat>);

impl Exponent {
    pub fn from_ints(v: &[i64]) -> Exponent {
        Exponent(v.iter().map(|&x| rat_int(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rat_to_f64).collect()
    }

    /// Non-negative integer coordinates with at least one odd entry.
    pub fn is_odd_integer(&self) -> bool {
        self.0.iter().all(|r| r.is_integer() && !r.is_negative())
            && self.0.iter().any(|r| r.numer().is_odd())
    }

    pub fn is_even_integer(&self) -> bool {
        self.0.iter().all(|r| r.is_integer() && r.numer().is_even())
    }

    pub fn sub(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.0
                .iter()
                .map(|r| match r.to_integer().to_i64() {
                    Some(i) if r.is_integer() => json!(i),
                    _ => Value::String(rat_str(r)),
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<Exponent> {
        let arr = v
            .as_array()
            .ok_or_else(|| SconeError::Parse(format!("exponent must be an array, got {v}")))?;
        let coords = arr
            .iter()
            .map(|x| match x {
                Value::Number(n) if n.is_i64() || n.is_u64() => {
                    parse_rat(&n.to_string()).ok_or_else(|| SconeError::Parse(n.to_string()))
                }
                Value::Number(n) => Err(SconeError::Parse(format!(
                    "exponent coordinate {n} must be an integer or a \"p/q\" string"
                ))),
                Value::String(s) => {
                    parse_rat(s).ok_or_else(|| SconeError::Parse(format!("bad rational {s:?}")))
                }
                _ => Err(SconeError::Parse(format!("bad exponent coordinate {x}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Exponent(coords))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(rat_str).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Parity of a circuit, AG function or inner term.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    pub fn parse(s: &str) -> Result<Parity> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            _ => Err(SconeError::Parse(format!("parity must be even or odd, got {s:?}"))),
        }
    }
}

/// The exponent sets `(A, B)`, each kept sorted and duplicate free.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Support {
    pub n: usize,
    pub even: Vec<Exponent>,
    pub odd: Vec<Exponent>,
}

impl Support {
    pub fn new(n: usize, mut even: Vec<Exponent>, mut odd: Vec<Exponent>) -> Result<Support> {
        if n == 0 {
            return Err(SconeError::InvalidSupport("dimension n must be at least 1".into()));
        }
        if even.is_empty() {
            return Err(SconeError::InvalidSupport("the even exponent set A must be non-empty".into()));
        }
        for e in even.iter().chain(&odd) {
            if e.dim() != n {
                return Err(SconeError::DimensionMismatch { expected: n, got: e.dim() });
            }
        }
        if let Some(b) = odd.iter().find(|b| !b.is_odd_integer()) {
            return Err(SconeError::InvalidSupport(format!(
                "odd exponent {b} must be a non-negative integer vector with an odd coordinate"
            )));
        }
        even.sort();
        odd.sort();
        let (le, lo) = (even.len(), odd.len());
        even.dedup();
        odd.dedup();
        if even.len() != le || odd.len() != lo {
            return Err(SconeError::InvalidSupport("duplicate exponent".into()));
        }
        Ok(Support { n, even, odd })
    }

    pub fn even_index(&self, e: &Exponent) -> Option<usize> {
        self.even.binary_search(e).ok()
    }

    pub fn odd_index(&self, e: &Exponent) -> Option<usize> {
        self.odd.binary_search(e).ok()
    }

    /// `|A| + |B|`, the dimension of the function space.
    pub fn dimension(&self) -> usize {
        self.even.len() + self.odd.len()
    }

    /// `A ∪ B`, sorted.
    pub fn union(&self) -> Vec<Exponent> {
        let mut u: Vec<Exponent> = self.even.iter().chain(&self.odd).cloned().collect();
        u.sort();
        u.dedup();
        u
    }

    /// Whether every exponent of `self` also appears in `other` with the same role.
    pub fn is_subset_of(&self, other: &Support) -> bool {
        self.n == other.n
            && self.even.iter().all(|e| other.even_index(e).is_some())
            && self.odd.iter().all(|e| other.odd_index(e).is_some())
    }
}

/// Value of an S-function; `+∞` only arises from negative exponents at zero.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(*x),
            ExtReal::PosInf => None,
        }
    }

    /// `+∞` counts as non-negative.
    pub fn is_negative(&self) -> bool {
        matches!(self, ExtReal::Finite(x) if *x < 0.0)
    }

    pub fn at_least(&self, t: f64) -> bool {
        match self {
            ExtReal::Finite(x) => *x >= t,
            ExtReal::PosInf => true,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct SFunction {
    pub support: Support,
    pub c: Vec<Num>,
    pub d: Vec<Num>,
}

impl SFunction {
    pub fn new(support: Support, c: Vec<Num>, d: Vec<Num>) -> Result<SFunction> {
        if c.len() != support.even.len() || d.len() != support.odd.len() {
            return Err(SconeError::SupportMismatch(
                "coefficient vectors do not match the support".into(),
            ));
        }
        Ok(SFunction { support, c, d })
    }

    /// Builds a function from `(exponent, coefficient)` lists in any order.
    pub fn from_terms(n: usize, even: Vec<(Exponent, Num)>, odd: Vec<(Exponent, Num)>) -> Result<SFunction> {
        let support = Support::new(
            n,
            even.iter().map(|t| t.0.clone()).collect(),
            odd.iter().map(|t| t.0.clone()).collect(),
        )?;
        let mut c = vec![Num::zero(); support.even.len()];
        for (e, v) in even {
            c[support.even_index(&e).unwrap()] = v;
        }
        let mut d = vec![Num::zero(); support.odd.len()];
        for (e, v) in odd {
            d[support.odd_index(&e).unwrap()] = v;
        }
        Ok(SFunction { support, c, d })
    }

    /// Univariate shorthand: integer even and odd exponents.
    pub fn univariate(even: &[(i64, Num)], odd: &[(i64, Num)]) -> Result<SFunction> {
        SFunction::from_terms(
            1,
            even.iter().map(|(e, v)| (Exponent::from_ints(&[*e]), v.clone())).collect(),
            odd.iter().map(|(e, v)| (Exponent::from_ints(&[*e]), v.clone())).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.support.n
    }

    pub fn is_exact(&self) -> bool {
        self.c.iter().chain(&self.d).all(Num::is_exact)
    }

    pub fn coeff_scale(&self) -> f64 {
        self.c
            .iter()
            .chain(&self.d)
            .fold(0.0f64, |m, x| m.max(x.to_f64().abs()))
    }

    pub fn even_coeff(&self, e: &Exponent) -> Num {
        self.support.even_index(e).map_or(Num::zero(), |i| self.c[i].clone())
    }

    pub fn odd_coeff(&self, e: &Exponent) -> Num {
        self.support.odd_index(e).map_or(Num::zero(), |i| self.d[i].clone())
    }

    /// Exponents carrying non-zero coefficients.
    pub fn nonzero_support(&self) -> Result<Support> {
        let even: Vec<Exponent> = self
            .support
            .even
            .iter()
            .zip(&self.c)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, _)| e.clone())
            .collect();
        let odd: Vec<Exponent> = self
            .support
            .odd
            .iter()
            .zip(&self.d)
            .filter(|(_, d)| !d.is_zero())
            .map(|(e, _)| e.clone())
            .collect();
        Support::new(self.support.n, even, odd)
    }

    /// The same function re-indexed over a support containing its non-zero terms.
    pub fn restrict_to(&self, support: &Support) -> Result<SFunction> {
        if support.n != self.n() {
            return Err(SconeError::DimensionMismatch { expected: self.n(), got: support.n });
        }
        for (e, c) in self.support.even.iter().zip(&self.c) {
            if !c.is_zero() && support.even_index(e).is_none() {
                return Err(SconeError::SupportMismatch(format!("even term {e} not in target support")));
            }
        }
        for (e, d) in self.support.odd.iter().zip(&self.d) {
            if !d.is_zero() && support.odd_index(e).is_none() {
                return Err(SconeError::SupportMismatch(format!("odd term {e} not in target support")));
            }
        }
        let c = support.even.iter().map(|e| self.even_coeff(e)).collect();
        let d = support.odd.iter().map(|e| self.odd_coeff(e)).collect();
        SFunction::new(support.clone(), c, d)
    }

    /// Adds `k` to the constant term, inserting `0` into `A` when needed.
    pub fn add_constant(&self, k: Num) -> Result<SFunction> {
        let zero = Exponent(vec![Rat::zero(); self.n()]);
        let mut even: Vec<(Exponent, Num)> = self
            .support
            .even
            .iter()
            .cloned()
            .zip(self.c.iter().cloned())
            .collect();
        match even.iter_mut().find(|(e, _)| *e == zero) {
            Some(t) => t.1 = t.1.clone() + k,
            None => even.push((zero, k)),
        }
        let odd = self.support.odd.iter().cloned().zip(self.d.iter().cloned()).collect();
        SFunction::from_terms(self.n(), even, odd)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n(),
            "even": self.support.even.iter().zip(&self.c)
                .map(|(e, c)| json!([e.to_json(), c.to_json()])).collect::<Vec<_>>(),
            "odd": self.support.odd.iter().zip(&self.d)
                .map(|(e, d)| json!([e.to_json(), d.to_json()])).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<SFunction> {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| SconeError::Parse("missing integer field \"n\"".into()))? as usize;
        let terms = |key: &str| -> Result<Vec<(Exponent, Num)>> {
            let Some(list) = v.get(key) else {
                return Ok(vec![]);
            };
            let list = list
                .as_array()
                .ok_or_else(|| SconeError::Parse(format!("\"{key}\" must be a list")))?;
            list.iter()
                .map(|t| {
                    let pair = t.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                        SconeError::Parse(format!("term {t} must be [exponent, coefficient]"))
                    })?;
                    let e = Exponent::from_json(&pair[0])?;
                    let c = Num::from_json(&pair[1])
                        .ok_or_else(|| SconeError::Parse(format!("bad coefficient {}", pair[1])))?;
                    Ok((e, c))
                })
                .collect()
        };
        SFunction::from_terms(n, terms("even")?, terms("odd")?)
    }
}

/// Parses the JSON document form of an S-function.
pub fn parse_sfunction(doc: &str) -> Result<SFunction> {
    let v: Value = serde_json::from_str(doc).map_err(|e| SconeError::Parse(e.to_string()))?;
    SFunction::from_json(&v)
}

pub fn serialize_sfunction(f: &SFunction) -> String {
    f.to_json().to_string()
}

/// `Π |x_j|^{e_j}` for a point with no zero coordinate meeting a negative exponent.
pub fn abs_monomial(x: &[f64], e: &Exponent) -> ExtReal {
    let mut v = 1.0;
    for (xj, ej) in x.iter().zip(&e.0) {
        if ej.is_zero() {
            continue;
        }
        let a = xj.abs();
        if a == 0.0 {
            if ej.is_negative() {
                return ExtReal::PosInf;
            }
            return ExtReal::Finite(0.0);
        }
        v *= powr(a, ej);
    }
    ExtReal::Finite(v)
}

/// `Π x_j^{e_j}` for integer exponents.
pub fn signed_monomial(x: &[f64], e: &Exponent) -> f64 {
    let mut v = 1.0;
    for (xj, ej) in x.iter().zip(&e.0) {
        let k = ej.to_integer().to_i32().unwrap_or(0);
        v *= xj.powi(k);
    }
    v
}

/// Evaluates `f` at `x`; zero coefficients never contribute, even at a pole.
pub fn evaluate(f: &SFunction, x: &[f64]) -> Result<ExtReal> {
    if x.len() != f.n() {
        return Err(SconeError::DimensionMismatch { expected: f.n(), got: x.len() });
    }
    let mut s = 0.0;
    for (e, c) in f.support.even.iter().zip(&f.c) {
        if c.is_zero() {
            continue;
        }
        match abs_monomial(x, e) {
            ExtReal::PosInf => {
                if c.signum() > 0 {
                    return Ok(ExtReal::PosInf);
                }
                // a negative coefficient on a pole; only matters if no positive pole wins
                s = f64::NEG_INFINITY;
            }
            ExtReal::Finite(m) => s += c.to_f64() * m,
        }
    }
    for (e, d) in f.support.odd.iter().zip(&f.d) {
        if !d.is_zero() {
            s += d.to_f64() * signed_monomial(x, e);
        }
    }
    Ok(ExtReal::Finite(s))
}

/// A functional `(v, w)` on the coefficient space of a support.
#[derive(Clone, PartialEq, Debug)]
pub struct DualVector {
    pub support: Support,
    pub v: Vec<Num>,
    pub w: Vec<Num>,
}

impl DualVector {
    pub fn new(support: Support, v: Vec<Num>, w: Vec<Num>) -> Result<DualVector> {
        if v.len() != support.even.len() || w.len() != support.odd.len() {
            return Err(SconeError::SupportMismatch("dual vector does not match the support".into()));
        }
        Ok(DualVector { support, v, w })
    }

    pub fn zero(support: &Support) -> DualVector {
        DualVector {
            support: support.clone(),
            v: vec![Num::zero(); support.even.len()],
            w: vec![Num::zero(); support.odd.len()],
        }
    }

    /// Point evaluation `(|x|^α, x^β)`.
    pub fn point(support: &Support, x: &[f64]) -> DualVector {
        let v = support
            .even
            .iter()
            .map(|e| Num::Float(abs_monomial(x, e).finite().unwrap_or(f64::MAX)))
            .collect();
        let w = support.odd.iter().map(|e| Num::Float(signed_monomial(x, e))).collect();
        DualVector { support: support.clone(), v, w }
    }

    pub fn is_exact(&self) -> bool {
        self.v.iter().chain(&self.w).all(Num::is_exact)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.support.n,
            "even": self.support.even.iter().zip(&self.v)
                .map(|(e, c)| json!([e.to_json(), c.to_json()])).collect::<Vec<_>>(),
            "odd": self.support.odd.iter().zip(&self.w)
                .map(|(e, d)| json!([e.to_json(), d.to_json()])).collect::<Vec<_>>(),
        })
    }

    /// Same document shape as an S-function, with `v` under `even` and `w` under `odd`.
    pub fn from_json(v: &Value) -> Result<DualVector> {
        let f = SFunction::from_json(v)?;
        Ok(DualVector { support: f.support, v: f.c, w: f.d })
    }
}

/// `(v,w)(f) = Σ v_α c_α + Σ w_β d_β`.
pub fn pair(u: &DualVector, f: &SFunction) -> Result<Num> {
    if u.support != f.support {
        return Err(SconeError::SupportMismatch("dual vector and function have different supports".into()));
    }
    let a: Num = u.v.iter().zip(&f.c).map(|(v, c)| v * c).sum();
    let b: Num = u.w.iter().zip(&f.d).map(|(w, d)| w * d).sum();
    Ok(a + b)
}
