//! Scalars that are either exact rationals or doubles.
//!
//! Arithmetic stays exact as long as every operand is exact; mixing in a
//! double demotes the result to a double.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // huge numerators or denominators; fall back on logs
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        let ln = big_ln(&r.numer().abs()) - big_ln(r.denom());
        sign * ln.exp()
    })
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact binary value of a finite double.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Parses `p/q`, an integer, or a plain decimal such as `-0.125`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Some(Rat::from_integer(p));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (ip, fp) = body.split_once('.')?;
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{ip}{fp}").parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), fp.len());
    let r = Rat::new(digits, den);
    Some(if neg { -r } else { r })
}

/// `p/q`, or just `p` for integers.
pub fn rat_str(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Continued-fraction approximation of `x` with denominator at most `max_den`.
pub fn rat_approx(x: f64, max_den: i64) -> Rat {
    if !x.is_finite() {
        return Rat::zero();
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac.abs() < 1e-15 {
            break;
        }
        y = 1.0 / frac;
    }
    if k1 == 0 {
        return rat_from_f64(x).unwrap_or_else(Rat::zero);
    }
    Rat::new(BigInt::from(h1), BigInt::from(k1))
}

#[derive(Clone, Debug)]
pub enum Num {
    Exact(Rat),
    Float(f64),
}

impl Num {
    pub fn int(n: i64) -> Num {
        Num::Exact(rat_int(n))
    }

    pub fn frac(n: i64, d: i64) -> Num {
        Num::Exact(rat(n, d))
    }

    pub fn zero() -> Num {
        Num::Exact(Rat::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn exact(&self) -> Option<&Rat> {
        match self {
            Num::Exact(r) => Some(r),
            Num::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => rat_to_f64(r),
            Num::Float(x) => *x,
        }
    }

    /// Exact value when available, otherwise the binary value of the double.
    pub fn to_rat(&self) -> Rat {
        match self {
            Num::Exact(r) => r.clone(),
            Num::Float(x) => rat_from_f64(*x).unwrap_or_else(Rat::zero),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Exact(r) => r.is_zero(),
            Num::Float(x) => *x == 0.0,
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Num::Exact(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
            Num::Float(x) => {
                if *x > 0.0 {
                    1
                } else if *x < 0.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn abs(&self) -> Num {
        match self {
            Num::Exact(r) => Num::Exact(r.abs()),
            Num::Float(x) => Num::Float(x.abs()),
        }
    }

    pub fn scale(&self, k: &Num) -> Num {
        self.clone() * k.clone()
    }

    /// Demote to a double.
    pub fn floated(&self) -> Num {
        Num::Float(self.to_f64())
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Num::Exact(r) => serde_json::Value::String(rat_str(r)),
            Num::Float(x) => serde_json::Number::from_f64(*x)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
        }
    }

    /// Integers and `"p/q"` strings are exact, other JSON numbers are doubles.
    pub fn from_json(v: &serde_json::Value) -> Option<Num> {
        match v {
            serde_json::Value::String(s) => parse_rat(s).map(Num::Exact),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Num::int(i))
                } else if let Some(u) = n.as_u64() {
                    Some(Num::Exact(Rat::from_integer(BigInt::from(u))))
                } else {
                    n.as_f64().filter(|x| x.is_finite()).map(Num::Float)
                }
            }
            _ => None,
        }
    }

    pub fn cmp_num(&self, other: &Num) -> Ordering {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Num) -> bool {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a == b,
            (Num::Float(a), Num::Float(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Num {
        Num::Float(x)
    }
}

impl From<Rat> for Num {
    fn from(r: Rat) -> Num {
        Num::Exact(r)
    }
}

impl From<i64> for Num {
    fn from(n: i64) -> Num {
        Num::int(n)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) => write!(f, "{}", rat_str(r)),
            Num::Float(x) => write!(f, "{x}"),
        }
    }
}

macro_rules! num_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl std::ops::$tr for Num {
            type Output = Num;
            fn $m(self, rhs: Num) -> Num {
                match (self, rhs) {
                    (Num::Exact(a), Num::Exact(b)) => Num::Exact(a $op b),
                    (a, b) => Num::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl<'a> std::ops::$tr<&'a Num> for &'a Num {
            type Output = Num;
            fn $m(self, rhs: &'a Num) -> Num {
                match (self, rhs) {
                    (Num::Exact(a), Num::Exact(b)) => Num::Exact(a $op b),
                    (a, b) => Num::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
    };
}

num_binop!(Add, add, +);
num_binop!(Sub, sub, -);
num_binop!(Mul, mul, *);

impl std::ops::Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        match self {
            Num::Exact(a) => Num::Exact(-a),
            Num::Float(x) => Num::Float(-x),
        }
    }
}

impl std::iter::Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |a, b| a + b)
    }
}

/// `x^(p/q)` for `x ≥ 0` in floating point.
pub fn powr(x: f64, e: &Rat) -> f64 {
    if e.is_integer() {
        if let Some(k) = e.numer().to_i32() {
            return x.powi(k);
        }
    }
    x.powf(rat_to_f64(e))
}

pub fn one() -> Rat {
    Rat::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rat("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rat("-6/8"), Some(rat(-3, 4)));
        assert_eq!(parse_rat("12"), Some(rat_int(12)));
        assert_eq!(parse_rat("-0.125"), Some(rat(-1, 8)));
        assert_eq!(parse_rat(".5"), Some(rat(1, 2)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("abc"), None);
    }

    #[test]
    fn exactness_is_contagious_only_downward() {
        let a = Num::frac(1, 3) + Num::frac(2, 3);
        assert_eq!(a, Num::int(1));
        assert!(a.is_exact());
        let b = Num::frac(1, 3) + Num::Float(0.5);
        assert!(!b.is_exact());
    }

    #[test]
    fn approximates_simple_fractions() {
        assert_eq!(rat_approx(0.75, 1000), rat(3, 4));
        assert_eq!(rat_approx(1.0 / 3.0, 1000), rat(1, 3));
        assert_eq!(rat_approx(-2.5, 10), rat(-5, 2));
    }

    #[test]
    fn huge_rationals_convert_through_logs() {
        let big = Rat::new(num_traits::pow(BigInt::from(3), 900), num_traits::pow(BigInt::from(3), 899));
        assert!((rat_to_f64(&big) - 3.0).abs() < 1e-9);
    }
}
