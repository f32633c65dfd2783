//! Brute-force oracles: grid minimization and vertex enumeration of `Λ(A, β)`.

use itertools::Itertools;
use num_traits::Zero;

use crate::circuits::{affinely_independent, all_positive, lambda_unique_refs};
use crate::error::{Result, SconeError};
use crate::num::Rat;
use crate::sfun::{Exponent, SFunction};

/// Vertices of `Λ(A, β) = {λ ≥ 0 : Σλ = 1, Σλ_α α = β}` by basis enumeration.
///
/// Every vertex has affinely independent support, so it is the unique weight
/// vector of that support; subsets with strictly positive weights enumerate each
/// vertex exactly once.
pub fn polytope_vertices(a: &[Exponent], beta: &Exponent) -> Vec<Vec<Rat>> {
    let max_k = (beta.dim() + 1).min(a.len());
    let mut out = vec![];
    for k in 1..=max_k {
        for idx in (0..a.len()).combinations(k) {
            let pts: Vec<&Exponent> = idx.iter().map(|&i| &a[i]).collect();
            if k > 1 && !affinely_independent(&pts) {
                continue;
            }
            let Ok(l) = lambda_unique_refs(&pts, beta) else {
                continue;
            };
            if !all_positive(&l) {
                continue;
            }
            let mut full = vec![Rat::zero(); a.len()];
            for (&i, li) in idx.iter().zip(l) {
                full[i] = li;
            }
            out.push(full);
        }
    }
    out.sort();
    out
}

/// Indices `α` with `λ_α > 0` for some `λ ∈ Λ(A, β)`: the smallest face of `conv(A)` holding `β`.
pub fn face_support(a: &[Exponent], beta: &Exponent) -> Vec<usize> {
    let verts = polytope_vertices(a, beta);
    (0..a.len())
        .filter(|&i| verts.iter().any(|v| !v[i].is_zero()))
        .collect()
}

/// A point of the relative interior of `Λ(A, β)`: the average of its vertices.
pub fn relint_point(a: &[Exponent], beta: &Exponent) -> Option<Vec<Rat>> {
    let verts = polytope_vertices(a, beta);
    if verts.is_empty() {
        return None;
    }
    let k = Rat::from_integer(verts.len().into());
    let mut p = vec![Rat::zero(); a.len()];
    for v in &verts {
        for (pi, vi) in p.iter_mut().zip(v) {
            *pi += vi;
        }
    }
    Some(p.into_iter().map(|x| x / &k).collect())
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    /// Per-coordinate lower bounds (of `|x_j|` when `log_scale`).
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Points per axis, at least 3.
    pub resolution: usize,
    /// Geometric spacing in `|x_j|` with all sign patterns.
    pub log_scale: bool,
    /// Zoom passes around the best grid point.
    pub refine: usize,
}

impl GridSpec {
    pub fn symmetric(n: usize, half_width: f64, resolution: usize) -> GridSpec {
        GridSpec { lo: vec![-half_width; n], hi: vec![half_width; n], resolution, log_scale: false, refine: 0 }
    }

    pub fn log(n: usize, lo: f64, hi: f64, resolution: usize, refine: usize) -> GridSpec {
        GridSpec { lo: vec![lo; n], hi: vec![hi; n], resolution, log_scale: true, refine }
    }
}

struct Compiled {
    even: Vec<(Vec<f64>, f64)>,
    odd: Vec<(Vec<i32>, f64)>,
}

impl Compiled {
    fn new(f: &SFunction) -> Compiled {
        let even = f
            .support
            .even
            .iter()
            .zip(&f.c)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e.to_f64(), c.to_f64()))
            .collect();
        let odd = f
            .support
            .odd
            .iter()
            .zip(&f.d)
            .filter(|(_, d)| !d.is_zero())
            .map(|(e, d)| (e.to_f64().iter().map(|&x| x as i32).collect(), d.to_f64()))
            .collect();
        Compiled { even, odd }
    }

    /// `ln|x|` per coordinate and the signs.
    fn eval(&self, lnx: &[f64], sign: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.even {
            let t: f64 = e.iter().zip(lnx).map(|(a, l)| if *a == 0.0 { 0.0 } else { a * l }).sum();
            s += c * t.exp();
        }
        for (e, d) in &self.odd {
            let t: f64 = e.iter().zip(lnx).map(|(&a, l)| if a == 0 { 0.0 } else { a as f64 * l }).sum();
            let sg: f64 = e.iter().zip(sign).map(|(&a, s)| if a % 2 == 1 { *s } else { 1.0 }).product();
            s += d * sg * t.exp();
        }
        s
    }
}

/// Minimum of `f` over the grid (and its refinements), with the minimizing point.
pub fn grid_min(f: &SFunction, spec: &GridSpec) -> Result<(f64, Vec<f64>)> {
    let n = f.n();
    if spec.resolution < 3 || spec.lo.len() != n || spec.hi.len() != n {
        return Err(SconeError::Invalid("grid needs n bounds and resolution >= 3".into()));
    }
    if spec.log_scale && spec.lo.iter().any(|&l| l <= 0.0) {
        return Err(SconeError::Invalid("log grid needs positive bounds".into()));
    }
    let comp = Compiled::new(f);
    let signs: Vec<Vec<f64>> = if spec.log_scale && !comp.odd.is_empty() {
        (0..1usize << n)
            .map(|m| (0..n).map(|j| if m >> j & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect()
    } else {
        vec![vec![1.0; n]]
    };
    // work in t-coordinates: t = ln|x| for log grids, t = x otherwise
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = if spec.log_scale {
        (spec.lo.iter().map(|x| x.ln()).collect(), spec.hi.iter().map(|x| x.ln()).collect())
    } else {
        (spec.lo.clone(), spec.hi.clone())
    };
    let r = spec.resolution;
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let mut best_t = vec![0.0; n];
    let mut best_sign = vec![1.0; n];
    for pass in 0..=spec.refine {
        let step: Vec<f64> = (0..n).map(|j| (hi[j] - lo[j]) / (r - 1) as f64).collect();
        let mut idx = vec![0usize; n];
        let mut t = vec![0.0; n];
        let mut lnx = vec![0.0; n];
        let mut sign = vec![1.0; n];
        loop {
            for j in 0..n {
                t[j] = lo[j] + step[j] * idx[j] as f64;
            }
            for sg in &signs {
                let val = if spec.log_scale {
                    comp.eval(&t, sg)
                } else {
                    for j in 0..n {
                        lnx[j] = if t[j] == 0.0 { f64::NEG_INFINITY } else { t[j].abs().ln() };
                        sign[j] = if t[j] < 0.0 { -1.0 } else { 1.0 };
                    }
                    eval_linear(&comp, &lnx, &sign)
                };
                if val.is_finite() && val < best.0 {
                    best.0 = val;
                    best_t = t.clone();
                    best_sign = sg.clone();
                }
            }
            let mut j = 0;
            loop {
                if j == n {
                    break;
                }
                idx[j] += 1;
                if idx[j] < r {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
        if !best.0.is_finite() {
            return Err(SconeError::Invalid("f is +inf on the whole grid".into()));
        }
        if pass < spec.refine {
            for j in 0..n {
                lo[j] = best_t[j] - step[j];
                hi[j] = best_t[j] + step[j];
            }
        }
    }
    best.1 = if spec.log_scale {
        best_t.iter().zip(&best_sign).map(|(t, s)| s * t.exp()).collect()
    } else {
        best_t
    };
    Ok(best)
}

fn eval_linear(comp: &Compiled, lnx: &[f64], sign: &[f64]) -> f64 {
    // zero coordinates: exp(-inf * a) is 0 for a > 0 and inf for a < 0
    let mut s = 0.0;
    for (e, c) in &comp.even {
        let t: f64 = e.iter().zip(lnx).map(|(a, l)| if *a == 0.0 { 0.0 } else { a * l }).sum();
        let m = t.exp();
        if m.is_infinite() {
            return if *c > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        s += c * m;
    }
    for (e, d) in &comp.odd {
        let t: f64 = e.iter().zip(lnx).map(|(&a, l)| if a == 0 { 0.0 } else { a as f64 * l }).sum();
        let sg: f64 = e.iter().zip(sign).map(|(&a, s)| if a % 2 == 1 { *s } else { 1.0 }).product();
        s += d * sg * t.exp();
    }
    s
}
