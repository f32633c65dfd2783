//! Splitting a signomial coefficient vector into non-negative AGE parts.
//!
//! Given exponents `E`, coefficients `a` with positive set `P` and negative set
//! `N`, look for `C_γ ≥ 0` on `P` (one per `γ ∈ N`) with `Σ_γ C_γ ≤ a` on `P`
//! and `inf_y Σ_α C_γα e^{(α−γ)ᵀy} ≥ |a_γ|` for every `γ`. Each block is written
//! through its weights `λ_γ ∈ Λ(F_γ, γ)` on the face `F_γ` of `conv(P)`:
//!
//! `h_γ = Σ λ_α (ln a_α + ln ĉ_γα − ln λ_α) − ln|a_γ| ≥ s`, with `ĉ = C/a`,
//!
//! which is jointly concave. A log barrier maximizes the margin `s`; a positive
//! margin is a certificate, a provably negative one yields capacity prices for
//! a separating functional.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SconeError};
use crate::linalg::{nullspace, orthonormal_span};
use crate::num::rat_to_f64;
use crate::oracle::{face_support, relint_point};
use crate::sfun::Exponent;

#[derive(Clone, Debug)]
pub enum SageOutcome {
    /// `(γ, [(α, C_γα)])` blocks, with the achieved log margin.
    Feasible { parts: Vec<(usize, Vec<(usize, f64)>)>, margin: f64 },
    /// Log capacity prices on the positive exponents; `bound` is an upper bound on the margin.
    Infeasible { log_prices: Vec<(usize, f64)>, bound: f64 },
    /// Neither side proven; `parts` is the last iterate.
    Unknown { margin: f64, parts: Vec<(usize, Vec<(usize, f64)>)>, log_prices: Vec<(usize, f64)> },
}

struct Block {
    face: Vec<usize>,
    la: Vec<f64>,
    lam0: Vec<f64>,
    z: Vec<Vec<f64>>,
    lg: f64,
    th: usize,
    cv: usize,
}

impl Block {
    fn lambda(&self, x: &[f64]) -> Vec<f64> {
        let mut l = self.lam0.clone();
        for (k, zk) in self.z.iter().enumerate() {
            for (li, zi) in l.iter_mut().zip(zk) {
                *li += zi * x[self.th + k];
            }
        }
        l
    }
}

struct Problem {
    blocks: Vec<(usize, Block)>,
    caps: Vec<(usize, Vec<usize>)>,
    dim: usize,
    s: usize,
    terms: usize,
}

/// Each `γ ∈ N` must lie in `conv(P)`.
pub fn solve_sage(exps: &[Exponent], a: &[f64], max_newton: usize) -> Result<SageOutcome> {
    let pos: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    let neg: Vec<usize> = (0..a.len()).filter(|&i| a[i] < 0.0).collect();
    let pexps: Vec<Exponent> = pos.iter().map(|&i| exps[i].clone()).collect();
    let mut blocks = vec![];
    let mut dim = 0;
    for &g in &neg {
        let local = face_support(&pexps, &exps[g]);
        if local.is_empty() {
            return Err(SconeError::Invalid(format!("{} is outside the hull of the positive terms", exps[g])));
        }
        let fexps: Vec<Exponent> = local.iter().map(|&i| pexps[i].clone()).collect();
        let lam0: Vec<f64> = relint_point(&fexps, &exps[g]).unwrap().iter().map(rat_to_f64).collect();
        let refs: Vec<&Exponent> = fexps.iter().collect();
        let ns: Vec<Vec<f64>> = nullspace(&crate::circuits::lifted(&refs), fexps.len())
            .iter()
            .map(|v| v.iter().map(rat_to_f64).collect())
            .collect();
        let z = orthonormal_span(&ns, fexps.len());
        let face: Vec<usize> = local.iter().map(|&i| pos[i]).collect();
        let la = face.iter().map(|&i| a[i].ln()).collect();
        let th = dim;
        dim += z.len();
        let cv = dim;
        dim += face.len();
        blocks.push((g, Block { face, la, lam0, z, lg: (-a[g]).ln(), th, cv }));
    }
    let mut caps = vec![];
    for &p in &pos {
        let vars: Vec<usize> = blocks
            .iter()
            .flat_map(|(_, b)| b.face.iter().enumerate().filter(|(_, &f)| f == p).map(|(i, _)| b.cv + i).collect::<Vec<_>>())
            .collect();
        caps.push((p, vars));
    }
    let s = dim;
    dim += 1;
    let terms = blocks.iter().map(|(_, b)| 1 + 2 * b.face.len()).sum::<usize>() + caps.len();
    let prob = Problem { blocks, caps, dim, s, terms };

    // strictly feasible start
    let mut x = vec![0.0; dim];
    for (p, vars) in &prob.caps {
        let _ = p;
        for &v in vars {
            x[v] = 1.0 / (vars.len() as f64 + 1.0);
        }
    }
    let hmin = prob
        .blocks
        .iter()
        .map(|(_, b)| block_h(b, &x))
        .fold(f64::INFINITY, f64::min);
    x[s] = hmin - 1.0;

    let mut t = 1.0;
    let mut budget = max_newton;
    loop {
        center(&prob, &mut x, t, &mut budget);
        let margin = x[s];
        let gap = prob.terms as f64 / t;
        let parts = || -> Vec<(usize, Vec<(usize, f64)>)> {
            prob.blocks
                .iter()
                .map(|(g, b)| (*g, b.face.iter().enumerate().map(|(i, &f)| (f, a[f] * x[b.cv + i])).collect()))
                .collect()
        };
        if margin > 0.0 && (margin >= gap || t >= 1e12) {
            return Ok(SageOutcome::Feasible { parts: parts(), margin });
        }
        if margin + gap < 0.0 {
            return Ok(SageOutcome::Infeasible { log_prices: prices(&prob, &x, t, a), bound: margin + gap });
        }
        if t >= 1e13 || budget == 0 {
            return Ok(SageOutcome::Unknown { margin, parts: parts(), log_prices: prices(&prob, &x, t, a) });
        }
        t *= 8.0;
    }
}

fn prices(prob: &Problem, x: &[f64], t: f64, a: &[f64]) -> Vec<(usize, f64)> {
    prob.caps
        .iter()
        .map(|(p, vars)| {
            let r = 1.0 - vars.iter().map(|&v| x[v]).sum::<f64>();
            (*p, -t.ln() - r.ln() - a[*p].ln())
        })
        .collect()
}

fn block_h(b: &Block, x: &[f64]) -> f64 {
    let lam = b.lambda(x);
    let mut h = -b.lg;
    for i in 0..b.face.len() {
        h += lam[i] * (b.la[i] + x[b.cv + i].ln() - lam[i].ln());
    }
    h
}

/// Barrier objective, gradient and Hessian; `None` outside the domain.
fn eval(prob: &Problem, x: &[f64], t: f64, want_derivs: bool) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
    let dim = prob.dim;
    let s = prob.s;
    let mut phi = t * x[s];
    let (mut g, mut hm) = if want_derivs {
        (DVector::zeros(dim), DMatrix::zeros(dim, dim))
    } else {
        (DVector::zeros(0), DMatrix::zeros(0, 0))
    };
    if want_derivs {
        g[s] += t;
    }
    for (_, b) in &prob.blocks {
        let m = b.face.len();
        let k = b.z.len();
        let lam = b.lambda(x);
        let ch: Vec<f64> = (0..m).map(|i| x[b.cv + i]).collect();
        if lam.iter().any(|&l| l <= 0.0) || ch.iter().any(|&c| c <= 0.0) {
            return None;
        }
        let mut h = -b.lg;
        for i in 0..m {
            h += lam[i] * (b.la[i] + ch[i].ln() - lam[i].ln());
        }
        let u = h - x[s];
        if u <= 0.0 {
            return None;
        }
        phi += u.ln();
        phi += lam.iter().map(|l| l.ln()).sum::<f64>() + ch.iter().map(|c| c.ln()).sum::<f64>();
        if !want_derivs {
            continue;
        }
        let idx = |j: usize| if j < k { b.th + j } else { b.cv + j - k };
        let gl: Vec<f64> = (0..m).map(|i| b.la[i] + ch[i].ln() - lam[i].ln() - 1.0).collect();
        let mut gh = vec![0.0; k + m];
        let mut hh = vec![vec![0.0; k + m]; k + m];
        for kk in 0..k {
            gh[kk] = (0..m).map(|i| b.z[kk][i] * gl[i]).sum();
            for ll in 0..k {
                hh[kk][ll] = -(0..m).map(|i| b.z[kk][i] * b.z[ll][i] / lam[i]).sum::<f64>();
            }
            for i in 0..m {
                hh[kk][k + i] = b.z[kk][i] / ch[i];
                hh[k + i][kk] = hh[kk][k + i];
            }
        }
        for i in 0..m {
            gh[k + i] = lam[i] / ch[i];
            hh[k + i][k + i] = -lam[i] / (ch[i] * ch[i]);
        }
        for p in 0..k + m {
            g[idx(p)] += gh[p] / u;
            for q in 0..k + m {
                hm[(idx(p), idx(q))] += hh[p][q] / u - gh[p] * gh[q] / (u * u);
            }
            hm[(idx(p), s)] += gh[p] / (u * u);
            hm[(s, idx(p))] += gh[p] / (u * u);
        }
        g[s] -= 1.0 / u;
        hm[(s, s)] -= 1.0 / (u * u);
        for i in 0..m {
            for kk in 0..k {
                g[b.th + kk] += b.z[kk][i] / lam[i];
                for ll in 0..k {
                    hm[(b.th + kk, b.th + ll)] -= b.z[kk][i] * b.z[ll][i] / (lam[i] * lam[i]);
                }
            }
            g[b.cv + i] += 1.0 / ch[i];
            hm[(b.cv + i, b.cv + i)] -= 1.0 / (ch[i] * ch[i]);
        }
    }
    for (_, vars) in &prob.caps {
        if vars.is_empty() {
            continue;
        }
        let r = 1.0 - vars.iter().map(|&v| x[v]).sum::<f64>();
        if r <= 0.0 {
            return None;
        }
        phi += r.ln();
        if want_derivs {
            for &v in vars {
                g[v] -= 1.0 / r;
                for &w in vars {
                    hm[(v, w)] -= 1.0 / (r * r);
                }
            }
        }
    }
    Some((phi, g, hm))
}

fn center(prob: &Problem, x: &mut Vec<f64>, t: f64, budget: &mut usize) {
    for _ in 0..100 {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        let Some((phi, g, h)) = eval(prob, x, t, true) else {
            return;
        };
        let neg_h = -h;
        let step = match neg_h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                let mut reg = neg_h;
                let shift = 1e-8 * (1.0 + reg.diagonal().amax());
                for i in 0..prob.dim {
                    reg[(i, i)] += shift;
                }
                match reg.cholesky() {
                    Some(ch) => ch.solve(&g),
                    None => g.clone(),
                }
            }
        };
        let dec = g.dot(&step);
        if dec < 1e-12 {
            return;
        }
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
            if let Some((p2, _, _)) = eval(prob, &trial, t, false) {
                if p2 >= phi + 1e-4 * alpha * dec {
                    *x = trial;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1(x: i64) -> Exponent {
        Exponent::from_ints(&[x])
    }

    #[test]
    fn two_negative_terms_share_capacity() {
        // 1 - a x - b x^3 + x^4 style signomial on |x|: E = {0,1,3,4}
        let exps = vec![e1(0), e1(1), e1(3), e1(4)];
        match solve_sage(&exps, &[1.0, -0.5, -0.5, 1.0], 2000).unwrap() {
            SageOutcome::Feasible { parts, margin } => {
                assert!(margin > 0.0);
                assert_eq!(parts.len(), 2);
                for p in [0usize, 3] {
                    let used: f64 = parts.iter().flat_map(|(_, c)| c.iter()).filter(|(i, _)| *i == p).map(|(_, v)| v).sum();
                    assert!(used <= 1.0 + 1e-12);
                }
            }
            o => panic!("{o:?}"),
        }
        match solve_sage(&exps, &[1.0, -1.5, -1.5, 1.0], 2000).unwrap() {
            SageOutcome::Infeasible { bound, .. } => assert!(bound < 0.0),
            o => panic!("{o:?}"),
        }
    }
}
