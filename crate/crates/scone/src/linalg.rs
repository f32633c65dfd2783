//! Exact rational linear algebra on small dense matrices.

use num_traits::{One, Zero};

use crate::num::Rat;

pub type Mat = Vec<Vec<Rat>>;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Mat) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = vec![];
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rat::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let k = m[i][c].clone();
                for j in 0..cols {
                    let t = &k * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Mat) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of `{x : m x = 0}`.
pub fn nullspace(m: &Mat, cols: usize) -> Vec<Vec<Rat>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rat::zero(); cols];
            x[f] = Rat::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Unique(Vec<Rat>),
    Many(Vec<Rat>),
    Inconsistent,
}

/// Solves `m x = b`. `Many` carries the particular solution with free variables at zero.
pub fn solve(m: &Mat, b: &[Rat]) -> Solution {
    let cols = m.first().map_or(0, |r| r.len());
    let mut aug: Mat = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&cols) {
        return Solution::Inconsistent;
    }
    let mut x = vec![Rat::zero(); cols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][cols].clone();
    }
    if pivots.len() == cols {
        Solution::Unique(x)
    } else {
        Solution::Many(x)
    }
}

/// Orthonormal basis (columns) of the span of `vecs`, by modified Gram-Schmidt.
pub fn orthonormal_span(vecs: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = vec![];
    let scale = vecs
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    for v in vecs {
        let mut u = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let d: f64 = u.iter().zip(b).map(|(a, c)| a * c).sum();
                for k in 0..dim {
                    u[k] -= d * b[k];
                }
            }
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 * scale {
            basis.push(u.iter().map(|x| x / norm).collect());
        }
        if basis.len() == dim {
            break;
        }
    }
    basis
}
