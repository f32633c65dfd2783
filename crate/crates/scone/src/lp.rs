//! Dense two-phase simplex for the small feasibility LPs used here.
//!
//! Problems have a handful of rows and at most a few free variables, so a
//! tableau with Bland's rule is plenty.

const EPS: f64 = 1e-10;

/// Outcome of `maximize cᵀx s.t. A x ≤ b` with `x` free.
#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Maximizes `c·x` over `{x ∈ ℝⁿ : A x ≤ b}`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpResult {
    let n = c.len();
    let m = a.len();
    // x = xp - xn, one slack per row, one artificial per row with b < 0
    let neg: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let n_art = neg.iter().filter(|&&x| x).count();
    let cols = 2 * n + m + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art = 0;
    for i in 0..m {
        let s = if neg[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[i][j];
            t[i][n + j] = -s * a[i][j];
        }
        t[i][2 * n + i] = s;
        t[i][cols] = s * b[i];
        if neg[i] {
            let col = 2 * n + m + art;
            t[i][col] = 1.0;
            basis[i] = col;
            art += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }
    if n_art > 0 {
        // phase one: minimize the sum of artificials
        let mut obj = vec![0.0; cols + 1];
        for k in 0..n_art {
            obj[2 * n + m + k] = -1.0;
        }
        if run(&mut t, &mut basis, &mut obj, cols).is_err() {
            return LpResult::Infeasible;
        }
        let infeas: f64 = (0..m)
            .filter(|&i| basis[i] >= 2 * n + m)
            .map(|i| t[i][cols])
            .sum();
        let scale = 1.0 + b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        if infeas > 1e-9 * scale {
            return LpResult::Infeasible;
        }
        // pivot remaining artificials out where possible
        for i in 0..m {
            if basis[i] >= 2 * n + m {
                if let Some(j) = (0..2 * n + m).find(|&j| t[i][j].abs() > EPS) {
                    pivot(&mut t, &mut basis, i, j, cols);
                }
            }
        }
        for row in t.iter_mut() {
            for k in 0..n_art {
                row[2 * n + m + k] = 0.0;
            }
        }
    }
    let mut obj = vec![0.0; cols + 1];
    for j in 0..n {
        obj[j] = c[j];
        obj[n + j] = -c[j];
    }
    let real_cols = 2 * n + m;
    match run(&mut t, &mut basis, &mut obj, real_cols) {
        Err(()) => LpResult::Unbounded,
        Ok(()) => {
            let mut xv = vec![0.0; 2 * n];
            for i in 0..m {
                if basis[i] < 2 * n {
                    xv[basis[i]] = t[i][cols];
                }
            }
            let x: Vec<f64> = (0..n).map(|j| xv[j] - xv[n + j]).collect();
            let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            LpResult::Optimal { x, value }
        }
    }
}

/// Whether `{x : A x ≤ b}` is non-empty, with a point when it is.
pub fn feasible(a: &[Vec<f64>], b: &[f64], n: usize) -> Option<Vec<f64>> {
    match maximize(&vec![0.0; n], a, b) {
        LpResult::Optimal { x, .. } => Some(x),
        LpResult::Unbounded => Some(vec![0.0; n]),
        LpResult::Infeasible => None,
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize, cols: usize) {
    let p = t[r][c];
    for x in t[r].iter_mut() {
        *x /= p;
    }
    for i in 0..t.len() {
        if i != r {
            let k = t[i][c];
            if k != 0.0 {
                for j in 0..=cols {
                    t[i][j] -= k * t[r][j];
                }
            }
        }
    }
    basis[r] = c;
}

/// Maximizes `obj` (as a cost row over the tableau columns) restricted to the
/// first `active` columns.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], obj: &mut [f64], active: usize) -> Result<(), ()> {
    let cols = obj.len() - 1;
    let m = t.len();
    for _ in 0..10_000 {
        // reduced costs: obj_j - sum over basis of obj_b * t_ij
        let mut enter = None;
        for j in 0..active {
            if basis.contains(&j) {
                continue;
            }
            let rc = obj[j] - (0..m).map(|i| obj[basis[i]] * t[i][j]).sum::<f64>();
            if rc > EPS {
                enter = Some(j);
                break;
            }
        }
        let Some(j) = enter else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][j] > EPS {
                let ratio = t[i][cols] / t[i][j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio <= lr + EPS && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(());
        };
        pivot(t, basis, r, j, cols);
    }
    Ok(())
}
