//! Slow reference solvers for validating the path engines on small
//! problems. They share no code with `seqpath`: the lasso oracle is cyclic
//! coordinate descent and the stepwise oracle refits every candidate with a
//! dense QR factorization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub coefficients: DVector<f64>,
    /// `½‖y − Xb‖² + λ‖b‖₁` at `coefficients`.
    pub objective: f64,
    /// Full sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Largest violation of the lasso stationarity conditions.
    pub kkt_residual: f64,
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * (y - x * b).norm_squared() + lambda * b.lp_norm(1)
}

pub fn lasso_kkt_residual(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> f64 {
    let g = x.tr_mul(&(y - x * b));
    g.iter()
        .zip(b.iter())
        .map(|(&gj, &bj)| {
            if bj != 0.0 {
                (gj - lambda * bj.signum()).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Lasso solution at a fixed penalty by cyclic coordinate minimization from
/// a zero start, stopping once a full sweep moves no coefficient by more
/// than `tol·(1 + ‖y‖)`.
///
/// Coordinate descent crawls along directions of small curvature, so the
/// iterate is then refined by solving the stationarity equations on its
/// support with its signs. The refit is kept only if it preserves those
/// signs and does not increase the KKT residual. `converged` reports
/// whether the final KKT residual is within `tol·(1 + ‖y‖)`.
pub fn lasso_at_lambda(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<OracleSolution> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if !(lambda >= 0.0) || !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(format!(
            "need lambda >= 0, tol > 0, max_iter >= 1 (got {lambda}, {tol}, {max_iter})"
        )));
    }
    let p = x.ncols();
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let threshold = tol * (1.0 + y.norm());
    let mut b = DVector::zeros(p);
    let mut r = y.clone();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = b[j];
            let rho = col.dot(&r) + col_sq[j] * old;
            let new = soft_threshold(rho, lambda) / col_sq[j];
            if new != old {
                r.axpy(old - new, &col, 1.0);
                b[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if iterations % 1000 == 0 {
            r = y - x * &b;
        }
        if max_change < threshold {
            converged = true;
            break;
        }
    }

    let mut kkt = lasso_kkt_residual(x, y, &b, lambda);
    if let Some(refit) = support_refit(x, y, &b, lambda) {
        let refit_kkt = lasso_kkt_residual(x, y, &refit, lambda);
        if refit_kkt <= kkt {
            b = refit;
            kkt = refit_kkt;
        }
    }
    Ok(OracleSolution {
        objective: lasso_objective(x, y, &b, lambda),
        kkt_residual: kkt,
        coefficients: b,
        iterations,
        converged: converged || kkt <= threshold,
    })
}

/// Solves `X_Aᵀ X_A b_A = X_Aᵀ y − λ s_A` for the support `A` and signs `s`
/// of `b`. Variables whose refitted sign flips are removed from `A` and the
/// solve repeated; `None` if the Gram matrix is singular or `A` empties.
fn support_refit(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut support: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
    while !support.is_empty() {
        let xa = DMatrix::from_fn(x.nrows(), support.len(), |i, k| x[(i, support[k])]);
        let rhs = DVector::from_fn(support.len(), |k, _| xa.column(k).dot(y) - lambda * b[support[k]].signum());
        let sol = (xa.transpose() * &xa).cholesky()?.solve(&rhs);
        let keep: Vec<usize> = (0..support.len())
            .filter(|&k| sol[k] != 0.0 && sol[k].signum() == b[support[k]].signum())
            .collect();
        if keep.len() == support.len() {
            let mut out = DVector::zeros(b.len());
            for (k, &j) in support.iter().enumerate() {
                out[j] = sol[k];
            }
            return Some(out);
        }
        support = keep.into_iter().map(|k| support[k]).collect();
    }
    None
}

/// Exact least-squares RSS of `y` on the columns `cols`, or `None` when the
/// last column is numerically dependent on the others.
fn dense_rss(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> Option<f64> {
    let n = x.nrows();
    let m = DMatrix::from_fn(n, cols.len(), |i, k| x[(i, cols[k])]);
    if cols.len() > n {
        return None;
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let last = cols.len() - 1;
    let last_norm = x.column(cols[last]).norm();
    if r[(last, last)].abs() < 1e-10 * last_norm {
        return None;
    }
    let qty = qr.q().tr_mul(y);
    let coef = r.solve_upper_triangular(&qty)?;
    Some((y - &m * coef).norm_squared())
}

/// One greedy forward-selection step: refits every candidate outside
/// `active` from scratch and returns the one with the smallest RSS, ties
/// within `1e-10·‖y‖²` going to the lowest index.
pub fn greedy_rss_step(x: &DMatrix<f64>, y: &DVector<f64>, active: &[usize]) -> Result<(usize, f64)> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    let tie = 1e-10 * y.norm_squared();
    let mut cols = active.to_vec();
    cols.push(0);
    let mut best: Option<(f64, usize)> = None;
    for j in 0..x.ncols() {
        if active.contains(&j) {
            continue;
        }
        *cols.last_mut().expect("nonempty") = j;
        let Some(rss) = dense_rss(x, y, &cols) else {
            continue;
        };
        match best {
            Some((b, _)) if rss >= b - tie => {}
            _ => best = Some((rss, j)),
        }
    }
    best.map(|(rss, j)| (j, rss)).ok_or(Error::NoAdmissibleCandidate)
}
