use nalgebra::{DMatrix, DVector};

use super::{never, validate_inputs, EventKind, Method, PathEvent, PathTrace, Termination};
use crate::error::{Error, Result};

const COLLINEAR: f64 = 1e-10;

/// Forward stepwise regression without intercept. Each step adds the
/// variable whose inclusion gives the smallest residual sum of squares and
/// refits on the enlarged active set.
pub fn forward_stepwise_path(x: &DMatrix<f64>, y: &DVector<f64>, max_steps: usize) -> Result<PathTrace> {
    forward_stepwise_path_until(x, y, max_steps, &never)
}

/// Candidates are scored by `(X̃ⱼᵀr)² / ‖X̃ⱼ‖²`, the RSS reduction from adding
/// column `j`, where `X̃ⱼ` is `Xⱼ` residualized on the active columns. An
/// orthonormal basis of the active span is grown by Gram–Schmidt so each
/// step costs one pass over `X`.
pub fn forward_stepwise_path_until(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    max_steps: usize,
    stop: &dyn Fn(&PathEvent) -> bool,
) -> Result<PathTrace> {
    let col_sq = validate_inputs(x, y, max_steps)?;
    let (n, p) = x.shape();
    let capacity = n.min(p);
    if max_steps > capacity {
        return Err(Error::InvalidParameter(format!(
            "forward stepwise takes at most min(n, p) = {capacity} steps, asked for {max_steps}"
        )));
    }
    let y_norm = y.norm();
    let tie = 1e-10 * y_norm;
    let mut trace = PathTrace::empty(Method::ForwardStepwise, Termination::StepLimit);
    if y_norm == 0.0 {
        trace.termination = Termination::ResidualZero;
        return Ok(trace);
    }

    let mut active: Vec<usize> = Vec::new();
    let mut excluded = vec![false; p];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    // upper-triangular R stored by column: r_cols[k][i] = R[i, k]
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut qty: Vec<f64> = Vec::new();
    let mut resid_sq = col_sq.clone();
    let mut r = y.clone();

    loop {
        if r.norm() < 1e-10 * y_norm {
            trace.termination = Termination::ResidualZero;
            break;
        }
        if trace.events.len() >= max_steps {
            trace.termination = Termination::StepLimit;
            break;
        }
        if active.len() >= capacity {
            trace.termination = Termination::AllVariablesActive;
            break;
        }
        let step = trace.events.len() + 1;
        let corr = x.tr_mul(&r);

        let (j, q, h, norm) = loop {
            let Some(j) = best_candidate(&corr, &resid_sq, &col_sq, &excluded, tie) else {
                break (usize::MAX, None, Vec::new(), 0.0);
            };
            let (q, h, norm) = orthogonalize(x.column(j).into_owned(), &basis);
            if norm < COLLINEAR * col_sq[j].sqrt() {
                excluded[j] = true;
                continue;
            }
            let stale = (norm * norm - resid_sq[j]).abs() > 1e-8 * col_sq[j];
            resid_sq[j] = norm * norm;
            if stale {
                // running norm drifted; rescore with the exact value
                continue;
            }
            if (corr[j].abs() / norm) <= tie {
                // no remaining column reduces the RSS
                break (usize::MAX, None, Vec::new(), 0.0);
            }
            break (j, Some(q), h, norm);
        };
        let Some(q) = q else {
            trace.termination = Termination::Stalled { step };
            break;
        };

        let mut rcol = h;
        rcol.push(norm);
        r_cols.push(rcol);
        qty.push(q.dot(y));
        let shift = q.dot(&r);
        r.axpy(-shift, &q, 1.0);
        let proj = x.tr_mul(&q);
        for k in 0..p {
            resid_sq[k] -= proj[k] * proj[k];
        }
        basis.push(q);
        active.push(j);
        excluded[j] = true;

        let beta = back_substitute(&r_cols, &qty, &active, p);
        let event = PathEvent {
            step,
            kind: EventKind::Enter,
            variable: j,
            knot: r.norm_squared(),
        };
        trace.events.push(event);
        trace.knot_coefficients.push(beta);
        if stop(&event) {
            trace.termination = Termination::Stopped;
            break;
        }
    }
    Ok(trace)
}

/// Highest-scoring admissible column; ties within `tie` (on the root of the
/// score) go to the lowest index.
fn best_candidate(corr: &DVector<f64>, resid_sq: &[f64], col_sq: &[f64], excluded: &[bool], tie: f64) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for j in 0..corr.len() {
        if excluded[j] {
            continue;
        }
        // a tiny running norm may be cancellation; let orthogonalize decide
        let denom = resid_sq[j].max(COLLINEAR * COLLINEAR * col_sq[j]);
        let score = corr[j].abs() / denom.sqrt();
        match best {
            Some((b, _)) if score <= b + tie => {}
            _ => best = Some((score, j)),
        }
    }
    best.map(|(_, j)| j)
}

/// Two passes of classical Gram–Schmidt. Returns the normalized residual,
/// the projection coefficients, and the residual norm.
fn orthogonalize(mut v: DVector<f64>, basis: &[DVector<f64>]) -> (DVector<f64>, Vec<f64>, f64) {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (k, q) in basis.iter().enumerate() {
            let c = q.dot(&v);
            h[k] += c;
            v.axpy(-c, q, 1.0);
        }
    }
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    (v, h, norm)
}

fn back_substitute(r_cols: &[Vec<f64>], qty: &[f64], active: &[usize], p: usize) -> DVector<f64> {
    let m = qty.len();
    let mut coef = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = qty[i];
        for (k, c) in coef.iter().enumerate().skip(i + 1) {
            s -= r_cols[k][i] * c;
        }
        coef[i] = s / r_cols[i][i];
    }
    let mut beta = DVector::zeros(p);
    for (&j, c) in active.iter().zip(coef) {
        beta[j] = c;
    }
    beta
}
