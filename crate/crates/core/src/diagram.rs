//! Double-ranking diagram: each variable's entry rank along a path
//! (horizontal) against its rank by least-squares t-value (vertical).
//!
//! The t-values omit the noise level, which is common to all variables and
//! does not change the ranking.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seqpath::PathTrace;

const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagramRow {
    pub variable: usize,
    /// Position among Enter events, `None` if the variable never entered.
    pub h_rank: Option<usize>,
    pub v_rank: usize,
    pub t_stat: f64,
    pub is_signal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagramTable {
    pub rows: Vec<DiagramRow>,
}

/// `|β̂ⱼ| / √[(XᵀX)⁻¹]ⱼⱼ` for the least-squares fit, via a QR factorization
/// of `X`. The inverse diagonal is the squared row norm of `R⁻¹`.
pub fn least_squares_tstats(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::NotOverdetermined { n, p });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("X has {n} rows but y has {} entries", y.len())));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..p).map(|i| r[(i, i)].abs()).collect();
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diag.iter().copied().fold(0.0, f64::max);
    let cond = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularGram(cond));
    }
    let qty = qr.q().tr_mul(y);
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::SingularGram(cond))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::SingularGram(cond))?;
    Ok(DVector::from_fn(p, |j, _| {
        let var = r_inv.row(j).norm_squared();
        beta[j].abs() / var.sqrt()
    }))
}

/// Ranks by descending `|t|`, lowest index first on ties. Returns the
/// 1-based rank of each variable.
pub fn vertical_ranks(tstats: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tstats.len()).collect();
    order.sort_by(|&a, &b| tstats[b].abs().total_cmp(&tstats[a].abs()).then(a.cmp(&b)));
    let mut ranks = vec![0; tstats.len()];
    for (pos, &j) in order.iter().enumerate() {
        ranks[j] = pos + 1;
    }
    ranks
}

pub fn double_ranking(trace: &PathTrace, tstats: &DVector<f64>, support: &[usize]) -> Result<DiagramTable> {
    let p = tstats.len();
    let mut h_rank = vec![None; p];
    for (pos, e) in trace.enter_events().enumerate() {
        if e.variable >= p {
            return Err(Error::DimensionMismatch(format!(
                "trace mentions variable {} but only {p} t-values were given",
                e.variable
            )));
        }
        h_rank[e.variable].get_or_insert(pos + 1);
    }
    let mut is_signal = vec![false; p];
    for &j in support {
        if j >= p {
            return Err(Error::DimensionMismatch(format!("support index {j} exceeds p = {p}")));
        }
        is_signal[j] = true;
    }
    let v = vertical_ranks(tstats);
    Ok(DiagramTable {
        rows: (0..p)
            .map(|j| DiagramRow {
                variable: j,
                h_rank: h_rank[j],
                v_rank: v[j],
                t_stat: tstats[j],
                is_signal: is_signal[j],
            })
            .collect(),
    })
}

impl DiagramTable {
    /// The first `count` noise variables in path order.
    pub fn early_noise(&self, count: usize) -> Vec<&DiagramRow> {
        let mut noise: Vec<&DiagramRow> = self.rows.iter().filter(|r| !r.is_signal && r.h_rank.is_some()).collect();
        noise.sort_by_key(|r| r.h_rank);
        noise.truncate(count);
        noise
    }

    /// True if the earliest noise variable along the path has a larger
    /// vertical rank than every signal variable.
    pub fn first_noise_separated(&self) -> Option<bool> {
        let first = *self.early_noise(1).first()?;
        let worst_signal = self.rows.iter().filter(|r| r.is_signal).map(|r| r.v_rank).max().unwrap_or(0);
        Some(first.v_rank > worst_signal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Separation {
    pub holds: bool,
    /// `n / p`.
    pub delta: f64,
    /// `3·√(2δ ln p / (δ − 1))`.
    pub threshold: f64,
}

/// Signal-to-noise condition under which the first noise variable ranks
/// below every signal vertically.
pub fn separation_condition(n: usize, p: usize, m_over_sigma: f64) -> Result<Separation> {
    if n <= p {
        return Err(Error::NotOverdetermined { n, p });
    }
    let delta = n as f64 / p as f64;
    let threshold = separation_threshold(delta, p);
    Ok(Separation {
        holds: m_over_sigma > threshold,
        delta,
        threshold,
    })
}

pub fn separation_threshold(delta: f64, p: usize) -> f64 {
    3.0 * (2.0 * delta * (p as f64).ln() / (delta - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqpath::{EventKind, Method, PathEvent, Termination};

    fn trace_entering(vars: &[usize]) -> PathTrace {
        PathTrace {
            method: Method::LeastAngle,
            events: vars
                .iter()
                .enumerate()
                .map(|(i, &v)| PathEvent { step: i + 1, kind: EventKind::Enter, variable: v, knot: 1.0 })
                .collect(),
            knot_coefficients: vec![DVector::zeros(2); vars.len()],
            termination: Termination::StepLimit,
        }
    }

    #[test]
    fn two_variable_table() {
        let t = DVector::from_vec(vec![5.0, 3.0]);
        let table = double_ranking(&trace_entering(&[1, 0]), &t, &[]).unwrap();
        assert_eq!((table.rows[0].h_rank, table.rows[0].v_rank), (Some(2), 1));
        assert_eq!((table.rows[1].h_rank, table.rows[1].v_rank), (Some(1), 2));
    }

    #[test]
    fn empty_trace_leaves_horizontal_ranks_absent() {
        let t = DVector::from_vec(vec![1.0, -4.0, 4.0, 0.5]);
        let table = double_ranking(&trace_entering(&[]), &t, &[2]).unwrap();
        assert!(table.rows.iter().all(|r| r.h_rank.is_none()));
        let v: Vec<usize> = table.rows.iter().map(|r| r.v_rank).collect();
        assert_eq!(v, vec![3, 1, 2, 4]);
        assert!(table.rows[2].is_signal);
        assert_eq!(table.first_noise_separated(), None);
    }

    #[test]
    fn orthonormal_tstats_are_inner_products() {
        let x = DMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let t = least_squares_tstats(&x, &y).unwrap();
        let c = x.tr_mul(&y);
        for j in 0..2 {
            assert!((t[j] - c[j].abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_wide_and_singular_designs() {
        let wide = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            least_squares_tstats(&wide, &DVector::zeros(2)),
            Err(Error::NotOverdetermined { n: 2, p: 2 })
        ));
        let dup = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(
            least_squares_tstats(&dup, &DVector::from_vec(vec![1.0, 2.0, 3.0])),
            Err(Error::SingularGram(_))
        ));
    }

    #[test]
    fn separation_threshold_cases() {
        let s = separation_condition(400, 100, 1.0).unwrap();
        assert_eq!(s.delta, 4.0);
        assert!((s.threshold - 3.0 * (8.0 * 100f64.ln() / 3.0).sqrt()).abs() < 1e-12);
        let at = separation_condition(400, 100, s.threshold).unwrap();
        assert!(!at.holds);
        assert!(separation_condition(400, 100, s.threshold * 1.0001).unwrap().holds);
        assert!(separation_condition(100, 100, 10.0).is_err());
    }
}
