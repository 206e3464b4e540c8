//! Signal/noise labeling of path events, the first-spurious rank, and the
//! diagnostics that explain it.

use std::collections::HashSet;

use serde::Serialize;

use crate::design::Dataset;
use crate::error::{Error, Result};
use crate::seqpath::{EventKind, Method, PathEvent, PathTrace};

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    /// 1-based position of the first noise variable among Enter events.
    pub rank: Option<usize>,
    pub first_noise_variable: Option<usize>,
    pub signals_before: usize,
    pub drops_before_first_noise: usize,
    pub labeled_events: Vec<(PathEvent, bool)>,
}

/// Counts signal entries up to the first Enter event outside `support`.
/// Re-entries after a drop count positionally.
pub fn first_spurious_rank(trace: &PathTrace, support: &[usize]) -> RankReport {
    let support: HashSet<usize> = support.iter().copied().collect();
    let labeled_events: Vec<(PathEvent, bool)> =
        trace.events.iter().map(|e| (*e, support.contains(&e.variable))).collect();

    let mut signals_before = 0;
    let mut drops = 0;
    let mut first_noise = None;
    for (event, is_signal) in &labeled_events {
        match (event.kind, is_signal) {
            (EventKind::Drop, _) => drops += 1,
            (EventKind::Enter, true) => signals_before += 1,
            (EventKind::Enter, false) => {
                first_noise = Some(event.variable);
                break;
            }
        }
    }
    RankReport {
        rank: first_noise.map(|_| signals_before + 1),
        first_noise_variable: first_noise,
        signals_before,
        drops_before_first_noise: drops,
        labeled_events,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaStat {
    /// `βᵀXᵀy / (√k·M·‖y‖)`.
    pub gamma: f64,
    /// `‖y‖ / √k`.
    pub d: f64,
}

/// Alignment between the signal and the response, defined for signals with
/// a single common coefficient value.
pub fn compute_gamma(data: &Dataset) -> Result<GammaStat> {
    let support = data.support();
    let Some(&first) = support.first() else {
        return Err(Error::EmptySupport);
    };
    let m = data.beta()[first];
    if let Some(&other) = support.iter().find(|&&j| data.beta()[j] != m) {
        return Err(Error::MixedMagnitudes(m, data.beta()[other]));
    }
    let y_norm = data.y().norm();
    if y_norm == 0.0 {
        return Err(Error::InvalidParameter("the response is zero".into()));
    }
    let k = (support.len() as f64).sqrt();
    let xty = data.x().tr_mul(data.y());
    let bxy: f64 = support.iter().map(|&j| data.beta()[j] * xty[j]).sum();
    Ok(GammaStat {
        gamma: bxy / (k * m * y_norm),
        d: y_norm / k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InnerProfile {
    /// `max_{j∉S} |Xⱼᵀr|`; zero when every column is in the support.
    pub max_offsupport: f64,
    /// Deciles (10%, …, 90%) of `{|Xⱼᵀr| : j ∈ S}`.
    pub onsupport_deciles: Vec<f64>,
}

/// Inner products with the residual at the knot where the `at_rank`-th
/// variable is about to enter.
pub fn residual_inner_profile(data: &Dataset, trace: &PathTrace, at_rank: usize) -> Result<InnerProfile> {
    let available = trace.enter_events().count();
    let pos = trace
        .enter_position(at_rank)
        .ok_or(Error::RankOutOfRange { requested: at_rank, available })?;
    // stepwise stores post-step fits, lasso/LARS store the fit at the knot
    let beta = match trace.method {
        Method::ForwardStepwise if pos == 0 => None,
        Method::ForwardStepwise => Some(&trace.knot_coefficients[pos - 1]),
        _ => Some(&trace.knot_coefficients[pos]),
    };
    let r = match beta {
        Some(b) => data.y() - data.x() * b,
        None => data.y().clone(),
    };
    let inner = data.x().tr_mul(&r);
    let mut in_support = vec![false; data.p()];
    for &j in data.support() {
        in_support[j] = true;
    }
    let max_offsupport = (0..data.p())
        .filter(|&j| !in_support[j])
        .map(|j| inner[j].abs())
        .fold(0.0, f64::max);
    let mut on: Vec<f64> = data.support().iter().map(|&j| inner[j].abs()).collect();
    on.sort_by(f64::total_cmp);
    let onsupport_deciles = if on.is_empty() {
        Vec::new()
    } else {
        (1..10).map(|d| quantile_sorted(&on, d as f64 / 10.0)).collect()
    };
    Ok(InnerProfile {
        max_offsupport,
        onsupport_deciles,
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqpath::Termination;
    use nalgebra::{DMatrix, DVector};

    fn trace_of(vars: &[(EventKind, usize)]) -> PathTrace {
        let events = vars
            .iter()
            .enumerate()
            .map(|(i, &(kind, variable))| PathEvent {
                step: i + 1,
                kind,
                variable,
                knot: (vars.len() - i) as f64,
            })
            .collect::<Vec<_>>();
        PathTrace {
            method: Method::Lasso,
            knot_coefficients: vec![DVector::zeros(10); events.len()],
            events,
            termination: Termination::StepLimit,
        }
    }

    #[test]
    fn empty_support_makes_first_entry_spurious() {
        let t = trace_of(&[(EventKind::Enter, 4), (EventKind::Enter, 2)]);
        let r = first_spurious_rank(&t, &[]);
        assert_eq!(r.rank, Some(1));
        assert_eq!(r.first_noise_variable, Some(4));
        assert_eq!(r.signals_before, 0);
    }

    #[test]
    fn full_support_has_no_spurious_rank() {
        let t = trace_of(&[(EventKind::Enter, 1), (EventKind::Enter, 0)]);
        let r = first_spurious_rank(&t, &[0, 1, 2]);
        assert_eq!(r.rank, None);
        assert_eq!(r.signals_before, 2);
        let empty = trace_of(&[]);
        let r = first_spurious_rank(&empty, &[0]);
        assert_eq!((r.rank, r.signals_before), (None, 0));
    }

    #[test]
    fn direct_count() {
        let t = trace_of(&[(EventKind::Enter, 3), (EventKind::Enter, 7), (EventKind::Enter, 1)]);
        let r = first_spurious_rank(&t, &[3, 1]);
        assert_eq!(r.rank, Some(2));
        assert_eq!(r.first_noise_variable, Some(7));
        assert_eq!(r.labeled_events.len(), 3);
        assert_eq!(
            r.labeled_events.iter().map(|(_, s)| *s).collect::<Vec<_>>(),
            vec![true, false, true]
        );
    }

    #[test]
    fn drops_and_reentries_count_positionally() {
        let t = trace_of(&[
            (EventKind::Enter, 0),
            (EventKind::Enter, 1),
            (EventKind::Drop, 0),
            (EventKind::Enter, 0),
            (EventKind::Enter, 5),
        ]);
        let r = first_spurious_rank(&t, &[0, 1]);
        assert_eq!(r.rank, Some(4));
        assert_eq!(r.signals_before, 3);
        assert_eq!(r.drops_before_first_noise, 1);
    }

    #[test]
    fn gamma_single_unit_column_noiseless() {
        let x = DMatrix::from_row_slice(3, 2, &[0.6, 1.0, 0.8, -2.0, 0.0, 0.5]);
        let beta = DVector::from_vec(vec![7.0, 0.0]);
        let y = &x * &beta;
        let d = Dataset::new(x, beta, y, 0.0).unwrap();
        let g = compute_gamma(&d).unwrap();
        assert!((g.gamma - 1.0).abs() < 1e-15);
        assert!((g.d - 7.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_noiseless_general() {
        let x = DMatrix::from_row_slice(3, 3, &[0.6, 1.0, 0.3, 0.8, -2.0, 0.1, 0.0, 0.5, -0.7]);
        let beta = DVector::from_vec(vec![-2.0, 0.0, -2.0]);
        let y = &x * &beta;
        let d = Dataset::new(x, beta, y.clone(), 0.0).unwrap();
        let g = compute_gamma(&d).unwrap();
        let want = y.norm() / (2f64.sqrt() * -2.0);
        assert!((g.gamma - want).abs() < 1e-14);
    }

    #[test]
    fn gamma_rejects_mixed_or_empty_support() {
        let x = DMatrix::identity(2, 2);
        let mixed = Dataset::new(x.clone(), DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![1.0, 2.0]), 0.0).unwrap();
        assert!(matches!(compute_gamma(&mixed), Err(Error::MixedMagnitudes(..))));
        let none = Dataset::new(x, DVector::zeros(2), DVector::from_vec(vec![1.0, 2.0]), 1.0).unwrap();
        assert!(matches!(compute_gamma(&none), Err(Error::EmptySupport)));
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert!((quantile_sorted(&v, 0.1) - 1.4).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[2.0], 0.9), 2.0);
    }
}
