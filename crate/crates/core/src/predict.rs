//! Closed-form prediction of the first-spurious rank.
//!
//! For `k` above the sparsity cutoff `n/(2 ln p)` the rank of the first
//! noise variable is predicted by
//!
//! ```text
//! log T ≈ √(2n ln p / k) − n/(2k) + ln(n / (2p ln p))
//! ```
//!
//! and at or below the cutoff the prediction is `k + 1` (every signal enters
//! first). All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    BelowCutoff,
    AboveCutoff,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::BelowCutoff => "below_cutoff",
            Regime::AboveCutoff => "above_cutoff",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub log_rank: f64,
    /// Never rounded.
    pub rank: f64,
    pub regime: Regime,
    pub cutoff: f64,
}

/// `n / (2 ln p)`.
pub fn sparsity_cutoff(n: f64, p: f64) -> f64 {
    n / (2.0 * p.ln())
}

/// The log-rank formula at real-valued arguments.
pub fn log_rank_formula(n: f64, p: f64, k: f64) -> f64 {
    let lp = p.ln();
    (2.0 * n * lp / k).sqrt() - n / (2.0 * k) + (n / (2.0 * p * lp)).ln()
}

/// The same quantity written as `−(√ln p − √(n/2k))² + ln(n/(2 ln p))`.
pub fn log_rank_completed_square(n: f64, p: f64, k: f64) -> f64 {
    let lp = p.ln();
    -(lp.sqrt() - (n / (2.0 * k)).sqrt()).powi(2) + (n / (2.0 * lp)).ln()
}

/// Requires `p ≥ 2` and `k ≥ 1`.
pub fn predicted_log_rank(n: usize, p: usize, k: usize) -> f64 {
    assert!(p >= 2 && k >= 1 && n >= 1, "predicted_log_rank needs n >= 1, p >= 2, k >= 1");
    log_rank_formula(n as f64, p as f64, k as f64)
}

pub fn predicted_rank(n: usize, p: usize, k: usize) -> Result<Prediction> {
    if n == 0 || p < 2 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "prediction needs n >= 1, p >= 2, k >= 1 (got n = {n}, p = {p}, k = {k})"
        )));
    }
    let cutoff = sparsity_cutoff(n as f64, p as f64);
    let log_rank = predicted_log_rank(n, p, k);
    let (regime, rank) = if (k as f64) <= cutoff {
        (Regime::BelowCutoff, k as f64 + 1.0)
    } else {
        (Regime::AboveCutoff, log_rank.exp())
    };
    Ok(Prediction {
        n,
        p,
        k,
        log_rank,
        rank,
        regime,
        cutoff,
    })
}

/// Leading-order bound `exp(√(2δ ln p / ε))` in the linear-sparsity regime
/// `k = εp`, `n = δp`.
pub fn linear_sparsity_bound(p: usize, epsilon: f64, delta: f64) -> f64 {
    (2.0 * delta * (p as f64).ln() / epsilon).sqrt().exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderStatApprox {
    pub value: f64,
    /// The `ln ln(m/i)` correction was dropped because `m/i ≤ e`.
    pub correction_dropped: bool,
}

/// Approximate `i`-th largest of `m` independent standard normals:
/// `√(2L) − ln L / (2√(2L))` with `L = ln(m/i)`. Meant for `i/m` small.
pub fn normal_order_stat_approx(m: usize, i: usize) -> Result<OrderStatApprox> {
    if i == 0 || i >= m {
        return Err(Error::InvalidParameter(format!(
            "order statistic index must satisfy 1 <= i < m (got i = {i}, m = {m})"
        )));
    }
    Ok(order_stat_approx_ratio(m as f64 / i as f64))
}

/// [`normal_order_stat_approx`] in terms of the ratio `m/i > 1`.
pub fn order_stat_approx_ratio(ratio: f64) -> OrderStatApprox {
    let l = ratio.ln();
    let lead = (2.0 * l).sqrt();
    if ratio <= std::f64::consts::E {
        OrderStatApprox {
            value: lead,
            correction_dropped: true,
        }
    } else {
        OrderStatApprox {
            value: lead - l.ln() / (2.0 * lead),
            correction_dropped: false,
        }
    }
}
