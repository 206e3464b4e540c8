//! Sequential path engines: least angle regression, the lasso path, and
//! forward stepwise regression.
//!
//! Each engine emits a [`PathTrace`], an ordered list of enter/drop events
//! together with the fitted coefficients at every event. Selection uses raw
//! inner products `Xⱼᵀr`; columns are never rescaled.

mod homotopy;
mod stepwise;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::Dataset;
use crate::error::{Error, Result};

pub use homotopy::{lars_path, lars_path_until, lasso_lars_path, lasso_lars_path_until};
pub use stepwise::{forward_stepwise_path, forward_stepwise_path_until};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "stepwise")]
    ForwardStepwise,
    Lasso,
    #[serde(rename = "lars")]
    LeastAngle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ForwardStepwise, Method::Lasso, Method::LeastAngle];

    pub fn name(self) -> &'static str {
        match self {
            Method::ForwardStepwise => "stepwise",
            Method::Lasso => "lasso",
            Method::LeastAngle => "lars",
        }
    }

    /// Default event budget: `min(n, p)` for stepwise, `8·min(n, p)` for the
    /// homotopy methods since lasso drops lengthen the path.
    pub fn default_max_steps(self, n: usize, p: usize) -> usize {
        let m = n.min(p).max(1);
        match self {
            Method::ForwardStepwise => m,
            Method::Lasso | Method::LeastAngle => 8 * m,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stepwise" | "forward_stepwise" | "forward-stepwise" | "fs" => Ok(Method::ForwardStepwise),
            "lasso" => Ok(Method::Lasso),
            "lars" | "least_angle" | "least-angle" | "lar" => Ok(Method::LeastAngle),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected stepwise, lasso, or lars)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Enter,
    Drop,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Enter => "enter",
            EventKind::Drop => "drop",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    /// 1-based position in the trace.
    pub step: usize,
    pub kind: EventKind,
    pub variable: usize,
    /// λ at the event for lasso/LARS, residual sum of squares after the
    /// step for forward stepwise.
    pub knot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ResidualZero,
    AllVariablesActive,
    StepLimit,
    /// Numerical breakdown; `step` is the event that could not be taken.
    Stalled { step: usize },
    /// The caller's stop predicate fired.
    Stopped,
}

#[derive(Clone, Debug)]
pub struct PathTrace {
    pub method: Method,
    pub events: Vec<PathEvent>,
    /// Fitted coefficients at each event's knot, aligned with `events`.
    /// For lasso/LARS these are the coefficients at λ = knot, before the
    /// entering variable starts to move.
    pub knot_coefficients: Vec<DVector<f64>>,
    pub termination: Termination,
}

impl PathTrace {
    pub(crate) fn empty(method: Method, termination: Termination) -> Self {
        PathTrace {
            method,
            events: Vec::new(),
            knot_coefficients: Vec::new(),
            termination,
        }
    }

    pub fn enter_events(&self) -> impl Iterator<Item = &PathEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Enter)
    }

    /// Variables in order of entry (re-entries repeat).
    pub fn entry_order(&self) -> Vec<usize> {
        self.enter_events().map(|e| e.variable).collect()
    }

    pub fn drop_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Drop).count()
    }

    /// Active-set size after each event.
    pub fn active_sizes(&self) -> Vec<usize> {
        let mut size = 0usize;
        self.events
            .iter()
            .map(|e| {
                match e.kind {
                    EventKind::Enter => size += 1,
                    EventKind::Drop => size -= 1,
                }
                size
            })
            .collect()
    }

    /// Index into `events` of the `rank`-th Enter event (1-based rank).
    pub fn enter_position(&self, rank: usize) -> Option<usize> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == EventKind::Enter)
            .nth(rank.checked_sub(1)?)
            .map(|(i, _)| i)
    }
}

/// Runs `method` with the default step budget when `max_steps` is `None`.
/// The engine stops right after the first event for which `stop` returns
/// true.
pub fn run_path(
    method: Method,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    max_steps: Option<usize>,
    stop: &dyn Fn(&PathEvent) -> bool,
) -> Result<PathTrace> {
    let steps = max_steps.unwrap_or_else(|| method.default_max_steps(x.nrows(), x.ncols()));
    match method {
        Method::ForwardStepwise => forward_stepwise_path_until(x, y, steps, stop),
        Method::Lasso => lasso_lars_path_until(x, y, steps, stop),
        Method::LeastAngle => lars_path_until(x, y, steps, stop),
    }
}

/// Runs `method` on a dataset until the first variable outside the support
/// enters.
pub fn run_until_first_noise(method: Method, data: &Dataset, max_steps: Option<usize>) -> Result<PathTrace> {
    let mut signal = vec![false; data.p()];
    for &j in data.support() {
        signal[j] = true;
    }
    let stop = move |e: &PathEvent| e.kind == EventKind::Enter && !signal[e.variable];
    run_path(method, data.x(), data.y(), max_steps, &stop)
}

pub(crate) fn never(_: &PathEvent) -> bool {
    false
}

pub(crate) fn validate_inputs(x: &DMatrix<f64>, y: &DVector<f64>, max_steps: usize) -> Result<Vec<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but y has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() == 0 || x.nrows() == 0 {
        return Err(Error::InvalidParameter("design must be non-empty".into()));
    }
    if max_steps == 0 {
        return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let mut sq = Vec::with_capacity(x.ncols());
    for (j, col) in x.column_iter().enumerate() {
        let s = col.norm_squared();
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("column {j} has non-finite entries")));
        }
        if s == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        sq.push(s);
    }
    Ok(sq)
}

/// Largest violation of the lasso/LARS stationarity conditions at each
/// knot, relative to `max(λ, ‖y‖)`. With `signs_from_coefficients` the
/// active conditions are `Xⱼᵀr = λ·sign(β̂ⱼ)` (lasso); otherwise only the
/// equal-magnitude condition `|Xⱼᵀr| = λ` is checked (LARS).
pub fn max_kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, trace: &PathTrace, signs_from_coefficients: bool) -> f64 {
    let ynorm = y.norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (event, beta) in trace.events.iter().zip(&trace.knot_coefficients) {
        let lambda = event.knot;
        let r = y - x * beta;
        let c = x.tr_mul(&r);
        let mut active = vec![false; x.ncols()];
        for (j, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                active[j] = true;
            }
        }
        if event.kind == EventKind::Enter {
            active[event.variable] = true;
        }
        for j in 0..x.ncols() {
            let v = if active[j] {
                if signs_from_coefficients && beta[j] != 0.0 {
                    (c[j] - lambda * beta[j].signum()).abs() / lambda.max(ynorm)
                } else {
                    (c[j].abs() - lambda).abs() / lambda.max(ynorm)
                }
            } else {
                (c[j].abs() - lambda).max(0.0) / ynorm
            };
            worst = worst.max(v);
        }
    }
    worst
}
