use nalgebra::{DMatrix, DVector};

use super::{never, validate_inputs, EventKind, Method, PathEvent, PathTrace, Termination};
use crate::cholesky::UpdatableCholesky;
use crate::error::Result;

const REFACTOR_EVERY: usize = 50;
const MAX_CONDITION: f64 = 1e12;

/// Least angle regression. Variables only ever enter.
pub fn lars_path(x: &DMatrix<f64>, y: &DVector<f64>, max_steps: usize) -> Result<PathTrace> {
    lars_path_until(x, y, max_steps, &never)
}

pub fn lars_path_until(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    max_steps: usize,
    stop: &dyn Fn(&PathEvent) -> bool,
) -> Result<PathTrace> {
    Homotopy::new(x, y, false)?.run(max_steps, stop)
}

/// The lasso path: LARS with a variable leaving the active set whenever its
/// coefficient reaches zero.
pub fn lasso_lars_path(x: &DMatrix<f64>, y: &DVector<f64>, max_steps: usize) -> Result<PathTrace> {
    lasso_lars_path_until(x, y, max_steps, &never)
}

pub fn lasso_lars_path_until(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    max_steps: usize,
    stop: &dyn Fn(&PathEvent) -> bool,
) -> Result<PathTrace> {
    Homotopy::new(x, y, true)?.run(max_steps, stop)
}

/// Shared state of the LARS/lasso homotopy in the λ parametrization: along
/// a segment the active inner products satisfy `X_Aᵀr = λ·s_A` and the
/// coefficients move along `(X_AᵀX_A)⁻¹·s_A` as λ decreases.
struct Homotopy<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    lasso: bool,
    col_sq: Vec<f64>,
    y_norm: f64,
    // active variables in factor order, with their signs
    active: Vec<usize>,
    signs: Vec<f64>,
    is_active: Vec<bool>,
    chol: UpdatableCholesky,
    beta: DVector<f64>,
    lambda: f64,
    corr: DVector<f64>,
}

enum Next {
    Enter(usize),
    Drop(usize),
    Finish,
}

impl<'a> Homotopy<'a> {
    fn new(x: &'a DMatrix<f64>, y: &'a DVector<f64>, lasso: bool) -> Result<Self> {
        let col_sq = validate_inputs(x, y, 1)?;
        Ok(Homotopy {
            x,
            y,
            lasso,
            col_sq,
            y_norm: y.norm(),
            active: Vec::new(),
            signs: Vec::new(),
            is_active: vec![false; x.ncols()],
            chol: UpdatableCholesky::new(),
            beta: DVector::zeros(x.ncols()),
            lambda: 0.0,
            corr: x.tr_mul(y),
        })
    }

    fn method(&self) -> Method {
        if self.lasso {
            Method::Lasso
        } else {
            Method::LeastAngle
        }
    }

    fn run(mut self, max_steps: usize, stop: &dyn Fn(&PathEvent) -> bool) -> Result<PathTrace> {
        validate_inputs(self.x, self.y, max_steps)?;
        let method = self.method();
        if self.y_norm == 0.0 {
            return Ok(PathTrace::empty(method, Termination::ResidualZero));
        }
        let (n, p) = self.x.shape();
        let capacity = n.min(p);
        let tie = 1e-10 * self.y_norm;

        let mut trace = PathTrace::empty(method, Termination::StepLimit);
        let first = {
            let top = self.corr.amax();
            self.lambda = top;
            (0..p).find(|&j| self.corr[j].abs() >= top - tie).expect("some column attains the max")
        };
        let mut next = Next::Enter(first);
        let mut just_dropped: Option<usize>;

        loop {
            let step = trace.events.len() + 1;
            let event = match next {
                Next::Enter(j) => {
                    if !self.add(j) {
                        trace.termination = Termination::Stalled { step };
                        break;
                    }
                    just_dropped = None;
                    PathEvent { step, kind: EventKind::Enter, variable: j, knot: self.lambda }
                }
                Next::Drop(j) => {
                    self.remove(j);
                    just_dropped = Some(j);
                    PathEvent { step, kind: EventKind::Drop, variable: j, knot: self.lambda }
                }
                Next::Finish => {
                    trace.termination = if self.residual_norm() <= 1e-10 * self.y_norm {
                        Termination::ResidualZero
                    } else {
                        Termination::Stalled { step }
                    };
                    break;
                }
            };
            trace.events.push(event);
            trace.knot_coefficients.push(self.beta.clone());

            if stop(&event) {
                trace.termination = Termination::Stopped;
                break;
            }
            if self.residual_norm() < 1e-10 * self.y_norm {
                trace.termination = Termination::ResidualZero;
                break;
            }
            if trace.events.len() >= max_steps {
                trace.termination = Termination::StepLimit;
                break;
            }
            if self.active.len() >= capacity {
                trace.termination = Termination::AllVariablesActive;
                break;
            }
            if self.chol.updates() >= REFACTOR_EVERY && !self.refactor() {
                trace.termination = Termination::Stalled { step: step + 1 };
                break;
            }
            next = self.advance(tie, just_dropped);
        }
        Ok(trace)
    }

    fn residual(&self) -> DVector<f64> {
        let mut r = self.y.clone();
        for &j in &self.active {
            r.axpy(-self.beta[j], &self.x.column(j), 1.0);
        }
        r
    }

    fn residual_norm(&self) -> f64 {
        self.residual().norm()
    }

    fn gram(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.col_sq[i]
        } else {
            self.x.column(i).dot(&self.x.column(j))
        }
    }

    /// Adds `j` to the active set; false if the Gram matrix turns singular.
    fn add(&mut self, j: usize) -> bool {
        let cross: Vec<f64> = self.active.iter().map(|&a| self.gram(a, j)).collect();
        let mut trial = self.chol.clone();
        if trial.insert(&cross, self.col_sq[j]).is_err() || trial.condition_estimate() > MAX_CONDITION {
            return false;
        }
        self.chol = trial;
        self.active.push(j);
        self.signs.push(if self.corr[j] >= 0.0 { 1.0 } else { -1.0 });
        self.is_active[j] = true;
        true
    }

    fn remove(&mut self, j: usize) {
        let pos = self.active.iter().position(|&a| a == j).expect("dropped variable is active");
        self.chol.remove(pos);
        self.active.remove(pos);
        self.signs.remove(pos);
        self.is_active[j] = false;
        self.beta[j] = 0.0;
    }

    fn refactor(&mut self) -> bool {
        let active = self.active.clone();
        match UpdatableCholesky::from_gram(active.len(), |a, b| self.gram(active[a], active[b])) {
            Ok(chol) if chol.condition_estimate() <= MAX_CONDITION => {
                self.chol = chol;
                true
            }
            _ => false,
        }
    }

    /// Moves λ down to the next knot and reports what happens there.
    fn advance(&mut self, tie: f64, just_dropped: Option<usize>) -> Next {
        let dir = self.chol.solve(&self.signs);
        let mut u = DVector::zeros(self.x.nrows());
        for (&j, &w) in self.active.iter().zip(&dir) {
            u.axpy(w, &self.x.column(j), 1.0);
        }
        let a = self.x.tr_mul(&u);
        let lambda = self.lambda;

        // first inactive variable to reach |Xⱼᵀr| = λ − γ
        let mut entry: Option<(f64, usize)> = None;
        for j in 0..self.x.ncols() {
            if self.is_active[j] {
                continue;
            }
            // a variable dropped at this knot sits on the boundary with its
            // old sign; only the opposite-sign crossing is a real event
            let fresh = Some(j) != just_dropped;
            let c = self.corr[j];
            let mut g = f64::INFINITY;
            for (num, den) in [(lambda - c, 1.0 - a[j]), (lambda + c, 1.0 + a[j])] {
                if !fresh && num <= tie {
                    continue;
                }
                if den > 1e-14 {
                    g = g.min(num.max(0.0) / den);
                } else if num <= tie {
                    // parallel to the active fit and already on the boundary
                    g = 0.0;
                }
            }
            if !g.is_finite() {
                continue;
            }
            match entry {
                Some((best, _)) if g >= best - tie => {}
                _ => entry = Some((g, j)),
            }
        }
        // entry candidates scanned in index order, so an earlier index keeps
        // the slot unless a later one is smaller by more than the tie window

        let mut drop: Option<(f64, usize)> = None;
        if self.lasso {
            for (&j, &w) in self.active.iter().zip(&dir) {
                let b = self.beta[j];
                if b * w < 0.0 {
                    let g = -b / w;
                    if drop.is_none_or(|(best, _)| g < best) {
                        drop = Some((g, j));
                    }
                }
            }
        }

        let entry_gamma = entry.map_or(f64::INFINITY, |e| e.0);
        let drop_gamma = drop.map_or(f64::INFINITY, |d| d.0);
        let (gamma, next) = if drop_gamma <= lambda && drop_gamma <= entry_gamma + 1e-12 * lambda.max(1.0) {
            (drop_gamma, Next::Drop(drop.expect("finite drop").1))
        } else if entry_gamma < lambda {
            (entry_gamma, Next::Enter(entry.expect("finite entry").1))
        } else {
            (lambda, Next::Finish)
        };

        for (&j, &w) in self.active.iter().zip(&dir) {
            self.beta[j] += gamma * w;
        }
        if let Next::Drop(j) = next {
            self.beta[j] = 0.0;
        }
        self.lambda = (lambda - gamma).max(0.0);
        self.corr = self.x.tr_mul(&self.residual());
        next
    }
}
