//! Safeguarded Newton iteration for one barrier subproblem.
//!
//! Each iteration computes the index set `T_k`, solves the reduced Newton
//! system over `(l, s[T_k])` with `d_s[not T_k] = -s[not T_k]`, falls back to
//! a gradient-type direction when the result fails the descent safeguard, and
//! backtracks on the step for `(l, s[T_k])` while `s[not T_k]` always takes
//! the full step to zero.

use nalgebra::DVector;

use crate::error::{FaError, Result};
use crate::linalg::spd_solve;
use crate::objective::{eval_f_iterate, BarrierObjective, Gradient, HessianBlocks, Iterate};
use crate::prox::{residual_with_gradient, IndexSet, StationarityResidual};
use crate::trace::{DirectionKind, SolveTrace, Stopwatch, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonParams {
    /// Proximal stepsize defining the index set and the residual.
    pub gamma: f64,
    /// Safeguard margin.
    pub delta: f64,
    /// Armijo slope fraction in `(0, 1/2)`.
    pub sigma: f64,
    /// Backtracking ratio in `(0, 1)`.
    pub beta: f64,
    /// Stop when `||F|| / sqrt(2m)` is at most this value.
    pub residual_tol: f64,
    pub max_inner_iters: usize,
    pub max_backtracks: usize,
    /// Function compared in the line search.
    pub merit: Merit,
}

/// Objective tested by the Armijo rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Merit {
    /// `h_tau` alone, as in the printed algorithm.
    #[default]
    Smooth,
    /// `h_tau + C ||s||_0`. Zeroing `s[Tbar]` lowers the penalty, so steps
    /// that shrink the support are not rejected for raising `h_tau`.
    Composite,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            delta: 1e-4,
            sigma: 5e-5,
            beta: 0.5,
            residual_tol: 1e-4,
            max_inner_iters: 200,
            max_backtracks: 50,
            merit: Merit::Smooth,
        }
    }
}

impl NewtonParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FaError::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("delta", self.delta)?;
        positive("residual_tol", self.residual_tol)?;
        if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return Err(FaError::param(
                "sigma",
                format!("must lie in (0, 1/2), got {}", self.sigma),
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(FaError::param(
                "beta",
                format!("must lie in (0, 1), got {}", self.beta),
            ));
        }
        if self.max_backtracks == 0 {
            return Err(FaError::param("max_backtracks", "must be at least 1"));
        }
        Ok(())
    }
}

/// A search direction over `(l, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub d_ell: DVector<f64>,
    pub d_s: DVector<f64>,
    pub kind: DirectionKind,
}

impl Direction {
    /// `<g, d>` over the full concatenated vectors.
    pub fn directional_derivative(&self, grad: &Gradient) -> f64 {
        grad.ell.dot(&self.d_ell) + grad.s.dot(&self.d_s)
    }

    pub fn is_zero(&self) -> bool {
        self.d_ell.iter().chain(self.d_s.iter()).all(|v| *v == 0.0)
    }
}

/// Newton direction at `it` for the index set `t`.
pub fn newton_direction(
    it: &Iterate,
    t: &IndexSet,
    barrier: &BarrierObjective,
) -> Result<Direction> {
    let grad = barrier.gradient(it)?;
    let blocks = barrier.hessian_blocks(it)?;
    newton_direction_with(it.s(), &grad, &blocks, t)
}

/// Reduced Newton solve from a precomputed gradient and Hessian.
///
/// Solves `H[R, R] d_R = H[R, Tbar] s[Tbar] - g[R]` with `R = l ∪ s[T]`
/// and sets `d_s[Tbar] = -s[Tbar]`.
pub fn newton_direction_with(
    s: &DVector<f64>,
    grad: &Gradient,
    blocks: &HessianBlocks,
    t: &IndexSet,
) -> Result<Direction> {
    let m = blocks.m();
    if s.len() != m || t.universe() != m {
        return Err(FaError::Shape("direction inputs disagree on m".into()));
    }
    let in_t = t.mask();
    // s restricted to Tbar, embedded in R^m.
    let s_tbar = DVector::from_fn(m, |i, _| if in_t[i] { 0.0 } else { s[i] });
    let cross = &blocks.sigma * &s_tbar;
    let cross_s = &cross + &blocks.s * &s_tbar;

    let n = m + t.len();
    let mut rhs = DVector::zeros(n);
    for a in 0..m {
        rhs[a] = cross[a] - grad.ell[a];
    }
    for (k, &i) in t.members().iter().enumerate() {
        rhs[m + k] = cross_s[i] - grad.s[i];
    }

    let idx: Vec<usize> = (0..m).chain(t.members().iter().map(|&i| m + i)).collect();
    let reduced = blocks.principal_submatrix(&idx);
    let sol = spd_solve(&reduced, &rhs).ok_or_else(|| {
        FaError::NumericalBreakdown(format!(
            "reduced Newton matrix of size {n} is not numerically positive definite"
        ))
    })?;

    let d_ell = sol.rows(0, m).into_owned();
    let mut d_s = -s_tbar;
    for (k, &i) in t.members().iter().enumerate() {
        d_s[i] = sol[m + k];
    }
    Ok(Direction {
        d_ell,
        d_s,
        kind: DirectionKind::Newton,
    })
}

/// `<g_s[T], d_s[T]> <= -delta ||d_s||^2 + ||s[Tbar]||^2 / (4 gamma)`.
pub fn descent_safeguard(
    direction: &Direction,
    g_s: &DVector<f64>,
    s: &DVector<f64>,
    t: &IndexSet,
    delta: f64,
    gamma: f64,
) -> bool {
    let lhs: f64 = t
        .members()
        .iter()
        .map(|&i| g_s[i] * direction.d_s[i])
        .sum();
    let s_tbar_sq: f64 = t.complement().iter().map(|&i| s[i] * s[i]).sum();
    lhs <= -delta * direction.d_s.norm_squared() + s_tbar_sq / (4.0 * gamma)
}

/// `d_l = -g_l`, `d_s[T] = -g_s[T]`, `d_s[Tbar] = -s[Tbar]`.
pub fn fallback_direction(s: &DVector<f64>, grad: &Gradient, t: &IndexSet) -> Direction {
    let in_t = t.mask();
    let d_s = DVector::from_fn(s.len(), |i, _| if in_t[i] { -grad.s[i] } else { -s[i] });
    Direction {
        d_ell: -&grad.ell,
        d_s,
        kind: DirectionKind::GradientFallback,
    }
}

/// The trial point `(l + alpha d_l, s[T] + alpha d_s[T], 0)`.
pub fn trial_point(
    it: &Iterate,
    direction: &Direction,
    t: &IndexSet,
    alpha: f64,
    barrier: &BarrierObjective,
) -> Iterate {
    let in_t = t.mask();
    let ell = it.ell() + &direction.d_ell * alpha;
    let s = DVector::from_fn(it.s().len(), |i, _| {
        if in_t[i] {
            it.s()[i] + alpha * direction.d_s[i]
        } else {
            0.0
        }
    });
    Iterate::from_parts(barrier.basis(), ell, s)
}

#[derive(Debug, Clone)]
pub enum LineSearchOutcome {
    Accepted {
        alpha: f64,
        next: Box<Iterate>,
        value: f64,
        backtracks: usize,
    },
    /// No acceptable step within `max_backtracks` reductions.
    Failed { backtracks: usize },
}

/// Backtracking search for the smallest `v` with
/// `h(trial(beta^v)) <= h(current) + sigma beta^v <g, d>`, where `h` is
/// `h_tau` or `h_tau + C ||s||_0` depending on [`NewtonParams::merit`].
///
/// Trial points outside the strictly feasible set have value `+inf` and fail
/// the test like any other insufficient step.
pub fn line_search(
    it: &Iterate,
    current_value: f64,
    grad: &Gradient,
    direction: &Direction,
    t: &IndexSet,
    barrier: &BarrierObjective,
    params: &NewtonParams,
) -> LineSearchOutcome {
    let slope = direction.directional_derivative(grad);
    let c = barrier.problem().c();
    let penalty = |s: &DVector<f64>| match params.merit {
        Merit::Smooth => 0.0,
        Merit::Composite => c * s.iter().filter(|v| **v != 0.0).count() as f64,
    };
    let current = current_value + penalty(it.s());
    let mut alpha = 1.0;
    for v in 0..=params.max_backtracks {
        let trial = trial_point(it, direction, t, alpha, barrier);
        let value = barrier.value(&trial);
        if value + penalty(trial.s()) <= current + params.sigma * alpha * slope {
            return LineSearchOutcome::Accepted {
                alpha,
                next: Box::new(trial),
                value,
                backtracks: v,
            };
        }
        alpha *= params.beta;
    }
    LineSearchOutcome::Failed {
        backtracks: params.max_backtracks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    Converged,
    IterationCap,
    LineSearchFailure,
}

impl InnerStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            InnerStatus::Converged => "converged",
            InnerStatus::IterationCap => "iteration-cap",
            InnerStatus::LineSearchFailure => "line-search-failure",
        }
    }
}

/// What happened in one accepted step, kept for invariant checks.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub kind: DirectionKind,
    pub index_set: IndexSet,
    pub next_support: IndexSet,
    pub alpha: f64,
    pub backtracks: usize,
    pub h_before: f64,
    pub h_after: f64,
    /// `<g, d>` used in the sufficient-decrease test.
    pub slope: f64,
    /// Newton direction rejected by the safeguard.
    pub safeguard_rejected: bool,
}

#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub solution: Iterate,
    pub status: InnerStatus,
    pub residual: StationarityResidual,
    pub trace: SolveTrace,
    pub steps: Vec<StepInfo>,
}

impl InnerSolve {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Runs the safeguarded Newton iteration from `init` at a fixed barrier.
///
/// `outer_iter` and `clock` only label the trace rows.
pub fn solve_tau_min(
    init: Iterate,
    barrier: &BarrierObjective,
    params: &NewtonParams,
    outer_iter: usize,
    clock: &Stopwatch,
) -> Result<InnerSolve> {
    params.validate()?;
    if !init.is_strictly_feasible() {
        return Err(FaError::InfeasiblePoint(
            "inner solve must start from a point with L > 0 and S > 0".into(),
        ));
    }
    let c = barrier.problem().c();
    let mut it = init;
    let mut h = barrier.value(&it);
    let mut trace = SolveTrace::new();
    let mut steps = Vec::new();

    for k in 0.. {
        let grad = barrier.gradient(&it)?;
        let residual = residual_with_gradient(it.s(), &grad, params.gamma, c)?;
        trace.rows.push(TraceRow {
            outer_iter,
            tau: barrier.tau(),
            inner_iter: k,
            objective_h_tau: h,
            objective_f: eval_f_iterate(&it, barrier.problem()),
            residual_normalized: residual.normalized(),
            support_size: it.support_size(),
            step_alpha: 0.0,
            direction_kind: DirectionKind::None,
            wall_time_ns: clock.elapsed_ns(),
        });

        let stop = if residual.normalized() <= params.residual_tol {
            Some(InnerStatus::Converged)
        } else if k >= params.max_inner_iters {
            Some(InnerStatus::IterationCap)
        } else {
            None
        };
        if let Some(status) = stop {
            return Ok(InnerSolve {
                solution: it,
                status,
                residual,
                trace,
                steps,
            });
        }

        let t = residual.index_set.clone();
        let blocks = barrier.hessian_blocks(&it)?;
        let mut direction = newton_direction_with(it.s(), &grad, &blocks, &t)?;
        let safeguard_rejected =
            !descent_safeguard(&direction, &grad.s, it.s(), &t, params.delta, params.gamma);
        if safeguard_rejected {
            direction = fallback_direction(it.s(), &grad, &t);
        }

        match line_search(&it, h, &grad, &direction, &t, barrier, params) {
            LineSearchOutcome::Accepted {
                alpha,
                next,
                value,
                backtracks,
            } => {
                let row = trace.rows.last_mut().expect("row pushed above");
                row.step_alpha = alpha;
                row.direction_kind = direction.kind;
                steps.push(StepInfo {
                    kind: direction.kind,
                    next_support: IndexSet::support(next.s()),
                    index_set: t,
                    alpha,
                    backtracks,
                    h_before: h,
                    h_after: value,
                    slope: direction.directional_derivative(&grad),
                    safeguard_rejected,
                });
                it = *next;
                h = value;
            }
            LineSearchOutcome::Failed { .. } => {
                return Ok(InnerSolve {
                    solution: it,
                    status: InnerStatus::LineSearchFailure,
                    residual,
                    trace,
                    steps,
                });
            }
        }
    }
    unreachable!("the loop returns on convergence, cap, or failure")
}
