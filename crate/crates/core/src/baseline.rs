//! First-order block-coordinate baseline on the same barrier subproblem.
//!
//! One iteration is a backtracked gradient step on `l` followed by a
//! backtracked proximal-gradient (hard-thresholding) step on `s`. Residuals
//! are measured with the same `||F|| / sqrt(2m)` as the Newton solver so
//! traces can be compared directly.

use nalgebra::DVector;

use crate::error::{FaError, Result};
use crate::newton::InnerStatus;
use crate::objective::{eval_f_iterate, BarrierObjective, Iterate};
use crate::prox::{prox_l0_vec, residual_with_gradient, StationarityResidual};
use crate::trace::{DirectionKind, SolveTrace, Stopwatch, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    /// Proximal stepsize on `s`; also defines the residual.
    pub gamma: f64,
    /// Largest stepsize tried on `l`.
    pub step_ell: f64,
    /// Armijo fraction for the `l` step.
    pub sigma: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Halvings allowed per block before the iteration counts as stalled.
    pub max_backtracks: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            step_ell: 1.0,
            sigma: 1e-4,
            residual_tol: 1e-4,
            max_iters: 5000,
            max_backtracks: 60,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("step_ell", self.step_ell),
            ("residual_tol", self.residual_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FaError::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(FaError::param("sigma", format!("must lie in (0, 1), got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub solution: Iterate,
    pub status: InnerStatus,
    pub residual: StationarityResidual,
    pub trace: SolveTrace,
    /// `h_tau + C ||s||_0` after each accepted iteration, starting with the
    /// initial point.
    pub composite_path: Vec<f64>,
}

impl BaselineRun {
    pub fn iterations(&self) -> usize {
        self.trace.steps()
    }
}

fn composite(h: f64, s: &DVector<f64>, c: f64) -> f64 {
    h + c * s.iter().filter(|v| **v != 0.0).count() as f64
}

pub fn bcd_solve(
    init: Iterate,
    barrier: &BarrierObjective,
    params: &BaselineParams,
) -> Result<BaselineRun> {
    bcd_solve_with_clock(init, barrier, params, 0, &Stopwatch::start())
}

pub fn bcd_solve_with_clock(
    init: Iterate,
    barrier: &BarrierObjective,
    params: &BaselineParams,
    outer_iter: usize,
    clock: &Stopwatch,
) -> Result<BaselineRun> {
    params.validate()?;
    if !init.is_strictly_feasible() {
        return Err(FaError::InfeasiblePoint(
            "baseline must start from a point with L > 0 and S > 0".into(),
        ));
    }
    let c = barrier.problem().c();
    let basis = barrier.basis();
    let mut it = init;
    let mut h = barrier.value(&it);
    let mut trace = SolveTrace::new();
    let mut composite_path = vec![composite(h, it.s(), c)];
    let mut step_ell = params.step_ell;

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
        } else if k >= params.max_iters {
            Some(InnerStatus::IterationCap)
        } else {
            None
        };
        if let Some(status) = stop {
            return Ok(BaselineRun {
                solution: it,
                status,
                residual,
                trace,
                composite_path,
            });
        }

        // (a) Armijo gradient step on l, starting from twice the last
        // accepted step.
        let gnorm2 = grad.ell.norm_squared();
        let mut t = (2.0 * step_ell).min(params.step_ell);
        let mut accepted_ell = None;
        for _ in 0..=params.max_backtracks {
            let ell = it.ell() - &grad.ell * t;
            let trial = Iterate::from_parts(basis, ell, it.s().clone());
            let v = barrier.value(&trial);
            if v <= h - params.sigma * t * gnorm2 {
                accepted_ell = Some((trial, v));
                break;
            }
            t *= 0.5;
        }
        let mut alpha = 0.0;
        if let Some((trial, v)) = accepted_ell {
            step_ell = t;
            alpha = t;
            it = trial;
            h = v;
        }

        // (b) proximal-gradient step on s at the updated l; the prox
        // stepsize is halved until the composite objective does not increase.
        let g_s = barrier.gradient(&it)?.s;
        let current = composite(h, it.s(), c);
        let mut step = params.gamma;
        let mut accepted_s = None;
        for _ in 0..=params.max_backtracks {
            let s = prox_l0_vec(&(it.s() - &g_s * step), step, c)?;
            let trial = Iterate::from_parts(basis, it.ell().clone(), s);
            let v = barrier.value(&trial);
            if composite(v, trial.s(), c) <= current {
                accepted_s = Some((trial, v));
                break;
            }
            step *= 0.5;
        }
        if let Some((trial, v)) = accepted_s {
            it = trial;
            h = v;
        }

        let row = trace.rows.last_mut().expect("row pushed above");
        row.step_alpha = alpha;
        row.direction_kind = DirectionKind::BlockCoordinate;
        composite_path.push(composite(h, it.s(), c));
    }
    unreachable!("the loop returns on convergence or cap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{solve_tau_min, NewtonParams};
    use crate::objective::ProblemData;
    use nalgebra::DMatrix;

    fn small() -> BarrierObjective {
        let sc = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.6, 0.3, 0.6, 1.5, 0.2, 0.3, 0.2, 1.0],
        );
        BarrierObjective::new(ProblemData::new(sc, 0.05, 2.0).unwrap(), 0.1).unwrap()
    }

    fn start(bo: &BarrierObjective) -> Iterate {
        let half = bo.problem().sigma_check() * 0.5;
        Iterate::from_matrices(bo.basis(), &half, &half).unwrap()
    }

    #[test]
    fn stationary_point_is_a_prox_fixed_point() {
        let bo = small();
        let newton = NewtonParams {
            gamma: 0.5,
            residual_tol: 1e-12,
            ..Default::default()
        };
        let root = solve_tau_min(start(&bo), &bo, &newton, 0, &Stopwatch::start()).unwrap();
        let g = bo.gradient(&root.solution).unwrap();
        let s = root.solution.s();
        let next = prox_l0_vec(&(s - &g.s * 0.5), 0.5, bo.problem().c()).unwrap();
        assert!((next - s).amax() < 1e-10);

        let params = BaselineParams {
            gamma: 0.5,
            residual_tol: 1e-10,
            ..Default::default()
        };
        let run = bcd_solve(root.solution.clone(), &bo, &params).unwrap();
        assert_eq!(run.status, InnerStatus::Converged);
        assert_eq!(run.iterations(), 0);
    }

    #[test]
    fn composite_objective_never_increases() {
        let bo = small();
        let params = BaselineParams {
            gamma: 0.5,
            max_iters: 300,
            ..Default::default()
        };
        let run = bcd_solve(start(&bo), &bo, &params).unwrap();
        for w in run.composite_path.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
        assert!(run.solution.is_strictly_feasible());
        assert_eq!(run.trace.rows.len(), run.iterations() + 1);
    }

    #[test]
    fn rejects_bad_params_and_points() {
        let bo = small();
        let bad = BaselineParams {
            gamma: -1.0,
            ..Default::default()
        };
        assert!(bcd_solve(start(&bo), &bo, &bad).is_err());
        let m = bo.basis().m();
        let zero = Iterate::new(bo.basis(), DVector::zeros(m), DVector::zeros(m)).unwrap();
        assert!(matches!(
            bcd_solve(zero, &bo, &BaselineParams::default()),
            Err(FaError::InfeasiblePoint(_))
        ));
    }
}
