//! Outer interior-point loop with geometric barrier decay and warm starts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{FaError, Result};
use crate::newton::{solve_tau_min, InnerStatus, NewtonParams, StepInfo};
use crate::objective::{check_pair, eval_f_iterate, BarrierObjective, Iterate, ProblemData};
use crate::symbasis::BasisSet;
use crate::trace::{SolveTrace, Stopwatch};

#[derive(Debug, Clone, PartialEq)]
pub struct IpmParams {
    pub tau0: f64,
    /// Barrier decay ratio in `(0, 1)`.
    pub theta: f64,
    /// The loop runs while `tau > epsilon`.
    pub epsilon: f64,
    pub newton: NewtonParams,
    pub thresholds: RecoveryThresholds,
}

impl Default for IpmParams {
    fn default() -> Self {
        Self {
            tau0: 0.5,
            theta: 0.5,
            epsilon: 1e-6,
            newton: NewtonParams::default(),
            thresholds: RecoveryThresholds::default(),
        }
    }
}

impl IpmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(FaError::param("tau0", format!("must be positive, got {}", self.tau0)));
        }
        if !(self.epsilon > 0.0) {
            return Err(FaError::param(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(FaError::param(
                "theta",
                format!("must lie in (0, 1), got {}", self.theta),
            ));
        }
        self.newton.validate()
    }

    /// Barrier values visited: `tau0 theta^k` for every `k` with value above
    /// `epsilon`.
    pub fn barrier_schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut tau = self.tau0;
        while tau > self.epsilon {
            out.push(tau);
            tau *= self.theta;
        }
        out
    }
}

/// Relative thresholds used to read rank and support off the final matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryThresholds {
    pub rank: f64,
    pub support: f64,
}

impl Default for RecoveryThresholds {
    fn default() -> Self {
        Self {
            rank: 1e-6,
            support: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    /// Every inner solve met the residual tolerance.
    Converged,
    /// At least one inner solve stopped at its iteration cap; the loop went on.
    InnerIterationCap,
    /// An inner line search failed; the returned point is the last accepted one.
    LineSearchFailure,
}

impl IpmStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IpmStatus::Converged => "converged",
            IpmStatus::InnerIterationCap => "inner-iteration-cap",
            IpmStatus::LineSearchFailure => "line-search-failure",
        }
    }
}

/// Summary of one barrier subproblem.
#[derive(Debug, Clone)]
pub struct OuterRecord {
    pub outer_iter: usize,
    pub tau: f64,
    pub inner_iterations: usize,
    pub status: InnerStatus,
    pub residual_normalized: f64,
    /// `f` (without barrier) at the subproblem solution.
    pub objective_f: f64,
    pub steps: Vec<StepInfo>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub l_star: DMatrix<f64>,
    pub s_star: DMatrix<f64>,
    pub ell_star: DVector<f64>,
    pub s_coords: DVector<f64>,
    pub rank_estimate: usize,
    /// Upper-triangular positions `(i, j)`, `i <= j`, of nonzero `S` entries.
    pub support: Vec<(usize, usize)>,
    pub traces: SolveTrace,
    pub outer: Vec<OuterRecord>,
    pub status: IpmStatus,
    /// Barrier value of the last subproblem solved, if any.
    pub final_tau: Option<f64>,
    pub final_iterate: Iterate,
}

impl Solution {
    pub fn total_inner_iterations(&self) -> usize {
        self.outer.iter().map(|o| o.inner_iterations).sum()
    }

    pub fn outer_iterations(&self) -> usize {
        self.outer.len()
    }

    /// Off-diagonal support positions `(i, j)`, `i < j`.
    pub fn offdiag_support(&self) -> Vec<(usize, usize)> {
        self.support.iter().copied().filter(|(i, j)| i != j).collect()
    }
}

/// `(Sc / 2, Sc / 2)`.
pub fn default_init(problem: &ProblemData) -> (DMatrix<f64>, DMatrix<f64>) {
    let half = problem.sigma_check() * 0.5;
    (half.clone(), half)
}

pub fn ipm_solve(
    problem: &ProblemData,
    init: (&DMatrix<f64>, &DMatrix<f64>),
    params: &IpmParams,
) -> Result<Solution> {
    ipm_solve_with_clock(problem, init, params, &Stopwatch::start())
}

pub fn ipm_solve_with_clock(
    problem: &ProblemData,
    init: (&DMatrix<f64>, &DMatrix<f64>),
    params: &IpmParams,
    clock: &Stopwatch,
) -> Result<Solution> {
    params.validate()?;
    let (l0, s0) = init;
    check_pair(problem.p(), l0, s0)?;
    let mut it = Iterate::from_matrices(problem.basis(), l0, s0)?;
    if !it.is_strictly_feasible() {
        return Err(FaError::InfeasiblePoint(
            "initial L and S must be positive definite".into(),
        ));
    }

    let mut traces = SolveTrace::new();
    let mut outer = Vec::new();
    let mut status = IpmStatus::Converged;
    let mut final_tau = None;

    for (k, tau) in params.barrier_schedule().into_iter().enumerate() {
        let barrier = BarrierObjective::new(problem.clone(), tau)?;
        let inner = solve_tau_min(it, &barrier, &params.newton, k, clock)?;
        traces.extend(inner.trace);
        outer.push(OuterRecord {
            outer_iter: k,
            tau,
            inner_iterations: inner.steps.len(),
            status: inner.status,
            residual_normalized: inner.residual.normalized(),
            objective_f: eval_f_iterate(&inner.solution, problem),
            steps: inner.steps,
        });
        it = inner.solution;
        final_tau = Some(tau);
        match inner.status {
            InnerStatus::Converged => {}
            InnerStatus::IterationCap => status = IpmStatus::InnerIterationCap,
            InnerStatus::LineSearchFailure => {
                status = IpmStatus::LineSearchFailure;
                break;
            }
        }
    }

    let mut sol = recover_solution(problem.basis(), &it, params.thresholds);
    sol.traces = traces;
    sol.outer = outer;
    sol.status = status;
    sol.final_tau = final_tau;
    Ok(sol)
}

/// Maps a final iterate back to matrices and reads off rank and support.
///
/// Rank counts eigenvalues of `L` above `thresholds.rank * lambda_max(L)`;
/// support keeps entries with `|S_ij| > thresholds.support * max |S_ij|`.
pub fn recover_solution(
    basis: &BasisSet,
    it: &Iterate,
    thresholds: RecoveryThresholds,
) -> Solution {
    let l_star = basis.vec_to_mat_unchecked(it.ell());
    let s_star = basis.vec_to_mat_unchecked(it.s());
    Solution {
        rank_estimate: rank_estimate(&l_star, thresholds.rank),
        support: support_positions(&s_star, thresholds.support),
        l_star,
        s_star,
        ell_star: it.ell().clone(),
        s_coords: it.s().clone(),
        traces: SolveTrace::new(),
        outer: Vec::new(),
        status: IpmStatus::Converged,
        final_tau: None,
        final_iterate: it.clone(),
    }
}

pub fn rank_estimate(l: &DMatrix<f64>, rel: f64) -> usize {
    let eig = SymmetricEigen::new(l.clone()).eigenvalues;
    let max = eig.max();
    if !(max > 0.0) {
        return 0;
    }
    eig.iter().filter(|v| **v > rel * max).count()
}

pub fn support_positions(s: &DMatrix<f64>, rel: f64) -> Vec<(usize, usize)> {
    let max = s.amax();
    let p = s.nrows();
    let mut out = Vec::new();
    if max == 0.0 {
        return out;
    }
    for i in 0..p {
        for j in i..p {
            if s[(i, j)].abs() > rel * max {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lengths() {
        let p = IpmParams::default();
        assert_eq!(p.barrier_schedule().len(), 19);
        let p = IpmParams {
            theta: 0.8,
            ..Default::default()
        };
        assert_eq!(p.barrier_schedule().len(), 59);
        for (k, tau) in p.barrier_schedule().iter().enumerate() {
            assert!((tau - 0.5 * 0.8f64.powi(k as i32)).abs() <= 1e-15 * tau.max(1.0) * k as f64 + 1e-300);
        }
    }

    #[test]
    fn tau0_at_or_below_epsilon_returns_init() {
        let sc = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let pd = ProblemData::new(sc, 0.1, 1.0).unwrap();
        let (l0, s0) = default_init(&pd);
        let params = IpmParams {
            tau0: 1e-6,
            ..Default::default()
        };
        let sol = ipm_solve(&pd, (&l0, &s0), &params).unwrap();
        assert_eq!(sol.outer_iterations(), 0);
        assert!(sol.traces.is_empty());
        assert!((&sol.l_star - &l0).amax() < 1e-15);
        assert!((&sol.s_star - &s0).amax() < 1e-15);
        assert_eq!(sol.final_tau, None);
    }

    #[test]
    fn default_init_halves_the_covariance() {
        let pd = ProblemData::new(DMatrix::identity(3, 3), 0.1, 1.0).unwrap();
        let (l0, s0) = default_init(&pd);
        assert_eq!(l0, DMatrix::identity(3, 3) * 0.5);
        assert_eq!(s0, l0);
        let it = Iterate::from_matrices(pd.basis(), &l0, &s0).unwrap();
        assert!(it.is_strictly_feasible());
    }

    #[test]
    fn init_kl_term_is_p_minus_log_det() {
        let sc = DMatrix::from_row_slice(3, 3, &[3.0, 0.4, 0.1, 0.4, 2.0, 0.3, 0.1, 0.3, 1.0]);
        let mu = 1.3;
        let pd = ProblemData::new(sc.clone(), 0.1, mu).unwrap();
        let (l0, s0) = default_init(&pd);
        let f = crate::objective::eval_f(&l0, &s0, &pd);
        let expect = l0.trace() + mu * (3.0 - pd.sigma_check_log_det());
        assert!((f - expect).abs() < 1e-12);
    }

    #[test]
    fn rank_and_support_thresholds() {
        let l = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12, 1e-12]));
        assert_eq!(rank_estimate(&l, 1e-6), 1);
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 3.0]));
        assert_eq!(support_positions(&s, 1e-6), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn infeasible_init_rejected() {
        let pd = ProblemData::new(DMatrix::identity(2, 2), 0.1, 1.0).unwrap();
        let z = DMatrix::zeros(2, 2);
        let id = DMatrix::identity(2, 2);
        assert!(matches!(
            ipm_solve(&pd, (&z, &id), &IpmParams::default()),
            Err(FaError::InfeasiblePoint(_))
        ));
    }

    #[test]
    fn small_instance_runs_warm_started() {
        let sc = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.6, 0.3, 0.6, 1.5, 0.2, 0.3, 0.2, 1.0],
        );
        let pd = ProblemData::new(sc, 0.05, 2.0).unwrap();
        let (l0, s0) = default_init(&pd);
        let params = IpmParams {
            newton: NewtonParams {
                gamma: 0.5,
                ..Default::default()
            },
            ..Default::default()
        };
        let sol = ipm_solve(&pd, (&l0, &s0), &params).unwrap();
        assert_eq!(sol.status, IpmStatus::Converged);
        assert_eq!(sol.outer_iterations(), 19);
        assert_eq!(sol.traces.distinct_taus().len(), 19);
        assert!(sol.final_iterate.is_strictly_feasible());
        // Rows are ordered and timestamps monotone.
        for w in sol.traces.rows.windows(2) {
            assert!((w[0].outer_iter, w[0].inner_iter) < (w[1].outer_iter, w[1].inner_iter));
            assert!(w[0].wall_time_ns <= w[1].wall_time_ns);
        }
        assert_eq!(sol.traces.steps(), sol.total_inner_iterations());
    }
}
