//! Roots of the stationarity equation versus the γ-stationarity conditions.

use l0fa::newton::{solve_tau_min, InnerStatus, NewtonParams};
use l0fa::prox::{check_gamma_stationary, stationarity_residual};
use l0fa::trace::Stopwatch;
use l0fa::{BarrierObjective, Iterate, ProblemData};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.5;
// The Armijo test compares values of h near 2, resolved to about 4e-16, while
// a Newton step near a root predicts a decrease of order ||F||^2. Residuals
// stall somewhere in 1e-9..2e-7, so asking for less is left to luck.
const ROOT_TOL: f64 = 1e-7;

fn instance(seed: u64, p: usize) -> (BarrierObjective, Iterate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
    let sc = &a * a.transpose() + DMatrix::identity(p, p);
    let c = rng.gen_range(0.01..0.1);
    let barrier = BarrierObjective::new(ProblemData::new(sc.clone(), c, 2.0).unwrap(), 0.05).unwrap();
    let half = sc * 0.5;
    let it = Iterate::from_matrices(barrier.basis(), &half, &half).unwrap();
    (barrier, it)
}

fn root(seed: u64, p: usize) -> (BarrierObjective, Iterate) {
    let (barrier, init) = instance(seed, p);
    let params = NewtonParams {
        gamma: GAMMA,
        residual_tol: ROOT_TOL,
        ..Default::default()
    };
    let solve = solve_tau_min(init, &barrier, &params, 0, &Stopwatch::start()).unwrap();
    assert_eq!(solve.status, InnerStatus::Converged, "seed {seed}");
    (barrier, solve.solution)
}

#[test]
fn roots_are_gamma_stationary() {
    for seed in 0..8 {
        let (barrier, x) = root(seed, 3);
        let res = stationarity_residual(&x, &barrier, GAMMA).unwrap();
        assert!(res.norm <= ROOT_TOL, "seed {seed}: residual {:e}", res.norm);
        let report = check_gamma_stationary(&x, &barrier, GAMMA, 1e-6).unwrap();
        assert!(report.is_stationary, "seed {seed}: {:?}", report.violations);
    }
}

#[test]
fn stationary_points_with_strict_margins_are_roots() {
    let mut checked = 0;
    for seed in 0..8 {
        let (barrier, x) = root(seed, 3);
        let g = barrier.gradient(&x).unwrap();
        let thr = (2.0 * GAMMA * barrier.problem().c()).sqrt();
        // Single-valued prox: no coordinate of s - gamma g sits on the threshold.
        let single_valued = x
            .s()
            .iter()
            .zip(g.s.iter())
            .all(|(s, gs)| ((s - GAMMA * gs).abs() - thr).abs() > 1e-6);
        if !single_valued {
            continue;
        }
        assert!(check_gamma_stationary(&x, &barrier, GAMMA, 1e-6).unwrap().is_stationary);
        let res = stationarity_residual(&x, &barrier, GAMMA).unwrap();
        assert!(res.norm <= 1e-6);
        checked += 1;
    }
    assert!(checked >= 4, "only {checked} single-valued instances");
}

#[test]
fn residual_grows_linearly_off_a_root() {
    let (barrier, x) = root(3, 3);
    let i = x
        .s()
        .iter()
        .position(|v| *v != 0.0)
        .expect("diagonal entries are always supported");
    let base = stationarity_residual(&x, &barrier, GAMMA).unwrap().norm;
    let mut ratios = Vec::new();
    for eps in [1e-3, 1e-4, 1e-5] {
        let mut s = x.s().clone();
        s[i] += eps;
        let moved = barrier.iterate(x.ell().clone(), s).unwrap();
        let r = stationarity_residual(&moved, &barrier, GAMMA).unwrap().norm;
        ratios.push((r - base) / eps);
    }
    for r in &ratios {
        assert!(*r > 0.0);
        assert!((r / ratios[2] - 1.0).abs() < 0.05, "ratios {ratios:?}");
    }
}

#[test]
fn a_violated_magnitude_clause_is_reported() {
    let (barrier, x) = root(1, 3);
    let thr = (2.0 * GAMMA * barrier.problem().c()).sqrt();
    // Shrink one supported off-diagonal coordinate below the threshold.
    let m = barrier.basis().m();
    let i = (0..m)
        .find(|&a| !barrier.basis().is_diagonal(a) && x.s()[a] != 0.0)
        .or_else(|| (0..m).find(|&a| x.s()[a] != 0.0))
        .unwrap();
    let mut s = x.s().clone();
    s[i] = thr / 2.0;
    let moved = barrier.iterate(x.ell().clone(), s).unwrap();
    assert!(moved.is_strictly_feasible());
    let report = check_gamma_stationary(&moved, &barrier, GAMMA, 1e-6).unwrap();
    assert!(!report.is_stationary);
}
