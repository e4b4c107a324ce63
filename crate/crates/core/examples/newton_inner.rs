//! One barrier subproblem solved by the safeguarded Newton iteration.

use l0fa::trace::Stopwatch;
use l0fa::{default_init, generate_ground_truth, sample_observations, solve_tau_min};
use l0fa::{BarrierObjective, Iterate, NewtonParams, NoiseShape, ProblemData};

fn main() -> l0fa::Result<()> {
    let truth = generate_ground_truth(10, 2, &NoiseShape::default(), 1.0, 5)?;
    let y = sample_observations(&truth, 500, 6)?;
    let sc = l0fa::objective::sample_covariance_rows(&y)?;
    let problem = ProblemData::new(sc, 0.02, 5.0)?;
    let (l0, s0) = default_init(&problem);
    let barrier = BarrierObjective::new(problem, 0.5)?;
    let init = Iterate::from_matrices(barrier.basis(), &l0, &s0)?;
    let params = NewtonParams {
        gamma: 0.5,
        ..Default::default()
    };

    let solve = solve_tau_min(init, &barrier, &params, 0, &Stopwatch::start())?;
    println!("status: {}", solve.status.as_str());
    println!("{:>4} {:>14} {:>11} {:>6} {:>8}  direction", "k", "h_tau", "residual", "|s|_0", "alpha");
    for row in &solve.trace.rows {
        println!(
            "{:>4} {:>14.6} {:>11.3e} {:>6} {:>8}  {}",
            row.inner_iter,
            row.objective_h_tau,
            row.residual_normalized,
            row.support_size,
            row.step_alpha,
            row.direction_kind.as_str()
        );
    }
    let fallbacks = solve.steps.iter().filter(|s| s.safeguard_rejected).count();
    println!("{} steps, {fallbacks} safeguard fallbacks", solve.iterations());
    Ok(())
}
