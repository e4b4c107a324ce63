//! The full interior-point method with recovery metrics against the truth.

use l0fa::{default_init, generate_ground_truth, ipm_solve, recovery_metrics, sample_observations};
use l0fa::{IpmParams, NewtonParams, NoiseShape, ProblemData};

fn main() -> l0fa::Result<()> {
    let truth = generate_ground_truth(12, 2, &NoiseShape::default(), 1.0, 11)?;
    let y = sample_observations(&truth, 800, 12)?;
    let problem = ProblemData::new(l0fa::objective::sample_covariance_rows(&y)?, 0.02, 5.0)?;
    let (l0, s0) = default_init(&problem);
    let params = IpmParams {
        newton: NewtonParams {
            gamma: 0.5,
            ..Default::default()
        },
        ..Default::default()
    };

    let sol = ipm_solve(&problem, (&l0, &s0), &params)?;
    println!("status {}, {} barrier values", sol.status.as_str(), sol.outer_iterations());
    for o in &sol.outer {
        println!(
            "tau {:>10.3e}: {:>2} inner iterations, residual {:.2e}, f = {:.6}",
            o.tau, o.inner_iterations, o.residual_normalized, o.objective_f
        );
    }
    let m = recovery_metrics(&sol, &truth)?;
    println!("{}", serde_json::to_string_pretty(&m).expect("metrics serialize"));
    Ok(())
}
