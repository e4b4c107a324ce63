//! The l0 proximal operator, the index set T and the stationarity residual.

use l0fa::prox::{check_gamma_stationary, threshold};
use l0fa::{prox_l0_scalar, prox_l0_vec, stationarity_residual, BarrierObjective, Iterate};
use l0fa::{IndexSet, ProblemData};
use nalgebra::{DMatrix, DVector};

fn main() -> l0fa::Result<()> {
    let (gamma, c) = (0.5, 1.0);
    println!("threshold sqrt(2 gamma C) = {}", threshold(gamma, c));
    for x in [-1.5, -1.0, 0.3, 1.0, 1.0001, 2.0] {
        println!("prox({x:>7}) = {}", prox_l0_scalar(x, gamma, c)?);
    }
    let x = DVector::from_vec(vec![0.2, -3.0, 1.0, 0.9, -1.2]);
    println!("prox(x) = {:?}", prox_l0_vec(&x, gamma, c)?.as_slice());
    println!("support of x: {:?}", IndexSet::support(&x).members());

    // Residual and certificate at the dense starting point of a tiny problem.
    let sc = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let barrier = BarrierObjective::new(ProblemData::new(sc.clone(), 0.05, 1.0)?, 0.1)?;
    let half = &sc * 0.5;
    let it = Iterate::from_matrices(barrier.basis(), &half, &half)?;
    let res = stationarity_residual(&it, &barrier, gamma)?;
    println!("T = {:?}, ||F|| / sqrt(2m) = {:.3e}", res.index_set.members(), res.normalized());
    let cert = check_gamma_stationary(&it, &barrier, gamma, 1e-6)?;
    println!("gamma-stationary: {} ({} violations)", cert.is_stationary, cert.violations.len());
    Ok(())
}
