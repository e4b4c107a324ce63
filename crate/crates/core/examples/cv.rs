//! Grid search over C and mu by k-fold held-out likelihood.

use l0fa::harness::{cli_cv, RunConfig};

fn main() -> l0fa::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.data.p = 8;
    cfg.data.r = 2;
    cfg.data.n = 600;
    cfg.cv.c_grid = vec![0.02, 0.1];
    cfg.cv.mu_grid = vec![5.0, 20.0];
    let out = std::env::temp_dir().join("l0fa-cv-example");
    let report = cli_cv(&cfg, &out)?;
    println!("{:>6} {:>6} {:>6} {:>12}  fold statuses", "C", "mu", "gamma", "score");
    for row in &report.table {
        println!(
            "{:>6} {:>6} {:>6} {:>12.6}  {:?}",
            row.c, row.mu, row.gamma, row.score, row.statuses
        );
    }
    println!("best: C = {}, mu = {}, gamma = {}", report.best.c, report.best.mu, report.best.gamma);
    Ok(())
}
