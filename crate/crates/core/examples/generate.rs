//! Synthetic factor model: loading, sparse noise covariance, samples.

use l0fa::datagen::{min_eigenvalue, NoiseShape};
use l0fa::harness::io::write_matrix_csv;
use l0fa::{generate_ground_truth, sample_observations};

fn main() -> l0fa::Result<()> {
    let truth = generate_ground_truth(40, 5, &NoiseShape::default(), 1.0, 42)?;
    println!("SNR = {:.12}", truth.snr());
    println!("off-diagonal support pairs: {}", truth.offdiag_support().len());
    println!("smallest eigenvalue of the noise covariance: {:.4}", min_eigenvalue(&truth.s_hat));
    let eig = truth.l_hat.clone().symmetric_eigen().eigenvalues;
    let mut eig: Vec<f64> = eig.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    println!("top eigenvalues of the low-rank part: {:.2?}", &eig[..6]);

    let y = sample_observations(&truth, 1200, 43)?;
    let dir = std::env::temp_dir().join("l0fa-generate-example");
    let path = dir.join("samples.csv");
    write_matrix_csv(&path, &y)?;
    println!("wrote {} x {} samples to {}", y.nrows(), y.ncols(), path.display());
    Ok(())
}
