//! Synthetic factor models `y = Gamma u + w` and recovery metrics.
//!
//! The loading matrix has i.i.d. standard normal entries (redrawn until it
//! has full column rank). The noise covariance is a random sparse symmetric
//! matrix made positive definite by diagonal dominance and rescaled so that
//! `||Gamma Gamma^T||_F / ||S||_F` equals the requested SNR.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{FaError, Result};
use crate::ipm::Solution;
use crate::linalg::{trace_product, SpdFactor};

/// Shape of the sparse noise covariance before SNR rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseShape {
    /// Probability that an off-diagonal pair is nonzero.
    pub density: f64,
    /// Off-diagonal magnitudes are uniform on `[offdiag_min, offdiag_max]`
    /// with a random sign.
    pub offdiag_min: f64,
    pub offdiag_max: f64,
    /// Each diagonal entry is the absolute row sum plus this margin.
    pub diag_margin: f64,
}

impl Default for NoiseShape {
    fn default() -> Self {
        Self {
            density: 0.05,
            offdiag_min: 0.5,
            offdiag_max: 1.0,
            diag_margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Loading matrix, `p x r`.
    pub loading: DMatrix<f64>,
    pub l_hat: DMatrix<f64>,
    pub s_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    /// Nonzero pattern of `s_hat`.
    pub support_mask: DMatrix<bool>,
    pub r: usize,
    pub seed: u64,
}

impl GroundTruth {
    pub fn p(&self) -> usize {
        self.s_hat.nrows()
    }

    /// Builds a ground truth from explicit matrices.
    pub fn from_parts(loading: DMatrix<f64>, s_hat: DMatrix<f64>, seed: u64) -> Result<Self> {
        let p = s_hat.nrows();
        if loading.nrows() != p || s_hat.ncols() != p {
            return Err(FaError::Shape("loading and noise covariance disagree on p".into()));
        }
        let l_hat = &loading * loading.transpose();
        let sigma_hat = &l_hat + &s_hat;
        let support_mask = s_hat.map(|v| v != 0.0);
        Ok(Self {
            r: loading.ncols(),
            loading,
            l_hat,
            s_hat,
            sigma_hat,
            support_mask,
            seed,
        })
    }

    /// Off-diagonal support pairs `(i, j)`, `i < j`.
    pub fn offdiag_support(&self) -> Vec<(usize, usize)> {
        let p = self.p();
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if self.support_mask[(i, j)] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn snr(&self) -> f64 {
        self.l_hat.norm() / self.s_hat.norm()
    }
}

pub fn generate_ground_truth(
    p: usize,
    r: usize,
    shape: &NoiseShape,
    snr: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if r == 0 || r >= p {
        return Err(FaError::config("r", format!("need 1 <= r < p, got r = {r}, p = {p}")));
    }
    if !(shape.density > 0.0 && shape.density <= 1.0) {
        return Err(FaError::config(
            "density",
            format!("must lie in (0, 1], got {}", shape.density),
        ));
    }
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(FaError::config("snr", format!("must be positive, got {snr}")));
    }
    if !(shape.offdiag_min > 0.0 && shape.offdiag_min <= shape.offdiag_max) {
        return Err(FaError::config(
            "offdiag_min",
            "need 0 < offdiag_min <= offdiag_max",
        ));
    }
    if !(shape.diag_margin > 0.0) {
        return Err(FaError::config("diag_margin", "must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loading = loop {
        let g = DMatrix::from_fn(p, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        if full_column_rank(&g) {
            break g;
        }
    };

    let mut s = DMatrix::zeros(p, p);
    let mut pairs = 0;
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.gen_bool(shape.density) {
                let v = offdiag_draw(&mut rng, shape);
                s[(i, j)] = v;
                s[(j, i)] = v;
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        // Guarantee a nondiagonal entry.
        let i = rng.gen_range(0..p - 1);
        let j = rng.gen_range(i + 1..p);
        let v = offdiag_draw(&mut rng, shape);
        s[(i, j)] = v;
        s[(j, i)] = v;
    }
    for i in 0..p {
        let row: f64 = (0..p).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum();
        s[(i, i)] = row + shape.diag_margin;
    }

    let l_norm = (&loading * loading.transpose()).norm();
    let scale = l_norm / (snr * s.norm());
    s *= scale;
    GroundTruth::from_parts(loading, s, seed)
}

fn offdiag_draw(rng: &mut ChaCha8Rng, shape: &NoiseShape) -> f64 {
    let mag = if shape.offdiag_max > shape.offdiag_min {
        rng.gen_range(shape.offdiag_min..shape.offdiag_max)
    } else {
        shape.offdiag_min
    };
    if rng.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

fn full_column_rank(g: &DMatrix<f64>) -> bool {
    let sv = g.clone().svd(false, false).singular_values;
    let max = sv.max();
    max > 0.0 && sv.min() > 1e-10 * max
}

/// Draws `n` observations as the rows of an `n x p` matrix.
pub fn sample_observations(truth: &GroundTruth, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(FaError::config("n", "number of samples must be at least 1"));
    }
    let p = truth.p();
    let r = truth.loading.ncols();
    let noise = SpdFactor::new(&truth.s_hat)
        .ok_or_else(|| FaError::InfeasibleData("noise covariance is not positive definite".into()))?;
    let chol_l = noise.cholesky().l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, p);
    for row in 0..n {
        let u = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &truth.loading * u + &chol_l * z;
        out.set_row(row, &y.transpose());
    }
    Ok(out)
}

/// Splits sample rows into a list of vectors.
pub fn rows_to_vectors(samples: &DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..samples.nrows())
        .map(|i| samples.row(i).transpose())
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RecoveryMetrics {
    pub rank_estimate: usize,
    pub rank_match: bool,
    pub support_precision: f64,
    pub support_recall: f64,
    /// F-score over off-diagonal positions `i < j`.
    pub support_fscore: f64,
    pub rel_err_l: f64,
    pub rel_err_s: f64,
    /// `KL(N(0, L + S) || N(0, Sigma_hat))`.
    pub kl_to_truth: f64,
    /// Nonzero entries of `S` counting both triangles.
    pub l0_matrix_count: usize,
    /// Nonzero coordinates of `s`, each off-diagonal pair counted once.
    pub l0_vector_count: usize,
}

pub fn recovery_metrics(solution: &Solution, truth: &GroundTruth) -> Result<RecoveryMetrics> {
    let p = truth.p();
    if solution.l_star.nrows() != p || solution.s_star.nrows() != p {
        return Err(FaError::Shape("solution and ground truth disagree on p".into()));
    }
    let predicted = solution.offdiag_support();
    let actual = truth.offdiag_support();
    let (precision, recall, fscore) = fscore(&predicted, &actual);
    let sigma = &solution.l_star + &solution.s_star;
    let l0_matrix_count = solution
        .support
        .iter()
        .map(|(i, j)| if i == j { 1 } else { 2 })
        .sum();
    Ok(RecoveryMetrics {
        rank_estimate: solution.rank_estimate,
        rank_match: solution.rank_estimate == truth.r,
        support_precision: precision,
        support_recall: recall,
        support_fscore: fscore,
        rel_err_l: (&solution.l_star - &truth.l_hat).norm() / truth.l_hat.norm(),
        rel_err_s: (&solution.s_star - &truth.s_hat).norm() / truth.s_hat.norm(),
        kl_to_truth: gaussian_kl(&sigma, &truth.sigma_hat)?,
        l0_matrix_count,
        l0_vector_count: solution.support.len(),
    })
}

/// `(precision, recall, F1)` of a predicted set of positions against the
/// true set. Two empty sets score a perfect 1.
pub fn fscore(predicted: &[(usize, usize)], actual: &[(usize, usize)]) -> (f64, f64, f64) {
    if predicted.is_empty() && actual.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    let tp = predicted.iter().filter(|x| actual.contains(x)).count() as f64;
    let precision = if predicted.is_empty() {
        0.0
    } else {
        tp / predicted.len() as f64
    };
    let recall = if actual.is_empty() {
        0.0
    } else {
        tp / actual.len() as f64
    };
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f)
}

/// `KL(N(0, a) || N(0, b)) = (tr(b^{-1} a) - p + log det b - log det a) / 2`.
pub fn gaussian_kl(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let fa = SpdFactor::new(a)
        .ok_or_else(|| FaError::InfeasiblePoint("first covariance is not positive definite".into()))?;
    let fb = SpdFactor::new(b)
        .ok_or_else(|| FaError::InfeasiblePoint("second covariance is not positive definite".into()))?;
    let p = a.nrows() as f64;
    let kl = 0.5 * (trace_product(fb.inverse(), a) - p + fb.log_det() - fa.log_det());
    Ok(kl.max(0.0))
}

/// Smallest eigenvalue, used in tests and diagnostics.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipm::{recover_solution, RecoveryThresholds};
    use crate::objective::Iterate;
    use crate::symbasis::BasisSet;

    #[test]
    fn default_scale_invariants() {
        let t = generate_ground_truth(40, 5, &NoiseShape::default(), 1.0, 42).unwrap();
        assert_eq!(t.loading.shape(), (40, 5));
        assert!(full_column_rank(&t.loading));
        let eig = SymmetricEigen::new(t.l_hat.clone()).eigenvalues;
        let max = eig.max();
        assert_eq!(eig.iter().filter(|v| **v > 1e-9 * max).count(), 5);
        assert!(min_eigenvalue(&t.s_hat) > 0.0);
        assert!(!t.offdiag_support().is_empty());
        assert!((t.snr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn snr_is_exact_after_rescaling() {
        for snr in [0.5, 1.0, 3.0] {
            let t = generate_ground_truth(12, 3, &NoiseShape::default(), snr, 7).unwrap();
            assert!((t.l_hat.norm() / t.s_hat.norm() - snr).abs() < 1e-10 * snr);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_ground_truth(10, 2, &NoiseShape::default(), 1.0, 5).unwrap();
        let b = generate_ground_truth(10, 2, &NoiseShape::default(), 1.0, 5).unwrap();
        assert_eq!(a, b);
        let c = generate_ground_truth(10, 2, &NoiseShape::default(), 1.0, 6).unwrap();
        assert_ne!(a.loading, c.loading);
        let ya = sample_observations(&a, 50, 1).unwrap();
        let yb = sample_observations(&b, 50, 1).unwrap();
        assert_eq!(ya, yb);
        assert_ne!(ya, sample_observations(&a, 50, 2).unwrap());
    }

    #[test]
    fn config_errors() {
        let shape = NoiseShape::default();
        assert!(generate_ground_truth(4, 4, &shape, 1.0, 0).is_err());
        assert!(generate_ground_truth(4, 0, &shape, 1.0, 0).is_err());
        assert!(generate_ground_truth(4, 1, &shape, 0.0, 0).is_err());
        let t = generate_ground_truth(4, 1, &shape, 1.0, 0).unwrap();
        assert!(sample_observations(&t, 0, 0).is_err());
        let one = sample_observations(&t, 1, 0).unwrap();
        assert_eq!(one.shape(), (1, 4));
    }

    fn monte_carlo_check(truth: &GroundTruth, n: usize, seed: u64) {
        let y = sample_observations(truth, n, seed).unwrap();
        let cov = crate::objective::sample_covariance_rows(&y).unwrap();
        let p = truth.p();
        for i in 0..p {
            for j in i..p {
                let s = &truth.sigma_hat;
                let se = ((s[(i, i)] * s[(j, j)] + s[(i, j)].powi(2)) / n as f64).sqrt();
                let err = (cov[(i, j)] - s[(i, j)]).abs();
                assert!(err <= 3.0 * se, "({i},{j}) err {err} se {se}");
            }
        }
    }

    #[test]
    fn empirical_covariance_matches_model() {
        let t = generate_ground_truth(4, 2, &NoiseShape::default(), 1.0, 21).unwrap();
        monte_carlo_check(&t, 1_000_000, 4);
    }

    #[test]
    fn zero_loading_gives_pure_noise() {
        let base = generate_ground_truth(4, 1, &NoiseShape::default(), 1.0, 3).unwrap();
        let t = GroundTruth::from_parts(DMatrix::zeros(4, 1), base.s_hat.clone(), 3).unwrap();
        assert_eq!(t.sigma_hat, t.s_hat);
        monte_carlo_check(&t, 1_000_000, 8);
    }

    fn solution_from(l: &DMatrix<f64>, s: &DMatrix<f64>) -> Solution {
        let basis = BasisSet::new(l.nrows()).unwrap();
        let it = Iterate::from_matrices(&basis, l, s).unwrap();
        recover_solution(&basis, &it, RecoveryThresholds::default())
    }

    #[test]
    fn metrics_on_exact_truth() {
        let t = generate_ground_truth(8, 2, &NoiseShape::default(), 1.0, 9).unwrap();
        let sym = |a: &DMatrix<f64>| (a + a.transpose()) * 0.5;
        // L_hat is rank 2, so nudge it to full rank for the solution type but
        // keep errors negligible.
        let l = sym(&t.l_hat);
        let sol = solution_from(&l, &sym(&t.s_hat));
        let m = recovery_metrics(&sol, &t).unwrap();
        assert!(m.rank_match);
        assert_eq!(m.support_fscore, 1.0);
        assert!(m.rel_err_l < 1e-14 && m.rel_err_s < 1e-14);
        assert!(m.kl_to_truth < 1e-12);
        assert_eq!(m.l0_matrix_count, 2 * m.l0_vector_count - 8);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let t = generate_ground_truth(8, 2, &NoiseShape::default(), 1.0, 9).unwrap();
        let diag = DMatrix::from_diagonal(&t.s_hat.diagonal());
        let l = (&t.l_hat + t.l_hat.transpose()) * 0.5;
        let sol = solution_from(&l, &diag);
        let m = recovery_metrics(&sol, &t).unwrap();
        assert_eq!(m.support_fscore, 0.0);
    }

    #[test]
    fn kl_is_zero_only_on_the_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
            let b = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
            let sa = &a * a.transpose() + DMatrix::identity(4, 4) * 0.1;
            let sb = &b * b.transpose() + DMatrix::identity(4, 4) * 0.1;
            assert!(gaussian_kl(&sa, &sa).unwrap() < 1e-12);
            assert!(gaussian_kl(&sa, &sb).unwrap() > 0.0);
        }
    }
}
