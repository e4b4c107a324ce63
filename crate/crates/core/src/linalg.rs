//! Dense symmetric positive-definite helpers. Small matrices go through
//! nalgebra's Cholesky; the large Newton systems through faer's blocked one.

use faer::prelude::SpSolver;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Cholesky factor of an SPD matrix with its log-determinant and inverse.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
    inverse: DMatrix<f64>,
}

impl SpdFactor {
    /// Factorizes `a`, returning `None` when a pivot is nonpositive (the
    /// matrix is not positive definite) or the entries are not finite.
    pub fn new(a: &DMatrix<f64>) -> Option<Self> {
        if !a.iter().all(|v| v.is_finite()) {
            return None;
        }
        let chol = a.clone().cholesky()?;
        let l = chol.l_dirty();
        let mut log_det = 0.0;
        for i in 0..a.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            log_det += d.ln();
        }
        let inverse = chol.inverse();
        Some(Self {
            chol,
            log_det: 2.0 * log_det,
            inverse,
        })
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }
}

/// `tr(A B)` for symmetric `A`, `B`.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Solves `a x = b` for SPD `a` with a blocked Cholesky factorization.
/// `None` when the factorization meets a nonpositive pivot.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || !a.iter().all(|v| v.is_finite()) {
        return None;
    }
    let view = faer::mat::from_column_major_slice(a.as_slice(), n, n);
    let chol = view.cholesky(faer::Side::Lower).ok()?;
    let rhs = faer::mat::from_column_major_slice(b.as_slice(), n, 1);
    let x = chol.solve(rhs);
    let out = DVector::from_fn(n, |i, _| x[(i, 0)]);
    out.iter().all(|v| v.is_finite()).then_some(out)
}

pub fn is_positive_definite(a: &DMatrix<f64>) -> bool {
    SpdFactor::new(a).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_and_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let f = SpdFactor::new(&a).unwrap();
        assert!((f.log_det() - 11f64.ln()).abs() < 1e-14);
        let id = &a * f.inverse();
        assert!((id - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn spd_solve_matches_nalgebra() {
        let n = 60;
        let g = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5);
        let a = &g * g.transpose() + DMatrix::identity(n, n);
        let b = DVector::from_fn(n, |i, _| i as f64 - 20.0);
        let x = spd_solve(&a, &b).unwrap();
        let y = a.clone().cholesky().unwrap().solve(&b);
        assert!((&x - &y).amax() <= 1e-10 * y.amax());
        assert!((&a * &x - &b).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn spd_solve_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(spd_solve(&a, &DVector::from_element(2, 1.0)).is_none());
    }

    #[test]
    fn rejects_indefinite_singular_and_nan() {
        assert!(!is_positive_definite(&DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 2.0, 2.0, 1.0]
        )));
        assert!(!is_positive_definite(&DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 1.0, 1.0, 1.0]
        )));
        assert!(!is_positive_definite(&DMatrix::from_row_slice(
            2,
            2,
            &[f64::NAN, 0.0, 0.0, 1.0]
        )));
    }
}
