//! Orthonormal coordinates for the space of symmetric `p x p` matrices.
//!
//! Coordinates are enumerated over the upper triangle `(i, j)`, `i <= j`, in
//! row-major order. A diagonal position maps to the unit matrix `e_i e_i^T`;
//! an off-diagonal pair maps to `(e_i e_j^T + e_j e_i^T) / sqrt(2)`. With this
//! scaling the basis is orthonormal under `<U, V> = tr(U V)`, so the
//! vectorization is an isometry between the Frobenius norm and the Euclidean
//! norm.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{FaError, Result};

/// Relative tolerance used to decide whether an input matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    p: usize,
    pairs: Vec<(usize, usize)>,
    /// `index[i * p + j]` is the coordinate of position `(i, j)` (either order).
    index: Vec<usize>,
}

impl BasisSet {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(FaError::InvalidDimension(
                "basis dimension p must be at least 1".into(),
            ));
        }
        let m = p * (p + 1) / 2;
        let mut pairs = Vec::with_capacity(m);
        let mut index = vec![0; p * p];
        for i in 0..p {
            for j in i..p {
                index[i * p + j] = pairs.len();
                index[j * p + i] = pairs.len();
                pairs.push((i, j));
            }
        }
        Ok(Self { p, pairs, index })
    }

    /// Matrix dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of coordinates, `p (p + 1) / 2`.
    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// Index pair `(i, j)` with `i <= j` of coordinate `a`.
    pub fn pair(&self, a: usize) -> (usize, usize) {
        self.pairs[a]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Coordinate of matrix position `(i, j)`.
    pub fn coordinate(&self, i: usize, j: usize) -> usize {
        self.index[i * self.p + j]
    }

    pub fn is_diagonal(&self, a: usize) -> bool {
        let (i, j) = self.pairs[a];
        i == j
    }

    /// The basis matrix `E_a` as a dense matrix.
    pub fn element(&self, a: usize) -> DMatrix<f64> {
        let (i, j) = self.pairs[a];
        let mut e = DMatrix::zeros(self.p, self.p);
        if i == j {
            e[(i, i)] = 1.0;
        } else {
            e[(i, j)] = 1.0 / SQRT_2;
            e[(j, i)] = 1.0 / SQRT_2;
        }
        e
    }

    /// Coordinates `s_a = <S, E_a>` of a symmetric matrix.
    pub fn mat_to_vec(&self, s: &DMatrix<f64>) -> Result<DVector<f64>> {
        check_square(s, self.p)?;
        check_symmetric(s)?;
        Ok(self.mat_to_vec_unchecked(s))
    }

    /// Same as [`mat_to_vec`](Self::mat_to_vec) but reads only the upper
    /// triangle and skips the symmetry check.
    pub(crate) fn mat_to_vec_unchecked(&self, s: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.pairs.iter().map(|&(i, j)| {
                if i == j {
                    s[(i, i)]
                } else {
                    SQRT_2 * s[(i, j)]
                }
            }),
        )
    }

    /// The symmetric matrix `sum_a s_a E_a`.
    pub fn vec_to_mat(&self, s: &DVector<f64>) -> Result<DMatrix<f64>> {
        if s.len() != self.m() {
            return Err(FaError::Shape(format!(
                "coordinate vector has length {}, expected m = {}",
                s.len(),
                self.m()
            )));
        }
        Ok(self.vec_to_mat_unchecked(s))
    }

    pub(crate) fn vec_to_mat_unchecked(&self, s: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.p, self.p);
        for (a, &(i, j)) in self.pairs.iter().enumerate() {
            if i == j {
                out[(i, i)] = s[a];
            } else {
                let v = s[a] / SQRT_2;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Matrix of the congruence map `X -> W X W` in basis coordinates:
    /// entry `(a, b)` is `tr(E_a W E_b W)`.
    ///
    /// This is the coordinate Hessian of `-log det X` at `X = W^{-1}`. With
    /// `E_a = k_a (e_i e_j^T + e_j e_i^T)` (`k = 1/2` on the diagonal,
    /// `1/sqrt(2)` off it) the entry reduces to
    /// `2 k_a k_b (W_ik W_jl + W_il W_jk)`.
    pub fn congruence_matrix(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.m();
        let kappa: Vec<f64> = self
            .pairs
            .iter()
            .map(|&(i, j)| if i == j { 0.5 } else { 1.0 / SQRT_2 })
            .collect();
        let mut out = DMatrix::zeros(m, m);
        for b in 0..m {
            let (k, l) = self.pairs[b];
            for a in b..m {
                let (i, j) = self.pairs[a];
                let v = 2.0
                    * kappa[a]
                    * kappa[b]
                    * (w[(i, k)] * w[(j, l)] + w[(i, l)] * w[(j, k)]);
                out[(a, b)] = v;
                out[(b, a)] = v;
            }
        }
        out
    }
}

pub(crate) fn check_square(s: &DMatrix<f64>, p: usize) -> Result<()> {
    if s.nrows() != p || s.ncols() != p {
        return Err(FaError::Shape(format!(
            "matrix is {}x{}, expected {p}x{p}",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(())
}

/// Rejects matrices whose asymmetry exceeds [`SYMMETRY_TOL`] relative to the
/// largest entry. Inputs are never silently symmetrized.
pub(crate) fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    let scale = s.amax();
    let n = s.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (s[(i, j)] - s[(j, i)]).abs();
            if diff > SYMMETRY_TOL * scale || diff.is_nan() {
                return Err(FaError::Shape(format!(
                    "matrix is not symmetric: |S[{i},{j}] - S[{j},{i}]| = {diff:e}"
                )));
            }
        }
    }
    Ok(())
}
