//! The smooth objective, its log-barrier augmentation, and coordinate
//! derivatives.
//!
//! With `Sigma = L + S`,
//!
//! ```text
//! f(L, S)     = tr(L) + mu * ( tr(Sigma Sc^{-1}) - log det Sigma )
//! f_tau(L, S) = f(L, S) - tau * ( log det L + log det S )
//! h_tau(l, s) = f_tau(sum_a l_a E_a, sum_a s_a E_a)
//! ```
//!
//! where `Sc` is the sample covariance. Points outside the strictly feasible
//! set evaluate to `+inf` instead of raising, so line searches can reject
//! them with the same sufficient-decrease test they use for any other trial.
//!
//! Derivatives follow from `d(-log det X)[D] = -tr(X^{-1} D)` and
//! `d(X^{-1})[D] = -X^{-1} D X^{-1}`:
//!
//! ```text
//! g_l = vec( I + mu (Sc^{-1} - Sigma^{-1}) - tau L^{-1} )
//! g_s = vec(     mu (Sc^{-1} - Sigma^{-1}) - tau S^{-1} )
//! H_ll = mu K(Sigma^{-1}) + tau K(L^{-1})
//! H_ls = mu K(Sigma^{-1})
//! H_ss = mu K(Sigma^{-1}) + tau K(S^{-1})
//! ```
//!
//! with `K(W)[a, b] = tr(E_a W E_b W)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{FaError, Result};
use crate::linalg::{trace_product, SpdFactor};
use crate::symbasis::{check_square, check_symmetric, BasisSet};

/// Sample covariance with regularization weights.
#[derive(Debug, Clone)]
pub struct ProblemData {
    basis: BasisSet,
    sigma_check: DMatrix<f64>,
    sigma_check_factor: SpdFactor,
    c: f64,
    mu: f64,
}

impl ProblemData {
    /// Validates the covariance (symmetric, positive definite) and weights.
    pub fn new(sigma_check: DMatrix<f64>, c: f64, mu: f64) -> Result<Self> {
        if sigma_check.nrows() != sigma_check.ncols() {
            return Err(FaError::Shape("sample covariance must be square".into()));
        }
        let basis = BasisSet::new(sigma_check.nrows())?;
        check_symmetric(&sigma_check)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(FaError::param("C", format!("must be positive, got {c}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(FaError::param("mu", format!("must be positive, got {mu}")));
        }
        let sigma_check_factor = SpdFactor::new(&sigma_check).ok_or_else(|| {
            FaError::InfeasibleData(
                "sample covariance is not positive definite (too few samples or degenerate data)"
                    .into(),
            )
        })?;
        Ok(Self {
            basis,
            sigma_check,
            sigma_check_factor,
            c,
            mu,
        })
    }

    /// Same covariance and factorization with new weights.
    pub fn with_weights(&self, c: f64, mu: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(FaError::param("C", format!("must be positive, got {c}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(FaError::param("mu", format!("must be positive, got {mu}")));
        }
        Ok(Self { c, mu, ..self.clone() })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn p(&self) -> usize {
        self.basis.p()
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn sigma_check(&self) -> &DMatrix<f64> {
        &self.sigma_check
    }

    pub fn sigma_check_inv(&self) -> &DMatrix<f64> {
        self.sigma_check_factor.inverse()
    }

    pub fn sigma_check_log_det(&self) -> f64 {
        self.sigma_check_factor.log_det()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// A point `(l, s)` in coordinates with its matrices and cached factorizations.
///
/// The factorization of `L`, `S` or `Sigma` is `None` when that matrix is not
/// positive definite.
#[derive(Debug, Clone)]
pub struct Iterate {
    ell: DVector<f64>,
    s: DVector<f64>,
    l_mat: DMatrix<f64>,
    s_mat: DMatrix<f64>,
    sigma: DMatrix<f64>,
    l_factor: Option<SpdFactor>,
    s_factor: Option<SpdFactor>,
    sigma_factor: Option<SpdFactor>,
}

impl Iterate {
    pub fn new(basis: &BasisSet, ell: DVector<f64>, s: DVector<f64>) -> Result<Self> {
        if ell.len() != basis.m() || s.len() != basis.m() {
            return Err(FaError::Shape(format!(
                "coordinate lengths ({}, {}) do not match m = {}",
                ell.len(),
                s.len(),
                basis.m()
            )));
        }
        Ok(Self::from_parts(basis, ell, s))
    }

    pub fn from_matrices(basis: &BasisSet, l: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Self> {
        let ell = basis.mat_to_vec(l)?;
        let s = basis.mat_to_vec(s)?;
        Ok(Self::from_parts(basis, ell, s))
    }

    pub(crate) fn from_parts(basis: &BasisSet, ell: DVector<f64>, s: DVector<f64>) -> Self {
        let l_mat = basis.vec_to_mat_unchecked(&ell);
        let s_mat = basis.vec_to_mat_unchecked(&s);
        let l_factor = SpdFactor::new(&l_mat);
        let s_factor = if l_factor.is_some() {
            SpdFactor::new(&s_mat)
        } else {
            None
        };
        let sigma = &l_mat + &s_mat;
        let sigma_factor = SpdFactor::new(&sigma);
        Self {
            ell,
            s,
            l_mat,
            s_mat,
            sigma,
            l_factor,
            s_factor,
            sigma_factor,
        }
    }

    pub fn ell(&self) -> &DVector<f64> {
        &self.ell
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn l_mat(&self) -> &DMatrix<f64> {
        &self.l_mat
    }

    pub fn s_mat(&self) -> &DMatrix<f64> {
        &self.s_mat
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// `L > 0` and `S > 0`.
    pub fn is_strictly_feasible(&self) -> bool {
        self.l_factor.is_some() && self.s_factor.is_some()
    }

    /// Number of nonzero coordinates of `s`.
    pub fn support_size(&self) -> usize {
        self.s.iter().filter(|v| **v != 0.0).count()
    }

    fn factors(&self) -> Result<(&SpdFactor, &SpdFactor, &SpdFactor)> {
        match (&self.l_factor, &self.s_factor, &self.sigma_factor) {
            (Some(l), Some(s), Some(sig)) => Ok((l, s, sig)),
            _ => Err(FaError::InfeasiblePoint(
                "L and S must both be positive definite".into(),
            )),
        }
    }
}

/// `h_tau` for a fixed barrier parameter.
#[derive(Debug, Clone)]
pub struct BarrierObjective {
    problem: ProblemData,
    tau: f64,
}

impl BarrierObjective {
    pub fn new(problem: ProblemData, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(FaError::param("tau", format!("must be positive, got {tau}")));
        }
        Ok(Self { problem, tau })
    }

    pub fn problem(&self) -> &ProblemData {
        &self.problem
    }

    pub fn basis(&self) -> &BasisSet {
        self.problem.basis()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.problem.clone(), tau)
    }

    /// Builds an iterate in this problem's basis.
    pub fn iterate(&self, ell: DVector<f64>, s: DVector<f64>) -> Result<Iterate> {
        Iterate::new(self.basis(), ell, s)
    }

    pub fn value(&self, it: &Iterate) -> f64 {
        eval_h_tau(it, self)
    }

    pub fn gradient(&self, it: &Iterate) -> Result<Gradient> {
        grad_h_tau(it, self)
    }

    pub fn hessian_blocks(&self, it: &Iterate) -> Result<HessianBlocks> {
        hessian_blocks_raw(self.basis(), it, self.problem.mu(), self.tau)
    }
}

/// Sample second-moment matrix `(1/N) sum y_i y_i^T`.
pub fn sample_covariance(samples: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| FaError::InvalidInput("sample list is empty".into()))?;
    let p = first.len();
    let mut acc = DMatrix::zeros(p, p);
    for (i, y) in samples.iter().enumerate() {
        if y.len() != p {
            return Err(FaError::Shape(format!(
                "sample {i} has length {}, expected {p}",
                y.len()
            )));
        }
        acc.syger(1.0, y, y, 1.0);
    }
    acc /= samples.len() as f64;
    acc.fill_upper_triangle_with_lower_triangle();
    Ok(acc)
}

/// Same as [`sample_covariance`] for samples stored as rows of a matrix.
pub fn sample_covariance_rows(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if samples.nrows() == 0 {
        return Err(FaError::InvalidInput("sample list is empty".into()));
    }
    let mut acc = samples.tr_mul(samples);
    acc /= samples.nrows() as f64;
    // Exact symmetry regardless of summation order.
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(sym)
}

/// `f(L, S)`; `+inf` when `L + S` is not positive definite.
pub fn eval_f(l: &DMatrix<f64>, s: &DMatrix<f64>, problem: &ProblemData) -> f64 {
    let sigma = l + s;
    match SpdFactor::new(&sigma) {
        Some(fac) => f_from_parts(l, &sigma, &fac, problem),
        None => f64::INFINITY,
    }
}

fn f_from_parts(
    l: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    sigma_factor: &SpdFactor,
    problem: &ProblemData,
) -> f64 {
    l.trace()
        + problem.mu() * (trace_product(sigma, problem.sigma_check_inv()) - sigma_factor.log_det())
}

/// `f` at an iterate, reusing its cached factorization.
pub fn eval_f_iterate(it: &Iterate, problem: &ProblemData) -> f64 {
    match &it.sigma_factor {
        Some(fac) => f_from_parts(&it.l_mat, &it.sigma, fac, problem),
        None => f64::INFINITY,
    }
}

/// `h_tau`; `+inf` unless `L > 0` and `S > 0`.
pub fn eval_h_tau(it: &Iterate, barrier: &BarrierObjective) -> f64 {
    match it.factors() {
        Ok((lf, sf, sigf)) => {
            f_from_parts(&it.l_mat, &it.sigma, sigf, &barrier.problem)
                - barrier.tau * (lf.log_det() + sf.log_det())
        }
        Err(_) => f64::INFINITY,
    }
}

/// Gradient blocks `(g_l, g_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub ell: DVector<f64>,
    pub s: DVector<f64>,
}

impl Gradient {
    /// `[g_l; g_s]`.
    pub fn stacked(&self) -> DVector<f64> {
        let m = self.ell.len();
        DVector::from_iterator(2 * m, self.ell.iter().chain(self.s.iter()).copied())
    }
}

pub fn grad_h_tau(it: &Iterate, barrier: &BarrierObjective) -> Result<Gradient> {
    gradient_raw(
        barrier.basis(),
        it,
        barrier.problem.sigma_check_inv(),
        barrier.problem.mu(),
        barrier.tau,
    )
}

pub(crate) fn gradient_raw(
    basis: &BasisSet,
    it: &Iterate,
    sigma_check_inv: &DMatrix<f64>,
    mu: f64,
    tau: f64,
) -> Result<Gradient> {
    let (lf, sf, sigf) = it.factors()?;
    let p = basis.p();
    let kl = (sigma_check_inv - sigf.inverse()) * mu;
    let gl = DMatrix::identity(p, p) + &kl - lf.inverse() * tau;
    let gs = kl - sf.inverse() * tau;
    Ok(Gradient {
        ell: basis.mat_to_vec_unchecked(&gl),
        s: basis.mat_to_vec_unchecked(&gs),
    })
}

/// The three distinct `m x m` blocks of the coordinate Hessian.
///
/// `sigma = mu K(Sigma^{-1})`, `ell = tau K(L^{-1})`, `s = tau K(S^{-1})`, so
/// `H_ll = sigma + ell`, `H_ls = sigma`, `H_ss = sigma + s`.
#[derive(Debug, Clone)]
pub struct HessianBlocks {
    pub sigma: DMatrix<f64>,
    pub ell: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

impl HessianBlocks {
    pub fn m(&self) -> usize {
        self.sigma.nrows()
    }

    /// Entry `(a, b)` of the full `2m x 2m` Hessian, with indices `>= m`
    /// addressing the `s` block.
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        let m = self.m();
        let base = self.sigma[(a % m, b % m)];
        match (a < m, b < m) {
            (true, true) => base + self.ell[(a, b)],
            (false, false) => base + self.s[(a - m, b - m)],
            _ => base,
        }
    }

    /// Dense `2m x 2m` Hessian.
    pub fn full(&self) -> DMatrix<f64> {
        let m = self.m();
        DMatrix::from_fn(2 * m, 2 * m, |a, b| self.entry(a, b))
    }

    /// Principal submatrix over the given stacked indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        let n = idx.len();
        let mut out = DMatrix::zeros(n, n);
        for (c, &b) in idx.iter().enumerate() {
            for (r, &a) in idx.iter().enumerate().skip(c) {
                let v = self.entry(a, b);
                out[(r, c)] = v;
                out[(c, r)] = v;
            }
        }
        out
    }
}

pub fn hessian_h_tau(it: &Iterate, barrier: &BarrierObjective) -> Result<DMatrix<f64>> {
    Ok(barrier.hessian_blocks(it)?.full())
}

pub(crate) fn hessian_blocks_raw(
    basis: &BasisSet,
    it: &Iterate,
    mu: f64,
    tau: f64,
) -> Result<HessianBlocks> {
    let (lf, sf, sigf) = it.factors()?;
    Ok(HessianBlocks {
        sigma: basis.congruence_matrix(sigf.inverse()) * mu,
        ell: basis.congruence_matrix(lf.inverse()) * tau,
        s: basis.congruence_matrix(sf.inverse()) * tau,
    })
}

/// Checks that a pair of matrices has the problem's shape and symmetry.
pub(crate) fn check_pair(p: usize, l: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<()> {
    check_square(l, p)?;
    check_square(s, p)?;
    check_symmetric(l)?;
    check_symmetric(s)
}
