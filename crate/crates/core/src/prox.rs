//! Hard thresholding, the active index set, and the stationary-point residual.
//!
//! For the scalar problem `min_v C |v|_0 + (v - x)^2 / (2 gamma)` the
//! minimizer is `0` below the threshold `sqrt(2 gamma C)` and `x` above it.
//! At the threshold both are minimizers; this module returns `0`.
//!
//! The index set `T = { i : |s_i - gamma g_i| >= sqrt(2 gamma C) }` selects
//! the coordinates of `s` that survive a proximal-gradient step, and
//! `F = [g_l; g_s[T]; s[not T]]` vanishes exactly at gamma-stationary points.

use nalgebra::DVector;

use crate::error::{FaError, Result};
use crate::objective::{BarrierObjective, Gradient, Iterate};

fn check_weights(gamma: f64, c: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(FaError::param("gamma", format!("must be positive, got {gamma}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(FaError::param("C", format!("must be positive, got {c}")));
    }
    Ok(())
}

/// `sqrt(2 gamma C)`.
pub fn threshold(gamma: f64, c: f64) -> f64 {
    (2.0 * gamma * c).sqrt()
}

pub fn prox_l0_scalar(x: f64, gamma: f64, c: f64) -> Result<f64> {
    check_weights(gamma, c)?;
    Ok(hard_threshold(x, threshold(gamma, c)))
}

#[inline]
fn hard_threshold(x: f64, thr: f64) -> f64 {
    if x.abs() > thr {
        x
    } else {
        0.0
    }
}

pub fn prox_l0_vec(x: &DVector<f64>, gamma: f64, c: f64) -> Result<DVector<f64>> {
    check_weights(gamma, c)?;
    let thr = threshold(gamma, c);
    Ok(x.map(|v| hard_threshold(v, thr)))
}

/// Sorted, duplicate-free subset of `{0, .., m-1}` together with `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    members: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    pub fn new(mut members: Vec<usize>, universe: usize) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= universe {
                return Err(FaError::Shape(format!(
                    "index {last} out of range for m = {universe}"
                )));
            }
        }
        Ok(Self { members, universe })
    }

    pub fn full(universe: usize) -> Self {
        Self {
            members: (0..universe).collect(),
            universe,
        }
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            members: Vec::new(),
            universe,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Membership mask of length `m`.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }

    /// Sorted complement.
    pub fn complement(&self) -> Vec<usize> {
        let mask = self.mask();
        (0..self.universe).filter(|&i| !mask[i]).collect()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }

    /// Indices of the nonzero entries of `v`.
    pub fn support(v: &DVector<f64>) -> Self {
        Self {
            members: v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, _)| i)
                .collect(),
            universe: v.len(),
        }
    }
}

pub fn index_set_t(s: &DVector<f64>, g_s: &DVector<f64>, gamma: f64, c: f64) -> Result<IndexSet> {
    check_weights(gamma, c)?;
    if s.len() != g_s.len() {
        return Err(FaError::Shape(format!(
            "s has length {} but g_s has length {}",
            s.len(),
            g_s.len()
        )));
    }
    let thr = threshold(gamma, c);
    let members = s
        .iter()
        .zip(g_s.iter())
        .enumerate()
        .filter(|(_, (si, gi))| (*si - gamma * *gi).abs() >= thr)
        .map(|(i, _)| i)
        .collect();
    Ok(IndexSet {
        members,
        universe: s.len(),
    })
}

/// `F = [g_l; g_s[T]; s[not T]]` with the index set it was built from.
#[derive(Debug, Clone)]
pub struct StationarityResidual {
    pub r_ell: DVector<f64>,
    pub r_s_t: DVector<f64>,
    pub r_s_tbar: DVector<f64>,
    pub norm: f64,
    pub index_set: IndexSet,
}

impl StationarityResidual {
    /// Assembles the residual from a gradient, the current `s`, and `T`.
    pub fn from_parts(grad: &Gradient, s: &DVector<f64>, t: IndexSet) -> Self {
        let r_ell = grad.ell.clone();
        let r_s_t = DVector::from_iterator(t.len(), t.members().iter().map(|&i| grad.s[i]));
        let tbar = t.complement();
        let r_s_tbar = DVector::from_iterator(tbar.len(), tbar.iter().map(|&i| s[i]));
        let norm = (r_ell.norm_squared() + r_s_t.norm_squared() + r_s_tbar.norm_squared()).sqrt();
        Self {
            r_ell,
            r_s_t,
            r_s_tbar,
            norm,
            index_set: t,
        }
    }

    /// `||F|| / sqrt(2m)`, the quantity used by the stopping rule.
    pub fn normalized(&self) -> f64 {
        let m = self.r_ell.len();
        self.norm / ((2 * m) as f64).sqrt()
    }

    /// The stacked residual vector.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.r_ell.len() + self.r_s_t.len() + self.r_s_tbar.len(),
            self.r_ell
                .iter()
                .chain(self.r_s_t.iter())
                .chain(self.r_s_tbar.iter())
                .copied(),
        )
    }
}

/// Computes `T` at the iterate and the residual `F`.
pub fn stationarity_residual(
    it: &Iterate,
    barrier: &BarrierObjective,
    gamma: f64,
) -> Result<StationarityResidual> {
    let grad = barrier.gradient(it)?;
    residual_with_gradient(it.s(), &grad, gamma, barrier.problem().c())
}

pub(crate) fn residual_with_gradient(
    s: &DVector<f64>,
    grad: &Gradient,
    gamma: f64,
    c: f64,
) -> Result<StationarityResidual> {
    let t = index_set_t(s, &grad.s, gamma, c)?;
    Ok(StationarityResidual::from_parts(grad, s, t))
}

/// One failed clause of the gamma-stationarity characterization.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `g_l[i] != 0`.
    EllGradient { index: usize, value: f64 },
    /// `i` in `supp(s)` but `g_s[i] != 0`.
    SupportedGradient { index: usize, value: f64 },
    /// `i` in `supp(s)` but `|s_i| < sqrt(2 gamma C)`.
    SupportedMagnitude { index: usize, value: f64, threshold: f64 },
    /// `i` outside `supp(s)` but `|g_s[i]| > sqrt(2 C / gamma)`.
    OffSupportGradient { index: usize, value: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub is_stationary: bool,
    pub violations: Vec<Violation>,
}

pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-6;

pub fn check_gamma_stationary(
    it: &Iterate,
    barrier: &BarrierObjective,
    gamma: f64,
    tol: f64,
) -> Result<StationarityReport> {
    let grad = barrier.gradient(it)?;
    check_gamma_stationary_parts(it.s(), &grad, gamma, barrier.problem().c(), tol)
}

/// Clause-by-clause check given `s` and the gradient at the point.
pub fn check_gamma_stationary_parts(
    s: &DVector<f64>,
    grad: &Gradient,
    gamma: f64,
    c: f64,
    tol: f64,
) -> Result<StationarityReport> {
    check_weights(gamma, c)?;
    let mut violations = Vec::new();
    for (index, &value) in grad.ell.iter().enumerate() {
        if value.abs() > tol {
            violations.push(Violation::EllGradient { index, value });
        }
    }
    let thr = threshold(gamma, c);
    let bound = (2.0 * c / gamma).sqrt();
    for (index, (&si, &gi)) in s.iter().zip(grad.s.iter()).enumerate() {
        if si != 0.0 {
            if gi.abs() > tol {
                violations.push(Violation::SupportedGradient { index, value: gi });
            }
            if si.abs() < thr - tol {
                violations.push(Violation::SupportedMagnitude {
                    index,
                    value: si,
                    threshold: thr,
                });
            }
        } else if gi.abs() > bound + tol {
            violations.push(Violation::OffSupportGradient {
                index,
                value: gi,
                bound,
            });
        }
    }
    Ok(StationarityReport {
        is_stationary: violations.is_empty(),
        violations,
    })
}
