//! Random instances and finite-difference oracles shared by the
//! integration tests.
#![allow(dead_code)]

use l0fa::objective::{grad_h_tau, hessian_h_tau};
use l0fa::prox::IndexSet;
use l0fa::{BarrierObjective, Iterate, ProblemData};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Central-difference step.
pub const STEP: f64 = 1e-5;

pub fn random_spd(rng: &mut ChaCha8Rng, p: usize, shift: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(p, p) * shift
}

/// A random strictly feasible point and barrier objective of dimension `p`.
pub fn instance(rng: &mut ChaCha8Rng, p: usize) -> (BarrierObjective, Iterate) {
    let sc = random_spd(rng, p, 0.5);
    let c = rng.gen_range(0.1..2.0);
    let mu = rng.gen_range(0.5..5.0);
    let tau = rng.gen_range(0.05..1.0);
    let barrier = BarrierObjective::new(ProblemData::new(sc, c, mu).unwrap(), tau).unwrap();
    let l = random_spd(rng, p, 0.3);
    let s = random_spd(rng, p, 0.3);
    let it = Iterate::from_matrices(barrier.basis(), &l, &s).unwrap();
    (barrier, it)
}

pub fn stacked_point(it: &Iterate) -> DVector<f64> {
    let m = it.ell().len();
    DVector::from_fn(2 * m, |i, _| if i < m { it.ell()[i] } else { it.s()[i - m] })
}

pub fn at(barrier: &BarrierObjective, x: &DVector<f64>) -> Iterate {
    let m = x.len() / 2;
    barrier
        .iterate(x.rows(0, m).into_owned(), x.rows(m, m).into_owned())
        .unwrap()
}

/// Relative error of the analytic gradient against central differences of
/// `h_tau`.
pub fn gradient_error(barrier: &BarrierObjective, it: &Iterate) -> f64 {
    let x = stacked_point(it);
    let g = grad_h_tau(it, barrier).unwrap().stacked();
    let fd = DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += STEP;
        xm[i] -= STEP;
        (barrier.value(&at(barrier, &xp)) - barrier.value(&at(barrier, &xm))) / (2.0 * STEP)
    });
    (&fd - &g).norm() / g.norm()
}

/// Relative error of the analytic Hessian against central differences of
/// the analytic gradient.
pub fn hessian_error(barrier: &BarrierObjective, it: &Iterate) -> f64 {
    let x = stacked_point(it);
    let h = hessian_h_tau(it, barrier).unwrap();
    let n = x.len();
    let mut fd = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += STEP;
        xm[j] -= STEP;
        let gp = grad_h_tau(&at(barrier, &xp), barrier).unwrap().stacked();
        let gm = grad_h_tau(&at(barrier, &xm), barrier).unwrap().stacked();
        fd.set_column(j, &((gp - gm) / (2.0 * STEP)));
    }
    (&fd - &h).norm() / h.norm()
}

/// `J d = -F` for `F = [g_l; g_s[T]; s[Tbar]]`: the rows for `l` and `s[T]`
/// are full Hessian rows, the rows for `s[Tbar]` are identity rows.
pub fn full_system(
    barrier: &BarrierObjective,
    it: &Iterate,
    t: &IndexSet,
) -> (DMatrix<f64>, DVector<f64>) {
    let m = barrier.basis().m();
    let h = hessian_h_tau(it, barrier).unwrap();
    let g = grad_h_tau(it, barrier).unwrap().stacked();
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    let mut rhs = DVector::zeros(2 * m);
    for row in 0..2 * m {
        let in_tbar = row >= m && !t.contains(row - m);
        if in_tbar {
            jac[(row, row)] = 1.0;
            rhs[row] = -it.s()[row - m];
        } else {
            jac.set_row(row, &h.row(row));
            rhs[row] = -g[row];
        }
    }
    (jac, rhs)
}

pub fn random_index_set(rng: &mut ChaCha8Rng, m: usize, keep: f64) -> IndexSet {
    let members = (0..m).filter(|_| rng.gen_bool(keep)).collect();
    IndexSet::new(members, m).unwrap()
}
