//! Analytic derivatives against finite differences, and the reduced Newton
//! system against the full stationarity Jacobian.

mod common;

use common::*;
use l0fa::newton::newton_direction;
use l0fa::objective::{grad_h_tau, hessian_h_tau};
use l0fa::prox::IndexSet;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for p in 2..=6 {
        for _ in 0..5 {
            let (barrier, it) = instance(&mut rng, p);
            let rel = gradient_error(&barrier, &it);
            assert!(rel <= 1e-6, "p = {p}: relative gradient error {rel:e}");
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn hessian_matches_differenced_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for p in 2..=6 {
        for _ in 0..5 {
            let (barrier, it) = instance(&mut rng, p);
            let rel = hessian_error(&barrier, &it);
            assert!(rel <= 1e-4, "p = {p}: relative Hessian error {rel:e}");
            let h = hessian_h_tau(&it, &barrier).unwrap();
            assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
            checked += 1;
        }
    }
    assert!(checked >= 20);
}

#[test]
fn reduced_solve_satisfies_the_full_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in 2..=5 {
        for keep in [0.0, 0.3, 0.7, 1.0] {
            let (barrier, it) = instance(&mut rng, p);
            let m = barrier.basis().m();
            let t = random_index_set(&mut rng, m, keep);
            let d = newton_direction(&it, &t, &barrier).unwrap();
            let stacked = DVector::from_fn(2 * m, |i, _| if i < m { d.d_ell[i] } else { d.d_s[i - m] });
            let (jac, rhs) = full_system(&barrier, &it, &t);
            let residual = (&jac * &stacked - &rhs).norm();
            assert!(residual <= 1e-10 * (1.0 + rhs.norm()), "p = {p}, |T| = {}: {residual:e}", t.len());
            for i in t.complement() {
                assert_eq!(d.d_s[i], -it.s()[i]);
            }
        }
    }
}

#[test]
fn empty_index_set_reduces_to_the_l_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (barrier, it) = instance(&mut rng, 4);
    let m = barrier.basis().m();
    let t = IndexSet::empty(m);
    let d = newton_direction(&it, &t, &barrier).unwrap();
    let h = hessian_h_tau(&it, &barrier).unwrap();
    let g = grad_h_tau(&it, &barrier).unwrap();
    let h_ll = h.view((0, 0), (m, m)).into_owned();
    let h_ls = h.view((0, m), (m, m)).into_owned();
    let expected = h_ll.cholesky().unwrap().solve(&(h_ls * it.s() - &g.ell));
    assert!((&d.d_ell - expected).amax() <= 1e-10 * (1.0 + d.d_ell.amax()));
    assert_eq!(d.d_s, -it.s());
}

#[test]
fn reduced_matrix_is_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for p in 2..=5 {
        let (barrier, it) = instance(&mut rng, p);
        let m = barrier.basis().m();
        let t = random_index_set(&mut rng, m, 0.5);
        let blocks = barrier.hessian_blocks(&it).unwrap();
        let idx: Vec<usize> = (0..m).chain(t.members().iter().map(|&i| m + i)).collect();
        let reduced = blocks.principal_submatrix(&idx);
        let min = reduced.symmetric_eigen().eigenvalues.min();
        assert!(min > 0.0, "p = {p}: min eigenvalue {min:e}");
    }
}
