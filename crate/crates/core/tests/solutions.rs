use std::sync::Arc;

use cansys::canonical::{fundamental_solution_oracle, make_beta_exponential};
use cansys::gbdt::{jordan_seed, scalar_seed, GbdtState, JordanSeedParams, SRoute, ScalarSeedParams};
use cansys::initial::InitialSolution;
use cansys::num::dense::{c64, fro, from_rows, re, ComplexMatrix, I};
use cansys::num::Grid;
use cansys::Complex64;

fn unitary2() -> ComplexMatrix {
    let (s, c) = 0.6f64.sin_cos();
    from_rows(&[&[re(c), -re(s) * c64(0.0, 1.0)], &[re(s), c64(0.0, c)]])
}

#[test]
fn explicit_initial_solution_matches_oracle() {
    let grid = Grid::new(0.0, 1.0, 1001).unwrap();
    for alpha in [ComplexMatrix::from_element(1, 1, c64(0.6, 0.8)), unitary2()] {
        for c in [1.0, 0.5] {
            let sys = make_beta_exponential(c, 0.0, &alpha).unwrap();
            let init = InitialSolution::new(c, alpha.clone()).unwrap();
            for lambda in [c64(0.0, 1.0), c64(1.0, 2.0), c64(-0.5, 1.0)] {
                let oracle = fundamental_solution_oracle(&sys, lambda, &grid);
                let d = fro(&(init.w(1.0, lambda).unwrap() - oracle.last()));
                assert!(d <= 1e-6, "p = {}, c = {c}, lambda = {lambda}: {d:e}", alpha.nrows());
            }
        }
    }
}

#[test]
fn explicit_initial_solution_without_rotation() {
    let alpha = ComplexMatrix::from_element(1, 1, re(1.0));
    let init = InitialSolution::new(0.0, alpha.clone()).unwrap();
    let sys = make_beta_exponential(0.0, 0.0, &alpha).unwrap();
    let grid = Grid::new(0.0, 1.0, 1001).unwrap();
    let lambda = c64(0.0, 1.0);
    let w = init.w(1.0, lambda).unwrap();
    assert!(fro(&(&w - fundamental_solution_oracle(&sys, lambda, &grid).last())) <= 1e-10);
    let j = sys.signature().matrix();
    let expected = ComplexMatrix::identity(2, 2) - j * init.k_matrix();
    assert!(fro(&(w - expected)) <= 1e-12);
}

fn transformed_checks(state: GbdtState, c: f64, lambdas: &[Complex64]) {
    let state = Arc::new(state);
    let init = InitialSolution::new(c, state.seed().alpha().clone()).unwrap();
    let j = state.seed().signature().matrix();
    let system = state.transformed_system().unwrap();
    let oracle_grid = Grid::new(0.0, 1.0, 1001).unwrap();
    let h = 1e-4;
    for &lambda in lambdas {
        let v0_inv = state.v0_inverse(lambda).unwrap();
        let wt = |x: f64| state.darboux_v(x, lambda).unwrap() * init.w(x, lambda).unwrap() * &v0_inv;
        let mut worst: f64 = 0.0;
        for k in 1..20 {
            let x = 0.1 * k as f64;
            let deriv = (wt(x + h) - wt(x - h)) / Complex64::from(2.0 * h);
            let rhs = &j * state.transformed_hamiltonian(x).unwrap() * wt(x) * (I * lambda);
            worst = worst.max(fro(&(deriv - rhs)));
        }
        assert!(worst <= 1e-5, "lambda = {lambda}: derivative residual {worst:e}");
        let oracle = fundamental_solution_oracle(&system, lambda, &oracle_grid);
        let d = fro(&(wt(1.0) - oracle.last()));
        assert!(d <= 1e-5, "lambda = {lambda}: oracle distance {d:e}");
    }
}

#[test]
fn transformed_solution_scalar_seed() {
    let p = ScalarSeedParams { a: c64(1.0, 1.0), c: 1.0, alpha: re(1.0), f1: re(0.3), f2: re(1.0) };
    let seed = Arc::new(scalar_seed(&p).unwrap());
    let st = GbdtState::build(seed, Grid::new(0.0, 2.0, 2001).unwrap(), SRoute::Quadrature).unwrap();
    transformed_checks(st, 1.0, &[c64(0.0, 1.0), c64(-0.5, 2.0), c64(1.0, 2.0)]);
}

#[test]
fn transformed_solution_jordan_seed() {
    let seed = Arc::new(jordan_seed(&JordanSeedParams::default()).unwrap());
    let st = GbdtState::build(seed, Grid::new(0.0, 2.0, 2001).unwrap(), SRoute::Quadrature).unwrap();
    transformed_checks(st, 0.0, &[c64(0.0, 1.0), c64(-0.5, 2.0)]);
}
