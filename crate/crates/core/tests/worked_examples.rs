use std::sync::Arc;

use cansys::canonical::check_j_monotonicity;
use cansys::gbdt::closed_form::{JordanClosedForm, ScalarClosedForm};
use cansys::gbdt::{jordan_seed, scalar_seed, GbdtState, JordanSeedParams, SRoute, ScalarSeedParams};
use cansys::initial::InitialSolution;
use cansys::num::dense::{c64, fro, re};
use cansys::num::Grid;
use cansys::weyl::{semi_radius_decrease, verify_l2_membership, WeylDisk, WeylFunction};

fn scalar_params() -> ScalarSeedParams {
    ScalarSeedParams { a: c64(1.0, 1.0), c: 1.0, alpha: re(1.0), f1: re(0.3), f2: re(1.0) }
}

fn scalar_state(nodes: usize) -> GbdtState {
    let seed = Arc::new(scalar_seed(&scalar_params()).unwrap());
    GbdtState::build(seed, Grid::new(0.0, 2.0, nodes).unwrap(), SRoute::Quadrature).unwrap()
}

fn jordan_state(nodes: usize) -> (GbdtState, JordanClosedForm) {
    let p = JordanSeedParams::default();
    let seed = Arc::new(jordan_seed(&p).unwrap());
    let cf = JordanClosedForm::new(p, seed.a()[(0, 1)], seed.s0().clone());
    (GbdtState::build(seed, Grid::new(0.0, 2.0, nodes).unwrap(), SRoute::Quadrature).unwrap(), cf)
}

#[test]
fn scalar_seed_matches_closed_forms() {
    let st = scalar_state(2001);
    let cf = ScalarClosedForm::new(scalar_params());
    assert!(st.max_identity_residual() <= 1e-8);
    let mut s_err: f64 = 0.0;
    let mut b_err: f64 = 0.0;
    let mut v_err: f64 = 0.0;
    for x in st.grid().points() {
        s_err = s_err.max((st.s_at(x)[(0, 0)] - cf.s(x)).norm());
        b_err = b_err.max(fro(&(st.transformed_beta(x).unwrap() - cf.beta_tilde(x))));
        for lambda in [c64(0.0, 1.0), c64(-0.5, 2.0)] {
            v_err = v_err.max(fro(&(st.darboux_v(x, lambda).unwrap() - cf.darboux_v(x, lambda))));
        }
    }
    assert!(s_err <= 1e-7, "S {s_err:e}");
    assert!(b_err <= 1e-7, "beta {b_err:e}");
    assert!(v_err <= 1e-9, "v {v_err:e}");
}

#[test]
fn scalar_weyl_function_matches_closed_form() {
    let seed = Arc::new(scalar_seed(&scalar_params()).unwrap());
    let wf = WeylFunction::new(seed).unwrap();
    let cf = ScalarClosedForm::new(scalar_params());
    for lambda in [c64(0.0, 1.0), c64(1.0, 1.0), c64(-0.5, 2.0)] {
        let d = (wf.eval(lambda).unwrap()[(0, 0)] - cf.weyl(lambda)).norm();
        assert!(d <= 1e-9, "lambda = {lambda}: {d:e}");
    }
}

#[test]
fn jordan_seed_matches_closed_forms() {
    let (st, cf) = jordan_state(2001);
    assert!(st.max_identity_residual() <= 1e-8);
    for x in st.grid().points() {
        assert!(fro(&(st.lambda_at(x) - cf.lambda(x))) < 1e-13);
        assert!(fro(&(st.s_at(x) - cf.s(x))) <= 1e-7);
        assert!(fro(&(st.transformed_beta(x).unwrap() - cf.beta_tilde(x).unwrap())) <= 1e-7);
    }
}

#[test]
fn transformed_factor_isotropic_and_normalized() {
    let params = ScalarSeedParams { c: 0.5, ..scalar_params() };
    let seed = Arc::new(scalar_seed(&params).unwrap());
    let st = GbdtState::build(seed, Grid::new(0.0, 2.0, 2001).unwrap(), SRoute::Quadrature).unwrap();
    let j = st.seed().signature().matrix();
    for x in st.grid().points() {
        let b = st.transformed_beta(x).unwrap();
        assert!(fro(&(&b * &j * b.adjoint())) <= 1e-10);
        let bd = st.transformed_beta_derivative(x).unwrap();
        assert!(((bd * &j * b.adjoint())[(0, 0)] - c64(0.0, 1.0)).norm() <= 1e-6);
    }
}

#[test]
fn weyl_function_in_nested_disks() {
    let lambda = c64(0.0, 1.0);
    let seed = Arc::new(scalar_seed(&scalar_params()).unwrap());
    let st = GbdtState::build(seed.clone(), Grid::new(0.0, 5.0, 5001).unwrap(), SRoute::Quadrature).unwrap();
    let init = InitialSolution::new(1.0, seed.alpha().clone()).unwrap();
    let w = st.transformed_fundamental_solution(lambda, st.grid(), |x| init.w(x, lambda)).unwrap();
    let phi = WeylFunction::new(seed).unwrap().eval(lambda).unwrap();
    let mut disks = Vec::new();
    for r in [0.5, 1.0, 2.0, 5.0] {
        let k = st.grid().index_of(r).unwrap();
        let d = WeylDisk::from_w(w.value(k), r, lambda).unwrap();
        d.check_invariants().unwrap();
        assert!(d.membership_margin(&phi) >= -1e-8, "r = {r}: {}", d.membership_margin(&phi));
        disks.push(d);
    }
    assert!(semi_radius_decrease(&disks) >= -1e-8);
    let mono = check_j_monotonicity(&w, lambda, st.initial_system().signature()).unwrap();
    assert!(mono.passed, "{}", mono.worst);
    let sys = Arc::new(st).transformed_system().unwrap();
    let rep = verify_l2_membership(&w, sys.hamiltonian_fn().as_ref(), &phi, lambda, &[1.0, 2.0, 4.0], 1e-6).unwrap();
    assert!(rep.monotone && rep.within_bound, "{rep:?}");
}
