use std::sync::Arc;

use cansys::dynamical::{derivative_identity_residual, DynamicalSolution};
use cansys::gbdt::closed_form::JordanClosedForm;
use cansys::gbdt::{jordan_seed, scalar_seed, GbdtState, JordanSeedParams, SRoute, ScalarSeedParams};
use cansys::num::dense::{c64, re};
use cansys::num::Grid;

const XS: [f64; 4] = [0.3, 0.7, 1.2, 1.6];
const TS: [f64; 3] = [0.0, 0.5, 1.0];

fn scalar() -> DynamicalSolution {
    let p = ScalarSeedParams { a: c64(1.0, 1.0), c: 1.0, alpha: re(1.0), f1: re(0.3), f2: re(1.0) };
    let seed = Arc::new(scalar_seed(&p).unwrap());
    let st = GbdtState::build(seed, Grid::new(0.0, 2.0, 2001).unwrap(), SRoute::Quadrature).unwrap();
    DynamicalSolution::new(Arc::new(st)).unwrap()
}

fn jordan() -> DynamicalSolution {
    let p = JordanSeedParams::default();
    let seed = Arc::new(jordan_seed(&p).unwrap());
    let cf = JordanClosedForm::new(p, seed.a()[(0, 1)], seed.s0().clone());
    let st = GbdtState::build(seed, Grid::new(0.0, 2.0, 2001).unwrap(), SRoute::Quadrature).unwrap();
    DynamicalSolution::new(Arc::new(st)).unwrap().with_exponential(move |t| cf.exp_ita(t))
}

#[test]
fn pde_converges_at_second_order() {
    for (name, sol) in [("scalar", scalar()), ("jordan", jordan())] {
        let rep = sol.convergence_order(&XS, &TS, 0.02).unwrap();
        assert!((rep.order - 2.0).abs() <= 0.3, "{name}: {rep:?}");
        assert!(rep.fine < rep.coarse);
    }
}

#[test]
fn pde_residual_small_at_fine_steps() {
    let sol = scalar();
    let r = sol.pde_residual(0.5, 0.3, 1e-3).unwrap();
    assert!(r <= 1e-4, "{r:e}");
}

#[test]
fn simplification_and_derivative_identities() {
    for (name, sol) in [("scalar", scalar()), ("jordan", jordan())] {
        for x in [0.0, 0.25, 0.9, 1.5, 2.0] {
            let s = sol.simplification_residual(x).unwrap();
            assert!(s <= 1e-9, "{name} x = {x}: {s:e}");
        }
        for x in [0.25, 0.9, 1.5] {
            let d = derivative_identity_residual(sol.state(), x, 1e-4).unwrap();
            assert!(d <= 1e-5, "{name} x = {x}: {d:e}");
        }
    }
}
