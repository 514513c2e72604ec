use cansys::canonical::{fundamental_solution_oracle_substeps, make_beta_exponential, ExponentialBeta};
use cansys::num::dense::{c64, eye, fro, ComplexMatrix};
use cansys::num::Grid;
use cansys::volterra::{
    build_auxiliaries, hamiltonian_accumulation, kernel_series, node_identity_residual, similarity_residual,
    transfer_function, y1_values, SimilarityKernel,
};
use cansys::Complex64;

fn beta() -> ExponentialBeta {
    ExponentialBeta { c: 0.5, alpha: eye(1) }
}

fn kernel(nodes: usize) -> SimilarityKernel {
    let aux = build_auxiliaries(&beta(), &Grid::new(0.0, 1.0, nodes).unwrap()).unwrap();
    kernel_series(&aux, 12, 1e-8).unwrap()
}

fn transfer_error(ker: &SimilarityKernel, lambda: Complex64) -> f64 {
    let sys = make_beta_exponential(0.5, 0.0, &eye(1)).unwrap();
    let w = fundamental_solution_oracle_substeps(&sys, lambda, &Grid::new(0.0, 1.0, 101).unwrap(), 20);
    let wa = transfer_function(ker, &beta(), 1.0, Complex64::from(1.0) / lambda).unwrap();
    fro(&(w.last() - wa))
}

#[test]
fn transfer_function_reproduces_fundamental_solution() {
    let coarse = kernel(400);
    let fine = kernel(800);
    assert!(coarse.converged && coarse.terms() <= 12, "{} {}", coarse.terms(), coarse.tail_bound);
    for lambda in [c64(0.0, 1.0), c64(0.0, 2.0)] {
        let e1 = transfer_error(&coarse, lambda);
        let e2 = transfer_error(&fine, lambda);
        eprintln!("lambda = {lambda}: {e1:e} -> {e2:e}");
        assert!(e1 <= 5e-3);
        assert!(e1 / e2 >= 3.0);
    }
}

#[test]
fn kernel_reproduces_cosine_solution() {
    let ker = kernel(400);
    let z = c64(1.3, 0.2);
    let y = y1_values(&ker, z);
    let k = (z * z + 0.25).sqrt();
    let err = (0..400).map(|i| (y[i][(0, 0)] - (k * ker.grid().node(i)).cos()).norm()).fold(0.0, f64::max);
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn similarity_and_node_identity_converge() {
    let ones = |n: usize| vec![eye(1); n];
    let a = kernel(200);
    let b = kernel(400);
    let r1 = similarity_residual(&a, &beta(), &ones(200)).unwrap();
    let r2 = similarity_residual(&b, &beta(), &ones(400)).unwrap();
    eprintln!("similarity {r1:e} -> {r2:e}");
    assert!(r2 <= 5e-3 && r1 / r2 >= 3.0);
    let n1 = node_identity_residual(&a, &beta(), 1.0).unwrap();
    let n2 = node_identity_residual(&b, &beta(), 1.0).unwrap();
    eprintln!("node {n1:e} -> {n2:e}");
    assert!(n2 < n1);
}

#[test]
fn prefix_independence_and_hamiltonian_recovery() {
    let full = kernel(401);
    let short_aux = build_auxiliaries(&beta(), &Grid::new(0.0, 0.5, 201).unwrap()).unwrap();
    let short = kernel_series(&short_aux, 12, 1e-8).unwrap();
    let mu = c64(0.0, -1.0);
    let d = fro(&(transfer_function(&full, &beta(), 0.5, mu).unwrap() - transfer_function(&short, &beta(), 0.5, mu).unwrap()));
    assert!(d < 1e-6, "{d:e}");
    let h = full.grid().spacing();
    let x = 0.5;
    let m1 = hamiltonian_accumulation(&full, &beta(), x - h).unwrap();
    let m2 = hamiltonian_accumulation(&full, &beta(), x + h).unwrap();
    let deriv: ComplexMatrix = (m2 - m1) / Complex64::from(2.0 * h);
    let b = cansys::canonical::BetaFactor::value(&beta(), x);
    assert!(fro(&(deriv - b.adjoint() * b)) < 1e-3);
}
