//! Weyl disks of canonical systems and the explicit Weyl function of
//! transformed systems.

use std::sync::Arc;

use num_complex::Complex64;

use crate::canonical::{fundamental_solution_oracle, j_matrix, CanonicalSystem};
use crate::error::{Error, Result};
use crate::gbdt::{GbdtSeed, GbdtState};
use crate::initial::InitialSolution;
use crate::num::dense::{adjugate, block, det, eye, fro, hermitian_part, inverse, is_hermitian, max_eigenvalue, min_eigenvalue, psd_sqrt, ComplexMatrix, I};
use crate::num::{cumulative_scalar, Grid, MatrixFunction, SampledMatrixFunction};

/// Tolerance for the disk inequalities.
pub const DISK_TOL: f64 = 1e-8;

/// Weyl disk `N(r)` at `lambda`, built from `A(r) = W(r)* j W(r)`.
#[derive(Clone, Debug)]
pub struct WeylDisk {
    r: f64,
    lambda: Complex64,
    form: ComplexMatrix,
    center: ComplexMatrix,
    rho_l: ComplexMatrix,
    rho_r: ComplexMatrix,
}

impl WeylDisk {
    /// Disk from the value `W(r, lambda)` of a fundamental solution.
    pub fn from_w(w: &ComplexMatrix, r: f64, lambda: Complex64) -> Result<Self> {
        if lambda.im <= 0.0 {
            return Err(Error::Precondition("Weyl disks need Im lambda > 0".into()));
        }
        let m = w.nrows();
        if m % 2 != 0 || w.ncols() != m {
            return Err(Error::Dimension(format!("W must be 2p x 2p, got {}x{}", m, w.ncols())));
        }
        let p = m / 2;
        let form = hermitian_part(&(w.adjoint() * j_matrix(p, p) * w));
        let a11 = block(&form, 0, 0, p, p);
        let a12 = block(&form, 0, p, p, p);
        let a21 = block(&form, p, 0, p, p);
        let a22 = block(&form, p, p, p, p);
        let a22_inv = inverse(&a22).map_err(|_| Error::Singular("A22 singular: inconsistent disk".into()))?;
        let center = -&a22_inv * &a21;
        let rho_l = psd_sqrt(&hermitian_part(&(-&a22_inv)))?;
        let rho_r = psd_sqrt(&hermitian_part(&(a11 - a12 * &a22_inv * a21)))?;
        Ok(Self { r, lambda, form, center, rho_l, rho_r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn form(&self) -> &ComplexMatrix {
        &self.form
    }

    pub fn center(&self) -> &ComplexMatrix {
        &self.center
    }

    pub fn rho_l(&self) -> &ComplexMatrix {
        &self.rho_l
    }

    pub fn rho_r(&self) -> &ComplexMatrix {
        &self.rho_r
    }

    fn p(&self) -> usize {
        self.form.nrows() / 2
    }

    /// `[I phi*] A(r) [I; phi]`.
    pub fn membership_value(&self, phi: &ComplexMatrix) -> ComplexMatrix {
        let col = crate::num::dense::vstack(&eye(self.p()), phi);
        hermitian_part(&(col.adjoint() * &self.form * col))
    }

    pub fn membership_margin(&self, phi: &ComplexMatrix) -> f64 {
        min_eigenvalue(&self.membership_value(phi))
    }

    pub fn contains(&self, phi: &ComplexMatrix) -> bool {
        self.membership_margin(phi) >= -DISK_TOL
    }

    /// `rho_L omega rho_R + center` for a contraction `omega`.
    pub fn point(&self, omega: &ComplexMatrix) -> Result<ComplexMatrix> {
        let p = self.p();
        if omega.shape() != (p, p) {
            return Err(Error::Dimension(format!("omega must be {p}x{p}")));
        }
        if max_eigenvalue(&(omega.adjoint() * omega)) > 1.0 + 1e-12 {
            return Err(Error::Precondition("omega is not contractive".into()));
        }
        Ok(&self.rho_l * omega * &self.rho_r + &self.center)
    }

    /// `-A22 >= I` and positive definite semi-radii.
    pub fn check_invariants(&self) -> Result<()> {
        let p = self.p();
        let a22 = block(&self.form, p, p, p, p);
        if min_eigenvalue(&(-a22 - eye(p))) < -DISK_TOL {
            return Err(Error::Precondition("-A22 >= I violated".into()));
        }
        for (name, rho) in [("left", &self.rho_l), ("right", &self.rho_r)] {
            if !is_hermitian(rho, 1e-10 * fro(rho).max(1.0)) || min_eigenvalue(rho) <= 0.0 {
                return Err(Error::Precondition(format!("{name} semi-radius not positive definite")));
            }
        }
        Ok(())
    }
}

/// Weyl disk of `system` at `r`, with `W` from the ODE oracle on `nodes` nodes.
pub fn weyl_disk(system: &CanonicalSystem, lambda: Complex64, r: f64, nodes: usize) -> Result<WeylDisk> {
    if lambda.im <= 0.0 {
        return Err(Error::Precondition("Weyl disks need Im lambda > 0".into()));
    }
    if r == 0.0 {
        return WeylDisk::from_w(&eye(system.signature().m()), 0.0, lambda);
    }
    let grid = Grid::new(0.0, r, nodes)?;
    let w = fundamental_solution_oracle(system, lambda, &grid);
    WeylDisk::from_w(w.last(), r, lambda)
}

/// Smallest eigenvalue of `rho(r1) - rho(r2)` over consecutive disks for
/// both semi-radii; nonnegative when the disks are nested.
pub fn semi_radius_decrease(disks: &[WeylDisk]) -> f64 {
    disks
        .windows(2)
        .flat_map(|d| {
            [
                min_eigenvalue(&(&d[0].rho_l - &d[1].rho_l)),
                min_eigenvalue(&(&d[0].rho_r - &d[1].rho_r)),
            ]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Explicit Weyl function of the system transformed by `seed`:
/// `phi = [0 I] v(0) E1 ([I 0] v(0) E1)^{-1}`.
///
/// `v(0, lambda)` is replaced by `det(A - lambda) v(0, lambda)`, written with
/// the adjugate of `A - lambda`, so the formula stays regular where `lambda`
/// meets the spectrum of `A`.
#[derive(Clone, Debug)]
pub struct WeylFunction {
    seed: Arc<GbdtSeed>,
    initial: InitialSolution,
    kernel: ComplexMatrix,
}

impl WeylFunction {
    pub fn new(seed: Arc<GbdtSeed>) -> Result<Self> {
        let sig = seed.signature();
        let Some(p) = sig.p() else {
            return Err(Error::Precondition("Weyl function needs m1 = m2".into()));
        };
        if seed.c() == 0.0 || seed.d() != 0.0 {
            return Err(Error::Precondition("Weyl function needs c != 0 and d = 0".into()));
        }
        if min_eigenvalue(seed.s0()) <= 0.0 {
            return Err(Error::Precondition("Weyl function needs S(0) > 0".into()));
        }
        let initial = InitialSolution::new(seed.c(), seed.alpha().clone())?;
        // j Lambda0* (A*)^{-1} S0^{-1}
        let kernel = j_matrix(p, p) * seed.lambda0().adjoint() * inverse(&seed.a().adjoint())? * inverse(seed.s0())?;
        Ok(Self { seed, initial, kernel })
    }

    pub fn initial(&self) -> &InitialSolution {
        &self.initial
    }

    /// `phi(lambda)`; `IsolatedPoint` where the inverted block is singular.
    pub fn eval(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        if lambda.im <= 0.0 {
            return Err(Error::Precondition("Weyl function is evaluated in the upper half-plane".into()));
        }
        let p = self.initial.p();
        let n = self.seed.n();
        let shifted = self.seed.a() - eye(n) * lambda;
        let scaled_v = eye(2 * p) * det(&shifted) - &self.kernel * adjugate(&shifted) * self.seed.lambda0() * (I * lambda);
        let x = scaled_v * self.initial.e1(lambda)?;
        let top = block(&x, 0, 0, p, p);
        let bottom = block(&x, p, 0, p, p);
        let scale = fro(&x);
        let top_inv = inverse(&top).map_err(|_| Error::IsolatedPoint { re: lambda.re, im: lambda.im })?;
        if scale == 0.0 || fro(&top_inv) * scale > 1e14 {
            return Err(Error::IsolatedPoint { re: lambda.re, im: lambda.im });
        }
        Ok(bottom * top_inv)
    }
}

/// Smallest eigenvalue over `v(0)* j v(0) - j` and `v(0) j v(0)* - j`.
pub fn v0_expansion_margin(state: &GbdtState, lambda: Complex64) -> Result<f64> {
    let v = state.darboux_v(0.0, lambda)?;
    let j = state.seed().signature().matrix();
    let a = min_eigenvalue(&(v.adjoint() * &j * &v - &j));
    let b = min_eigenvalue(&(&v * &j * v.adjoint() - &j));
    Ok(a.min(b))
}

/// Values of the truncated `L^2(H)` norm of `W [I; phi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct L2Report {
    /// `(L, largest eigenvalue of the integral over [0, L])`.
    pub integrals: Vec<(f64, f64)>,
    pub bound: f64,
    pub monotone: bool,
    pub within_bound: bool,
}

/// Integrates `[I phi*] W* H W [I; phi]` over prefixes `[0, L]` of the grid
/// of `w` and compares with `1 / (2 Im lambda)`.
pub fn verify_l2_membership(
    w: &SampledMatrixFunction,
    hamiltonian: &dyn MatrixFunction,
    phi: &ComplexMatrix,
    lambda: Complex64,
    lengths: &[f64],
    tol: f64,
) -> Result<L2Report> {
    if lambda.im <= 0.0 {
        return Err(Error::Precondition("L2 membership needs Im lambda > 0".into()));
    }
    let grid = *w.grid();
    let p = phi.nrows();
    let col = crate::num::dense::vstack(&eye(p), phi);
    let integrand: Vec<ComplexMatrix> = grid
        .points()
        .zip(w.values())
        .map(|(x, wk)| {
            let y = wk * &col;
            hermitian_part(&(y.adjoint() * hamiltonian.eval(x) * y))
        })
        .collect();
    let h = grid.spacing();
    let mut cumulative = vec![ComplexMatrix::zeros(p, p); grid.nodes()];
    for r in 0..p {
        for c in 0..p {
            let re_part: Vec<f64> = integrand.iter().map(|m| m[(r, c)].re).collect();
            let im_part: Vec<f64> = integrand.iter().map(|m| m[(r, c)].im).collect();
            let (cr, ci) = (cumulative_scalar(&re_part, h), cumulative_scalar(&im_part, h));
            for k in 0..grid.nodes() {
                cumulative[k][(r, c)] = Complex64::new(cr[k], ci[k]);
            }
        }
    }
    let mut integrals = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let k = grid
            .index_of(l)
            .ok_or_else(|| Error::GridMismatch(format!("L = {l} is not a node of the W grid")))?;
        integrals.push((l, max_eigenvalue(&cumulative[k])));
    }
    let bound = 1.0 / (2.0 * lambda.im);
    let monotone = integrals.windows(2).all(|w| w[1].1 >= w[0].1 - tol);
    let within_bound = integrals.iter().all(|&(_, v)| v <= bound + tol);
    Ok(L2Report { integrals, bound, monotone, within_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::{scalar_seed, ScalarSeedParams, SeedParts};
    use crate::num::dense::{c64, re};
    use crate::num::SqrtBranch;

    #[test]
    fn disk_at_zero_is_unit() {
        let d = WeylDisk::from_w(&eye(2), 0.0, I).unwrap();
        assert!(fro(&(d.rho_l() - eye(1))) < 1e-15);
        assert!(fro(&(d.rho_r() - eye(1))) < 1e-15);
        assert!(fro(d.center()) < 1e-15);
        assert!((d.membership_margin(&ComplexMatrix::zeros(1, 1)) - 1.0).abs() < 1e-15);
        let pt = d.point(&eye(1)).unwrap();
        assert!(fro(&(pt - eye(1))) < 1e-15);
    }

    #[test]
    fn lower_half_plane_rejected() {
        assert!(WeylDisk::from_w(&eye(2), 0.0, -I).is_err());
    }

    #[test]
    fn trivial_seed_reduces_to_initial_formula() {
        let seed = GbdtSeed::new(SeedParts {
            a: eye(1),
            c: 1.0,
            d: 0.0,
            alpha: eye(1),
            f1: ComplexMatrix::zeros(1, 1),
            f2: ComplexMatrix::zeros(1, 1),
            q: None,
            branch: SqrtBranch::default(),
            s0: Some(eye(1)),
        })
        .unwrap();
        let wf = WeylFunction::new(Arc::new(seed)).unwrap();
        for lambda in [I, c64(0.5, 2.0)] {
            let z1 = wf.initial().z1(lambda).unwrap();
            let expected = -(lambda + 1.0 - z1) / lambda;
            assert!((wf.eval(lambda).unwrap()[(0, 0)] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn regular_at_eigenvalue_of_a() {
        let p = ScalarSeedParams { a: c64(1.0, 1.0), c: 1.0, alpha: re(1.0), f1: re(0.3), f2: re(1.0) };
        let wf = WeylFunction::new(Arc::new(scalar_seed(&p).unwrap())).unwrap();
        let at = wf.eval(c64(1.0, 1.0)).unwrap()[(0, 0)];
        let near = wf.eval(c64(1.0 + 1e-7, 1.0)).unwrap()[(0, 0)];
        assert!((at - near).norm() < 1e-5);
    }

    #[test]
    fn bound_at_two_i() {
        let grid = Grid::new(0.0, 1.0, 3).unwrap();
        let w = SampledMatrixFunction::from_fn(grid, |_| eye(2));
        let zero = |_x: f64| ComplexMatrix::zeros(2, 2);
        let rep = verify_l2_membership(&w, &zero, &ComplexMatrix::zeros(1, 1), c64(0.0, 2.0), &[1.0], 1e-6).unwrap();
        assert_eq!(rep.bound, 0.25);
        assert!(rep.within_bound && rep.monotone);
    }
}
