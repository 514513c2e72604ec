//! Closed-form fundamental solution of the initial system with
//! `H(x) = e^{-icxj} K e^{icxj}` and `K = [[I, alpha], [alpha*, I]]`.

use num_complex::Complex64;

use crate::canonical::j_matrix;
use crate::error::{Error, Result};
use crate::num::dense::{block_diag, eye, fro, hstack, inverse, vstack, ComplexMatrix, I};

/// Initial system data: `alpha` is `p x p` and unitary.
#[derive(Clone, Debug)]
pub struct InitialSolution {
    p: usize,
    c: f64,
    alpha: ComplexMatrix,
}

impl InitialSolution {
    pub fn new(c: f64, alpha: ComplexMatrix) -> Result<Self> {
        let (p, q) = alpha.shape();
        if p == 0 || p != q {
            return Err(Error::Dimension(format!("alpha must be square, got {p}x{q}")));
        }
        if fro(&(&alpha * alpha.adjoint() - eye(p))) > 1e-12 {
            return Err(Error::Precondition("alpha alpha* != I".into()));
        }
        if !c.is_finite() {
            return Err(Error::Precondition("c must be finite".into()));
        }
        Ok(Self { p, c, alpha })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> &ComplexMatrix {
        &self.alpha
    }

    pub fn k_matrix(&self) -> ComplexMatrix {
        let top = hstack(&eye(self.p), &self.alpha);
        let bottom = hstack(&self.alpha.adjoint(), &eye(self.p));
        vstack(&top, &bottom)
    }

    /// `z1(lambda)`: root of `c(2 lambda + c)` with positive imaginary part.
    pub fn z1(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_lambda(lambda)?;
        let r = ((lambda * 2.0 + self.c) * self.c).sqrt();
        Ok(if r.im <= 0.0 { -r } else { r })
    }

    fn check_lambda(&self, lambda: Complex64) -> Result<()> {
        if self.c != 0.0 && lambda.im == 0.0 {
            return Err(Error::Precondition("real lambda with c != 0: use the ODE oracle".into()));
        }
        Ok(())
    }

    /// `E(lambda) = [E1 E2]` with `Ei = [-alpha; (lambda + c - zi)/lambda I]`
    /// for the root pair `(z1, -z1)`.
    pub fn e_matrix_with(&self, lambda: Complex64, z1: Complex64) -> Result<ComplexMatrix> {
        if lambda == Complex64::default() {
            return Err(Error::Precondition("E(lambda) is undefined at lambda = 0".into()));
        }
        let col = |z: Complex64| vstack(&(-&self.alpha), &(eye(self.p) * ((lambda + self.c - z) / lambda)));
        Ok(hstack(&col(z1), &col(-z1)))
    }

    pub fn e_matrix(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        self.e_matrix_with(lambda, self.z1(lambda)?)
    }

    /// First block column `E1(lambda)`.
    pub fn e1(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        let e = self.e_matrix(lambda)?;
        Ok(e.columns(0, self.p).into_owned())
    }

    /// `W(x, lambda)`, normalized by `W(0, lambda) = I`.
    pub fn w(&self, x: f64, lambda: Complex64) -> Result<ComplexMatrix> {
        let p = self.p;
        let j = j_matrix(p, p);
        if self.c == 0.0 {
            return Ok(eye(2 * p) + j * self.k_matrix() * (I * lambda * x));
        }
        let z1 = self.z1(lambda)?;
        let e = self.e_matrix_with(lambda, z1)?;
        let e_inv = inverse(&e)?;
        let ez = block_diag(&(eye(p) * (I * z1 * x).exp()), &(eye(p) * (-I * z1 * x).exp()));
        let phase = (I * self.c * x).exp();
        let rot = block_diag(&(eye(p) / phase), &(eye(p) * phase));
        Ok(rot * e * ez * e_inv)
    }

    /// `|| E Z E^{-1} - (lambda j K + c j) ||` for the root pair `(z1, -z1)`.
    pub fn eigenrelation_residual_with(&self, lambda: Complex64, z1: Complex64) -> Result<f64> {
        let p = self.p;
        let e = self.e_matrix_with(lambda, z1)?;
        let z = block_diag(&(eye(p) * z1), &(eye(p) * -z1));
        let j = j_matrix(p, p);
        let target = &j * self.k_matrix() * lambda + j * Complex64::from(self.c);
        Ok(fro(&(e.clone() * z * inverse(&e)? - target)))
    }

    pub fn verify_eigenrelation(&self, lambda: Complex64) -> Result<f64> {
        if self.c == 0.0 {
            return Err(Error::Precondition("eigenrelation needs c != 0".into()));
        }
        self.eigenrelation_residual_with(lambda, self.z1(lambda)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{fundamental_solution_oracle, make_beta_exponential};
    use crate::num::dense::{c64, re};
    use crate::num::Grid;

    #[test]
    fn normalized_at_zero() {
        let s = InitialSolution::new(1.0, eye(1)).unwrap();
        assert!(fro(&(s.w(0.0, I).unwrap() - eye(2))) < 1e-14);
    }

    #[test]
    fn c_zero_branch_is_linear() {
        let s = InitialSolution::new(0.0, eye(1)).unwrap();
        let w = s.w(1.0, I).unwrap();
        let expected = eye(2) - j_matrix(1, 1) * s.k_matrix();
        assert!(fro(&(w - expected)) < 1e-15);
    }

    #[test]
    fn agrees_with_oracle() {
        let s = InitialSolution::new(1.0, eye(1)).unwrap();
        let sys = make_beta_exponential(1.0, 0.0, &eye(1)).unwrap();
        let grid = Grid::new(0.0, 0.7, 701).unwrap();
        let w = fundamental_solution_oracle(&sys, I, &grid);
        assert!(fro(&(w.last() - s.w(0.7, I).unwrap())) < 1e-7);
    }

    #[test]
    fn eigenrelation_and_branch_flip() {
        let s = InitialSolution::new(1.0, eye(1)).unwrap();
        assert!(s.verify_eigenrelation(I).unwrap() < 1e-12);
        let z1 = s.z1(I).unwrap();
        assert!(s.eigenrelation_residual_with(I, -z1).unwrap() < 1e-12);
        let s2 = InitialSolution::new(0.5, eye(2)).unwrap();
        assert!(s2.verify_eigenrelation(c64(0.0, 2.0)).unwrap() < 1e-12);
    }

    #[test]
    fn real_lambda_deferred_to_oracle() {
        let s = InitialSolution::new(1.0, eye(1)).unwrap();
        assert!(s.w(0.5, re(2.0)).is_err());
        assert!(s.e_matrix(Complex64::default()).is_err());
    }
}
