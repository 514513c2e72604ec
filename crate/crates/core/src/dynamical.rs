//! Explicit solutions `Y(x, t) = j Lambda* (A*)^{-1} S^{-1} e^{itA} A^{-1}` of
//! the dynamical system `H~ dY/dt = j dY/dx`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gbdt::GbdtState;
use crate::num::dense::{fro, inverse, min_eigenvalue, ComplexMatrix, I};
use crate::num::matrix_exp;

type ExpFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// Lazy evaluator of `Y(x, t)`.
#[derive(Clone)]
pub struct DynamicalSolution {
    state: Arc<GbdtState>,
    a_inv: ComplexMatrix,
    a_star_inv: ComplexMatrix,
    exp_ita: ExpFn,
}

impl std::fmt::Debug for DynamicalSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynamicalSolution").field("n", &self.state.seed().n()).finish()
    }
}

/// Residuals of the PDE at two step sizes and the observed order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderReport {
    pub step: f64,
    pub coarse: f64,
    pub fine: f64,
    pub order: f64,
}

impl DynamicalSolution {
    pub fn new(state: Arc<GbdtState>) -> Result<Self> {
        let seed = state.seed().clone();
        if min_eigenvalue(seed.s0()) <= 0.0 {
            return Err(Error::Precondition("dynamical solutions need S(0) > 0".into()));
        }
        let a_inv = inverse(seed.a()).map_err(|_| Error::Precondition("det A = 0".into()))?;
        let a_star_inv = a_inv.adjoint();
        let a = seed.a().clone();
        let exp_ita: ExpFn = Arc::new(move |t| matrix_exp(&(&a * (I * t))).expect("square"));
        Ok(Self { state, a_inv, a_star_inv, exp_ita })
    }

    /// Replaces the general matrix exponential by a closed form of `e^{itA}`.
    pub fn with_exponential(mut self, exp_ita: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        self.exp_ita = Arc::new(exp_ita);
        self
    }

    pub fn state(&self) -> &Arc<GbdtState> {
        &self.state
    }

    pub fn y(&self, x: f64, t: f64) -> Result<ComplexMatrix> {
        let j = self.state.seed().signature().matrix();
        let l = self.state.lambda_at(x);
        Ok(j * l.adjoint() * &self.a_star_inv * self.state.s_inverse(x)? * (self.exp_ita)(t) * &self.a_inv)
    }

    /// `|| H~(x) dY/dt - j dY/dx ||` with central differences of step `h` in
    /// both variables.
    pub fn pde_residual(&self, x: f64, t: f64, h: f64) -> Result<f64> {
        let j = self.state.seed().signature().matrix();
        let two_h = Complex64::from(2.0 * h);
        let dt = (self.y(x, t + h)? - self.y(x, t - h)?) / two_h;
        let dx = (self.y(x + h, t)? - self.y(x - h, t)?) / two_h;
        Ok(fro(&(self.state.transformed_hamiltonian(x)? * dt - j * dx)))
    }

    /// Largest residual over the product of `xs` and `ts`.
    pub fn max_pde_residual(&self, xs: &[f64], ts: &[f64], h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &x in xs {
            for &t in ts {
                worst = worst.max(self.pde_residual(x, t, h)?);
            }
        }
        Ok(worst)
    }

    /// `log2(r(h) / r(h/2))` for the largest residual over the product grid.
    pub fn convergence_order(&self, xs: &[f64], ts: &[f64], h: f64) -> Result<OrderReport> {
        let coarse = self.max_pde_residual(xs, ts, h)?;
        let fine = self.max_pde_residual(xs, ts, h / 2.0)?;
        let order = if coarse == 0.0 && fine == 0.0 { f64::NAN } else { (coarse / fine).log2() };
        Ok(OrderReport { step: h, coarse, fine, order })
    }

    /// `|| w_A(x, 0)* Lambda* S^{-1} - Lambda* (A*)^{-1} S^{-1} A ||`.
    pub fn simplification_residual(&self, x: f64) -> Result<f64> {
        self.simplification_residual_with(x, self.state.seed().a())
    }

    /// Same comparison with `A^{-1}` as the right factor. Nonzero in general;
    /// kept to measure the misprinted form.
    pub fn inverse_factor_residual(&self, x: f64) -> Result<f64> {
        self.simplification_residual_with(x, &self.a_inv)
    }

    fn simplification_residual_with(&self, x: f64, right: &ComplexMatrix) -> Result<f64> {
        let l = self.state.lambda_at(x);
        let s_inv = self.state.s_inverse(x)?;
        let w = self.state.w_a(x, Complex64::default())?;
        let lhs = w.adjoint() * l.adjoint() * &s_inv;
        let rhs = l.adjoint() * &self.a_star_inv * s_inv * right;
        Ok(fro(&(lhs - rhs)))
    }

    /// `j w_A(x, 0)* Lambda* S^{-1} e^{itA}`, equal to `Y(x, t) A^2`.
    pub fn y_unsimplified(&self, x: f64, t: f64) -> Result<ComplexMatrix> {
        let j = self.state.seed().signature().matrix();
        let l = self.state.lambda_at(x);
        let w = self.state.w_a(x, Complex64::default())?;
        Ok(j * w.adjoint() * l.adjoint() * self.state.s_inverse(x)? * (self.exp_ita)(t))
    }
}

/// `|| (Lambda* S^{-1})' - i H j Lambda* S^{-1} A - q~0* Lambda* S^{-1} ||`
/// with a central difference of step `h`.
pub fn derivative_identity_residual(state: &GbdtState, x: f64, h: f64) -> Result<f64> {
    let g = |y: f64| -> Result<ComplexMatrix> { Ok(state.lambda_at(y).adjoint() * state.s_inverse(y)?) };
    let deriv = (g(x + h)? - g(x - h)?) / Complex64::from(2.0 * h);
    let j = state.seed().signature().matrix();
    let gx = g(x)?;
    let h_x = state.initial_system().hamiltonian(x);
    let rhs = h_x * j * &gx * state.seed().a() * I + state.q_tilde0(x)?.adjoint() * &gx;
    Ok(fro(&(deriv - rhs)))
}
