use std::sync::Arc;

use num_complex::Complex64;

use super::seed::GbdtSeed;
use crate::canonical::CanonicalSystem;
use crate::error::{Error, Result};
use crate::num::dense::{eigenvalues, eye, fro, hermitian_condition, hermitian_part, inverse, ComplexMatrix, I};
use crate::num::{gauss_legendre, quadrature_cumulative, solve_sylvester, Grid, SampledMatrixFunction};

/// How `S(x)` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SRoute {
    /// Cumulative quadrature of `S' = Lambda j H j Lambda*` from `S(0)`.
    #[default]
    Quadrature,
    /// Pointwise solution of `A S - S A* = i Lambda j Lambda*`.
    Sylvester,
}

/// Condition number of `S(x)` above which inversion is refused.
pub const S_CONDITION_LIMIT: f64 = 1e12;

/// Relative distance below which `lambda` counts as an eigenvalue of `A`.
const COLLISION_TOL: f64 = 1e-10;

/// `Lambda` and `S` sampled on a grid together with the Darboux matrices
/// they generate.
#[derive(Clone, Debug)]
pub struct GbdtState {
    seed: Arc<GbdtSeed>,
    system: CanonicalSystem,
    grid: Grid,
    route: SRoute,
    lambda: SampledMatrixFunction,
    s: SampledMatrixFunction,
    a_eigs: Vec<Complex64>,
    a_inv: ComplexMatrix,
    a_star_inv: ComplexMatrix,
    sig: ComplexMatrix,
}

impl GbdtState {
    pub fn build(seed: Arc<GbdtSeed>, grid: Grid, route: SRoute) -> Result<Self> {
        if grid.start() != 0.0 {
            return Err(Error::GridMismatch("GBDT grids start at x = 0".into()));
        }
        let system = seed.initial_system();
        let sig = seed.signature().matrix();
        let lambda = SampledMatrixFunction::from_fn(grid, |x| seed.eigenfunction().at(x));
        let s = match route {
            SRoute::Quadrature => {
                let deriv = SampledMatrixFunction::from_fn(grid, |x| s_derivative(&seed, &system, &sig, x));
                quadrature_cumulative(&deriv).map(|v| hermitian_part(&(v + seed.s0())))
            }
            SRoute::Sylvester => {
                let a = seed.a();
                let a_star = a.adjoint();
                let mut values = Vec::with_capacity(grid.nodes());
                for l in lambda.values() {
                    let rhs = l * &sig * l.adjoint() * I;
                    values.push(hermitian_part(&solve_sylvester(a, &a_star, &rhs)?));
                }
                SampledMatrixFunction::new(grid, values)?
            }
        };
        let a_inv = inverse(seed.a())?;
        let a_star_inv = a_inv.adjoint();
        let a_eigs = eigenvalues(seed.a());
        Ok(Self { seed, system, grid, route, lambda, s, a_eigs, a_inv, a_star_inv, sig })
    }

    pub fn seed(&self) -> &Arc<GbdtSeed> {
        &self.seed
    }

    pub fn initial_system(&self) -> &CanonicalSystem {
        &self.system
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn route(&self) -> SRoute {
        self.route
    }

    pub fn lambda_samples(&self) -> &SampledMatrixFunction {
        &self.lambda
    }

    pub fn s_samples(&self) -> &SampledMatrixFunction {
        &self.s
    }

    pub fn lambda_at(&self, x: f64) -> ComplexMatrix {
        match self.grid.index_of(x) {
            Some(k) => self.lambda.value(k).clone(),
            None => self.seed.eigenfunction().at(x),
        }
    }

    /// `S'(x) = Lambda j H j Lambda*`.
    pub fn s_derivative(&self, x: f64) -> ComplexMatrix {
        s_derivative(&self.seed, &self.system, &self.sig, x)
    }

    /// `S(x)`; off the grid the quadrature route integrates from the
    /// nearest node with a Gauss-Legendre rule.
    pub fn s_at(&self, x: f64) -> ComplexMatrix {
        if let Some(k) = self.grid.index_of(x) {
            return self.s.value(k).clone();
        }
        match self.route {
            SRoute::Quadrature => {
                let pos = ((x - self.grid.start()) / self.grid.spacing()).round();
                let k = pos.clamp(0.0, (self.grid.nodes() - 1) as f64) as usize;
                let xk = self.grid.node(k);
                let inc = gauss_legendre(xk, x, |t| self.s_derivative(t));
                hermitian_part(&(self.s.value(k) + inc))
            }
            SRoute::Sylvester => {
                let l = self.seed.eigenfunction().at(x);
                let rhs = &l * &self.sig * l.adjoint() * I;
                let a = self.seed.a();
                hermitian_part(&solve_sylvester(a, &a.adjoint(), &rhs).expect("solvable at build time"))
            }
        }
    }

    pub fn s_inverse(&self, x: f64) -> Result<ComplexMatrix> {
        let s = self.s_at(x);
        let cond = hermitian_condition(&s);
        if !(cond <= S_CONDITION_LIMIT) {
            return Err(Error::IllConditioned { x, cond });
        }
        inverse(&s)
    }

    /// `(|| A S - S A* - i Lambda j Lambda* ||, || S ||)` at `x`.
    pub fn identity_residual(&self, x: f64) -> (f64, f64) {
        let s = self.s_at(x);
        (self.seed.identity_residual(&self.lambda_at(x), &s), fro(&s))
    }

    /// Largest normalized residual `r / (1 + ||S||)` over the grid nodes.
    pub fn max_identity_residual(&self) -> f64 {
        self.grid
            .points()
            .map(|x| {
                let (r, s) = self.identity_residual(x);
                r / (1.0 + s)
            })
            .fold(0.0, f64::max)
    }

    fn resolvent(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        if lambda == Complex64::default() {
            return Ok(self.a_inv.clone());
        }
        if self.a_eigs.iter().any(|e| (e - lambda).norm() <= COLLISION_TOL * (1.0 + e.norm())) {
            return Err(Error::SpectralCollision);
        }
        let n = self.seed.n();
        inverse(&(self.seed.a() - eye(n) * lambda)).map_err(|_| Error::SpectralCollision)
    }

    /// `w_A(x, lambda) = I - i j Lambda* S^{-1} (A - lambda I)^{-1} Lambda`.
    pub fn w_a(&self, x: f64, lambda: Complex64) -> Result<ComplexMatrix> {
        let l = self.lambda_at(x);
        let core = l.adjoint() * self.s_inverse(x)? * self.resolvent(lambda)? * &l;
        Ok(eye(self.sig.nrows()) - &self.sig * core * I)
    }

    /// `v(x, lambda) = I - i lambda j Lambda* (A*)^{-1} S^{-1} (A - lambda I)^{-1} Lambda`.
    pub fn darboux_v(&self, x: f64, lambda: Complex64) -> Result<ComplexMatrix> {
        let l = self.lambda_at(x);
        let core = l.adjoint() * &self.a_star_inv * self.s_inverse(x)? * self.resolvent(lambda)? * &l;
        Ok(eye(self.sig.nrows()) - &self.sig * core * (I * lambda))
    }

    fn beta(&self, x: f64) -> Result<ComplexMatrix> {
        self.system
            .beta()
            .map(|b| b.value(x))
            .ok_or_else(|| Error::Precondition("initial system has no beta factor".into()))
    }

    /// `beta~(x) = beta(x) w_A(x, 0)`.
    pub fn transformed_beta(&self, x: f64) -> Result<ComplexMatrix> {
        Ok(self.beta(x)? * self.w_a(x, Complex64::default())?)
    }

    /// `beta~'(x) = (beta' - beta q~0) w_A(x, 0)`.
    pub fn transformed_beta_derivative(&self, x: f64) -> Result<ComplexMatrix> {
        let b = self.system.beta().ok_or_else(|| Error::Precondition("initial system has no beta factor".into()))?;
        let w = self.w_a(x, Complex64::default())?;
        Ok((b.d1(x) - b.value(x) * self.q_tilde0(x)?) * w)
    }

    /// `H~(x) = w_A(x, 0)* H(x) w_A(x, 0)`.
    pub fn transformed_hamiltonian(&self, x: f64) -> Result<ComplexMatrix> {
        let w = self.w_a(x, Complex64::default())?;
        Ok(hermitian_part(&(w.adjoint() * self.system.hamiltonian(x) * &w)))
    }

    /// `q~0 = j Lambda* S^{-1} Lambda j H - j H j Lambda* S^{-1} Lambda`, so
    /// that `d/dx w_A(x, 0) = -q~0 w_A(x, 0)`.
    pub fn q_tilde0(&self, x: f64) -> Result<ComplexMatrix> {
        let l = self.lambda_at(x);
        let h = self.system.hamiltonian(x);
        let core = l.adjoint() * self.s_inverse(x)? * &l;
        let j = &self.sig;
        Ok(j * &core * j * &h - j * &h * j * &core)
    }

    /// `W~(x, lambda) = v(x, lambda) W(x, lambda) v(0, lambda)^{-1}` on `grid`,
    /// with `W` supplied by `initial`.
    pub fn transformed_fundamental_solution(
        &self,
        lambda: Complex64,
        grid: &Grid,
        initial: impl Fn(f64) -> Result<ComplexMatrix>,
    ) -> Result<SampledMatrixFunction> {
        let v0_inv = self.v0_inverse(lambda)?;
        SampledMatrixFunction::try_from_fn(*grid, |x| Ok(self.darboux_v(x, lambda)? * initial(x)? * &v0_inv))
    }

    /// `v(0, lambda)^{-1}`; an isolated point where `v(0, lambda)` is singular.
    pub fn v0_inverse(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        let v0 = self.darboux_v(0.0, lambda)?;
        inverse(&v0).map_err(|_| Error::IsolatedPoint { re: lambda.re, im: lambda.im })
    }

    /// The transformed system with Hamiltonian `H~`. Fails if `S` cannot be
    /// inverted at some grid node.
    pub fn transformed_system(self: &Arc<Self>) -> Result<CanonicalSystem> {
        for x in self.grid.points() {
            self.s_inverse(x)?;
        }
        let state = Arc::clone(self);
        let m = self.sig.nrows();
        let h = move |x: f64| {
            state
                .transformed_hamiltonian(x)
                .unwrap_or_else(|_| ComplexMatrix::from_element(m, m, Complex64::new(f64::NAN, f64::NAN)))
        };
        CanonicalSystem::from_hamiltonian(*self.system.signature(), self.system.kind(), Arc::new(h))
    }
}

fn s_derivative(seed: &GbdtSeed, system: &CanonicalSystem, sig: &ComplexMatrix, x: f64) -> ComplexMatrix {
    let l = seed.eigenfunction().at(x);
    let a = &l * sig;
    hermitian_part(&(&a * system.hamiltonian(x) * a.adjoint()))
}
