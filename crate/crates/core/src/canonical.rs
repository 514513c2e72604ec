//! Signature matrices, Hamiltonians of canonical systems and the ODE oracle
//! for their fundamental solutions.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::dense::{block_diag, eye, fro, hstack, is_hermitian, min_eigenvalue, re, ComplexMatrix, I};
use crate::num::{integrate_linear, integrate_ode_substeps, Grid, MatrixFunction, SampledMatrixFunction};

/// `j = diag(I_m1, -I_m2)`.
pub fn j_matrix(m1: usize, m2: usize) -> ComplexMatrix {
    block_diag(&eye(m1), &(-eye(m2)))
}

/// Off-diagonal signature `J = [[0, I], [I, 0]]`.
pub fn big_j(p: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(2 * p, 2 * p);
    for k in 0..p {
        out[(k, p + k)] = re(1.0);
        out[(p + k, k)] = re(1.0);
    }
    out
}

/// Unitary `Theta = [[I, -I], [I, I]] / sqrt 2` with `J = Theta j Theta*`.
pub fn theta(p: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = ComplexMatrix::zeros(2 * p, 2 * p);
    for k in 0..p {
        out[(k, k)] = re(s);
        out[(k, p + k)] = re(-s);
        out[(p + k, k)] = re(s);
        out[(p + k, p + k)] = re(s);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignatureForm {
    /// `j = diag(I, -I)`
    Diagonal,
    /// `J = [[0, I], [I, 0]]`, only for `m1 = m2`
    OffDiagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    m1: usize,
    m2: usize,
    form: SignatureForm,
}

impl Signature {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::Precondition("signature blocks must be nonempty".into()));
        }
        Ok(Self { m1, m2, form: SignatureForm::Diagonal })
    }

    pub fn square(p: usize) -> Self {
        assert!(p > 0, "p must be positive");
        Self { m1: p, m2: p, form: SignatureForm::Diagonal }
    }

    pub fn off_diagonal(p: usize) -> Self {
        assert!(p > 0, "p must be positive");
        Self { m1: p, m2: p, form: SignatureForm::OffDiagonal }
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    pub fn form(&self) -> SignatureForm {
        self.form
    }

    /// Common block size when `m1 = m2`.
    pub fn p(&self) -> Option<usize> {
        (self.m1 == self.m2).then_some(self.m1)
    }

    /// The matrix entering `w' = i lambda (sig) H w`.
    pub fn matrix(&self) -> ComplexMatrix {
        match self.form {
            SignatureForm::Diagonal => j_matrix(self.m1, self.m2),
            SignatureForm::OffDiagonal => big_j(self.m1),
        }
    }

    pub fn theta(&self) -> Result<ComplexMatrix> {
        self.p().map(theta).ok_or_else(|| Error::Precondition("Theta needs m1 = m2".into()))
    }
}

/// Factor `beta(x)` of `H = d j + beta* beta`, with two derivatives.
pub trait BetaFactor: Send + Sync {
    fn value(&self, x: f64) -> ComplexMatrix;
    fn d1(&self, x: f64) -> ComplexMatrix;
    fn d2(&self, x: f64) -> ComplexMatrix;
}

/// `beta(x) = [e^{icx} I, e^{-icx} alpha]`.
#[derive(Clone, Debug)]
pub struct ExponentialBeta {
    pub c: f64,
    pub alpha: ComplexMatrix,
}

impl ExponentialBeta {
    fn with_factor(&self, x: f64, k1: Complex64, k2: Complex64) -> ComplexMatrix {
        let e = (I * self.c * x).exp();
        let m1 = self.alpha.nrows();
        hstack(&(eye(m1) * (k1 * e)), &(&self.alpha * (k2 / e)))
    }
}

impl BetaFactor for ExponentialBeta {
    fn value(&self, x: f64) -> ComplexMatrix {
        self.with_factor(x, re(1.0), re(1.0))
    }

    fn d1(&self, x: f64) -> ComplexMatrix {
        self.with_factor(x, I * self.c, -I * self.c)
    }

    fn d2(&self, x: f64) -> ComplexMatrix {
        self.value(x) * re(-self.c * self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Generalized,
    /// `m1 = m2` and `H >= 0`
    Canonical,
}

/// A system `w' = i lambda j H(x) w`.
#[derive(Clone)]
pub struct CanonicalSystem {
    signature: Signature,
    kind: SystemKind,
    d: f64,
    beta: Option<Arc<dyn BetaFactor>>,
    hamiltonian: Arc<dyn MatrixFunction>,
}

impl std::fmt::Debug for CanonicalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CanonicalSystem")
            .field("signature", &self.signature)
            .field("kind", &self.kind)
            .field("d", &self.d)
            .field("has_beta", &self.beta.is_some())
            .finish()
    }
}

impl CanonicalSystem {
    pub fn from_hamiltonian(signature: Signature, kind: SystemKind, h: Arc<dyn MatrixFunction>) -> Result<Self> {
        if kind == SystemKind::Canonical && signature.p().is_none() {
            return Err(Error::Precondition("canonical systems need m1 = m2".into()));
        }
        Ok(Self { signature, kind, d: 0.0, beta: None, hamiltonian: h })
    }

    /// `H(x) = d j + beta(x)* beta(x)`.
    pub fn from_beta(signature: Signature, kind: SystemKind, d: f64, beta: Arc<dyn BetaFactor>) -> Result<Self> {
        if kind == SystemKind::Canonical && (signature.p().is_none() || d != 0.0) {
            return Err(Error::Precondition("canonical systems need m1 = m2 and d = 0".into()));
        }
        let sig_matrix = signature.matrix();
        let b = beta.clone();
        let h = move |x: f64| {
            let bx = b.value(x);
            bx.adjoint() * &bx + &sig_matrix * re(d)
        };
        Ok(Self { signature, kind, d, beta: Some(beta), hamiltonian: Arc::new(h) })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn beta(&self) -> Option<&Arc<dyn BetaFactor>> {
        self.beta.as_ref()
    }

    pub fn hamiltonian(&self, x: f64) -> ComplexMatrix {
        self.hamiltonian.eval(x)
    }

    pub fn hamiltonian_fn(&self) -> Arc<dyn MatrixFunction> {
        self.hamiltonian.clone()
    }

    /// Generator `i lambda j H(x)` of the system.
    pub fn generator(&self, lambda: Complex64, x: f64) -> ComplexMatrix {
        self.signature.matrix() * self.hamiltonian(x) * (I * lambda)
    }

    /// Checks the structural invariants at every grid node; returns the
    /// first violation.
    pub fn check_invariants(&self, grid: &Grid) -> Result<()> {
        let sig = self.signature.matrix();
        for x in grid.points() {
            let h = self.hamiltonian(x);
            let scale = fro(&h).max(1.0);
            if !is_hermitian(&h, 1e-12 * scale) {
                return Err(Error::Precondition(format!("H({x}) is not Hermitian")));
            }
            if self.kind == SystemKind::Canonical && min_eigenvalue(&h) < -1e-10 * scale {
                return Err(Error::Precondition(format!("H({x}) is not positive semidefinite")));
            }
            if let (Some(b), true) = (&self.beta, self.d == 0.0) {
                let bx = b.value(x);
                if fro(&(&bx * &sig * bx.adjoint())) > 1e-10 * fro(&bx).powi(2).max(1.0) {
                    return Err(Error::Precondition(format!("beta j beta* != 0 at x = {x}")));
                }
            }
        }
        Ok(())
    }
}

/// System with `beta(x) = [e^{icx} I, e^{-icx} alpha]` and
/// `H = d j + beta* beta`.
pub fn make_beta_exponential(c: f64, d: f64, alpha: &ComplexMatrix) -> Result<CanonicalSystem> {
    let (m1, m2) = alpha.shape();
    if m1 == 0 || m2 < m1 {
        return Err(Error::Precondition(format!("alpha must be m1 x m2 with m2 >= m1, got {m1}x{m2}")));
    }
    if fro(&(alpha * alpha.adjoint() - eye(m1))) > 1e-12 {
        return Err(Error::Precondition("alpha alpha* != I (alpha is not a co-isometry)".into()));
    }
    let signature = Signature::new(m1, m2)?;
    let kind = if m1 == m2 && d == 0.0 { SystemKind::Canonical } else { SystemKind::Generalized };
    CanonicalSystem::from_beta(signature, kind, d, Arc::new(ExponentialBeta { c, alpha: alpha.clone() }))
}

/// Fundamental solution `W(x, lambda)`, `W(0) = I`, by RK4 on the grid.
pub fn fundamental_solution_oracle(system: &CanonicalSystem, lambda: Complex64, grid: &Grid) -> SampledMatrixFunction {
    let m = system.signature().m();
    integrate_linear(|x| system.generator(lambda, x), &eye(m), grid)
}

/// As [`fundamental_solution_oracle`] with `substeps` RK4 steps per spacing.
pub fn fundamental_solution_oracle_substeps(
    system: &CanonicalSystem,
    lambda: Complex64,
    grid: &Grid,
    substeps: usize,
) -> SampledMatrixFunction {
    let m = system.signature().m();
    integrate_ode_substeps(|x, y| system.generator(lambda, x) * y, &eye(m), grid, substeps)
}

/// Outcome of [`check_j_monotonicity`].
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    /// Smallest eigenvalue over all checked differences.
    pub worst: f64,
    pub passed: bool,
}

pub const MONOTONICITY_TOL: f64 = 1e-8;

fn monotonicity(w: &SampledMatrixFunction, sig: &ComplexMatrix, sign: f64) -> MonotonicityReport {
    let forms: Vec<ComplexMatrix> = w.values().iter().map(|wk| wk.adjoint() * sig * wk).collect();
    let mut worst = min_eigenvalue(&((sig - &forms[0]) * re(sign)));
    for pair in forms.windows(2) {
        worst = worst.min(min_eigenvalue(&((&pair[0] - &pair[1]) * re(sign))));
    }
    MonotonicityReport { worst, passed: worst >= -MONOTONICITY_TOL }
}

/// For `lambda` in the upper half-plane checks
/// `W(r2)* j W(r2) <= W(r1)* j W(r1) <= j` for consecutive nodes `r1 <= r2`.
pub fn check_j_monotonicity(w: &SampledMatrixFunction, lambda: Complex64, signature: &Signature) -> Result<MonotonicityReport> {
    if lambda.im <= 0.0 {
        return Err(Error::Precondition("lambda must lie in the open upper half-plane".into()));
    }
    Ok(monotonicity(w, &signature.matrix(), 1.0))
}

/// Reversed chain `j <= W(r1)* j W(r1) <= W(r2)* j W(r2)` for `lambda` in the
/// lower half-plane.
pub fn check_j_monotonicity_lower(w: &SampledMatrixFunction, lambda: Complex64, signature: &Signature) -> Result<MonotonicityReport> {
    if lambda.im >= 0.0 {
        return Err(Error::Precondition("lambda must lie in the open lower half-plane".into()));
    }
    Ok(monotonicity(w, &signature.matrix(), -1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::dense::{c64, from_rows};

    #[test]
    fn theta_identities() {
        for p in 1..=3 {
            let t = theta(p);
            assert!(fro(&(&t * t.adjoint() - eye(2 * p))) < 1e-15);
            assert!(fro(&(&t * j_matrix(p, p) * t.adjoint() - big_j(p))) < 1e-15);
        }
    }

    #[test]
    fn beta_family_constant_hamiltonian_at_c_zero() {
        let sys = make_beta_exponential(0.0, 0.0, &eye(1)).unwrap();
        let k = from_rows(&[&[re(1.0), re(1.0)], &[re(1.0), re(1.0)]]);
        for x in [0.0, 0.3, 1.7] {
            assert!(fro(&(sys.hamiltonian(x) - &k)) < 1e-15);
        }
        assert_eq!(sys.kind(), SystemKind::Canonical);
    }

    #[test]
    fn beta_family_normalization() {
        let sys = make_beta_exponential(0.5, 0.0, &eye(1)).unwrap();
        let b = sys.beta().unwrap();
        let j = j_matrix(1, 1);
        for x in [0.0, 0.4, 1.3] {
            let v = b.d1(x) * &j * b.value(x).adjoint();
            assert!((v[(0, 0)] - I).norm() < 1e-14);
        }
    }

    #[test]
    fn non_coisometric_alpha_rejected() {
        assert!(make_beta_exponential(1.0, 0.0, &from_rows(&[&[re(2.0)]])).is_err());
        assert!(make_beta_exponential(1.0, 0.0, &from_rows(&[&[re(1.0)], &[re(0.0)]])).is_err());
    }

    #[test]
    fn rectangular_alpha_gives_generalized_system() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = from_rows(&[&[re(s), c64(0.0, s)]]);
        let sys = make_beta_exponential(1.0, 0.3, &alpha).unwrap();
        assert_eq!(sys.kind(), SystemKind::Generalized);
        assert_eq!(sys.signature().m(), 3);
        sys.check_invariants(&Grid::new(0.0, 1.0, 11).unwrap()).unwrap();
    }

    #[test]
    fn zero_lambda_gives_identity() {
        let sys = make_beta_exponential(1.0, 0.0, &eye(1)).unwrap();
        let g = Grid::new(0.0, 1.0, 21).unwrap();
        let w = fundamental_solution_oracle(&sys, c64(0.0, 0.0), &g);
        assert!(w.values().iter().all(|m| fro(&(m - eye(2))) == 0.0));
    }

    #[test]
    fn constant_identity_passes_monotonicity() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let w = SampledMatrixFunction::from_fn(g, |_| eye(2));
        let r = check_j_monotonicity(&w, I, &Signature::square(1)).unwrap();
        assert_eq!(r.worst, 0.0);
        assert!(check_j_monotonicity(&w, c64(1.0, -1.0), &Signature::square(1)).is_err());
    }
}
