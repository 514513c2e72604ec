use std::sync::Arc;

use num_complex::Complex64;

use crate::canonical::{make_beta_exponential, CanonicalSystem, Signature};
use crate::error::{Error, Result};
use crate::num::dense::{eye, fro, hermitian_part, inverse, is_hermitian, min_eigenvalue, re, ComplexMatrix, I};
use crate::num::{matrix_exp, matrix_sqrt_primary, solve_sylvester, SqrtBranch};

/// Closed-form generalized eigenfunction `Lambda(x) = [Phi1(x), Phi2(x)]`
/// of the exponential family.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    a: ComplexMatrix,
    q: ComplexMatrix,
    c: f64,
    d: f64,
    alpha: ComplexMatrix,
    f1: ComplexMatrix,
    f2: ComplexMatrix,
    g1: ComplexMatrix,
    g2: ComplexMatrix,
}

impl Eigenfunction {
    fn new(
        a: &ComplexMatrix,
        q: &ComplexMatrix,
        c: f64,
        d: f64,
        alpha: &ComplexMatrix,
        f1: &ComplexMatrix,
        f2: &ComplexMatrix,
    ) -> Result<Self> {
        let n = a.nrows();
        let a_inv = inverse(a)?;
        let shift = eye(n) * re(c);
        let g1 = (a + &shift + q) * &a_inv * f1;
        let g2 = (a + &shift - q) * &a_inv * f2;
        Ok(Self {
            a: a.clone(),
            q: q.clone(),
            c,
            d,
            alpha: alpha.clone(),
            f1: f1.clone(),
            f2: f2.clone(),
            g1,
            g2,
        })
    }

    /// `n x m` value at `x`.
    pub fn at(&self, x: f64) -> ComplexMatrix {
        let ep = matrix_exp(&(&self.q * (I * x))).expect("square");
        let em = matrix_exp(&(&self.q * (-I * x))).expect("square");
        let da = if self.d == 0.0 {
            eye(self.a.nrows())
        } else {
            matrix_exp(&(&self.a * (-I * x * self.d))).expect("square")
        };
        let phase = (I * self.c * x).exp();
        let phi1 = &da * (&ep * &self.f1 + &em * &self.f2) * phase;
        let phi2 = &da * (&ep * &self.g1 + &em * &self.g2) * &self.alpha / phase;
        crate::num::dense::hstack(&phi1, &phi2)
    }
}

/// Inputs for a GBDT seed of the exponential family.
#[derive(Clone, Debug)]
pub struct SeedParts {
    pub a: ComplexMatrix,
    pub c: f64,
    pub d: f64,
    pub alpha: ComplexMatrix,
    pub f1: ComplexMatrix,
    pub f2: ComplexMatrix,
    /// Square root with `AQ = QA`, `Q^2 = c(2A + cI)`; computed when absent.
    pub q: Option<ComplexMatrix>,
    pub branch: SqrtBranch,
    /// Computed from the Lyapunov identity by the Sylvester solver when absent.
    pub s0: Option<ComplexMatrix>,
}

/// Triple `(A, S(0), Lambda(0))` with `A S0 - S0 A* = i Lambda0 j Lambda0*`,
/// plus the data of the exponential family that generates `Lambda(x)`.
#[derive(Clone, Debug)]
pub struct GbdtSeed {
    signature: Signature,
    a: ComplexMatrix,
    s0: ComplexMatrix,
    lambda0: ComplexMatrix,
    c: f64,
    d: f64,
    alpha: ComplexMatrix,
    q: ComplexMatrix,
    f1: ComplexMatrix,
    f2: ComplexMatrix,
    eigenfunction: Eigenfunction,
}

impl GbdtSeed {
    pub fn new(parts: SeedParts) -> Result<Self> {
        let SeedParts { a, c, d, alpha, f1, f2, q, branch, s0 } = parts;
        crate::num::dense::require_square(&a, "A")?;
        let n = a.nrows();
        let (m1, m2) = alpha.shape();
        let signature = Signature::new(m1, m2)?;
        if fro(&(&alpha * alpha.adjoint() - eye(m1))) > 1e-12 {
            return Err(Error::Precondition("alpha alpha* != I".into()));
        }
        if f1.shape() != (n, m1) || f2.shape() != (n, m1) {
            return Err(Error::Dimension(format!("f1, f2 must be {n}x{m1}")));
        }
        let q = match q {
            Some(q) => q,
            None if c == 0.0 => ComplexMatrix::zeros(n, n),
            None => matrix_sqrt_primary(&((&a * re(2.0) + eye(n) * re(c)) * re(c)), branch)?,
        };
        if q.shape() != (n, n) {
            return Err(Error::Dimension(format!("Q must be {n}x{n}")));
        }
        let scale = 1.0 + fro(&a) + fro(&q).powi(2);
        if fro(&(&a * &q - &q * &a)) > 1e-9 * scale {
            return Err(Error::Precondition("Q does not commute with A".into()));
        }
        if fro(&(&q * &q - (&a * re(2.0) + eye(n) * re(c)) * re(c))) > 1e-9 * scale {
            return Err(Error::Precondition("Q^2 != c(2A + cI)".into()));
        }
        let eigenfunction = Eigenfunction::new(&a, &q, c, d, &alpha, &f1, &f2)
            .map_err(|_| Error::Precondition("det A = 0".into()))?;
        let lambda0 = eigenfunction.at(0.0);
        let rhs = &lambda0 * signature.matrix() * lambda0.adjoint() * I;
        let s0 = match s0 {
            Some(s) => s,
            None => hermitian_part(&solve_sylvester(&a, &a.adjoint(), &rhs)?),
        };
        let seed = Self { signature, a, s0, lambda0, c, d, alpha, q, f1, f2, eigenfunction };
        seed.validate()?;
        Ok(seed)
    }

    /// Checks `S0 = S0*` and the Lyapunov identity at `x = 0`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.s0.shape() != (n, n) {
            return Err(Error::Dimension(format!("S(0) must be {n}x{n}")));
        }
        if !is_hermitian(&self.s0, 1e-12 * fro(&self.s0).max(1.0)) {
            return Err(Error::Precondition("S(0) is not Hermitian".into()));
        }
        let res = self.identity_residual(&self.lambda0, &self.s0);
        if res > 1e-10 * (1.0 + fro(&self.s0)) {
            return Err(Error::Precondition(format!("A S(0) - S(0) A* != i Lambda(0) j Lambda(0)* (residual {res:.3e})")));
        }
        Ok(())
    }

    /// `|| A S - S A* - i L j L* ||`.
    pub fn identity_residual(&self, lambda: &ComplexMatrix, s: &ComplexMatrix) -> f64 {
        let lhs = &self.a * s - s * self.a.adjoint();
        let rhs = lambda * self.signature.matrix() * lambda.adjoint() * I;
        fro(&(lhs - rhs))
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn s0(&self) -> &ComplexMatrix {
        &self.s0
    }

    pub fn lambda0(&self) -> &ComplexMatrix {
        &self.lambda0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn alpha(&self) -> &ComplexMatrix {
        &self.alpha
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn f1(&self) -> &ComplexMatrix {
        &self.f1
    }

    pub fn f2(&self) -> &ComplexMatrix {
        &self.f2
    }

    pub fn eigenfunction(&self) -> &Eigenfunction {
        &self.eigenfunction
    }

    pub fn is_s0_positive(&self) -> bool {
        min_eigenvalue(&self.s0) > 0.0
    }

    /// The initial system `H = d j + beta* beta`.
    pub fn initial_system(&self) -> CanonicalSystem {
        make_beta_exponential(self.c, self.d, &self.alpha).expect("alpha validated")
    }

    pub fn into_arc(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// Scalar seed: `n = p = 1`, `A = a` off the real axis, `c != 0`, `d = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarSeedParams {
    pub a: Complex64,
    pub c: f64,
    pub alpha: Complex64,
    pub f1: Complex64,
    pub f2: Complex64,
}

pub fn scalar_seed(p: &ScalarSeedParams) -> Result<GbdtSeed> {
    if p.a.im == 0.0 {
        return Err(Error::Precondition("a must not be real".into()));
    }
    if p.c == 0.0 {
        return Err(Error::Precondition("c must be nonzero".into()));
    }
    if (p.alpha.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition("|alpha| must be 1".into()));
    }
    let m = |z: Complex64| ComplexMatrix::from_element(1, 1, z);
    let seed = GbdtSeed::new(SeedParts {
        a: m(p.a),
        c: p.c,
        d: 0.0,
        alpha: m(p.alpha),
        f1: m(p.f1),
        f2: m(p.f2),
        q: None,
        branch: SqrtBranch::UpperHalfPlane,
        s0: None,
    })?;
    if seed.s0[(0, 0)].re <= 0.0 {
        return Err(Error::Precondition(format!(
            "S(0) not positive (S(0) = {:.6}): the positivity inequality on f1, f2 is violated",
            seed.s0[(0, 0)].re
        )));
    }
    Ok(seed)
}

/// Jordan-block seed: `n = 2`, `p = 1`, `c = d = 0`,
/// `A = [[xi, a], [0, xi]]`, `Q = [[0, q], [0, 0]]`, `f1 = [f; 0]`, `f2 = [0; g]`.
///
/// `a` and `S(0)` are fixed by the Lyapunov identity given `S22(0)`; `S11(0)`
/// is `|S12|^2 / S22 + margin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JordanSeedParams {
    pub xi: f64,
    pub q: Complex64,
    pub f: Complex64,
    pub g: Complex64,
    pub alpha: Complex64,
    pub s22: f64,
    pub s11_margin: f64,
}

impl Default for JordanSeedParams {
    fn default() -> Self {
        Self { xi: 1.0, q: re(1.0), f: re(1.0), g: re(1.0), alpha: re(1.0), s22: 1.0, s11_margin: 1.0 }
    }
}

pub fn jordan_seed(p: &JordanSeedParams) -> Result<GbdtSeed> {
    if p.xi == 0.0 || !p.xi.is_finite() {
        return Err(Error::Precondition("xi must be real and nonzero".into()));
    }
    if p.f.norm() == 0.0 || p.g.norm() == 0.0 {
        return Err(Error::Precondition("f and g must be nonzero".into()));
    }
    if p.s22 <= 0.0 || p.s11_margin <= 0.0 {
        return Err(Error::Precondition("S22(0) and the S11(0) margin must be positive".into()));
    }
    let z = re(0.0);
    let build_parts = |a12: Complex64, s0: Option<ComplexMatrix>| SeedParts {
        a: crate::num::dense::from_rows(&[&[re(p.xi), a12], &[z, re(p.xi)]]),
        c: 0.0,
        d: 0.0,
        alpha: ComplexMatrix::from_element(1, 1, p.alpha),
        f1: crate::num::dense::from_rows(&[&[p.f], &[z]]),
        f2: crate::num::dense::from_rows(&[&[z], &[p.g]]),
        q: Some(crate::num::dense::from_rows(&[&[z, p.q], &[z, z]])),
        branch: SqrtBranch::default(),
        s0,
    };
    // Lambda(0) does not depend on a; evaluate it with a placeholder.
    let probe_parts = build_parts(re(1.0), None);
    let probe = Eigenfunction::new(
        &probe_parts.a,
        probe_parts.q.as_ref().expect("Q given"),
        0.0,
        0.0,
        &probe_parts.alpha,
        &probe_parts.f1,
        &probe_parts.f2,
    )?;
    let l0 = probe.at(0.0);
    let m = &l0 * crate::canonical::j_matrix(1, 1) * l0.adjoint() * I;
    let scale = fro(&m).max(1.0);
    if m[(1, 1)].norm() > 1e-12 * scale {
        return Err(Error::Precondition("Lyapunov identity unsatisfiable: |alpha| != 1".into()));
    }
    if m[(0, 1)].norm() <= 1e-12 * scale {
        return Err(Error::Precondition("Lyapunov identity unsatisfiable with a != 0 (q g = 0)".into()));
    }
    let a12 = m[(0, 1)] / p.s22;
    let s12 = (m[(0, 0)] / (a12 * 2.0)).conj();
    let s11 = s12.norm_sqr() / p.s22 + p.s11_margin;
    let s0 = crate::num::dense::from_rows(&[&[re(s11), s12], &[s12.conj(), re(p.s22)]]);
    GbdtSeed::new(build_parts(a12, Some(s0)))
}
