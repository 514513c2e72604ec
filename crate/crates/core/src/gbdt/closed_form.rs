//! Scalar closed forms for the two worked seeds. They are evaluated from
//! elementary formulas only and serve as independent oracles for the
//! generic matrix engine.

use num_complex::Complex64;

use super::seed::{JordanSeedParams, ScalarSeedParams};
use crate::canonical::j_matrix;
use crate::error::{Error, Result};
use crate::num::dense::{from_rows, inverse, re, ComplexMatrix, I};

/// Square root of `z` with nonnegative imaginary part.
fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Closed forms for the scalar seed (`n = p = 1`, `d = 0`).
#[derive(Clone, Copy, Debug)]
pub struct ScalarClosedForm {
    p: ScalarSeedParams,
    q: Complex64,
}

impl ScalarClosedForm {
    pub fn new(p: ScalarSeedParams) -> Self {
        let q = sqrt_upper(p.a * 2.0 * p.c + p.c * p.c);
        Self { p, q }
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// `(f1 e^{ixQ} + f2 e^{-ixQ}, (a+c+Q) f1 e^{ixQ} + (a+c-Q) f2 e^{-ixQ})`.
    fn parts(&self, x: f64) -> (Complex64, Complex64) {
        let p = &self.p;
        let ep = (I * x * self.q).exp();
        let em = (-I * x * self.q).exp();
        let u = p.f1 * ep + p.f2 * em;
        let g = (p.a + p.c + self.q) * p.f1 * ep + (p.a + p.c - self.q) * p.f2 * em;
        (u, g)
    }

    /// Row `a Lambda(x)`.
    pub fn a_lambda(&self, x: f64) -> ComplexMatrix {
        let (u, g) = self.parts(x);
        let e = (I * self.p.c * x).exp();
        from_rows(&[&[self.p.a * u * e, self.p.alpha * g / e]])
    }

    pub fn s(&self, x: f64) -> f64 {
        let a = self.p.a;
        let (u, g) = self.parts(x);
        let val = I / (a - a.conj()) * (u.norm_sqr() - g.norm_sqr() / a.norm_sqr());
        val.re
    }

    /// Left side of the positivity inequality for `S(0)`.
    pub fn positivity_lhs(&self) -> f64 {
        let p = &self.p;
        let (_, g) = self.parts(0.0);
        let val = I * (p.a.conj() - p.a) * ((p.a * (p.f1 + p.f2)).norm_sqr() - g.norm_sqr());
        val.re
    }

    /// Transformed factor `beta~(x)` as a 1 x 2 row.
    pub fn beta_tilde(&self, x: f64) -> ComplexMatrix {
        let p = &self.p;
        let a = p.a;
        let qc = self.q.conj();
        let em = (-I * x * qc).exp();
        let ep = (I * x * qc).exp();
        let bracket = a.conj() * (p.f1.conj() * em + p.f2.conj() * ep)
            - p.alpha.conj()
                * (((a + p.c + self.q) * p.f1).conj() * em + ((a + p.c - self.q) * p.f2).conj() * ep);
        let coef = I / (a * a.norm_sqr() * self.s(x)) * bracket;
        let e = (I * p.c * x).exp();
        let beta = from_rows(&[&[e, p.alpha / e]]);
        beta - self.a_lambda(x) * coef
    }

    /// Darboux matrix `v(x, lambda)`.
    pub fn darboux_v(&self, x: f64, lambda: Complex64) -> ComplexMatrix {
        let a = self.p.a;
        let al = self.a_lambda(x);
        let coef = I * lambda / (a.conj() * a.norm_sqr() * (a - lambda) * self.s(x));
        ComplexMatrix::identity(2, 2) - j_matrix(1, 1) * al.adjoint() * &al * coef
    }

    /// `z1(lambda) = sqrt(c(2 lambda + c))` with `Im z1 >= 0`.
    pub fn z1(&self, lambda: Complex64) -> Complex64 {
        sqrt_upper((lambda * 2.0 + self.p.c) * self.p.c)
    }

    /// `h(lambda) = a Lambda(0) E1(lambda)`.
    pub fn h(&self, lambda: Complex64) -> Complex64 {
        let p = &self.p;
        let g0 = (p.a + p.c + self.q) * p.f1 + (p.a + p.c - self.q) * p.f2;
        p.alpha * g0 * (lambda + p.c - self.z1(lambda)) - p.alpha * p.a * (p.f1 + p.f2) * lambda
    }

    /// Weyl function as the ratio `psi1 / psi2`.
    pub fn weyl(&self, lambda: Complex64) -> Complex64 {
        let p = &self.p;
        let a = p.a;
        let s0 = self.s(0.0);
        let k = a.conj() * a.norm_sqr() * s0;
        let h = self.h(lambda);
        let gbar = (a.conj() + p.c + self.q.conj()) * p.f1.conj() + (a.conj() + p.c - self.q.conj()) * p.f2.conj();
        let psi1 = k * (a - lambda) * (lambda + p.c - self.z1(lambda)) + I * p.alpha.conj() * gbar * lambda * h;
        let psi2 = p.alpha * k * (lambda - a) * lambda - I * a.conj() * (p.f1.conj() + p.f2.conj()) * lambda * h;
        psi1 / psi2
    }
}

/// Closed forms for the Jordan-block seed (`n = 2`, `p = 1`, `c = d = 0`).
///
/// The constants follow from the eigenfunction
/// `Lambda(x) = [[f - iqgx, (f - qg(ix + 1/xi)) alpha], [g, g alpha]]`.
#[derive(Clone, Debug)]
pub struct JordanClosedForm {
    p: JordanSeedParams,
    a12: Complex64,
    s0: ComplexMatrix,
}

impl JordanClosedForm {
    /// `a12` is the off-diagonal entry of `A` and `s0` the initial `S`.
    pub fn new(p: JordanSeedParams, a12: Complex64, s0: ComplexMatrix) -> Self {
        Self { p, a12, s0 }
    }

    pub fn a(&self) -> ComplexMatrix {
        from_rows(&[&[re(self.p.xi), self.a12], &[re(0.0), re(self.p.xi)]])
    }

    pub fn lambda(&self, x: f64) -> ComplexMatrix {
        let JordanSeedParams { xi, q, f, g, alpha, .. } = self.p;
        from_rows(&[
            &[f - I * q * g * x, (f - q * g * (I * x + 1.0 / xi)) * alpha],
            &[g, g * alpha],
        ])
    }

    /// `(C1, C2, C3)` with `Lambda(x) j beta* = [C1 x + C2; C3]`.
    pub fn constants(&self) -> (Complex64, Complex64, Complex64) {
        let JordanSeedParams { xi, q, f, g, alpha, .. } = self.p;
        let m = alpha.norm_sqr();
        (I * (m - 1.0) * q * g, f * (1.0 - m) + m * q * g / xi, g * (1.0 - m))
    }

    pub fn s(&self, x: f64) -> ComplexMatrix {
        let (c1, c2, c3) = self.constants();
        let s11 = c1.norm_sqr() * x.powi(3) / 3.0 + (c1 * c2.conj()).re * x * x + c2.norm_sqr() * x;
        let s12 = c1 * c3.conj() * (x * x / 2.0) + c2 * c3.conj() * x;
        let inc = from_rows(&[&[re(s11), s12], &[s12.conj(), re(c3.norm_sqr() * x)]]);
        &self.s0 + inc
    }

    pub fn beta_tilde(&self, x: f64) -> Result<ComplexMatrix> {
        let (c1, c2, c3) = self.constants();
        let row = from_rows(&[&[c1.conj() * x + c2.conj(), c3.conj()]]);
        let s_inv = inverse(&self.s(x)).map_err(|_| Error::Singular("S(x)".into()))?;
        let a_inv = inverse(&self.a())?;
        let beta = from_rows(&[&[re(1.0), self.p.alpha]]);
        Ok(beta - row * s_inv * a_inv * self.lambda(x) * I)
    }

    /// `exp(itA) = e^{it xi} (I + it [[0, a], [0, 0]])`.
    pub fn exp_ita(&self, t: f64) -> ComplexMatrix {
        let e = (I * t * self.p.xi).exp();
        from_rows(&[&[e, e * I * t * self.a12], &[re(0.0), e]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::dense::c64;

    #[test]
    fn q_squares_back() {
        let cf = ScalarClosedForm::new(ScalarSeedParams { a: c64(1.0, 1.0), c: 1.0, alpha: re(1.0), f1: re(0.3), f2: re(1.0) });
        let q = cf.q();
        assert!(q.im > 0.0);
        assert!((q * q - (c64(2.0, 2.0) + 1.0)).norm() < 1e-14);
    }

    #[test]
    fn scalar_positivity_sign_matches_s0() {
        for (f1, f2) in [(0.3, 1.0), (1.0, 0.3)] {
            let cf = ScalarClosedForm::new(ScalarSeedParams { a: c64(1.0, 1.0), c: 1.0, alpha: re(1.0), f1: re(f1), f2: re(f2) });
            assert_eq!(cf.positivity_lhs() > 0.0, cf.s(0.0) > 0.0);
        }
    }

    #[test]
    fn jordan_constants_for_unit_alpha() {
        let cf = JordanClosedForm::new(JordanSeedParams::default(), I, ComplexMatrix::identity(2, 2));
        let (c1, c2, c3) = cf.constants();
        assert_eq!((c1, c2, c3), (re(0.0), re(1.0), re(0.0)));
        let s = cf.s(2.0);
        assert!((s[(0, 0)] - 3.0).norm() < 1e-15);
    }
}
