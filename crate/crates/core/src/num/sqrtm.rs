use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::dense::{require_square, ComplexMatrix};

/// Choice of scalar square root applied to every eigenvalue.
#[derive(Clone, Copy, Debug, Default)]
pub enum SqrtBranch {
    /// `Im sqrt(z) > 0`; for positive real `z`, `sqrt(z) > 0`.
    #[default]
    UpperHalfPlane,
    /// Principal branch, `Re sqrt(z) >= 0`.
    Principal,
    /// Caller-supplied root, called once per eigenvalue.
    Custom(fn(Complex64) -> Complex64),
}

impl SqrtBranch {
    pub fn root(&self, z: Complex64) -> Complex64 {
        match self {
            SqrtBranch::Principal => z.sqrt(),
            SqrtBranch::UpperHalfPlane => {
                let r = z.sqrt();
                if r.im < 0.0 || (r.im == 0.0 && r.re < 0.0) {
                    -r
                } else {
                    r
                }
            }
            SqrtBranch::Custom(f) => f(z),
        }
    }
}

/// Primary square root via complex Schur form and the triangular recurrence.
pub fn matrix_sqrt_primary(m: &ComplexMatrix, branch: SqrtBranch) -> Result<ComplexMatrix> {
    require_square(m, "matrix_sqrt_primary input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (u, t) = Schur::new(m.clone()).unpack();
    let mut r = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        if t[(k, k)].norm() <= 1e-14 * scale {
            return Err(Error::SqrtZeroEigenvalue);
        }
        r[(k, k)] = branch.root(t[(k, k)]);
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            let denom = r[(i, i)] + r[(j, j)];
            if denom.norm() <= 1e-14 * r[(i, i)].norm() {
                return Err(Error::SqrtNotPrimary);
            }
            r[(i, j)] = s / denom;
        }
    }
    Ok(&u * r * u.adjoint())
}
