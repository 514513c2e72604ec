use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::num::dense::{require_square, ComplexMatrix};

/// Relative eigenvalue gap below which the equation is declared singular.
pub const SYLVESTER_GAP: f64 = 1e-8;

/// Solves `A X - X B = C` by Schur forms of `A` and `B` (Bartels-Stewart).
///
/// The identity `A S - S A* = C` is the case `B = A*`.
pub fn solve_sylvester(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(a, "A")?;
    require_square(b, "B")?;
    let (n, m) = (a.nrows(), b.nrows());
    if c.shape() != (n, m) {
        return Err(Error::Dimension(format!("C must be {n}x{m}, got {}x{}", c.nrows(), c.ncols())));
    }
    if n == 0 || m == 0 {
        return Ok(c.clone());
    }
    let (ua, ta) = Schur::new(a.clone()).unpack();
    let (ub, tb) = Schur::new(b.clone()).unpack();
    let eig_scale = (0..n)
        .map(|k| ta[(k, k)].norm())
        .chain((0..m).map(|k| tb[(k, k)].norm()))
        .fold(1.0, f64::max);
    for i in 0..n {
        for k in 0..m {
            if (ta[(i, i)] - tb[(k, k)]).norm() < SYLVESTER_GAP * eig_scale {
                return Err(Error::SylvesterSingular);
            }
        }
    }
    let f = ua.adjoint() * c * &ub;
    let mut y = ComplexMatrix::zeros(n, m);
    for k in 0..m {
        let mut rhs: Vec<Complex64> = (0..n).map(|i| f[(i, k)]).collect();
        for l in 0..k {
            let coef = tb[(l, k)];
            for i in 0..n {
                rhs[i] += y[(i, l)] * coef;
            }
        }
        let shift = tb[(k, k)];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for jj in i + 1..n {
                s -= ta[(i, jj)] * y[(jj, k)];
            }
            y[(i, k)] = s / (ta[(i, i)] - shift);
        }
    }
    Ok(ua * y * ub.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::dense::{c64, fro, from_rows, re, scalar, zeros};

    #[test]
    fn scalar_closed_form() {
        let a = scalar(c64(0.0, 1.0));
        let s = solve_sylvester(&a, &a.adjoint(), &scalar(re(1.0))).unwrap();
        // (a - conj a) s = 1, s = 1/(2i)
        assert!((s[(0, 0)] - c64(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_scalar_case() {
        // A S - S A* = i C with C real gives S = C / (2 Im a)
        let a = scalar(c64(0.3, 1.0));
        let s = solve_sylvester(&a, &a.adjoint(), &scalar(c64(0.0, 1.0))).unwrap();
        assert!((s[(0, 0)] - re(0.5)).norm() < 1e-15);
    }

    #[test]
    fn zero_rhs() {
        let a = from_rows(&[&[c64(1.0, 1.0), re(2.0)], &[re(0.0), c64(-1.0, 2.0)]]);
        let s = solve_sylvester(&a, &a.adjoint(), &zeros(2, 2)).unwrap();
        assert!(fro(&s) < 1e-15);
    }

    #[test]
    fn residual_small() {
        let a = from_rows(&[&[c64(1.0, 1.0), re(2.0)], &[c64(0.0, 0.5), c64(-1.0, 2.0)]]);
        let c = from_rows(&[&[re(1.0), c64(0.2, 1.0)], &[c64(0.2, -1.0), re(3.0)]]);
        let s = solve_sylvester(&a, &a.adjoint(), &c).unwrap();
        let r = &a * &s - &s * a.adjoint() - &c;
        assert!(fro(&r) < 1e-13 * (1.0 + fro(&s)));
    }

    #[test]
    fn real_eigenvalue_collides() {
        let a = from_rows(&[&[re(1.0), c64(0.0, 1.0)], &[re(0.0), re(1.0)]]);
        assert_eq!(solve_sylvester(&a, &a.adjoint(), &zeros(2, 2)), Err(Error::SylvesterSingular));
    }
}
