//! Helpers on dense complex matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with explicit dimensions.
pub type ComplexMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn eye(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

pub fn scalar(z: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_element(1, 1, z)
}

pub fn from_rows(rows: &[&[Complex64]]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, c, |i, k| rows[i][k])
}

pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    let n = entries.len();
    ComplexMatrix::from_fn(n, n, |i, k| if i == k { entries[i] } else { Complex64::default() })
}

/// Frobenius norm.
pub fn fro(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * re(0.5)
}

pub fn is_square(m: &ComplexMatrix) -> bool {
    m.nrows() == m.ncols()
}

pub fn require_square(m: &ComplexMatrix, what: &str) -> Result<()> {
    if is_square(m) {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())))
    }
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    is_square(m) && fro(&(m - m.adjoint())) <= tol
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// PSD test: Hermitian within `tol` and smallest eigenvalue at least `-tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    is_hermitian(m, tol.max(1e-300)) && min_eigenvalue(m) >= -tol
}

/// Square root of a Hermitian positive semidefinite matrix (unique PSD root).
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m, "psd_sqrt input")?;
    let eig = SymmetricEigen::new(hermitian_part(m));
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
        return Err(Error::Precondition("matrix is not positive semidefinite".into()));
    }
    let q = &eig.eigenvectors;
    let d = ComplexMatrix::from_diagonal(&eig.eigenvalues.map(|l| re(l.max(0.0).sqrt())));
    Ok(q * d * q.adjoint())
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m, "inverse input")?;
    m.clone()
        .lu()
        .try_inverse()
        .filter(|inv| inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Singular(format!("{}x{} matrix not invertible", m.nrows(), m.ncols())))
}

/// Solves `a x = b`.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(a, "system matrix")?;
    a.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Singular("linear system is singular".into()))
}

pub fn det(m: &ComplexMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

/// Classical adjugate, so that `m * adj(m) = det(m) I` also for singular `m`.
pub fn adjugate(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    if n == 1 {
        return eye(1);
    }
    ComplexMatrix::from_fn(n, n, |i, k| {
        // cofactor of entry (k, i)
        let minor = m.clone().remove_row(k).remove_column(i);
        let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
        det(&minor) * sign
    })
}

pub fn block(m: &ComplexMatrix, r0: usize, c0: usize, nr: usize, nc: usize) -> ComplexMatrix {
    m.view((r0, c0), (nr, nc)).into_owned()
}

pub fn hstack(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn block_diag(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Eigenvalues of a general square matrix, read off a complex Schur form.
pub fn eigenvalues(m: &ComplexMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let (_, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    (0..n).map(|k| t[(k, k)]).collect()
}

/// Condition number of a Hermitian matrix from its eigenvalues.
pub fn hermitian_condition(m: &ComplexMatrix) -> f64 {
    let ev = hermitian_eigenvalues(m);
    let max = ev.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let min = ev.iter().fold(f64::INFINITY, |a, &l| a.min(l.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjugate_matches_inverse_times_det() {
        let m = from_rows(&[
            &[c64(1.0, 2.0), c64(0.5, 0.0), c64(0.0, -1.0)],
            &[c64(0.0, 1.0), c64(3.0, 0.0), c64(1.0, 1.0)],
            &[c64(2.0, 0.0), c64(-1.0, 0.5), c64(0.0, 0.0)],
        ]);
        let lhs = adjugate(&m);
        let rhs = inverse(&m).unwrap() * det(&m);
        assert!(fro(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn adjugate_of_singular_matrix() {
        let m = from_rows(&[&[c64(1.0, 0.0), c64(2.0, 0.0)], &[c64(2.0, 0.0), c64(4.0, 0.0)]]);
        let adj = adjugate(&m);
        assert!(fro(&(&m * &adj)) < 1e-14);
        assert!(fro(&adj) > 1.0);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let b = from_rows(&[&[c64(1.0, 0.0), c64(0.3, 0.2)], &[c64(0.0, -1.0), c64(2.0, 0.0)]]);
        let m = b.adjoint() * &b;
        let r = psd_sqrt(&m).unwrap();
        assert!(fro(&(&r * &r - &m)) < 1e-12);
        assert!(is_hermitian(&r, 1e-13));
        assert!(min_eigenvalue(&r) > 0.0);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        assert!((spectral_norm(&diag(&[re(-3.0), c64(0.0, 2.0)])) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_inverse_is_error() {
        let m = from_rows(&[&[re(1.0), re(1.0)], &[re(1.0), re(1.0)]]);
        assert!(inverse(&m).is_err());
    }
}
