use num_complex::Complex64;

use crate::num::dense::ComplexMatrix;
use crate::num::grid::SampledMatrixFunction;

/// Cumulative integral `x -> int_start^x f` on the nodes of `f`'s grid.
///
/// Composite Simpson over node pairs; the first panel uses the three-point
/// rule for `int_0^h`, so every node gets a fourth-order value. Two-node
/// grids fall back to the trapezoid rule.
pub fn quadrature_cumulative(f: &SampledMatrixFunction) -> SampledMatrixFunction {
    let v = f.values();
    let h = f.grid().spacing();
    let out = cumulative_values(v, h);
    SampledMatrixFunction::new(*f.grid(), out).expect("same grid")
}

pub(crate) fn cumulative_values(v: &[ComplexMatrix], h: f64) -> Vec<ComplexMatrix> {
    let n = v.len();
    let w = |c: f64| Complex64::new(c * h, 0.0);
    let mut out = Vec::with_capacity(n);
    out.push(ComplexMatrix::zeros(v[0].nrows(), v[0].ncols()));
    if n == 1 {
        return out;
    }
    if n == 2 {
        out.push((&v[0] + &v[1]) * w(0.5));
        return out;
    }
    out.push(&v[0] * w(5.0 / 12.0) + &v[1] * w(8.0 / 12.0) - &v[2] * w(1.0 / 12.0));
    for k in 2..n {
        let next = &out[k - 2] + (&v[k - 2] + &v[k - 1] * Complex64::new(4.0, 0.0) + &v[k]) * w(1.0 / 3.0);
        out.push(next);
    }
    out
}

/// Scalar version of [`quadrature_cumulative`].
pub fn cumulative_scalar(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n == 2 {
        out[1] = 0.5 * h * (v[0] + v[1]);
    } else if n > 2 {
        out[1] = h / 12.0 * (5.0 * v[0] + 8.0 * v[1] - v[2]);
        for k in 2..n {
            out[k] = out[k - 2] + h / 3.0 * (v[k - 2] + 4.0 * v[k - 1] + v[k]);
        }
    }
    out
}

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> ComplexMatrix) -> ComplexMatrix {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc: Option<ComplexMatrix> = None;
    for (x, w) in X.iter().zip(W.iter()) {
        let term = f(mid + half * x) * Complex64::new(w * half, 0.0);
        acc = Some(match acc {
            None => term,
            Some(s) => s + term,
        });
    }
    acc.expect("five nodes")
}
