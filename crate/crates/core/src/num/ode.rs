use num_complex::Complex64;

use crate::num::dense::ComplexMatrix;
use crate::num::grid::{Grid, SampledMatrixFunction};

/// Classical RK4 for `Y' = rhs(x, Y)` with one step per grid spacing.
pub fn integrate_ode<F>(rhs: F, initial: &ComplexMatrix, grid: &Grid) -> SampledMatrixFunction
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    integrate_ode_substeps(rhs, initial, grid, 1)
}

/// RK4 with `substeps` equal steps between consecutive grid nodes.
pub fn integrate_ode_substeps<F>(rhs: F, initial: &ComplexMatrix, grid: &Grid, substeps: usize) -> SampledMatrixFunction
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let substeps = substeps.max(1);
    let h = grid.spacing() / substeps as f64;
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut values = Vec::with_capacity(grid.nodes());
    let mut y = initial.clone();
    values.push(y.clone());
    for k in 1..grid.nodes() {
        let x0 = grid.node(k - 1);
        for s in 0..substeps {
            let x = x0 + s as f64 * h;
            let k1 = rhs(x, &y);
            let k2 = rhs(x + 0.5 * h, &(&y + &k1 * half));
            let k3 = rhs(x + 0.5 * h, &(&y + &k2 * half));
            let k4 = rhs(x + h, &(&y + &k3 * full));
            y += (k1 + (k2 + k3) * two + k4) * sixth;
        }
        values.push(y.clone());
    }
    SampledMatrixFunction::new(*grid, values).expect("one value per node")
}

/// Linear case `Y' = M(x) Y`.
pub fn integrate_linear<M>(coeff: M, initial: &ComplexMatrix, grid: &Grid) -> SampledMatrixFunction
where
    M: Fn(f64) -> ComplexMatrix,
{
    integrate_ode(|x, y| coeff(x) * y, initial, grid)
}
