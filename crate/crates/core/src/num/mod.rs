//! Dense complex linear algebra, quadrature and ODE primitives.

pub mod dense;
mod expm;
pub mod grid;
mod ode;
mod quad;
mod sqrtm;
mod sylvester;

pub use dense::{c64, eye, re, zeros, ComplexMatrix, I};
pub use expm::matrix_exp;
pub use grid::{Grid, MatrixFunction, SampledMatrixFunction};
pub use ode::{integrate_linear, integrate_ode, integrate_ode_substeps};
pub use quad::{cumulative_scalar, gauss_legendre, quadrature_cumulative};
pub use sqrtm::{matrix_sqrt_primary, SqrtBranch};
pub use sylvester::{solve_sylvester, SYLVESTER_GAP};
