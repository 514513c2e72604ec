//! Passage from canonical systems to matrix string equations and from
//! matrix Schrodinger equations to canonical systems in `J` form.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;

use crate::canonical::{big_j, theta, CanonicalSystem, Signature, SystemKind};
use crate::error::{Error, Result};
use crate::num::dense::{block, det, eye, fro, hermitian_part, inverse, max_eigenvalue, min_eigenvalue, vstack, zeros, ComplexMatrix, I};
use crate::num::{integrate_ode_substeps, Grid, MatrixFunction, SampledMatrixFunction};

/// Bound on `|vartheta| / sigma_min(theta1)` above which a node is treated as singular.
pub const THETA1_CONDITION_LIMIT: f64 = 1e10;

/// `|vartheta|_2 / sigma_min(theta1)`, relative to the whole row block so that
/// a scalar `theta1` close to zero counts as singular.
fn relative_condition(vartheta: &ComplexMatrix, theta1: &ComplexMatrix) -> f64 {
    let top = max_eigenvalue(&(vartheta * vartheta.adjoint())).sqrt();
    let low = min_eigenvalue(&(theta1.adjoint() * theta1)).max(0.0).sqrt();
    if low == 0.0 {
        f64::INFINITY
    } else {
        top / low
    }
}

/// `vartheta(x) = [theta1, theta2]` (`p x 2p`) and the string coefficients
/// `kappa = (i (theta1^{-1} theta2)')^{-1}` and `omega = theta1* theta1`.
#[derive(Clone)]
pub struct StringTransform {
    vartheta: Arc<dyn MatrixFunction>,
    p: usize,
    step: f64,
    grid: Grid,
    valid_nodes: usize,
}

impl std::fmt::Debug for StringTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StringTransform")
            .field("p", &self.p)
            .field("grid", &self.grid)
            .field("valid_nodes", &self.valid_nodes)
            .finish()
    }
}

impl StringTransform {
    /// Checks `theta1` node by node and keeps the longest leading part of the
    /// grid on which it is invertible; derivatives use the step `spacing / 10`.
    /// A jump above `pi / 2` in `arg det theta1` between neighbouring nodes is
    /// read as a zero crossed between them.
    pub fn new(vartheta: Arc<dyn MatrixFunction>, grid: Grid) -> Result<Self> {
        let v0 = vartheta.eval(grid.start());
        let (p, m) = v0.shape();
        if m != 2 * p {
            return Err(Error::Dimension(format!("vartheta must be p x 2p, got {p}x{m}")));
        }
        let mut valid_nodes = 0;
        let mut last_arg: Option<f64> = None;
        for x in grid.points() {
            let v = vartheta.eval(x);
            let t1 = block(&v, 0, 0, p, p);
            if !(relative_condition(&v, &t1) <= THETA1_CONDITION_LIMIT) {
                break;
            }
            let arg = det(&t1).arg();
            if let Some(prev) = last_arg {
                let jump = (arg - prev + PI).rem_euclid(2.0 * PI) - PI;
                if jump.abs() > FRAC_PI_2 {
                    break;
                }
            }
            last_arg = Some(arg);
            valid_nodes += 1;
        }
        if valid_nodes < 2 {
            return Err(Error::Singular(format!("theta1 singular at x = {}", grid.node(valid_nodes))));
        }
        let step = grid.spacing() / 10.0;
        Ok(Self { vartheta, p, step, grid, valid_nodes })
    }

    /// `vartheta = beta Theta*` for a `p x 2p` factor `beta`.
    pub fn from_beta(beta: Arc<dyn MatrixFunction>, grid: Grid) -> Result<Self> {
        let p = beta.eval(grid.start()).nrows();
        let th = theta(p).adjoint();
        let vt = move |x: f64| beta.eval(x) * &th;
        Self::new(Arc::new(vt), grid)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Grid prefix on which `theta1` is invertible.
    pub fn valid_grid(&self) -> Grid {
        self.grid.prefix(self.valid_nodes - 1).expect("at least two valid nodes")
    }

    pub fn is_complete(&self) -> bool {
        self.valid_nodes == self.grid.nodes()
    }

    pub fn vartheta(&self, x: f64) -> ComplexMatrix {
        self.vartheta.eval(x)
    }

    fn theta1(&self, x: f64) -> ComplexMatrix {
        block(&self.vartheta(x), 0, 0, self.p, self.p)
    }

    fn ratio(&self, x: f64) -> Result<ComplexMatrix> {
        let v = self.vartheta(x);
        let t1 = block(&v, 0, 0, self.p, self.p);
        let t2 = block(&v, 0, self.p, self.p, self.p);
        Ok(inverse(&t1)? * t2)
    }

    /// `(theta1^{-1} theta2)'` by the five-point central stencil.
    pub fn ratio_derivative(&self, x: f64) -> Result<ComplexMatrix> {
        let d = self.step;
        let f = |k: f64| self.ratio(x + k * d);
        Ok((f(-2.0)? - f(2.0)? + (f(1.0)? - f(-1.0)?) * Complex64::from(8.0)) / Complex64::from(12.0 * d))
    }

    pub fn kappa(&self, x: f64) -> Result<ComplexMatrix> {
        inverse(&(self.ratio_derivative(x)? * I))
            .map_err(|_| Error::Singular(format!("(theta1^(-1) theta2)' not invertible at x = {x}")))
    }

    pub fn omega(&self, x: f64) -> ComplexMatrix {
        let t1 = self.theta1(x);
        hermitian_part(&(t1.adjoint() * t1))
    }

    /// Largest `||kappa - kappa*||` over the valid grid.
    pub fn kappa_self_adjointness(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in self.valid_grid().points() {
            let k = self.kappa(x)?;
            worst = worst.max(fro(&(&k - k.adjoint())));
        }
        Ok(worst)
    }

    /// Smallest singular value of `(theta1^{-1} theta2)'` over the valid grid;
    /// `kappa` exists only where it is bounded away from zero.
    pub fn min_ratio_derivative(&self) -> Result<f64> {
        let mut low = f64::INFINITY;
        for x in self.valid_grid().points() {
            let d = self.ratio_derivative(x)?;
            low = low.min(min_eigenvalue(&(d.adjoint() * d)).max(0.0).sqrt());
        }
        Ok(low)
    }

    /// Smallest eigenvalue of `omega` over the valid grid.
    pub fn omega_min_eigenvalue(&self) -> f64 {
        self.valid_grid().points().map(|x| min_eigenvalue(&self.omega(x))).fold(f64::INFINITY, f64::min)
    }

    /// Largest `||vartheta J vartheta*||` over the valid grid.
    pub fn isotropy_defect(&self) -> f64 {
        let j = big_j(self.p);
        self.valid_grid()
            .points()
            .map(|x| {
                let v = self.vartheta(x);
                fro(&(&v * &j * v.adjoint()))
            })
            .fold(0.0, f64::max)
    }

    /// Largest `||(kappa Z')' - lambda omega Z||` at interior nodes of the
    /// valid part of `y`'s grid, where `Z = theta1^{-1} Y` and `Y = vartheta W`.
    pub fn string_residual(&self, y: &SampledMatrixFunction, lambda: Complex64) -> Result<f64> {
        let grid = *y.grid();
        let h = grid.spacing();
        let valid_end = self.valid_grid().end();
        let z: Vec<ComplexMatrix> = grid
            .points()
            .zip(y.values())
            .take_while(|(x, _)| *x <= valid_end + 1e-12)
            .map(|(x, yk)| Ok(inverse(&self.theta1(x))? * yk))
            .collect::<Result<_>>()?;
        if z.len() < 3 {
            return Err(Error::GridMismatch("string residual needs three valid nodes".into()));
        }
        let mut worst: f64 = 0.0;
        for k in 1..z.len() - 1 {
            let x = grid.node(k);
            let flux_r = self.kappa(x + 0.5 * h)? * (&z[k + 1] - &z[k]) / Complex64::from(h);
            let flux_l = self.kappa(x - 0.5 * h)? * (&z[k] - &z[k - 1]) / Complex64::from(h);
            let res = (flux_r - flux_l) / Complex64::from(h) - self.omega(x) * &z[k] * lambda;
            worst = worst.max(fro(&res));
        }
        Ok(worst)
    }
}

/// Matrix Schrodinger equation `-Z'' + u Z = lambda Z` with its canonical
/// system `W' = i lambda J theta* theta W`, where `theta'' = u theta` and
/// `[theta; theta'](0) = Theta1`.
#[derive(Clone)]
pub struct SchrodingerSystem {
    potential: Arc<dyn MatrixFunction>,
    p: usize,
    b: SampledMatrixFunction,
    substeps: usize,
}

impl std::fmt::Debug for SchrodingerSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchrodingerSystem").field("p", &self.p).field("grid", self.b.grid()).finish()
    }
}

/// `Theta1 = (1/sqrt 2) [[iI, I], [iI, -I]]`.
pub fn theta1(p: usize) -> ComplexMatrix {
    let s = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    let mut m = zeros(2 * p, 2 * p);
    for k in 0..p {
        m[(k, k)] = I * s;
        m[(k, p + k)] = s;
        m[(p + k, k)] = I * s;
        m[(p + k, p + k)] = -s;
    }
    m
}

/// `J1 = i [[0, -I], [I, 0]]`.
pub fn j1(p: usize) -> ComplexMatrix {
    let mut m = zeros(2 * p, 2 * p);
    for k in 0..p {
        m[(k, p + k)] = -I;
        m[(p + k, k)] = I;
    }
    m
}

fn companion(u: &ComplexMatrix) -> ComplexMatrix {
    let p = u.nrows();
    let mut m = zeros(2 * p, 2 * p);
    m.view_mut((0, p), (p, p)).copy_from(&eye(p));
    m.view_mut((p, 0), (p, p)).copy_from(u);
    m
}

impl SchrodingerSystem {
    /// Integrates `B' = [[0, I], [u, 0]] B` from `B(0) = Theta1` by RK4 with
    /// `substeps` steps per spacing.
    pub fn new(potential: Arc<dyn MatrixFunction>, grid: Grid, substeps: usize) -> Result<Self> {
        if grid.start() != 0.0 {
            return Err(Error::GridMismatch("Schrodinger grids start at 0".into()));
        }
        let u0 = potential.eval(0.0);
        let p = u0.nrows();
        for x in grid.points() {
            let u = potential.eval(x);
            if u.shape() != (p, p) || fro(&(&u - u.adjoint())) > 1e-12 * fro(&u).max(1.0) {
                return Err(Error::Precondition(format!("potential must be Hermitian p x p (x = {x})")));
            }
        }
        let pot = potential.clone();
        let b = integrate_ode_substeps(|x, b| companion(&pot.eval(x)) * b, &theta1(p), &grid, substeps);
        Ok(Self { potential, p, b, substeps })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn grid(&self) -> &Grid {
        self.b.grid()
    }

    pub fn b_samples(&self) -> &SampledMatrixFunction {
        &self.b
    }

    pub fn vartheta(&self, k: usize) -> ComplexMatrix {
        self.b.value(k).rows(0, self.p).into_owned()
    }

    /// Largest `||B J B* - J1||` over the grid.
    pub fn symplectic_defect(&self) -> f64 {
        let j = big_j(self.p);
        let target = j1(self.p);
        self.b.values().iter().map(|b| fro(&(b * &j * b.adjoint() - &target))).fold(0.0, f64::max)
    }

    /// Largest defect of `vartheta J vartheta* = 0` and `vartheta' J vartheta* = iI`.
    pub fn normalization_defect(&self) -> f64 {
        let j = big_j(self.p);
        let p = self.p;
        self.b
            .values()
            .iter()
            .map(|b| {
                let t = b.rows(0, p).into_owned();
                let td = b.rows(p, p).into_owned();
                fro(&(&t * &j * t.adjoint())).max(fro(&(td * &j * t.adjoint() - eye(p) * I)))
            })
            .fold(0.0, f64::max)
    }

    /// The canonical system in `J` form with `H = vartheta* vartheta`;
    /// `vartheta` between nodes is interpolated.
    pub fn canonical_system(&self) -> Result<CanonicalSystem> {
        let p = self.p;
        let tops = self.b.map(|b| b.rows(0, p).into_owned());
        let h = move |x: f64| {
            let t = tops.at(x);
            t.adjoint() * t
        };
        CanonicalSystem::from_hamiltonian(Signature::off_diagonal(p), SystemKind::Canonical, Arc::new(h))
    }

    /// `Z = vartheta W` with `B` and `W` integrated together, and the largest
    /// central-difference residual of `-Z'' + u Z - lambda Z` at interior nodes.
    pub fn verify_solution(&self, lambda: Complex64) -> (SampledMatrixFunction, f64) {
        let p = self.p;
        let grid = *self.grid();
        let j = big_j(p);
        let pot = self.potential.clone();
        let init = vstack(&theta1(p), &eye(2 * p));
        let rhs = |x: f64, s: &ComplexMatrix| {
            let b = s.rows(0, 2 * p).into_owned();
            let w = s.rows(2 * p, 2 * p).into_owned();
            let t = b.rows(0, p).into_owned();
            let db = companion(&pot.eval(x)) * &b;
            let dw = &j * t.adjoint() * t * w * (I * lambda);
            vstack(&db, &dw)
        };
        let joint = integrate_ode_substeps(rhs, &init, &grid, self.substeps);
        let z = joint.map(|s| s.rows(0, p).into_owned() * s.rows(2 * p, 2 * p).into_owned());
        let h2 = Complex64::from(grid.spacing().powi(2));
        let mut worst: f64 = 0.0;
        for k in 1..grid.nodes() - 1 {
            let zk = z.value(k);
            let d2 = (z.value(k + 1) - zk * Complex64::from(2.0) + z.value(k - 1)) / h2;
            let res = -d2 + self.potential.eval(grid.node(k)) * zk - zk * lambda;
            worst = worst.max(fro(&res));
        }
        (z, worst)
    }
}

/// Largest `||vartheta'' - u vartheta||` over `grid`, with the second
/// derivative by central differences of step `step`.
pub fn second_order_defect(vartheta: &dyn MatrixFunction, u: &ComplexMatrix, grid: &Grid, step: f64) -> f64 {
    grid.points()
        .map(|x| {
            let d2 = (vartheta.eval(x + step) - vartheta.eval(x) * Complex64::from(2.0) + vartheta.eval(x - step))
                / Complex64::from(step * step);
            fro(&(d2 - u * vartheta.eval(x)))
        })
        .fold(0.0, f64::max)
}
