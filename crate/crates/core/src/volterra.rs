//! Similarity of `K f = i beta j int_0^x beta* f` to `A f = int_0^x (t - x) f`
//! through `V = u (I + int_0^x Vk(x, t) . dt)`, and the transfer function of
//! the resulting discrete node.

use num_complex::Complex64;

use crate::canonical::BetaFactor;
use crate::error::{Error, Result};
use crate::num::dense::{eye, fro, inverse, spectral_norm, zeros, ComplexMatrix, I};
use crate::num::{integrate_linear, Grid};

/// Tolerance on `beta j beta* = 0` and `beta' j beta* = iI`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

fn norms_integral(values: &[ComplexMatrix], h: f64) -> f64 {
    let f: Vec<f64> = values.iter().map(spectral_norm).collect();
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}

/// Auxiliary functions of the construction, sampled on a grid of half the
/// main spacing (node `2i` of the fine grid is node `i` of the main grid).
#[derive(Clone, Debug)]
pub struct Auxiliaries {
    grid: Grid,
    fine: Grid,
    p: usize,
    pub u1: Vec<ComplexMatrix>,
    pub u: Vec<ComplexMatrix>,
    pub u2: Vec<ComplexMatrix>,
    pub u3: Vec<ComplexMatrix>,
    pub u4: Vec<ComplexMatrix>,
    pub h1: Vec<ComplexMatrix>,
    pub h2: Vec<ComplexMatrix>,
}

impl Auxiliaries {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn fine_grid(&self) -> &Grid {
        &self.fine
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Largest `||u* u - I||` over the fine grid.
    pub fn unitarity_defect(&self) -> f64 {
        self.u.iter().map(|u| fro(&(u.adjoint() * u - eye(self.p)))).fold(0.0, f64::max)
    }

    /// Largest `||u2 + u2*||`.
    pub fn skewness_defect(&self) -> f64 {
        self.u2.iter().map(|m| fro(&(m + m.adjoint()))).fold(0.0, f64::max)
    }
}

/// Builds `u1, u, u2, u3, u4, h1, h2` for `beta` on `grid` (which starts at 0).
pub fn build_auxiliaries(beta: &dyn BetaFactor, grid: &Grid) -> Result<Auxiliaries> {
    if grid.start() != 0.0 {
        return Err(Error::GridMismatch("similarity grids start at 0".into()));
    }
    let b0 = beta.value(0.0);
    let (p, m) = b0.shape();
    if m != 2 * p {
        return Err(Error::Dimension(format!("beta must be p x 2p, got {p}x{m}")));
    }
    let j = crate::canonical::j_matrix(p, p);
    let fine = Grid::new(0.0, grid.end(), 2 * grid.nodes() - 1)?;
    for x in fine.points() {
        let b = beta.value(x);
        let e1 = fro(&(&b * &j * b.adjoint()));
        let e2 = fro(&(beta.d1(x) * &j * b.adjoint() - eye(p) * I));
        if e1 > NORMALIZATION_TOL || e2 > NORMALIZATION_TOL {
            return Err(Error::Precondition(format!(
                "beta j beta* = 0 and beta' j beta* = iI required (violated at x = {x})"
            )));
        }
    }
    let u2_at = |x: f64| beta.d2(x) * &j * beta.value(x).adjoint() * I;
    let u1 = integrate_linear(|x| &j * beta.value(x).adjoint() * beta.d2(x) * I, &eye(2 * p), &fine);
    let u = integrate_linear(|x| u2_at(x) * Complex64::from(-0.5), &eye(p), &fine);
    let mut aux = Auxiliaries {
        grid: *grid,
        fine,
        p,
        u1: u1.values().to_vec(),
        u: u.values().to_vec(),
        u2: Vec::new(),
        u3: Vec::new(),
        u4: Vec::new(),
        h1: Vec::new(),
        h2: Vec::new(),
    };
    for (k, x) in fine.points().enumerate() {
        let b = beta.value(x);
        let b1 = beta.d1(x);
        let b2 = beta.d2(x);
        let u2 = u2_at(x);
        let u3 = &b2 * &j * b1.adjoint() * I;
        let uk = &aux.u[k];
        let u4 = uk.adjoint() * ((&u3 + u3.adjoint()) * Complex64::from(0.5) - &u2 * &u2 * Complex64::from(0.75)) * uk;
        let h1 = &b2 * &aux.u1[k] * I;
        let inner = &j * b.adjoint() * &u2 * &u2 - &j * b.adjoint() * u3.adjoint() - &j * b1.adjoint() * &u2
            + &j * b2.adjoint();
        let h2 = inverse(&aux.u1[k])? * inner;
        aux.u2.push(u2);
        aux.u3.push(u3);
        aux.u4.push(u4);
        aux.h1.push(h1);
        aux.h2.push(h2);
    }
    Ok(aux)
}

/// Lower-triangular field `F(i, j)`, `0 <= j <= i <= n`, of `p x q` blocks.
#[derive(Clone, Debug)]
struct TriField {
    n: usize,
    data: Vec<ComplexMatrix>,
}

impl TriField {
    fn zeros(n: usize, p: usize, q: usize) -> Self {
        Self { n, data: vec![zeros(p, q); (n + 1) * (n + 2) / 2] }
    }

    fn idx(i: usize, j: usize) -> usize {
        debug_assert!(j <= i);
        i * (i + 1) / 2 + j
    }

    fn get(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.data[Self::idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: ComplexMatrix) {
        self.data[Self::idx(i, j)] = v;
    }

    fn sup_norm(&self) -> f64 {
        self.data.iter().map(spectral_norm).fold(0.0, f64::max)
    }
}

/// `(A + B + C) / 2` for a field `P(t_i, eta_m)`, `m <= i`, with
/// `A = int_0^zeta P(eta + x - zeta, eta)`, `B = int_zeta^{(x+zeta)/2} P(x + zeta - eta, eta)`
/// and `C = int_0^{(x-zeta)/2} P(x - zeta - eta, eta)`, by the trapezoid rule.
fn fold_integrals(pf: &TriField, h: f64, p: usize) -> TriField {
    let n = pf.n;
    let half = Complex64::from(0.5 * h);
    // diagonal sums D[d][j] = int_0^{jh} P(eta + dh, eta)
    let mut out = TriField::zeros(n, p, p);
    for d in 0..=n {
        let mut acc = zeros(p, p);
        out.set(d, 0, zeros(p, p));
        for jj in 1..=(n - d) {
            acc += (pf.get(jj - 1 + d, jj - 1) + pf.get(jj + d, jj)) * half;
            out.set(d + jj, jj, acc.clone());
        }
    }
    // anti-diagonal tables E[s][m] = int_{mh}^{sh/2} P(sh - eta, eta)
    let mut anti: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(2 * n + 1);
    for s in 0..=2 * n {
        let lo = s.saturating_sub(n);
        let top = s / 2;
        let mut col = vec![zeros(p, p); top + 1];
        if top >= lo {
            let mut acc = if s % 2 == 1 { pf.get(s - top, top) * Complex64::from(0.25 * h) } else { zeros(p, p) };
            col[top] = acc.clone();
            for m in (lo..top).rev() {
                acc += (pf.get(s - m, m) + pf.get(s - m - 1, m + 1)) * half;
                col[m] = acc.clone();
            }
        }
        anti.push(col);
    }
    for i in 0..=n {
        for jj in 0..=i {
            let total = out.get(i, jj) + &anti[i + jj][jj] + &anti[i - jj][0];
            out.set(i, jj, total * Complex64::from(0.5));
        }
    }
    out
}

/// `V = u (I + int Vk)` on the main grid together with the series data.
#[derive(Clone, Debug)]
pub struct SimilarityKernel {
    grid: Grid,
    p: usize,
    u: Vec<ComplexMatrix>,
    kernel: TriField,
    /// `sup ||Vk||` for each summed term `k = 1, 2, ...`.
    pub term_sups: Vec<f64>,
    /// Constant dominating the integrals of `h1`, `h2`, `sqrt int ||u4||` and `sup ||V1||`.
    pub constant: f64,
    /// Bound on the omitted terms.
    pub tail_bound: f64,
    pub converged: bool,
}

/// `sum_{k > terms} (3 C^2 T)^{k-1} C / (k-1)!`.
pub fn series_tail_bound(c: f64, t: f64, terms: usize) -> f64 {
    let r = 3.0 * c * c * t;
    let mut term = c;
    for k in 1..=terms {
        term *= r / k as f64;
    }
    // term is now the (terms+1)-th summand
    let mut sum = 0.0;
    let mut k = terms + 1;
    while term > 1e-300 && (term > 1e-20 * sum || k < terms + 5) {
        sum += term;
        term *= r / k as f64;
        k += 1;
        if k > terms + 2000 {
            break;
        }
    }
    sum
}

/// Sums the series for the kernel until the tail bound drops below `tol` or
/// `kmax` terms are used.
pub fn kernel_series(aux: &Auxiliaries, kmax: usize, tol: f64) -> Result<SimilarityKernel> {
    if kmax == 0 {
        return Err(Error::Precondition("kmax must be at least 1".into()));
    }
    let p = aux.p;
    let n = aux.grid.nodes() - 1;
    let h = aux.grid.spacing();
    let hf = aux.fine.spacing();
    let half = Complex64::from(0.5 * h);
    let main = |k: usize| 2 * k;
    let uk = |i: usize| &aux.u[main(i)];
    let a: Vec<ComplexMatrix> = (0..=n).map(|i| uk(i).adjoint() * &aux.h1[main(i)]).collect();
    let b: Vec<ComplexMatrix> = (0..=n).map(|i| &aux.h2[main(i)] * uk(i)).collect();
    // cumulative integrals of a on the main grid and of u4 on the fine grid
    let mut a_cum = vec![zeros(p, 2 * p); n + 1];
    for i in 1..=n {
        a_cum[i] = &a_cum[i - 1] + (&a[i - 1] + &a[i]) * half;
    }
    let mut u4_cum = vec![zeros(p, p); aux.u4.len()];
    for i in 1..aux.u4.len() {
        u4_cum[i] = &u4_cum[i - 1] + (&aux.u4[i - 1] + &aux.u4[i]) * Complex64::from(0.5 * hf);
    }
    // first term
    let mut f_breve = TriField::zeros(n, p, p);
    for i in 0..=n {
        for m in 0..=i {
            f_breve.set(i, m, (&a_cum[i] - &a_cum[m]) * &b[m]);
        }
    }
    let folded = fold_integrals(&f_breve, h, p);
    let mut v1 = TriField::zeros(n, p, p);
    for i in 0..=n {
        for jj in 0..=i {
            let val = (&u4_cum[i + jj] + &u4_cum[i - jj]) * Complex64::from(0.5) - folded.get(i, jj);
            v1.set(i, jj, val);
        }
    }
    let t = aux.grid.end();
    let sup_v1 = v1.sup_norm();
    let u4_int = norms_integral(&aux.u4, hf);
    let h1_int = norms_integral(&aux.h1, hf);
    let h2_int = norms_integral(&aux.h2, hf);
    let constant = h1_int.max(h2_int).max(u4_int.sqrt()).max(sup_v1);
    let mut total = v1.clone();
    let mut term_sups = vec![sup_v1];
    let mut prev = v1;
    let mut terms = 1;
    let mut tail = series_tail_bound(constant, t, terms);
    while tail >= tol && terms < kmax {
        prev = next_term(&prev, &aux.u4, &a, &b, h, p);
        for (acc, v) in total.data.iter_mut().zip(&prev.data) {
            *acc += v;
        }
        term_sups.push(prev.sup_norm());
        terms += 1;
        tail = series_tail_bound(constant, t, terms);
    }
    Ok(SimilarityKernel {
        grid: aux.grid,
        p,
        u: (0..=n).map(|i| uk(i).clone()).collect(),
        kernel: total,
        term_sups,
        constant,
        tail_bound: tail,
        converged: tail < tol,
    })
}

fn next_term(
    prev: &TriField,
    u4_fine: &[ComplexMatrix],
    a: &[ComplexMatrix],
    b: &[ComplexMatrix],
    h: f64,
    p: usize,
) -> TriField {
    let n = prev.n;
    let half = Complex64::from(0.5 * h);
    let mut pf = TriField::zeros(n, p, p);
    for m in 0..=n {
        let mut g = zeros(2 * p, p);
        let mut gamma_prev = &u4_fine[2 * m] * prev.get(m, m);
        let mut acc = zeros(p, p);
        for i in (m + 1)..=n {
            g += (&b[i - 1] * prev.get(i - 1, m) + &b[i] * prev.get(i, m)) * half;
            let gamma = &u4_fine[2 * i] * prev.get(i, m) - &a[i] * &g;
            acc += (&gamma_prev + &gamma) * half;
            pf.set(i, m, acc.clone());
            gamma_prev = gamma;
        }
    }
    fold_integrals(&pf, h, p)
}

impl SimilarityKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn terms(&self) -> usize {
        self.term_sups.len()
    }

    /// `Vk(x_i, x_j)` for `j <= i`.
    pub fn kernel_at(&self, i: usize, j: usize) -> &ComplexMatrix {
        self.kernel.get(i, j)
    }

    pub fn u_at(&self, i: usize) -> &ComplexMatrix {
        &self.u[i]
    }

    fn nodes(&self) -> usize {
        self.grid.nodes()
    }

    /// `(V f)(x) = u(x) (f(x) + int_0^x Vk(x, t) f(t) dt)` on the grid.
    pub fn apply(&self, f: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
        if f.len() != self.nodes() {
            return Err(Error::GridMismatch(format!("expected {} samples, got {}", self.nodes(), f.len())));
        }
        let vf = self.v_matrix(self.nodes() - 1) * stack(f);
        Ok(unstack(&vf, self.p))
    }

    /// Dense `V` restricted to nodes `0..=k`.
    pub fn v_matrix(&self, k: usize) -> ComplexMatrix {
        let p = self.p;
        let h = self.grid.spacing();
        let mut m = zeros((k + 1) * p, (k + 1) * p);
        for i in 0..=k {
            for jj in 0..=i {
                let mut blk = self.kernel.get(i, jj) * Complex64::from(volterra_weight(i, jj, h));
                if i == jj {
                    blk += eye(p);
                }
                m.view_mut((i * p, jj * p), (p, p)).copy_from(&(&self.u[i] * blk));
            }
        }
        m
    }
}

fn stack(f: &[ComplexMatrix]) -> ComplexMatrix {
    let (p, q) = f[0].shape();
    let mut out = zeros(f.len() * p, q);
    for (i, blk) in f.iter().enumerate() {
        out.view_mut((i * p, 0), (p, q)).copy_from(blk);
    }
    out
}

fn unstack(m: &ComplexMatrix, p: usize) -> Vec<ComplexMatrix> {
    (0..m.nrows() / p).map(|i| m.rows(i * p, p).into_owned()).collect()
}

/// Trapezoid weight of node `j` in `int_0^{x_i}`.
fn volterra_weight(i: usize, j: usize, h: f64) -> f64 {
    if i == 0 || j > i {
        0.0
    } else if j == 0 || j == i {
        0.5 * h
    } else {
        h
    }
}

/// Trapezoid weights of `int_0^{x_k}` as a diagonal.
fn omega(k: usize, p: usize, h: f64) -> Vec<f64> {
    (0..=k)
        .flat_map(|i| {
            let w = if i == 0 || i == k { 0.5 * h } else { h };
            std::iter::repeat(w).take(p)
        })
        .collect()
}

/// Discrete `A` on nodes `0..=k`.
pub fn operator_a(grid: &Grid, k: usize, p: usize) -> ComplexMatrix {
    let h = grid.spacing();
    let mut m = zeros((k + 1) * p, (k + 1) * p);
    for i in 0..=k {
        for jj in 0..=i {
            let w = volterra_weight(i, jj, h) * (grid.node(jj) - grid.node(i));
            for r in 0..p {
                m[(i * p + r, jj * p + r)] = Complex64::from(w);
            }
        }
    }
    m
}

/// Discrete `K` on nodes `0..=k`.
pub fn operator_k(beta: &dyn BetaFactor, grid: &Grid, k: usize) -> ComplexMatrix {
    let h = grid.spacing();
    let bs: Vec<ComplexMatrix> = (0..=k).map(|i| beta.value(grid.node(i))).collect();
    let p = bs[0].nrows();
    let j = crate::canonical::j_matrix(p, p);
    let mut m = zeros((k + 1) * p, (k + 1) * p);
    for i in 0..=k {
        for jj in 0..=i {
            let blk = &bs[i] * &j * bs[jj].adjoint() * (I * volterra_weight(i, jj, h));
            m.view_mut((i * p, jj * p), (p, p)).copy_from(&blk);
        }
    }
    m
}

fn stacked_beta(beta: &dyn BetaFactor, grid: &Grid, k: usize) -> ComplexMatrix {
    stack(&(0..=k).map(|i| beta.value(grid.node(i))).collect::<Vec<_>>())
}

/// Weighted adjoint `Omega^{-1} M* Omega`.
fn weighted_adjoint(m: &ComplexMatrix, w: &[f64]) -> ComplexMatrix {
    let mut out = m.adjoint();
    for r in 0..out.nrows() {
        for c in 0..out.ncols() {
            out[(r, c)] *= w[c] / w[r];
        }
    }
    out
}

fn scale_rows(m: &ComplexMatrix, w: &[f64]) -> ComplexMatrix {
    let mut out = m.clone();
    for r in 0..out.nrows() {
        for c in 0..out.ncols() {
            out[(r, c)] *= w[r];
        }
    }
    out
}

/// Weighted operator norm `|| Omega^{1/2} M Omega^{-1/2} ||`.
fn weighted_norm(m: &ComplexMatrix, w: &[f64]) -> f64 {
    let mut s = m.clone();
    for r in 0..s.nrows() {
        for c in 0..s.ncols() {
            s[(r, c)] *= (w[r] / w[c]).sqrt();
        }
    }
    spectral_norm(&s)
}

fn lower_solve(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.solve_lower_triangular(b)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::Singular("triangular system singular".into()))
}

/// Relative similarity residual `||K V f - V A f|| / ||f||` in the weighted
/// norm on the whole grid.
pub fn similarity_residual(kernel: &SimilarityKernel, beta: &dyn BetaFactor, f: &[ComplexMatrix]) -> Result<f64> {
    let k = kernel.nodes() - 1;
    let grid = kernel.grid;
    let fm = stack(f);
    let v = kernel.v_matrix(k);
    let lhs = operator_k(beta, &grid, k) * (&v * &fm);
    let rhs = &v * (operator_a(&grid, k, kernel.p) * &fm);
    let w = omega(k, kernel.p, grid.spacing());
    let wnorm = |m: &ComplexMatrix| {
        let mut s = 0.0;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                s += w[r] * m[(r, c)].norm_sqr();
            }
        }
        s.sqrt()
    };
    Ok(wnorm(&(lhs - rhs)) / wnorm(&fm))
}

fn ell_index(grid: &Grid, ell: f64) -> Result<usize> {
    match grid.index_of(ell) {
        Some(k) if k > 0 => Ok(k),
        _ => Err(Error::GridMismatch(format!("ell = {ell} must be a positive grid node"))),
    }
}

/// `w_A(ell, mu) = I - i j Pi* S^{-1} (A - mu)^{-1} Pi` of the discrete node
/// on `[0, ell]`, in the form `I - i j B* Omega V (A - mu)^{-1} V^{-1} B`.
pub fn transfer_function(kernel: &SimilarityKernel, beta: &dyn BetaFactor, ell: f64, mu: Complex64) -> Result<ComplexMatrix> {
    let grid = kernel.grid;
    let k = ell_index(&grid, ell)?;
    let p = kernel.p;
    if mu == Complex64::default() {
        return Err(Error::SpectralCollision);
    }
    let v = kernel.v_matrix(k);
    let bmat = stacked_beta(beta, &grid, k);
    let pi = lower_solve(&v, &bmat)?;
    let shifted = operator_a(&grid, k, p) - eye((k + 1) * p) * mu;
    let y = lower_solve(&shifted, &pi)?;
    let z = &v * y;
    let w = omega(k, p, grid.spacing());
    let j = crate::canonical::j_matrix(p, p);
    Ok(eye(2 * p) - j * bmat.adjoint() * scale_rows(&z, &w) * I)
}

/// Weighted norm of `A S - S A^dagger - i Pi j Pi^dagger` on `[0, ell]`
/// with `S = V^{-1} V^{-dagger}` and `Pi = V^{-1} B`.
pub fn node_identity_residual(kernel: &SimilarityKernel, beta: &dyn BetaFactor, ell: f64) -> Result<f64> {
    let grid = kernel.grid;
    let k = ell_index(&grid, ell)?;
    let p = kernel.p;
    let w = omega(k, p, grid.spacing());
    let v = kernel.v_matrix(k);
    let v_inv = lower_solve(&v, &eye((k + 1) * p))?;
    let s = &v_inv * weighted_adjoint(&v_inv, &w);
    let a = operator_a(&grid, k, p);
    let pi = &v_inv * stacked_beta(beta, &grid, k);
    let j = crate::canonical::j_matrix(p, p);
    let pi_dag = pi.adjoint() * ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|&x| Complex64::from(x))));
    let res = &a * &s - &s * weighted_adjoint(&a, &w) - pi * j * pi_dag * I;
    Ok(weighted_norm(&res, &w))
}

/// `int_0^ell Pi* S^{-1} Pi` of the discrete node on `[0, ell]`.
pub fn hamiltonian_accumulation(kernel: &SimilarityKernel, beta: &dyn BetaFactor, ell: f64) -> Result<ComplexMatrix> {
    let grid = kernel.grid;
    let k = ell_index(&grid, ell)?;
    let p = kernel.p;
    let w = omega(k, p, grid.spacing());
    let v = kernel.v_matrix(k);
    let pi = lower_solve(&v, &stacked_beta(beta, &grid, k))?;
    // S^{-1} = Omega^{-1} V* Omega V, and Pi* is weighted by Omega
    let s_inv_pi = {
        let t = scale_rows(&(&v * &pi), &w);
        let t = v.adjoint() * t;
        let inv_w: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
        scale_rows(&t, &inv_w)
    };
    Ok(pi.adjoint() * scale_rows(&s_inv_pi, &w))
}

/// Values `y1(x_i, z) = cos(z x_i) I + int_0^{x_i} cos(z zeta) Vk(x_i, zeta) dzeta`.
pub fn y1_values(kernel: &SimilarityKernel, z: Complex64) -> Vec<ComplexMatrix> {
    let h = kernel.grid.spacing();
    let p = kernel.p;
    (0..kernel.nodes())
        .map(|i| {
            let mut acc = eye(p) * (z * kernel.grid.node(i)).cos();
            for jj in 0..=i {
                acc += kernel.kernel.get(i, jj) * ((z * kernel.grid.node(jj)).cos() * volterra_weight(i, jj, h));
            }
            acc
        })
        .collect()
}

/// Weighted residual of `B y1 = I + z^2 A y1` with
/// `B = I + A u4 - A int_0^x F(x, t) . dt` and `F(x, t) = u(x)* h1(x) h2(t) u(t)`.
pub fn y1_identity_residual(aux: &Auxiliaries, kernel: &SimilarityKernel, z: Complex64) -> Result<f64> {
    let n = kernel.nodes() - 1;
    let p = kernel.p;
    let h = kernel.grid.spacing();
    let y = y1_values(kernel, z);
    let a_op = operator_a(&kernel.grid, n, p);
    let av: Vec<ComplexMatrix> = (0..=n).map(|i| aux.u[2 * i].adjoint() * &aux.h1[2 * i]).collect();
    let bv: Vec<ComplexMatrix> = (0..=n).map(|i| &aux.h2[2 * i] * &aux.u[2 * i]).collect();
    let fy: Vec<ComplexMatrix> = (0..=n)
        .map(|i| {
            let mut inner = zeros(2 * p, p);
            for jj in 0..=i {
                inner += &bv[jj] * &y[jj] * Complex64::from(volterra_weight(i, jj, h));
            }
            &av[i] * inner
        })
        .collect();
    let u4y: Vec<ComplexMatrix> = (0..=n).map(|i| &aux.u4[2 * i] * &y[i]).collect();
    let ym = stack(&y);
    let ones = stack(&vec![eye(p); n + 1]);
    let lhs = &ym + &a_op * stack(&u4y) - &a_op * stack(&fy);
    let rhs = ones + &a_op * &ym * (z * z);
    let w = omega(n, p, h);
    let diff = lhs - rhs;
    let mut s = 0.0;
    for r in 0..diff.nrows() {
        for c in 0..diff.ncols() {
            s += w[r] * diff[(r, c)].norm_sqr();
        }
    }
    Ok(s.sqrt())
}

/// Weighted `||K - K^dagger - i B j B* Omega||` on the whole grid.
pub fn adjoint_identity_residual(beta: &dyn BetaFactor, grid: &Grid) -> f64 {
    let k = grid.nodes() - 1;
    let km = operator_k(beta, grid, k);
    let p = km.nrows() / (k + 1);
    let w = omega(k, p, grid.spacing());
    let bmat = stacked_beta(beta, grid, k);
    let j = crate::canonical::j_matrix(p, p);
    let rhs = bmat.clone() * j * scale_rows(&bmat, &w).adjoint() * I;
    weighted_norm(&(&km - weighted_adjoint(&km, &w) - rhs), &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::ExponentialBeta;
    use crate::num::dense::re;

    fn half_beta() -> ExponentialBeta {
        ExponentialBeta { c: 0.5, alpha: eye(1) }
    }

    #[test]
    fn auxiliaries_of_half_family() {
        let aux = build_auxiliaries(&half_beta(), &Grid::new(0.0, 2.0, 101).unwrap()).unwrap();
        for k in 0..aux.u4.len() {
            assert!(fro(&aux.u2[k]) < 1e-14);
            assert!((aux.u4[k][(0, 0)] - re(-0.25)).norm() < 1e-14);
            assert!(fro(&aux.h2[k]) < 1e-12);
        }
        assert!(aux.unitarity_defect() < 1e-10);
    }

    #[test]
    fn first_term_for_constant_u4() {
        let aux = build_auxiliaries(&half_beta(), &Grid::new(0.0, 1.0, 51).unwrap()).unwrap();
        let ker = kernel_series(&aux, 1, 0.0).unwrap();
        for i in [0, 10, 50] {
            for jj in 0..=i {
                let x = ker.grid().node(i);
                assert!((ker.kernel_at(i, jj)[(0, 0)] - re(-x / 8.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn unnormalized_beta_rejected() {
        let b = ExponentialBeta { c: 1.0, alpha: eye(1) };
        assert!(build_auxiliaries(&b, &Grid::new(0.0, 1.0, 11).unwrap()).is_err());
    }

    #[test]
    fn zero_kernel_gives_identity() {
        let grid = Grid::new(0.0, 1.0, 5).unwrap();
        let ker = SimilarityKernel {
            grid,
            p: 1,
            u: vec![eye(1); 5],
            kernel: TriField::zeros(4, 1, 1),
            term_sups: vec![0.0],
            constant: 0.0,
            tail_bound: 0.0,
            converged: true,
        };
        let f: Vec<ComplexMatrix> = (0..5).map(|i| eye(1) * re(i as f64)).collect();
        assert_eq!(ker.apply(&f).unwrap(), f);
    }

    #[test]
    fn tail_bound_is_monotone() {
        let a = series_tail_bound(0.5, 1.0, 5);
        let b = series_tail_bound(0.5, 1.0, 10);
        assert!(b < a && b < 1e-8);
    }

    #[test]
    fn discrete_adjoint_identity_exact() {
        let grid = Grid::new(0.0, 1.0, 21).unwrap();
        assert!(adjoint_identity_residual(&half_beta(), &grid) < 1e-13);
    }
}
