//! Runs the stages of a scenario and assembles the report.

use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use cansys::canonical::{fundamental_solution_oracle, fundamental_solution_oracle_substeps, make_beta_exponential, ExponentialBeta};
use cansys::dynamical::{derivative_identity_residual, DynamicalSolution};
use cansys::gbdt::closed_form::{JordanClosedForm, ScalarClosedForm};
use cansys::gbdt::{jordan_seed, scalar_seed, GbdtSeed, GbdtState, JordanSeedParams, SRoute, ScalarSeedParams, SeedParts};
use cansys::initial::InitialSolution;
use cansys::num::dense::{eye, fro, min_eigenvalue, re, zeros, ComplexMatrix, I};
use cansys::num::{matrix_exp, Grid, SampledMatrixFunction, SqrtBranch};
use cansys::string::{theta1, SchrodingerSystem, StringTransform};
use cansys::volterra::{build_auxiliaries, kernel_series, transfer_function};
use cansys::weyl::{semi_radius_decrease, verify_l2_membership, WeylDisk, WeylFunction};
use cansys::{Complex64, Error};

use crate::report::{Checks, Provenance, Report, Series, StageStatus};
use crate::scenario::{self, complex, matrix, Scenario, SeedSpec, Stage, Tolerances};

/// Names accepted by `--emit`.
pub const SERIES_NAMES: [&str; 6] = ["s", "lambda", "beta_tilde", "h_tilde", "weyl_phi", "kappa"];

#[derive(Clone, Debug, PartialEq)]
pub enum RunError {
    /// Malformed scenario or options (exit 2).
    Parse(String),
    /// Data violating a precondition of the construction (exit 3).
    Precondition(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Parse(m) => write!(f, "scenario error: {m}"),
            RunError::Precondition(m) => write!(f, "precondition failed: {m}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub nodes: Option<usize>,
    pub tol_scale: f64,
    pub emit: Vec<String>,
}

impl Default for Options {
    fn default() -> Self {
        Self { nodes: None, tol_scale: 1.0, emit: Vec::new() }
    }
}

pub struct Outcome {
    pub report: Report,
    /// Series selected by `--emit`, in the order requested.
    pub emitted: Vec<Series>,
}

fn precondition(e: Error) -> RunError {
    RunError::Precondition(e.to_string())
}

/// Seed together with whatever closed forms exist for it.
struct Prepared {
    seed: Arc<GbdtSeed>,
    scalar: Option<ScalarSeedParams>,
    jordan: Option<JordanClosedForm>,
}

fn prepare_seed(cfg: &SeedSpec) -> Result<Prepared, RunError> {
    match cfg {
        SeedSpec::Scalar { a, c, alpha, f1, f2 } => {
            let p = ScalarSeedParams { a: complex(*a), c: *c, alpha: complex(*alpha), f1: complex(*f1), f2: complex(*f2) };
            let seed = scalar_seed(&p).map_err(precondition)?;
            Ok(Prepared { seed: Arc::new(seed), scalar: Some(p), jordan: None })
        }
        SeedSpec::Jordan { xi, q, f, g, alpha, s22, s11_margin } => {
            let p = JordanSeedParams {
                xi: *xi,
                q: complex(*q),
                f: complex(*f),
                g: complex(*g),
                alpha: complex(*alpha),
                s22: *s22,
                s11_margin: *s11_margin,
            };
            let seed = jordan_seed(&p).map_err(precondition)?;
            let cf = JordanClosedForm::new(p, seed.a()[(0, 1)], seed.s0().clone());
            Ok(Prepared { seed: Arc::new(seed), scalar: None, jordan: Some(cf) })
        }
        SeedSpec::Custom { a, c, d, alpha, f1, f2, s0 } => {
            let parts = SeedParts {
                a: matrix(a).map_err(RunError::Parse)?,
                c: *c,
                d: *d,
                alpha: matrix(alpha).map_err(RunError::Parse)?,
                f1: matrix(f1).map_err(RunError::Parse)?,
                f2: matrix(f2).map_err(RunError::Parse)?,
                q: None,
                branch: SqrtBranch::default(),
                s0: s0.as_ref().map(matrix).transpose().map_err(RunError::Parse)?,
            };
            let seed = GbdtSeed::new(parts).map_err(precondition)?;
            Ok(Prepared { seed: Arc::new(seed), scalar: None, jordan: None })
        }
    }
}

struct Context<'a> {
    sc: &'a Scenario,
    tol: Tolerances,
    prep: Prepared,
    state: Arc<GbdtState>,
    lambdas: Vec<Complex64>,
    checks: Checks,
    series: Vec<Series>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `text`, runs every requested stage and returns the report.
pub fn run(text: &str, opts: &Options) -> Result<Outcome, RunError> {
    for name in &opts.emit {
        if !SERIES_NAMES.contains(&name.as_str()) {
            return Err(RunError::Parse(format!("unknown series '{name}' (known: {})", SERIES_NAMES.join(", "))));
        }
    }
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(RunError::Parse("--tol-scale must be positive".into()));
    }
    let mut sc = scenario::parse(text).map_err(RunError::Parse)?;
    if let Some(n) = opts.nodes {
        if n < 3 {
            return Err(RunError::Parse("--nodes must be at least 3".into()));
        }
        sc.grid.nodes = n;
    }
    let tol = sc.tolerances.scaled(opts.tol_scale);
    let provenance = Provenance {
        tool: format!("cansys {}", env!("CARGO_PKG_VERSION")),
        scenario_sha256: hex(&Sha256::digest(text.as_bytes())),
        nodes: sc.grid.nodes,
        tol_scale: opts.tol_scale,
        tolerances: tol.clone(),
    };

    let prep = prepare_seed(&sc.seed)?;
    let grid = Grid::new(0.0, sc.grid.length, sc.grid.nodes).map_err(|e| RunError::Parse(e.to_string()))?;
    let state = Arc::new(GbdtState::build(prep.seed.clone(), grid, SRoute::Quadrature).map_err(precondition)?);
    let lambdas = sc.lambda.points.iter().map(|z| complex(*z)).collect();

    let mut stages = sc.stages.clone();
    stages.push(Stage::Build);
    stages.sort();
    stages.dedup();

    let mut ctx = Context { sc: &sc, tol, prep, state, lambdas, checks: Checks::default(), series: Vec::new() };
    base_series(&mut ctx);
    let mut statuses = Vec::new();
    for stage in stages {
        let status = match stage {
            Stage::Build => build_stage(&mut ctx),
            Stage::Verify => verify_stage(&mut ctx),
            Stage::Transform => transform_stage(&mut ctx),
            Stage::Weyl => weyl_stage(&mut ctx),
            Stage::Dynamical => dynamical_stage(&mut ctx),
            Stage::String => string_stage(&mut ctx),
            Stage::Volterra => volterra_stage(&mut ctx),
        };
        let status = match status {
            Ok(s) => s,
            Err(e) => {
                let msg = format!("error: {e}");
                ctx.checks.at_most(stage.name(), "stage completed", f64::INFINITY, 0.0);
                msg
            }
        };
        statuses.push(StageStatus { stage: stage.name().into(), status });
    }

    let mut emitted = Vec::new();
    for name in &opts.emit {
        match ctx.series.iter().find(|s| &s.name == name) {
            Some(s) => emitted.push(s.clone()),
            None => return Err(RunError::Parse(format!("series '{name}' is not produced by this scenario"))),
        }
    }
    let passed = ctx.checks.items.iter().all(|c| c.pass);
    let report = Report {
        scenario: sc.name.clone(),
        passed,
        provenance,
        stages: statuses,
        checks: ctx.checks.items,
        notes: ctx.checks.notes,
        series: ctx.series.iter().map(Series::info).collect(),
    };
    Ok(Outcome { report, emitted })
}

fn grid_series(name: &str, prefix: &str, grid: &Grid, f: impl Fn(f64) -> cansys::Result<ComplexMatrix>) -> cansys::Result<Series> {
    let rows = grid.points().map(|x| Ok((vec![x], f(x)?))).collect::<cansys::Result<Vec<_>>>()?;
    Ok(Series { name: name.into(), axes: vec!["x".into()], entry_prefix: prefix.into(), rows })
}

fn base_series(ctx: &mut Context) {
    let st = ctx.state.clone();
    let grid = *st.grid();
    ctx.series.push(grid_series("s", "s", &grid, |x| Ok(st.s_at(x))).expect("infallible"));
    ctx.series.push(grid_series("lambda", "l", &grid, |x| Ok(st.lambda_at(x))).expect("infallible"));
    match grid_series("beta_tilde", "b", &grid, |x| st.transformed_beta(x)) {
        Ok(s) => ctx.series.push(s),
        Err(e) => ctx.checks.note("series", format!("beta_tilde unavailable: {e}")),
    }
    match grid_series("h_tilde", "h", &grid, |x| st.transformed_hamiltonian(x)) {
        Ok(s) => ctx.series.push(s),
        Err(e) => ctx.checks.note("series", format!("h_tilde unavailable: {e}")),
    }
}

fn interior(grid: &Grid) -> impl Iterator<Item = f64> + '_ {
    (1..grid.nodes() - 1).map(|k| grid.node(k))
}

fn build_stage(ctx: &mut Context) -> cansys::Result<String> {
    let st = &ctx.state;
    ctx.checks.at_most("build", "identity residual / (1 + |S|), max over nodes", st.max_identity_residual(), ctx.tol.identity);
    let min_s = st.s_samples().values().iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);
    ctx.checks.at_least("build", "min eigenvalue of S over nodes", min_s, 0.0);
    Ok("ok".into())
}

fn verify_stage(ctx: &mut Context) -> cansys::Result<String> {
    let st = ctx.state.clone();
    let grid = *st.grid();
    if let Some(p) = ctx.prep.scalar {
        let cf = ScalarClosedForm::new(p);
        let s_err = grid.points().map(|x| (st.s_at(x)[(0, 0)] - cf.s(x)).norm()).fold(0.0, f64::max);
        ctx.checks.at_most("verify", "S vs closed form", s_err, ctx.tol.closed_form_s);
        if (p.alpha - re(1.0)).norm() <= 1e-14 {
            let mut b_err: f64 = 0.0;
            for x in grid.points() {
                b_err = b_err.max(fro(&(st.transformed_beta(x)? - cf.beta_tilde(x))));
            }
            ctx.checks.at_most("verify", "beta~ vs closed form", b_err, ctx.tol.closed_form_beta);
        } else {
            ctx.checks.note("verify", "beta~ closed form compared only for alpha = 1");
        }
        for &lambda in &ctx.lambdas {
            match grid.points().map(|x| Ok(fro(&(st.darboux_v(x, lambda)? - cf.darboux_v(x, lambda))))).collect::<cansys::Result<Vec<f64>>>() {
                Ok(errs) => {
                    let e = errs.into_iter().fold(0.0, f64::max);
                    ctx.checks.at_most("verify", format!("v vs closed form at lambda = {lambda}"), e, ctx.tol.closed_form_v);
                }
                Err(e) => ctx.checks.note("verify", format!("v skipped at lambda = {lambda}: {e}")),
            }
        }
        let wf = WeylFunction::new(ctx.prep.seed.clone())?;
        for &lambda in &ctx.lambdas {
            match wf.eval(lambda) {
                Ok(phi) => {
                    let e = (phi[(0, 0)] - cf.weyl(lambda)).norm();
                    ctx.checks.at_most("verify", format!("phi vs closed form at lambda = {lambda}"), e, ctx.tol.closed_form_phi);
                }
                Err(e) => ctx.checks.note("verify", format!("phi skipped at lambda = {lambda}: {e}")),
            }
        }
        return Ok("ok".into());
    }
    if let Some(cf) = &ctx.prep.jordan {
        let mut l_err: f64 = 0.0;
        let mut s_err: f64 = 0.0;
        let mut b_err: f64 = 0.0;
        for x in grid.points() {
            l_err = l_err.max(fro(&(st.lambda_at(x) - cf.lambda(x))));
            s_err = s_err.max(fro(&(st.s_at(x) - cf.s(x))));
            b_err = b_err.max(fro(&(st.transformed_beta(x)? - cf.beta_tilde(x)?)));
        }
        ctx.checks.at_most("verify", "Lambda vs closed form", l_err, ctx.tol.closed_form_v);
        ctx.checks.at_most("verify", "S vs closed form", s_err, ctx.tol.closed_form_s);
        ctx.checks.at_most("verify", "beta~ vs closed form", b_err, ctx.tol.closed_form_beta);
        return Ok("ok".into());
    }
    Ok("not applicable: no closed forms for custom seeds".into())
}

fn initial_solution(seed: &GbdtSeed) -> cansys::Result<InitialSolution> {
    InitialSolution::new(seed.c(), seed.alpha().clone())
}

fn transform_stage(ctx: &mut Context) -> cansys::Result<String> {
    let st = ctx.state.clone();
    let grid = *st.grid();
    let j = st.seed().signature().matrix();
    let mut iso: f64 = 0.0;
    for x in grid.points() {
        let b = st.transformed_beta(x)?;
        iso = iso.max(fro(&(&b * &j * b.adjoint())));
    }
    ctx.checks.at_most("transform", "beta~ j beta~*, max over nodes", iso, ctx.tol.isotropy);

    let beta = st.initial_system().beta().expect("exponential family").clone();
    let h = 1e-4;
    let mut norm: f64 = 0.0;
    for x in interior(&grid) {
        let d = (st.transformed_beta(x + h)? - st.transformed_beta(x - h)?) / Complex64::from(2.0 * h);
        let b = st.transformed_beta(x)?;
        let lhs = d * &j * b.adjoint();
        let rhs = beta.d1(x) * &j * beta.value(x).adjoint();
        norm = norm.max(fro(&(lhs - rhs)));
    }
    ctx.checks.at_most("transform", "beta~' j beta~* - beta' j beta*, central differences", norm, ctx.tol.normalization);

    let init = match initial_solution(st.seed()) {
        Ok(i) => i,
        Err(e) => return Ok(format!("partial: explicit initial solution unavailable ({e})")),
    };
    let system = st.transformed_system()?;
    let end = grid.end().min(1.0);
    let oracle_grid = Grid::with_spacing(end, 1e-3).map_err(|e| Error::GridMismatch(e.to_string()))?;
    let results: Vec<(Complex64, cansys::Result<(f64, f64)>)> = ctx
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let r = (|| {
                let v0_inv = st.v0_inverse(lambda)?;
                let wt = |x: f64| -> cansys::Result<ComplexMatrix> { Ok(st.darboux_v(x, lambda)? * init.w(x, lambda)? * &v0_inv) };
                let hd = 1e-4;
                let mut worst: f64 = 0.0;
                let samples = ((grid.end() - 0.1) / 0.1).floor() as usize;
                for k in 1..=samples {
                    let x = 0.1 * k as f64;
                    let deriv = (wt(x + hd)? - wt(x - hd)?) / Complex64::from(2.0 * hd);
                    let rhs = &j * st.transformed_hamiltonian(x)? * wt(x)? * (I * lambda);
                    worst = worst.max(fro(&(deriv - rhs)));
                }
                let oracle = fundamental_solution_oracle(&system, lambda, &oracle_grid);
                Ok((worst, fro(&(wt(end)? - oracle.last()))))
            })();
            (lambda, r)
        })
        .collect();
    for (lambda, r) in results {
        match r {
            Ok((d, o)) => {
                ctx.checks.at_most("transform", format!("W~' - i lambda j H~ W~ at lambda = {lambda}"), d, ctx.tol.transformed_derivative);
                ctx.checks.at_most("transform", format!("W~ vs oracle(H~) at x = {end}, lambda = {lambda}"), o, ctx.tol.transformed_oracle);
            }
            Err(e) => ctx.checks.note("transform", format!("lambda = {lambda} skipped: {e}")),
        }
    }
    Ok("ok".into())
}

fn weyl_stage(ctx: &mut Context) -> cansys::Result<String> {
    let wf = match WeylFunction::new(ctx.prep.seed.clone()) {
        Ok(w) => w,
        Err(e) => return Ok(format!("not applicable: {e}")),
    };
    let cfg = &ctx.sc.weyl;
    let lambda = complex(cfg.lambda);
    let reach = cfg.radii.iter().chain(cfg.lengths.iter()).fold(0.0f64, |a, &b| a.max(b));
    let grid = Grid::with_spacing(reach, cfg.spacing).map_err(|e| Error::GridMismatch(e.to_string()))?;
    let state = Arc::new(GbdtState::build(ctx.prep.seed.clone(), grid, SRoute::Quadrature)?);
    let init = wf.initial().clone();
    let w = state.transformed_fundamental_solution(lambda, &grid, |x| init.w(x, lambda))?;
    let phi = wf.eval(lambda)?;
    let mut disks = Vec::new();
    for &r in &cfg.radii {
        let k = grid.index_of(r).ok_or_else(|| Error::GridMismatch(format!("radius {r} is not a grid node")))?;
        let disk = WeylDisk::from_w(w.value(k), r, lambda)?;
        ctx.checks.at_least("weyl", format!("disk membership margin at r = {r}"), disk.membership_margin(&phi), -ctx.tol.disk);
        disks.push(disk);
    }
    ctx.checks.at_least("weyl", "semi-radius decrease (min eigenvalue)", semi_radius_decrease(&disks), -ctx.tol.disk);
    let system = state.transformed_system()?;
    let rep = verify_l2_membership(&w, system.hamiltonian_fn().as_ref(), &phi, lambda, &cfg.lengths, ctx.tol.l2)?;
    for (l, v) in &rep.integrals {
        ctx.checks.at_most("weyl", format!("L2(H~) integral over [0, {l}]"), *v, rep.bound + ctx.tol.l2);
    }
    if !rep.monotone {
        ctx.checks.note("weyl", "L2 integrals not monotone in L");
    }

    if let Some(line) = &ctx.sc.lambda.line {
        let pts = line.points();
        let vals: Vec<(Complex64, cansys::Result<ComplexMatrix>)> = pts.par_iter().map(|&z| (z, wf.eval(z))).collect();
        let mut rows = Vec::new();
        for (z, v) in vals {
            match v {
                Ok(phi) => rows.push((vec![z.re, z.im], phi)),
                Err(e) => ctx.checks.note("weyl", format!("phi skipped at lambda = {z}: {e}")),
            }
        }
        ctx.series.push(Series { name: "weyl_phi".into(), axes: vec!["re_lambda".into(), "im_lambda".into()], entry_prefix: "phi".into(), rows });
    }
    Ok("ok".into())
}

fn dynamical_stage(ctx: &mut Context) -> cansys::Result<String> {
    let mut sol = DynamicalSolution::new(ctx.state.clone())?;
    if let Some(cf) = ctx.prep.jordan.clone() {
        sol = sol.with_exponential(move |t| cf.exp_ita(t));
    }
    let cfg = &ctx.sc.dynamical;
    let rep = sol.convergence_order(&cfg.x, &cfg.t, cfg.step)?;
    ctx.checks.within("dynamical", format!("PDE residual order (step {} -> {})", cfg.step, cfg.step / 2.0), rep.order, 2.0, ctx.tol.order_window);
    let end = ctx.state.grid().end();
    let mut simp: f64 = 0.0;
    let mut inv: f64 = 0.0;
    for &x in cfg.identity_points.iter().chain([0.0, end].iter()) {
        simp = simp.max(sol.simplification_residual(x)?);
        inv = inv.max(sol.inverse_factor_residual(x)?);
    }
    ctx.checks.at_most("dynamical", "w_A(x,0)* Lambda* S^-1 - Lambda* (A*)^-1 S^-1 A", simp, ctx.tol.simplification);
    ctx.checks.note("dynamical", format!("same identity with right factor A^-1 instead of A: residual {inv:e}"));
    let mut der: f64 = 0.0;
    for &x in &cfg.identity_points {
        der = der.max(derivative_identity_residual(&ctx.state, x, 1e-4)?);
    }
    ctx.checks.at_most("dynamical", "(Lambda* S^-1)' identity, central differences", der, ctx.tol.derivative_identity);
    Ok("ok".into())
}

fn string_stage(ctx: &mut Context) -> cansys::Result<String> {
    let status = transformed_string(ctx)?;
    schrodinger_string(ctx)?;
    Ok(status)
}

/// String transform of the transformed factor `beta~` on the configured range.
fn transformed_string(ctx: &mut Context) -> cansys::Result<String> {
    let cfg = ctx.sc.string.clone();
    let st = ctx.state.clone();
    let end = cfg.range[1].min(st.grid().end());
    let start = cfg.range[0];
    if end <= start {
        return Ok("partial: string range outside the grid".into());
    }
    let nodes = ((end - start) / cfg.spacing).round() as usize + 1;
    let grid = Grid::new(start, end, nodes).map_err(|e| Error::GridMismatch(e.to_string()))?;
    let p = st.seed().signature().m1();
    let bt = {
        let s = st.clone();
        Arc::new(move |x: f64| s.transformed_beta(x).unwrap_or_else(|_| ComplexMatrix::from_element(p, 2 * p, Complex64::new(f64::NAN, f64::NAN))))
    };
    let transform = match StringTransform::from_beta(bt, grid) {
        Ok(t) => t,
        Err(e) => return Ok(format!("partial: string transform of beta~ not applicable ({e})")),
    };
    let floor = transform.min_ratio_derivative()?;
    if !(floor > 1e-8) {
        ctx.checks.note("string", format!("(theta1~^-1 theta2~)' vanishes (min singular value {floor:e}); kappa undefined for beta~"));
        return Ok("partial: string transform of beta~ not applicable".into());
    }
    let valid = transform.valid_grid();
    if !transform.is_complete() {
        ctx.checks.note("string", format!("theta1~ invertible only up to x = {}", valid.end()));
    }
    ctx.checks.at_most("string", "kappa - kappa* for beta~, max over valid nodes", transform.kappa_self_adjointness()?, ctx.tol.kappa);
    ctx.checks.at_least("string", "min eigenvalue of omega for beta~", transform.omega_min_eigenvalue(), 0.0);
    let init = initial_solution(st.seed())?;
    let lambda = complex(cfg.lambda);
    let w = st.transformed_fundamental_solution(lambda, &valid, |x| init.w(x, lambda))?;
    let y = valid.points().zip(w.values()).map(|(x, w)| Ok(st.transformed_beta(x)? * w)).collect::<cansys::Result<Vec<_>>>()?;
    let r = transform.string_residual(&SampledMatrixFunction::new(valid, y)?, lambda)?;
    ctx.checks.at_most("string", format!("(kappa Z')' - lambda omega Z for beta~ at lambda = {lambda}"), r, ctx.tol.string_residual);
    ctx.series.push(grid_series("kappa", "k", &valid, |x| transform.kappa(x))?);
    Ok("ok".into())
}

/// Schrodinger equation with the constant potential `u I` on `[0, L]` and the
/// string transform of its `vartheta`.
fn schrodinger_string(ctx: &mut Context) -> cansys::Result<()> {
    let cfg = ctx.sc.string.clone();
    let p = ctx.state.seed().signature().m1();
    let length = ctx.state.grid().end();
    let u = eye(p) * re(cfg.potential);
    let sgrid = Grid::with_spacing(length, 1e-3)?;
    let pot = u.clone();
    let schr = SchrodingerSystem::new(Arc::new(move |_x: f64| pot.clone()), sgrid, 4)?;
    let u0 = cfg.potential;
    ctx.checks.at_most("string", format!("B J B* - J1 for u = {u0} I"), schr.symplectic_defect(), ctx.tol.symplectic);
    ctx.checks.at_most("string", "vartheta J vartheta* and vartheta' J vartheta* - iI", schr.normalization_defect(), ctx.tol.symplectic);
    let sl = complex(cfg.schrodinger_lambda);
    let (_, res) = schr.verify_solution(sl);
    ctx.checks.at_most("string", format!("-Z'' + u Z - lambda Z at lambda = {sl}"), res, ctx.tol.schrodinger_residual);

    let mut comp = zeros(2 * p, 2 * p);
    for k in 0..p {
        comp[(k, p + k)] = re(1.0);
    }
    comp.view_mut((p, 0), (p, p)).copy_from(&u);
    let t1 = theta1(p);
    let vt = move |x: f64| matrix_exp(&(&comp * re(x))).expect("finite matrix").rows(0, p) * &t1;
    let grid = Grid::with_spacing(length, cfg.spacing)?;
    match StringTransform::new(Arc::new(vt), grid) {
        Ok(t) => {
            if !t.is_complete() {
                ctx.checks.note("string", format!("theta1 of the Schrodinger factor invertible only up to x = {}", t.valid_grid().end()));
            }
            ctx.checks.at_most("string", "kappa - kappa* for the Schrodinger factor", t.kappa_self_adjointness()?, ctx.tol.kappa);
        }
        Err(e) => ctx.checks.note("string", format!("string transform of the Schrodinger factor not applicable: {e}")),
    }
    Ok(())
}

fn volterra_stage(ctx: &mut Context) -> cansys::Result<String> {
    let cfg = ctx.sc.volterra.clone();
    let beta = ExponentialBeta { c: cfg.c, alpha: eye(1) };
    let system = make_beta_exponential(cfg.c, 0.0, &eye(1))?;
    let kernels = [cfg.nodes, 2 * cfg.nodes]
        .par_iter()
        .map(|&n| {
            let aux = build_auxiliaries(&beta, &Grid::new(0.0, cfg.length, n)?)?;
            kernel_series(&aux, cfg.max_terms, ctx.tol.tail)
        })
        .collect::<cansys::Result<Vec<_>>>()?;
    let coarse = &kernels[0];
    ctx.checks.at_most("volterra", format!("kernel tail bound after {} terms", coarse.terms()), coarse.tail_bound, ctx.tol.tail);
    ctx.checks.at_most("volterra", "series terms used", coarse.terms() as f64, cfg.max_terms as f64);
    let oracle_grid = Grid::with_spacing(cfg.length, 1e-2).map_err(|e| Error::GridMismatch(e.to_string()))?;
    let lambdas: Vec<Complex64> = cfg.lambdas.iter().map(|z| complex(*z)).collect();
    let errors = lambdas
        .par_iter()
        .map(|&lambda| {
            let w = fundamental_solution_oracle_substeps(&system, lambda, &oracle_grid, 20);
            let mu = Complex64::from(1.0) / lambda;
            let e: cansys::Result<Vec<f64>> =
                kernels.iter().map(|k| Ok(fro(&(w.last() - transfer_function(k, &beta, cfg.length, mu)?)))).collect();
            e.map(|e| (lambda, e[0], e[1]))
        })
        .collect::<cansys::Result<Vec<_>>>()?;
    for (lambda, e1, e2) in errors {
        ctx.checks.at_most("volterra", format!("W(l, lambda) - w_A(l, 1/lambda) at lambda = {lambda}, {} nodes", cfg.nodes), e1, ctx.tol.transfer);
        ctx.checks.at_least("volterra", format!("error ratio under node doubling at lambda = {lambda}"), e1 / e2, ctx.tol.refinement_ratio);
    }
    Ok("ok".into())
}
