//! Scenario files: TOML documents describing a seed, a grid, spectral
//! parameters and the stages to run.

use serde::{Deserialize, Serialize};

use cansys::num::dense::{c64, ComplexMatrix};
use cansys::Complex64;

/// Complex number written as `[re, im]`.
pub type C = [f64; 2];

pub fn complex(z: C) -> Complex64 {
    c64(z[0], z[1])
}

/// Matrix written as rows of `[re, im]` pairs.
pub type Mat = Vec<Vec<C>>;

pub fn matrix(m: &Mat) -> Result<ComplexMatrix, String> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || m.iter().any(|r| r.len() != cols) {
        return Err("matrix must be a non-empty list of equal-length rows".into());
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, k| complex(m[i][k])))
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: SeedSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub weyl: WeylSpec,
    #[serde(default)]
    pub dynamical: DynamicalSpec,
    #[serde(default)]
    pub string: StringSpec,
    #[serde(default)]
    pub volterra: VolterraSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// `n = p = 1`, `A = a`, `f1`, `f2` scalars.
    Scalar { a: C, c: f64, alpha: C, f1: C, f2: C },
    /// `A = [[xi, a], [0, xi]]` with `Q = [[0, q], [0, 0]]` and `c = 0`.
    Jordan {
        xi: f64,
        q: C,
        f: C,
        g: C,
        alpha: C,
        #[serde(default = "one")]
        s22: f64,
        #[serde(default = "one")]
        s11_margin: f64,
    },
    /// General data; `S(0)` from the Sylvester equation when omitted.
    Custom {
        a: Mat,
        c: f64,
        #[serde(default)]
        d: f64,
        alpha: Mat,
        f1: Mat,
        f2: Mat,
        #[serde(default)]
        s0: Option<Mat>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    #[serde(default)]
    pub points: Vec<C>,
    /// Horizontal line `Im lambda = im` sampled at `count` points.
    #[serde(default)]
    pub line: Option<LambdaLine>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaLine {
    pub im: f64,
    pub re_min: f64,
    pub re_max: f64,
    pub count: usize,
}

impl LambdaLine {
    pub fn points(&self) -> Vec<Complex64> {
        if self.count == 1 {
            return vec![c64(self.re_min, self.im)];
        }
        let h = (self.re_max - self.re_min) / (self.count - 1) as f64;
        (0..self.count).map(|k| c64(self.re_min + h * k as f64, self.im)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Build,
    Verify,
    Transform,
    Weyl,
    Dynamical,
    String,
    Volterra,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Verify => "verify",
            Stage::Transform => "transform",
            Stage::Weyl => "weyl",
            Stage::Dynamical => "dynamical",
            Stage::String => "string",
            Stage::Volterra => "volterra",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeylSpec {
    pub lambda: C,
    pub radii: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Grid spacing for the disk and `L^2` computations.
    pub spacing: f64,
}

impl Default for WeylSpec {
    fn default() -> Self {
        Self { lambda: [0.0, 1.0], radii: vec![0.5, 1.0, 2.0, 5.0], lengths: vec![1.0, 2.0, 4.0], spacing: 1e-3 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicalSpec {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub step: f64,
    pub identity_points: Vec<f64>,
}

impl Default for DynamicalSpec {
    fn default() -> Self {
        Self { x: vec![0.3, 0.7, 1.2, 1.6], t: vec![0.0, 0.5, 1.0], step: 0.02, identity_points: vec![0.25, 0.9, 1.5] }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct StringSpec {
    /// Interval on which the transformed factor is passed to the string form.
    pub range: [f64; 2],
    pub spacing: f64,
    pub lambda: C,
    /// Constant potential `u = potential * I` for the Schrodinger check.
    pub potential: f64,
    pub schrodinger_lambda: C,
}

impl Default for StringSpec {
    fn default() -> Self {
        Self { range: [0.5, 2.0], spacing: 1e-3, lambda: [0.0, 1.0], potential: -0.25, schrodinger_lambda: [1.0, 0.0] }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolterraSpec {
    pub c: f64,
    pub length: f64,
    pub nodes: usize,
    pub lambdas: Vec<C>,
    pub max_terms: usize,
}

impl Default for VolterraSpec {
    fn default() -> Self {
        Self { c: 0.5, length: 1.0, nodes: 400, lambdas: vec![[0.0, 1.0], [0.0, 2.0]], max_terms: 12 }
    }
}

/// Check thresholds. Upper bounds are multiplied by `--tol-scale`; the order
/// window and the refinement ratio are not.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identity: f64,
    pub closed_form_s: f64,
    pub closed_form_beta: f64,
    pub closed_form_v: f64,
    pub closed_form_phi: f64,
    pub isotropy: f64,
    pub normalization: f64,
    pub transformed_derivative: f64,
    pub transformed_oracle: f64,
    pub disk: f64,
    pub l2: f64,
    pub simplification: f64,
    pub derivative_identity: f64,
    pub order_window: f64,
    pub kappa: f64,
    pub string_residual: f64,
    pub symplectic: f64,
    pub schrodinger_residual: f64,
    pub transfer: f64,
    pub refinement_ratio: f64,
    pub tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-8,
            closed_form_s: 1e-7,
            closed_form_beta: 1e-7,
            closed_form_v: 1e-9,
            closed_form_phi: 1e-9,
            isotropy: 1e-10,
            normalization: 1e-6,
            transformed_derivative: 1e-5,
            transformed_oracle: 1e-5,
            disk: 1e-8,
            l2: 1e-6,
            simplification: 1e-9,
            derivative_identity: 1e-5,
            order_window: 0.3,
            kappa: 1e-10,
            string_residual: 1e-4,
            symplectic: 1e-9,
            schrodinger_residual: 1e-4,
            transfer: 5e-3,
            refinement_ratio: 3.0,
            tail: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            identity: self.identity * s,
            closed_form_s: self.closed_form_s * s,
            closed_form_beta: self.closed_form_beta * s,
            closed_form_v: self.closed_form_v * s,
            closed_form_phi: self.closed_form_phi * s,
            isotropy: self.isotropy * s,
            normalization: self.normalization * s,
            transformed_derivative: self.transformed_derivative * s,
            transformed_oracle: self.transformed_oracle * s,
            disk: self.disk * s,
            l2: self.l2 * s,
            simplification: self.simplification * s,
            derivative_identity: self.derivative_identity * s,
            order_window: self.order_window,
            kappa: self.kappa * s,
            string_residual: self.string_residual * s,
            symplectic: self.symplectic * s,
            schrodinger_residual: self.schrodinger_residual * s,
            transfer: self.transfer * s,
            refinement_ratio: self.refinement_ratio,
            tail: self.tail * s,
        }
    }
}

pub const BUNDLED: [(&str, &str); 4] = [
    ("example_7_1", include_str!("../scenarios/example_7_1.toml")),
    ("example_7_2", include_str!("../scenarios/example_7_2.toml")),
    ("positivity_violated", include_str!("../scenarios/positivity_violated.toml")),
    ("similarity_half", include_str!("../scenarios/similarity_half.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn parse(text: &str) -> Result<Scenario, String> {
    let sc: Scenario = toml::from_str(text).map_err(|e| e.to_string())?;
    sc.validate()?;
    Ok(sc)
}

impl Scenario {
    fn validate(&self) -> Result<(), String> {
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return Err("grid.length must be positive".into());
        }
        if self.grid.nodes < 3 {
            return Err("grid.nodes must be at least 3".into());
        }
        if self.stages.is_empty() {
            return Err("stages must not be empty".into());
        }
        if let Some(line) = &self.lambda.line {
            if line.count == 0 || !(line.re_max >= line.re_min) {
                return Err("lambda.line needs count > 0 and re_max >= re_min".into());
            }
        }
        if !(self.string.spacing > 0.0) || !(self.weyl.spacing > 0.0) {
            return Err("spacings must be positive".into());
        }
        if self.string.range[1] <= self.string.range[0] {
            return Err("string.range must be increasing".into());
        }
        if self.volterra.nodes < 3 || self.volterra.max_terms == 0 {
            return Err("volterra needs nodes >= 3 and max_terms >= 1".into());
        }
        Ok(())
    }
}
