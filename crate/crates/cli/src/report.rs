//! Report structure, JSON rendering and CSV series.

use std::fmt::Write as _;

use serde::Serialize;

use cansys::num::dense::ComplexMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `value <= threshold`.
    Upper,
    /// `value >= threshold`.
    Lower,
    /// `|value - target| <= threshold`.
    Window,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub stage: String,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageStatus {
    pub stage: String,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesInfo {
    pub name: String,
    pub rows: usize,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub scenario_sha256: String,
    pub nodes: usize,
    pub tol_scale: f64,
    pub tolerances: crate::scenario::Tolerances,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub passed: bool,
    pub provenance: Provenance,
    pub stages: Vec<StageStatus>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub series: Vec<SeriesInfo>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Collects checks for one stage.
#[derive(Debug, Default)]
pub struct Checks {
    pub items: Vec<Check>,
    pub notes: Vec<String>,
}

impl Checks {
    fn push(&mut self, stage: &str, name: String, value: f64, threshold: f64, bound: Bound, target: Option<f64>) {
        let pass = match bound {
            Bound::Upper => value <= threshold,
            Bound::Lower => value >= threshold,
            Bound::Window => (value - target.unwrap_or(0.0)).abs() <= threshold,
        };
        self.items.push(Check { stage: stage.into(), name, value, threshold, bound, target, pass });
    }

    pub fn at_most(&mut self, stage: &str, name: impl Into<String>, value: f64, tol: f64) {
        self.push(stage, name.into(), value, tol, Bound::Upper, None);
    }

    pub fn at_least(&mut self, stage: &str, name: impl Into<String>, value: f64, tol: f64) {
        self.push(stage, name.into(), value, tol, Bound::Lower, None);
    }

    pub fn within(&mut self, stage: &str, name: impl Into<String>, value: f64, target: f64, window: f64) {
        self.push(stage, name.into(), value, window, Bound::Window, Some(target));
    }

    pub fn note(&mut self, stage: &str, text: impl Into<String>) {
        self.notes.push(format!("{stage}: {}", text.into()));
    }
}

/// A data series: one row per abscissa, `Re`/`Im` columns per matrix entry.
#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub axes: Vec<String>,
    pub entry_prefix: String,
    pub rows: Vec<(Vec<f64>, ComplexMatrix)>,
}

impl Series {
    pub fn columns(&self) -> Vec<String> {
        let mut cols = self.axes.clone();
        if let Some((_, m)) = self.rows.first() {
            for i in 0..m.nrows() {
                for k in 0..m.ncols() {
                    cols.push(format!("re_{}{}{}", self.entry_prefix, i + 1, k + 1));
                    cols.push(format!("im_{}{}{}", self.entry_prefix, i + 1, k + 1));
                }
            }
        }
        cols
    }

    pub fn info(&self) -> SeriesInfo {
        SeriesInfo { name: self.name.clone(), rows: self.rows.len(), columns: self.columns() }
    }

    /// CSV with a header row, `.` decimals, shortest round-trip digits and LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns().join(",");
        out.push('\n');
        for (axes, m) in &self.rows {
            let mut fields: Vec<String> = axes.iter().map(|v| format!("{v:?}")).collect();
            for i in 0..m.nrows() {
                for k in 0..m.ncols() {
                    fields.push(format!("{:?}", m[(i, k)].re));
                    fields.push(format!("{:?}", m[(i, k)].im));
                }
            }
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cansys::num::dense::{c64, from_rows};

    #[test]
    fn csv_layout() {
        let m = from_rows(&[&[c64(1.0, -0.5), c64(0.1, 0.0)], &[c64(0.0, 2.0), c64(3.0, 4.0)]]);
        let s = Series { name: "h".into(), axes: vec!["x".into()], entry_prefix: "h".into(), rows: vec![(vec![0.0], m.clone()), (vec![0.5], m)] };
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 9);
        assert_eq!(lines[1], "0.0,1.0,-0.5,0.1,0.0,0.0,2.0,3.0,4.0");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn check_bounds() {
        let mut c = Checks::default();
        c.at_most("s", "a", 1.0, 2.0);
        c.at_least("s", "b", 1.0, 2.0);
        c.within("s", "c", 2.1, 2.0, 0.3);
        assert_eq!(c.items.iter().map(|x| x.pass).collect::<Vec<_>>(), vec![true, false, true]);
    }
}
