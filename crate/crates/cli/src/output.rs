//! Artifact writers and the solution file.

use std::path::Path;

use anyhow::{bail, Context};
use bandlfd::{Density64, FigureRow, LfdSolution64, SharedGrid};
use serde::{Deserialize, Serialize};

pub const LFD_CSV: &str = "lfd.csv";
pub const SOLUTION_JSON: &str = "solution.json";
pub const REPORT_JSON: &str = "report.json";
pub const SPEC_TOML: &str = "spec.toml";
pub const REFERENCE_CSV: &str = "reference.csv";

/// `inf`, `-inf` and `nan` are spelled out; everything else is the shortest
/// round-tripping decimal.
pub fn fmt_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

pub fn write_lfd_csv(path: &Path, rows: &[FigureRow<f64>]) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record([
        "omega",
        "p0_lower",
        "p0_upper",
        "p1_lower",
        "p1_upper",
        "q0",
        "q1",
        "log_ratio",
    ])?;
    for r in rows {
        w.write_record(
            [
                r.omega,
                r.p0_lower,
                r.p0_upper,
                r.p1_lower,
                r.p1_upper,
                r.q0,
                r.q1,
                r.log_ratio,
            ]
            .map(fmt_value),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `omega, q0_ref, q1_ref` columns.
pub fn write_reference_csv(
    path: &Path,
    omega: &[f64],
    q0: &[f64],
    q1: &[f64],
) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["omega", "q0_ref", "q1_ref"])?;
    for k in 0..omega.len() {
        w.write_record([omega[k], q0[k], q1[k]].map(fmt_value))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// Serialised solver output; enough to re-run every check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub c0: f64,
    pub c1: f64,
    pub alpha: f64,
    pub alpha_escalated: bool,
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
    pub tv_history: Vec<f64>,
    pub q0: Vec<f64>,
    pub q1: Vec<f64>,
}

impl SolutionFile {
    pub fn from_solution(sol: &LfdSolution64) -> Self {
        Self {
            c0: sol.c0,
            c1: sol.c1,
            alpha: sol.alpha,
            alpha_escalated: sol.alpha_escalated,
            iterations: sol.iterations,
            residual: sol.residual,
            tol: sol.tol,
            tv_history: sol.tv_history.clone(),
            q0: sol.q0.values().to_vec(),
            q1: sol.q1.values().to_vec(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read solution {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid solution {}", path.display()))
    }

    pub fn into_solution(self, grid: &SharedGrid<f64>) -> anyhow::Result<LfdSolution64> {
        for (name, v) in [
            ("c0", self.c0),
            ("c1", self.c1),
            ("alpha", self.alpha),
            ("tol", self.tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                bail!("solution: {name} must be finite and >= 0, got {v}");
            }
        }
        if self.tol == 0.0 {
            bail!("solution: tol must be positive");
        }
        let q0 = Density64::new(grid, self.q0).context("solution q0")?;
        let q1 = Density64::new(grid, self.q1).context("solution q1")?;
        Ok(LfdSolution64 {
            q0,
            q1,
            c0: self.c0,
            c1: self.c1,
            alpha: self.alpha,
            alpha_escalated: self.alpha_escalated,
            iterations: self.iterations,
            residual: self.residual,
            tol: self.tol,
            tv_history: self.tv_history,
        })
    }
}
