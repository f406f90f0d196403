//! The `solve`, `demo` and `check` commands.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use bandlfd::criteria::{default_lambda_grid, CHECK_TOL};
use bandlfd::{
    build_ratio, export_figure_data, l_lambda, ratio_level_counts, solve_lfds, Density64,
    DensityBand64, LfdError, LfdSolution64, SolverConfig64,
};

use crate::demo::{spectrum_reference, Demo};
use crate::output::{
    write_json, write_lfd_csv, write_reference_csv, SolutionFile, LFD_CSV, REFERENCE_CSV,
    REPORT_JSON, SOLUTION_JSON, SPEC_TOML,
};
use crate::spec::SpecFile;
use crate::verify::{verify, Extra, RunReport, VerifyOptions, CONTAIN_TOL};

/// Relative tolerance for matching ratio levels in the Huber demo.
pub const LEVEL_RTOL: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

/// A command that could not produce a report.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input, including solver configurations without a root.
    Input(anyhow::Error),
    /// The solver ran but did not converge.
    NotConverged(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::NotConverged(_) => EXIT_VERIFY,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "error: {e:#}"),
            Failure::NotConverged(e) => write!(f, "solver did not converge: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<LfdError> for Failure {
    fn from(e: LfdError) -> Self {
        match e {
            LfdError::MaxIterExceeded { .. } => Failure::NotConverged(e.into()),
            other => Failure::Input(other.into()),
        }
    }
}

/// Exit code for a finished report.
pub fn report_exit_code(report: &RunReport) -> i32 {
    if report.all_pass {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveFlags {
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub no_auto_alpha: bool,
}

impl SolveFlags {
    pub fn config(&self) -> SolverConfig64 {
        let d = SolverConfig64::default();
        SolverConfig64 {
            alpha: self.alpha.unwrap_or(d.alpha),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            auto_alpha: !self.no_auto_alpha,
            ..d
        }
    }
}

fn prepare_out(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn solve_and_write(
    command: &str,
    spec: &SpecFile,
    out: &Path,
    flags: &SolveFlags,
    opts: &VerifyOptions,
) -> Result<(RunReport, LfdSolution64, DensityBand64, DensityBand64), Failure> {
    let (_, b0, b1) = spec.build()?;
    let sol = solve_lfds(&b0, &b1, &flags.config(), None)?;
    let mut report = verify(command, &sol, &b0, &b1, opts)?;
    prepare_out(out)?;

    let rt = build_ratio(&sol);
    let csv_path = out.join(LFD_CSV);
    write_lfd_csv(&csv_path, &export_figure_data(&sol, &b0, &b1, &rt))?;
    let sol_path = out.join(SOLUTION_JSON);
    write_json(&sol_path, &SolutionFile::from_solution(&sol))?;
    report.files.push(csv_path.display().to_string());
    report.files.push(sol_path.display().to_string());
    Ok((report, sol, b0, b1))
}

fn finish(mut report: RunReport, out: &Path) -> Result<RunReport, Failure> {
    let path = out.join(REPORT_JSON);
    report.files.push(path.display().to_string());
    write_json(&path, &report)?;
    Ok(report)
}

pub fn cmd_solve(
    spec_path: &Path,
    out: &Path,
    flags: &SolveFlags,
    opts: &VerifyOptions,
) -> Result<RunReport, Failure> {
    let spec = SpecFile::load(spec_path)?;
    let (report, ..) = solve_and_write("solve", &spec, out, flags, opts)?;
    finish(report, out)
}

pub fn cmd_demo(
    demo: Demo,
    out: &Path,
    flags: &SolveFlags,
    opts: &VerifyOptions,
) -> Result<RunReport, Failure> {
    let spec = demo.spec();
    let (mut report, sol, b0, b1) =
        solve_and_write(&format!("demo {demo}"), &spec, out, flags, opts)?;

    let spec_path = out.join(SPEC_TOML);
    std::fs::write(&spec_path, spec.to_toml()?)
        .with_context(|| format!("cannot write {}", spec_path.display()))?;
    report.files.push(spec_path.display().to_string());

    match demo {
        Demo::Huber => {
            let c = ratio_level_counts(&sol, &b0, &b1, LEVEL_RTOL)?;
            report.push_extra(Extra::HuberLevels {
                inv_c0_points: c.inv_c0,
                c1_points: c.c1,
                lower_ratio_points: c.lower_ratio,
                other_points: c.other,
                pass: c.is_three_valued(),
            });
        }
        Demo::Spectrum => {
            let grid = sol.q0.grid();
            let (r0, r1): (Vec<f64>, Vec<f64>) =
                grid.points().iter().map(|&x| spectrum_reference(x)).unzip();
            let ref_path = out.join(REFERENCE_CSV);
            write_reference_csv(&ref_path, grid.points(), &r0, &r1)?;
            report.files.push(ref_path.display().to_string());
            report.push_extra(spectrum_extra(&sol, &b0, &b1, r0, r1)?);
        }
        _ => {}
    }
    finish(report, out)
}

/// Band membership of the closed-form pair (renormalised on the grid) and
/// `L_λ(reference) <= L_λ(Q) + check_tol` on the default λ grid.
fn spectrum_extra(
    sol: &LfdSolution64,
    b0: &DensityBand64,
    b1: &DensityBand64,
    r0: Vec<f64>,
    r1: Vec<f64>,
) -> anyhow::Result<Extra> {
    let grid = sol.q0.grid();
    let q0 = Density64::normalized(grid, r0)?;
    let q1 = Density64::normalized(grid, r1)?;
    let in0 = b0.contains(&q0, CONTAIN_TOL)?;
    let in1 = b1.contains(&q1, CONTAIN_TOL)?;
    let mut excess = f64::NEG_INFINITY;
    for lam in default_lambda_grid::<f64>() {
        excess = excess.max(l_lambda(&q0, &q1, lam)? - l_lambda(&sol.q0, &sol.q1, lam)?);
    }
    Ok(Extra::SpectrumReference {
        q0_in_band: in0,
        q1_in_band: in1,
        max_excess: excess,
        pass: in0 && in1 && excess <= CHECK_TOL,
    })
}

pub fn cmd_check(
    solution_path: &Path,
    spec_path: &Path,
    out: Option<&PathBuf>,
    opts: &VerifyOptions,
) -> Result<RunReport, Failure> {
    let spec = SpecFile::load(spec_path)?;
    let (grid, b0, b1) = spec.build()?;
    let file = SolutionFile::load(solution_path)?;
    if file.q0.len() != grid.len() || file.q1.len() != grid.len() {
        return Err(Failure::Input(anyhow!(
            "solution has {} / {} points but the spec grid has {}",
            file.q0.len(),
            file.q1.len(),
            grid.len()
        )));
    }
    let sol = file.into_solution(&grid)?;
    let report = verify("check", &sol, &b0, &b1, opts)?;
    match out {
        Some(dir) => {
            prepare_out(dir)?;
            finish(report, dir)
        }
        None => Ok(report),
    }
}
