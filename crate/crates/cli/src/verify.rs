//! Verification suite and the run report.

use anyhow::Context;
use bandlfd::criteria::{
    attainment_holds, check_bound_attainment, check_l_dominance, check_stochastic_dominance,
    default_lambda_grid, eta_grid_spanning, ATTAIN_TOL,
};
use bandlfd::{
    build_ratio, classify_regions, fixed_point_residual, DensityBand64, LfdSolution64,
    PlateauParams,
};
use serde::Serialize;

/// Pointwise slack when testing band membership of a solution.
pub const CONTAIN_TOL: f64 = 1e-9;
/// Residual limit in units of the termination tolerance.
pub const RESIDUAL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl std::str::FromStr for GridArg {
    type Err = String;

    /// `lo:hi:n`
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        let lo = num(parts[0])?;
        let hi = num(parts[1])?;
        let n = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("{:?}: {e}", parts[2]))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 {
            return Err(format!("need finite lo <= hi and n >= 1, got {s:?}"));
        }
        Ok(GridArg { lo, hi, n })
    }
}

impl GridArg {
    pub fn log_points(&self) -> Result<Vec<f64>, String> {
        if self.lo <= 0.0 {
            return Err(format!("log-spaced grid needs lo > 0, got {}", self.lo));
        }
        Ok(bandlfd::log_spaced(self.lo, self.hi, self.n))
    }

    pub fn linear_points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Log-spaced; defaults to 20 points in `[0.05, 20]`.
    pub lambda_grid: Option<GridArg>,
    /// Linear; defaults to 50 log-spaced points over the ratio range.
    pub eta_grid: Option<GridArg>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            lambda_grid: None,
            eta_grid: None,
            samples: 100,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub c0: f64,
    pub c1: f64,
    pub alpha: f64,
    pub alpha_escalated: bool,
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlateauSummary {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualCheck {
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainmentCheck {
    pub q0_in_band: bool,
    pub q1_in_band: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LDominanceCheck {
    pub n_samples: usize,
    pub lambda_points: usize,
    /// Worst `L_λ(Q) - max sampled L_λ`; absent without samples.
    pub margin: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StochasticCheck {
    pub skipped: bool,
    pub eta_points: usize,
    pub worst_violation_h0: f64,
    pub worst_violation_h1: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttainmentCheck {
    pub max_gap: f64,
    pub min_gap: f64,
    pub attain_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub residual: ResidualCheck,
    pub containment: ContainmentCheck,
    pub l_dominance: LDominanceCheck,
    pub stochastic_dominance: StochasticCheck,
    pub bound_attainment: AttainmentCheck,
}

impl Checks {
    pub fn all_pass(&self) -> bool {
        self.residual.pass
            && self.containment.pass
            && self.l_dominance.pass
            && self.stochastic_dominance.pass
            && self.bound_attainment.pass
    }
}

/// Demo-specific diagnostics.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Extra {
    HuberLevels {
        inv_c0_points: usize,
        c1_points: usize,
        lower_ratio_points: usize,
        other_points: usize,
        pass: bool,
    },
    SpectrumReference {
        q0_in_band: bool,
        q1_in_band: bool,
        /// `max_λ L_λ(reference) - L_λ(Q)`.
        max_excess: f64,
        pass: bool,
    },
}

impl Extra {
    pub fn pass(&self) -> bool {
        match self {
            Extra::HuberLevels { pass, .. } | Extra::SpectrumReference { pass, .. } => *pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub solution: SolutionSummary,
    pub kind: String,
    pub plateaus: Vec<PlateauSummary>,
    pub checks: Checks,
    pub extras: Vec<Extra>,
    pub all_pass: bool,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn table(&self) -> String {
        let mark = |p: bool| if p { "pass" } else { "FAIL" };
        let c = &self.checks;
        let mut out = format!(
            "c0 = {:.9}  c1 = {:.9}  alpha = {}{}  iterations = {}  kind = {}\n",
            self.solution.c0,
            self.solution.c1,
            self.solution.alpha,
            if self.solution.alpha_escalated {
                " (escalated)"
            } else {
                ""
            },
            self.solution.iterations,
            self.kind
        );
        let mut row = |name: &str, detail: String, pass: bool| {
            out.push_str(&format!("{:<22} {:<44} {}\n", name, detail, mark(pass)));
        };
        row(
            "residual",
            format!("{:.3e} <= {:.3e}", c.residual.value, c.residual.limit),
            c.residual.pass,
        );
        row("containment", String::new(), c.containment.pass);
        row(
            "l_lambda dominance",
            match c.l_dominance.margin {
                Some(m) => format!("{} samples, margin {:.3e}", c.l_dominance.n_samples, m),
                None => "no samples, bound side only".into(),
            },
            c.l_dominance.pass,
        );
        row(
            "stochastic dominance",
            if c.stochastic_dominance.skipped {
                "skipped (no samples)".into()
            } else {
                format!(
                    "worst {:.3e} / {:.3e}",
                    c.stochastic_dominance.worst_violation_h0,
                    c.stochastic_dominance.worst_violation_h1
                )
            },
            c.stochastic_dominance.pass,
        );
        row(
            "bound attainment",
            format!(
                "gap in [{:.3e}, {:.3e}]",
                c.bound_attainment.min_gap, c.bound_attainment.max_gap
            ),
            c.bound_attainment.pass,
        );
        for e in &self.extras {
            match e {
                Extra::HuberLevels {
                    other_points, pass, ..
                } => row(
                    "three-valued ratio",
                    format!("{other_points} stray points"),
                    *pass,
                ),
                Extra::SpectrumReference {
                    max_excess, pass, ..
                } => row(
                    "closed-form reference",
                    format!("excess {max_excess:.3e}"),
                    *pass,
                ),
            }
        }
        out.push_str(&format!("overall: {}\n", mark(self.all_pass)));
        out
    }
}

/// Runs every check on `sol` and assembles the report.
pub fn verify(
    command: &str,
    sol: &LfdSolution64,
    band0: &DensityBand64,
    band1: &DensityBand64,
    opts: &VerifyOptions,
) -> anyhow::Result<RunReport> {
    let mut notes = Vec::new();
    let lambdas = match opts.lambda_grid {
        Some(g) => g
            .log_points()
            .map_err(anyhow::Error::msg)
            .context("--lambda-grid")?,
        None => default_lambda_grid(),
    };
    let rt = build_ratio(sol);
    let etas = match opts.eta_grid {
        Some(g) => g.linear_points(),
        None => eta_grid_spanning(&rt, 50),
    };

    let residual = fixed_point_residual(sol, band0, band1)?;
    let limit = RESIDUAL_FACTOR * sol.tol;
    let residual = ResidualCheck {
        value: residual,
        limit,
        pass: residual <= limit,
    };

    let in0 = band0.contains(&sol.q0, CONTAIN_TOL)?;
    let in1 = band1.contains(&sol.q1, CONTAIN_TOL)?;
    let containment = ContainmentCheck {
        q0_in_band: in0,
        q1_in_band: in1,
        pass: in0 && in1,
    };

    let od = check_l_dominance(sol, band0, band1, &lambdas, opts.samples, opts.seed)?;
    let l_dominance = LDominanceCheck {
        n_samples: od.n_samples,
        lambda_points: lambdas.len(),
        margin: od.margin.is_finite().then_some(od.margin),
        pass: od.dominance_pass,
    };

    let stochastic_dominance = if opts.samples == 0 {
        notes.push("no samples: sampled checks skipped, residual and bound checks only".into());
        StochasticCheck {
            skipped: true,
            eta_points: etas.len(),
            worst_violation_h0: 0.0,
            worst_violation_h1: 0.0,
            pass: true,
        }
    } else {
        let sd = check_stochastic_dominance(sol, band0, band1, &etas, opts.samples, opts.seed)?;
        StochasticCheck {
            skipped: false,
            eta_points: etas.len(),
            worst_violation_h0: sd.worst_violation_h0,
            worst_violation_h1: sd.worst_violation_h1,
            pass: sd.pass,
        }
    };

    let records = check_bound_attainment(sol, band0, band1, &lambdas)?;
    let gaps = records.iter().map(|r| r.gap);
    let bound_attainment = AttainmentCheck {
        max_gap: gaps.clone().fold(f64::NEG_INFINITY, f64::max),
        min_gap: gaps.fold(f64::INFINITY, f64::min),
        attain_tol: ATTAIN_TOL,
        pass: attainment_holds(&records, ATTAIN_TOL),
    };

    let cls = classify_regions(&rt, &PlateauParams::default())?;
    let checks = Checks {
        residual,
        containment,
        l_dominance,
        stochastic_dominance,
        bound_attainment,
    };
    if sol.alpha_escalated {
        notes.push("alpha = 0 admitted no root; solved with alpha = 1".into());
    }
    Ok(RunReport {
        command: command.to_string(),
        solution: SolutionSummary {
            c0: sol.c0,
            c1: sol.c1,
            alpha: sol.alpha,
            alpha_escalated: sol.alpha_escalated,
            iterations: sol.iterations,
            residual: sol.residual,
            tol: sol.tol,
        },
        kind: cls.kind.to_string(),
        plateaus: cls
            .plateaus
            .iter()
            .map(|p| PlateauSummary {
                lo: p.interval.0,
                hi: p.interval.1,
                level: p.level,
                points: p.points(),
            })
            .collect(),
        all_pass: checks.all_pass(),
        checks,
        extras: Vec::new(),
        notes,
        files: Vec::new(),
    })
}

impl RunReport {
    pub fn push_extra(&mut self, extra: Extra) {
        self.all_pass &= extra.pass();
        self.extras.push(extra);
    }
}
