//! Optimality criteria for candidate least favorable pairs.
//!
//! A pair `(Q0, Q1)` is least favorable when it maximises
//! `L_λ(P0, P1) = ∫ min{p0, λ p1} dμ` over the two bands for every `λ >= 0`.
//! At desk scale this is certified by a sandwich: sampled band members must
//! not beat the candidate, and the candidate must reach the dual upper
//! bound `∫ min{q̂0, λ q̂1} dμ + v0 ε0 + λ v1 ε1` with
//! `q̂i = vi p'_i + (1 - vi) p''_i`. The stochastic-dominance check covers
//! the single-sample error probabilities at every threshold.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::band::DensityBand;
use crate::error::{LfdError, Result};
use crate::grid::Density;
use crate::scalar::{lit, to_f64, Scalar};
use crate::solver::LfdSolution;
use crate::statistic::RatioTable;

/// Slack for the sampled-pair comparisons.
pub const CHECK_TOL: f64 = 1e-7;
/// Allowed gap between `L_λ` at the solution and the best dual bound.
/// Continuum identities only hold up to O(grid spacing).
pub const ATTAIN_TOL: f64 = 1e-4;

/// `∫ min{p0, λ p1} dμ`.
pub fn l_lambda<T: Scalar>(p0: &Density<T>, p1: &Density<T>, lam: T) -> Result<T> {
    if !(lam >= T::zero()) {
        return Err(LfdError::NegativeLambda(to_f64(lam)));
    }
    p0.check_same_grid(p1)?;
    let (a, b) = (p0.values(), p1.values());
    Ok(p0.grid().sum_by(|k| a[k].min(lam * b[k])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DivergenceKind {
    KullbackLeibler,
    ReverseKullbackLeibler,
    TotalVariation,
    SquaredHellinger,
    ChiSquared,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 5] = [
        DivergenceKind::KullbackLeibler,
        DivergenceKind::ReverseKullbackLeibler,
        DivergenceKind::TotalVariation,
        DivergenceKind::SquaredHellinger,
        DivergenceKind::ChiSquared,
    ];
}

impl FromStr for DivergenceKind {
    type Err = LfdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "kl" | "kullback-leibler" => Ok(Self::KullbackLeibler),
            "reverse-kl" | "reverse-kullback-leibler" => Ok(Self::ReverseKullbackLeibler),
            "tv" | "total-variation" => Ok(Self::TotalVariation),
            "hellinger" | "squared-hellinger" => Ok(Self::SquaredHellinger),
            "chi2" | "chi-squared" => Ok(Self::ChiSquared),
            _ => Err(LfdError::UnknownKind(s.to_string())),
        }
    }
}

/// `D_f(P0 ‖ P1) = ∫_{p1>0} f(p0/p1) p1 dμ + f'(∞) P0[p1 = 0]`.
///
/// Generators: KL `t ln t`, reverse KL `-ln t`, total variation `|1 - t|`
/// (so the result is the L¹ distance), squared Hellinger `(√t - 1)²`,
/// chi-squared `(t - 1)²`.
pub fn f_divergence<T: Scalar>(
    p0: &Density<T>,
    p1: &Density<T>,
    kind: DivergenceKind,
) -> Result<T> {
    use DivergenceKind::*;
    p0.check_same_grid(p1)?;
    let (a, b) = (p0.values(), p1.values());
    let zero = T::zero();
    let inf = T::infinity();
    let total = p0.grid().sum_by(|k| {
        let (x, y) = (a[k], b[k]);
        if y > zero {
            match kind {
                KullbackLeibler => {
                    if x > zero {
                        x * (x / y).ln()
                    } else {
                        zero
                    }
                }
                ReverseKullbackLeibler => {
                    if x > zero {
                        y * (y / x).ln()
                    } else {
                        inf
                    }
                }
                TotalVariation => (x - y).abs(),
                SquaredHellinger => {
                    let d = x.sqrt() - y.sqrt();
                    d * d
                }
                ChiSquared => (x - y) * (x - y) / y,
            }
        } else if x > zero {
            // boundary term f'(∞)·p0
            match kind {
                KullbackLeibler | ChiSquared => inf,
                ReverseKullbackLeibler => zero,
                TotalVariation | SquaredHellinger => x,
            }
        } else {
            zero
        }
    });
    Ok(total)
}

/// Dual upper bound on `L_λ` over the two bands for weights `v0, v1 ∈ [0, 1]`.
///
/// Infinite upper envelopes with nonzero weight make `q̂i` infinite at that
/// point; the pointwise minimum stays finite unless both sides are.
pub fn band_upper_bound<T: Scalar>(
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    lam: T,
    v0: T,
    v1: T,
) -> Result<T> {
    if !(lam >= T::zero()) {
        return Err(LfdError::NegativeLambda(to_f64(lam)));
    }
    band0.check_grid(band1.grid())?;
    let unit = |v: T| v >= T::zero() && v <= T::one();
    if !unit(v0) || !unit(v1) {
        return Err(LfdError::InvalidRange(format!(
            "bound weights must lie in [0, 1], got ({v0}, {v1})"
        )));
    }
    let mix = |v: T, lo: T, hi: T| {
        let w = T::one() - v;
        if w == T::zero() {
            lo
        } else {
            v * lo + w * hi
        }
    };
    let (l0, u0, l1, u1) = (band0.lower(), band0.upper(), band1.lower(), band1.upper());
    let integral = band0.grid().sum_by(|k| {
        let a = mix(v0, l0[k], u0[k]);
        if lam == T::zero() {
            return T::zero();
        }
        a.min(lam * mix(v1, l1[k], u1[k]))
    });
    Ok(integral + v0 * band0.contamination_rate() + lam * v1 * band1.contamination_rate())
}

/// Minimum of [`band_upper_bound`] over the corners `(v0, v1) ∈ {0, 1}²`,
/// with the minimising corner.
pub fn corner_bound<T: Scalar>(
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    lam: T,
) -> Result<(T, (u8, u8))> {
    let mut best = (T::infinity(), (0u8, 0u8));
    for v0 in 0..2u8 {
        for v1 in 0..2u8 {
            let b = band_upper_bound(band0, band1, lam, lit(v0 as f64), lit(v1 as f64))?;
            if b < best.0 {
                best = (b, (v0, v1));
            }
        }
    }
    Ok(best)
}

/// `n` points from `lo` to `hi`, equispaced in log scale.
pub fn log_spaced<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / lit((n - 1) as f64);
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + step * lit(i as f64)).exp()
                    }
                })
                .collect()
        }
    }
}

/// The λ grid used by the acceptance checks: 20 log-spaced points in `[0.05, 20]`.
pub fn default_lambda_grid<T: Scalar>() -> Vec<T> {
    log_spaced(lit(0.05), lit(20.0), 20)
}

/// `n` thresholds log-spaced over the positive finite range of the ratio.
pub fn eta_grid_spanning<T: Scalar>(rt: &RatioTable<T>, n: usize) -> Vec<T> {
    match rt.finite_range() {
        Some((lo, hi)) if lo < hi => log_spaced(lo, hi, n),
        Some((lo, _)) => vec![lo; n.min(1)],
        None => vec![T::one(); n.min(1)],
    }
}

/// `n` seeded pairs of band members, deterministic in `seed`.
pub fn sample_pairs<T: Scalar>(
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    n: usize,
    seed: u64,
) -> Result<Vec<(Density<T>, Density<T>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (s0, s1): (u64, u64) = (rng.gen(), rng.gen());
            Ok((
                band0.sample_feasible(s0)?.density,
                band1.sample_feasible(s1)?.density,
            ))
        })
        .collect()
}

/// Outcome of the `L_λ` sandwich check.
#[derive(Debug, Clone)]
pub struct OptimalityReport<T> {
    pub lambda_grid: Vec<T>,
    pub l_at_solution: Vec<T>,
    /// `None` when no pairs were sampled.
    pub max_l_over_samples: Vec<Option<T>>,
    pub bound_min: Vec<T>,
    pub n_samples: usize,
    pub dominance_pass: bool,
    /// Worst `L_λ(Q) - max sampled L_λ` over the grid (+∞ without samples).
    pub margin: T,
}

/// Checks that no sampled pair beats `(q0, q1)` in `L_λ` and that
/// `(q0, q1)` stays under the best corner bound, for every `λ` in the grid.
pub fn l_dominance<T: Scalar>(
    q0: &Density<T>,
    q1: &Density<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    lambda_grid: &[T],
    pairs: &[(Density<T>, Density<T>)],
) -> Result<OptimalityReport<T>> {
    let tol = lit::<T>(CHECK_TOL);
    let mut report = OptimalityReport {
        lambda_grid: lambda_grid.to_vec(),
        l_at_solution: Vec::with_capacity(lambda_grid.len()),
        max_l_over_samples: Vec::with_capacity(lambda_grid.len()),
        bound_min: Vec::with_capacity(lambda_grid.len()),
        n_samples: pairs.len(),
        dominance_pass: true,
        margin: T::infinity(),
    };
    for &lam in lambda_grid {
        let l = l_lambda(q0, q1, lam)?;
        let (bound, _) = corner_bound(band0, band1, lam)?;
        let mut best: Option<T> = None;
        for (p0, p1) in pairs {
            let v = l_lambda(p0, p1, lam)?;
            best = Some(best.map_or(v, |b| b.max(v)));
        }
        if let Some(b) = best {
            report.margin = report.margin.min(l - b);
            if b > l + tol {
                report.dominance_pass = false;
            }
        }
        if l > bound + tol {
            report.dominance_pass = false;
        }
        report.l_at_solution.push(l);
        report.max_l_over_samples.push(best);
        report.bound_min.push(bound);
    }
    Ok(report)
}

/// [`l_dominance`] for a solver output against `n_samples` seeded pairs.
pub fn check_l_dominance<T: Scalar>(
    sol: &LfdSolution<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    lambda_grid: &[T],
    n_samples: usize,
    seed: u64,
) -> Result<OptimalityReport<T>> {
    let pairs = sample_pairs(band0, band1, n_samples, seed)?;
    l_dominance(&sol.q0, &sol.q1, band0, band1, lambda_grid, &pairs)
}

/// Outcome of the stochastic-dominance check.
#[derive(Debug, Clone)]
pub struct DominanceReport<T> {
    pub eta_grid: Vec<T>,
    /// `max(0, max P0[r > η] - Q0[r > η])` over samples and thresholds.
    pub worst_violation_h0: T,
    /// `max(0, max P1[r <= η] - Q1[r <= η])`.
    pub worst_violation_h1: T,
    pub pass: bool,
}

/// Checks `Q0[r > η] >= P0[r > η]` and `Q1[r <= η] >= P1[r <= η]` for the
/// ratio `r = q1/q0` of the candidate pair.
pub fn stochastic_dominance<T: Scalar>(
    q0: &Density<T>,
    q1: &Density<T>,
    eta_grid: &[T],
    pairs: &[(Density<T>, Density<T>)],
) -> Result<DominanceReport<T>> {
    let rt = RatioTable::from_pair(q0, q1)?;
    let grid = q0.grid();
    let mut worst0 = T::zero();
    let mut worst1 = T::zero();
    for &eta in eta_grid {
        let reject: Vec<bool> = (0..grid.len()).map(|k| rt.rejects(k, eta)).collect();
        let above = |p: &Density<T>| {
            let v = p.values();
            grid.sum_by(|k| if reject[k] { v[k] } else { T::zero() })
        };
        let below = |p: &Density<T>| {
            let v = p.values();
            grid.sum_by(|k| if reject[k] { T::zero() } else { v[k] })
        };
        let (q0_above, q1_below) = (above(q0), below(q1));
        for (p0, p1) in pairs {
            p0.check_same_grid(q0)?;
            p1.check_same_grid(q0)?;
            worst0 = worst0.max(above(p0) - q0_above);
            worst1 = worst1.max(below(p1) - q1_below);
        }
    }
    let tol = lit::<T>(CHECK_TOL);
    Ok(DominanceReport {
        eta_grid: eta_grid.to_vec(),
        worst_violation_h0: worst0,
        worst_violation_h1: worst1,
        pass: worst0 <= tol && worst1 <= tol,
    })
}

/// [`stochastic_dominance`] for a solver output against `n_samples` seeded pairs.
pub fn check_stochastic_dominance<T: Scalar>(
    sol: &LfdSolution<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    eta_grid: &[T],
    n_samples: usize,
    seed: u64,
) -> Result<DominanceReport<T>> {
    let pairs = sample_pairs(band0, band1, n_samples, seed)?;
    stochastic_dominance(&sol.q0, &sol.q1, eta_grid, &pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRecord<T> {
    pub lambda: T,
    pub l: T,
    pub best_bound: T,
    /// `best_bound - l`.
    pub gap: T,
    /// Minimising corner `(v0, v1)`.
    pub corner: (u8, u8),
}

/// `L_λ(q0, q1)` against the best corner bound for each `λ`.
pub fn bound_attainment<T: Scalar>(
    q0: &Density<T>,
    q1: &Density<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    lambda_grid: &[T],
) -> Result<Vec<BoundRecord<T>>> {
    lambda_grid
        .iter()
        .map(|&lam| {
            let l = l_lambda(q0, q1, lam)?;
            let (best_bound, corner) = corner_bound(band0, band1, lam)?;
            Ok(BoundRecord {
                lambda: lam,
                l,
                best_bound,
                gap: best_bound - l,
                corner,
            })
        })
        .collect()
}

pub fn check_bound_attainment<T: Scalar>(
    sol: &LfdSolution<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    lambda_grid: &[T],
) -> Result<Vec<BoundRecord<T>>> {
    bound_attainment(&sol.q0, &sol.q1, band0, band1, lambda_grid)
}

/// `-check_tol <= gap <= attain_tol` for every record.
pub fn attainment_holds<T: Scalar>(records: &[BoundRecord<T>], attain_tol: T) -> bool {
    let slack = lit::<T>(CHECK_TOL);
    records
        .iter()
        .all(|r| r.gap >= -slack && r.gap <= attain_tol)
}
