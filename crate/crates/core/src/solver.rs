//! Fixed-point computation of least favorable densities for band models.
//!
//! The least favorable pair satisfies
//!
//! ```text
//! q0 = min{p0'', max{c0 (α q0 + q1), p0'}}
//! q1 = min{p1'', max{c1 (q0 + α q1), p1'}}
//! ```
//!
//! for some `α >= 0` and `c0, c1 ∈ (0, 1/α]`. [`solve_lfds`] alternates the
//! two updates, each of which is a clip projection: the scale `c` is the
//! root of the monotone, continuous normalisation function
//! `g(c; r) = ∫ min{p'', max{c r, p'}} dμ - 1` found by bisection.

use crate::band::DensityBand;
use crate::error::{LfdError, Result};
use crate::grid::{mass_tol, Density};
use crate::scalar::{lit, to_f64, Scalar};

/// Pointwise slack used when accepting user-supplied initial densities.
pub const INIT_BAND_TOL: f64 = 1e-12;
/// Allowed per-iteration increase of the total-variation sequence.
pub const TV_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub alpha: T,
    /// Sup-norm threshold on successive iterates.
    pub tol: T,
    /// Accepted `|g(c)|` at the root.
    pub root_tol: T,
    pub max_iter: usize,
    /// Largest scale tried while bracketing the root.
    pub c_max: T,
    /// Retry with `α = 1` when `α = 0` admits no root.
    pub auto_alpha: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::zero(),
            tol: lit(1e-6),
            root_tol: lit(1e-10),
            max_iter: 100,
            c_max: lit(1e12),
            auto_alpha: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(LfdError::InvalidConfig(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.tol > T::zero() && self.root_tol > T::zero()) {
            return Err(LfdError::InvalidConfig(
                "tol and root_tol must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(LfdError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.c_max > T::one()) {
            return Err(LfdError::InvalidConfig("c_max must exceed 1".into()));
        }
        Ok(())
    }

    fn with_alpha(&self, alpha: T) -> Self {
        Self { alpha, ..*self }
    }
}

/// Converged least favorable pair with its constants and diagnostics.
#[derive(Debug, Clone)]
pub struct LfdSolution<T> {
    pub q0: Density<T>,
    pub q1: Density<T>,
    pub c0: T,
    pub c1: T,
    /// The `α` actually used (after any escalation).
    pub alpha: T,
    /// `true` when `α = 0` had no root and the solver fell back to `α = 1`.
    pub alpha_escalated: bool,
    pub iterations: usize,
    /// Sup-norm defect of the fixed-point system at the returned pair.
    pub residual: T,
    /// Termination tolerance the run used.
    pub tol: T,
    /// `‖q0ⁿ - q1ⁿ‖₁` for `n = 0, 1, …`.
    pub tv_history: Vec<T>,
}

#[inline]
fn clip<T: Scalar>(x: T, lo: T, hi: T) -> T {
    hi.min(x.max(lo))
}

fn clipped<T: Scalar>(c: T, reference: &[T], band: &DensityBand<T>) -> Vec<T> {
    reference
        .iter()
        .zip(band.lower().iter().zip(band.upper()))
        .map(|(&r, (&lo, &hi))| clip(c * r, lo, hi))
        .collect()
}

fn g_unchecked<T: Scalar>(c: T, reference: &[T], band: &DensityBand<T>) -> T {
    let lower = band.lower();
    let upper = band.upper();
    band.grid()
        .sum_by(|k| clip(c * reference[k], lower[k], upper[k]))
        - T::one()
}

/// `g(c) = ∫ min{p'', max{c·reference, p'}} dμ - 1`.
pub fn g_eval<T: Scalar>(c: T, reference: &[T], band: &DensityBand<T>) -> Result<T> {
    band.grid().check_len(reference.len())?;
    Ok(g_unchecked(c, reference, band))
}

/// Positive root of `g` by geometric bracketing and bisection.
///
/// The bracket starts at `1/α` (or 1 when `α = 0`) and doubles until `g`
/// turns nonnegative or `c_max` is reached.
pub fn find_root_c<T: Scalar>(
    reference: &[T],
    band: &DensityBand<T>,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    band.grid().check_len(reference.len())?;
    let tol = cfg.root_tol;
    let g = |c: T| g_unchecked(c, reference, band);

    let g0 = g(T::zero());
    if g0 > tol.max(mass_tol()) {
        return Err(LfdError::ProjectionInfeasible(format!(
            "lower envelope mass exceeds one (g(0) = {g0})"
        )));
    }

    let mut hi = if cfg.alpha > T::zero() {
        T::one() / cfg.alpha
    } else {
        T::one()
    }
    .min(cfg.c_max);
    let mut lo = T::zero();
    let mut g_hi = g(hi);
    while g_hi < -tol {
        if hi >= cfg.c_max {
            return Err(LfdError::NoRoot {
                c_max: to_f64(cfg.c_max),
                g_at_max: to_f64(g_hi),
            });
        }
        lo = hi;
        hi = (hi + hi).min(cfg.c_max);
        g_hi = g(hi);
    }
    if g_hi <= tol {
        return Ok(hi);
    }

    // g(lo) < 0 <= g(hi) with |g(hi)| > tol
    let two = lit::<T>(2.0);
    for _ in 0..2000 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid.abs() <= tol {
            return Ok(mid);
        }
        if g_mid < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Bracket collapsed at machine precision; `hi` keeps g >= 0.
    Ok(hi)
}

/// Projects a nonnegative reference onto the band:
/// `min{p'', max{c*·reference, p'}}` with `c*` the root of `g`.
pub fn clip_project<T: Scalar>(
    reference: &[T],
    band: &DensityBand<T>,
    cfg: &SolverConfig<T>,
) -> Result<(Density<T>, T)> {
    let c = find_root_c(reference, band, cfg)?;
    let values = clipped(c, reference, band);
    Ok((Density::from_trusted(band.grid(), values), c))
}

fn mixture<T: Scalar>(a: T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&u, &v)| a * u + v).collect()
}

/// Runs the alternating fixed-point iteration.
///
/// Without `init`, both densities start as the projection of the constant
/// function 1 onto their band. With `cfg.auto_alpha` and `cfg.alpha = 0`, a
/// missing root triggers one rerun at `α = 1`.
pub fn solve_lfds<T: Scalar>(
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    cfg: &SolverConfig<T>,
    init: Option<(&Density<T>, &Density<T>)>,
) -> Result<LfdSolution<T>> {
    cfg.validate()?;
    band0.check_grid(band1.grid())?;
    if let Some((i0, i1)) = init {
        if !band0.contains(i0, lit(INIT_BAND_TOL))? || !band1.contains(i1, lit(INIT_BAND_TOL))? {
            return Err(LfdError::InfeasibleInit);
        }
    }
    match iterate(band0, band1, cfg, init) {
        Err(LfdError::NoRoot { .. }) if cfg.auto_alpha && cfg.alpha == T::zero() => {
            let mut sol = iterate(band0, band1, &cfg.with_alpha(T::one()), init)?;
            sol.alpha_escalated = true;
            Ok(sol)
        }
        other => other,
    }
}

fn iterate<T: Scalar>(
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    cfg: &SolverConfig<T>,
    init: Option<(&Density<T>, &Density<T>)>,
) -> Result<LfdSolution<T>> {
    let alpha = cfg.alpha;
    let (mut q0, mut q1) = match init {
        Some((a, b)) => (a.clone(), b.clone()),
        None => {
            let ones = vec![T::one(); band0.grid().len()];
            (
                clip_project(&ones, band0, cfg)?.0,
                clip_project(&ones, band1, cfg)?.0,
            )
        }
    };
    let mut tv_history = vec![q0.l1_distance(&q1)];
    let mut last_step = T::infinity();

    for n in 1..=cfg.max_iter {
        let ref0 = mixture(alpha, q0.values(), q1.values());
        let (next0, k0) = clip_project(&ref0, band0, cfg)?;
        let ref1 = mixture(alpha, q1.values(), next0.values());
        let (next1, k1) = clip_project(&ref1, band1, cfg)?;

        last_step = next0.sup_distance(&q0).max(next1.sup_distance(&q1));
        tv_history.push(next0.l1_distance(&next1));
        q0 = next0;
        q1 = next1;

        if last_step <= cfg.tol {
            let mut sol = LfdSolution {
                q0,
                q1,
                c0: k0,
                c1: k1,
                alpha,
                alpha_escalated: false,
                iterations: n,
                residual: T::zero(),
                tol: cfg.tol,
                tv_history,
            };
            sol.residual = fixed_point_residual(&sol, band0, band1)?;
            return Ok(sol);
        }
    }
    Err(LfdError::MaxIterExceeded {
        iterations: cfg.max_iter,
        last_step: to_f64(last_step),
        tv_history: tv_history.into_iter().map(to_f64).collect(),
    })
}

/// Sup-norm defect of the fixed-point system at `(q0, q1, c0, c1, α)`.
pub fn fixed_point_residual<T: Scalar>(
    sol: &LfdSolution<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
) -> Result<T> {
    band0.check_grid(sol.q0.grid())?;
    band1.check_grid(sol.q1.grid())?;
    let q0 = sol.q0.values();
    let q1 = sol.q1.values();
    let a = sol.alpha;
    let mut worst = T::zero();
    for k in 0..q0.len() {
        let rhs0 = clip(
            sol.c0 * (a * q0[k] + q1[k]),
            band0.lower()[k],
            band0.upper()[k],
        );
        let rhs1 = clip(
            sol.c1 * (q0[k] + a * q1[k]),
            band1.lower()[k],
            band1.upper()[k],
        );
        worst = worst.max((q0[k] - rhs0).abs()).max((q1[k] - rhs1).abs());
    }
    Ok(worst)
}
