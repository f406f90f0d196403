//! Sample-space discretisation, the dominating measure and densities on it.
//!
//! A [`Grid`] holds ordered sample points together with positive quadrature
//! weights; every integral against the dominating measure becomes the
//! weighted sum `Σ_k w_k f(ω_k)`. Uniform grids use the composite midpoint
//! rule on the interior (weight = spacing) and half-cells at both ends, so
//! the weights add up to the length of the support. Counting measure on a
//! finite sample space is a grid whose weights are all one.

use std::sync::Arc;

use crate::error::{LfdError, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// Tolerance on `|mass - 1|` for objects asserted to be probability densities.
pub const MASS_TOL: f64 = 1e-8;

/// [`MASS_TOL`], widened to a few hundred ulps for low-precision scalars.
pub fn mass_tol<T: Scalar>() -> T {
    lit::<T>(MASS_TOL).max(T::epsilon() * lit(256.0))
}

/// Sample points and quadrature weights approximating the dominating measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
    weights: Vec<T>,
    support_lo: T,
    support_hi: T,
}

impl<T: Scalar> Grid<T> {
    /// `n` equispaced points on `[lo, hi]` (both ends included).
    pub fn uniform(lo: T, hi: T, n: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(LfdError::InvalidRange(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(LfdError::InvalidRange(format!("need n >= 2, got {n}")));
        }
        let h = (hi - lo) / lit::<T>((n - 1) as f64);
        let half = h / lit(2.0);
        let points = (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + h * lit::<T>(k as f64)
                }
            })
            .collect();
        let weights = (0..n)
            .map(|k| if k == 0 || k == n - 1 { half } else { h })
            .collect();
        Ok(Self {
            points,
            weights,
            support_lo: lo,
            support_hi: hi,
        })
    }

    /// Arbitrary strictly increasing points with strictly positive weights.
    pub fn from_parts(points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(LfdError::LengthMismatch {
                expected: points.len(),
                actual: weights.len(),
            });
        }
        if points.len() < 2 {
            return Err(LfdError::InvalidRange(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(k) = points.iter().position(|p| !p.is_finite()) {
            return Err(LfdError::NonFinite { index: k });
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LfdError::InvalidRange(
                "points must be strictly increasing".into(),
            ));
        }
        if let Some(k) = weights
            .iter()
            .position(|w| !(*w > T::zero()) || !w.is_finite())
        {
            return Err(LfdError::InvalidRange(format!(
                "weight at index {k} must be finite and positive"
            )));
        }
        let support_lo = points[0];
        let support_hi = points[points.len() - 1];
        Ok(Self {
            points,
            weights,
            support_lo,
            support_hi,
        })
    }

    /// Counting measure on the given sample points.
    pub fn counting(points: Vec<T>) -> Result<Self> {
        let weights = vec![T::one(); points.len()];
        Self::from_parts(points, weights)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn support(&self) -> (T, T) {
        (self.support_lo, self.support_hi)
    }

    /// Total measure of the support.
    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Quadrature of `f` without finiteness checks. Infinite entries yield
    /// an infinite result, which callers handling `+∞` envelopes rely on.
    pub(crate) fn weighted_sum(&self, f: &[T]) -> T {
        debug_assert_eq!(f.len(), self.weights.len());
        self.weights.iter().zip(f).map(|(&w, &v)| w * v).sum()
    }

    /// Quadrature of a pointwise function of the grid index.
    pub(crate) fn sum_by(&self, mut f: impl FnMut(usize) -> T) -> T {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, &w)| w * f(k))
            .sum()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(LfdError::LengthMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Shorthand for grids shared between densities and bands.
pub type SharedGrid<T> = Arc<Grid<T>>;

/// `n` equispaced points on `[lo, hi]`, ready to share.
pub fn make_uniform_grid<T: Scalar>(lo: T, hi: T, n: usize) -> Result<SharedGrid<T>> {
    Grid::uniform(lo, hi, n).map(Arc::new)
}

pub(crate) fn same_grid<T: Scalar>(a: &SharedGrid<T>, b: &SharedGrid<T>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `Σ_k w_k f(ω_k)`. Rejects non-finite integrands.
pub fn integrate<T: Scalar>(f: &[T], grid: &Grid<T>) -> Result<T> {
    grid.check_len(f.len())?;
    if let Some(k) = f.iter().position(|v| !v.is_finite()) {
        return Err(LfdError::NonFinite { index: k });
    }
    Ok(grid.weighted_sum(f))
}

/// Nonnegative function on a grid with its cached quadrature mass.
#[derive(Debug, Clone)]
pub struct Density<T> {
    grid: SharedGrid<T>,
    values: Vec<T>,
    mass: T,
}

impl<T: Scalar> Density<T> {
    /// Wraps values without rescaling. Values must be finite and `>= 0`;
    /// the mass is not required to be one.
    pub fn new(grid: &SharedGrid<T>, values: Vec<T>) -> Result<Self> {
        grid.check_len(values.len())?;
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(LfdError::NonFinite { index: k });
            }
            if *v < T::zero() {
                return Err(LfdError::Negative { index: k });
            }
        }
        let mass = grid.weighted_sum(&values);
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            mass,
        })
    }

    /// Wraps values and divides them by their quadrature mass.
    pub fn normalized(grid: &SharedGrid<T>, values: Vec<T>) -> Result<Self> {
        let raw = Self::new(grid, values)?;
        if !(raw.mass > T::zero()) {
            return Err(LfdError::InvalidRange(
                "cannot normalise a function with zero mass".into(),
            ));
        }
        let mass = raw.mass;
        Self::new(grid, raw.values.into_iter().map(|v| v / mass).collect())
    }

    /// Evaluates `f` at every grid point and normalises.
    pub fn from_fn(grid: &SharedGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::normalized(grid, grid.points().iter().map(|&x| f(x)).collect())
    }

    pub(crate) fn from_trusted(grid: &SharedGrid<T>, values: Vec<T>) -> Self {
        let mass = grid.weighted_sum(&values);
        Self {
            grid: Arc::clone(grid),
            values,
            mass,
        }
    }

    pub fn grid(&self) -> &SharedGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    /// `|mass - 1| <= tol`.
    pub fn is_probability(&self, tol: T) -> bool {
        (self.mass - T::one()).abs() <= tol
    }

    /// Grid-mismatch guard for binary operations.
    pub fn check_same_grid(&self, other: &Density<T>) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(LfdError::GridMismatch)
        }
    }

    /// Pointwise mixture `a·self + b·other`.
    pub fn mix(&self, a: T, other: &Density<T>, b: T) -> Result<Density<T>> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Density::new(&self.grid, values)
    }

    /// Sup-norm distance.
    pub fn sup_distance(&self, other: &Density<T>) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| (x - y).abs())
            .fold(T::zero(), T::max)
    }

    /// `∫ |self - other| dμ`.
    pub fn l1_distance(&self, other: &Density<T>) -> T {
        self.grid
            .sum_by(|k| (self.values[k] - other.values[k]).abs())
    }
}

/// Gaussian density `N(mean, sd²)` renormalised on the grid.
pub fn gaussian_density<T: Scalar>(grid: &SharedGrid<T>, mean: T, sd: T) -> Result<Density<T>> {
    if !(sd > T::zero()) || !sd.is_finite() {
        return Err(LfdError::NonPositiveSd(to_f64(sd)));
    }
    let norm = T::one() / (sd * lit::<T>((2.0 * std::f64::consts::PI).sqrt()));
    Density::from_fn(grid, |x| {
        let z = (x - mean) / sd;
        norm * (-(z * z) / lit(2.0)).exp()
    })
}

fn check_nonnegative_support<T: Scalar>(grid: &Grid<T>) -> Result<()> {
    let (lo, _) = grid.support();
    if lo < T::zero() {
        return Err(LfdError::NegativeSupport(to_f64(lo)));
    }
    Ok(())
}

/// Energy `|X|²` of complex Gaussian noise with power `sigw2`: an
/// exponential density with mean `sigw2`.
pub fn exp_energy_density_h0<T: Scalar>(grid: &SharedGrid<T>, sigw2: T) -> Result<Density<T>> {
    check_nonnegative_support(grid)?;
    if !(sigw2 > T::zero()) {
        return Err(LfdError::ParameterOrder(format!(
            "noise power must be positive, got {sigw2}"
        )));
    }
    Density::from_fn(grid, |x| (-x / sigw2).exp() / sigw2)
}

/// Energy of a complex Gaussian signal of power `sigs2 - sigw2` in noise of
/// power `sigw2`: difference of exponentials, zero at the origin.
pub fn exp_energy_density_h1<T: Scalar>(
    grid: &SharedGrid<T>,
    sigw2: T,
    sigs2: T,
) -> Result<Density<T>> {
    check_nonnegative_support(grid)?;
    if !(sigw2 > T::zero() && sigs2 > sigw2) {
        return Err(LfdError::ParameterOrder(format!(
            "need sigs2 > sigw2 > 0, got sigw2 = {sigw2}, sigs2 = {sigs2}"
        )));
    }
    let scale = T::one() / (sigs2 - sigw2);
    Density::from_fn(grid, |x| {
        (scale * ((-x / sigs2).exp() - (-x / sigw2).exp())).max(T::zero())
    })
}
