//! Density bands `p' <= p <= p''` and feasible members of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LfdError, Result};
use crate::grid::{mass_tol, same_grid, Density, SharedGrid};
use crate::scalar::{lit, to_f64, Scalar};
use crate::solver::{clip_project, SolverConfig};

/// Pointwise lower/upper envelopes defining one composite hypothesis.
///
/// The upper envelope may be `+∞` at any grid point; `min{p'', x}` then
/// simply returns `x`.
#[derive(Debug, Clone)]
pub struct DensityBand<T> {
    grid: SharedGrid<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    lower_mass: T,
    upper_mass: T,
}

/// A band member drawn by [`DensityBand::sample_feasible`].
#[derive(Debug, Clone)]
pub struct FeasibleSample<T> {
    pub density: Density<T>,
    /// Scale applied to the random reference before clipping.
    pub projection_constant: T,
}

impl<T: Scalar> DensityBand<T> {
    /// Validates `0 <= lower <= upper` pointwise, `P'(Ω) <= 1` and `P''(Ω) >= 1`.
    pub fn from_bounds(grid: &SharedGrid<T>, lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        grid.check_len(lower.len())?;
        grid.check_len(upper.len())?;
        for (k, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() {
                return Err(LfdError::NonFinite { index: k });
            }
            if lo < T::zero() {
                return Err(LfdError::Negative { index: k });
            }
            if hi.is_nan() {
                return Err(LfdError::NonFinite { index: k });
            }
            if lo > hi {
                return Err(LfdError::OrderingViolation { index: k });
            }
        }
        let lower_mass = grid.weighted_sum(&lower);
        let upper_mass = grid.weighted_sum(&upper);
        let tol = mass_tol::<T>();
        if lower_mass > T::one() + tol {
            return Err(LfdError::LowerMassExceedsOne {
                mass: to_f64(lower_mass),
            });
        }
        if upper_mass < T::one() - tol {
            return Err(LfdError::UpperMassBelowOne {
                mass: to_f64(upper_mass),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            lower,
            upper,
            lower_mass,
            upper_mass,
        })
    }

    /// `(1 - eps)·nominal <= p <= cap`, with `cap = None` meaning `+∞`.
    pub fn from_contamination(nominal: &Density<T>, eps: T, cap: Option<&[T]>) -> Result<Self> {
        if !(eps >= T::zero() && eps <= T::one()) {
            return Err(LfdError::InvalidEps(to_f64(eps)));
        }
        require_unit_mass(nominal)?;
        let keep = T::one() - eps;
        let lower: Vec<T> = nominal.values().iter().map(|&v| keep * v).collect();
        let upper = match cap {
            None => vec![T::infinity(); lower.len()],
            Some(cap) => cap.to_vec(),
        };
        Self::from_bounds(nominal.grid(), lower, upper)
    }

    /// `lo_factor·nominal <= p <= hi_factor·nominal`. An infinite
    /// `hi_factor` gives an infinite upper envelope everywhere.
    pub fn from_scaled_nominal(nominal: &Density<T>, lo_factor: T, hi_factor: T) -> Result<Self> {
        if !(lo_factor >= T::zero() && lo_factor <= T::one() && hi_factor >= T::one()) {
            return Err(LfdError::ParameterOrder(format!(
                "need 0 <= lo_factor <= 1 <= hi_factor, got {lo_factor} and {hi_factor}"
            )));
        }
        require_unit_mass(nominal)?;
        let lower = nominal.values().iter().map(|&v| lo_factor * v).collect();
        let upper = if hi_factor.is_infinite() {
            vec![T::infinity(); nominal.values().len()]
        } else {
            nominal.values().iter().map(|&v| hi_factor * v).collect()
        };
        Self::from_bounds(nominal.grid(), lower, upper)
    }

    /// Pointwise minimum and maximum over a family of densities.
    pub fn from_envelope(family: &[Density<T>]) -> Result<Self> {
        let first = family.first().ok_or(LfdError::EmptyFamily)?;
        let mut lower = first.values().to_vec();
        let mut upper = first.values().to_vec();
        for member in &family[1..] {
            first.check_same_grid(member)?;
            for (k, &v) in member.values().iter().enumerate() {
                lower[k] = lower[k].min(v);
                upper[k] = upper[k].max(v);
            }
        }
        Self::from_bounds(first.grid(), lower, upper)
    }

    pub fn grid(&self) -> &SharedGrid<T> {
        &self.grid
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn lower_mass(&self) -> T {
        self.lower_mass
    }

    /// May be `+∞`.
    pub fn upper_mass(&self) -> T {
        self.upper_mass
    }

    pub fn has_infinite_upper(&self) -> bool {
        self.upper.iter().any(|u| u.is_infinite())
    }

    /// `ε = 1 - P'(Ω)`, clamped to `[0, 1]`.
    pub fn contamination_rate(&self) -> T {
        (T::one() - self.lower_mass).max(T::zero()).min(T::one())
    }

    pub(crate) fn check_grid(&self, grid: &SharedGrid<T>) -> Result<()> {
        if same_grid(&self.grid, grid) {
            Ok(())
        } else {
            Err(LfdError::GridMismatch)
        }
    }

    /// Membership test with pointwise slack `band_tol` and mass slack [`mass_tol`].
    pub fn contains(&self, density: &Density<T>, band_tol: T) -> Result<bool> {
        self.check_grid(density.grid())?;
        if !density.is_probability(mass_tol()) {
            return Ok(false);
        }
        let inside = density
            .values()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&p, (&lo, &hi))| p >= lo - band_tol && p <= hi + band_tol);
        Ok(inside)
    }

    /// Draws a random member of the band, deterministic in `seed`.
    ///
    /// A reference function is drawn pointwise uniformly between the lower
    /// envelope and `min(upper, M_cap)` (with `M_cap` ten times the largest
    /// lower value) and then clip-projected onto the band.
    pub fn sample_feasible(&self, seed: u64) -> Result<FeasibleSample<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_lower = self.lower.iter().copied().fold(T::zero(), T::max);
        let m_cap = if max_lower > T::zero() {
            lit::<T>(10.0) * max_lower
        } else {
            lit::<T>(10.0) / self.grid.total_weight()
        };
        let reference: Vec<T> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                let top = hi.min(m_cap).max(lo);
                let u: f64 = rng.gen();
                lo + (top - lo) * lit(u)
            })
            .collect();
        let (density, c) =
            clip_project(&reference, self, &SolverConfig::default()).map_err(|e| match e {
                LfdError::NoRoot { .. } => LfdError::ProjectionInfeasible(e.to_string()),
                other => other,
            })?;
        Ok(FeasibleSample {
            density,
            projection_constant: c,
        })
    }
}

fn require_unit_mass<T: Scalar>(nominal: &Density<T>) -> Result<()> {
    if nominal.is_probability(mass_tol()) {
        Ok(())
    } else {
        Err(LfdError::InvalidRange(format!(
            "nominal must have unit mass, got {}",
            nominal.mass()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{exp_energy_density_h0, gaussian_density, make_uniform_grid, MASS_TOL};
    use proptest::prelude::*;

    fn gauss() -> (SharedGrid<f64>, Density<f64>, Density<f64>) {
        let g = make_uniform_grid(-10.0, 10.0, 2001).unwrap();
        let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
        let p1 = gaussian_density(&g, 1.0, 2.0).unwrap();
        (g, p0, p1)
    }

    #[test]
    fn singleton_and_vacuous_bands() {
        let (g, p0, _) = gauss();
        let single = DensityBand::from_bounds(&g, p0.values().to_vec(), p0.values().to_vec());
        let single = single.unwrap();
        assert!(single.contamination_rate() < 1e-12);
        assert!(single.contains(&p0, 0.0).unwrap());

        let vac = DensityBand::from_bounds(&g, vec![0.0; 2001], vec![f64::INFINITY; 2001]).unwrap();
        assert_eq!(vac.contamination_rate(), 1.0);
        assert!(vac.upper_mass().is_infinite());
    }

    #[test]
    fn rejects_invalid_bounds() {
        let (g, p0, _) = gauss();
        let over: Vec<f64> = p0.values().iter().map(|v| 1.1 * v).collect();
        assert!(matches!(
            DensityBand::from_bounds(&g, over.clone(), over),
            Err(LfdError::LowerMassExceedsOne { .. })
        ));
        let under: Vec<f64> = p0.values().iter().map(|v| 0.9 * v).collect();
        assert!(matches!(
            DensityBand::from_bounds(&g, under.clone(), under),
            Err(LfdError::UpperMassBelowOne { .. })
        ));
        let mut upper = p0.values().to_vec();
        upper[7] = 0.0;
        assert!(matches!(
            DensityBand::from_bounds(&g, p0.values().to_vec(), upper),
            Err(LfdError::OrderingViolation { index: 7 })
        ));
    }

    #[test]
    fn contamination_constructor() {
        let (_, p0, _) = gauss();
        let huber = DensityBand::from_contamination(&p0, 0.2, None).unwrap();
        assert!((huber.lower_mass() - 0.8).abs() < 1e-12);
        assert!((huber.contamination_rate() - 0.2).abs() < MASS_TOL);
        let zero = DensityBand::from_contamination(&p0, 0.0, None).unwrap();
        assert_eq!(zero.lower(), p0.values());
        assert!(zero.contamination_rate() < 1e-12);

        let cap: Vec<f64> = p0.values().iter().map(|v| 10.0 * v).collect();
        let clip = DensityBand::from_contamination(&p0, 0.2, Some(&cap)).unwrap();
        assert!((clip.upper_mass() - 10.0).abs() < 1e-10);

        assert!(matches!(
            DensityBand::from_contamination(&p0, 1.5, None),
            Err(LfdError::InvalidEps(_))
        ));
        let low: Vec<f64> = p0.values().iter().map(|v| 0.5 * v).collect();
        assert!(matches!(
            DensityBand::from_contamination(&p0, 0.2, Some(&low)),
            Err(LfdError::OrderingViolation { .. })
        ));
    }

    #[test]
    fn scaled_nominal_constructor() {
        let (_, p0, _) = gauss();
        let b = DensityBand::from_scaled_nominal(&p0, 0.8, 1.5).unwrap();
        assert!((b.contamination_rate() - 0.2).abs() < 1e-12);
        assert!((b.upper_mass() - 1.5).abs() < 1e-12);
        for (lo, hi) in [(0.8, 1.2), (0.8, 2.5), (1.0, 1.0)] {
            assert!(DensityBand::from_scaled_nominal(&p0, lo, hi).is_ok());
        }
        assert!(matches!(
            DensityBand::from_scaled_nominal(&p0, 1.2, 0.8),
            Err(LfdError::ParameterOrder(_))
        ));
        let inf = DensityBand::from_scaled_nominal(&p0, 0.8, f64::INFINITY).unwrap();
        assert!(inf.upper().iter().all(|u| u.is_infinite()));
    }

    #[test]
    fn envelope_contains_members() {
        let (_, p0, p1) = gauss();
        let env = DensityBand::from_envelope(&[p0.clone(), p1.clone()]).unwrap();
        assert!(env.contains(&p0, 0.0).unwrap());
        assert!(env.contains(&p1, 0.0).unwrap());
        let single = DensityBand::from_envelope(std::slice::from_ref(&p0)).unwrap();
        assert!(single.contamination_rate() < 1e-12);
        assert!(matches!(
            DensityBand::<f64>::from_envelope(&[]),
            Err(LfdError::EmptyFamily)
        ));
        let other = make_uniform_grid(0.0, 30.0, 2001).unwrap();
        let e = exp_energy_density_h0(&other, 1.0).unwrap();
        assert!(matches!(
            DensityBand::from_envelope(&[p0, e]),
            Err(LfdError::GridMismatch)
        ));
    }

    #[test]
    fn spectrum_envelope_over_noise_power() {
        let g = make_uniform_grid(0.0, 30.0, 3000).unwrap();
        let family: Vec<_> = (0..21)
            .map(|i| exp_energy_density_h0(&g, 1.0 + i as f64 / 20.0).unwrap())
            .collect();
        let env = DensityBand::from_envelope(&family).unwrap();
        for member in &family {
            assert!(env.contains(member, 0.0).unwrap());
        }
        assert!(env.lower_mass() < 1.0 && env.upper_mass() > 1.0);
    }

    #[test]
    fn lower_alone_is_not_a_member() {
        let (g, p0, _) = gauss();
        let b = DensityBand::from_scaled_nominal(&p0, 0.8, 1.5).unwrap();
        let lower = Density::new(&g, b.lower().to_vec()).unwrap();
        assert!(!b.contains(&lower, 0.0).unwrap());
    }

    #[test]
    fn sampling_singleton_returns_member() {
        let (g, p0, _) = gauss();
        let b = DensityBand::from_bounds(&g, p0.values().to_vec(), p0.values().to_vec()).unwrap();
        for seed in [0, 1, 99] {
            let s = b.sample_feasible(seed).unwrap();
            assert_eq!(s.density.values(), p0.values());
        }
    }

    #[test]
    fn sampling_is_deterministic_and_distinct() {
        let (_, p0, _) = gauss();
        let b = DensityBand::from_scaled_nominal(&p0, 0.8, 1.5).unwrap();
        let a1 = b.sample_feasible(1).unwrap();
        let a2 = b.sample_feasible(1).unwrap();
        let b1 = b.sample_feasible(2).unwrap();
        assert_eq!(a1.density.values(), a2.density.values());
        assert!(a1.density.sup_distance(&b1.density) > 0.0);
        assert!(b.contains(&a1.density, 1e-12).unwrap());
        assert!(b.contains(&b1.density, 1e-12).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn samples_are_feasible(
            seed in any::<u64>(),
            eps in 0.0f64..0.6,
            hi in prop_oneof![Just(f64::INFINITY), 1.05f64..5.0],
            mean in -2.0f64..2.0,
        ) {
            let g = make_uniform_grid(-10.0, 10.0, 401).unwrap();
            let p = gaussian_density(&g, mean, 1.5).unwrap();
            let b = DensityBand::from_scaled_nominal(&p, 1.0 - eps, hi).unwrap();
            prop_assert!((b.contamination_rate() - eps).abs() <= MASS_TOL);
            let s = b.sample_feasible(seed).unwrap();
            prop_assert!((s.density.mass() - 1.0).abs() <= 1e-8);
            prop_assert!(b.contains(&s.density, 1e-12).unwrap());
        }
    }
}
