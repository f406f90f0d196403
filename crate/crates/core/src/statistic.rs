//! The robust likelihood-ratio test derived from a least favorable pair.

use crate::band::DensityBand;
use crate::error::{LfdError, Result};
use crate::grid::{Density, SharedGrid};
use crate::scalar::{lit, Scalar};
use crate::solver::LfdSolution;

/// Relative width around a threshold inside which a ratio counts as a tie.
/// Ties take the `δ = 0` branch.
pub const TIE_RTOL: f64 = 1e-9;

/// Pointwise likelihood ratio `q1/q0`.
///
/// `q0 = 0 < q1` gives `+∞`, `q1 = 0 < q0` gives 0, and points where both
/// vanish are undefined (stored as NaN).
#[derive(Debug, Clone)]
pub struct RatioTable<T> {
    grid: SharedGrid<T>,
    ratio: Vec<T>,
    log_ratio: Vec<T>,
    // quadrature mass of (q0 + q1)/2 per point
    mid_mass: Vec<T>,
}

impl<T: Scalar> RatioTable<T> {
    pub fn from_pair(q0: &Density<T>, q1: &Density<T>) -> Result<Self> {
        q0.check_same_grid(q1)?;
        let ratio: Vec<T> = q0
            .values()
            .iter()
            .zip(q1.values())
            .map(|(&a, &b)| match (a > T::zero(), b > T::zero()) {
                (true, _) => b / a,
                (false, true) => T::infinity(),
                (false, false) => T::nan(),
            })
            .collect();
        let log_ratio = ratio.iter().map(|r| r.ln()).collect();
        let half = lit::<T>(0.5);
        let mid_mass = q0
            .values()
            .iter()
            .zip(q1.values())
            .zip(q0.grid().weights())
            .map(|((&a, &b), &w)| half * w * (a + b))
            .collect();
        Ok(Self {
            grid: q0.grid().clone(),
            ratio,
            log_ratio,
            mid_mass,
        })
    }

    pub fn grid(&self) -> &SharedGrid<T> {
        &self.grid
    }

    pub fn ratio(&self) -> &[T] {
        &self.ratio
    }

    pub fn log_ratio(&self) -> &[T] {
        &self.log_ratio
    }

    pub fn is_defined(&self, k: usize) -> bool {
        !self.ratio[k].is_nan()
    }

    /// Smallest positive and largest finite ratio, if any.
    pub fn finite_range(&self) -> Option<(T, T)> {
        let finite = self
            .ratio
            .iter()
            .copied()
            .filter(|r| r.is_finite() && *r > T::zero());
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for r in finite {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Index range left after trimming `tail_mass / 2` of `(q0 + q1)/2`
    /// from each end.
    pub fn central_range(&self, tail_mass: T) -> (usize, usize) {
        let n = self.mid_mass.len();
        let total: T = self.mid_mass.iter().copied().sum();
        let cut = tail_mass * lit(0.5) * total;
        let mut acc = T::zero();
        let mut a = 0;
        while a + 1 < n && acc + self.mid_mass[a] <= cut {
            acc = acc + self.mid_mass[a];
            a += 1;
        }
        acc = T::zero();
        let mut b = n - 1;
        while b > a && acc + self.mid_mass[b] <= cut {
            acc = acc + self.mid_mass[b];
            b -= 1;
        }
        (a, b)
    }

    /// `δ = 1` iff the ratio exceeds `eta` by more than the tie width.
    pub(crate) fn rejects(&self, k: usize, eta: T) -> bool {
        let r = self.ratio[k];
        !r.is_nan() && r > eta * (T::one() + lit(TIE_RTOL))
    }
}

/// Ratio table of a solver output.
pub fn build_ratio<T: Scalar>(sol: &LfdSolution<T>) -> RatioTable<T> {
    RatioTable::from_pair(&sol.q0, &sol.q1).expect("solution densities share a grid")
}

/// Robust test shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Nominal,
    Clipped,
    Censored,
    Compressed,
    Other,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Nominal => "nominal",
            TestKind::Clipped => "clipped",
            TestKind::Censored => "censored",
            TestKind::Compressed => "compressed",
            TestKind::Other => "other",
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maximal run of near-constant likelihood ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau<T> {
    /// First and last grid index of the run.
    pub start: usize,
    pub end: usize,
    /// Sample-space interval `[ω_a, ω_b]`.
    pub interval: (T, T),
    pub level: T,
}

impl<T> Plateau<T> {
    pub fn points(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone)]
pub struct RegionClassification<T> {
    pub plateaus: Vec<Plateau<T>>,
    pub kind: TestKind,
}

#[derive(Debug, Clone, Copy)]
pub struct PlateauParams<T> {
    /// Allowed `(max - min) / level` on a plateau.
    pub plateau_tol: T,
    pub min_plateau_points: usize,
    /// Ratio levels counted as "around one".
    pub censor_window: (T, T),
    /// Probability of `(q0 + q1)/2` trimmed from the tails before judging
    /// which plateaus are extremal.
    pub tail_mass: T,
}

impl<T: Scalar> Default for PlateauParams<T> {
    fn default() -> Self {
        Self {
            plateau_tol: lit(1e-3),
            min_plateau_points: 5,
            censor_window: (lit(0.5), lit(2.0)),
            tail_mass: lit(0.05),
        }
    }
}

fn find_plateaus<T: Scalar>(rt: &RatioTable<T>, params: &PlateauParams<T>) -> Vec<Plateau<T>> {
    let r = rt.ratio();
    let pts = rt.grid().points();
    let usable = |k: usize| r[k].is_finite() && r[k] > T::zero();
    let mut out = Vec::new();
    let mut start = 0;
    while start < r.len() {
        if !usable(start) {
            start += 1;
            continue;
        }
        let (mut lo, mut hi) = (r[start], r[start]);
        let mut end = start;
        while end + 1 < r.len() && usable(end + 1) {
            let v = r[end + 1];
            let (nlo, nhi) = (lo.min(v), hi.max(v));
            if nhi - nlo > params.plateau_tol * nlo {
                break;
            }
            lo = nlo;
            hi = nhi;
            end += 1;
        }
        if end + 1 - start >= params.min_plateau_points {
            let level = r[start..=end].iter().copied().sum::<T>() / lit((end + 1 - start) as f64);
            out.push(Plateau {
                start,
                end,
                interval: (pts[start], pts[end]),
                level,
            });
            start = end + 1;
        } else {
            start += 1;
        }
    }
    out
}

/// Detects ratio plateaus and labels the test shape.
///
/// Extremes are taken over the central region that keeps `1 - tail_mass` of
/// `(q0 + q1)/2`. Finite upper bounds eventually bind far out in the tails,
/// where the ratio leaves the clipping level again.
///
/// * clipped: plateaus at both the minimum and maximum of the ratio;
/// * censored: otherwise, an interior plateau containing ratio one in its
///   level window, with no interior plateau outside the window;
/// * compressed: otherwise, an interior plateau away from the extremes;
/// * nominal: no plateau at all.
pub fn classify_regions<T: Scalar>(
    rt: &RatioTable<T>,
    params: &PlateauParams<T>,
) -> Result<RegionClassification<T>> {
    let defined = (0..rt.ratio().len()).filter(|&k| rt.is_defined(k)).count();
    if defined < 2 {
        return Err(LfdError::TooFewPoints);
    }
    if !(params.tail_mass >= T::zero() && params.tail_mass < T::one()) {
        return Err(LfdError::InvalidConfig(format!(
            "tail_mass must lie in [0, 1), got {}",
            params.tail_mass
        )));
    }
    let plateaus = find_plateaus(rt, params);
    if plateaus.is_empty() {
        return Ok(RegionClassification {
            plateaus,
            kind: TestKind::Nominal,
        });
    }
    let (a, b) = rt.central_range(params.tail_mass);
    let central: Vec<&Plateau<T>> = plateaus
        .iter()
        .filter(|p| p.end >= a && p.start <= b)
        .collect();
    let r = rt.ratio();
    let (mut rmin, mut rmax) = (T::infinity(), T::neg_infinity());
    for &v in &r[a..=b] {
        if v.is_finite() && v > T::zero() {
            rmin = rmin.min(v);
            rmax = rmax.max(v);
        }
    }
    let tol = params.plateau_tol;
    let near = |level: T, target: T| (level - target).abs() <= tol * target;
    let at_min = central.iter().any(|p| near(p.level, rmin));
    let at_max = central.iter().any(|p| near(p.level, rmax));
    let interior: Vec<&Plateau<T>> = central
        .iter()
        .copied()
        .filter(|p| !near(p.level, rmin) && !near(p.level, rmax))
        .collect();
    let (wlo, whi) = params.censor_window;
    let in_window = |p: &&Plateau<T>| p.level >= wlo && p.level <= whi;

    let kind = if at_min && at_max {
        TestKind::Clipped
    } else if !interior.is_empty() && interior.iter().all(in_window) && interior.len() == 1 {
        TestKind::Censored
    } else if !interior.is_empty() {
        TestKind::Compressed
    } else {
        TestKind::Other
    };
    Ok(RegionClassification { plateaus, kind })
}

/// `E_{P0}[δ] + λ E_{P1}[1 - δ]` for `δ = 1{ratio > 1/λ}`.
pub fn weighted_error<T: Scalar>(
    p0: &Density<T>,
    p1: &Density<T>,
    rt: &RatioTable<T>,
    lam: T,
) -> Result<T> {
    if !(lam > T::zero()) {
        return Err(LfdError::NonPositiveLambda(crate::scalar::to_f64(lam)));
    }
    p0.check_same_grid(p1)?;
    if !crate::grid::same_grid(p0.grid(), rt.grid()) {
        return Err(LfdError::GridMismatch);
    }
    let eta = T::one() / lam;
    let (a, b) = (p0.values(), p1.values());
    Ok(p0
        .grid()
        .sum_by(|k| if rt.rejects(k, eta) { a[k] } else { lam * b[k] }))
}

/// How many grid points carry each of the levels `1/c0`, `c1` and
/// `p'_1/p'_0` (first match wins, in that order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LevelCounts {
    pub inv_c0: usize,
    pub c1: usize,
    pub lower_ratio: usize,
    pub other: usize,
}

impl LevelCounts {
    /// All three levels occur and nothing else does.
    pub fn is_three_valued(&self) -> bool {
        self.other == 0 && self.inv_c0 > 0 && self.c1 > 0 && self.lower_ratio > 0
    }
}

pub fn ratio_level_counts<T: Scalar>(
    sol: &LfdSolution<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    rtol: T,
) -> Result<LevelCounts> {
    band0.check_grid(sol.q0.grid())?;
    band1.check_grid(sol.q0.grid())?;
    let rt = build_ratio(sol);
    let close = |r: T, level: T| (r - level).abs() <= rtol * level.abs();
    let mut out = LevelCounts::default();
    for (k, &r) in rt.ratio().iter().enumerate() {
        let lower = band1.lower()[k] / band0.lower()[k];
        if close(r, T::one() / sol.c0) {
            out.inv_c0 += 1;
        } else if close(r, sol.c1) {
            out.c1 += 1;
        } else if close(r, lower) {
            out.lower_ratio += 1;
        } else {
            out.other += 1;
        }
    }
    Ok(out)
}

/// One row of plot data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow<T> {
    pub omega: T,
    pub p0_lower: T,
    pub p0_upper: T,
    pub p1_lower: T,
    pub p1_upper: T,
    pub q0: T,
    pub q1: T,
    pub log_ratio: T,
}

/// Band envelopes, least favorable densities and log-ratio per grid point.
pub fn export_figure_data<T: Scalar>(
    sol: &LfdSolution<T>,
    band0: &DensityBand<T>,
    band1: &DensityBand<T>,
    rt: &RatioTable<T>,
) -> Vec<FigureRow<T>> {
    let pts = sol.q0.grid().points();
    (0..pts.len())
        .map(|k| FigureRow {
            omega: pts[k],
            p0_lower: band0.lower()[k],
            p0_upper: band0.upper()[k],
            p1_lower: band1.lower()[k],
            p1_upper: band1.upper()[k],
            q0: sol.q0.values()[k],
            q1: sol.q1.values()[k],
            log_ratio: rt.log_ratio()[k],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::l_lambda;
    use crate::grid::{
        exp_energy_density_h0, exp_energy_density_h1, gaussian_density, make_uniform_grid,
    };
    use std::sync::Arc;

    #[test]
    fn ratio_conventions() {
        let g = Arc::new(crate::grid::Grid::counting(vec![0.0f64, 1.0, 2.0, 3.0]).unwrap());
        let q0 = Density::new(&g, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let q1 = Density::new(&g, vec![0.25, 0.5, 0.0, 0.0]).unwrap();
        let rt = RatioTable::from_pair(&q0, &q1).unwrap();
        assert_eq!(rt.ratio()[0], 0.5);
        assert!(rt.ratio()[1].is_infinite());
        assert_eq!(rt.ratio()[2], 0.0);
        assert!(!rt.is_defined(3));
        assert!(rt.log_ratio()[3].is_nan());
        assert_eq!(rt.log_ratio()[2], f64::NEG_INFINITY);
    }

    #[test]
    fn equal_densities_have_unit_ratio() {
        let g = make_uniform_grid(-5.0f64, 5.0, 101).unwrap();
        let p = gaussian_density(&g, 0.0, 1.0).unwrap();
        let rt = RatioTable::from_pair(&p, &p).unwrap();
        assert!(rt.ratio().iter().all(|&r| r == 1.0));
        assert!(rt.log_ratio().iter().all(|&r| r == 0.0));
        assert!((weighted_error(&p, &p, &rt, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_energy_ratio_is_increasing() {
        let g = make_uniform_grid(0.0f64, 30.0, 3000).unwrap();
        let q0 = exp_energy_density_h0(&g, 2.0).unwrap();
        let q1 = exp_energy_density_h1(&g, 2.0, 4.0).unwrap();
        let rt = RatioTable::from_pair(&q0, &q1).unwrap();
        // both closed forms are renormalised on the truncated support, so the
        // ratio matches e^{x/4} - 1 up to one common factor close to 1
        let scale = rt.ratio()[1500] / ((g.points()[1500] / 4.0).exp() - 1.0);
        assert!((scale - 1.0).abs() < 2e-3);
        assert_eq!(rt.ratio()[0], 0.0);
        for (k, &x) in g.points().iter().enumerate().skip(1) {
            let expect = scale * ((x / 4.0).exp() - 1.0);
            assert!((rt.ratio()[k] - expect).abs() <= 1e-9 * expect);
        }
        assert!(rt.ratio().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn weighted_error_at_lfds_equals_l_lambda() {
        let g = make_uniform_grid(-10.0f64, 10.0, 2001).unwrap();
        let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
        let p1 = gaussian_density(&g, 1.0, 2.0).unwrap();
        let rt = RatioTable::from_pair(&p0, &p1).unwrap();
        for lam in [0.05, 0.3, 1.0, 2.0, 17.0] {
            let we = weighted_error(&p0, &p1, &rt, lam).unwrap();
            let l = l_lambda(&p0, &p1, lam).unwrap();
            assert!((we - l).abs() < 1e-9, "{lam}: {we} vs {l}");
        }
        assert!(matches!(
            weighted_error(&p0, &p1, &rt, 0.0),
            Err(LfdError::NonPositiveLambda(_))
        ));
    }

    #[test]
    fn nominal_ratio_has_no_plateau() {
        let g = make_uniform_grid(-10.0f64, 10.0, 2001).unwrap();
        let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
        let p1 = gaussian_density(&g, 1.0, 2.0).unwrap();
        let rt = RatioTable::from_pair(&p0, &p1).unwrap();
        let c = classify_regions(&rt, &PlateauParams::default()).unwrap();
        assert_eq!(c.kind, TestKind::Nominal);
    }

    #[test]
    fn synthetic_shapes() {
        let g = make_uniform_grid(-10.0f64, 10.0, 2001).unwrap();
        let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
        let shape = |f: &dyn Fn(f64) -> f64| {
            let q1: Vec<f64> = g
                .points()
                .iter()
                .zip(p0.values())
                .map(|(&x, &v)| v * f((x / 2.0).exp()))
                .collect();
            let q1 = Density::new(&g, q1).unwrap();
            let rt = RatioTable::from_pair(&p0, &q1).unwrap();
            classify_regions(&rt, &PlateauParams::default())
                .unwrap()
                .kind
        };
        assert_eq!(shape(&|r| r.clamp(0.3, 3.0)), TestKind::Clipped);
        assert_eq!(
            shape(&|r| if (0.7..1.4).contains(&r) { 1.0 } else { r }),
            TestKind::Censored
        );
        assert_eq!(
            shape(&|r| if r < 3.0 {
                r
            } else if r < 6.0 {
                3.0
            } else {
                r / 2.0
            }),
            TestKind::Compressed
        );
    }

    #[test]
    fn too_few_points() {
        let g = Arc::new(crate::grid::Grid::counting(vec![0.0f64, 1.0]).unwrap());
        let q0 = Density::new(&g, vec![1.0, 0.0]).unwrap();
        let q1 = Density::new(&g, vec![1.0, 0.0]).unwrap();
        let rt = RatioTable::from_pair(&q0, &q1).unwrap();
        assert!(matches!(
            classify_regions(&rt, &PlateauParams::default()),
            Err(LfdError::TooFewPoints)
        ));
    }

    #[test]
    fn central_range_trims_tails() {
        let g = make_uniform_grid(-10.0f64, 10.0, 2001).unwrap();
        let p = gaussian_density(&g, 0.0, 1.0).unwrap();
        let rt = RatioTable::from_pair(&p, &p).unwrap();
        let (a, b) = rt.central_range(0.05);
        // ±1.96 for a standard normal
        assert!((g.points()[a] + 1.96).abs() < 0.02, "{}", g.points()[a]);
        assert!((g.points()[b] - 1.96).abs() < 0.02, "{}", g.points()[b]);
        assert_eq!(rt.central_range(0.0), (0, 2000));
    }

    #[test]
    fn clipping_demo_with_binding_tails_is_clipped() {
        use crate::band::DensityBand;
        use crate::solver::{solve_lfds, SolverConfig};
        let g = make_uniform_grid(-10.0f64, 10.0, 2001).unwrap();
        let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
        let p1 = gaussian_density(&g, 1.0, 2.0).unwrap();
        let b0 = DensityBand::from_scaled_nominal(&p0, 0.8, 10.0).unwrap();
        let b1 = DensityBand::from_scaled_nominal(&p1, 0.8, 10.0).unwrap();
        let sol = solve_lfds(&b0, &b1, &SolverConfig::default(), None).unwrap();
        let rt = build_ratio(&sol);
        let params = PlateauParams::default();
        let cls = classify_regions(&rt, &params).unwrap();
        assert_eq!(cls.kind, TestKind::Clipped);
        // plateau levels are the solver constants
        for p in &cls.plateaus {
            let near = |x: f64| (p.level - x).abs() <= params.plateau_tol * x;
            assert!(near(1.0 / sol.c0) || near(sol.c1), "{}", p.level);
        }
        // the upper bound binds at the grid ends, so the untrimmed view is not
        let untrimmed = PlateauParams {
            tail_mass: 0.0,
            ..params
        };
        assert_eq!(
            classify_regions(&rt, &untrimmed).unwrap().kind,
            TestKind::Compressed
        );

        // log-ratio constant at the extremes of the central region
        let rows = export_figure_data(&sol, &b0, &b1, &rt);
        let (a, b) = rt.central_range(params.tail_mass);
        let lr = |k: usize| rows[k].log_ratio;
        assert!((lr(a) - lr(a + 5)).abs() < 1e-9);
        assert!((lr(b) - lr(b - 5)).abs() < 1e-9);
        for row in &rows {
            assert!(row.q0 >= row.p0_lower && row.q0 <= row.p0_upper);
            assert!(row.q1 >= row.p1_lower && row.q1 <= row.p1_upper);
        }
    }

    #[test]
    fn huber_ratio_is_three_valued() {
        use crate::band::DensityBand;
        use crate::solver::{solve_lfds, SolverConfig};
        let g = make_uniform_grid(-10.0f64, 10.0, 2001).unwrap();
        let p0 = gaussian_density(&g, -1.0, 2.0).unwrap();
        let p1 = gaussian_density(&g, 1.0, 2.0).unwrap();
        let b0 = DensityBand::from_contamination(&p0, 0.2, None).unwrap();
        let b1 = DensityBand::from_contamination(&p1, 0.2, None).unwrap();
        let sol = solve_lfds(&b0, &b1, &SolverConfig::default(), None).unwrap();
        let counts = ratio_level_counts(&sol, &b0, &b1, 1e-6).unwrap();
        assert!(counts.is_three_valued(), "{counts:?}");
        assert_eq!(counts.inv_c0 + counts.c1 + counts.lower_ratio, 2001);

        // a scaled-nominal band has more levels than that
        let b0 = DensityBand::from_scaled_nominal(&p0, 0.8, 2.5).unwrap();
        let b1 = DensityBand::from_scaled_nominal(&p1, 0.8, 2.5).unwrap();
        let sol = solve_lfds(&b0, &b1, &SolverConfig::default(), None).unwrap();
        assert!(!ratio_level_counts(&sol, &b0, &b1, 1e-6)
            .unwrap()
            .is_three_valued());
    }

    #[test]
    fn invalid_tail_mass() {
        let g = make_uniform_grid(-1.0f64, 1.0, 11).unwrap();
        let p = gaussian_density(&g, 0.0, 1.0).unwrap();
        let rt = RatioTable::from_pair(&p, &p).unwrap();
        let params = PlateauParams {
            tail_mass: 1.0,
            ..PlateauParams::default()
        };
        assert!(matches!(
            classify_regions(&rt, &params),
            Err(LfdError::InvalidConfig(_))
        ));
    }
}
