//! Least favorable distributions for density-band uncertainty.
//!
//! Each hypothesis is described by a band `p' <= p <= p''` of densities on a
//! discretised sample space. [`solve_lfds`] computes the least favorable pair
//! with a clip-and-scale fixed-point iteration and [`criteria`] certifies it.
//!
//! ```
//! use bandlfd::{gaussian_density, make_uniform_grid, solve_lfds, DensityBand, SolverConfig};
//!
//! let grid = make_uniform_grid(-10.0, 10.0, 401).unwrap();
//! let p0 = gaussian_density(&grid, -1.0, 2.0).unwrap();
//! let p1 = gaussian_density(&grid, 1.0, 2.0).unwrap();
//! let b0 = DensityBand::from_scaled_nominal(&p0, 0.8, 1.5).unwrap();
//! let b1 = DensityBand::from_scaled_nominal(&p1, 0.8, 1.5).unwrap();
//! let sol = solve_lfds(&b0, &b1, &SolverConfig::default(), None).unwrap();
//! assert!(sol.residual <= 10.0 * sol.tol);
//! ```

// negated comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod criteria;
pub mod error;
pub mod grid;
pub mod scalar;
pub mod solver;
pub mod statistic;

pub use band::{DensityBand, FeasibleSample};
pub use criteria::{
    attainment_holds, band_upper_bound, check_bound_attainment, check_l_dominance,
    check_stochastic_dominance, corner_bound, f_divergence, l_lambda, log_spaced, BoundRecord,
    DivergenceKind, DominanceReport, OptimalityReport,
};
pub use error::{LfdError, Result};
pub use grid::{
    exp_energy_density_h0, exp_energy_density_h1, gaussian_density, integrate, make_uniform_grid,
    Density, Grid, SharedGrid,
};
pub use scalar::Scalar;
pub use solver::{
    clip_project, find_root_c, fixed_point_residual, g_eval, solve_lfds, LfdSolution, SolverConfig,
};
pub use statistic::{
    build_ratio, classify_regions, export_figure_data, ratio_level_counts, weighted_error,
    FigureRow, LevelCounts, Plateau, PlateauParams, RatioTable, RegionClassification, TestKind,
};

pub type Grid64 = Grid<f64>;
pub type Density64 = Density<f64>;
pub type DensityBand64 = DensityBand<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type LfdSolution64 = LfdSolution<f64>;

pub type Grid32 = Grid<f32>;
pub type Density32 = Density<f32>;
pub type DensityBand32 = DensityBand<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type LfdSolution32 = LfdSolution<f32>;
