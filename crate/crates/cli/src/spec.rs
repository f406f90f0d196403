//! Band specification files.
//!
//! ```toml
//! [grid]
//! lo = -10.0
//! hi = 10.0
//! n = 2001
//!
//! [[bands]]
//! kind = "scaled_nominal"
//! nominal = { gaussian = { mean = -1.0, sd = 2.0 } }
//! lo_factor = 0.8
//! hi_factor = 1.5
//!
//! [[bands]]
//! kind = "contamination"
//! nominal = { gaussian = { mean = 1.0, sd = 2.0 } }
//! eps = 0.2
//! cap_factor = "inf"
//! ```

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use bandlfd::{
    exp_energy_density_h0, exp_energy_density_h1, gaussian_density, make_uniform_grid, Density64,
    DensityBand64, SharedGrid,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub grid: GridSpec,
    pub bands: Vec<BandSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// A number, or the literal `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Word(String),
}

impl Number {
    pub fn inf() -> Self {
        Number::Word("inf".into())
    }

    fn resolve(&self, field: &str) -> anyhow::Result<f64> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Word(w) if w == "inf" => Ok(f64::INFINITY),
            Number::Word(w) => bail!("{field}: expected a number or \"inf\", got {w:?}"),
        }
    }
}

/// Array of values, or `"inf"` for an unbounded envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UpperSpec {
    Values(Vec<f64>),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NominalSpec {
    Gaussian { mean: f64, sd: f64 },
    ExpH0 { sigw2: f64 },
    ExpH1 { sigw2: f64, sigs2: f64 },
}

impl NominalSpec {
    pub fn density(&self, grid: &SharedGrid<f64>) -> bandlfd::Result<Density64> {
        match *self {
            NominalSpec::Gaussian { mean, sd } => gaussian_density(grid, mean, sd),
            NominalSpec::ExpH0 { sigw2 } => exp_energy_density_h0(grid, sigw2),
            NominalSpec::ExpH1 { sigw2, sigs2 } => exp_energy_density_h1(grid, sigw2, sigs2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandSpec {
    Explicit {
        lower: Vec<f64>,
        upper: UpperSpec,
    },
    ScaledNominal {
        nominal: NominalSpec,
        lo_factor: f64,
        hi_factor: Number,
    },
    Contamination {
        nominal: NominalSpec,
        eps: f64,
        cap_factor: Number,
    },
    Envelope {
        family: Vec<NominalSpec>,
    },
}

impl BandSpec {
    pub fn build(&self, grid: &SharedGrid<f64>) -> anyhow::Result<DensityBand64> {
        let band = match self {
            BandSpec::Explicit { lower, upper } => {
                let upper = match upper {
                    UpperSpec::Values(v) => v.clone(),
                    UpperSpec::Word(w) if w == "inf" => vec![f64::INFINITY; grid.len()],
                    UpperSpec::Word(w) => bail!("upper: expected an array or \"inf\", got {w:?}"),
                };
                DensityBand64::from_bounds(grid, lower.clone(), upper)?
            }
            BandSpec::ScaledNominal {
                nominal,
                lo_factor,
                hi_factor,
            } => {
                let p = nominal.density(grid)?;
                DensityBand64::from_scaled_nominal(&p, *lo_factor, hi_factor.resolve("hi_factor")?)?
            }
            BandSpec::Contamination {
                nominal,
                eps,
                cap_factor,
            } => {
                let p = nominal.density(grid)?;
                let factor = cap_factor.resolve("cap_factor")?;
                if factor.is_infinite() {
                    DensityBand64::from_contamination(&p, *eps, None)?
                } else {
                    let cap: Vec<f64> = p.values().iter().map(|v| factor * v).collect();
                    DensityBand64::from_contamination(&p, *eps, Some(&cap))?
                }
            }
            BandSpec::Envelope { family } => {
                let members = family
                    .iter()
                    .map(|m| m.density(grid))
                    .collect::<bandlfd::Result<Vec<_>>>()?;
                DensityBand64::from_envelope(&members)?
            }
        };
        Ok(band)
    }
}

impl SpecFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let spec: SpecFile = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
        if spec.bands.len() != 2 {
            bail!(
                "bands: expected exactly two entries, got {}",
                spec.bands.len()
            );
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read spec {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid spec {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn build_grid(&self) -> anyhow::Result<SharedGrid<f64>> {
        let GridSpec { lo, hi, n } = self.grid;
        make_uniform_grid(lo, hi, n).context("grid")
    }

    /// The grid and both bands.
    pub fn build(&self) -> anyhow::Result<(SharedGrid<f64>, DensityBand64, DensityBand64)> {
        let grid = self.build_grid()?;
        let b0 = self.bands[0].build(&grid).context("bands[0]")?;
        let b1 = self.bands[1].build(&grid).context("bands[1]")?;
        Ok((grid, b0, b1))
    }
}
