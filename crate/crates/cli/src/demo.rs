//! Built-in configurations.

use std::fmt;
use std::str::FromStr;

use anyhow::bail;

use crate::spec::{BandSpec, GridSpec, NominalSpec, Number, SpecFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demo {
    Clipping,
    Censoring,
    CompressTight,
    CompressLoose,
    Huber,
    Spectrum,
}

impl Demo {
    pub const ALL: [Demo; 6] = [
        Demo::Clipping,
        Demo::Censoring,
        Demo::CompressTight,
        Demo::CompressLoose,
        Demo::Huber,
        Demo::Spectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Demo::Clipping => "clipping",
            Demo::Censoring => "censoring",
            Demo::CompressTight => "compress-tight",
            Demo::CompressLoose => "compress-loose",
            Demo::Huber => "huber",
            Demo::Spectrum => "spectrum",
        }
    }

    pub fn spec(self) -> SpecFile {
        self.spec_with_points(match self {
            Demo::Spectrum => 3000,
            _ => 2001,
        })
    }

    /// Same configuration on a grid with `n` points.
    pub fn spec_with_points(self, n: usize) -> SpecFile {
        match self {
            Demo::Clipping => gaussian_scaled(n, 10.0),
            Demo::Censoring => gaussian_scaled(n, 1.5),
            Demo::CompressTight => gaussian_scaled(n, 1.2),
            Demo::CompressLoose => gaussian_scaled(n, 2.5),
            Demo::Huber => SpecFile {
                grid: GridSpec {
                    lo: -10.0,
                    hi: 10.0,
                    n,
                },
                bands: [-1.0, 1.0]
                    .map(|mean| BandSpec::Contamination {
                        nominal: NominalSpec::Gaussian { mean, sd: 2.0 },
                        eps: 0.2,
                        cap_factor: Number::inf(),
                    })
                    .to_vec(),
            },
            Demo::Spectrum => {
                let sigw2: Vec<f64> = (0..=20).map(|i| 1.0 + i as f64 / 20.0).collect();
                let sigs2: Vec<f64> = (0..=20).map(|i| 4.0 + i as f64 / 10.0).collect();
                let h0 = sigw2
                    .iter()
                    .map(|&w| NominalSpec::ExpH0 { sigw2: w })
                    .collect();
                let h1 = sigw2
                    .iter()
                    .flat_map(|&w| {
                        sigs2
                            .iter()
                            .map(move |&s| NominalSpec::ExpH1 { sigw2: w, sigs2: s })
                    })
                    .collect();
                SpecFile {
                    grid: GridSpec {
                        lo: 0.0,
                        hi: 30.0,
                        n,
                    },
                    bands: vec![
                        BandSpec::Envelope { family: h0 },
                        BandSpec::Envelope { family: h1 },
                    ],
                }
            }
        }
    }
}

fn gaussian_scaled(n: usize, hi_factor: f64) -> SpecFile {
    SpecFile {
        grid: GridSpec {
            lo: -10.0,
            hi: 10.0,
            n,
        },
        bands: [-1.0, 1.0]
            .map(|mean| BandSpec::ScaledNominal {
                nominal: NominalSpec::Gaussian { mean, sd: 2.0 },
                lo_factor: 0.8,
                hi_factor: Number::Value(hi_factor),
            })
            .to_vec(),
    }
}

/// Closed-form least favorable pair for the spectrum demo,
/// `q0 = e^{-x/2}/2` and `q1 = (e^{-x/4} - e^{-x/2})/2`.
pub fn spectrum_reference(x: f64) -> (f64, f64) {
    let a = (-x / 2.0).exp();
    let b = (-x / 4.0).exp();
    (0.5 * a, 0.5 * (b - a))
}

impl fmt::Display for Demo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Demo {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match Demo::ALL.iter().find(|d| d.name() == s) {
            Some(d) => Ok(*d),
            None => {
                let names: Vec<_> = Demo::ALL.iter().map(|d| d.name()).collect();
                bail!("unknown demo {s:?} (expected one of {})", names.join(", "))
            }
        }
    }
}
