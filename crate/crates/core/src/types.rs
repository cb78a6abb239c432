//! Shared result types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::ModeIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Prolate,
    Oblate,
    Flat,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Prolate => "prolate",
            Family::Oblate => "oblate",
            Family::Flat => "flat",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prolate" => Ok(Family::Prolate),
            "oblate" => Ok(Family::Oblate),
            "flat" => Ok(Family::Flat),
            _ => Err(crate::error::domain("Family", format!("unknown family '{s}'"))),
        }
    }
}

/// Symmetry of a two-sheet density under reflection `x3 -> -x3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            _ => Err(crate::error::domain("Parity", format!("unknown parity '{s}'"))),
        }
    }
}

/// Family tag plus shape parameters.
///
/// Prolate: `r` is the aspect ratio and `l` the spheroidal coordinate.
/// Oblate: semi-axes `(a r, a r, 1)`. Flat: sheets of radius `r` at
/// heights `+-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpheroidGeometry {
    pub family: Family,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
}

impl SpheroidGeometry {
    pub fn prolate(r: f64, l: f64) -> Self {
        SpheroidGeometry {
            family: Family::Prolate,
            r,
            l: Some(l),
            a: None,
        }
    }

    pub fn oblate(r: f64, a: f64) -> Self {
        SpheroidGeometry {
            family: Family::Oblate,
            r,
            l: None,
            a: Some(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenLabel {
    /// Analytic mode, when known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<ModeIndex>,
    /// Azimuthal order of the reduced operator.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parity: Option<Parity>,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    /// Imaginary part left by the nonsymmetric solve; zero for the exact
    /// operator, so it measures discretization quality.
    pub im: f64,
    pub label: EigenLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub geometry: SpheroidGeometry,
    /// Nyström grid size, 0 for analytic spectra.
    pub grid_size: usize,
    pub scheme: String,
    pub eigenvalues: Vec<Eigenvalue>,
}

/// Strict bound on eigenvalues of the NP operator with a little slack for
/// discretization error.
pub const SPECTRAL_BOUND: f64 = 0.51;

impl SpectrumResult {
    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }

    pub fn max_imag_residual(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.im.abs() / (1.0 + e.re.abs()))
            .fold(0.0, f64::max)
    }

    /// Eigenvalues with real part outside `(-0.51, 0.51)`.
    pub fn confinement_violations(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|e| e.re)
            .filter(|v| !(v.abs() < SPECTRAL_BOUND))
            .collect()
    }

    /// Sort by real part, descending; ties keep their order.
    pub fn sort_descending(&mut self) {
        self.eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re));
    }
}
