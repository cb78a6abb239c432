//! Neumann–Poincaré spectra of prolate and oblate spheroids and of thin
//! flat two-sheet domains.

pub mod error;
pub mod kernels;
pub mod limit;
pub mod planar;
pub mod plasmon;
pub mod prolate;
pub mod quadrature;
pub mod quasimode;
pub mod specfun;
pub mod spectra;
pub mod types;

pub use error::{Error, Result};
pub use specfun::ModeIndex;
pub use types::{EigenLabel, Eigenvalue, Family, Parity, SpectrumResult, SpheroidGeometry};
pub use plasmon::ResonancePair;
pub use quasimode::QuasiModeSpec;
pub use spectra::{DiscreteOperator, NystromGrid, Scheme};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
