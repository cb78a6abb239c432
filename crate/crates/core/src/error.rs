use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("singular evaluation in {op}: {detail}")]
    Singular { op: &'static str, detail: String },

    #[error("{op}: target {target} outside attainable range ({lo}, {hi})")]
    Range {
        op: &'static str,
        target: f64,
        lo: f64,
        hi: f64,
    },

    #[error("insufficient resolution in {op}: {detail}")]
    Resolution { op: &'static str, detail: String },

    #[error("{op} did not converge: {detail}")]
    Convergence { op: &'static str, detail: String },

    #[error("overflow in {op}: {detail}")]
    Overflow { op: &'static str, detail: String },

    #[error("{op}: quadrature budget exceeded ({pairs} pairs > limit {limit})")]
    Budget {
        op: &'static str,
        pairs: usize,
        limit: usize,
    },

    #[error("aliasing in {op}: {detail}")]
    Aliasing { op: &'static str, detail: String },

    #[error("{op}: pole at {at}, no finite value")]
    Pole { op: &'static str, at: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
