use thiserror::Error;

/// Errors raised by the state, field, topology and tomography routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("state is not physical (min eigenvalue {0:e})")]
    Unphysical(f64),

    #[error("state is not pure (purity {0})")]
    NotPure(f64),

    #[error("grid point ({row}, {col}) is masked")]
    MaskedPoint { row: usize, col: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "grid half-width {half_width} leaves the l={ell} envelope at {ratio:e} of its peak \
         on the boundary (cutoff {cutoff:e})"
    )]
    GridTooNarrow {
        ell: i32,
        half_width: f64,
        ratio: f64,
        cutoff: f64,
    },

    #[error("|l1| = |l2| = {0}: the texture has trivial topology")]
    TrivialTopology(u32),

    #[error("quantum contrast {0} is below 1")]
    ContrastBelowOne(f64),

    #[error("tomography design matrix has rank {0}, expected 15")]
    RankDeficient(usize),

    #[error("record: {0}")]
    Record(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Record(e.to_string())
    }
}

pub(crate) fn ensure_finite(value: f64, name: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}
