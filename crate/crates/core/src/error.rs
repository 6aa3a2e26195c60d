use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid initial data: {0}")]
    InvalidData(String),

    #[error("argument {s} is outside the master domain [{lo}, {hi})")]
    OutOfDomain { s: f64, lo: f64, hi: f64 },

    #[error("argument {s} is not a master-grid node (nearest offset {offset:e} spacings); grids are incommensurate")]
    OffGrid { s: f64, offset: f64 },

    #[error("spectral growth exponent {exponent:.1} exceeds {limit} at t = {t}; initial data must be band-limited for this evolution")]
    Growth { exponent: f64, limit: f64, t: f64 },

    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("poor coordinate patch at x = {x}, t = {t}: |det2| = {:e} below threshold {threshold:e}", det2.norm())]
    Patch {
        det2: Complex64,
        x: f64,
        t: f64,
        threshold: f64,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid companion: {0}")]
    Companion(String),

    #[error("field: {0}")]
    Field(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_patch(&self) -> bool {
        matches!(self, Error::Patch { .. })
    }
}
