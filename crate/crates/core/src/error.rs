use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("solver blowup at step {step} (t = {time}): {reason}")]
    SolverBlowup {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("CFL violation: dt = {dt} exceeds 0.5 * dr = {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("angular band limit {band_limit} does not resolve the input (resynthesis residual {residual:.3e})")]
    BandLimitOverflow { band_limit: usize, residual: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

impl Error {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Error::SolverBlowup { .. })
    }
}
