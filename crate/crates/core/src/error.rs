use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("convention violated: s3 = {s3} < s2 = {s2} (relabel waves 2 and 3)")]
    Convention { s2: i64, s3: i64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range 0..={max}")]
    Index { index: usize, max: usize },

    #[error("state norm deviates from unity by {deviation:e} (tolerance {tolerance:e})")]
    Normalization { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("integration diverged: non-finite state after t = {last_valid_time}")]
    Divergence { last_valid_time: f64 },

    #[error("integration quality: norm drift {drift:e} exceeds tolerance {tolerance:e}")]
    IntegrationQuality { drift: f64, tolerance: f64 },

    #[error("eigensolver failed to converge for eigenvalue {index} after {iterations} iterations")]
    Solver { index: usize, iterations: usize },

    #[error("configuration is stable (growth-rate radicand {radicand}); no exponential branch")]
    StableBranch { radicand: f64 },

    #[error("degenerate growth rate (gamma = 0)")]
    DegenerateGrowth,

    #[error("spread center m = {m} lies on the subspace boundary")]
    Boundary { m: usize },

    #[error("invalid time grid: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
