use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate evaluation: every image coordinate vanishes")]
    DegenerateEvaluation,
    #[error("degenerate map: {0}")]
    DegenerateMap(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(u32, u32),
    #[error("critical point: |jacobian| = {0:e}")]
    CriticalPoint(f64),
    #[error("preimage solver incomplete: {0}")]
    SolverIncomplete(String),
    #[error("resultant leading coefficient vanished; coordinates need rotating")]
    RotationRequired,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),
    #[error("ill-conditioned frame: |det| = {0:e}")]
    IllConditionedFrame(f64),
    #[error("walker failure rate {0:.4} exceeds 1%")]
    WalkerFailures(f64),
    #[error("clamped negative mass fraction {0:.4} exceeds 1%")]
    NegativeMass(f64),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
