use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("truncation mismatch: K={0} vs K={1}")]
    TruncationMismatch(usize, usize),
    #[error("coefficient length {len} does not match truncation K={k}")]
    Length { len: usize, k: usize },
    #[error("mode {mode} outside truncation K={k}")]
    ModeOutOfRange { mode: i64, k: usize },
    #[error("Bloch parameter {0} outside |mu| < 1/2")]
    BlochParameter(f64),
    #[error("multiplier not finite at shifted mode {0}")]
    NonFiniteSymbol(f64),
    #[error("parity violation: {0}")]
    Parity(String),
    #[error("invalid Stokes order {0}, expected 1, 2 or 3")]
    InvalidOrder(u32),
    #[error("amplitude {0} outside the series regime |a| <= 0.2")]
    Amplitude(f64),
    #[error("Riemann stretch did not converge in {iterations} iterations (last step {residual:e})")]
    StretchNonConvergence { iterations: usize, residual: f64 },
    #[error("singular conformal map: {0}")]
    SingularMap(String),
    #[error("Stokes refinement did not converge: {0}")]
    Refinement(String),
    #[error("eigensolver did not converge after {0} QR iterations")]
    EigenNonConvergence(usize),
    #[error("Gram matrix of the kernel basis is ill-conditioned (condition {0:e})")]
    Gram(f64),
    #[error("ill-posed reduced inverse: {0}")]
    IllPosed(String),
    #[error("root not found: {0}")]
    RootNotFound(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
