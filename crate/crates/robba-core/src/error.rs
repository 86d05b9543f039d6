use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p must be an odd prime >= 3, got {0}")]
    InvalidPrime(u64),
    #[error("precision must satisfy 1 <= N and p^N < 2^62, got p={p}, N={n}")]
    InvalidPrecision { p: u64, n: u32 },
    #[error("operands use different primes: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid radius exponent {0}: need 0 < e < 1")]
    InvalidRadius(String),
    #[error("coordinate cap exceeded by a term of reference norm p^-{norm_exp} (threshold p^-{threshold})")]
    CapOverflow { norm_exp: String, threshold: String },
    #[error("correction window exhausted: {0}")]
    WindowExhausted(String),
    #[error("quasi-abelian bound violated on sample {index}: |xy-yx| >= |xy|")]
    QaViolation { index: usize },
    #[error("chart self-test failed: {0}")]
    ChartSelfTest(String),
    #[error("unknown group selector `{0}`")]
    UnknownChart(String),
    #[error("rewriting step did not preserve the potential invariant: {0}")]
    PotentialViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("expected a unit pairing value, got {0}")]
    NotAUnit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
