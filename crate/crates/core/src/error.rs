use thiserror::Error;

/// Errors raised by the library. Numerical routines never panic on bad input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("a system needs at least two vector fields, got n = {0}")]
    TooFewFields(usize),
    #[error("coefficient matrix has shape {rows}x{cols}, expected {n}x{m}")]
    ShapeMismatch { rows: usize, cols: usize, n: usize, m: usize },
    #[error("ellipticity requires N/2 <= n <= N, got n = {n} and N = {ambient}")]
    DimensionConstraint { n: usize, ambient: usize },
    #[error("non-finite coefficient at ({0}, {1})")]
    NonFiniteCoefficient(usize, usize),
    #[error("system is not elliptic: symbol minimum {0:e} on the unit sphere")]
    NotElliptic(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("field index {index} out of range for {len} fields")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("multiplier is not finite at frequency {0:?}")]
    NonFiniteMultiplier(Vec<i64>),
    #[error("exponent p = {0} is outside (1, inf)")]
    InvalidExponent(f64),
    #[error("exponent p = {p} is outside the range of this construction ({range})")]
    ExponentRange { p: f64, range: &'static str },
    #[error("scale {scale} is below the grid resolution ({cells:.2} cells, need {min})")]
    ScaleBelowResolution { scale: f64, cells: f64, min: f64 },
    #[error("invalid scale set: {0}")]
    InvalidScales(String),
    #[error("ball family: {0}")]
    BallFamily(String),
    #[error("support does not fit: {0}")]
    SupportOverflow(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("degenerate trial: denominator {denominator:e} below {floor:e}")]
    Degenerate { denominator: f64, floor: f64 },
    #[error("band limit {band} exceeds the Nyquist limit of dims {dims:?}")]
    BandLimit { band: usize, dims: Vec<usize> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
