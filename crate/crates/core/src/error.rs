use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // ingestion
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error("duplicate date {0}")]
    DuplicateDate(String),
    #[error("non-numeric value {value:?} in column {column} on line {line}")]
    NonNumericValue { column: String, line: usize, value: String },
    #[error("invalid value {value} in column {column}: {reason}")]
    InvalidValue {
        column: String,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown target {0:?} (expected load, generation or deficit)")]
    UnknownTarget(String),
    #[error("series contains missing values")]
    ContainsMissing,
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    // preprocessing
    #[error("every value is missing")]
    AllMissing,
    #[error("window {window} is larger than the series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("bad filter order: {0}")]
    BadOrder(String),
    #[error("value {0} is not greater than -1, ln(1 + y) undefined")]
    NonPositiveAfterOffset(f64),
    #[error("transform chain has no log step")]
    NoLogStep,
    #[error("series too short: {0}")]
    TooShort(String),
    #[error("differencing context does not match its orders: {0}")]
    HeadMismatch(String),

    // diagnostics
    #[error("series is constant")]
    ConstantSeries,
    #[error("lag {lag} too large for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("singular regression")]
    SingularRegression,

    // models
    #[error("fitted polynomial has roots inside the unit circle (min modulus {0:.4})")]
    NonInvertible(f64),
    #[error("exogenous regressors are collinear")]
    SingularExog,
    #[error("optimizer did not converge")]
    NoConvergence,
    #[error("model needs {0} future exogenous rows")]
    MissingFutureExog(usize),
    #[error("no candidate model could be fitted")]
    NoValidModel,
    #[error("smoothing factor {0} outside (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, trace: Vec<f64> },
    #[error("empty training data")]
    EmptyData,
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),

    // evaluation
    #[error("length mismatch: {0} actual vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("split date {0} leaves an empty side")]
    SplitOutOfRange(String),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("unknown model family {0:?}")]
    UnknownFamily(String),

    // synth / cli
    #[error("bad synthetic config: {0}")]
    BadConfig(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
