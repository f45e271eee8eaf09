use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: {message}")]
    LayerShape { layer: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),

    #[error("forward cache does not match network: {0}")]
    CacheMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed file at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("environment mismatch: expected `{expected}`, found `{found}`")]
    EnvMismatch { expected: String, found: String },

    #[error("unknown environment `{0}`")]
    UnknownEnv(String),

    #[error("observer mode requires a state observer")]
    MissingObserver,

    #[error("demonstration file has no analysis section")]
    MissingAnalysis,

    #[error("synthesized reward {0} outside [0, -ln eps]")]
    RewardOutOfBounds(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("metric `{0}` is absent from this run")]
    MetricAbsent(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("run aborted: {source}\nconfiguration:\n{config}")]
    Aborted { config: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// The underlying error when this one wraps another.
    pub fn root(&self) -> &Error {
        match self {
            Error::Aborted { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
