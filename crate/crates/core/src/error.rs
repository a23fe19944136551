use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probability vector sums to {sum}, outside tolerance")]
    NotNormalized { sum: f64 },

    #[error("vector has zero norm")]
    ZeroFeature,

    #[error("tangent vector is not orthogonal to its base point (inner product {inner})")]
    NotTangent { inner: f64 },

    #[error("tangent step of norm {norm} reaches the cut locus (must be < pi)")]
    StepTooLarge { norm: f64 },

    #[error("points are antipodal (distance {distance}); log map undefined")]
    AntipodalPoints { distance: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point kinds differ (sphere vs grassmann)")]
    SpaceMismatch,

    #[error("empty sample set for network {network}, class {class}")]
    EmptySampleSet { network: usize, class: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("class scores underflowed (sum {sum:e})")]
    DegenerateScores { sum: f64 },

    #[error("loss became non-finite at iteration {iteration}; reduce eta")]
    NonFiniteLoss { iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    RaggedTable {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("network tables disagree on sample count: {expected} vs {found} (network {network})")]
    RaggedEnsemble {
        network: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}: {source}")]
    Row {
        path: String,
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("label {label} at line {line} is outside [0, {classes})")]
    LabelOutOfRange {
        line: usize,
        label: i64,
        classes: usize,
    },

    #[error("model schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { expected: u32, found: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse error grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Config,
    Input,
    Validation,
    Model,
    Dimension,
    Numerical,
}

impl ErrorFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorFamily::Config => 2,
            ErrorFamily::Input => 3,
            ErrorFamily::Validation => 4,
            ErrorFamily::Model => 5,
            ErrorFamily::Dimension => 6,
            ErrorFamily::Numerical => 7,
        }
    }
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        match self {
            Error::InvalidConfig(_) => ErrorFamily::Config,
            Error::Parse { .. }
            | Error::RaggedTable { .. }
            | Error::RaggedEnsemble { .. }
            | Error::LabelOutOfRange { .. }
            | Error::File { .. }
            | Error::Io(_) => ErrorFamily::Input,
            Error::NegativeProbability { .. }
            | Error::NotNormalized { .. }
            | Error::ZeroFeature
            | Error::NotTangent { .. }
            | Error::EmptySampleSet { .. }
            | Error::EmptyBatch => ErrorFamily::Validation,
            Error::SchemaMismatch { .. } | Error::CorruptModel(_) => ErrorFamily::Model,
            Error::DimensionMismatch { .. } | Error::SpaceMismatch => ErrorFamily::Dimension,
            Error::StepTooLarge { .. }
            | Error::AntipodalPoints { .. }
            | Error::DegenerateScores { .. }
            | Error::NonFiniteLoss { .. } => ErrorFamily::Numerical,
            Error::Row { source, .. } => source.family(),
        }
    }
}
