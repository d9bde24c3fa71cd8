use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock cutoff {0}: each mode needs at least 2 levels")]
    InvalidCutoff(usize),

    #[error("Fock level {level} out of range for cutoff {cutoff}")]
    LevelOutOfRange { level: usize, cutoff: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("expectation value has imaginary part {0:e}; operator is not Hermitian")]
    NonHermitianExpectation(f64),

    #[error("integration blow-up at step {step}: trace renormalization factor {factor}; reduce dt or increase n_substeps")]
    IntegrationBlowup { step: usize, factor: f64 },

    #[error("photocurrent is undefined at measurement rate eta = 0")]
    NoMeasurement,

    #[error("eigen-solver failure: {0}")]
    Numerical(String),

    #[error("invalid mixing probability p = {0}; must lie in [0, 1]")]
    InvalidMixture(f64),

    #[error("episode already finished; call reset before stepping")]
    EpisodeDone,

    #[error("vectorized environments must share one configuration: {0}")]
    HeterogeneousConfigs(String),

    #[error("training diverged: {reason} (state dump: {dump:?})")]
    TrainingDiverged { reason: String, dump: Option<PathBuf> },

    #[error("phase-1 training did not converge: {0}")]
    NotConverged(String),

    #[error("checkpoint incompatible with configuration: {0}")]
    IncompatibleCheckpoint(String),

    #[error("configuration hash {found} does not match checkpoint hash {expected}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown export kind `{0}`")]
    UnknownExportKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// Short machine-readable tag used in the CLI's JSON error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCutoff(_) | Error::LevelOutOfRange { .. } => "cutoff",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonHermitianExpectation(_) => "non_hermitian",
            Error::IntegrationBlowup { .. } => "integration_blowup",
            Error::NoMeasurement => "no_measurement",
            Error::Numerical(_) => "numerical",
            Error::InvalidMixture(_) => "invalid_mixture",
            Error::EpisodeDone => "episode_done",
            Error::HeterogeneousConfigs(_) => "heterogeneous_configs",
            Error::TrainingDiverged { .. } => "training_diverged",
            Error::NotConverged(_) => "not_converged",
            Error::IncompatibleCheckpoint(_) => "incompatible_checkpoint",
            Error::ConfigHashMismatch { .. } => "config_hash_mismatch",
            Error::Config(_) => "config",
            Error::UnknownExportKind(_) => "unknown_export_kind",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::TomlDe(_) | Error::TomlSer(_) => "toml",
        }
    }
}
