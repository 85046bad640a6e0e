use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("event scheduled at t={at} is before the current clock t={now}")]
    PastTime { at: f64, now: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("peers are {distance} m apart, outside radio range {range} m")]
    NotNeighbors { distance: f64, range: f64 },
    #[error("affinity estimation needs at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("energy samples out of order: t_k={t_k} must precede t_p={t_p}")]
    BadSampleOrder { t_k: f64, t_p: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContentError {
    #[error("cosine similarity of an empty term vector")]
    EmptyVector,
    #[error("invalid workload configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("queue utilization {0} outside [0, 1]")]
    BadUtilization(f64),
    #[error("invalid scoring parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no query was resolved; average discovery delay is undefined")]
    NoResolvedQueries,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
