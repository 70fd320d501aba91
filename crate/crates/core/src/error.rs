use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("property level {0} is outside 1..=5")]
    LevelOutOfRange(i64),

    #[error("unknown food label `{0}`")]
    UnknownLabel(String),

    #[error("unknown tool `{0}`")]
    UnknownTool(String),

    #[error("unknown skill `{0}`")]
    UnknownSkill(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("plate layout failed: {0}")]
    Layout(String),

    #[error("invalid item state: {0}")]
    State(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("likelihood fitting failed: {0}")]
    Fitting(String),

    #[error("calibration dataset has no records for skill `{0}`")]
    Coverage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("unsupported schema_version {found} in {document} (expected {expected})")]
    Schema {
        document: String,
        found: u32,
        expected: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
