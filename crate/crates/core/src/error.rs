use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid background: {0}")]
    InvalidBackground(String),

    #[error("degenerate frequency node (s, t) = ({s}, {t})")]
    DegenerateNode { s: f64, t: f64 },

    #[error("frequency node s^2 + t^2 = {d2} lies inside the evanescent disk k^2 = {k2}")]
    Evanescent { d2: f64, k2: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
