//! Command-line pipeline and HTTP service over the `oledcolor` library.

pub mod commands;
pub mod profile;
pub mod server;
pub mod service;

use oledcolor::contribution::ContributionError;
use oledcolor::layout::LayoutError;
use oledcolor::optimizer::{Algorithm, OptimizeError};
use oledcolor::pipeline::{FrameError, PipelineError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown site `{0}`")]
    UnknownSite(String),
    #[error("site `{0}` has no option grid; run `oledcolor optimize --site {0}`")]
    NoGrid(String),
    #[error("{algorithm} level {level} is not in the grid; available cells: {available}")]
    UnknownCell { algorithm: Algorithm, level: u8, available: String },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Contribution(#[from] ContributionError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
