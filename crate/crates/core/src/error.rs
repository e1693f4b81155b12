use thiserror::Error;

use crate::io::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rectangle ({x_min}, {y_min}, {x_max}, {y_max}): {reason}")]
    InvalidRect {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        reason: &'static str,
    },

    #[error("invalid ellipse: {0}")]
    InvalidEllipse(String),

    #[error("polygonization needs at least {min} vertices, got {got}")]
    TooFewVertices { min: usize, got: usize },

    #[error("invalid anchor spec: {0}")]
    InvalidAnchorSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("detections and ground truths span several images ({first:?} and {second:?})")]
    MixedImageIds { first: String, second: String },

    #[error("dataset has no ground-truth regions")]
    NoGroundTruth,

    #[error("detections reference image {0:?} which has no annotation entry")]
    UnknownImage(String),

    #[error("image {0:?} appears more than once")]
    DuplicateImage(String),

    #[error("image {image_id:?}: {reason}")]
    InvalidDetectionEntry { image_id: String, reason: String },

    #[error(transparent)]
    Parse(#[from] ParseError),
}
