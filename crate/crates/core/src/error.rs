use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is {width}x{height}; at least 3x3 is required")]
    ImageTooSmall { width: usize, height: usize },

    #[error("invalid image dimensions {width}x{height} for {len} pixels")]
    BadDimensions {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("circle bounding square lies entirely outside the image")]
    CircleOutOfBounds,

    #[error("no circle found: the Hough accumulator is empty")]
    NoCircleFound,

    #[error("invalid Hough parameters: {0}")]
    BadHoughParams(String),

    #[error("bad network topology: {0}")]
    BadTopology(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid training configuration: {0}")]
    BadConfig(String),

    #[error("class label {0} is outside 0..14")]
    BadLabel(usize),

    #[error("no samples for denomination {0}")]
    EmptyDenomination(String),

    #[error("rotation step {0} does not divide 360")]
    BadStep(u32),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image: {0}")]
    CorruptImage(String),

    #[error("invalid model file: {0}")]
    BadModelFile(String),

    #[error("invalid manifest: {0}")]
    BadManifest(String),

    #[error("base image {id}: {source}")]
    BaseImage {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
