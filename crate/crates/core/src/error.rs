use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("kernel size must be odd and at least 3, got {0}")]
    InvalidKernelSize(usize),
    #[error("invalid filter bank: {0}")]
    InvalidBank(String),
    #[error("kernel of size {kernel} does not fit an image of side {image}")]
    SizeMismatch { image: usize, kernel: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeError { expected: usize, got: usize },
    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("at least one candidate feature is required")]
    NoCandidateFeatures,
    #[error("confusion counts are all zero")]
    DegenerateCounts,
    #[error("no ground-truth label for {0}")]
    MissingLabel(String),
}
