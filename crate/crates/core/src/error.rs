use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing moment beta_{{{0},{1}}}")]
    MissingMoment(usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("polynomial of degree {degree} exceeds the available degree {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("data not supported on the curve: {0}")]
    NotOnCurve(String),
    #[error("extraction failed, increase precision")]
    ExtractionFailed,
    #[error("certification failed: {0}")]
    Certification(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
