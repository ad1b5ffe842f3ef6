use std::path::PathBuf;

/// Errors produced by the retrieval engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("degenerate image {width}x{height}: both sides must be at least 2 pixels")]
    DegenerateImage { width: u32, height: u32 },
    #[error("value outside its domain: {0}")]
    DomainError(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("index is empty")]
    EmptyIndex,
    #[error("bin configuration mismatch: index uses {index}, query uses {query}")]
    ConfigMismatch { index: String, query: String },
    #[error("duplicate image id {0:?}")]
    DuplicateId(String),
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("all {0} images failed to decode")]
    AllImagesFailed(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("index checksum mismatch (file truncated or corrupted)")]
    ChecksumMismatch,
    #[error("index format version {found} is newer than supported version {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("invalid index file: {0}")]
    InvalidFormat(String),
    #[error("no images found under {0}")]
    EmptyDataset(PathBuf),
    #[error("cannot read directory {path}: {source}")]
    UnreadableDirectory {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error("query set is empty")]
    EmptyQuerySet,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable name of the error kind, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedFormat => "UnsupportedFormat",
            Error::CorruptImage(_) => "CorruptImage",
            Error::DegenerateImage { .. } => "DegenerateImage",
            Error::DomainError(_) => "DomainError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyIndex => "EmptyIndex",
            Error::ConfigMismatch { .. } => "ConfigMismatch",
            Error::DuplicateId(_) => "DuplicateId",
            Error::EmptyManifest => "EmptyManifest",
            Error::AllImagesFailed(_) => "AllImagesFailed",
            Error::Io(_) => "IoError",
            Error::ChecksumMismatch => "ChecksumMismatch",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::InvalidFormat(_) => "InvalidFormat",
            Error::EmptyDataset(_) => "EmptyDataset",
            Error::UnreadableDirectory { .. } => "UnreadableDirectory",
            Error::MalformedCsv(_) => "MalformedCsv",
            Error::EmptyQuerySet => "EmptyQuerySet",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
