use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no principal direction")]
    NoPrincipalDirection,
    #[error("second principal direction undefined")]
    SecondDirectionUndefined,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("k too large: k={k} with n={n}")]
    KTooLarge { k: usize, n: usize },
    #[error("source {source_node} out of range for {n} nodes")]
    SourceOutOfRange { source_node: usize, n: usize },
    #[error("degenerate geodesic")]
    DegenerateGeodesic,
    #[error("geodesic on disconnected cluster")]
    DisconnectedCluster,
    #[error("degenerate grid")]
    DegenerateGrid,
    #[error("inverse frame incomplete")]
    InverseFrameIncomplete,
    #[error("zero-variance signal")]
    ZeroVariance,
    #[error("singular design")]
    SingularDesign,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the algorithm on valid input, as opposed to bad data or arguments.
    pub fn is_algorithmic(&self) -> bool {
        matches!(
            self,
            Error::NoPrincipalDirection
                | Error::SecondDirectionUndefined
                | Error::DegenerateGeodesic
                | Error::DisconnectedCluster
                | Error::DegenerateGrid
                | Error::InverseFrameIncomplete
                | Error::ZeroVariance
                | Error::SingularDesign
        )
    }
}
