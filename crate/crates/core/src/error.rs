use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("coincident points: diffraction coefficient undefined at zero distance")]
    CoincidentPoints,
    #[error("layer index {index} out of range 1..={layers}")]
    LayerOutOfRange { index: usize, layers: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("need at least {needed} antennas, have {available}")]
    TooFewAntennas { needed: usize, available: usize },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
