use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node {index} out of range for a network of {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },

    #[error("coupling matrix is not symmetric: entries ({row},{col}) and ({col},{row}) differ by {defect:e}")]
    NonSymmetric { row: usize, col: usize, defect: f64 },

    #[error("coupling matrix has a non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigendecomposition failed: {0}")]
    Numerical(String),

    #[error("transfer amplitude magnitude {0} exceeds 1")]
    InvalidAmplitude(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("truncation n_max = {n_max} cannot hold {excitations} excitations on one mode")]
    Truncation { n_max: u8, excitations: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = core::result::Result<T, Error>;
