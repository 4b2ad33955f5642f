use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("at least two receivers are required to define an eavesdropper, got {0}")]
    NoEavesdropper(usize),

    #[error("energy receiver index {index} out of range ({count} energy receivers)")]
    ErIndex { index: usize, count: usize },

    /// The per-subcarrier Lagrangian grows without bound (unbounded peak power
    /// with a nonnegative power price).
    #[error("per-subcarrier Lagrangian is unbounded above (price {omega:e})")]
    Unbounded { omega: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
