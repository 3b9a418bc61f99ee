use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("payoffs of player {0} are not a permutation of 1..=4")]
    NotOrdinal(u8),
    #[error("malformed history: {0}")]
    MalformedHistory(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {found} distinct types available, {wanted} requested")]
    NotEnoughTypes { found: usize, wanted: usize },
    #[error("belief collapse: every type gives the observed action probability zero")]
    BeliefCollapse,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot decode genome: {0}")]
    Genome(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn genome(msg: impl Into<String>) -> Self {
        Error::Genome(msg.into())
    }
}
