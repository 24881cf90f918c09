//! Error type shared across the crate.

use crate::rules::RuleType;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A scattering-matrix factor is singular on the named species block.
    #[error("singular scattering factor on block {block}: {detail}")]
    SingularBlock { block: String, detail: String },

    /// The rule admits the interaction algebra but not a Markov dynamics.
    #[error("rule {0} does not define a consistent particle dynamics")]
    UnsupportedRule(RuleType),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::ResourceLimit(msg.into())
    }
}
