//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate record id `{0}`")]
    DuplicateId(String),

    #[error("unknown record id `{0}`")]
    UnknownId(String),

    #[error("record `{id}`: {msg}")]
    InvalidRecord { id: String, msg: String },

    #[error("pair references the same record id `{0}` twice")]
    SelfPair(String),

    #[error("conflicting labels for pair ({0}, {1})")]
    ConflictingLabel(String, String),

    #[error("record `{id}` has no usable `{key}` value to serve as truth")]
    MissingTruth { id: String, key: String },

    #[error("unknown truth key `{0}`")]
    UnknownTruthKey(String),

    #[error("predicate {0} is not valid for its key")]
    InvalidPredicate(String),

    #[error("predicate {0} does not induce a key partition")]
    NotPartitionable(String),

    #[error("cosine predicate evaluated without a tf-idf model in context")]
    MissingTfidf,

    #[error("tf-idf model was not built for key `{0}`")]
    MissingTfidfKey(String),

    #[error("formula parse error at offset {pos}: {msg}")]
    FormulaParse { pos: usize, msg: String },

    #[error("term or clause must contain at least one predicate")]
    EmptyTerm,

    #[error("duplicate predicate {0} within a term or clause")]
    DuplicatePredicate(String),

    #[error("duplicate term or clause {0} within a formula")]
    DuplicateTerm(String),

    #[error("gain is undefined when a class total is zero (P={0}, N={1})")]
    DegenerateCounts(u64, u64),

    #[error("labeled set must contain at least one positive and one negative pair")]
    DegenerateLabels,

    #[error("candidate pair ({0}, {1}) is outside the labeled pair universe")]
    UnlabeledPair(String, String),

    #[error("predicate set is empty")]
    EmptyPredicateSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
