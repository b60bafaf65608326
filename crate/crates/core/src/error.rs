use thiserror::Error;

pub type Result<T> = std::result::Result<T, QstsError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QstsError {
    #[error("duplicate qubit label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown qubit label `{0}`")]
    UnknownLabel(String),

    #[error("label order does not match: {left:?} vs {right:?}")]
    LabelMismatch { left: Vec<String>, right: Vec<String> },

    #[error("new label order is not a permutation of the register")]
    NotAPermutation,

    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,

    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("amplitude vector has length {len}, expected {expected}")]
    BadLength { len: usize, expected: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("register of {0} qubits exceeds the {max}-qubit limit", max = crate::state::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("Bell outcome has zero probability on pair ({0}, {1})")]
    ZeroProbability(String, String),

    #[error("invalid number of agents {0} (allowed 2..=10)")]
    InvalidAgents(usize),

    #[error("receiver {0} is not valid for this scheme")]
    InvalidReceiver(String),

    #[error("expected {expected} forced outcomes, got {got}")]
    OutcomeCount { expected: usize, got: usize },

    #[error("measurement records are missing the pair {0}")]
    MissingRecord(String),

    #[error("no correction key {0} in the table")]
    UnknownKey(String),

    #[error("no Pauli pair restores the secret for outcomes {0}")]
    NoCorrection(String),

    #[error("several Pauli pairs restore the secret for outcomes {0}; fiducial secret is degenerate")]
    DegenerateSecret(String),

    #[error("outcomes with the same key {0} need different corrections")]
    InconsistentKey(String),

    #[error("state is not a signed permutation of the secret coefficients")]
    NotSignedPermutation,

    #[error("malformed golden table: {0}")]
    Golden(String),
}
