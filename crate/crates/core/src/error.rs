use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("relation `{rel}` has arity {expected}, got a tuple of length {got}")]
    ArityMismatch {
        rel: String,
        expected: usize,
        got: usize,
    },

    #[error("element {elem} out of range for universe of size {size}")]
    OutOfRange { elem: usize, size: usize },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("empty element set")]
    EmptySet,

    #[error("map is not functional and injective: {0}")]
    NotInjective(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("ill-formed formula: {0}")]
    Formula(String),

    #[error("k = {k} is below the maximum arity {arity}")]
    KBelowArity { k: usize, arity: usize },

    #[error("tuple space of {tuples} k-tuples exceeds the soft cap {cap}")]
    TupleSpaceCap { tuples: u128, cap: u128 },

    #[error("pebble game position space {positions} exceeds cap {cap}")]
    PositionCap { positions: u128, cap: u128 },

    #[error("k mismatch: {0} vs {1}")]
    KMismatch(usize, usize),

    #[error("structure is not a model of the theory: {0}")]
    NotAModel(String),

    #[error("tableau typing is not total and single-valued at {0:?}")]
    Untyped(Vec<usize>),

    #[error("no admissible type for mixed tuple {tuple:?} (t = {t})")]
    NoAdmissibleType { tuple: Vec<usize>, t: usize },

    #[error("amalgamation precondition violated: {0}")]
    AmalgamPrecondition(String),

    #[error("search bound {max} is smaller than the tableau size {size}")]
    SearchBound { max: usize, size: usize },

    #[error("not a DAG: {0}")]
    NotADag(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("trail index {index} out of range for a trail of length {len}")]
    TrailIndex { index: usize, len: usize },

    #[error("not a trail: {0}")]
    NotATrail(String),

    #[error("no rule for sigma {0}")]
    MissingSigma(String),

    #[error("command response: {0}")]
    Response(String),

    #[error("program: {0}")]
    Program(String),

    #[error("subset enumeration over {size} elements exceeds the limit {limit}")]
    SubsetLimit { size: usize, limit: usize },

    #[error("partial type is not expressible: {0}")]
    Inexpressible(String),

    #[error("corpus size {n} exceeds cap {cap}")]
    CorpusCap { n: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
