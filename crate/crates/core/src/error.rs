use thiserror::Error;

/// Errors raised while loading data, analysing queries or evaluating them.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("query is not free-connex acyclic")]
    NotFreeConnex,
    #[error("query is not acyclic")]
    NotAcyclic,
    #[error("Gaifman graph of the query is not a tree")]
    NotTree,
    #[error("free variables do not induce a connected subgraph")]
    FreeNotConnected,
    #[error("decomposition does not fit the query: {0}")]
    BadGhd(String),
    #[error("malformed answer tuple: {0}")]
    MalformedAnswer(String),
    #[error("schema is not binary")]
    NotBinarySchema,
    #[error("schema is not a node-labeled graph schema")]
    NotGraphSchema,
    #[error("edge relation is not symmetric: ({0}, {1}) present without its reverse")]
    AsymmetricEdgeRelation(String, String),
    #[error("oracle budget of {budget} assignments exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error("index format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
