use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("invalid variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("CPT of `{node}` has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        node: String,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("CPT row {row} of `{node}` sums to {sum}")]
    RowSum { node: String, row: usize, sum: f64 },

    #[error("CPT row {row} of `{node}` has entry {value} outside [0, 1]")]
    InvalidProbability { node: String, row: usize, value: f64 },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },

    #[error("state index {state} out of range for `{variable}` ({cardinality} states)")]
    StateOutOfRange {
        variable: String,
        state: usize,
        cardinality: usize,
    },

    #[error("`{node}` has {expected} parents but {got} parent states were given")]
    Arity {
        node: String,
        expected: usize,
        got: usize,
    },

    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("CPT of `{child}` is missing the row for parent states [{}]", .parent_states.join(", "))]
    MissingRow {
        child: String,
        parent_states: Vec<String>,
    },

    #[error("CPT of `{child}` has a duplicate row for parent states [{}]", .parent_states.join(", "))]
    DuplicateRow {
        child: String,
        parent_states: Vec<String>,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("conditioning evidence has zero probability")]
    ZeroProbabilityEvidence,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
