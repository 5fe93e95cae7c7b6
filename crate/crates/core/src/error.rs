use thiserror::Error;

/// Errors raised by tree parsing, group arithmetic and representation code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("arity mismatch at byte {offset}: expected {expected} children, found {found}")]
    ArityMismatch {
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("arity mismatch: {left} vs {right}")]
    IncompatibleArity { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{what}: requested {requested} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("leaf count mismatch: top has {top} leaves, bottom has {bottom}")]
    LeafCountMismatch { top: usize, bottom: usize },

    #[error("invalid decoration: {0}")]
    InvalidDecoration(String),

    #[error("flavor mismatch: {0}")]
    FlavorMismatch(String),

    #[error("point {0} is a breakpoint with distinct one-sided slopes")]
    Breakpoint(String),

    #[error("point {0} lies outside the domain")]
    OutOfDomain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("adjoint inconsistency: pairing residual {residual:e}")]
    AdjointInconsistent { residual: f64 },

    #[error("vectors belong to different modules")]
    ModuleMismatch,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("interval {0} cannot be refined into the bottom partition")]
    NotRefinable(String),

    #[error("module does not satisfy the Cuntz relations (residual {residual:e})")]
    NotCuntz { residual: f64 },

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("unknown preset '{id}'; valid ids: {valid}")]
    UnknownPreset { id: String, valid: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
