use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parameter mismatch: `{left}` vs `{right}`")]
    ParamMismatch { left: String, right: String },
    #[error("parameter degree {degree} below the window bottom -{bottom}")]
    Underflow { degree: i32, bottom: u32 },
    #[error("negative parameter powers remain (lowest degree {0})")]
    NegativePowers(i32),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("nonlinear exp argument at {pos}")]
    NonlinearExp { pos: usize },
    #[error("not a commutative expression: {0}")]
    NotCommutative(String),
    #[error("straightening admissibility violated: {0}")]
    Admissibility(String),
    #[error("elements belong to different algebras")]
    SpecMismatch,
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("left the flow domain near s = {s}")]
    BlowUp { s: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by leaving a flow or evaluation domain rather than by bad input.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::Domain(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
