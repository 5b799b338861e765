use jtree_core::Violation;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{context}:{line}:{column}: {message}")]
    Syntax { context: String, line: usize, column: usize, message: String },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Reference(Violation),
    #[error("generator: {0}")]
    Generator(String),
    #[error(transparent)]
    Core(#[from] jtree_core::Error),
}

impl Error {
    /// Process exit status: 2 for invalid input models or parameters, 3 for
    /// an excluded case, 4 for I/O and parse failures.
    pub fn exit_code(&self) -> i32 {
        use jtree_core::Error as C;
        match self {
            Error::Reference(_) | Error::Generator(_) => 2,
            Error::Core(C::InvalidNetwork(_) | C::Epsilon(_)) => 2,
            Error::Core(C::Excluded) => 3,
            _ => 4,
        }
    }
}
