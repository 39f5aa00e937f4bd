use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A prime dividing the discriminant of the defining polynomial was
    /// handed to a classification routine.
    #[error("prime {p} is ramified (divides the polynomial discriminant)")]
    Ramified { p: u64 },

    /// An argument violated a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration text failed to parse or validate.
    #[error("configuration error: {0}")]
    Config(String),

    /// A computation would exceed a configured memory or work budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// Exact integer arithmetic overflowed the machine word; the input is
    /// beyond desk scale.
    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
