use crate::expr::ExprError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{what} is singular (condition estimate {cond:.3e})")]
    Singular { what: String, cond: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
    #[error("trajectory blew up at step {step}")]
    BlowUp { step: usize },
}

impl Error {
    /// Attaches a label to singular-matrix failures.
    pub fn singular_in(self, what: &str) -> Self {
        match self {
            Error::Numerics(NumericsError::Singular { cond }) => Error::Singular {
                what: what.to_string(),
                cond,
            },
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
