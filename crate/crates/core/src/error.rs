use thiserror::Error;

/// Errors raised by the library.
///
/// Degenerate evidence (unreachable moments, conditioning on null events) is
/// not an error: it is reported as an `Overdetermined` outcome by the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operands belong to different algebras")]
    AlgebraMismatch,

    #[error("quotient by null atoms leaves no atom")]
    EmptyQuotient,

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("invalid information state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary error: {0}")]
    Boundary(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e}){}", boundary_note(.boundary))]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Smallest relative atom weight reached when the iterate ran into
        /// the boundary of the model.
        boundary: Option<f64>,
    },

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("invalid category: {0}")]
    InvalidCategory(String),

    #[error("invalid functor {name}: {}", .violations.join("; "))]
    InvalidFunctor { name: String, violations: Vec<String> },

    #[error("enumeration of {count} comma objects exceeds the cap of {cap}")]
    SizeLimit { count: u128, cap: u128 },
}

fn boundary_note(boundary: &Option<f64>) -> String {
    match boundary {
        Some(w) => format!("; iterate approaches the model boundary (min relative weight {w:e})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
