use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    /// An expression error located at a key of a problem file.
    #[error("`{path}`: {source}")]
    Expression {
        path: String,
        #[source]
        source: ExprError,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in component {component} at node {node} (r = {radius})")]
    NonFiniteValue {
        component: usize,
        node: usize,
        radius: f64,
    },

    /// An evaluation or overflow failure inside the successive-approximation loop.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sandwich construction failed: {0}")]
    SandwichFailed(String),

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("integrand is negative ({value:e}) at t = {at}")]
    NonPositiveIntegrand { at: f64, value: f64 },

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn at_iteration(iteration: usize, err: Error) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(err),
        }
    }

    /// The innermost error, with iteration wrappers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the CLI and mirrored by the C status codes.
    ///
    /// 2 schema, 3 expression syntax, 5 evaluation domain error. Code 4
    /// (non-convergence) is an outcome, not an error, and is decided by the caller.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Schema { .. } | Error::Io { .. } | Error::InvalidArgument(_) => 2,
            Error::Expr(e) | Error::Expression { source: e, .. } if e.is_parse_error() => 3,
            Error::Expr(_)
            | Error::Expression { .. }
            | Error::NonFiniteValue { .. }
            | Error::NonPositiveIntegrand { .. } => 5,
            Error::SandwichFailed(_) => 4,
            Error::Consistency(_) | Error::AtIteration { .. } => 1,
        }
    }
}
