use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("user {user}: invalid antenna/DoF triple ({m}x{n},{d})")]
    InvalidUser {
        user: usize,
        m: usize,
        n: usize,
        d: usize,
    },

    #[error("an interference network needs at least 2 users, got {0}")]
    TooFewUsers(usize),

    #[error("system is not symmetric")]
    NotSymmetric,

    #[error("system is improper")]
    Improper,

    #[error("brute-force enumeration limited to {limit} equations, system has {actual}")]
    TooManyEquations { limit: usize, actual: usize },

    #[error("{what}: guard exceeded ({actual} > {limit})")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("lifting is not regular after {0} attempts")]
    NonRegularLifting(usize),

    #[error("system shape not supported by this solver: {0}")]
    UnsupportedShape(String),

    #[error("alignment verification failed: residual {0:e}")]
    Verification(f64),

    #[error("system is underdetermined ({equations} equations < {variables} variables)")]
    Underdetermined { equations: usize, variables: usize },

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
