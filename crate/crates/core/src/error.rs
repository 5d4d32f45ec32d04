use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("registry error: {0}")]
    Registry(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("not polynomial in the requested variables: {0}")]
    NotPolynomial(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("metric is not invertible (zero determinant)")]
    SingularMetric,
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid problem specification: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
