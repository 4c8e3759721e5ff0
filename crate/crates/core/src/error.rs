use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("detailed balance violated at ({x}, {y}): m(x)q(x,y) = {lhs}, m(y)q(y,x) = {rhs}")]
    DetailedBalance { x: usize, y: usize, lhs: f64, rhs: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("integrand must vanish at the cemetery, got f(cemetery) = {0}")]
    CemeteryValue(f64),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved}, requested {requested}")]
    Quadrature { estimate: f64, achieved: f64, requested: f64 },
    #[error("integrand diverges near the origin: {0}")]
    Divergent(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
