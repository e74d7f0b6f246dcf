//! Reference solutions that share no code with the solver: exact
//! method of steps for constant-lag linear systems with polynomial data, the
//! pantograph power series, and a fixed-step classical Runge–Kutta scheme.

mod pantograph;
mod poly;
mod rk4;
mod steps;

use thiserror::Error;

pub use pantograph::{pantograph_series, PantographValue};
pub use poly::Poly;
pub use rk4::{rk4_reference, Sampled};
pub use steps::{
    method_of_steps, method_of_steps_advanced, Piece, PiecewisePolynomialSolution, PolyAdvanceSystem, PolyDelaySystem,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("deviation {index} is not of the form t - tau with constant tau > 0")]
    NonconstantDelay { index: usize },
    #[error("{what} is not a polynomial")]
    NonpolynomialInput { what: &'static str },
    #[error("inconsistent shape: {0}")]
    Shape(&'static str),
    #[error("more than {limit} step intervals needed up to the horizon")]
    TooManyPieces { limit: usize },
    #[error("horizon {horizon} is not past the anchor {anchor}")]
    Horizon { anchor: f64, horizon: f64 },
}
