//! Windowed Picard iteration for quasilinear systems of functional
//! differential equations.
//!
//! Two problem families are covered:
//!
//! * retarded Cauchy problems `φ_k'(t) = F_k(t, φ_1(α_11(t)), …, φ_n(α_nN(t)))`
//!   for `t ≥ t0` with `α_kj(t) ≤ t` and a prescribed history on `(-∞, t0]`;
//! * advanced terminal-value problems `φ_k'(t) = G_k(t, φ(β(t)), …)` for
//!   `t ≤ τ0` with `β_kj(t) ≥ t` and prescribed terminal data on `[τ0, ∞)`.
//!
//! The solver splits the horizon into windows on which the integral operator
//! is a contraction with factor `q = N·Σ_k ∫ f_k ≤ θ < 1`, iterates to the
//! fixed point on each window, and chains windows so that each one sees every
//! previously solved window as prescribed data. Every window carries a Banach
//! a-posteriori error bound.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command line
//! front-end live in the companion `fde` crate.
//!
//! ```
//! use fde_core::funcspace::PiecewiseFunction;
//! use fde_core::picard::{solve, SolverConfig};
//! use fde_core::problem::{rhs_fn, time_fn, RetardedIVP};
//!
//! // φ'(t) = φ(t - 1), φ ≡ 1 on (-∞, 0]
//! let p = RetardedIVP::new(
//!     0.0,
//!     1,
//!     vec![rhs_fn(|_t, u| u[0])],
//!     vec![time_fn(|t| t - 1.0)],
//!     vec![time_fn(|_| 1.0)],
//!     vec![PiecewiseFunction::history(time_fn(|_| 1.0), 0.0)],
//! )
//! .unwrap();
//! let sol = solve(&p, 2.0, &SolverConfig::default()).unwrap();
//! assert!((sol.eval(0, 2.0).unwrap() - 3.5).abs() < 1e-6);
//! ```
#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod expr;
pub mod funcspace;
pub mod oracle;
pub mod picard;
pub mod problem;

pub use funcspace::{GridSpec, Interp, PiecewiseFunction, Quadrature, Trajectory};
pub use picard::{solve, solve_advanced, Solution, SolveError, SolveReport, SolverConfig, Window};
pub use problem::{AdvancedTVP, RetardedIVP};
