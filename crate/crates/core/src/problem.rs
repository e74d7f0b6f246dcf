//! Problem statements: retarded Cauchy problems, advanced terminal-value
//! problems, their linear special cases, and the sampled checks of the
//! deviation conditions.
//!
//! Deviated arguments are indexed by the component they read: the right-hand
//! side of every equation receives `u[m·N + j] = φ_m(α_mj(t))` for
//! `m = 0..n`, `j = 0..N`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::funcspace::{FuncError, GridSpec, PiecewiseFunction, TimeFn};

/// Right-hand side `F_k(t, u)` with `u` laid out as `u[m·N + j]`.
pub type RhsFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Slack allowed when sampling `α(t) ≤ t` or `β(t) ≥ t`.
pub const DEVIATION_TOL: f64 = 1e-12;

pub fn time_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TimeFn {
    Arc::new(f)
}

pub fn rhs_fn(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> RhsFn {
    Arc::new(f)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("system needs at least one component and one deviation")]
    Empty,
    #[error("{what}: expected {expected} entries, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("boundary data for component {component} is not defined at the anchor: {source}")]
    Boundary { component: usize, source: FuncError },
    #[error("span [{0}, {1}] is empty")]
    EmptySpan(f64, f64),
    #[error("retardation condition α(t) ≤ t violated at {} sample(s); first: {}", .0.violations.len(), .0.first())]
    RetardationViolated(ValidationReport),
    #[error("advance condition β(t) ≥ t violated at {} sample(s); first: {}", .0.violations.len(), .0.first())]
    AdvanceViolated(ValidationReport),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Component read through the deviated argument (0-based).
    pub component: usize,
    /// Deviation index (0-based).
    pub deviation: usize,
    pub t: f64,
    pub value: f64,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "deviation ({}, {}) at t = {} has value {}",
            self.component + 1,
            self.deviation + 1,
            self.t,
            self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn first(&self) -> Violation {
        self.violations[0]
    }
}

/// Which way the solver marches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Retarded problems: data on the left, windows march right.
    Forward,
    /// Advanced problems: data on the right, windows march left.
    Backward,
}

/// Common view of retarded and advanced problems used by the solver.
pub trait FunctionalSystem {
    fn direction(&self) -> Direction;
    /// Number of components `n`.
    fn dim(&self) -> usize;
    /// Number of deviations per component `N`.
    fn deviations(&self) -> usize;
    /// `t0` for retarded problems, `τ0` for advanced ones.
    fn anchor(&self) -> f64;
    fn rhs(&self, k: usize, t: f64, u: &[f64]) -> f64;
    fn deviation(&self, m: usize, j: usize, t: f64) -> f64;
    fn majorant(&self, k: usize, t: f64) -> f64;
    /// History (retarded) or terminal data (advanced) of component `k`.
    fn boundary(&self, k: usize) -> &PiecewiseFunction;
}

struct Parts {
    rhs: Vec<RhsFn>,
    deviations: Vec<TimeFn>,
    majorants: Vec<TimeFn>,
    boundary: Vec<PiecewiseFunction>,
}

fn check_parts(anchor: f64, n_dev: usize, parts: &Parts) -> Result<(), ProblemError> {
    let n = parts.rhs.len();
    if n == 0 || n_dev == 0 {
        return Err(ProblemError::Empty);
    }
    let shape = |what, expected, found| {
        if expected == found {
            Ok(())
        } else {
            Err(ProblemError::Shape { what, expected, found })
        }
    };
    shape("deviations", n * n_dev, parts.deviations.len())?;
    shape("lipschitz majorants", n, parts.majorants.len())?;
    shape("boundary data", n, parts.boundary.len())?;
    for (component, b) in parts.boundary.iter().enumerate() {
        b.eval(anchor)
            .map_err(|source| ProblemError::Boundary { component, source })?;
    }
    Ok(())
}

/// Retarded Cauchy problem: `φ_k' = F_k(t, φ(α(t)))` for `t ≥ t0`,
/// `φ_k = r_k` on `(-∞, t0]`.
#[derive(Clone)]
pub struct RetardedIVP {
    t0: f64,
    n_dev: usize,
    parts: Parts,
}

impl Clone for Parts {
    fn clone(&self) -> Self {
        Parts {
            rhs: self.rhs.clone(),
            deviations: self.deviations.clone(),
            majorants: self.majorants.clone(),
            boundary: self.boundary.clone(),
        }
    }
}

impl RetardedIVP {
    /// `delays` is row-major `n × N`: entry `m·N + j` is `α_mj`.
    pub fn new(
        t0: f64,
        deviations: usize,
        rhs: Vec<RhsFn>,
        delays: Vec<TimeFn>,
        lipschitz: Vec<TimeFn>,
        history: Vec<PiecewiseFunction>,
    ) -> Result<Self, ProblemError> {
        let parts = Parts {
            rhs,
            deviations: delays,
            majorants: lipschitz,
            boundary: history,
        };
        check_parts(t0, deviations, &parts)?;
        Ok(RetardedIVP {
            t0,
            n_dev: deviations,
            parts,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn history(&self, k: usize) -> &PiecewiseFunction {
        &self.parts.boundary[k]
    }

    /// The advanced problem solved by `ψ(s) = φ(-s)`.
    pub fn reflect(&self) -> AdvancedTVP {
        AdvancedTVP {
            tau0: -self.t0,
            n_dev: self.n_dev,
            parts: reflect_parts(&self.parts),
        }
    }
}

/// Advanced terminal-value problem: `φ_k' = G_k(t, φ(β(t)))` for `t ≤ τ0`,
/// `φ_k = s_k` on `[τ0, ∞)`.
#[derive(Clone)]
pub struct AdvancedTVP {
    tau0: f64,
    n_dev: usize,
    parts: Parts,
}

impl AdvancedTVP {
    /// `advances` is row-major `n × N`: entry `m·N + j` is `β_mj`.
    pub fn new(
        tau0: f64,
        deviations: usize,
        rhs: Vec<RhsFn>,
        advances: Vec<TimeFn>,
        lipschitz: Vec<TimeFn>,
        terminal: Vec<PiecewiseFunction>,
    ) -> Result<Self, ProblemError> {
        let parts = Parts {
            rhs,
            deviations: advances,
            majorants: lipschitz,
            boundary: terminal,
        };
        check_parts(tau0, deviations, &parts)?;
        Ok(AdvancedTVP {
            tau0,
            n_dev: deviations,
            parts,
        })
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn terminal(&self, k: usize) -> &PiecewiseFunction {
        &self.parts.boundary[k]
    }

    /// The retarded problem solved by `ψ(s) = φ(-s)`.
    pub fn reflect(&self) -> RetardedIVP {
        RetardedIVP {
            t0: -self.tau0,
            n_dev: self.n_dev,
            parts: reflect_parts(&self.parts),
        }
    }
}

// ψ(s) = φ(-s) gives ψ'(s) = -F(-s, ψ(-α(-s))).
fn reflect_parts(p: &Parts) -> Parts {
    Parts {
        rhs: p
            .rhs
            .iter()
            .map(|f| {
                let f = f.clone();
                rhs_fn(move |s, u| -f(-s, u))
            })
            .collect(),
        deviations: p
            .deviations
            .iter()
            .map(|a| {
                let a = a.clone();
                time_fn(move |s| -a(-s))
            })
            .collect(),
        majorants: p
            .majorants
            .iter()
            .map(|h| {
                let h = h.clone();
                time_fn(move |s| h(-s))
            })
            .collect(),
        boundary: p.boundary.iter().map(PiecewiseFunction::reflect).collect(),
    }
}

macro_rules! impl_system {
    ($ty:ty, $dir:expr, $anchor:ident) => {
        impl FunctionalSystem for $ty {
            fn direction(&self) -> Direction {
                $dir
            }
            fn dim(&self) -> usize {
                self.parts.rhs.len()
            }
            fn deviations(&self) -> usize {
                self.n_dev
            }
            fn anchor(&self) -> f64 {
                self.$anchor
            }
            fn rhs(&self, k: usize, t: f64, u: &[f64]) -> f64 {
                (self.parts.rhs[k])(t, u)
            }
            fn deviation(&self, m: usize, j: usize, t: f64) -> f64 {
                (self.parts.deviations[m * self.n_dev + j])(t)
            }
            fn majorant(&self, k: usize, t: f64) -> f64 {
                (self.parts.majorants[k])(t)
            }
            fn boundary(&self, k: usize) -> &PiecewiseFunction {
                &self.parts.boundary[k]
            }
        }
    };
}

impl_system!(RetardedIVP, Direction::Forward, t0);
impl_system!(AdvancedTVP, Direction::Backward, tau0);

/// Checks the deviation condition of `p` at `points` uniform samples of
/// `[a, b]`: `α ≤ t` going forward, `β ≥ t` going backward.
pub fn check_deviations<P: FunctionalSystem + ?Sized>(
    p: &P,
    a: f64,
    b: f64,
    points: usize,
) -> Result<ValidationReport, ProblemError> {
    if !(a < b) {
        return Err(ProblemError::EmptySpan(a, b));
    }
    let grid = crate::funcspace::uniform_grid(a, b, points);
    let mut report = ValidationReport::default();
    for &t in grid.iter() {
        let slack = DEVIATION_TOL * t.abs().max(1.0);
        for m in 0..p.dim() {
            for j in 0..p.deviations() {
                let value = p.deviation(m, j, t);
                report.checked += 1;
                let ok = match p.direction() {
                    Direction::Forward => value <= t + slack,
                    Direction::Backward => value >= t - slack,
                };
                if !ok {
                    report.violations.push(Violation {
                        component: m,
                        deviation: j,
                        t,
                        value,
                    });
                }
            }
        }
    }
    if report.passed() {
        Ok(report)
    } else {
        Err(match p.direction() {
            Direction::Forward => ProblemError::RetardationViolated(report),
            Direction::Backward => ProblemError::AdvanceViolated(report),
        })
    }
}

/// Samples `α_mj(t) ≤ t` on `grid.points_per_window()` points of `span`.
pub fn validate_retardation(
    p: &RetardedIVP,
    span: (f64, f64),
    grid: &GridSpec,
) -> Result<ValidationReport, ProblemError> {
    check_deviations(p, span.0, span.1, grid.points_per_window())
}

/// Samples `β_mj(t) ≥ t` on `grid.points_per_window()` points of `span`.
pub fn validate_advance(p: &AdvancedTVP, span: (f64, f64), grid: &GridSpec) -> Result<ValidationReport, ProblemError> {
    check_deviations(p, span.0, span.1, grid.points_per_window())
}

/// `φ_k' = Σ_j Σ_m a_kjm(t) φ_j(α_jm(t)) + b_k(t)`.
#[derive(Clone)]
pub struct LinearRetardedSystem {
    pub t0: f64,
    pub deviations: usize,
    /// `a_kjm` at index `(k·n + j)·N + m`.
    pub coefficients: Vec<TimeFn>,
    pub forcing: Vec<TimeFn>,
    /// `α_jm` at index `j·N + m`.
    pub delays: Vec<TimeFn>,
    pub history: Vec<PiecewiseFunction>,
}

/// `φ_k' = Σ_j Σ_m c_kjm(t) φ_j(β_jm(t)) + d_k(t)`.
#[derive(Clone)]
pub struct LinearAdvancedSystem {
    pub tau0: f64,
    pub deviations: usize,
    /// `c_kjm` at index `(k·n + j)·N + m`.
    pub coefficients: Vec<TimeFn>,
    pub forcing: Vec<TimeFn>,
    /// `β_jm` at index `j·N + m`.
    pub advances: Vec<TimeFn>,
    pub terminal: Vec<PiecewiseFunction>,
}

type LinearParts = (Vec<RhsFn>, Vec<TimeFn>);

fn linear_parts(
    n: usize,
    n_dev: usize,
    coefficients: &[TimeFn],
    forcing: &[TimeFn],
) -> Result<LinearParts, ProblemError> {
    if coefficients.len() != n * n * n_dev {
        return Err(ProblemError::Shape {
            what: "linear coefficients",
            expected: n * n * n_dev,
            found: coefficients.len(),
        });
    }
    let mut rhs = Vec::with_capacity(n);
    let mut majorants = Vec::with_capacity(n);
    for k in 0..n {
        let row: Arc<[TimeFn]> = coefficients[k * n * n_dev..(k + 1) * n * n_dev].into();
        let b = forcing[k].clone();
        let coeffs = row.clone();
        rhs.push(rhs_fn(move |t, u| {
            coeffs.iter().zip(u).map(|(a, x)| a(t) * x).sum::<f64>() + b(t)
        }));
        majorants.push(time_fn(move |t| row.iter().map(|a| a(t).abs()).fold(0.0, f64::max)));
    }
    Ok((rhs, majorants))
}

/// Builds `F_k(t, u) = Σ a_kjm(t) u_jm + b_k(t)` with majorant
/// `f_k(t) = max_{j,m} |a_kjm(t)|`.
pub fn linear_to_general(sys: &LinearRetardedSystem) -> Result<RetardedIVP, ProblemError> {
    let n = sys.forcing.len();
    let (rhs, majorants) = linear_parts(n, sys.deviations, &sys.coefficients, &sys.forcing)?;
    RetardedIVP::new(
        sys.t0,
        sys.deviations,
        rhs,
        sys.delays.clone(),
        majorants,
        sys.history.clone(),
    )
}

/// Advanced counterpart of [`linear_to_general`], majorant `h_k = max |c_kjm|`.
pub fn linear_to_general_advanced(sys: &LinearAdvancedSystem) -> Result<AdvancedTVP, ProblemError> {
    let n = sys.forcing.len();
    let (rhs, majorants) = linear_parts(n, sys.deviations, &sys.coefficients, &sys.forcing)?;
    AdvancedTVP::new(
        sys.tau0,
        sys.deviations,
        rhs,
        sys.advances.clone(),
        majorants,
        sys.terminal.clone(),
    )
}
