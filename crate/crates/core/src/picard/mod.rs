//! The solver: window sizing, fixed-point iteration per window, and the
//! continuation loop that chains windows up to the requested horizon.
//!
//! Each window `[t1, t2]` is chosen so that `q = N·Σ_k ∫ f_k ≤ θ`. On it the
//! integral operator is a contraction with factor `q`, so successive
//! approximation converges and the distance between the last two iterates
//! certifies the distance to the fixed point. The fixed point becomes part of
//! the prescribed data of the next window.

mod window;

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::funcspace::{
    cumulative_from, FuncError, GridSpec, Interp, PiecewiseFunction, Quadrature, Side, TailSource, Trajectory,
    DEFAULT_CONTINUITY_TOL,
};
use crate::problem::{check_deviations, AdvancedTVP, Direction, FunctionalSystem, ProblemError, RetardedIVP};

pub use window::{
    apply_operator, choose_window, lipschitz_mass, solve_window, IntegralOperator, Window, WindowSolution, WindowSpace,
};

/// Relative tolerance of the bisection on window length.
pub const WINDOW_BISECTION_RTOL: f64 = 1e-10;

/// A final remainder shorter than this fraction of the preceding window is
/// merged into it.
pub const SLIVER_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("horizon {target} is not on the solving side of the anchor {anchor}")]
    InvalidHorizon { anchor: f64, target: f64 },
    #[error(transparent)]
    Validation(#[from] ProblemError),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("no admissible window at t = {t_start}: q = {q} even for the minimal window; try a window floor below {suggested_min_window:e}")]
    ZeroProgress {
        t_start: f64,
        q: f64,
        suggested_min_window: f64,
    },
    #[error("lipschitz majorant of component {} is negative ({value}) at t = {t}", component + 1)]
    NegativeMajorant { component: usize, t: f64, value: f64 },
    #[error("non-finite value for component {} at t = {t}", component + 1)]
    NonFinite { component: usize, t: f64 },
    #[error("no prescribed data for component {} at t = {t}", component + 1)]
    TailGap { component: usize, t: f64 },
    #[error("no convergence on [{t_start}, {t_end}] after {iterations} iterations (last step {distance:e}); the lipschitz majorant is probably too small")]
    NoConvergence {
        t_start: f64,
        t_end: f64,
        iterations: usize,
        distance: f64,
    },
    #[error("in window [{t_start}, {t_end}]: {source}")]
    InWindow {
        t_start: f64,
        t_end: f64,
        #[source]
        source: Box<SolveError>,
    },
}

impl SolveError {
    /// The error with any window context stripped.
    pub fn root(&self) -> &SolveError {
        match self {
            SolveError::InWindow { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Initial Picard iterate on each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// The anchor value held constant across the window.
    #[default]
    ConstantExtension,
    /// Line through the anchor with the slope given by the right-hand side.
    Tangent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target contraction factor, in (0, 1).
    pub theta: f64,
    /// Certified distance to each window's fixed point.
    pub tol: f64,
    pub grid: GridSpec,
    pub max_window: f64,
    /// Shortest window accepted before giving up with `ZeroProgress`.
    pub min_window: f64,
    pub interp: Interp,
    pub quadrature: Quadrature,
    pub initial_guess: InitialGuess,
    /// Iterations allowed beyond the a-priori estimate.
    pub iteration_margin: usize,
    pub continuity_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta: 0.5,
            tol: 1e-8,
            grid: GridSpec::default(),
            max_window: 10.0,
            min_window: 1e-9,
            interp: Interp::CubicHermite,
            quadrature: Quadrature::FourthOrder,
            initial_guess: InitialGuess::ConstantExtension,
            iteration_margin: 10,
            continuity_tol: DEFAULT_CONTINUITY_TOL,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), SolveError> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(SolveError::InvalidConfig("theta must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidConfig("tol must be positive"));
        }
        if !(self.max_window > 0.0) || !(self.min_window > 0.0) {
            return Err(SolveError::InvalidConfig("window limits must be positive"));
        }
        if !(self.continuity_tol >= 0.0) {
            return Err(SolveError::InvalidConfig("continuity tolerance must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub window: Window,
    pub iterations: usize,
    pub final_residual: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// In solving order (left to right forward, right to left backward).
    pub windows: Vec<WindowRecord>,
}

impl SolveReport {
    pub fn total_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn total_iterations(&self) -> usize {
        self.windows.iter().map(|w| w.iterations).sum()
    }

    pub fn max_error_bound(&self) -> f64 {
        self.windows.iter().map(|w| w.error_bound).fold(0.0, f64::max)
    }

    /// The window whose closed span contains `t` (the earlier-solved one at
    /// a junction).
    pub fn window_at(&self, t: f64) -> Option<&WindowRecord> {
        self.windows
            .iter()
            .find(|r| t >= r.window.t_start && t <= r.window.t_end)
    }
}

/// Solved trajectory on `[t0, T]` (or `[T, τ0]`) with the boundary data as tail.
#[derive(Debug, Clone)]
pub struct Solution {
    direction: Direction,
    trajectory: Trajectory,
    boundary: Vec<Arc<PiecewiseFunction>>,
    report: SolveReport,
}

impl Solution {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn report(&self) -> &SolveReport {
        &self.report
    }

    pub fn dim(&self) -> usize {
        self.trajectory.dim()
    }

    /// Solved span, always increasing.
    pub fn span(&self) -> (f64, f64) {
        self.trajectory.window()
    }

    pub fn grid(&self) -> &Arc<[f64]> {
        self.trajectory.grid()
    }

    pub fn eval(&self, k: usize, t: f64) -> Result<f64, FuncError> {
        self.trajectory.eval(k, t)
    }

    /// Where the next window would start.
    pub fn frontier(&self) -> f64 {
        let (a, b) = self.span();
        match self.direction {
            Direction::Forward => b,
            Direction::Backward => a,
        }
    }
}

/// Solves the retarded problem on `[t0, t_end]`.
pub fn solve(p: &RetardedIVP, t_end: f64, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    solve_system(p, t_end, cfg)
}

/// Solves the advanced problem on `[t_start, τ0]`.
pub fn solve_advanced(p: &AdvancedTVP, t_start: f64, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    solve_system(p, t_start, cfg)
}

/// Solves from the anchor to `target` in the problem's direction.
pub fn solve_system<P: FunctionalSystem + ?Sized>(
    p: &P,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    cfg.check()?;
    let anchor = p.anchor();
    let boundary: Vec<Arc<PiecewiseFunction>> = (0..p.dim()).map(|k| Arc::new(p.boundary(k).clone())).collect();
    let start = Stored {
        times: vec![anchor],
        values: boundary
            .iter()
            .enumerate()
            .map(|(component, b)| {
                b.eval(anchor)
                    .map(|v| vec![v])
                    .map_err(|_| SolveError::TailGap { component, t: anchor })
            })
            .collect::<Result<_, _>>()?,
    };
    march(p, boundary, start, SolveReport::default(), target, cfg)
}

/// Continues a solution further in its direction, reusing everything solved
/// so far as prescribed data.
pub fn extend<P: FunctionalSystem + ?Sized>(
    p: &P,
    sol: &Solution,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    cfg.check()?;
    if sol.direction != p.direction() {
        return Err(SolveError::InvalidConfig(
            "solution and problem march in different directions",
        ));
    }
    let stored = Stored {
        times: sol.grid().to_vec(),
        values: (0..sol.dim()).map(|k| sol.trajectory.samples(k).to_vec()).collect(),
    };
    march(p, sol.boundary.clone(), stored, sol.report.clone(), target, cfg)
}

// Samples solved so far, ascending in time.
struct Stored {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Stored {
    fn frontier(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.times[self.times.len() - 1],
            Direction::Backward => self.times[0],
        }
    }

    fn absorb(&mut self, direction: Direction, grid: &[f64], traj: &Trajectory) {
        let n = grid.len();
        match direction {
            Direction::Forward => {
                self.times.extend_from_slice(&grid[1..]);
                for (k, v) in self.values.iter_mut().enumerate() {
                    v.extend_from_slice(&traj.samples(k)[1..]);
                }
            }
            Direction::Backward => {
                self.times.splice(0..0, grid[..n - 1].iter().copied());
                for (k, v) in self.values.iter_mut().enumerate() {
                    v.splice(0..0, traj.samples(k)[..n - 1].iter().copied());
                }
            }
        }
    }

    fn functions(
        &self,
        direction: Direction,
        boundary: &[Arc<PiecewiseFunction>],
        cfg: &SolverConfig,
    ) -> Result<Vec<PiecewiseFunction>, SolveError> {
        let grid: Arc<[f64]> = self.times.clone().into();
        let side = match direction {
            Direction::Forward => Side::Before,
            Direction::Backward => Side::After,
        };
        self.values
            .iter()
            .zip(boundary)
            .map(|(v, b)| {
                Ok(PiecewiseFunction::new(grid.clone(), v.clone(), cfg.interp)?.with_tail(
                    side,
                    TailSource::Stored(b.clone()),
                    cfg.continuity_tol,
                )?)
            })
            .collect()
    }
}

fn march<P: FunctionalSystem + ?Sized>(
    p: &P,
    boundary: Vec<Arc<PiecewiseFunction>>,
    mut stored: Stored,
    mut report: SolveReport,
    target: f64,
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    let dir = p.direction();
    let mut from = stored.frontier(dir);
    let remaining = |from: f64| match dir {
        Direction::Forward => target - from,
        Direction::Backward => from - target,
    };
    if !(remaining(from) > 0.0) {
        return Err(SolveError::InvalidHorizon { anchor: from, target });
    }
    let (lo, hi) = match dir {
        Direction::Forward => (from, target),
        Direction::Backward => (target, from),
    };
    let windows_hint = libm::ceil((hi - lo) / cfg.max_window).clamp(1.0, 4096.0) as usize;
    check_deviations(p, lo, hi, cfg.grid.points_per_window() * windows_hint)?;

    let snap = 1e-12 * target.abs().max(1.0);
    let mut prefix: Vec<Arc<PiecewiseFunction>> = if stored.times.len() == 1 {
        boundary.clone()
    } else {
        stored
            .functions(dir, &boundary, cfg)?
            .into_iter()
            .map(Arc::new)
            .collect()
    };

    while remaining(from) > snap {
        let left = remaining(from);
        let mut w = choose_window(p, from, cfg.max_window.min(left), cfg)?;
        // Absorb a leftover sliver instead of solving it as its own window.
        let sliver = snap.max(SLIVER_RTOL * w.len());
        let stretched = match dir {
            Direction::Forward if target - w.t_end <= sliver => Some((w.t_start, target)),
            Direction::Backward if w.t_start - target <= sliver => Some((target, w.t_end)),
            _ => None,
        };
        if let Some((a, b)) = stretched {
            let q = if (a, b) == (w.t_start, w.t_end) {
                w.q
            } else {
                lipschitz_mass(p, a, b, cfg)?
            };
            if q <= cfg.theta {
                w = Window {
                    t_start: a,
                    t_end: b,
                    q,
                };
            }
        }
        let in_window = |e: SolveError| SolveError::InWindow {
            t_start: w.t_start,
            t_end: w.t_end,
            source: Box::new(e),
        };
        let space = WindowSpace::new(w, dir, prefix, cfg);
        let op = space.operator(p).map_err(in_window)?;
        let init = space.initial_guess(p, cfg.initial_guess).map_err(in_window)?;
        let solved = solve_window(&op, init, cfg.tol, cfg.iteration_margin).map_err(in_window)?;

        stored.absorb(dir, space.grid(), &solved.trajectory);
        report.windows.push(WindowRecord {
            window: w,
            iterations: solved.iterations,
            final_residual: solved.final_residual,
            error_bound: solved.error_bound,
        });
        prefix = stored
            .functions(dir, &boundary, cfg)?
            .into_iter()
            .map(Arc::new)
            .collect();
        from = stored.frontier(dir);
    }

    let trajectory = Trajectory::new(prefix.iter().map(|f| (**f).clone()).collect())?;
    Ok(Solution {
        direction: dir,
        trajectory,
        boundary,
        report,
    })
}

/// Per-component `max_t |φ_k(t) - φ_k(anchor) - ∫_anchor^t F_k(τ, φ(α(τ))) dτ|`
/// over the solution grid, with the default fourth-order quadrature.
pub fn residual<P: FunctionalSystem + ?Sized>(p: &P, sol: &Solution) -> Result<Vec<f64>, SolveError> {
    residual_with(p, sol, Quadrature::FourthOrder)
}

pub fn residual_with<P: FunctionalSystem + ?Sized>(
    p: &P,
    sol: &Solution,
    rule: Quadrature,
) -> Result<Vec<f64>, SolveError> {
    let grid = sol.grid();
    let anchor = p.anchor();
    let (n, n_dev) = (p.dim(), p.deviations());
    let mut u = vec![0.0; grid.len() * n * n_dev];
    for (i, &tau) in grid.iter().enumerate() {
        for m in 0..n {
            for j in 0..n_dev {
                let s = p.deviation(m, j, tau);
                u[(i * n + m) * n_dev + j] = sol.eval(m, s).map_err(|_| SolveError::TailGap { component: m, t: s })?;
            }
        }
    }
    let width = n * n_dev;
    (0..n)
        .map(|k| {
            let start = p.boundary(k).eval(anchor).map_err(|_| SolveError::TailGap {
                component: k,
                t: anchor,
            })?;
            let integrand: Vec<f64> = grid
                .iter()
                .enumerate()
                .map(|(i, &tau)| p.rhs(k, tau, &u[i * width..(i + 1) * width]))
                .collect();
            let running = cumulative_from(grid, &integrand, anchor, rule);
            Ok(sol
                .trajectory
                .samples(k)
                .iter()
                .zip(&running)
                .map(|(phi, c)| (phi - start - c).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}
