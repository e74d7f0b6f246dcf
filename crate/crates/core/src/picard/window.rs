//! One contraction window: sizing, the integral operator, and successive
//! approximation to its fixed point.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::funcspace::{
    cumulative_from, distance, total_integral, FuncError, PiecewiseFunction, Side, TailSource, Trajectory,
};
use crate::problem::{Direction, FunctionalSystem, ProblemError, ValidationReport, Violation, DEVIATION_TOL};

use super::{InitialGuess, SolveError, SolverConfig};

/// A sub-interval with its certified contraction factor
/// `q = N · Σ_k ∫ f_k(τ) dτ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_start: f64,
    pub t_end: f64,
    pub q: f64,
}

impl Window {
    pub fn len(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Where the fixed point is pinned to the prescribed data.
    pub fn anchor(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.t_start,
            Direction::Backward => self.t_end,
        }
    }
}

fn span_from(direction: Direction, from: f64, len: f64) -> (f64, f64) {
    match direction {
        Direction::Forward => (from, from + len),
        Direction::Backward => (from - len, from),
    }
}

/// `N · Σ_k ∫_a^b f_k` on the configured window grid.
pub fn lipschitz_mass<P: FunctionalSystem + ?Sized>(
    p: &P,
    a: f64,
    b: f64,
    cfg: &SolverConfig,
) -> Result<f64, SolveError> {
    let grid = cfg.grid.uniform(a, b);
    let mut mass = 0.0;
    let mut samples = vec![0.0; grid.len()];
    for k in 0..p.dim() {
        for (s, &t) in samples.iter_mut().zip(grid.iter()) {
            let value = p.majorant(k, t);
            if !value.is_finite() {
                return Err(SolveError::NonFinite { component: k, t });
            }
            if value < 0.0 {
                return Err(SolveError::NegativeMajorant { component: k, t, value });
            }
            *s = value;
        }
        mass += total_integral(&grid, &samples, cfg.quadrature);
    }
    Ok(mass * p.deviations() as f64)
}

/// Largest window of length `≤ max_len` starting at `from` (marching in the
/// problem's direction) whose contraction factor does not exceed `cfg.theta`.
pub fn choose_window<P: FunctionalSystem + ?Sized>(
    p: &P,
    from: f64,
    max_len: f64,
    cfg: &SolverConfig,
) -> Result<Window, SolveError> {
    cfg.check()?;
    if !(max_len > 0.0) {
        return Err(SolveError::InvalidConfig("window length must be positive"));
    }
    let dir = p.direction();
    let q_of = |len: f64| {
        let (a, b) = span_from(dir, from, len);
        lipschitz_mass(p, a, b, cfg)
    };
    let make = |len: f64, q: f64| {
        let (t_start, t_end) = span_from(dir, from, len);
        Window { t_start, t_end, q }
    };

    let q_max = q_of(max_len)?;
    if q_max <= cfg.theta {
        return Ok(make(max_len, q_max));
    }
    let floor = cfg.min_window.min(max_len);
    let q_floor = q_of(floor)?;
    if q_floor > cfg.theta {
        return Err(SolveError::ZeroProgress {
            t_start: from,
            q: q_floor,
            suggested_min_window: floor * cfg.theta / q_floor,
        });
    }

    // length ↦ q is nondecreasing for nonnegative majorants.
    let (mut lo, mut q_lo, mut hi) = (floor, q_floor, max_len);
    while hi - lo > super::WINDOW_BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        let q_mid = q_of(mid)?;
        if q_mid <= cfg.theta {
            lo = mid;
            q_lo = q_mid;
        } else {
            hi = mid;
        }
    }
    Ok(make(lo, q_lo))
}

/// The metric space of one window: grid functions on the window whose values
/// outside it are the prescribed data (history plus solved windows).
#[derive(Clone, Debug)]
pub struct WindowSpace {
    window: Window,
    direction: Direction,
    grid: Arc<[f64]>,
    prefix: Vec<Arc<PiecewiseFunction>>,
    cfg: SolverConfig,
}

impl WindowSpace {
    pub fn new(window: Window, direction: Direction, prefix: Vec<Arc<PiecewiseFunction>>, cfg: &SolverConfig) -> Self {
        WindowSpace {
            window,
            direction,
            grid: cfg.grid.uniform(window.t_start, window.t_end),
            prefix,
            cfg: cfg.clone(),
        }
    }

    /// Space of the first window, whose prescribed data is the boundary data.
    pub fn first<P: FunctionalSystem + ?Sized>(p: &P, window: Window, cfg: &SolverConfig) -> Self {
        let prefix = (0..p.dim()).map(|k| Arc::new(p.boundary(k).clone())).collect();
        Self::new(window, p.direction(), prefix, cfg)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn grid(&self) -> &Arc<[f64]> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.prefix.len()
    }

    pub fn prefix(&self) -> &[Arc<PiecewiseFunction>] {
        &self.prefix
    }

    fn anchor_index(&self) -> usize {
        match self.direction {
            Direction::Forward => 0,
            Direction::Backward => self.grid.len() - 1,
        }
    }

    /// `ψ_k(t1)` (forward) or `χ_k(t2)` (backward).
    pub fn anchor_values(&self) -> Result<Vec<f64>, SolveError> {
        let t = self.window.anchor(self.direction);
        self.prefix
            .iter()
            .enumerate()
            .map(|(component, f)| f.eval(t).map_err(|_| SolveError::TailGap { component, t }))
            .collect()
    }

    /// Wraps window samples into an element of the space.
    pub fn element(&self, samples: Vec<Vec<f64>>) -> Result<Trajectory, SolveError> {
        if samples.len() != self.dim() {
            return Err(FuncError::LengthMismatch {
                expected: self.dim(),
                found: samples.len(),
            }
            .into());
        }
        let side = match self.direction {
            Direction::Forward => Side::Before,
            Direction::Backward => Side::After,
        };
        let components = samples
            .into_iter()
            .zip(&self.prefix)
            .map(|(s, pre)| {
                PiecewiseFunction::new(self.grid.clone(), s, self.cfg.interp)?.with_tail(
                    side,
                    TailSource::Stored(pre.clone()),
                    self.cfg.continuity_tol,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory::new(components)?)
    }

    /// Constant extension of the anchor values.
    pub fn constant_guess(&self) -> Result<Trajectory, SolveError> {
        let anchors = self.anchor_values()?;
        self.element(anchors.iter().map(|&a| vec![a; self.grid.len()]).collect())
    }

    /// Tangent line through the anchor with slope `F_k` evaluated on the
    /// prescribed data.
    pub fn tangent_guess<P: FunctionalSystem + ?Sized>(&self, p: &P) -> Result<Trajectory, SolveError> {
        let anchors = self.anchor_values()?;
        let t = self.window.anchor(self.direction);
        let n_dev = p.deviations();
        let mut u = vec![0.0; p.dim() * n_dev];
        for m in 0..p.dim() {
            for j in 0..n_dev {
                let s = clamp_deviation(self.direction, p.deviation(m, j, t), t);
                u[m * n_dev + j] = self.prefix[m]
                    .eval(s)
                    .map_err(|_| SolveError::TailGap { component: m, t: s })?;
            }
        }
        let samples = (0..p.dim())
            .map(|k| {
                let slope = p.rhs(k, t, &u);
                if !slope.is_finite() {
                    return Err(SolveError::NonFinite { component: k, t });
                }
                Ok(self.grid.iter().map(|&x| anchors[k] + slope * (x - t)).collect())
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.element(samples)
    }

    pub fn initial_guess<P: FunctionalSystem + ?Sized>(
        &self,
        p: &P,
        guess: InitialGuess,
    ) -> Result<Trajectory, SolveError> {
        match guess {
            InitialGuess::ConstantExtension => self.constant_guess(),
            InitialGuess::Tangent => self.tangent_guess(p),
        }
    }

    pub fn operator<'p, P: FunctionalSystem + ?Sized>(&self, p: &'p P) -> Result<IntegralOperator<'p, P>, SolveError> {
        IntegralOperator::new(p, self.clone())
    }
}

fn clamp_deviation(direction: Direction, s: f64, t: f64) -> f64 {
    match direction {
        Direction::Forward => s.min(t),
        Direction::Backward => s.max(t),
    }
}

/// `(I x)_k(t) = ψ_k(t1) + ∫_{t1}^t F_k(τ, x(α(τ))) dτ` going forward and
/// `(J x)_k(t) = χ_k(t2) + ∫_{t2}^t G_k(τ, x(β(τ))) dτ` going backward.
pub struct IntegralOperator<'p, P: ?Sized> {
    problem: &'p P,
    space: WindowSpace,
    anchors: Vec<f64>,
    /// Deviated times at node `i`, laid out `i·nN + m·N + j`.
    deviated: Vec<f64>,
}

impl<'p, P: FunctionalSystem + ?Sized> IntegralOperator<'p, P> {
    /// Samples every deviated argument the operator will read and checks the
    /// retardation/advance condition and tail coverage there.
    pub fn new(problem: &'p P, space: WindowSpace) -> Result<Self, SolveError> {
        let anchors = space.anchor_values()?;
        let (n, n_dev) = (problem.dim(), problem.deviations());
        let (t1, t2) = (space.window.t_start, space.window.t_end);
        let mut deviated = Vec::with_capacity(space.grid.len() * n * n_dev);
        let mut report = ValidationReport::default();
        for &tau in space.grid.iter() {
            let slack = DEVIATION_TOL * tau.abs().max(1.0);
            for m in 0..n {
                for j in 0..n_dev {
                    let s = problem.deviation(m, j, tau);
                    if !s.is_finite() {
                        return Err(SolveError::NonFinite { component: m, t: tau });
                    }
                    report.checked += 1;
                    let ok = match space.direction {
                        Direction::Forward => s <= tau + slack,
                        Direction::Backward => s >= tau - slack,
                    };
                    if !ok {
                        report.violations.push(Violation {
                            component: m,
                            deviation: j,
                            t: tau,
                            value: s,
                        });
                    }
                    let s = clamp_deviation(space.direction, s, tau);
                    let outside = match space.direction {
                        Direction::Forward => s < t1,
                        Direction::Backward => s > t2,
                    };
                    if outside && space.prefix[m].eval(s).is_err() {
                        return Err(SolveError::TailGap { component: m, t: s });
                    }
                    deviated.push(s);
                }
            }
        }
        if !report.passed() {
            return Err(SolveError::Validation(match space.direction {
                Direction::Forward => ProblemError::RetardationViolated(report),
                Direction::Backward => ProblemError::AdvanceViolated(report),
            }));
        }
        Ok(IntegralOperator {
            problem,
            space,
            anchors,
            deviated,
        })
    }

    pub fn space(&self) -> &WindowSpace {
        &self.space
    }

    pub fn window(&self) -> Window {
        self.space.window
    }

    /// Values `x_m(α_mj(τ_i))` at every node, laid out `i·nN + m·N + j`.
    pub fn deviated_values(&self, x: &Trajectory) -> Result<Vec<f64>, SolveError> {
        self.check_grid(x)?;
        let width = self.problem.dim() * self.problem.deviations();
        let n_dev = self.problem.deviations();
        let mut out = Vec::with_capacity(self.deviated.len());
        for node in self.deviated.chunks(width) {
            for (idx, &s) in node.iter().enumerate() {
                let m = idx / n_dev;
                out.push(x.eval(m, s).map_err(|_| SolveError::TailGap { component: m, t: s })?);
            }
        }
        Ok(out)
    }

    fn check_grid(&self, x: &Trajectory) -> Result<(), SolveError> {
        let g = x.grid();
        if x.dim() != self.space.dim() || !(Arc::ptr_eq(g, &self.space.grid) || g[..] == self.space.grid[..]) {
            return Err(FuncError::GridMismatch.into());
        }
        Ok(())
    }

    pub fn apply(&self, x: &Trajectory) -> Result<Trajectory, SolveError> {
        let u = self.deviated_values(x)?;
        let width = self.problem.dim() * self.problem.deviations();
        let grid = &self.space.grid;
        let anchor_t = grid[self.space.anchor_index()];
        let mut out = Vec::with_capacity(self.problem.dim());
        let mut integrand = vec![0.0; grid.len()];
        for k in 0..self.problem.dim() {
            for (i, (g, &tau)) in integrand.iter_mut().zip(grid.iter()).enumerate() {
                let v = self.problem.rhs(k, tau, &u[i * width..(i + 1) * width]);
                if !v.is_finite() {
                    return Err(SolveError::NonFinite { component: k, t: tau });
                }
                *g = v;
            }
            let mut running = cumulative_from(grid, &integrand, anchor_t, self.space.cfg.quadrature);
            for v in &mut running {
                *v += self.anchors[k];
            }
            // Pin the anchor exactly so window junctions agree bit for bit.
            running[self.space.anchor_index()] = self.anchors[k];
            out.push(running);
        }
        self.space.element(out)
    }
}

/// Convenience: one application of the window operator to `x`, using `x`'s
/// tails as the prescribed data.
pub fn apply_operator<P: FunctionalSystem + ?Sized>(
    p: &P,
    x: &Trajectory,
    w: &Window,
    cfg: &SolverConfig,
) -> Result<Trajectory, SolveError> {
    let prefix = x
        .components()
        .iter()
        .map(|c| match c.tail().map(|t| &t.source) {
            Some(TailSource::Stored(pre)) => Ok(pre.clone()),
            _ => Err(SolveError::TailGap {
                component: 0,
                t: w.anchor(p.direction()),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let space = WindowSpace::new(*w, p.direction(), prefix, cfg);
    space.operator(p)?.apply(x)
}

/// Fixed point of one window plus its certificate.
#[derive(Debug, Clone)]
pub struct WindowSolution {
    pub trajectory: Trajectory,
    /// Number of operator applications.
    pub iterations: usize,
    /// Last successive distance `ρ(x_m, x_{m-1})`.
    pub final_residual: f64,
    /// Bound on `ρ(x_m, x*)` from the contraction principle.
    pub error_bound: f64,
}

/// Iterates `x_{m+1} = I x_m` until `ρ(x_{m+1}, x_m) ≤ tol·(1-q)/q`.
pub fn solve_window<P: FunctionalSystem + ?Sized>(
    op: &IntegralOperator<'_, P>,
    init: Trajectory,
    tol: f64,
    iteration_margin: usize,
) -> Result<WindowSolution, SolveError> {
    let w = op.window();
    let q = w.q;
    // Tail coverage of the initial iterate.
    op.deviated_values(&init)?;
    let mut next = op.apply(&init)?;
    let first = distance(&next, &init)?;
    if q == 0.0 || first == 0.0 {
        return Ok(WindowSolution {
            trajectory: next,
            iterations: 1,
            final_residual: first,
            error_bound: 0.0,
        });
    }

    let stop = tol * (1.0 - q) / q;
    let needed = libm::ceil(libm::log(tol * (1.0 - q) / first) / libm::log(q));
    let limit = if needed.is_finite() && needed > 0.0 {
        needed as usize
    } else {
        0
    } + iteration_margin.max(1);

    let mut iterations = 1;
    let mut gap = first;
    while gap > stop {
        if iterations >= limit || !gap.is_finite() {
            return Err(SolveError::NoConvergence {
                t_start: w.t_start,
                t_end: w.t_end,
                iterations,
                distance: gap,
            });
        }
        let prev = next;
        next = op.apply(&prev)?;
        iterations += 1;
        gap = distance(&next, &prev)?;
    }
    let posterior = q / (1.0 - q) * gap;
    let prior = libm::pow(q, iterations as f64) / (1.0 - q) * first;
    Ok(WindowSolution {
        trajectory: next,
        iterations,
        final_residual: gap,
        error_bound: posterior.min(prior),
    })
}
