//! Sampled functions of time with prescribed tails.
//!
//! A [`PiecewiseFunction`] is a set of samples on strictly increasing
//! breakpoints plus an optional tail that supplies values outside the sampled
//! span. Tails are either analytic closures (history or terminal data) or a
//! previously built function, which is how solved windows become the
//! prescribed data of the next window.
//!
//! A [`Trajectory`] groups `n` components over one shared grid and is the
//! element of the metric space the integral operator acts on. The distance is
//! the sum over components of the sup gap between the represented functions.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Scalar function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default allowed mismatch between a tail and the first/last sample.
pub const DEFAULT_CONTINUITY_TOL: f64 = 1e-9;

/// Default number of grid points per contraction window.
pub const DEFAULT_POINTS_PER_WINDOW: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncError {
    #[error("a sampled function needs at least one breakpoint")]
    Empty,
    #[error("breakpoints must be finite and strictly increasing (index {index})")]
    NotIncreasing { index: usize },
    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("no tail defined at t = {t} (sampled span [{start}, {end}])")]
    NoTailDefined { t: f64, start: f64, end: f64 },
    #[error("tail and samples disagree by {gap:e} at t = {t}")]
    Discontinuous { t: f64, gap: f64 },
    #[error("trajectories live on different windows or grids")]
    GridMismatch,
    #[error("interval [{a}, {b}] is not inside the grid span [{start}, {end}]")]
    OutOfSpan { a: f64, b: f64, start: f64, end: f64 },
    #[error("points_per_window must be at least 2, got {0}")]
    GridTooSmall(usize),
}

/// Interpolation rule between breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Linear,
    /// Cubic Hermite with second-order finite-difference slopes.
    CubicHermite,
}

/// Quadrature rule for sampled integrands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite trapezoid, exact on affine data.
    Trapezoid,
    /// Integrates the cubic through the four nearest nodes of each cell.
    #[default]
    FourthOrder,
}

/// Which side of the sampled span a tail covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
    Both,
}

impl Side {
    fn covers_before(self) -> bool {
        matches!(self, Side::Before | Side::Both)
    }

    fn covers_after(self) -> bool {
        matches!(self, Side::After | Side::Both)
    }

    pub fn flipped(self) -> Side {
        match self {
            Side::Before => Side::After,
            Side::After => Side::Before,
            Side::Both => Side::Both,
        }
    }
}

#[derive(Clone)]
pub enum TailSource {
    Analytic(TimeFn),
    Stored(Arc<PiecewiseFunction>),
}

impl TailSource {
    fn eval(&self, t: f64) -> Result<f64, FuncError> {
        match self {
            TailSource::Analytic(f) => Ok(f(t)),
            TailSource::Stored(g) => g.eval(t),
        }
    }
}

#[derive(Clone)]
pub struct Tail {
    pub side: Side,
    pub source: TailSource,
}

/// Uniform window grid description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    points_per_window: usize,
}

impl GridSpec {
    pub fn new(points_per_window: usize) -> Result<Self, FuncError> {
        if points_per_window < 2 {
            return Err(FuncError::GridTooSmall(points_per_window));
        }
        Ok(GridSpec { points_per_window })
    }

    pub fn points_per_window(&self) -> usize {
        self.points_per_window
    }

    /// `points_per_window` uniformly spaced nodes from `a` to `b`, endpoints exact.
    pub fn uniform(&self, a: f64, b: f64) -> Arc<[f64]> {
        uniform_grid(a, b, self.points_per_window)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_window: DEFAULT_POINTS_PER_WINDOW,
        }
    }
}

pub fn uniform_grid(a: f64, b: f64, points: usize) -> Arc<[f64]> {
    let intervals = (points.max(2) - 1) as f64;
    let mut g: Vec<f64> = (0..points.max(2))
        .map(|i| a + (b - a) * (i as f64 / intervals))
        .collect();
    if let Some(last) = g.last_mut() {
        *last = b;
    }
    g.into()
}

/// A scalar function of time: samples on breakpoints plus an optional tail.
#[derive(Clone)]
pub struct PiecewiseFunction {
    breakpoints: Arc<[f64]>,
    samples: Vec<f64>,
    interp: Interp,
    tail: Option<Tail>,
}

impl fmt::Debug for PiecewiseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseFunction")
            .field("span", &self.span())
            .field("points", &self.breakpoints.len())
            .field("interp", &self.interp)
            .field("tail", &self.tail.as_ref().map(|t| t.side))
            .finish()
    }
}

impl PiecewiseFunction {
    pub fn new(breakpoints: impl Into<Arc<[f64]>>, samples: Vec<f64>, interp: Interp) -> Result<Self, FuncError> {
        let breakpoints = breakpoints.into();
        if breakpoints.is_empty() {
            return Err(FuncError::Empty);
        }
        if samples.len() != breakpoints.len() {
            return Err(FuncError::LengthMismatch {
                expected: breakpoints.len(),
                found: samples.len(),
            });
        }
        if let Some(index) = breakpoints.iter().position(|b| !b.is_finite()) {
            return Err(FuncError::NotIncreasing { index });
        }
        if let Some(index) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(FuncError::NotIncreasing { index: index + 1 });
        }
        Ok(PiecewiseFunction {
            breakpoints,
            samples,
            interp,
            tail: None,
        })
    }

    /// Attach a tail, checking continuity where it meets the samples.
    pub fn with_tail(mut self, side: Side, source: TailSource, tol: f64) -> Result<Self, FuncError> {
        let (start, end) = self.span();
        let check = |t: f64, sample: f64| -> Result<(), FuncError> {
            let gap = (source.eval(t)? - sample).abs();
            if gap > tol || gap.is_nan() {
                return Err(FuncError::Discontinuous { t, gap });
            }
            Ok(())
        };
        if side.covers_before() {
            check(start, self.samples[0])?;
        }
        if side.covers_after() {
            check(end, self.samples[self.samples.len() - 1])?;
        }
        self.tail = Some(Tail { side, source });
        Ok(self)
    }

    /// Analytic history `r(t)` valid on `(-∞, t0]`.
    pub fn history(f: TimeFn, t0: f64) -> Self {
        Self::anchored(f, t0, Side::Before)
    }

    /// Analytic terminal data `s(t)` valid on `[τ0, ∞)`.
    pub fn terminal(f: TimeFn, tau0: f64) -> Self {
        Self::anchored(f, tau0, Side::After)
    }

    /// Analytic function valid everywhere.
    pub fn analytic(f: TimeFn) -> Self {
        Self::anchored(f, 0.0, Side::Both)
    }

    pub fn constant(c: f64) -> Self {
        Self::analytic(Arc::new(move |_| c))
    }

    fn anchored(f: TimeFn, anchor: f64, side: Side) -> Self {
        let value = f(anchor);
        PiecewiseFunction {
            breakpoints: Arc::from(vec![anchor]),
            samples: vec![value],
            interp: Interp::Linear,
            tail: Some(Tail {
                side,
                source: TailSource::Analytic(f),
            }),
        }
    }

    pub fn breakpoints(&self) -> &Arc<[f64]> {
        &self.breakpoints
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn tail(&self) -> Option<&Tail> {
        self.tail.as_ref()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    pub fn eval(&self, t: f64) -> Result<f64, FuncError> {
        let (start, end) = self.span();
        if t >= start && t <= end {
            return Ok(self.interpolate(t));
        }
        match &self.tail {
            Some(tail) if t < start && tail.side.covers_before() => tail.source.eval(t),
            Some(tail) if t > end && tail.side.covers_after() => tail.source.eval(t),
            _ => Err(FuncError::NoTailDefined { t, start, end }),
        }
    }

    fn interpolate(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        let s = &self.samples;
        if b.len() == 1 {
            return s[0];
        }
        let i = b.partition_point(|&x| x <= t).clamp(1, b.len() - 1) - 1;
        let (x0, x1) = (b[i], b[i + 1]);
        let h = x1 - x0;
        let u = (t - x0) / h;
        match self.interp {
            Interp::Linear => s[i] + (s[i + 1] - s[i]) * u,
            Interp::CubicHermite => {
                let m0 = self.slope(i);
                let m1 = self.slope(i + 1);
                let u2 = u * u;
                let u3 = u2 * u;
                let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
                let h10 = u3 - 2.0 * u2 + u;
                let h01 = -2.0 * u3 + 3.0 * u2;
                let h11 = u3 - u2;
                h00 * s[i] + h10 * h * m0 + h01 * s[i + 1] + h11 * h * m1
            }
        }
    }

    fn slope(&self, i: usize) -> f64 {
        hermite_slope(&self.breakpoints, &self.samples, i)
    }

    /// The function `t ↦ self(-t)`.
    pub fn reflect(&self) -> PiecewiseFunction {
        let breakpoints: Vec<f64> = self.breakpoints.iter().rev().map(|b| -b).collect();
        let samples: Vec<f64> = self.samples.iter().rev().copied().collect();
        let tail = self.tail.as_ref().map(|tail| Tail {
            side: tail.side.flipped(),
            source: match &tail.source {
                TailSource::Analytic(f) => {
                    let f = f.clone();
                    TailSource::Analytic(Arc::new(move |t| f(-t)))
                }
                TailSource::Stored(g) => TailSource::Stored(Arc::new(g.reflect())),
            },
        });
        PiecewiseFunction {
            breakpoints: breakpoints.into(),
            samples,
            interp: self.interp,
            tail,
        }
    }
}

/// `n` components sharing one grid; an element of the window's metric space.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Arc<[f64]>,
    components: Vec<PiecewiseFunction>,
}

impl Trajectory {
    pub fn new(components: Vec<PiecewiseFunction>) -> Result<Self, FuncError> {
        let first = components.first().ok_or(FuncError::Empty)?;
        let grid = first.breakpoints.clone();
        if components.iter().any(|c| !same_grid(&c.breakpoints, &grid)) {
            return Err(FuncError::GridMismatch);
        }
        Ok(Trajectory { grid, components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &Arc<[f64]> {
        &self.grid
    }

    pub fn window(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn component(&self, k: usize) -> &PiecewiseFunction {
        &self.components[k]
    }

    pub fn components(&self) -> &[PiecewiseFunction] {
        &self.components
    }

    pub fn samples(&self, k: usize) -> &[f64] {
        &self.components[k].samples
    }

    pub fn eval(&self, k: usize, t: f64) -> Result<f64, FuncError> {
        self.components[k].eval(t)
    }
}

// Second-order slope estimate at node i; one-sided at the ends. Linear in `s`.
fn hermite_slope(b: &[f64], s: &[f64], i: usize) -> f64 {
    let n = b.len();
    let d = |j: usize| (s[j + 1] - s[j]) / (b[j + 1] - b[j]);
    if n == 2 {
        return d(0);
    }
    if i == 0 {
        let (h0, h1) = (b[1] - b[0], b[2] - b[1]);
        ((2.0 * h0 + h1) * d(0) - h0 * d(1)) / (h0 + h1)
    } else if i == n - 1 {
        let (h0, h1) = (b[n - 2] - b[n - 3], b[n - 1] - b[n - 2]);
        ((2.0 * h1 + h0) * d(n - 2) - h1 * d(n - 3)) / (h0 + h1)
    } else {
        let (hm, hp) = (b[i] - b[i - 1], b[i + 1] - b[i]);
        (hm * d(i) + hp * d(i - 1)) / (hm + hp)
    }
}

/// `max |p|` over the represented function with node values `d`.
fn sup_norm(grid: &[f64], d: &[f64], interp: Interp) -> f64 {
    let nodes = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if interp == Interp::Linear || grid.len() < 2 {
        return nodes;
    }
    let mut best = nodes;
    let mut m0 = hermite_slope(grid, d, 0);
    for i in 0..grid.len() - 1 {
        let h = grid[i + 1] - grid[i];
        let m1 = hermite_slope(grid, d, i + 1);
        // p(u) = c0 + c1 u + c2 u² + c3 u³ on u ∈ [0, 1].
        let (c0, c1) = (d[i], h * m0);
        let c2 = -3.0 * d[i] - 2.0 * h * m0 + 3.0 * d[i + 1] - h * m1;
        let c3 = 2.0 * d[i] + h * m0 - 2.0 * d[i + 1] + h * m1;
        let p = |u: f64| ((c3 * u + c2) * u + c1) * u + c0;
        // Critical points: 3c3 u² + 2c2 u + c1 = 0.
        let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, c1);
        let mut check = |u: f64| {
            if u > 0.0 && u < 1.0 {
                best = best.max(p(u).abs());
            }
        };
        if qa.abs() <= 1e-14 * (qb.abs() + qc.abs()) {
            if qb != 0.0 {
                check(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let r = libm::sqrt(disc);
                // Stable quadratic roots.
                let q = -0.5 * (qb + if qb >= 0.0 { r } else { -r });
                check(q / qa);
                if q != 0.0 {
                    check(qc / q);
                }
            }
        }
        m0 = m1;
    }
    best
}

fn same_grid(a: &Arc<[f64]>, b: &Arc<[f64]>) -> bool {
    Arc::ptr_eq(a, b) || a[..] == b[..]
}

/// `ρ(x, y) = Σ_k sup_t |x_k(t) - y_k(t)|` over the shared window.
///
/// Both interpolants are linear in the samples, so the gap is the interpolant
/// of the sample differences. Its sup is attained at a node (linear) or at a
/// node or an interior critical point of a cell cubic (cubic Hermite).
pub fn distance(x: &Trajectory, y: &Trajectory) -> Result<f64, FuncError> {
    if x.dim() != y.dim() || !same_grid(&x.grid, &y.grid) {
        return Err(FuncError::GridMismatch);
    }
    let mut diff = vec![0.0; x.grid.len()];
    let mut total = 0.0;
    for (a, b) in x.components.iter().zip(&y.components) {
        if a.interp != b.interp {
            return Err(FuncError::GridMismatch);
        }
        for (d, (u, v)) in diff.iter_mut().zip(a.samples.iter().zip(b.samples.iter())) {
            *d = u - v;
        }
        total += sup_norm(&x.grid, &diff, a.interp);
    }
    Ok(total)
}

/// Composite trapezoid integral of the piecewise-linear interpolant of
/// `samples` over `[a, b]`. Partial cells at either end are integrated exactly.
pub fn integrate(grid: &[f64], samples: &[f64], a: f64, b: f64) -> Result<f64, FuncError> {
    check_span(grid, samples, a, b)?;
    let first = cell_index(grid, a);
    let last = cell_index(grid, b);
    Ok((first..=last)
        .map(|i| {
            let lo = a.max(grid[i]);
            let hi = b.min(grid[i + 1]);
            if hi > lo {
                cell_integral(grid, samples, i, lo, hi, Quadrature::Trapezoid)
            } else {
                0.0
            }
        })
        .sum())
}

/// Running integral `t ↦ ∫_from^t f` sampled on the same grid.
///
/// `from` may be anywhere in the span; for `t < from` the value is the
/// negated integral over `[t, from]`.
pub fn cumulative_integrate(
    grid: &Arc<[f64]>,
    samples: &[f64],
    from: f64,
    rule: Quadrature,
    interp: Interp,
) -> Result<PiecewiseFunction, FuncError> {
    check_span(grid, samples, from, from)?;
    let values = cumulative_from(grid, samples, from, rule);
    PiecewiseFunction::new(grid.clone(), values, interp)
}

/// Running integral values at every node, zero at `from`.
pub fn cumulative_from(grid: &[f64], samples: &[f64], from: f64, rule: Quadrature) -> Vec<f64> {
    let mut acc = Vec::with_capacity(grid.len());
    acc.push(0.0);
    for i in 0..grid.len().saturating_sub(1) {
        let prev = acc[i];
        acc.push(prev + cell_integral(grid, samples, i, grid[i], grid[i + 1], rule));
    }
    let offset = if grid.len() == 1 {
        0.0
    } else {
        let i = cell_index(grid, from);
        acc[i] + cell_integral(grid, samples, i, grid[i], from, rule)
    };
    for v in &mut acc {
        *v -= offset;
    }
    acc
}

/// Integral over the whole grid span.
pub fn total_integral(grid: &[f64], samples: &[f64], rule: Quadrature) -> f64 {
    (0..grid.len().saturating_sub(1))
        .map(|i| cell_integral(grid, samples, i, grid[i], grid[i + 1], rule))
        .sum()
}

fn check_span(grid: &[f64], samples: &[f64], a: f64, b: f64) -> Result<(), FuncError> {
    if grid.is_empty() {
        return Err(FuncError::Empty);
    }
    if grid.len() != samples.len() {
        return Err(FuncError::LengthMismatch {
            expected: grid.len(),
            found: samples.len(),
        });
    }
    let (start, end) = (grid[0], grid[grid.len() - 1]);
    if !(a <= b && a >= start && b <= end) {
        return Err(FuncError::OutOfSpan { a, b, start, end });
    }
    Ok(())
}

fn cell_index(grid: &[f64], t: f64) -> usize {
    if grid.len() < 2 {
        return 0;
    }
    grid.partition_point(|&x| x <= t).clamp(1, grid.len() - 1) - 1
}

// Gauss-Legendre 3-point rule, exact for cubics.
const GAUSS_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

fn cell_integral(grid: &[f64], samples: &[f64], i: usize, lo: f64, hi: f64, rule: Quadrature) -> f64 {
    if hi == lo {
        return 0.0;
    }
    match rule {
        Quadrature::Trapezoid => {
            let lin = |t: f64| {
                let (x0, x1) = (grid[i], grid[i + 1]);
                samples[i] + (samples[i + 1] - samples[i]) * (t - x0) / (x1 - x0)
            };
            0.5 * (hi - lo) * (lin(lo) + lin(hi))
        }
        Quadrature::FourthOrder => {
            let n = grid.len();
            let width = n.min(4);
            let start = i.saturating_sub(1).min(n - width);
            let nodes = &grid[start..start + width];
            let values = &samples[start..start + width];
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            GAUSS_X
                .iter()
                .zip(GAUSS_W)
                .map(|(x, w)| w * lagrange(nodes, values, mid + half * x))
                .sum::<f64>()
                * half
        }
    }
}

fn lagrange(nodes: &[f64], values: &[f64], t: f64) -> f64 {
    let mut sum = 0.0;
    for (j, (&xj, &yj)) in nodes.iter().zip(values).enumerate() {
        let mut basis = 1.0;
        for (m, &xm) in nodes.iter().enumerate() {
            if m != j {
                basis *= (t - xm) / (xj - xm);
            }
        }
        sum += basis * yj;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(a: f64, b: f64, n: usize) -> Arc<[f64]> {
        uniform_grid(a, b, n)
    }

    fn traj(g: &Arc<[f64]>, comps: &[&dyn Fn(f64) -> f64]) -> Trajectory {
        Trajectory::new(
            comps
                .iter()
                .map(|f| PiecewiseFunction::new(g.clone(), g.iter().map(|&t| f(t)).collect(), Interp::Linear).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn eval_constant_anywhere() {
        let c = PiecewiseFunction::constant(2.5);
        for t in [-1e6, -3.0, 0.0, 1.0, 7e3] {
            assert_eq!(c.eval(t).unwrap(), 2.5);
        }
    }

    #[test]
    fn eval_linear_midpoint() {
        let f = PiecewiseFunction::new(vec![0.0, 1.0], vec![0.0, 2.0], Interp::Linear).unwrap();
        assert_eq!(f.eval(0.5).unwrap(), 1.0);
    }

    #[test]
    fn eval_history_tail() {
        let r = PiecewiseFunction::history(Arc::new(|_| 1.0), 0.0);
        assert_eq!(r.eval(-3.7).unwrap(), 1.0);
        assert!(matches!(r.eval(0.5), Err(FuncError::NoTailDefined { .. })));
    }

    #[test]
    fn eval_without_tail_errors_outside_span() {
        let f = PiecewiseFunction::new(vec![0.0, 1.0], vec![0.0, 1.0], Interp::Linear).unwrap();
        assert!(matches!(f.eval(-0.1), Err(FuncError::NoTailDefined { .. })));
        assert!(matches!(f.eval(1.1), Err(FuncError::NoTailDefined { .. })));
    }

    #[test]
    fn construction_rejects_bad_breakpoints() {
        assert_eq!(
            PiecewiseFunction::new(vec![0.0, 0.0], vec![1.0, 1.0], Interp::Linear).unwrap_err(),
            FuncError::NotIncreasing { index: 1 }
        );
        assert_eq!(
            PiecewiseFunction::new(vec![0.0, 1.0], vec![1.0], Interp::Linear).unwrap_err(),
            FuncError::LengthMismatch { expected: 2, found: 1 }
        );
        assert_eq!(
            PiecewiseFunction::new(Vec::new(), Vec::new(), Interp::Linear).unwrap_err(),
            FuncError::Empty
        );
    }

    #[test]
    fn tail_junction_continuity_enforced() {
        let f = PiecewiseFunction::new(vec![0.0, 1.0], vec![1.0, 2.0], Interp::Linear).unwrap();
        let ok = f.clone().with_tail(
            Side::Before,
            TailSource::Analytic(Arc::new(|_| 1.0 + 1e-12)),
            DEFAULT_CONTINUITY_TOL,
        );
        assert!(ok.is_ok());
        let bad = f.with_tail(
            Side::Before,
            TailSource::Analytic(Arc::new(|_| 1.1)),
            DEFAULT_CONTINUITY_TOL,
        );
        assert!(matches!(bad, Err(FuncError::Discontinuous { .. })));
    }

    #[test]
    fn stored_tail_chains() {
        let hist = Arc::new(PiecewiseFunction::history(Arc::new(|t| 1.0 + t), 0.0));
        let f = PiecewiseFunction::new(vec![0.0, 1.0], vec![1.0, 3.0], Interp::Linear)
            .unwrap()
            .with_tail(Side::Before, TailSource::Stored(hist), 1e-9)
            .unwrap();
        assert_eq!(f.eval(-2.0).unwrap(), -1.0);
        assert_eq!(f.eval(0.5).unwrap(), 2.0);
    }

    #[test]
    fn cubic_hermite_exact_on_quadratics() {
        let g = grid(0.0, 2.0, 11);
        let f = PiecewiseFunction::new(
            g.clone(),
            g.iter().map(|t| t * t - 3.0 * t).collect(),
            Interp::CubicHermite,
        )
        .unwrap();
        for t in [0.03, 0.5, 1.111, 1.99] {
            assert!((f.eval(t).unwrap() - (t * t - 3.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_negates_time() {
        let f = PiecewiseFunction::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 5.0], Interp::Linear)
            .unwrap()
            .with_tail(Side::After, TailSource::Analytic(Arc::new(|t| 2.0 * t - 1.0)), 1e-9)
            .unwrap();
        let r = f.reflect();
        for t in [0.0, 0.5, 2.0, 3.0, 4.5] {
            assert_eq!(r.eval(-t).unwrap(), f.eval(t).unwrap());
        }
    }

    #[test]
    fn distance_examples() {
        let g = grid(0.0, 1.0, 101);
        let x = traj(&g, &[&|t| t, &|t| t * t]);
        assert_eq!(distance(&x, &x).unwrap(), 0.0);
        let y = traj(&g, &[&|t| t + 0.5, &|t| t * t - 0.25]);
        assert!((distance(&x, &y).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn distance_t_vs_t_squared() {
        // Oracle: dense sampling of |t - t²| on [0, 1].
        let dense = (0..=100_000)
            .map(|i| {
                let t = i as f64 / 100_000.0;
                (t - t * t).abs()
            })
            .fold(0.0_f64, f64::max);
        assert!((dense - 0.25).abs() < 1e-9);
        let g = grid(0.0, 1.0, 257);
        let x = traj(&g, &[&|t| t]);
        let y = traj(&g, &[&|t| t * t]);
        assert!((distance(&x, &y).unwrap() - dense).abs() < 1e-9);
    }

    #[test]
    fn cubic_distance_is_true_sup() {
        // 256 nodes on [0, 1] miss t = 0.5; the Hermite interpolant of a
        // quadratic is exact, so the sup is still 0.25.
        let g = grid(0.0, 1.0, 256);
        let cubic = |f: &dyn Fn(f64) -> f64| {
            Trajectory::new(vec![PiecewiseFunction::new(
                g.clone(),
                g.iter().map(|&t| f(t)).collect(),
                Interp::CubicHermite,
            )
            .unwrap()])
            .unwrap()
        };
        let (x, y) = (cubic(&|t| t), cubic(&|t| t * t));
        assert!((distance(&x, &y).unwrap() - 0.25).abs() < 1e-15);
        let node_max = g.iter().map(|t| t - t * t).fold(0.0, f64::max);
        assert!(node_max < 0.25);
    }

    #[test]
    fn mixed_interpolation_rejected() {
        let g = grid(0.0, 1.0, 8);
        let a = Trajectory::new(vec![
            PiecewiseFunction::new(g.clone(), vec![0.0; 8], Interp::Linear).unwrap()
        ])
        .unwrap();
        let b = Trajectory::new(vec![PiecewiseFunction::new(
            g.clone(),
            vec![0.0; 8],
            Interp::CubicHermite,
        )
        .unwrap()])
        .unwrap();
        assert_eq!(distance(&a, &b).unwrap_err(), FuncError::GridMismatch);
    }

    #[test]
    fn distance_grid_mismatch() {
        let x = traj(&grid(0.0, 1.0, 11), &[&|t| t]);
        let y = traj(&grid(0.0, 1.0, 12), &[&|t| t]);
        assert_eq!(distance(&x, &y).unwrap_err(), FuncError::GridMismatch);
        let z = traj(&grid(0.0, 2.0, 11), &[&|t| t]);
        assert_eq!(distance(&x, &z).unwrap_err(), FuncError::GridMismatch);
    }

    #[test]
    fn trapezoid_examples() {
        let g = grid(0.0, 1.0, 11);
        let ones = vec![1.0; 11];
        assert!((integrate(&g, &ones, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let lin: Vec<f64> = g.to_vec();
        assert!((integrate(&g, &lin, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // Off-node limits on affine data stay exact.
        assert!((integrate(&g, &lin, 0.13, 0.77).unwrap() - (0.77f64.powi(2) - 0.13f64.powi(2)) / 2.0).abs() < 1e-15);

        let g = grid(0.0, 1.0, 101);
        let sq: Vec<f64> = g.iter().map(|t| t * t).collect();
        let v = integrate(&g, &sq, 0.0, 1.0).unwrap();
        // h²/12 · max|f''| · (b - a) = 1e-4 / 12 · 2
        assert!((v - 1.0 / 3.0).abs() <= 1e-4);
        assert!((v - 1.0 / 3.0).abs() <= 0.01f64.powi(2) / 12.0 * 2.0 + 1e-15);
    }

    #[test]
    fn integrate_out_of_span() {
        let g = grid(0.0, 1.0, 11);
        let ones = vec![1.0; 11];
        assert!(matches!(
            integrate(&g, &ones, -0.1, 1.0),
            Err(FuncError::OutOfSpan { .. })
        ));
        assert!(matches!(
            integrate(&g, &ones, 0.5, 0.4),
            Err(FuncError::OutOfSpan { .. })
        ));
        assert!(matches!(
            cumulative_integrate(&g, &ones, 1.5, Quadrature::Trapezoid, Interp::Linear),
            Err(FuncError::OutOfSpan { .. })
        ));
    }

    #[test]
    fn cumulative_examples() {
        let g = grid(0.0, 2.0, 21);
        for rule in [Quadrature::Trapezoid, Quadrature::FourthOrder] {
            let zero = cumulative_integrate(&g, &[0.0; 21], 0.0, rule, Interp::Linear).unwrap();
            assert!(zero.samples().iter().all(|&v| v == 0.0));
            let id = cumulative_integrate(&g, &[1.0; 21], 0.0, rule, Interp::Linear).unwrap();
            for (&t, &v) in g.iter().zip(id.samples()) {
                assert!((v - t).abs() < 1e-14);
            }
            let lin: Vec<f64> = g.to_vec();
            let half = cumulative_integrate(&g, &lin, 0.0, rule, Interp::Linear).unwrap();
            assert!((half.eval(1.0).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn cumulative_from_right_end_is_negated_tail_integral() {
        let g = grid(-1.0, 0.0, 51);
        let f: Vec<f64> = g.iter().map(|t| 3.0 * t * t).collect();
        let c = cumulative_from(&g, &f, 0.0, Quadrature::FourthOrder);
        // ∫_0^t 3τ² dτ = t³
        for (&t, &v) in g.iter().zip(&c) {
            assert!((v - t * t * t).abs() < 1e-13);
        }
    }

    #[test]
    fn fourth_order_is_fourth_order() {
        let err = |n: usize| {
            let g = grid(0.0, 1.0, n);
            let f: Vec<f64> = g.iter().map(|&t| libm::exp(t)).collect();
            (total_integral(&g, &f, Quadrature::FourthOrder) - (core::f64::consts::E - 1.0)).abs()
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn grid_spec_validation() {
        assert_eq!(GridSpec::new(1).unwrap_err(), FuncError::GridTooSmall(1));
        assert_eq!(GridSpec::default().points_per_window(), 256);
        let g = GridSpec::new(5).unwrap().uniform(0.1, 0.7);
        assert_eq!(g.len(), 5);
        assert_eq!(g[4], 0.7);
    }

    fn arb_samples(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, n), 1..4)
    }

    fn from_samples(g: &Arc<[f64]>, s: &[Vec<f64>]) -> Trajectory {
        Trajectory::new(
            s.iter()
                .map(|c| PiecewiseFunction::new(g.clone(), c.clone(), Interp::Linear).unwrap())
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn metric_axioms(
            (a, b, c) in (1usize..4).prop_flat_map(|dim| {
                let s = proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, 16), dim);
                (s.clone(), s.clone(), s)
            })
        ) {
            let g = grid(0.0, 1.0, 16);
            let (x, y, z) = (from_samples(&g, &a), from_samples(&g, &b), from_samples(&g, &c));
            let dxy = distance(&x, &y).unwrap();
            prop_assert!(dxy >= 0.0);
            prop_assert_eq!(dxy, distance(&y, &x).unwrap());
            prop_assert_eq!(distance(&x, &x).unwrap(), 0.0);
            prop_assert_eq!(dxy == 0.0, a == b);
            let bound = distance(&x, &z).unwrap() + distance(&z, &y).unwrap();
            prop_assert!(dxy <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn cubic_distance_matches_dense_sampling(
            a in proptest::collection::vec(-10.0..10.0f64, 12),
            b in proptest::collection::vec(-10.0..10.0f64, 12),
        ) {
            let g = grid(0.0, 1.0, 12);
            let mk = |s: &Vec<f64>| Trajectory::new(vec![
                PiecewiseFunction::new(g.clone(), s.clone(), Interp::CubicHermite).unwrap(),
            ]).unwrap();
            let (x, y) = (mk(&a), mk(&b));
            let d = distance(&x, &y).unwrap();
            let dense = (0..=20_000)
                .map(|i| {
                    let t = i as f64 / 20_000.0;
                    (x.eval(0, t).unwrap() - y.eval(0, t).unwrap()).abs()
                })
                .fold(0.0_f64, f64::max);
            prop_assert!(d >= dense - 1e-12, "{} < {}", d, dense);
            // Sampling at spacing δ misses at most |p''|·δ²/8 ≤ 1e-4 here.
            prop_assert!(d <= dense + 1e-4, "{} > {}", d, dense);
            prop_assert_eq!(d, distance(&y, &x).unwrap());
        }

        #[test]
        fn linear_interp_exact_on_affine(slope in -5.0..5.0f64, icpt in -5.0..5.0f64, t in 0.0..3.0f64) {
            let g = grid(0.0, 3.0, 17);
            let f = PiecewiseFunction::new(g.clone(), g.iter().map(|x| slope * x + icpt).collect(), Interp::Linear).unwrap();
            prop_assert!((f.eval(t).unwrap() - (slope * t + icpt)).abs() < 1e-12);
        }

        #[test]
        fn cumulative_difference_recovers_integrand(a in -2.0..2.0f64, w in 0.5..3.0f64) {
            // Finite differences of the running integral match the integrand to O(h).
            let g = grid(0.0, 1.0, 201);
            let h = 1.0 / 200.0;
            let f: Vec<f64> = g.iter().map(|&t| a * libm::sin(w * t) + t).collect();
            for rule in [Quadrature::Trapezoid, Quadrature::FourthOrder] {
                let c = cumulative_from(&g, &f, 0.0, rule);
                for i in 1..200 {
                    let fd = (c[i + 1] - c[i - 1]) / (2.0 * h);
                    prop_assert!((fd - f[i]).abs() < 10.0 * h);
                }
            }
        }

        #[test]
        fn samples_roundtrip_through_tail(s in arb_samples(8)) {
            let g = grid(1.0, 2.0, 8);
            let x = from_samples(&g, &s);
            for (k, comp) in s.iter().enumerate() {
                let hist = comp[0];
                let f = x.component(k).clone()
                    .with_tail(Side::Before, TailSource::Analytic(Arc::new(move |_| hist)), DEFAULT_CONTINUITY_TOL)
                    .unwrap();
                prop_assert!((f.eval(g[0]).unwrap() - f.eval(g[0] - 1e-3).unwrap()).abs() <= DEFAULT_CONTINUITY_TOL);
            }
        }
    }
}
