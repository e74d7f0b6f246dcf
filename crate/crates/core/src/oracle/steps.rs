//! Method of steps with exact coefficient arithmetic.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;

use core::cmp::Ordering;

use super::{OracleError, Poly};

/// Cap on the number of step intervals.
pub const MAX_PIECES: usize = 100_000;

/// `φ_k'(t) = Σ_j Σ_m a_kjm(t)·φ_j(t - τ_jm) + b_k(t)` for `t ≥ t0`, with
/// polynomial history on `(-∞, t0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyDelaySystem {
    pub t0: f64,
    pub deviations: usize,
    /// `a_kjm` at index `(k·n + j)·N + m`, in absolute time.
    pub coefficients: Vec<Poly>,
    pub forcing: Vec<Poly>,
    /// `τ_jm > 0` at index `j·N + m`.
    pub lags: Vec<f64>,
    pub history: Vec<Poly>,
}

/// `φ_k'(t) = Σ_j Σ_m c_kjm(t)·φ_j(t + τ_jm) + d_k(t)` for `t ≤ τ0`, with
/// polynomial terminal data on `[τ0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyAdvanceSystem {
    pub tau0: f64,
    pub deviations: usize,
    pub coefficients: Vec<Poly>,
    pub forcing: Vec<Poly>,
    pub leads: Vec<f64>,
    pub terminal: Vec<Poly>,
}

impl PolyDelaySystem {
    pub fn dim(&self) -> usize {
        self.history.len()
    }

    /// Lag `τ` from a deviation polynomial that must equal `t - τ`.
    pub fn lag_of(deviation: &Poly, index: usize) -> Result<f64, OracleError> {
        let c = &deviation.0;
        let slope = c.get(1).copied().unwrap_or(0.0);
        let lag = -c.first().copied().unwrap_or(0.0);
        if deviation.degree() > 1 || slope != 1.0 || !(lag > 0.0) {
            return Err(OracleError::NonconstantDelay { index });
        }
        Ok(lag)
    }

    fn check(&self) -> Result<(), OracleError> {
        let (n, nd) = (self.dim(), self.deviations);
        if n == 0 || nd == 0 {
            return Err(OracleError::Shape("empty system"));
        }
        if self.coefficients.len() != n * n * nd || self.forcing.len() != n || self.lags.len() != n * nd {
            return Err(OracleError::Shape("coefficient, forcing or lag count"));
        }
        if let Some(index) = self.lags.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(OracleError::NonconstantDelay { index });
        }
        Ok(())
    }
}

/// One step interval; polynomials in the local variable `s = t - start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub components: Vec<Poly>,
}

impl Piece {
    /// Component `k` as a polynomial in absolute time.
    pub fn absolute(&self, k: usize) -> Poly {
        self.components[k].shift(-self.start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomialSolution {
    /// Abutting pieces in increasing order, in the solving variable.
    pub pieces: Vec<Piece>,
    /// Boundary data in the solving variable.
    pub boundary: Vec<Poly>,
    /// `true` when the solving variable is `s = -t` (advanced problems).
    pub mirrored: bool,
}

impl PiecewisePolynomialSolution {
    /// `φ_k(t)`; the boundary data outside the solved span on the anchor side,
    /// the last piece extrapolated beyond the horizon.
    pub fn eval(&self, k: usize, t: f64) -> f64 {
        let s = if self.mirrored { -t } else { t };
        let first = &self.pieces[0];
        if s <= first.start {
            return self.boundary[k].eval(s);
        }
        let idx = self.pieces.partition_point(|p| p.end < s).min(self.pieces.len() - 1);
        let p = &self.pieces[idx];
        p.components[k].eval(s - p.start)
    }

    /// Solved span in `t`, increasing.
    pub fn span(&self) -> (f64, f64) {
        let (a, b) = (self.pieces[0].start, self.pieces[self.pieces.len() - 1].end);
        if self.mirrored {
            (-b, -a)
        } else {
            (a, b)
        }
    }
}

#[derive(PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

/// `{t0 + Σ n_i τ_i} ∩ [t0, horizon)` plus the horizon, increasing.
fn breakpoints(t0: f64, horizon: f64, lags: &[f64]) -> Result<Vec<f64>, OracleError> {
    let tol = 1e-12 * horizon.abs().max(t0.abs()).max(1.0);
    let min_lag = lags.iter().copied().fold(f64::INFINITY, f64::min);
    if (horizon - t0) / min_lag > MAX_PIECES as f64 {
        return Err(OracleError::TooManyPieces { limit: MAX_PIECES });
    }
    // Min-heap sweep: duplicates surface next to each other.
    let mut heap = BinaryHeap::new();
    heap.push(Time(t0));
    let mut points: Vec<f64> = Vec::new();
    while let Some(Time(p)) = heap.pop() {
        if points.last().is_some_and(|&last| p - last <= tol) {
            continue;
        }
        points.push(p);
        if points.len() > MAX_PIECES {
            return Err(OracleError::TooManyPieces { limit: MAX_PIECES });
        }
        for &l in lags {
            if p + l < horizon - tol {
                heap.push(Time(p + l));
            }
        }
    }
    points.push(horizon);
    Ok(points)
}

/// Exact piecewise-polynomial solution on `[t0, horizon]`.
pub fn method_of_steps(sys: &PolyDelaySystem, horizon: f64) -> Result<PiecewisePolynomialSolution, OracleError> {
    sys.check()?;
    if !(horizon > sys.t0) {
        return Err(OracleError::Horizon {
            anchor: sys.t0,
            horizon,
        });
    }
    let (n, nd) = (sys.dim(), sys.deviations);
    let bps = breakpoints(sys.t0, horizon, &sys.lags)?;
    let mut pieces: Vec<Piece> = Vec::with_capacity(bps.len() - 1);
    let mut start_values: Vec<f64> = sys.history.iter().map(|h| h.eval(sys.t0)).collect();

    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        // Local representation of φ_j(t - τ) for t = a + s.
        let mut delayed = Vec::with_capacity(n * nd);
        for j in 0..n {
            for m in 0..nd {
                let lag = sys.lags[j * nd + m];
                let left = a - lag;
                let poly = if left < sys.t0 - 1e-12 * sys.t0.abs().max(1.0) || pieces.is_empty() {
                    sys.history[j].shift(left)
                } else {
                    // The piece whose span contains [a - τ, b - τ].
                    let mid = left + 0.5 * (b - a);
                    let idx = pieces.partition_point(|p| p.end <= mid).min(pieces.len() - 1);
                    let p = &pieces[idx];
                    p.components[j].shift(left - p.start)
                };
                delayed.push(poly);
            }
        }
        let mut components = Vec::with_capacity(n);
        for (k, &start) in start_values.iter().enumerate() {
            let mut rhs = sys.forcing[k].shift(a);
            for (slot, d) in delayed.iter().enumerate() {
                let c = sys.coefficients[k * n * nd + slot].shift(a);
                rhs = rhs.add(&c.mul(d));
            }
            let mut phi = rhs.integral();
            phi.0[0] = start;
            components.push(phi);
        }
        start_values = components.iter().map(|p| p.eval(b - a)).collect();
        pieces.push(Piece {
            start: a,
            end: b,
            components,
        });
    }
    Ok(PiecewisePolynomialSolution {
        pieces,
        boundary: sys.history.clone(),
        mirrored: false,
    })
}

/// Advanced counterpart on `[horizon, τ0]`, solved as the retarded problem
/// for `ψ(s) = φ(-s)`.
pub fn method_of_steps_advanced(
    sys: &PolyAdvanceSystem,
    horizon: f64,
) -> Result<PiecewisePolynomialSolution, OracleError> {
    let mirrored = PolyDelaySystem {
        t0: -sys.tau0,
        deviations: sys.deviations,
        coefficients: sys.coefficients.iter().map(|c| c.reflect().scale(-1.0)).collect(),
        forcing: sys.forcing.iter().map(|d| d.reflect().scale(-1.0)).collect(),
        lags: sys.leads.clone(),
        history: sys.terminal.iter().map(Poly::reflect).collect(),
    };
    let mut sol = method_of_steps(&mirrored, -horizon)?;
    sol.mirrored = true;
    Ok(sol)
}
