//! `--verify`: compares a solution with an independent reference solver.
//!
//! Each reference applies to a narrow problem class; a config outside it is
//! a config error.

use fde_core::expr::{Affine, Expr};
use fde_core::oracle::{
    method_of_steps, method_of_steps_advanced, pantograph_series, rk4_reference, Poly, PolyAdvanceSystem,
    PolyDelaySystem,
};
use fde_core::picard::Solution;

use crate::config::{DirectionKind, ProblemConfig, Source};
use crate::error::CliError;

/// Allowed deviation from the method of steps.
pub const STEPS_TOLERANCE: f64 = 1e-6;
/// Allowed deviation from the pantograph series.
pub const PANTOGRAPH_TOLERANCE: f64 = 1e-5;
/// Allowed deviation from the Runge–Kutta reference.
pub const RK4_TOLERANCE: f64 = 1e-5;
/// Discretization allowance `C·h²` on top of the window certificate.
pub const CERTIFICATE_H2: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifyKind {
    /// Exact method of steps: constant lags, polynomial data, affine rhs.
    Steps,
    /// Series solution of `φ' = a·φ(q·t)`, `t0 = 0`.
    Pantograph,
    /// Fourth-order Runge–Kutta when every deviation is the identity.
    Rk4,
}

impl VerifyKind {
    pub fn name(self) -> &'static str {
        match self {
            VerifyKind::Steps => "steps",
            VerifyKind::Pantograph => "pantograph",
            VerifyKind::Rk4 => "rk4",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            VerifyKind::Steps => STEPS_TOLERANCE,
            VerifyKind::Pantograph => PANTOGRAPH_TOLERANCE,
            VerifyKind::Rk4 => RK4_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub kind: VerifyKind,
    pub points: usize,
    /// Sup over compared points and components; NaN if the reference or
    /// the solution was non-finite anywhere.
    pub max_deviation: f64,
    pub worst_t: f64,
    pub tolerance: f64,
    /// `max(deviation − error_bound − C·h²)` over compared points, where
    /// `error_bound` is that of the window holding the point and `h` the
    /// grid spacing of the longest window. Nonpositive when the certificate
    /// covers the deviation.
    pub certificate_slack: f64,
}

impl VerifyOutcome {
    pub fn within_tolerance(&self) -> bool {
        self.max_deviation <= self.tolerance
    }

    pub fn certificate_covers(&self) -> bool {
        self.certificate_slack <= 0.0
    }
}

fn inapplicable(kind: VerifyKind, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("--verify {} does not apply: {why}", kind.name()))
}

fn poly_of(kind: VerifyKind, e: &Expr, what: &str) -> Result<Poly, CliError> {
    e.to_polynomial()
        .map(Poly)
        .ok_or_else(|| inapplicable(kind, format!("{what} is not a polynomial in t")))
}

fn source_poly(kind: VerifyKind, s: &Source) -> Result<Poly, CliError> {
    poly_of(kind, &s.expr, &format!("{} = {:?}", s.key, s.text))
}

/// Forcing and per-slot coefficients of an affine rhs, all polynomial.
fn affine_parts(kind: VerifyKind, cfg: &ProblemConfig, k: usize) -> Result<(Poly, Vec<Poly>), CliError> {
    let src = &cfg.rhs[k];
    let what = format!("{} = {:?}", src.key, src.text);
    let a = Affine::of(&src.expr).ok_or_else(|| inapplicable(kind, format!("{what} is not affine")))?;
    let forcing = poly_of(kind, &a.constant, &format!("the forcing term of {what}"))?;
    let slots = cfg.components * cfg.deviations;
    let mut coefficients = vec![Poly::zero(); slots];
    for (slot, (_, c)) in &a.coefficients {
        coefficients[*slot] = poly_of(kind, c, &format!("a coefficient of {what}"))?;
    }
    Ok((forcing, coefficients))
}

struct Comparison {
    points: usize,
    max_deviation: f64,
    worst_t: f64,
    slack: f64,
}

fn compare(
    cfg: &ProblemConfig,
    sol: &Solution,
    times: &[f64],
    reference: impl Fn(usize, usize) -> f64,
) -> Result<Comparison, CliError> {
    let report = sol.report();
    let longest = report.windows.iter().map(|w| w.window.len()).fold(0.0, f64::max);
    let h = longest / (cfg.solver.grid.points_per_window() - 1) as f64;
    let mut c = Comparison {
        points: 0,
        max_deviation: 0.0,
        worst_t: f64::NAN,
        slack: f64::NEG_INFINITY,
    };
    for (i, &t) in times.iter().enumerate() {
        c.points += 1;
        let bound = report.window_at(t).map_or(0.0, |w| w.error_bound);
        for k in 0..cfg.components {
            let got = sol
                .eval(k, t)
                .map_err(|e| CliError::Convergence(format!("evaluating component {} at t = {t}: {e}", k + 1)))?;
            let d = (got - reference(i, k)).abs();
            if d.is_nan() || d > c.max_deviation {
                c.max_deviation = d;
                c.worst_t = t;
            }
            let s = d - bound - CERTIFICATE_H2 * h * h;
            c.slack = if s.is_nan() { f64::NAN } else { c.slack.max(s) };
            if c.max_deviation.is_nan() {
                return Ok(c);
            }
        }
    }
    Ok(c)
}

/// Runs the requested reference and compares on the solution grid.
pub fn verify(kind: VerifyKind, cfg: &ProblemConfig, sol: &Solution) -> Result<VerifyOutcome, CliError> {
    let c = match kind {
        VerifyKind::Steps => verify_steps(cfg, sol)?,
        VerifyKind::Pantograph => verify_pantograph(cfg, sol)?,
        VerifyKind::Rk4 => verify_rk4(cfg, sol)?,
    };
    Ok(VerifyOutcome {
        kind,
        points: c.points,
        max_deviation: c.max_deviation,
        worst_t: c.worst_t,
        tolerance: kind.tolerance(),
        certificate_slack: c.slack,
    })
}

fn verify_steps(cfg: &ProblemConfig, sol: &Solution) -> Result<Comparison, CliError> {
    let kind = VerifyKind::Steps;
    let (n, nd) = (cfg.components, cfg.deviations);
    let mut coefficients = Vec::with_capacity(n * n * nd);
    let mut forcing = Vec::with_capacity(n);
    for k in 0..n {
        let (f, c) = affine_parts(kind, cfg, k)?;
        forcing.push(f);
        coefficients.extend(c);
    }
    let mut shifts = Vec::with_capacity(n * nd);
    for d in &cfg.delays {
        let p = source_poly(kind, d)?;
        let c = &p.0;
        let (c0, c1) = (c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0));
        let shift = match cfg.direction {
            DirectionKind::Retarded => -c0,
            DirectionKind::Advanced => c0,
        };
        if p.degree() > 1 || c1 != 1.0 || !(shift > 0.0) {
            let form = match cfg.direction {
                DirectionKind::Retarded => "t - τ",
                DirectionKind::Advanced => "t + τ",
            };
            return Err(inapplicable(
                kind,
                format!("{} = {:?} is not of the form {form} with τ > 0", d.key, d.text),
            ));
        }
        shifts.push(shift);
    }
    let boundary = cfg
        .history
        .iter()
        .map(|s| source_poly(kind, s))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = match cfg.direction {
        DirectionKind::Retarded => method_of_steps(
            &PolyDelaySystem {
                t0: cfg.anchor,
                deviations: nd,
                coefficients,
                forcing,
                lags: shifts,
                history: boundary,
            },
            cfg.horizon,
        ),
        DirectionKind::Advanced => method_of_steps_advanced(
            &PolyAdvanceSystem {
                tau0: cfg.anchor,
                deviations: nd,
                coefficients,
                forcing,
                leads: shifts,
                terminal: boundary,
            },
            cfg.horizon,
        ),
    }
    .map_err(|e| inapplicable(kind, e))?;
    let grid = sol.grid().clone();
    compare(cfg, sol, &grid, |i, k| reference.eval(k, grid[i]))
}

/// Series terms used for the pantograph reference, at most.
const PANTOGRAPH_MAX_TERMS: usize = 400;

fn verify_pantograph(cfg: &ProblemConfig, sol: &Solution) -> Result<Comparison, CliError> {
    let kind = VerifyKind::Pantograph;
    if cfg.direction != DirectionKind::Retarded || cfg.components != 1 || cfg.deviations != 1 {
        return Err(inapplicable(
            kind,
            "needs a retarded problem with one component and one deviation",
        ));
    }
    if cfg.anchor != 0.0 {
        return Err(inapplicable(kind, "needs t0 = 0"));
    }
    let (forcing, coefficients) = affine_parts(kind, cfg, 0)?;
    if forcing.0.iter().any(|&c| c != 0.0) {
        return Err(inapplicable(kind, "the right-hand side has a forcing term"));
    }
    let a = &coefficients[0];
    if a.degree() > 0 {
        return Err(inapplicable(kind, "the coefficient of u[1][1] is not constant"));
    }
    let a = a.eval(0.0);
    let q = source_poly(kind, &cfg.delays[0])?;
    if q.degree() > 1 || q.0[0] != 0.0 || !(q.0.get(1).is_some_and(|&q| q > 0.0 && q < 1.0)) {
        return Err(inapplicable(kind, "the deviation is not q·t with 0 < q < 1"));
    }
    let q = q.0[1];
    let c = cfg.history[0]
        .expr
        .eval(0.0, None)
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| inapplicable(kind, "the history is not finite at t = 0"))?;
    let grid = sol.grid().clone();
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid.iter() {
        let mut terms = 30;
        let v = loop {
            let v = pantograph_series(a, q, terms, t);
            let converged = v.tail_bound.is_some_and(|b| b <= 1e-16 * v.value.abs().max(1.0));
            if converged || terms >= PANTOGRAPH_MAX_TERMS {
                break v;
            }
            terms *= 2;
        };
        let ok = v.tail_bound.is_some_and(|b| b <= 1e-9 * v.value.abs().max(1.0));
        if !ok {
            return Err(inapplicable(
                kind,
                format!("the series does not converge fast enough at t = {t}"),
            ));
        }
        values.push(c * v.value);
    }
    compare(cfg, sol, &grid, |i, _| values[i])
}

/// Longest Runge–Kutta step.
const RK4_MAX_STEP: f64 = 1e-3;

fn verify_rk4(cfg: &ProblemConfig, sol: &Solution) -> Result<Comparison, CliError> {
    let kind = VerifyKind::Rk4;
    for d in &cfg.delays {
        if source_poly(kind, d)?.0 != [0.0, 1.0] {
            return Err(inapplicable(kind, format!("{} = {:?} is not t", d.key, d.text)));
        }
    }
    let (n, nd) = (cfg.components, cfg.deviations);
    let mut y = cfg
        .history
        .iter()
        .map(|s| {
            s.expr
                .eval(cfg.anchor, None)
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| inapplicable(kind, format!("{} is not finite at the anchor", s.key)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rhs: Vec<Expr> = cfg.rhs.iter().map(|s| s.expr.clone()).collect();
    let f = |t: f64, y: &[f64], dy: &mut [f64]| {
        let u: Vec<f64> = (0..n * nd).map(|slot| y[slot / nd]).collect();
        for (k, e) in rhs.iter().enumerate() {
            dy[k] = e.eval(t, Some(&u)).unwrap_or(f64::NAN);
        }
    };
    // Integrate node to node from the anchor so the reference lands on
    // every grid point.
    let mut grid: Vec<f64> = sol.grid().iter().copied().collect();
    if cfg.direction == DirectionKind::Advanced {
        grid.reverse();
    }
    let mut values = vec![y.clone()];
    for w in grid.windows(2) {
        let step = (w[1] - w[0]).abs().min(RK4_MAX_STEP);
        y = rk4_reference(f, &y, w[0], step, w[1]).last().to_vec();
        values.push(y.clone());
    }
    compare(cfg, sol, &grid, |i, k| values[i][k])
}
