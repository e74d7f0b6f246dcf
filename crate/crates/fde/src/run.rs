//! Turns a validated config into a problem, solves it, and writes outputs.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use fde_core::expr::EvalError;
use fde_core::funcspace::{PiecewiseFunction, TimeFn};
use fde_core::picard::{residual, solve, solve_advanced, Solution};
use fde_core::problem::{check_deviations, AdvancedTVP, ProblemError, RetardedIVP, RhsFn};

use crate::config::{DirectionKind, ProblemConfig, Source};
use crate::error::CliError;
use crate::output::{render_csv, render_report, write_file};
use crate::verify::{verify, VerifyKind, VerifyOutcome};

/// Uniform samples of the solved span in the deviation pre-check.
pub const PRECHECK_POINTS: usize = 4096;

/// First expression evaluation failure seen during a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFailure {
    pub key: String,
    pub text: String,
    pub t: f64,
    pub error: EvalError,
}

type FailureSlot = Arc<Mutex<Option<EvalFailure>>>;

fn record(slot: &FailureSlot, src: &Source, t: f64, error: EvalError) {
    if let Ok(mut g) = slot.lock() {
        if g.is_none() {
            *g = Some(EvalFailure {
                key: src.key.clone(),
                text: src.text.clone(),
                t,
                error,
            });
        }
    }
}

// Evaluation errors become NaN, which the solver reports as non-finite.
fn time_closure(src: &Source, slot: &FailureSlot) -> TimeFn {
    let (src, slot) = (src.clone(), slot.clone());
    Arc::new(move |t| match src.expr.eval(t, None) {
        Ok(v) => v,
        Err(e) => {
            record(&slot, &src, t, e);
            f64::NAN
        }
    })
}

fn rhs_closure(src: &Source, slot: &FailureSlot) -> RhsFn {
    let (src, slot) = (src.clone(), slot.clone());
    Arc::new(move |t, u| match src.expr.eval(t, Some(u)) {
        Ok(v) => v,
        Err(e) => {
            record(&slot, &src, t, e);
            f64::NAN
        }
    })
}

#[derive(Clone)]
pub enum Problem {
    Retarded(RetardedIVP),
    Advanced(AdvancedTVP),
}

/// A problem together with the slot its expressions report failures to.
pub struct Built {
    pub problem: Problem,
    failures: FailureSlot,
}

impl Built {
    pub fn first_failure(&self) -> Option<EvalFailure> {
        self.failures.lock().ok().and_then(|g| g.clone())
    }

    fn context(&self) -> Option<String> {
        slot_context(&self.failures)
    }
}

fn classify(e: ProblemError, context: Option<String>) -> CliError {
    let msg = match context {
        Some(c) => format!("{e}; {c}"),
        None => e.to_string(),
    };
    match e {
        ProblemError::Empty | ProblemError::Shape { .. } | ProblemError::EmptySpan(..) => CliError::Config(msg),
        _ => CliError::Validation(msg),
    }
}

fn slot_context(slot: &FailureSlot) -> Option<String> {
    let f = slot.lock().ok().and_then(|g| g.clone())?;
    Some(format!(
        "first expression failure: {} = {:?} at t = {}: {}",
        f.key, f.text, f.t, f.error
    ))
}

/// Builds the problem and runs the deviation pre-check over the solved span.
pub fn build_problem(cfg: &ProblemConfig) -> Result<Built, CliError> {
    let slot: FailureSlot = Arc::new(Mutex::new(None));
    let rhs: Vec<RhsFn> = cfg.rhs.iter().map(|s| rhs_closure(s, &slot)).collect();
    let delays: Vec<TimeFn> = cfg.delays.iter().map(|s| time_closure(s, &slot)).collect();
    let lipschitz: Vec<TimeFn> = cfg.lipschitz.iter().map(|s| time_closure(s, &slot)).collect();
    let problem = match cfg.direction {
        DirectionKind::Retarded => {
            let history = cfg
                .history
                .iter()
                .map(|s| PiecewiseFunction::history(time_closure(s, &slot), cfg.anchor))
                .collect();
            RetardedIVP::new(cfg.anchor, cfg.deviations, rhs, delays, lipschitz, history)
                .map(Problem::Retarded)
                .map_err(|e| classify(e, slot_context(&slot)))?
        }
        DirectionKind::Advanced => {
            let terminal = cfg
                .history
                .iter()
                .map(|s| PiecewiseFunction::terminal(time_closure(s, &slot), cfg.anchor))
                .collect();
            AdvancedTVP::new(cfg.anchor, cfg.deviations, rhs, delays, lipschitz, terminal)
                .map(Problem::Advanced)
                .map_err(|e| classify(e, slot_context(&slot)))?
        }
    };
    let built = Built {
        problem,
        failures: slot,
    };
    let (a, b) = cfg.span();
    let checked = match &built.problem {
        Problem::Retarded(p) => check_deviations(p, a, b, PRECHECK_POINTS),
        Problem::Advanced(p) => check_deviations(p, a, b, PRECHECK_POINTS),
    };
    checked.map_err(|e| classify(e, built.context()))?;
    Ok(built)
}

/// Solves a built problem over the configured horizon.
pub fn solve_built(cfg: &ProblemConfig, built: &Built) -> Result<Solution, CliError> {
    let out = match &built.problem {
        Problem::Retarded(p) => solve(p, cfg.horizon, &cfg.solver),
        Problem::Advanced(p) => solve_advanced(p, cfg.horizon, &cfg.solver),
    };
    out.map_err(|e| CliError::from_solve(&e, built.context().as_deref()))
}

/// Per-component residual of the integral equation on the solution grid.
pub fn residuals(built: &Built, sol: &Solution) -> Result<Vec<f64>, CliError> {
    let r = match &built.problem {
        Problem::Retarded(p) => residual(p, sol),
        Problem::Advanced(p) => residual(p, sol),
    };
    r.map_err(|e| CliError::from_solve(&e, built.context().as_deref()))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub verify: Option<VerifyKind>,
    pub report: Option<PathBuf>,
    pub sample_step: Option<f64>,
}

/// What a successful run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub solution: Solution,
    pub csv_path: PathBuf,
    pub report_path: PathBuf,
    pub verify: Option<VerifyOutcome>,
}

fn default_report(csv: &std::path::Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".report");
    PathBuf::from(s)
}

/// Solves, optionally verifies, and writes the CSV and report.
pub fn run(cfg: &ProblemConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    if let Some(step) = opts.sample_step {
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::Config(format!("--sample-step {step} must be positive")));
        }
    }
    let built = build_problem(cfg)?;
    let solution = solve_built(cfg, &built)?;
    let res = residuals(&built, &solution)?;
    let verify = match opts.verify {
        Some(kind) => Some(verify(kind, cfg, &solution)?),
        None => None,
    };

    let step = opts.sample_step.or(cfg.sample_step);
    let csv = render_csv(cfg, &solution, step)?;
    let report = render_report(cfg, &solution, &res, verify.as_ref());
    let report_path = opts
        .report
        .clone()
        .or_else(|| cfg.report_path.clone())
        .unwrap_or_else(|| default_report(&cfg.csv_path));
    write_file(&cfg.csv_path, &csv)?;
    write_file(&report_path, &report)?;
    Ok(RunOutcome {
        solution,
        csv_path: cfg.csv_path.clone(),
        report_path,
        verify,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use std::path::Path;

    const MINIMAL: &str = r#"
direction = "retarded"
components = 1
deviations = 1
t0 = 0.0
horizon = 2.0

[equations]
rhs = ["u[1][1]"]
delays = [["t - 1"]]
history = ["1"]
"#;

    fn cfg(src: &str) -> ProblemConfig {
        parse_config(src, Path::new("/nonexistent"), "case").unwrap()
    }

    #[test]
    fn delay_example_reaches_three_and_a_half() {
        let c = cfg(MINIMAL);
        let built = build_problem(&c).unwrap();
        let sol = solve_built(&c, &built).unwrap();
        assert!((sol.eval(0, 2.0).unwrap() - 3.5).abs() < 1e-6);
        assert!(built.first_failure().is_none());
    }

    #[test]
    fn retardation_violation_is_validation_error() {
        let c = cfg(&MINIMAL.replace("t - 1", "t + 1"));
        match build_problem(&c) {
            Err(CliError::Validation(m)) => assert!(m.contains("retardation"), "{m}"),
            Err(e) => panic!("wrong class: {e}"),
            Ok(_) => panic!("expected a validation error"),
        }
    }

    #[test]
    fn advance_violation_is_validation_error() {
        let src = MINIMAL
            .replace("\"retarded\"", "\"advanced\"")
            .replace("horizon = 2.0", "horizon = -2.0");
        let c = cfg(&src);
        assert!(matches!(build_problem(&c), Err(CliError::Validation(_))));
    }

    #[test]
    fn expression_failure_is_reported_as_convergence_error() {
        let c = cfg(&MINIMAL.replace("rhs = [\"u[1][1]\"]", "rhs = [\"u[1][1] + log(t - 1)\"]"));
        let built = build_problem(&c).unwrap();
        match solve_built(&c, &built) {
            Err(CliError::Convergence(m)) => {
                assert!(m.contains("equations.rhs[1]") && m.contains("log"), "{m}");
            }
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }

    #[test]
    fn negative_explicit_majorant_is_validation_error() {
        let src = MINIMAL.replace("history = [\"1\"]", "history = [\"1\"]\nlipschitz = [\"-1\"]");
        let c = cfg(&src);
        let built = build_problem(&c).unwrap();
        assert!(matches!(solve_built(&c, &built), Err(CliError::Validation(_))));
    }

    #[test]
    fn understated_majorant_fails_to_converge() {
        let src = MINIMAL
            .replace("u[1][1]", "50*u[1][1]")
            .replace("t - 1", "t")
            .replace("history = [\"1\"]", "history = [\"1\"]\nlipschitz = [\"0.01\"]");
        let c = cfg(&src);
        let built = build_problem(&c).unwrap();
        assert!(matches!(solve_built(&c, &built), Err(CliError::Convergence(_))));
    }
}
