//! CSV samples and the plain-text certificate report.

use std::fmt::Write as _;
use std::path::Path;

use fde_core::picard::Solution;

use crate::config::{DirectionKind, ProblemConfig};
use crate::error::CliError;
use crate::verify::VerifyOutcome;

/// Intervals across the span when no sample step is configured.
pub const DEFAULT_SAMPLES: usize = 100;

/// Row cap, against absurdly small sample steps.
pub const MAX_ROWS: usize = 10_000_000;

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sample times from the anchor toward the horizon in steps of `step`,
/// ending exactly on the horizon, returned in increasing order.
pub fn sample_times(anchor: f64, horizon: f64, step: f64) -> Result<Vec<f64>, CliError> {
    let span = (horizon - anchor).abs();
    let sign = if horizon >= anchor { 1.0 } else { -1.0 };
    let count = (span / step).floor();
    if !(count < MAX_ROWS as f64) {
        return Err(CliError::Config(format!(
            "sample step {step} gives more than {MAX_ROWS} rows"
        )));
    }
    let mut times: Vec<f64> = (0..=count as usize)
        .map(|i| anchor + sign * (i as f64) * step)
        .filter(|t| (t - anchor).abs() < span - 1e-9 * step)
        .collect();
    times.push(horizon);
    if sign < 0.0 {
        times.reverse();
    }
    Ok(times)
}

pub fn render_csv(cfg: &ProblemConfig, sol: &Solution, step: Option<f64>) -> Result<String, CliError> {
    let (a, b) = cfg.span();
    let step = step.unwrap_or((b - a) / DEFAULT_SAMPLES as f64);
    let times = sample_times(cfg.anchor, cfg.horizon, step)?;
    let mut out = String::from("t");
    for k in 1..=cfg.components {
        let _ = write!(out, ",phi_{k}");
    }
    out.push('\n');
    for t in times {
        out.push_str(&fmt_f64(t));
        for k in 0..cfg.components {
            let v = sol
                .eval(k, t)
                .map_err(|e| CliError::Convergence(format!("sampling component {} at t = {t}: {e}", k + 1)))?;
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn render_report(cfg: &ProblemConfig, sol: &Solution, residuals: &[f64], verify: Option<&VerifyOutcome>) -> String {
    let mut r = String::new();
    let report = sol.report();
    let direction = match cfg.direction {
        DirectionKind::Retarded => "retarded",
        DirectionKind::Advanced => "advanced",
    };
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(r, "{k}: {v}");
    };
    kv("direction", direction.to_string());
    kv("components", cfg.components.to_string());
    kv("deviations", cfg.deviations.to_string());
    kv("anchor", fmt_f64(cfg.anchor));
    kv("horizon", fmt_f64(cfg.horizon));
    kv("theta", fmt_f64(cfg.solver.theta));
    kv("tol", fmt_f64(cfg.solver.tol));
    kv("grid_points", cfg.solver.grid.points_per_window().to_string());
    kv("max_window", fmt_f64(cfg.solver.max_window));
    for (k, l) in cfg.lipschitz.iter().enumerate() {
        let origin = if cfg.lipschitz_auto[k] { "auto" } else { "given" };
        kv(&format!("lipschitz_{}", k + 1), format!("{} ({origin})", l.text));
    }
    kv("windows", report.total_windows().to_string());
    kv("total_iterations", report.total_iterations().to_string());
    kv("max_error_bound", fmt_f64(report.max_error_bound()));
    for (k, v) in residuals.iter().enumerate() {
        kv(&format!("residual_{}", k + 1), fmt_f64(*v));
    }
    if let Some(v) = verify {
        kv("verify", v.kind.name().to_string());
        kv("verify_points", v.points.to_string());
        kv("verify_max_deviation", fmt_f64(v.max_deviation));
        kv("verify_at", fmt_f64(v.worst_t));
        kv("verify_tolerance", fmt_f64(v.tolerance));
        kv("verify_within_tolerance", v.within_tolerance().to_string());
        kv("verify_certificate_slack", fmt_f64(v.certificate_slack));
        kv("verify_certificate_covers", v.certificate_covers().to_string());
    }
    for (i, w) in report.windows.iter().enumerate() {
        let _ = writeln!(r);
        let _ = writeln!(r, "[window {}]", i + 1);
        let _ = writeln!(r, "t_start: {}", fmt_f64(w.window.t_start));
        let _ = writeln!(r, "t_end: {}", fmt_f64(w.window.t_end));
        let _ = writeln!(r, "q: {}", fmt_f64(w.window.q));
        let _ = writeln!(r, "iterations: {}", w.iterations);
        let _ = writeln!(r, "final_residual: {}", fmt_f64(w.final_residual));
        let _ = writeln!(r, "error_bound: {}", fmt_f64(w.error_bound));
    }
    r
}

/// Writes `contents`, creating missing parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
