//! Problem definition files.
//!
//! A config is TOML with a fixed set of keys; unknown keys are rejected.
//! Relative output paths resolve against the directory holding the config.

use std::path::{Path, PathBuf};

use fde_core::expr::{auto_majorant, parse, Expr, ParseContext};
use fde_core::funcspace::GridSpec;
use fde_core::picard::SolverConfig;
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionKind {
    Retarded,
    Advanced,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    direction: Spanned<DirectionKind>,
    components: Spanned<usize>,
    deviations: Spanned<usize>,
    #[serde(alias = "tau0")]
    t0: Spanned<f64>,
    horizon: Spanned<f64>,
    equations: RawEquations,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

type SpannedExprs = Spanned<Vec<Spanned<String>>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquations {
    rhs: SpannedExprs,
    #[serde(alias = "advances")]
    delays: Spanned<Vec<SpannedExprs>>,
    lipschitz: Option<SpannedExprs>,
    #[serde(alias = "terminal")]
    history: SpannedExprs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    theta: Option<Spanned<f64>>,
    tol: Option<Spanned<f64>>,
    grid_points: Option<Spanned<usize>>,
    max_window: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    sample_step: Option<Spanned<f64>>,
    report: Option<String>,
}

/// A parsed expression with the text and config line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub expr: Expr,
    pub text: String,
    /// Dotted key, e.g. `equations.delays[1][2]` (1-based indices).
    pub key: String,
    pub line: usize,
}

/// Fully validated problem definition.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub direction: DirectionKind,
    pub components: usize,
    pub deviations: usize,
    /// `t0` for retarded problems, `τ0` for advanced ones.
    pub anchor: f64,
    pub horizon: f64,
    pub rhs: Vec<Source>,
    /// Row-major `n × N`.
    pub delays: Vec<Source>,
    pub lipschitz: Vec<Source>,
    /// True for entries derived from the right-hand side.
    pub lipschitz_auto: Vec<bool>,
    pub history: Vec<Source>,
    pub solver: SolverConfig,
    pub csv_path: PathBuf,
    pub report_path: Option<PathBuf>,
    /// `None` means a hundredth of the solved span.
    pub sample_step: Option<f64>,
}

impl ProblemConfig {
    /// Solved span in increasing order.
    pub fn span(&self) -> (f64, f64) {
        match self.direction {
            DirectionKind::Retarded => (self.anchor, self.horizon),
            DirectionKind::Advanced => (self.horizon, self.anchor),
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ProblemConfig, CliError> {
    let src =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "solution".to_string());
    parse_config(&src, base, &stem)
}

fn line_of(src: &str, offset: usize) -> usize {
    fde_core::expr::line_col(src, offset.min(src.len())).0
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn semantic(&self, span: std::ops::Range<usize>, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("line {}: {msg}", line_of(self.src, span.start)))
    }

    fn expr(&self, s: &Spanned<String>, key: String, pctx: &ParseContext) -> Result<Source, CliError> {
        let line = line_of(self.src, s.span().start);
        let text = s.get_ref().clone();
        let expr = parse(&text, pctx)
            .map_err(|e| CliError::Config(format!("line {line}: {key} = {text:?}: expression error at {e}")))?;
        Ok(Source { expr, text, key, line })
    }

    fn exprs(&self, list: &SpannedExprs, key: &str, len: usize, pctx: &ParseContext) -> Result<Vec<Source>, CliError> {
        if list.get_ref().len() != len {
            return Err(self.semantic(
                list.span(),
                format!("{key} needs {len} entries, found {}", list.get_ref().len()),
            ));
        }
        list.get_ref()
            .iter()
            .enumerate()
            .map(|(i, s)| self.expr(s, format!("{key}[{}]", i + 1), pctx))
            .collect()
    }
}

/// Validates config text. `base` resolves relative output paths, `stem`
/// names the default CSV.
pub fn parse_config(src: &str, base: &Path, stem: &str) -> Result<ProblemConfig, CliError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let at = e
            .span()
            .map(|s| format!("line {}: ", line_of(src, s.start)))
            .unwrap_or_default();
        CliError::Config(format!("{at}{}", e.message().trim_end()))
    })?;
    let cx = Ctx { src };

    let n = *raw.components.get_ref();
    let nd = *raw.deviations.get_ref();
    if n == 0 {
        return Err(cx.semantic(raw.components.span(), "components must be at least 1"));
    }
    if nd == 0 {
        return Err(cx.semantic(raw.deviations.span(), "deviations must be at least 1"));
    }
    let direction = *raw.direction.get_ref();
    let anchor = *raw.t0.get_ref();
    let horizon = *raw.horizon.get_ref();
    if !anchor.is_finite() {
        return Err(cx.semantic(raw.t0.span(), "t0 must be finite"));
    }
    let on_side = match direction {
        DirectionKind::Retarded => horizon > anchor,
        DirectionKind::Advanced => horizon < anchor,
    };
    if !horizon.is_finite() || !on_side {
        let side = match direction {
            DirectionKind::Retarded => "greater",
            DirectionKind::Advanced => "less",
        };
        return Err(cx.semantic(
            raw.horizon.span(),
            format!("horizon {horizon} must be finite and {side} than the anchor {anchor}"),
        ));
    }

    let time = ParseContext::time_only();
    let with_u = ParseContext {
        components: n,
        deviations: nd,
        allow_placeholders: true,
    };
    let eq = &raw.equations;
    let rhs = cx.exprs(&eq.rhs, "equations.rhs", n, &with_u)?;
    let history = cx.exprs(&eq.history, "equations.history", n, &time)?;

    if eq.delays.get_ref().len() != n {
        return Err(cx.semantic(
            eq.delays.span(),
            format!("equations.delays needs {n} rows, found {}", eq.delays.get_ref().len()),
        ));
    }
    let mut delays = Vec::with_capacity(n * nd);
    for (m, row) in eq.delays.get_ref().iter().enumerate() {
        delays.extend(cx.exprs(row, &format!("equations.delays[{}]", m + 1), nd, &time)?);
    }

    let given = match &eq.lipschitz {
        Some(list) => Some(cx.exprs(list, "equations.lipschitz", n, &time)?),
        None => None,
    };
    let mut lipschitz = Vec::with_capacity(n);
    let mut lipschitz_auto = Vec::with_capacity(n);
    for (k, r) in rhs.iter().enumerate() {
        if let Some(g) = &given {
            lipschitz.push(g[k].clone());
            lipschitz_auto.push(false);
            continue;
        }
        let Some(m) = auto_majorant(&r.expr) else {
            return Err(CliError::Config(format!(
                "line {}: {} = {:?} is not affine in the placeholders; give equations.lipschitz explicitly",
                r.line, r.key, r.text
            )));
        };
        lipschitz.push(Source {
            text: m.to_string(),
            expr: m,
            key: format!("equations.lipschitz[{}]", k + 1),
            line: r.line,
        });
        lipschitz_auto.push(true);
    }

    let defaults = SolverConfig::default();
    let mut solver = defaults.clone();
    if let Some(theta) = &raw.solver.theta {
        let v = *theta.get_ref();
        if !(v > 0.0 && v < 1.0) {
            return Err(cx.semantic(theta.span(), format!("solver.theta = {v} must lie in (0, 1)")));
        }
        solver.theta = v;
    }
    if let Some(tol) = &raw.solver.tol {
        let v = *tol.get_ref();
        if !(v > 0.0 && v.is_finite()) {
            return Err(cx.semantic(tol.span(), format!("solver.tol = {v} must be positive")));
        }
        solver.tol = v;
    }
    if let Some(g) = &raw.solver.grid_points {
        solver.grid =
            GridSpec::new(*g.get_ref()).map_err(|e| cx.semantic(g.span(), format!("solver.grid_points: {e}")))?;
    }
    if let Some(w) = &raw.solver.max_window {
        let v = *w.get_ref();
        if !(v > 0.0 && v.is_finite()) {
            return Err(cx.semantic(w.span(), format!("solver.max_window = {v} must be positive")));
        }
        solver.max_window = v;
    }
    solver.check().map_err(|e| CliError::Config(format!("solver: {e}")))?;

    let sample_step = match &raw.output.sample_step {
        Some(s) => {
            let v = *s.get_ref();
            if !(v > 0.0 && v.is_finite()) {
                return Err(cx.semantic(s.span(), format!("output.sample_step = {v} must be positive")));
            }
            Some(v)
        }
        None => None,
    };
    let csv_path = base.join(raw.output.path.clone().unwrap_or_else(|| format!("{stem}.csv")));
    let report_path = raw.output.report.as_ref().map(|r| base.join(r));

    Ok(ProblemConfig {
        direction,
        components: n,
        deviations: nd,
        anchor,
        horizon,
        rhs,
        delays,
        lipschitz,
        lipschitz_auto,
        history,
        solver,
        csv_path,
        report_path,
        sample_step,
    })
}
