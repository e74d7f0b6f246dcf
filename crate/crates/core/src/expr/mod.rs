//! Arithmetic expressions in `t` and the placeholders `u[k][j]` (the value of
//! component `k` at deviation `j`), used to write right-hand sides, delays,
//! histories and majorants as text.
//!
//! Grammar (EBNF, whitespace between tokens is ignored):
//!
//! ```text
//! expr     = sum ;
//! sum      = product , { ("+" | "-") , product } ;
//! product  = unary , { ("*" | "/") , unary } ;
//! unary    = "-" , unary_operand | power ;
//! power    = atom , [ "^" , power_rhs ] ;          (* right associative *)
//! atom     = number | "t" | "pi" | placeholder | call | "(" , expr , ")" ;
//! placeholder = "u" , "[" , integer , "]" , "[" , integer , "]" ;
//! call     = name , "(" , expr , { "," , expr } , ")" ;
//! name     = "sin" | "cos" | "exp" | "log" | "abs" | "sqrt" | "min" | "max" ;
//! number   = digits , [ "." , [ digits ] ] , [ exponent ] | "." , digits , [ exponent ] ;
//! exponent = ("e" | "E") , [ "+" | "-" ] , digits ;
//! ```
//!
//! `unary_operand` is a power or another unary minus, so `-2^2 = -(2^2) = -4`
//! and `2^-1 = 0.5`. Placeholder indices are 1-based.

mod affine;
mod parse;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub use affine::{auto_majorant, Affine};
pub use parse::{line_col, parse, ExprError, ParseContext, ParseError};

/// Byte range in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Abs,
        Func::Sqrt,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn is_variadic(self) -> bool {
        matches!(self, Func::Min | Func::Max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    T,
    /// 0-based component `k` and deviation `j`; `slot = k·N + j`.
    Placeholder {
        k: usize,
        j: usize,
        slot: usize,
    },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Syntax tree node. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    LogDomain,
    SqrtDomain,
    MissingPlaceholders,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{} at bytes {}..{}", describe(*kind), span.start, span.end)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub span: Span,
}

fn describe(kind: EvalErrorKind) -> &'static str {
    match kind {
        EvalErrorKind::DivisionByZero => "division by zero",
        EvalErrorKind::LogDomain => "log of a nonpositive number",
        EvalErrorKind::SqrtDomain => "sqrt of a negative number",
        EvalErrorKind::MissingPlaceholders => "placeholder values not supplied",
        EvalErrorKind::NonFinite => "non-finite result",
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn num(v: f64) -> Self {
        Expr::new(ExprKind::Num(v))
    }

    pub fn t() -> Self {
        Expr::new(ExprKind::T)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Self {
        Expr::new(ExprKind::Neg(Box::new(e)))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)))
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Self {
        Expr::new(ExprKind::Call(f, args))
    }

    /// Placeholder with 0-based indices in a system with `n_dev` deviations.
    pub fn placeholder(k: usize, j: usize, n_dev: usize) -> Self {
        Expr::new(ExprKind::Placeholder {
            k,
            j,
            slot: k * n_dev + j,
        })
    }

    fn children(&self) -> impl Iterator<Item = &Expr> {
        let v: Vec<&Expr> = match &self.kind {
            ExprKind::Num(_) | ExprKind::T | ExprKind::Placeholder { .. } => Vec::new(),
            ExprKind::Neg(a) => alloc::vec![&**a],
            ExprKind::Binary(_, a, b) => alloc::vec![&**a, &**b],
            ExprKind::Call(_, args) => args.iter().collect(),
        };
        v.into_iter()
    }

    pub fn has_placeholders(&self) -> bool {
        matches!(self.kind, ExprKind::Placeholder { .. }) || self.children().any(Expr::has_placeholders)
    }

    pub fn depends_on_t(&self) -> bool {
        matches!(self.kind, ExprKind::T) || self.children().any(Expr::depends_on_t)
    }

    /// 0-based `(k, j)` of every placeholder occurrence, in source order.
    pub fn placeholders(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.collect_placeholders(&mut out);
        out
    }

    fn collect_placeholders(&self, out: &mut Vec<(usize, usize)>) {
        if let ExprKind::Placeholder { k, j, .. } = self.kind {
            out.push((k, j));
        }
        for c in self.children() {
            c.collect_placeholders(out);
        }
    }

    /// Evaluates at time `t`; `u` holds placeholder values laid out `k·N + j`.
    pub fn eval(&self, t: f64, u: Option<&[f64]>) -> Result<f64, EvalError> {
        let fail = |kind| EvalError { kind, span: self.span };
        let v = match &self.kind {
            ExprKind::Num(v) => *v,
            ExprKind::T => t,
            ExprKind::Placeholder { slot, .. } => *u
                .and_then(|u| u.get(*slot))
                .ok_or(fail(EvalErrorKind::MissingPlaceholders))?,
            ExprKind::Neg(a) => -a.eval(t, u)?,
            ExprKind::Binary(op, a, b) => {
                let (x, y) = (a.eval(t, u)?, b.eval(t, u)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(fail(EvalErrorKind::DivisionByZero));
                        }
                        x / y
                    }
                    BinOp::Pow => libm::pow(x, y),
                }
            }
            ExprKind::Call(f, args) => {
                let x = args[0].eval(t, u)?;
                match f {
                    Func::Sin => libm::sin(x),
                    Func::Cos => libm::cos(x),
                    Func::Exp => libm::exp(x),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(fail(EvalErrorKind::LogDomain));
                        }
                        libm::log(x)
                    }
                    Func::Abs => libm::fabs(x),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(fail(EvalErrorKind::SqrtDomain));
                        }
                        libm::sqrt(x)
                    }
                    Func::Min | Func::Max => {
                        let mut acc = x;
                        for a in &args[1..] {
                            let y = a.eval(t, u)?;
                            acc = if *f == Func::Min { acc.min(y) } else { acc.max(y) };
                        }
                        acc
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(EvalErrorKind::NonFinite))
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary(op, ..) => op.precedence(),
            ExprKind::Neg(_) => 3,
            ExprKind::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Minimal-parenthesis rendering that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "-{}", -v),
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::T => f.write_str("t"),
            ExprKind::Placeholder { k, j, .. } => write!(f, "u[{}][{}]", k + 1, j + 1),
            ExprKind::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < 3)
            }
            ExprKind::Binary(op, a, b) => {
                let p = op.precedence();
                let (left, right) = if *op == BinOp::Pow {
                    (a.precedence() <= 4, b.precedence() < 3)
                } else {
                    (a.precedence() < p, b.precedence() <= p)
                };
                write_child(f, a, left)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, b, right)
            }
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Renders with a trailing description, for diagnostics.
pub fn render(e: &Expr) -> String {
    alloc::format!("{e}")
}
