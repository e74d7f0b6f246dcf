//! Precedence-climbing parser.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use super::{BinOp, Expr, ExprKind, Func, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseContext {
    /// Number of components `n`.
    pub components: usize,
    /// Number of deviations `N`.
    pub deviations: usize,
    pub allow_placeholders: bool,
}

impl ParseContext {
    /// Context for expressions in `t` only.
    pub fn time_only() -> Self {
        ParseContext {
            components: 0,
            deviations: 0,
            allow_placeholders: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub col: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected ", self.line, self.col)?;
        for (i, e) in self.expected.iter().enumerate() {
            match i {
                0 => {}
                _ if i + 1 == self.expected.len() => f.write_str(" or ")?,
                _ => f.write_str(", ")?,
            }
            f.write_str(e)?;
        }
        write!(f, ", found {}", self.found)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("{0}")]
    Parse(ParseError),
    #[error("{line}:{col}: placeholder u[{k}][{j}] out of range (n = {components}, N = {deviations})")]
    PlaceholderOutOfRange {
        k: usize,
        j: usize,
        components: usize,
        deviations: usize,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: placeholders are not allowed here")]
    PlaceholderForbidden { line: usize, col: usize },
    #[error("{line}:{col}: {name} takes {expected} argument(s), found {found}")]
    Arity {
        name: &'static str,
        expected: &'static str,
        found: usize,
        line: usize,
        col: usize,
    },
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, src[line_start..offset].chars().count() + 1)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Int(usize),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => alloc::format!("number {v}"),
            Tok::Int(v) => alloc::format!("integer {v}"),
            Tok::Ident(s) => alloc::format!("'{s}'"),
            Tok::Sym(c) => alloc::format!("'{c}'"),
            Tok::End => "end of input".to_string(),
        }
    }
}

const OPERAND: &[&str] = &["number", "'t'", "'pi'", "placeholder", "function", "'('", "'-'"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
    ctx: ParseContext,
    /// Inside `u[..]` brackets, integers lex without a fractional part.
    index_mode: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, ctx: ParseContext) -> Result<Self, ExprError> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
            ctx,
            index_mode: false,
        };
        p.advance()?;
        Ok(p)
    }

    fn error_at(&self, offset: usize, expected: &[&'static str], found: String) -> ExprError {
        let (line, col) = line_col(self.src, offset);
        ExprError::Parse(ParseError {
            offset,
            line,
            col,
            expected: expected.to_vec(),
            found,
        })
    }

    fn unexpected(&self, expected: &[&'static str]) -> ExprError {
        self.error_at(self.tok_start, expected, self.tok.describe())
    }

    fn advance(&mut self) -> Result<(), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos] as char;
        if c.is_ascii_digit() || (c == '.' && !self.index_mode) {
            self.tok = self.lex_number()?;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = self.pos;
            while self.pos < bytes.len()
                && ((bytes[self.pos] as char).is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if "+-*/^(),[]".contains(c) {
            self.pos += 1;
            self.tok = Tok::Sym(c);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return Err(self.error_at(self.pos, &["operator", "operand"], alloc::format!("'{ch}'")));
        }
        Ok(())
    }

    fn lex_number(&mut self) -> Result<Tok, ExprError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let int_digits = digits(&mut p);
        if self.index_mode {
            self.pos = p;
            return self.src[start..p]
                .parse::<usize>()
                .map(Tok::Int)
                .map_err(|_| self.error_at(start, &["index"], self.src[start..p].to_string()));
        }
        let mut frac_digits = 0;
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            frac_digits = digits(&mut p);
        }
        if int_digits + frac_digits == 0 {
            return Err(self.error_at(start, &["digit"], "'.'".to_string()));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                return Err(self.error_at(
                    q,
                    &["exponent digits"],
                    self.src[q..]
                        .chars()
                        .next()
                        .map_or("end of input".to_string(), |c| alloc::format!("'{c}'")),
                ));
            }
            p = q;
        }
        self.pos = p;
        let v: f64 = self.src[start..p]
            .parse()
            .map_err(|_| self.error_at(start, &["number"], self.src[start..p].to_string()))?;
        if !v.is_finite() {
            return Err(self.error_at(start, &["finite number"], self.src[start..p].to_string()));
        }
        Ok(Tok::Num(v))
    }

    fn expect_sym(&mut self, c: char, expected: &'static str) -> Result<usize, ExprError> {
        if self.tok == Tok::Sym(c) {
            let end = self.pos;
            self.advance()?;
            Ok(end)
        } else {
            Err(self.unexpected(&[expected]))
        }
    }

    fn binary_op(&self) -> Option<BinOp> {
        match self.tok {
            Tok::Sym('+') => Some(BinOp::Add),
            Tok::Sym('-') => Some(BinOp::Sub),
            Tok::Sym('*') => Some(BinOp::Mul),
            Tok::Sym('/') => Some(BinOp::Div),
            Tok::Sym('^') => Some(BinOp::Pow),
            _ => None,
        }
    }

    fn parse_binary(&mut self, min_prec: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance()?;
            // `^` is right associative: its right operand may contain `^` again.
            let rhs = self.parse_binary(if op == BinOp::Pow { prec } else { prec + 1 })?;
            let span = Span {
                start: lhs.span.start,
                end: rhs.span.end,
            };
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Sym('-') {
            let start = self.tok_start;
            self.advance()?;
            let operand = self.parse_binary(3)?;
            let span = Span {
                start,
                end: operand.span.end,
            };
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(operand)),
                span,
            });
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        let start = self.tok_start;
        let leaf = |kind, end| Expr {
            kind,
            span: Span { start, end },
        };
        match self.tok.clone() {
            Tok::Num(v) => {
                let end = self.pos;
                self.advance()?;
                Ok(leaf(ExprKind::Num(v), end))
            }
            Tok::Sym('(') => {
                self.advance()?;
                let mut inner = self.parse_binary(1)?;
                let end = self.expect_sym(')', "')'")?;
                inner.span = Span { start, end };
                Ok(inner)
            }
            Tok::Ident(name) => {
                let end = self.pos;
                match name.as_str() {
                    "t" => {
                        self.advance()?;
                        Ok(leaf(ExprKind::T, end))
                    }
                    "pi" => {
                        self.advance()?;
                        Ok(leaf(ExprKind::Num(core::f64::consts::PI), end))
                    }
                    "u" => self.parse_placeholder(start),
                    _ => match Func::from_name(&name) {
                        Some(f) => self.parse_call(f, start),
                        None => Err(self.error_at(start, OPERAND, alloc::format!("unknown name '{name}'"))),
                    },
                }
            }
            _ => Err(self.unexpected(OPERAND)),
        }
    }

    /// `[ integer ]`, returning the index and the end offset.
    fn parse_index(&mut self) -> Result<(usize, usize), ExprError> {
        self.index_mode = true;
        let r = self.expect_sym('[', "'['");
        if let Err(e) = r {
            self.index_mode = false;
            return Err(e);
        }
        let idx = match self.tok {
            Tok::Int(i) => i,
            _ => {
                self.index_mode = false;
                return Err(self.unexpected(&["index"]));
            }
        };
        self.advance()?;
        self.index_mode = false;
        let end = self.expect_sym(']', "']'")?;
        Ok((idx, end))
    }

    fn parse_placeholder(&mut self, start: usize) -> Result<Expr, ExprError> {
        self.advance()?;
        let k = self.parse_index()?.0;
        let (j, end) = self.parse_index()?;
        let (line, col) = line_col(self.src, start);
        if !self.ctx.allow_placeholders {
            return Err(ExprError::PlaceholderForbidden { line, col });
        }
        if k == 0 || j == 0 || k > self.ctx.components || j > self.ctx.deviations {
            return Err(ExprError::PlaceholderOutOfRange {
                k,
                j,
                components: self.ctx.components,
                deviations: self.ctx.deviations,
                line,
                col,
            });
        }
        let mut e = Expr::placeholder(k - 1, j - 1, self.ctx.deviations);
        e.span = Span { start, end };
        Ok(e)
    }

    fn parse_call(&mut self, f: Func, start: usize) -> Result<Expr, ExprError> {
        self.advance()?;
        self.expect_sym('(', "'('")?;
        let mut args = vec![self.parse_binary(1)?];
        while self.tok == Tok::Sym(',') {
            self.advance()?;
            args.push(self.parse_binary(1)?);
        }
        let end = self.expect_sym(')', "')' or ','")?;
        if !f.is_variadic() && args.len() != 1 {
            let (line, col) = line_col(self.src, start);
            return Err(ExprError::Arity {
                name: f.name(),
                expected: "1",
                found: args.len(),
                line,
                col,
            });
        }
        Ok(Expr {
            kind: ExprKind::Call(f, args),
            span: Span { start, end },
        })
    }
}

/// Parses `src` under the given context.
pub fn parse(src: &str, ctx: &ParseContext) -> Result<Expr, ExprError> {
    let mut p = Parser::new(src, *ctx)?;
    let e = p.parse_binary(1)?;
    if p.tok != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}
