//! Structural affine decomposition `e = c(t) + Σ_s a_s(t)·u_s` and the
//! Lipschitz majorant `max_s |a_s(t)|` it yields.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{BinOp, Expr, ExprKind};

/// `constant + Σ coefficients[slot]·u[slot]`, with every part free of
/// placeholders. Slots are `k·N + j`; each also records its `(k, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub constant: Expr,
    pub coefficients: BTreeMap<usize, ((usize, usize), Expr)>,
}

fn combine(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::binary(op, a, b)
}

impl Affine {
    fn constant(e: Expr) -> Self {
        Affine {
            constant: e,
            coefficients: BTreeMap::new(),
        }
    }

    fn map(self, f: impl Fn(Expr) -> Expr) -> Self {
        Affine {
            constant: f(self.constant),
            coefficients: self
                .coefficients
                .into_iter()
                .map(|(s, (kj, c))| (s, (kj, f(c))))
                .collect(),
        }
    }

    fn add(self, other: Affine, op: BinOp) -> Self {
        let mut coefficients = self.coefficients;
        for (slot, (kj, c)) in other.coefficients {
            let merged = match coefficients.remove(&slot) {
                Some((_, mine)) => combine(op, mine, c),
                None if op == BinOp::Sub => Expr::neg(c),
                None => c,
            };
            coefficients.insert(slot, (kj, merged));
        }
        Affine {
            constant: combine(op, self.constant, other.constant),
            coefficients,
        }
    }

    /// Decomposes `e`, or returns `None` when a placeholder appears inside a
    /// function, a power, a divisor, or a product with another placeholder.
    pub fn of(e: &Expr) -> Option<Affine> {
        if !e.has_placeholders() {
            return Some(Affine::constant(e.clone()));
        }
        match &e.kind {
            ExprKind::Placeholder { k, j, slot } => {
                let mut coefficients = BTreeMap::new();
                coefficients.insert(*slot, ((*k, *j), Expr::num(1.0)));
                Some(Affine {
                    constant: Expr::num(0.0),
                    coefficients,
                })
            }
            ExprKind::Neg(a) => Some(Affine::of(a)?.map(Expr::neg)),
            ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), a, b) => Some(Affine::of(a)?.add(Affine::of(b)?, *op)),
            ExprKind::Binary(BinOp::Mul, a, b) => {
                if !a.has_placeholders() {
                    let scale = (**a).clone();
                    Some(Affine::of(b)?.map(|c| combine(BinOp::Mul, scale.clone(), c)))
                } else if !b.has_placeholders() {
                    let scale = (**b).clone();
                    Some(Affine::of(a)?.map(|c| combine(BinOp::Mul, c, scale.clone())))
                } else {
                    None
                }
            }
            ExprKind::Binary(BinOp::Div, a, b) if !b.has_placeholders() => {
                let d = (**b).clone();
                Some(Affine::of(a)?.map(|c| combine(BinOp::Div, c, d.clone())))
            }
            _ => None,
        }
    }

    /// `max_s |a_s(t)|`; zero when no placeholder survives.
    pub fn majorant(&self) -> Expr {
        let mut terms: Vec<Expr> = self
            .coefficients
            .values()
            .map(|(_, c)| Expr::call(super::Func::Abs, vec![c.clone()]))
            .collect();
        match terms.len() {
            0 => Expr::num(0.0),
            1 => terms.pop().unwrap_or_else(|| Expr::num(0.0)),
            _ => Expr::call(super::Func::Max, terms),
        }
    }
}

/// Lipschitz majorant `f(t)` with
/// `|e(t,u) - e(t,v)| ≤ f(t)·Σ|u_s - v_s|`, for expressions that are affine
/// in the placeholders.
pub fn auto_majorant(e: &Expr) -> Option<Expr> {
    Affine::of(e).map(|a| a.majorant())
}

impl Expr {
    /// Ascending coefficients when `self` is a polynomial in `t` (constant
    /// subexpressions are folded numerically). `None` otherwise.
    pub fn to_polynomial(&self) -> Option<Vec<f64>> {
        if self.has_placeholders() {
            return None;
        }
        if !self.depends_on_t() {
            return self.eval(0.0, None).ok().map(|v| vec![v]);
        }
        match &self.kind {
            ExprKind::T => Some(vec![0.0, 1.0]),
            ExprKind::Neg(a) => Some(a.to_polynomial()?.into_iter().map(|c| -c).collect()),
            ExprKind::Binary(op, a, b) => {
                let pa = a.to_polynomial()?;
                match op {
                    BinOp::Add | BinOp::Sub => {
                        let pb = b.to_polynomial()?;
                        let sign = if *op == BinOp::Sub { -1.0 } else { 1.0 };
                        let mut out = vec![0.0; pa.len().max(pb.len())];
                        for (i, c) in pa.iter().enumerate() {
                            out[i] += c;
                        }
                        for (i, c) in pb.iter().enumerate() {
                            out[i] += sign * c;
                        }
                        Some(out)
                    }
                    BinOp::Mul => Some(poly_mul(&pa, &b.to_polynomial()?)),
                    BinOp::Div if !b.depends_on_t() => {
                        let d = b.eval(0.0, None).ok()?;
                        Some(pa.into_iter().map(|c| c / d).collect())
                    }
                    BinOp::Pow if !b.depends_on_t() => {
                        let n = b.eval(0.0, None).ok()?;
                        if n < 0.0 || n != libm::floor(n) || n > 64.0 {
                            return None;
                        }
                        let mut out = vec![1.0];
                        for _ in 0..n as usize {
                            out = poly_mul(&out, &pa);
                        }
                        Some(out)
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
