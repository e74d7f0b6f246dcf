use alloc::vec;
use alloc::vec::Vec;

/// Real polynomial, ascending coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `t ↦ t + c`.
    pub fn linear(c: f64) -> Self {
        Poly(vec![c, 1.0])
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }

    /// Antiderivative vanishing at 0.
    pub fn integral(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len().max(other.0.len())];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// `s ↦ p(s + c)`.
    pub fn shift(&self, c: f64) -> Poly {
        // Horner in the polynomial ring: p(x) = (..(a_d x + a_{d-1}) x + ..) with x = s + c.
        let x = Poly::linear(c);
        let mut out = self
            .0
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &a| acc.mul(&x).add(&Poly::constant(a)));
        out.0.truncate(self.0.len().max(1));
        out
    }

    /// `s ↦ p(-s)`.
    pub fn reflect(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c } else { *c })
                .collect(),
        )
    }

    /// Largest coefficient difference, padding the shorter with zeros.
    pub fn max_coefficient_gap(&self, other: &Poly) -> f64 {
        let n = self.0.len().max(other.0.len());
        (0..n)
            .map(|i| (self.0.get(i).copied().unwrap_or(0.0) - other.0.get(i).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}
