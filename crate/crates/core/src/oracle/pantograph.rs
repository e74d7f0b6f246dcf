//! `φ'(t) = a·φ(q·t)`, `φ(0) = 1`, whose solution is
//! `Σ_m a^m q^{m(m-1)/2} t^m / m!`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PantographValue {
    pub value: f64,
    /// Magnitude of the first omitted term.
    pub next_term: f64,
    /// Geometric bound on the whole omitted tail; `None` while successive
    /// terms are not yet contracting.
    pub tail_bound: Option<f64>,
}

pub fn pantograph_series(a: f64, q: f64, terms: usize, t: f64) -> PantographValue {
    let terms = terms.max(1);
    let mut term = 1.0;
    let mut value = 0.0;
    let mut q_pow = 1.0; // q^m
    for m in 0..terms {
        value += term;
        term *= a * q_pow * t / (m + 1) as f64;
        q_pow *= q;
    }
    // term = t_terms, q_pow = q^terms; ratio t_{m+1}/t_m = a q^m t/(m+1) is
    // nonincreasing in m for |q| ≤ 1.
    let ratio = (a * q_pow * t / (terms + 1) as f64).abs();
    let next_term = term.abs();
    PantographValue {
        value,
        next_term,
        tail_bound: (q.abs() <= 1.0 && ratio < 1.0).then(|| next_term / (1.0 - ratio)),
    }
}
