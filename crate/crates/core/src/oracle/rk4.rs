//! Classical fourth-order Runge–Kutta with a fixed step.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub times: Vec<f64>,
    /// `values[i]` is the state at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl Sampled {
    pub fn last(&self) -> &[f64] {
        &self.values[self.values.len() - 1]
    }

    /// Piecewise-linear lookup of component `k`.
    pub fn eval(&self, k: usize, t: f64) -> f64 {
        let ascending = self.times[self.times.len() - 1] >= self.times[0];
        let idx = if ascending {
            self.times.partition_point(|&x| x < t)
        } else {
            self.times.partition_point(|&x| x > t)
        }
        .clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (y0, y1) = (self.values[idx - 1][k], self.values[idx][k]);
        if t1 == t0 {
            return y1;
        }
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `horizon` (either side) with
/// step `|step|`, shortening the last step to land on the horizon.
pub fn rk4_reference<F>(f: F, y0: &[f64], t0: f64, step: f64, horizon: f64) -> Sampled
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let dir = if horizon >= t0 { 1.0 } else { -1.0 };
    let h_abs = step.abs();
    let mut times = vec![t0];
    let mut values = vec![y0.to_vec()];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut t = t0;
    let mut y = y0.to_vec();
    let steps = libm::ceil((horizon - t0).abs() / h_abs - 1e-9).max(0.0) as usize;
    for i in 0..steps {
        let next_t = if i + 1 == steps {
            horizon
        } else {
            t0 + dir * h_abs * (i + 1) as f64
        };
        let h = next_t - t;
        f(t, &y, &mut k1);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for j in 0..n {
            tmp[j] = y[j] + h * k3[j];
        }
        f(t + h, &tmp, &mut k4);
        for j in 0..n {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        t = next_t;
        times.push(t);
        values.push(y.clone());
    }
    Sampled { times, values }
}
