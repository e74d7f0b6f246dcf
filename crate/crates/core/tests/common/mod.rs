#![allow(dead_code)]

use fde_core::funcspace::{PiecewiseFunction, Trajectory};
use fde_core::picard::WindowSpace;
use fde_core::problem::{rhs_fn, time_fn, RetardedIVP};
use rand::Rng;

fn scalar(alpha: fn(f64) -> f64) -> RetardedIVP {
    RetardedIVP::new(
        0.0,
        1,
        vec![rhs_fn(|_, u| u[0])],
        vec![time_fn(alpha)],
        vec![time_fn(|_| 1.0)],
        vec![PiecewiseFunction::history(time_fn(|_| 1.0), 0.0)],
    )
    .unwrap()
}

/// φ'(t) = φ(t - 1), φ ≡ 1 on (-∞, 0].
pub fn delay_problem() -> RetardedIVP {
    scalar(|t| t - 1.0)
}

/// φ'(t) = φ(t), φ(0) = 1.
pub fn ode_problem() -> RetardedIVP {
    scalar(|t| t)
}

/// φ'(t) = φ(t/2), φ(0) = 1.
pub fn pantograph_problem() -> RetardedIVP {
    scalar(|t| t / 2.0)
}

pub fn problems() -> Vec<(&'static str, RetardedIVP, f64)> {
    vec![
        ("constant delay", delay_problem(), 4.0),
        ("ode reduction", ode_problem(), 1.0),
        ("pantograph", pantograph_problem(), 1.0),
    ]
}

/// Random element of the window space: pinned to the anchor value at the
/// anchor node, otherwise a mix of rough noise and smooth ramps.
pub fn random_element<R: Rng>(space: &WindowSpace, rng: &mut R) -> Trajectory {
    let anchors = space.anchor_values().unwrap();
    let grid = space.grid();
    let (a, b) = (grid[0], grid[grid.len() - 1]);
    let samples = anchors
        .iter()
        .map(|&c| {
            let kind = rng.random_range(0..3);
            let scale = rng.random_range(0.01..3.0);
            let slope = rng.random_range(-scale..scale);
            grid.iter()
                .enumerate()
                .map(|(i, &t)| {
                    if i == 0 {
                        return c;
                    }
                    let u = (t - a) / (b - a);
                    match kind {
                        0 => c + rng.random_range(-scale..scale),
                        1 => c + slope * u,
                        _ => c + scale * (7.0 * u).sin() + rng.random_range(-0.01..0.01),
                    }
                })
                .collect()
        })
        .collect();
    space.element(samples).unwrap()
}
