//! Independent oracles for the side-2π torus, written as lattice sums over
//! `k ∈ ℤ²` in complex-exponential form rather than the library's real basis.
#![allow(dead_code)]

use std::f64::consts::PI;

pub const AREA: f64 = 4.0 * PI * PI;

/// Integer lattice points with `0 < |k| ≤ cutoff`, row by row.
pub fn lattice(cutoff: f64) -> impl Iterator<Item = (f64, f64)> {
    let r = cutoff.floor() as i64;
    let c2 = cutoff * cutoff;
    (-r..=r).flat_map(move |k1| {
        (-r..=r).filter_map(move |k2| {
            let n2 = (k1 * k1 + k2 * k2) as f64;
            (n2 > 0.0 && n2 <= c2).then_some((k1 as f64, k2 as f64))
        })
    })
}

/// `2π Σ_{k≠0} e^{-|k|²/N1² - |k|²/N2² - lag |k|²/4π} cos(k·d) / (V |k|²)`
/// with `d = x1 − x2`.
pub fn smoothed_covariance(cutoff: f64, n1: f64, n2: f64, lag: f64, d: (f64, f64)) -> f64 {
    let mut acc = 0.0;
    for (k1, k2) in lattice(cutoff) {
        let l = k1 * k1 + k2 * k2;
        acc += (-l / (n1 * n1) - l / (n2 * n2) - lag * l / (4.0 * PI)).exp() * (k1 * d.0 + k2 * d.1).cos() / l;
    }
    2.0 * PI * acc / AREA
}

/// `(P_N ⊗ P_N) G(x, y)`.
pub fn green(cutoff: f64, n: f64, x: (f64, f64), y: (f64, f64)) -> f64 {
    smoothed_covariance(cutoff, n, n, 0.0, (x.0 - y.0, x.1 - y.1)) / (2.0 * PI)
}

/// `σ_N = 2π (P_N ⊗ P_N) G(x, x)`.
pub fn sigma(cutoff: f64, n: f64) -> f64 {
    smoothed_covariance(cutoff, n, n, 0.0, (0.0, 0.0))
}

/// Number of lattice points with `|k| ≤ cutoff`, including zero.
pub fn lattice_count(cutoff: f64) -> usize {
    lattice(cutoff).count() + 1
}

/// `E[Θ_N(y)] = exp(2πβ Σ a_ℓ G_N(x_ℓ, y))`.
pub fn theta_mean(cutoff: f64, n: f64, beta: f64, punctures: &[((f64, f64), f64)], y: (f64, f64)) -> f64 {
    let s: f64 = punctures.iter().map(|(x, a)| a * green(cutoff, n, *x, y)).sum();
    (2.0 * PI * beta * s).exp()
}

/// `E[Θ_N(y1) Θ_N(y2)]`.
pub fn theta_second_moment(
    cutoff: f64,
    n: f64,
    beta: f64,
    punctures: &[((f64, f64), f64)],
    y1: (f64, f64),
    y2: (f64, f64),
) -> f64 {
    theta_mean(cutoff, n, beta, punctures, y1)
        * theta_mean(cutoff, n, beta, punctures, y2)
        * (2.0 * PI * beta * beta * green(cutoff, n, y1, y2)).exp()
}

/// `(1/2π) log d` removed from `G` at finest admissible smoothing
/// `N = cutoff/6`, by the lattice sum.
pub fn log_subtracted_green(cutoff: f64, d: f64) -> f64 {
    green(cutoff, cutoff / 6.0, (0.0, 0.0), (d, 0.0)) + d.ln() / (2.0 * PI)
}
