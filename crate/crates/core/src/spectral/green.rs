use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::basis::{Point, SpectralBasis};
use super::field::Smoothing;
use crate::error::{domain, Error, Result};

/// The basis cutoff must be at least this multiple of the smoothing scale `N`.
pub const RESOLUTION_FACTOR: f64 = 6.0;

/// Refuses `N` when the truncated sum would not be exact to double precision.
pub fn check_resolution(basis: &SpectralBasis, n: f64) -> Result<()> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(domain(format!("smoothing scale N must be positive, got {n}")));
    }
    let required = RESOLUTION_FACTOR * n;
    if basis.cutoff() < required * (1.0 - 1e-12) {
        return Err(Error::UnderResolved {
            cutoff: basis.cutoff(),
            required,
            n,
        });
    }
    Ok(())
}

/// `(P_N ⊗ P_N) G(x, y) = Σ_{n≥1} e^{-2λ_n²/N²} φ_n(x) φ_n(y) / λ_n²`.
pub fn green_regularized(basis: &SpectralBasis, n: f64, x: Point, y: Point) -> Result<f64> {
    green_regularized_with(basis, Smoothing::Heat, n, x, y)
}

/// Same sum with `ψ(λ²/N²)²` in place of the heat multiplier.
pub fn green_regularized_with(basis: &SpectralBasis, smoothing: Smoothing, n: f64, x: Point, y: Point) -> Result<f64> {
    check_resolution(basis, n)?;
    Ok(green_sum(basis, smoothing, n, x, y))
}

fn green_sum(basis: &SpectralBasis, smoothing: Smoothing, n: f64, x: Point, y: Point) -> f64 {
    let l = basis.eigenvalues();
    let mut acc = 0.0;
    for i in 1..basis.dim() {
        let m = smoothing.multiplier(l[i], n);
        acc += (m * m / l[i]) * (basis.basis_value(i, x) * basis.basis_value(i, y));
    }
    acc
}

/// `σ_N = 2π (P_N ⊗ P_N) G(x, x)`, independent of `x` on the torus.
pub fn sigma_n(basis: &SpectralBasis, n: f64) -> Result<f64> {
    sigma_n_with(basis, Smoothing::Heat, n)
}

pub fn sigma_n_with(basis: &SpectralBasis, smoothing: Smoothing, n: f64) -> Result<f64> {
    check_resolution(basis, n)?;
    let side = basis.geometry().side_length();
    let a = 2.0 * PI * green_sum(basis, smoothing, n, Point::new(0.0, 0.0), Point::new(0.0, 0.0));
    let q = Point::new(0.3187 * side, 0.7093 * side);
    let b = 2.0 * PI * green_sum(basis, smoothing, n, q, q);
    if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
        return Err(Error::Numerical(format!(
            "diagonal Green values differ between points: {a} vs {b}"
        )));
    }
    Ok(a)
}

/// Variance of `ψ(-Δ/N²) X` at a point for the GFF truncated to `basis`,
/// without the resolution check. Used to Wick-normalize fields that live on
/// a deliberately coarse basis.
pub fn wick_variance(basis: &SpectralBasis, smoothing: Smoothing, n: f64) -> f64 {
    let v = basis.geometry().area();
    let l = basis.eigenvalues();
    let sum: f64 = l[1..]
        .iter()
        .map(|&lam| {
            let m = smoothing.multiplier(lam, n);
            m * m / lam
        })
        .sum();
    2.0 * PI * sum / v
}

/// Decomposition of the Green's function near its logarithmic singularity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenComparison {
    pub green_value: f64,
    /// `-(1/2π) log d(x, y)`.
    pub log_part: f64,
    pub remainder: f64,
}

/// Evaluates the Green's function at the finest admissible smoothing
/// `N = cutoff / 6` and splits off the logarithm.
pub fn green_log_comparison(basis: &SpectralBasis, x: Point, y: Point) -> Result<GreenComparison> {
    let d = basis.geometry().distance(x, y);
    if d == 0.0 {
        return Err(domain("green_log_comparison needs two distinct points"));
    }
    let n = basis.cutoff() / RESOLUTION_FACTOR;
    let green_value = green_regularized(basis, n, x, y)?;
    let log_part = -d.ln() / (2.0 * PI);
    Ok(GreenComparison {
        green_value,
        log_part,
        remainder: green_value - log_part,
    })
}
