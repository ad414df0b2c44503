use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::basis::{Point, SpectralBasis};
use crate::error::{domain, Result};

/// Real field stored by its coefficients in the real orthonormal basis.
#[derive(Clone, Debug)]
pub struct ScalarField {
    basis: Arc<SpectralBasis>,
    coeffs: Vec<f64>,
}

impl ScalarField {
    pub fn new(basis: Arc<SpectralBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(domain(format!(
                "coefficient vector has length {}, basis has {} modes",
                coeffs.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<SpectralBasis>) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            coeffs: vec![0.0; dim],
        }
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `L²` norm, equal to the Euclidean norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `‖∇u‖² = Σ λ_n² u_n²`.
    pub fn gradient_norm2(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, l)| l * c * c)
            .sum()
    }

    /// Spatial mean `(1/V) ∫ u`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / self.basis.geometry().area().sqrt()
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * self.basis.basis_value(n, p))
            .sum()
    }

    pub fn same_basis(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || self.basis.modes() == other.basis.modes()
    }

    /// Multiply coefficient `n` by `m(λ_n²)`.
    pub fn map_multiplier(&self, m: impl Fn(f64) -> f64) -> ScalarField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, &l)| c * m(l))
            .collect();
        ScalarField {
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) -> Result<()> {
        if !self.same_basis(other) {
            return Err(domain("fields live on different bases"));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
        Ok(())
    }
}

/// `e^{tΔ/4π}`: coefficient `n` scaled by `exp(-t λ_n² / 4π)`.
pub fn heat_semigroup(field: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(t >= 0.0) {
        return Err(domain(format!("heat semigroup time must be non-negative, got {t}")));
    }
    Ok(field.map_multiplier(|l| (-t * l / (4.0 * PI)).exp()))
}

/// `P_N = e^{N^{-2}Δ}`: coefficient `n` scaled by `exp(-λ_n² / N²)`.
pub fn smooth_pn(field: &ScalarField, n: f64) -> Result<ScalarField> {
    if !(n > 0.0) {
        return Err(domain(format!("smoothing scale N must be positive, got {n}")));
    }
    Ok(field.map_multiplier(|l| Smoothing::Heat.multiplier(l, n)))
}

/// Fourier multiplier `ψ(λ²/N²)` used to mollify the field, with `ψ(0) = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// `ψ(s) = e^{-s}`, i.e. `P_N`.
    #[default]
    Heat,
    /// `ψ(s) = e^{-s²}`, a second Schwartz regularization used to probe
    /// independence of the limit from the mollifier.
    QuarticGaussian,
}

impl Smoothing {
    pub fn multiplier(&self, lambda2: f64, n: f64) -> f64 {
        let s = lambda2 / (n * n);
        match self {
            Smoothing::Heat => (-s).exp(),
            Smoothing::QuarticGaussian => (-s * s).exp(),
        }
    }

    pub fn multipliers(&self, basis: &SpectralBasis, n: f64) -> Vec<f64> {
        basis.eigenvalues().iter().map(|&l| self.multiplier(l, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::spectral::{enumerate_modes, ModeIndex, TorusGeometry};

    fn basis(c: f64) -> Arc<SpectralBasis> {
        Arc::new(enumerate_modes(TorusGeometry::standard(), c).unwrap())
    }

    fn unit_mode(b: &Arc<SpectralBasis>, k: ModeIndex) -> ScalarField {
        let mut f = ScalarField::zeros(Arc::clone(b));
        f.coeffs_mut()[b.index_of(k).unwrap()] = 1.0;
        f
    }

    fn random_field(b: &Arc<SpectralBasis>, seed: u64) -> ScalarField {
        let mut rng = RngStream::new(seed, 0).rng();
        let mut c = vec![0.0; b.dim()];
        rng.fill_normal(&mut c);
        ScalarField::new(Arc::clone(b), c).unwrap()
    }

    #[test]
    fn heat_at_zero_is_identity() {
        let b = basis(6.0);
        let f = random_field(&b, 1);
        assert_eq!(heat_semigroup(&f, 0.0).unwrap().coeffs(), f.coeffs());
    }

    #[test]
    fn heat_decays_unit_eigenvalue_by_e() {
        let b = basis(3.0);
        let f = unit_mode(&b, ModeIndex::new(1, 0));
        let g = heat_semigroup(&f, 4.0 * PI).unwrap();
        let n = b.index_of(ModeIndex::new(1, 0)).unwrap();
        assert!((g.coeffs()[n] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn heat_semigroup_law() {
        let b = basis(8.0);
        let f = random_field(&b, 2);
        let a = heat_semigroup(&heat_semigroup(&f, 0.3).unwrap(), 0.45).unwrap();
        let c = heat_semigroup(&f, 0.75).unwrap();
        for (x, y) in a.coeffs().iter().zip(c.coeffs()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        // Zero mode untouched.
        assert_eq!(c.coeffs()[0], f.coeffs()[0]);
    }

    #[test]
    fn negative_time_is_rejected() {
        let b = basis(2.0);
        assert!(heat_semigroup(&ScalarField::zeros(b), -1e-3).is_err());
    }

    #[test]
    fn pn_matches_heat_at_4pi_over_n2() {
        let b = basis(10.0);
        let f = random_field(&b, 3);
        let n = 3.7;
        let p = smooth_pn(&f, n).unwrap();
        let h = heat_semigroup(&f, 4.0 * PI / (n * n)).unwrap();
        for (x, y) in p.coeffs().iter().zip(h.coeffs()) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn pn_examples() {
        let b = basis(4.0);
        let f = random_field(&b, 4);
        let p = smooth_pn(&f, 1e6).unwrap();
        for (x, y) in p.coeffs().iter().zip(f.coeffs()) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
        let g = unit_mode(&b, ModeIndex::new(2, 0));
        let n = b.index_of(ModeIndex::new(2, 0)).unwrap();
        let q = smooth_pn(&g, 2.0).unwrap();
        assert!((q.coeffs()[n] - (-1.0f64).exp()).abs() < 1e-15);
        assert!(smooth_pn(&g, 0.0).is_err());
        assert!(smooth_pn(&g, -2.0).is_err());
    }

    #[test]
    fn multipliers_are_one_at_zero() {
        assert_eq!(Smoothing::Heat.multiplier(0.0, 5.0), 1.0);
        assert_eq!(Smoothing::QuarticGaussian.multiplier(0.0, 5.0), 1.0);
        assert!(Smoothing::QuarticGaussian.multiplier(100.0, 5.0) < Smoothing::Heat.multiplier(100.0, 5.0));
    }

    #[test]
    fn eval_matches_mean_and_norm() {
        let b = basis(5.0);
        let f = random_field(&b, 5);
        let v = b.geometry().area();
        assert!((f.mean() - f.coeffs()[0] / v.sqrt()).abs() < 1e-15);
        assert!(f.l2_norm() > 0.0);
    }
}
