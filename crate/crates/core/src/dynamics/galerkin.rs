use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gmc::{PunctureSet, EXPONENT_GUARD};
use crate::rng::StreamRng;
use crate::spectral::{
    enumerate_modes, sigma_n, GridTransform, Point, SpectralBasis, TorusGeometry, RESOLUTION_FACTOR,
};

/// A smooth energy on coefficient space, the log-density of a Gibbs measure.
pub trait Energy: Sync {
    fn dim(&self) -> usize;

    fn energy(&self, u: &[f64]) -> Result<f64>;

    /// Energy at `u`, writing `∇E(u)` into `grad`.
    fn energy_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinParams {
    pub beta: f64,
    pub nu: f64,
    /// Smoothing scale; `f64::INFINITY` switches smoothing off.
    pub n: f64,
    pub punctures: PunctureSet,
    /// Modes with `λ ≤ cutoff` span the Galerkin space.
    pub cutoff: f64,
    /// Weight the kinetic term by `e^{-2λ²/N²}`.
    #[serde(default = "default_true")]
    pub smoothed_kinetic: bool,
    /// Quadrature grid; defaults to the smallest pseudo-spectral grid.
    #[serde(default)]
    pub resolution: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl GalerkinParams {
    pub fn new(beta: f64, nu: f64, n: f64, punctures: PunctureSet, cutoff: f64) -> Self {
        Self {
            beta,
            nu,
            n,
            punctures,
            cutoff,
            smoothed_kinetic: true,
            resolution: None,
        }
    }
}

/// Truncated energy
///
/// `E(U) = Σ_n (1/4π) λ_n² k_n U_n² + ν e^{-β²σ_N/2} ∫ e^{β w} dV − Σ_ℓ a_ℓ w(x_ℓ)`
///
/// with `w = Σ_n e^{-λ_n²/N²} U_n φ_n` and `k_n = e^{-2λ_n²/N²}` (or 1).
/// The integral is the grid quadrature, so the gradient below is its exact
/// derivative.
#[derive(Debug)]
pub struct GalerkinEnergy {
    params: GalerkinParams,
    transform: GridTransform,
    kinetic: Vec<f64>,
    multipliers: Vec<f64>,
    linear: Vec<f64>,
    log_prefactor: f64,
}

impl GalerkinEnergy {
    pub fn new(geometry: TorusGeometry, params: &GalerkinParams) -> Result<Self> {
        if !(params.beta > 0.0) {
            return Err(domain(format!("beta must be positive, got {}", params.beta)));
        }
        if !(params.n > 0.0) {
            return Err(domain(format!("N must be positive, got {}", params.n)));
        }
        let basis = Arc::new(enumerate_modes(geometry, params.cutoff)?);
        if basis.dim() < 2 {
            return Err(domain("Galerkin space needs a non-constant mode"));
        }
        let resolution = params
            .resolution
            .unwrap_or_else(|| GridTransform::min_resolution(&basis));
        let transform = GridTransform::pseudo_spectral(Arc::clone(&basis), resolution)?;
        let n = params.n;
        let multipliers: Vec<f64> = basis
            .eigenvalues()
            .iter()
            .map(|&l| if n.is_infinite() { 1.0 } else { (-l / (n * n)).exp() })
            .collect();
        let kinetic = basis
            .eigenvalues()
            .iter()
            .zip(&multipliers)
            .map(|(&l, &m)| {
                let k = if params.smoothed_kinetic { m * m } else { 1.0 };
                l * k / (4.0 * PI)
            })
            .collect();
        let mut linear = vec![0.0; basis.dim()];
        for p in params.punctures.iter() {
            for (i, c) in linear.iter_mut().enumerate() {
                *c += p.charge * multipliers[i] * basis.basis_value(i, p.point);
            }
        }
        let log_prefactor = if params.nu == 0.0 {
            0.0
        } else {
            if n.is_infinite() {
                return Err(domain("the exponential term needs a finite smoothing scale"));
            }
            // The Wick constant of the smoothed field, on a basis that resolves N.
            let fine = enumerate_modes(geometry, RESOLUTION_FACTOR * n)?;
            -0.5 * params.beta * params.beta * sigma_n(&fine, n)?
        };
        Ok(Self {
            params: params.clone(),
            transform,
            kinetic,
            multipliers,
            linear,
            log_prefactor,
        })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        self.transform.basis()
    }

    pub fn params(&self) -> &GalerkinParams {
        &self.params
    }

    pub fn resolution(&self) -> usize {
        self.transform.resolution()
    }

    pub fn log_prefactor(&self) -> f64 {
        self.log_prefactor
    }

    /// Stationary variance `1/(2 kin_n)` of mode `n ≥ 1` for the quadratic
    /// energy (`ν = 0`, no punctures).
    pub fn gaussian_variance(&self, n: usize) -> f64 {
        0.5 / self.kinetic[n]
    }

    /// Grid samples of `e^{β w}` scaled by the prefactor.
    fn exp_grid(&self, u: &[f64]) -> Result<crate::spectral::GridField> {
        let s: Vec<f64> = u.iter().zip(&self.multipliers).map(|(c, m)| c * m).collect();
        let mut g = self.transform.to_grid(&s);
        let n = g.resolution();
        let h = g.spacing();
        let beta = self.params.beta;
        for (j, x) in g.samples_mut().iter_mut().enumerate() {
            let e = beta * *x + self.log_prefactor;
            if !(e <= EXPONENT_GUARD) {
                return Err(Error::Overflow {
                    value: e,
                    i: j / n,
                    j: j % n,
                    x: (j / n) as f64 * h,
                    y: (j % n) as f64 * h,
                });
            }
            *x = e.exp();
        }
        Ok(g)
    }

    /// `e^{-β²σ_N/2} ∫ e^{β w} dV`, the mass of the chaos built from `U`.
    pub fn theta_mass(&self, u: &[f64]) -> Result<f64> {
        Ok(self.exp_grid(u)?.integral())
    }

    /// `u(y) = Σ U_n φ_n(y)` without smoothing.
    pub fn field_value(&self, u: &[f64], y: Point) -> f64 {
        let b = self.basis();
        u.iter().enumerate().map(|(i, c)| c * b.basis_value(i, y)).sum()
    }

    fn quadratic_and_linear(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.kinetic)
            .zip(&self.linear)
            .map(|((c, k), l)| k * c * c - l * c)
            .sum()
    }

    /// Draw from the Gaussian part of the measure (kinetic plus puncture
    /// terms), with the zero mode drawn from its exact conditional law given
    /// the other modes. Exact when `ν = 0`; a starting point for MALA
    /// otherwise. With `ν = 0` the zero mode is flat and left at 0.
    pub fn approximate_sample(&self, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let dim = self.dim();
        let mut u = vec![0.0; dim];
        for i in 1..dim {
            let prec = 2.0 * self.kinetic[i];
            u[i] = self.linear[i] / prec + rng.standard_normal() / prec.sqrt();
        }
        let sum_a = self.params.punctures.total_charge();
        if self.params.nu > 0.0 && sum_a > 0.0 {
            let y = self.theta_mass(&u)?;
            let shape = sum_a / self.params.beta;
            let tau = rng.gamma(shape);
            let c = (tau / (self.params.nu * y)).ln() / self.params.beta;
            u[0] = c * self.basis().geometry().area().sqrt();
        }
        Ok(u)
    }
}

impl Energy for GalerkinEnergy {
    fn dim(&self) -> usize {
        self.kinetic.len()
    }

    fn energy(&self, u: &[f64]) -> Result<f64> {
        let mut e = self.quadratic_and_linear(u);
        if self.params.nu != 0.0 {
            e += self.params.nu * self.theta_mass(u)?;
        }
        Ok(e)
    }

    fn energy_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> Result<f64> {
        let mut e = self.quadratic_and_linear(u);
        for i in 0..u.len() {
            grad[i] = 2.0 * self.kinetic[i] * u[i] - self.linear[i];
        }
        if self.params.nu != 0.0 {
            let g = self.exp_grid(u)?;
            e += self.params.nu * g.integral();
            let p = self.transform.project(&g);
            let c = self.params.nu * self.params.beta;
            for i in 0..u.len() {
                grad[i] += c * self.multipliers[i] * p[i];
            }
        }
        Ok(e)
    }
}

/// Euler–Maruyama step `U ← U − ½∇E(U) dt + √dt ξ` with supplied normals.
pub fn langevin_step_with_noise<E: Energy + ?Sized>(
    energy: &E,
    u: &mut [f64],
    dt: f64,
    noise: &[f64],
    grad: &mut [f64],
) -> Result<()> {
    energy.energy_and_gradient(u, grad)?;
    let s = dt.sqrt();
    for i in 0..u.len() {
        u[i] += -0.5 * dt * grad[i] + s * noise[i];
    }
    Ok(())
}

pub fn langevin_step<E: Energy + ?Sized>(energy: &E, u: &[f64], dt: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(domain(format!("time step must be positive, got {dt}")));
    }
    let mut next = u.to_vec();
    let mut noise = vec![0.0; u.len()];
    rng.fill_normal(&mut noise);
    let mut grad = vec![0.0; u.len()];
    langevin_step_with_noise(energy, &mut next, dt, &noise, &mut grad)?;
    Ok(next)
}

/// Metropolis-adjusted Langevin chain with cached energy and gradient.
#[derive(Clone, Debug)]
pub struct MalaChain {
    u: Vec<f64>,
    energy: f64,
    grad: Vec<f64>,
    proposal: Vec<f64>,
    proposal_grad: Vec<f64>,
    pub accepted: u64,
    pub proposed: u64,
}

impl MalaChain {
    pub fn new<E: Energy + ?Sized>(energy: &E, u: Vec<f64>) -> Result<Self> {
        let mut grad = vec![0.0; u.len()];
        let e = energy.energy_and_gradient(&u, &mut grad)?;
        let d = u.len();
        Ok(Self {
            u,
            energy: e,
            grad,
            proposal: vec![0.0; d],
            proposal_grad: vec![0.0; d],
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.u
    }

    pub fn into_state(self) -> Vec<f64> {
        self.u
    }

    pub fn current_energy(&self) -> f64 {
        self.energy
    }

    /// One proposal; returns whether it was accepted.
    pub fn step<E: Energy + ?Sized>(&mut self, energy: &E, dt: f64, rng: &mut StreamRng) -> Result<bool> {
        let s = dt.sqrt();
        for i in 0..self.u.len() {
            self.proposal[i] = self.u[i] - 0.5 * dt * self.grad[i] + s * rng.standard_normal();
        }
        self.proposed += 1;
        let e_new = match energy.energy_and_gradient(&self.proposal, &mut self.proposal_grad) {
            Ok(e) => e,
            Err(Error::Overflow { .. }) => {
                rng.uniform();
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        // log q(y|x) = −|y − x + ½∇E(x)dt|² / (2dt)
        let (mut fwd, mut bwd) = (0.0, 0.0);
        for i in 0..self.u.len() {
            let a = self.proposal[i] - self.u[i] + 0.5 * dt * self.grad[i];
            let b = self.u[i] - self.proposal[i] + 0.5 * dt * self.proposal_grad[i];
            fwd += a * a;
            bwd += b * b;
        }
        let log_alpha = self.energy - e_new + (fwd - bwd) / (2.0 * dt);
        let accept = rng.uniform().ln() < log_alpha;
        if accept {
            std::mem::swap(&mut self.u, &mut self.proposal);
            std::mem::swap(&mut self.grad, &mut self.proposal_grad);
            self.energy = e_new;
            self.accepted += 1;
        }
        Ok(accept)
    }
}

/// One MALA step from `u`.
pub fn mala_step<E: Energy + ?Sized>(energy: &E, u: &[f64], dt: f64, rng: &mut StreamRng) -> Result<(Vec<f64>, bool)> {
    if !(dt > 0.0) {
        return Err(domain(format!("time step must be positive, got {dt}")));
    }
    let mut chain = MalaChain::new(energy, u.to_vec())?;
    let acc = chain.step(energy, dt, rng)?;
    Ok((chain.into_state(), acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn energy(nu: f64, l: usize) -> GalerkinEnergy {
        let punct = if l == 0 {
            PunctureSet::empty()
        } else {
            PunctureSet::single(Point::new(1.0, 2.0), 1.0)
        };
        GalerkinEnergy::new(
            TorusGeometry::standard(),
            &GalerkinParams::new(1.0, nu, 4.0, punct, 4.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_state_zero_energy() {
        let e = energy(0.0, 0);
        assert_eq!(e.energy(&vec![0.0; e.dim()]).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_case_closed_form() {
        let e = energy(0.0, 0);
        let b = e.basis().clone();
        let u: Vec<f64> = (0..e.dim()).map(|i| 0.1 * i as f64 - 0.7).collect();
        let expect: f64 = (0..e.dim())
            .map(|i| {
                let l = b.eigenvalue(i);
                l / (4.0 * PI) * (-2.0 * l / 16.0).exp() * u[i] * u[i]
            })
            .sum();
        assert!((e.energy(&u).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let e = energy(1.0, 1);
        let mut rng = RngStream::new(4, 0).rng();
        let mut u = vec![0.0; e.dim()];
        rng.fill_normal(&mut u);
        let mut g = vec![0.0; e.dim()];
        e.energy_and_gradient(&u, &mut g).unwrap();
        let h = 1e-5;
        for i in 0..e.dim() {
            let mut p = u.clone();
            let mut m = u.clone();
            p[i] += h;
            m[i] -= h;
            let fd = (e.energy(&p).unwrap() - e.energy(&m).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn tiny_step_mala_almost_always_accepts() {
        let e = energy(1.0, 1);
        let mut rng = RngStream::new(5, 0).rng();
        let u0 = e.approximate_sample(&mut rng).unwrap();
        let mut c = MalaChain::new(&e, u0).unwrap();
        for _ in 0..500 {
            c.step(&e, 1e-6, &mut rng).unwrap();
        }
        assert!(c.accepted as f64 / c.proposed as f64 > 0.99);
    }

    #[test]
    fn langevin_with_zero_noise_and_gradient_is_identity() {
        let e = energy(0.0, 0);
        let mut u = vec![0.0; e.dim()];
        let mut g = vec![0.0; e.dim()];
        langevin_step_with_noise(&e, &mut u, 0.1, &vec![0.0; e.dim()], &mut g).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
    }
}
