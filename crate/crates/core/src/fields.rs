//! Samplers for the massless Gaussian free field and the stationary
//! Ornstein–Uhlenbeck evolution driven by mode-wise white noise.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::error::{domain, Result};
use crate::rng::StreamRng;
use crate::spectral::{check_resolution, Point, ScalarField, SpectralBasis};

/// A draw of the GFF: mode `n ≥ 1` has standard deviation `sqrt(2π)/λ_n`,
/// the constant mode is exactly zero.
#[derive(Clone, Debug)]
pub struct GffSample {
    pub field: ScalarField,
}

pub fn sample_gff(basis: &Arc<SpectralBasis>, rng: &mut StreamRng) -> Result<GffSample> {
    if basis.dim() < 2 {
        return Err(domain("GFF sampling needs at least one non-constant mode"));
    }
    let mut coeffs = vec![0.0; basis.dim()];
    fill_gff(basis, rng, &mut coeffs);
    Ok(GffSample {
        field: ScalarField::new(Arc::clone(basis), coeffs)?,
    })
}

/// Writes GFF coefficients into `out`, drawing one normal per non-constant mode.
pub fn fill_gff(basis: &SpectralBasis, rng: &mut StreamRng, out: &mut [f64]) {
    let l = basis.eigenvalues();
    out[0] = 0.0;
    let s = (2.0 * PI).sqrt();
    for i in 1..out.len() {
        out[i] = s / l[i].sqrt() * rng.standard_normal();
    }
}

/// State of the linear evolution `∂_t Ψ = (1/4π)ΔΨ + ξ` with the constant
/// component split off.
#[derive(Clone, Debug)]
pub struct OuState {
    pub time: f64,
    /// Non-constant modes; coefficient 0 stays exactly zero.
    pub field: ScalarField,
    /// Constant contribution `B_0(t)/V` of the zero-mode Brownian motion.
    pub zero_mode_bm: f64,
}

impl OuState {
    pub fn zero(basis: Arc<SpectralBasis>) -> Self {
        Self {
            time: 0.0,
            field: ScalarField::zeros(basis),
            zero_mode_bm: 0.0,
        }
    }

    /// Time-zero state started from the stationary law.
    pub fn stationary(basis: &Arc<SpectralBasis>, rng: &mut StreamRng) -> Result<Self> {
        Ok(Self {
            time: 0.0,
            field: sample_gff(basis, rng)?.field,
            zero_mode_bm: 0.0,
        })
    }
}

/// Exact OU transition over a fixed `dt`, with precomputed decay factors.
#[derive(Clone, Debug)]
pub struct OuPropagator {
    dt: f64,
    decay: Vec<f64>,
    amplitude: Vec<f64>,
    zero_amplitude: f64,
}

impl OuPropagator {
    pub fn new(basis: &SpectralBasis, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain(format!("time step must be positive, got {dt}")));
        }
        let l = basis.eigenvalues();
        let mut decay = vec![1.0; l.len()];
        let mut amplitude = vec![0.0; l.len()];
        for i in 1..l.len() {
            let r = l[i] / (4.0 * PI);
            decay[i] = (-r * dt).exp();
            amplitude[i] = (2.0 * PI / l[i] * -(-2.0 * r * dt).exp_m1()).sqrt();
        }
        Ok(Self {
            dt,
            decay,
            amplitude,
            zero_amplitude: (dt / basis.geometry().area()).sqrt(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `e^{-λ_n² dt / 4π}` per mode.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// Standard deviation of the noise added to mode `n` per step.
    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    /// `sqrt(dt / V)`, the step of the zero-mode constant per unit normal.
    pub fn zero_amplitude(&self) -> f64 {
        self.zero_amplitude
    }

    /// Advances `state` in place. `noise[0]` drives the zero mode, `noise[n]`
    /// mode `n`.
    pub fn step_with_noise(&self, state: &mut OuState, noise: &[f64]) {
        let c = state.field.coeffs_mut();
        debug_assert_eq!(noise.len(), c.len());
        for i in 1..c.len() {
            c[i] = self.decay[i] * c[i] + self.amplitude[i] * noise[i];
        }
        state.zero_mode_bm += self.zero_amplitude * noise[0];
        state.time += self.dt;
    }

    pub fn step(&self, state: &mut OuState, rng: &mut StreamRng, scratch: &mut Vec<f64>) {
        scratch.resize(self.decay.len(), 0.0);
        rng.fill_normal(scratch);
        self.step_with_noise(state, scratch);
    }
}

/// One exact OU step; the zero-mode constant receives a Brownian increment
/// of variance `dt / V`.
pub fn ou_step(state: &OuState, dt: f64, rng: &mut StreamRng) -> Result<OuState> {
    let p = OuPropagator::new(state.field.basis(), dt)?;
    let mut next = state.clone();
    let mut scratch = Vec::new();
    p.step(&mut next, rng, &mut scratch);
    Ok(next)
}

/// As [`ou_step`] with caller-supplied standard normal draws.
pub fn ou_step_with_noise(state: &OuState, dt: f64, noise: &[f64]) -> Result<OuState> {
    if noise.len() != state.field.coeffs().len() {
        return Err(domain("noise vector length does not match the basis"));
    }
    let p = OuPropagator::new(state.field.basis(), dt)?;
    let mut next = state.clone();
    p.step_with_noise(&mut next, noise);
    Ok(next)
}

/// Exact space-time covariance of the smoothed stationary OU field,
/// `E[(P_{N1}Ψ)(t1, x1) (P_{N2}Ψ)(t2, x2)]`.
pub fn covariance_oracle(
    basis: &SpectralBasis,
    n1: f64,
    n2: f64,
    t1: f64,
    t2: f64,
    x1: Point,
    x2: Point,
) -> Result<f64> {
    if t2 < t1 {
        return Err(domain(format!("covariance oracle needs t1 <= t2, got {t1} > {t2}")));
    }
    check_resolution(basis, n1.min(n2))?;
    let l = basis.eigenvalues();
    let lag = t2 - t1;
    let mut acc = 0.0;
    for i in 1..basis.dim() {
        let m = (-l[i] / (n1 * n1) - l[i] / (n2 * n2) - lag * l[i] / (4.0 * PI)).exp();
        acc += (m / l[i]) * (basis.basis_value(i, x1) * basis.basis_value(i, x2));
    }
    Ok(2.0 * PI * acc)
}

/// Writes snapshots in long format with header `time,mode,k1,k2,coefficient`.
pub fn write_trajectory_csv<W: Write>(out: W, basis: &SpectralBasis, snapshots: &[(f64, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "mode", "k1", "k2", "coefficient"])?;
    for (t, coeffs) in snapshots {
        for (n, c) in coeffs.iter().enumerate() {
            let k = basis.mode(n);
            w.write_record([
                format!("{t:?}"),
                n.to_string(),
                k.k1.to_string(),
                k.k2.to_string(),
                format!("{c:?}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
