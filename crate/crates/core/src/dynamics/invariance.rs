use serde::{Deserialize, Serialize};

use super::galerkin::{langevin_step_with_noise, GalerkinEnergy, MalaChain};
use crate::error::{Error, Result};
use crate::rng::{replicate, RngStream, StreamRng};
use crate::spectral::Point;
use crate::stats::{mean_estimate, Estimate};

/// Functions of the Galerkin state compared between `t = 0` and `t = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InvarianceObservable {
    /// Spatial mean `U_0 / sqrt(V)`.
    MeanField,
    /// `u(y)`.
    ProbeValue { point: Point },
    /// `u(y)²`.
    ProbeSquare { point: Point },
    /// `U_n²`.
    CoefficientSquare { mode: usize },
    /// `Σ_{n≥1} U_n²`.
    NonConstantNorm2,
    /// `e^{-β²σ_N/2} ∫ e^{β w}`.
    ThetaMass,
}

impl InvarianceObservable {
    pub fn name(&self) -> String {
        match self {
            Self::MeanField => "mean_field".into(),
            Self::ProbeValue { point } => format!("probe_value({point})"),
            Self::ProbeSquare { point } => format!("probe_square({point})"),
            Self::CoefficientSquare { mode } => format!("coefficient_square({mode})"),
            Self::NonConstantNorm2 => "non_constant_norm2".into(),
            Self::ThetaMass => "theta_mass".into(),
        }
    }

    pub fn evaluate(&self, energy: &GalerkinEnergy, u: &[f64]) -> Result<f64> {
        Ok(match self {
            Self::MeanField => u[0] / energy.basis().geometry().area().sqrt(),
            Self::ProbeValue { point } => energy.field_value(u, *point),
            Self::ProbeSquare { point } => energy.field_value(u, *point).powi(2),
            Self::CoefficientSquare { mode } => {
                let c = u.get(*mode).ok_or_else(|| {
                    Error::Config(format!(
                        "mode {mode} is outside the Galerkin space of dimension {}",
                        u.len()
                    ))
                })?;
                c * c
            }
            Self::NonConstantNorm2 => u[1..].iter().map(|c| c * c).sum(),
            Self::ThetaMass => energy.theta_mass(u)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub dt: f64,
    pub t_end: f64,
    pub replicas: usize,
    /// MALA steps applied to each approximate initial draw.
    pub burn_in: usize,
    pub mala_dt: f64,
    /// Replicas rerun at `dt/2` with coupled noise to size the `O(dt)` bias;
    /// zero disables the band.
    pub bias_replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableComparison {
    pub observable: String,
    pub mean_t0: Estimate,
    pub mean_t: Estimate,
    /// `sqrt(se_0² + se_T²)`.
    pub se: f64,
    pub z_score: f64,
    /// `2 |mean_T(dt) − mean_T(dt/2)|` on the bias subset.
    pub dt_bias_band: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub comparisons: Vec<ObservableComparison>,
    pub mala_acceptance: f64,
    pub pass: bool,
}

fn evolve(
    energy: &GalerkinEnergy,
    u: &mut [f64],
    dt: f64,
    steps: usize,
    rng: &mut StreamRng,
    halves: bool,
) -> Result<()> {
    let d = u.len();
    let mut grad = vec![0.0; d];
    let mut noise = vec![0.0; d];
    let mut second = vec![0.0; d];
    for _ in 0..steps {
        rng.fill_normal(&mut noise);
        if halves {
            rng.fill_normal(&mut second);
            for (a, b) in noise.iter_mut().zip(&second) {
                *a = (*a + b) / std::f64::consts::SQRT_2;
            }
        }
        langevin_step_with_noise(energy, u, dt, &noise, &mut grad)?;
    }
    Ok(())
}

fn evolve_fine(energy: &GalerkinEnergy, u: &mut [f64], dt: f64, steps: usize, rng: &mut StreamRng) -> Result<()> {
    let d = u.len();
    let mut grad = vec![0.0; d];
    let mut noise = vec![0.0; d];
    for _ in 0..2 * steps {
        rng.fill_normal(&mut noise);
        langevin_step_with_noise(energy, u, dt / 2.0, &noise, &mut grad)?;
    }
    Ok(())
}

/// Equilibrates replicas by MALA, evolves them with Euler–Maruyama Langevin
/// to `t_end`, and compares observable means between the two times.
pub fn invariance_test(
    energy: &GalerkinEnergy,
    observables: &[InvarianceObservable],
    config: &InvarianceConfig,
    stream: RngStream,
) -> Result<InvarianceReport> {
    if config.replicas < 100 {
        return Err(Error::Config(format!(
            "invariance test needs at least 100 replicas, got {}",
            config.replicas
        )));
    }
    if config.bias_replicas > config.replicas {
        return Err(Error::Config("bias subset larger than the replica count".into()));
    }
    if !(config.dt > 0.0 && config.t_end >= 0.0 && config.mala_dt > 0.0) {
        return Err(Error::Config(
            "dt, mala_dt must be positive and t_end non-negative".into(),
        ));
    }
    let steps = (config.t_end / config.dt).round() as usize;
    let k = observables.len();
    let eval = |u: &[f64]| {
        observables
            .iter()
            .map(|o| o.evaluate(energy, u))
            .collect::<Result<Vec<f64>>>()
    };

    let start = stream.child(0);
    let initial = replicate(start, config.replicas, |_, rng| {
        let u = energy.approximate_sample(rng)?;
        let mut chain = MalaChain::new(energy, u)?;
        for _ in 0..config.burn_in {
            chain.step(energy, config.mala_dt, rng)?;
        }
        Ok((chain.accepted, chain.proposed, chain.into_state()))
    })?;
    let (acc, prop) = initial.iter().fold((0u64, 0u64), |(a, p), r| (a + r.0, p + r.1));
    let mala_acceptance = if prop > 0 { acc as f64 / prop as f64 } else { 1.0 };

    let evolve_stream = stream.child(1);
    let rows = replicate(evolve_stream, config.replicas, |i, rng| {
        let mut u = initial[i as usize].2.clone();
        let v0 = eval(&u)?;
        evolve(energy, &mut u, config.dt, steps, rng, false)?;
        Ok((v0, eval(&u)?))
    })?;

    let bias_stream = stream.child(2);
    let bias = replicate(bias_stream, config.bias_replicas, |i, rng| {
        let mut coarse = initial[i as usize].2.clone();
        let mut fine = coarse.clone();
        let mut r2 = rng.clone();
        evolve(energy, &mut coarse, config.dt, steps, rng, true)?;
        evolve_fine(energy, &mut fine, config.dt, steps, &mut r2)?;
        Ok((eval(&coarse)?, eval(&fine)?))
    })?;

    let mut comparisons = Vec::with_capacity(k);
    for (j, o) in observables.iter().enumerate() {
        let a: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
        let e0 = mean_estimate(&a);
        let et = mean_estimate(&b);
        let se = e0.std_error.hypot(et.std_error);
        let band = if bias.is_empty() {
            0.0
        } else {
            let c: Vec<f64> = bias.iter().map(|r| r.0[j]).collect();
            let f: Vec<f64> = bias.iter().map(|r| r.1[j]).collect();
            2.0 * (crate::stats::mean(&c) - crate::stats::mean(&f)).abs()
        };
        let diff = et.value - e0.value;
        let z_score = if se > 0.0 { diff / se } else { 0.0 };
        comparisons.push(ObservableComparison {
            observable: o.name(),
            mean_t0: e0,
            mean_t: et,
            se,
            z_score,
            dt_bias_band: band,
            pass: diff.abs() <= 3.0 * se + band,
        });
    }
    let pass = comparisons.iter().all(|c| c.pass);
    Ok(InvarianceReport {
        comparisons,
        mala_acceptance,
        pass,
    })
}
