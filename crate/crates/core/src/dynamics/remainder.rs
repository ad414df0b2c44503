use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::drift::DriftZ;
use crate::error::{domain, Error, Result};
use crate::fields::{OuPropagator, OuState};
use crate::gmc::{shift_coefficients, total_mass, ChaosField, GmcParams, PunctureSet};
use crate::lqg::LqgParams;
use crate::rng::{RngStream, StreamRng};
use crate::spectral::{GridField, GridTransform, ScalarField, SpectralBasis};

/// Largest value of `β v` on the grid still counted as non-positive.
pub const SIGN_TOLERANCE: f64 = 1e-12;

/// `𝒩(x) = e^x` for `x ≤ 0`, `1 + x e^{-x²}` for `x > 0`. The second return
/// value reports whether the bounded branch was taken.
pub fn nonlinearity(x: f64) -> (f64, bool) {
    if x <= 0.0 {
        (x.exp(), false)
    } else {
        (1.0 + x * (-x * x).exp(), true)
    }
}

#[derive(Clone, Debug)]
pub struct RemainderState {
    pub time: f64,
    pub v: ScalarField,
}

impl RemainderState {
    pub fn zero(basis: Arc<SpectralBasis>) -> Self {
        Self {
            time: 0.0,
            v: ScalarField::zeros(basis),
        }
    }
}

/// Per-step diagnostics of the remainder integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Grid points where the bounded branch of `𝒩` was used.
    pub guard_hits: usize,
    /// `max_j β v_j` after the step.
    pub max_beta_v: f64,
}

/// Exponential-integrator factors for one time step.
#[derive(Clone, Debug)]
pub struct StepTables {
    dt: f64,
    /// `e^{-dt λ²/4π}`.
    decay: Vec<f64>,
    /// `∫_0^dt e^{-sλ²/4π} ds`, equal to `dt` on the zero mode.
    phi1: Vec<f64>,
}

impl StepTables {
    pub fn new(basis: &SpectralBasis, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain(format!("time step must be positive, got {dt}")));
        }
        let (decay, phi1) = basis
            .eigenvalues()
            .iter()
            .map(|&l| {
                if l == 0.0 {
                    (1.0, dt)
                } else {
                    let r = l / (4.0 * PI);
                    ((-r * dt).exp(), -(-r * dt).exp_m1() / r)
                }
            })
            .unzip();
        Ok(Self { dt, decay, phi1 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Solver for the remainder `v` in `u = Ψ + z + v`.
///
/// All fields live on one basis that must resolve the smoothing scale, so the
/// truncated smoothing kernel stays non-negative and the sign of `β v` is
/// preserved by the scheme.
#[derive(Debug)]
pub struct RemainderSolver {
    chaos: ChaosField,
    params: LqgParams,
    multipliers: Vec<f64>,
    one_sided_shift: Vec<f64>,
}

impl RemainderSolver {
    pub fn new(basis: Arc<SpectralBasis>, params: &LqgParams, resolution: usize) -> Result<Self> {
        GridTransform::pseudo_spectral(Arc::clone(&basis), resolution)?;
        let mut gmc: GmcParams = params.gmc();
        gmc.allow_beyond_l2 = true;
        let chaos = ChaosField::new(Arc::clone(&basis), &gmc, &params.punctures, resolution)?;
        let multipliers = params.smoothing.multipliers(&basis, params.n);
        let one_sided_shift = shift_coefficients(&basis, params.smoothing, params.n, &params.punctures, false);
        Ok(Self {
            chaos,
            params: params.clone(),
            multipliers,
            one_sided_shift,
        })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        self.chaos.basis()
    }

    pub fn chaos(&self) -> &ChaosField {
        &self.chaos
    }

    pub fn params(&self) -> &LqgParams {
        &self.params
    }

    pub fn resolution(&self) -> usize {
        self.chaos.resolution()
    }

    pub fn tables(&self, dt: f64) -> Result<StepTables> {
        StepTables::new(self.basis(), dt)
    }

    /// `Θ_N` of the OU state.
    pub fn theta(&self, ou: &OuState) -> Result<GridField> {
        self.chaos.theta(ou.field.coeffs())
    }

    /// `max_j β v(x_j)` on the solver grid.
    pub fn max_beta_v(&self, v: &[f64]) -> f64 {
        let g = self.chaos.transform().to_grid(v);
        self.params.beta * g.max()
    }

    /// One left-point exponential step of the remainder equation:
    /// `v ← e^{dtΔ/4π} v − (νβ/2) φ₁(dt) P_N[e^{βz} 𝒩(β P_N v) Θ]`.
    pub fn v_step(
        &self,
        state: &RemainderState,
        theta: &GridField,
        z: f64,
        tables: &StepTables,
    ) -> Result<(RemainderState, StepReport)> {
        let entering = self.max_beta_v(state.v.coeffs());
        if entering > SIGN_TOLERANCE {
            return Err(Error::Contract(format!(
                "beta * v = {entering:e} > 0 entering the step at t = {}",
                state.time
            )));
        }
        let mut v = state.v.coeffs().to_vec();
        let guard_hits = self.step_in_place(&mut v, theta, z, tables)?;
        let max_beta_v = self.max_beta_v(&v);
        Ok((
            RemainderState {
                time: state.time + tables.dt,
                v: ScalarField::new(Arc::clone(self.basis()), v)?,
            },
            StepReport { guard_hits, max_beta_v },
        ))
    }

    fn step_in_place(&self, v: &mut [f64], theta: &GridField, z: f64, tables: &StepTables) -> Result<usize> {
        let beta = self.params.beta;
        let nu = self.params.nu;
        if theta.resolution() != self.resolution() {
            return Err(domain("theta grid does not match the solver grid"));
        }
        if let Some(j) = theta.samples().iter().position(|&t| !(t > 0.0)) {
            return Err(Error::Contract(format!(
                "theta is not strictly positive at grid index {j}"
            )));
        }
        if beta * z > crate::gmc::EXPONENT_GUARD {
            return Err(domain(format!("exponent beta * z = {} overflows", beta * z)));
        }
        if nu == 0.0 {
            for (c, d) in v.iter_mut().zip(&tables.decay) {
                *c *= d;
            }
            return Ok(0);
        }
        let smoothed: Vec<f64> = v.iter().zip(&self.multipliers).map(|(c, m)| c * m).collect();
        let mut g = self.chaos.transform().to_grid(&smoothed);
        let ez = (beta * z).exp();
        let mut hits = 0;
        for (s, t) in g.samples_mut().iter_mut().zip(theta.samples()) {
            let (n, guarded) = nonlinearity(beta * *s);
            hits += guarded as usize;
            *s = ez * n * t;
        }
        let f = self.chaos.transform().project(&g);
        let c = 0.5 * nu * beta;
        for i in 0..v.len() {
            v[i] = tables.decay[i] * v[i] - c * tables.phi1[i] * self.multipliers[i] * f[i];
        }
        Ok(hits)
    }

    /// One step of the undecomposed equation for `u`, with the same left-point
    /// rule and the OU noise `noise` (`noise[0]` drives the zero mode).
    pub fn full_step(
        &self,
        u: &AssembledField,
        ou: &OuPropagator,
        tables: &StepTables,
        drift_rate: f64,
        noise: &[f64],
    ) -> Result<AssembledField> {
        let beta = self.params.beta;
        let c = 0.5 * self.params.nu * beta;
        let coeffs = u.field.coeffs();
        let mut e = self.chaos.theta(coeffs)?;
        let eb = (beta * u.constant).exp();
        for s in e.samples_mut() {
            *s *= eb;
        }
        let f = self.chaos.transform().project(&e);
        let (decay, amp) = (ou.decay(), ou.amplitude());
        let mut next = vec![0.0; coeffs.len()];
        for i in 0..coeffs.len() {
            let linear = decay[i] * coeffs[i] + amp[i] * noise[i];
            next[i] = linear - c * tables.phi1[i] * self.multipliers[i] * f[i];
        }
        Ok(AssembledField {
            field: ScalarField::new(Arc::clone(self.basis()), next)?,
            constant: u.constant + ou.zero_amplitude() * noise[0] + drift_rate * tables.dt,
        })
    }

    /// Runs `Ψ`, `z` and `v` together from a stationary `Ψ`, `B_0 = 0` and
    /// `v = 0`, recording every `record_every` steps.
    pub fn simulate(
        &self,
        x_bar: f64,
        dt: f64,
        t_end: f64,
        record_every: usize,
        stream: RngStream,
    ) -> Result<Simulation> {
        if !(t_end >= 0.0) {
            return Err(domain(format!("final time must be non-negative, got {t_end}")));
        }
        let basis = Arc::clone(self.basis());
        let mut rng = stream.rng();
        let mut ou = OuState::stationary(&basis, &mut rng)?;
        let drift = DriftZ::new(x_bar, basis.geometry(), &self.params.punctures);
        let steps = (t_end / dt).round() as usize;
        let mut state = RemainderState::zero(Arc::clone(&basis));
        let mut traj = Trajectory::default();
        let record_every = record_every.max(1);
        let mut total_hits = 0;
        let mut max_bv = f64::NEG_INFINITY;
        if steps == 0 {
            let theta = self.theta(&ou)?;
            traj.push(
                0.0,
                state.v.coeffs().to_vec(),
                total_mass(&theta),
                self.max_beta_v(state.v.coeffs()),
            );
            return Ok(Simulation {
                trajectory: traj,
                ou,
                z: drift.value(0.0, 0.0),
                remainder: state,
                guard_hits: 0,
                max_beta_v: self.max_beta_v(&vec![0.0; basis.dim()]),
            });
        }
        let ou_prop = OuPropagator::new(&basis, dt)?;
        let tables = self.tables(dt)?;
        let mut noise = Vec::new();
        for k in 0..steps {
            let t = k as f64 * dt;
            let theta = self.theta(&ou)?;
            if k % record_every == 0 {
                traj.push(
                    t,
                    state.v.coeffs().to_vec(),
                    total_mass(&theta),
                    self.max_beta_v(state.v.coeffs()),
                );
            }
            let z = drift.value(t, ou.zero_mode_bm);
            let (next, rep) = self.v_step(&state, &theta, z, &tables)?;
            total_hits += rep.guard_hits;
            max_bv = max_bv.max(rep.max_beta_v);
            state = next;
            ou_prop.step(&mut ou, &mut rng, &mut noise);
        }
        let t = steps as f64 * dt;
        state.time = t;
        let theta = self.theta(&ou)?;
        traj.push(
            t,
            state.v.coeffs().to_vec(),
            total_mass(&theta),
            self.max_beta_v(state.v.coeffs()),
        );
        Ok(Simulation {
            trajectory: traj,
            z: drift.value(t, ou.zero_mode_bm),
            ou,
            remainder: state,
            guard_hits: total_hits,
            max_beta_v: max_bv,
        })
    }

    /// Terminal remainders at step sizes `dt` and `dt/2` driven by one fine
    /// OU path; the coarse run reads `Θ` and `z` at every other fine time.
    pub fn richardson_pair(&self, x_bar: f64, dt: f64, t_end: f64, stream: RngStream) -> Result<RichardsonPair> {
        let basis = Arc::clone(self.basis());
        let mut rng: StreamRng = stream.rng();
        let mut ou = OuState::stationary(&basis, &mut rng)?;
        let drift = DriftZ::new(x_bar, basis.geometry(), &self.params.punctures);
        let coarse_steps = (t_end / dt).round() as usize;
        let half = dt / 2.0;
        let ou_prop = OuPropagator::new(&basis, half)?;
        let fine_tables = self.tables(half)?;
        let coarse_tables = self.tables(dt)?;
        let mut fine = vec![0.0; basis.dim()];
        let mut coarse = vec![0.0; basis.dim()];
        let mut noise = Vec::new();
        let mut hits = 0;
        let mut max_bv = f64::NEG_INFINITY;
        for k in 0..2 * coarse_steps {
            let t = k as f64 * half;
            let theta = self.theta(&ou)?;
            let z = drift.value(t, ou.zero_mode_bm);
            hits += self.step_in_place(&mut fine, &theta, z, &fine_tables)?;
            if k % 2 == 0 {
                hits += self.step_in_place(&mut coarse, &theta, z, &coarse_tables)?;
                max_bv = max_bv.max(self.max_beta_v(&coarse));
            }
            max_bv = max_bv.max(self.max_beta_v(&fine));
            ou_prop.step(&mut ou, &mut rng, &mut noise);
        }
        let diff: f64 = fine
            .iter()
            .zip(&coarse)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm_fine = fine.iter().map(|a| a * a).sum::<f64>().sqrt();
        let norm_coarse = coarse.iter().map(|a| a * a).sum::<f64>().sqrt();
        Ok(RichardsonPair {
            coarse,
            fine,
            l2_difference: diff,
            relative_difference: diff / norm_fine,
            norm_coarse,
            norm_fine,
            guard_hits: hits,
            max_beta_v: max_bv,
        })
    }

    /// `u + 2π Σ a_ℓ (P_N⊗Id)G(x_ℓ, ·)`.
    pub fn shift_back(&self, u: &ScalarField) -> Result<ScalarField> {
        let mut out = u.clone();
        for (c, s) in out.coeffs_mut().iter_mut().zip(&self.one_sided_shift) {
            *c += s;
        }
        Ok(out)
    }
}

/// Remainder runs driven by the same `Θ` path at `dt` and `dt/2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RichardsonPair {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub l2_difference: f64,
    /// `‖v_dt − v_{dt/2}‖ / ‖v_{dt/2}‖`.
    pub relative_difference: f64,
    pub norm_coarse: f64,
    pub norm_fine: f64,
    pub guard_hits: usize,
    pub max_beta_v: f64,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub ou: OuState,
    pub z: f64,
    pub remainder: RemainderState,
    pub guard_hits: usize,
    pub max_beta_v: f64,
}

/// Recorded remainder snapshots with the `Θ` mass and the sign diagnostic.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub theta_mass: Vec<f64>,
    pub max_beta_v: Vec<f64>,
}

impl Trajectory {
    pub fn push(&mut self, t: f64, coeffs: Vec<f64>, mass: f64, max_beta_v: f64) {
        debug_assert!(self.times.last().is_none_or(|&s| t > s));
        self.times.push(t);
        self.snapshots.push(coeffs);
        self.theta_mass.push(mass);
        self.max_beta_v.push(max_beta_v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `u = Ψ + z + v`: the field part `Ψ + v` and the tracked constant `z`.
#[derive(Clone, Debug)]
pub struct AssembledField {
    pub field: ScalarField,
    pub constant: f64,
}

impl AssembledField {
    /// Pointwise values include the constant.
    pub fn mean(&self) -> f64 {
        self.field.mean() + self.constant
    }
}

pub fn assemble_u(ou: &OuState, z: f64, v: &RemainderState) -> Result<AssembledField> {
    if (ou.time - v.time).abs() > 1e-12 * (1.0 + ou.time.abs()) {
        return Err(domain(format!(
            "OU state at t = {} and remainder at t = {} differ",
            ou.time, v.time
        )));
    }
    let mut field = ou.field.clone();
    field.axpy(1.0, &v.v)?;
    Ok(AssembledField { field, constant: z })
}

/// `u + 2π Σ a_ℓ (P_N⊗Id)G(x_ℓ, ·)` on `u`'s basis.
pub fn girsanov_shift_back(u: &ScalarField, punctures: &PunctureSet, n: f64) -> Result<ScalarField> {
    crate::spectral::check_resolution(u.basis(), n)?;
    let s = shift_coefficients(u.basis(), crate::spectral::Smoothing::Heat, n, punctures, false);
    let mut out = u.clone();
    for (c, d) in out.coeffs_mut().iter_mut().zip(&s) {
        *c += d;
    }
    Ok(out)
}

/// One point of the uniqueness energy of `w = v₁ − v₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub time: f64,
    /// `½‖w‖²`.
    pub half_norm2: f64,
    /// `(1/4π) ∫_0^t ‖∇w‖²` by the trapezoid rule.
    pub dissipation: f64,
    pub energy: f64,
}

pub fn energy_difference_monitor(
    basis: &SpectralBasis,
    times: &[f64],
    v1: &[Vec<f64>],
    v2: &[Vec<f64>],
) -> Result<Vec<EnergyPoint>> {
    if v1.len() != times.len() || v2.len() != times.len() {
        return Err(domain("trajectories and time grid have different lengths"));
    }
    let l = basis.eigenvalues();
    let mut out = Vec::with_capacity(times.len());
    let mut dissipation = 0.0;
    let mut prev_grad: Option<f64> = None;
    for k in 0..times.len() {
        if v1[k].len() != l.len() || v2[k].len() != l.len() {
            return Err(domain("snapshot length does not match the basis"));
        }
        let (mut n2, mut g2) = (0.0, 0.0);
        for i in 0..l.len() {
            let w = v1[k][i] - v2[k][i];
            n2 += w * w;
            g2 += l[i] * w * w;
        }
        if let Some(pg) = prev_grad {
            dissipation += 0.5 * (pg + g2) * (times[k] - times[k - 1]) / (4.0 * PI);
        }
        prev_grad = Some(g2);
        out.push(EnergyPoint {
            time: times[k],
            half_norm2: 0.5 * n2,
            dissipation,
            energy: 0.5 * n2 + dissipation,
        });
    }
    Ok(out)
}
