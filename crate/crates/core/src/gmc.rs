//! Punctured Gaussian multiplicative chaos on the torus.
//!
//! `Θ_N(x) = exp(β (P_N Ψ)(x) − β² σ_N / 2 + 2πβ Σ_ℓ a_ℓ (P_N⊗P_N)G(x_ℓ, x))`
//! with the Wick counterterm computed exactly at finite `N`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fields::{fill_gff, OuState};
use crate::rng::{replicate, RngStream};
use crate::spectral::{
    check_resolution, green_regularized_with, wick_variance, GridField, GridTransform, Point, Smoothing, SpectralBasis,
    TorusGeometry,
};
use crate::stats::{mean_estimate, Estimate};

/// Exponents above this value are treated as an overflow.
pub const EXPONENT_GUARD: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Puncture {
    pub point: Point,
    pub charge: f64,
}

impl Puncture {
    pub fn new(point: Point, charge: f64) -> Self {
        Self { point, charge }
    }
}

/// Insertion points with their charges, kept in a canonical order so that
/// every sum over punctures is independent of how they were listed.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PunctureSet {
    entries: Vec<Puncture>,
}

impl PunctureSet {
    pub fn new(mut entries: Vec<Puncture>) -> Result<Self> {
        for p in &entries {
            if !(p.point.x.is_finite() && p.point.y.is_finite() && p.charge.is_finite()) {
                return Err(domain(format!("puncture at {} has a non-finite entry", p.point)));
            }
        }
        entries.sort_by(|a, b| {
            a.point
                .x
                .total_cmp(&b.point.x)
                .then(a.point.y.total_cmp(&b.point.y))
                .then(a.charge.total_cmp(&b.charge))
        });
        for w in entries.windows(2) {
            if w[0].point == w[1].point {
                return Err(domain(format!("puncture point {} appears twice", w[0].point)));
            }
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(point: Point, charge: f64) -> Self {
        Self {
            entries: vec![Puncture::new(point, charge)],
        }
    }

    /// Checks distinctness on the torus, where points differing by a period
    /// coincide.
    pub fn check_on(&self, geometry: &TorusGeometry) -> Result<()> {
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                if geometry.distance(a.point, b.point) == 0.0 {
                    return Err(domain(format!(
                        "punctures {} and {} coincide on the torus",
                        a.point, b.point
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Puncture> {
        self.entries.iter()
    }

    pub fn entries(&self) -> &[Puncture] {
        &self.entries
    }

    /// `Σ a_ℓ`.
    pub fn total_charge(&self) -> f64 {
        self.entries.iter().map(|p| p.charge).sum()
    }

    /// `max a_ℓ`, or `None` when empty.
    pub fn max_charge(&self) -> Option<f64> {
        self.entries.iter().map(|p| p.charge).reduce(f64::max)
    }
}

impl<'de> Deserialize<'de> for PunctureSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<Puncture>::deserialize(d)?;
        PunctureSet::new(entries).map_err(serde::de::Error::custom)
    }
}

/// How the divergent variance of the smoothed field is removed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Subtract `β² σ_N / 2` computed from the same truncated basis.
    #[default]
    WickExact,
    /// Prefactor `e^{-πβ²C_P} N^{-β²/2}` with a user-supplied constant.
    PaperLogN { c_p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmcParams {
    pub beta: f64,
    pub n: f64,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub smoothing: Smoothing,
    /// Allow `β ≥ √2`, outside the L² regime where the moment identities are
    /// known to hold.
    #[serde(default)]
    pub allow_beyond_l2: bool,
}

impl GmcParams {
    pub fn new(beta: f64, n: f64) -> Self {
        Self {
            beta,
            n,
            normalization: Normalization::WickExact,
            smoothing: Smoothing::Heat,
            allow_beyond_l2: false,
        }
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(domain(format!("N must be positive, got {}", self.n)));
        }
        if self.beta >= SQRT_2 {
            if !self.allow_beyond_l2 {
                return Err(Error::Seiberg(format!(
                    "beta = {} is not below sqrt(2): outside the L2 regime (A1); set the override to proceed",
                    self.beta
                )));
            }
            log::warn!(
                "beta = {} outside the L2 regime (A1); proceeding on override",
                self.beta
            );
        }
        Ok(())
    }

    /// Constant added to `β P_N Ψ + β shift` in the exponent.
    pub fn log_prefactor(&self, basis: &SpectralBasis) -> f64 {
        let b2 = self.beta * self.beta;
        match self.normalization {
            Normalization::WickExact => -0.5 * b2 * wick_variance(basis, self.smoothing, self.n),
            Normalization::PaperLogN { c_p } => -PI * b2 * c_p - 0.5 * b2 * self.n.ln(),
        }
    }
}

/// Coefficients of `2π Σ_ℓ a_ℓ (ψ_N ⊗ ψ_N^{p})G(x_ℓ, ·)` with `p = 1` for the
/// two-sided shift entering `Θ` and `p = 0` for the one-sided shift used to
/// translate the field back.
pub fn shift_coefficients(
    basis: &SpectralBasis,
    smoothing: Smoothing,
    n: f64,
    punctures: &PunctureSet,
    two_sided: bool,
) -> Vec<f64> {
    let l = basis.eigenvalues();
    let mut out = vec![0.0; basis.dim()];
    for p in punctures.iter() {
        for i in 1..basis.dim() {
            let m = smoothing.multiplier(l[i], n);
            let w = if two_sided { m * m } else { m };
            out[i] += 2.0 * PI * p.charge * w * basis.basis_value(i, p.point) / l[i];
        }
    }
    out
}

/// Grid samples of `2π Σ_ℓ a_ℓ (P_N⊗P_N)G(x_ℓ, ·)`.
pub fn puncture_shift(
    basis: &Arc<SpectralBasis>,
    n: f64,
    punctures: &PunctureSet,
    resolution: usize,
) -> Result<GridField> {
    check_resolution(basis, n)?;
    let c = shift_coefficients(basis, Smoothing::Heat, n, punctures, true);
    Ok(GridTransform::new(Arc::clone(basis), resolution)?.to_grid(&c))
}

/// Strictly positive grid density `Θ_N` at one time slice.
#[derive(Clone, Debug)]
pub struct ThetaField {
    pub grid: GridField,
    pub time: f64,
}

/// Everything needed to turn field coefficients into `Θ_N` on a fixed grid.
#[derive(Debug)]
pub struct ChaosField {
    transform: GridTransform,
    multipliers: Vec<f64>,
    beta: f64,
    log_prefactor: f64,
    beta_shift: Vec<f64>,
}

impl ChaosField {
    /// Wick variance and shift computed on `basis`, which must resolve `N`.
    pub fn new(
        basis: Arc<SpectralBasis>,
        params: &GmcParams,
        punctures: &PunctureSet,
        resolution: usize,
    ) -> Result<Self> {
        params.validate()?;
        check_resolution(&basis, params.n)?;
        punctures.check_on(basis.geometry())?;
        let transform = GridTransform::new(Arc::clone(&basis), resolution)?;
        let shift = if punctures.is_empty() {
            GridField::constant(resolution, basis.geometry().side_length(), 0.0)
        } else {
            transform.to_grid(&shift_coefficients(&basis, params.smoothing, params.n, punctures, true))
        };
        let log_prefactor = params.log_prefactor(&basis);
        Self::assemble(transform, params, shift, log_prefactor)
    }

    /// For fields living on a basis too coarse to resolve `N`: the shift grid
    /// and the variance are supplied by the caller (typically computed on a
    /// finer basis) and only the field smoothing uses `basis`.
    pub fn with_shift(
        basis: Arc<SpectralBasis>,
        params: &GmcParams,
        shift: GridField,
        log_prefactor: f64,
    ) -> Result<Self> {
        params.validate()?;
        let transform = GridTransform::new(basis, shift.resolution())?;
        Self::assemble(transform, params, shift, log_prefactor)
    }

    fn assemble(transform: GridTransform, params: &GmcParams, shift: GridField, log_prefactor: f64) -> Result<Self> {
        if shift.resolution() != transform.resolution() {
            return Err(domain("shift grid resolution differs from the transform grid"));
        }
        let multipliers = params.smoothing.multipliers(transform.basis(), params.n);
        let beta_shift = shift.samples().iter().map(|s| params.beta * s).collect();
        Ok(Self {
            transform,
            multipliers,
            beta: params.beta,
            log_prefactor,
            beta_shift,
        })
    }

    pub fn resolution(&self) -> usize {
        self.transform.resolution()
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        self.transform.basis()
    }

    pub fn transform(&self) -> &GridTransform {
        &self.transform
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_prefactor(&self) -> f64 {
        self.log_prefactor
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// `P_N` applied to `coeffs`, on the grid.
    pub fn smoothed(&self, coeffs: &[f64]) -> GridField {
        let c: Vec<f64> = coeffs.iter().zip(&self.multipliers).map(|(c, m)| c * m).collect();
        self.transform.to_grid(&c)
    }

    /// `Θ` for the field with coefficients `coeffs`. The constant mode of
    /// `coeffs` is included as given.
    pub fn theta(&self, coeffs: &[f64]) -> Result<GridField> {
        let mut g = self.smoothed(coeffs);
        let n = g.resolution();
        let h = g.spacing();
        for (j, (s, b)) in g.samples_mut().iter_mut().zip(&self.beta_shift).enumerate() {
            let e = self.beta * *s + self.log_prefactor + b;
            if !(e <= EXPONENT_GUARD) {
                return Err(Error::Overflow {
                    value: e,
                    i: j / n,
                    j: j % n,
                    x: (j / n) as f64 * h,
                    y: (j % n) as f64 * h,
                });
            }
            *s = e.exp();
        }
        Ok(g)
    }
}

/// `Θ_N` for an OU state. The zero-mode Brownian constant is not part of `Θ`;
/// it enters the dynamics through `z`.
pub fn theta_field(state: &OuState, chaos: &ChaosField) -> Result<ThetaField> {
    Ok(ThetaField {
        grid: chaos.theta(state.field.coeffs())?,
        time: state.time,
    })
}

/// `∫ Θ dV` by the periodic trapezoid rule.
pub fn total_mass(theta: &GridField) -> f64 {
    theta.integral()
}

/// `H_N(y) = exp(2πβ Σ_ℓ a_ℓ (ψ_N⊗ψ_N)G(x_ℓ, y)) = E[Θ_N(y)]` under Wick
/// normalization.
pub fn mean_oracle(basis: &SpectralBasis, params: &GmcParams, punctures: &PunctureSet, y: Point) -> Result<f64> {
    let mut s = 0.0;
    for p in punctures.iter() {
        s += p.charge * green_regularized_with(basis, params.smoothing, params.n, p.point, y)?;
    }
    Ok((2.0 * PI * params.beta * s).exp())
}

/// `E[Θ_N(y₁) Θ_N(y₂)] = H_N(y₁) H_N(y₂) exp(2πβ² (ψ_N⊗ψ_N)G(y₁, y₂))`.
pub fn second_moment_oracle(
    basis: &SpectralBasis,
    params: &GmcParams,
    punctures: &PunctureSet,
    y1: Point,
    y2: Point,
) -> Result<f64> {
    if basis.geometry().distance(y1, y2) == 0.0 {
        return Err(domain("second moment oracle needs two distinct points"));
    }
    let h1 = mean_oracle(basis, params, punctures, y1)?;
    let h2 = mean_oracle(basis, params, punctures, y2)?;
    let g = green_regularized_with(basis, params.smoothing, params.n, y1, y2)?;
    Ok(h1 * h2 * (2.0 * PI * params.beta * params.beta * g).exp())
}

/// Evaluates `Θ_N` at a few fixed points straight from GFF coefficients,
/// without going through a grid.
#[derive(Clone, Debug)]
pub struct ProbeSampler {
    basis: Arc<SpectralBasis>,
    probes: Vec<Point>,
    table: Vec<f64>,
    offset: Vec<f64>,
    beta: f64,
}

impl ProbeSampler {
    pub fn new(
        basis: Arc<SpectralBasis>,
        params: &GmcParams,
        punctures: &PunctureSet,
        probes: &[Point],
    ) -> Result<Self> {
        params.validate()?;
        check_resolution(&basis, params.n)?;
        let m = params.smoothing.multipliers(&basis, params.n);
        let dim = basis.dim();
        let mut table = Vec::with_capacity(probes.len() * dim);
        for &y in probes {
            table.extend((0..dim).map(|i| m[i] * basis.basis_value(i, y)));
        }
        let log_pref = params.log_prefactor(&basis);
        let offset = probes
            .iter()
            .map(|&y| Ok(log_pref + mean_oracle(&basis, params, punctures, y)?.ln()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            basis,
            probes: probes.to_vec(),
            table,
            offset,
            beta: params.beta,
        })
    }

    pub fn probes(&self) -> &[Point] {
        &self.probes
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    /// `Θ_N(y_p)` for every probe.
    pub fn theta(&self, coeffs: &[f64], out: &mut [f64]) {
        let dim = self.basis.dim();
        for (p, o) in out.iter_mut().enumerate() {
            let row = &self.table[p * dim..(p + 1) * dim];
            let s: f64 = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
            *o = (self.beta * s + self.offset[p]).exp();
        }
    }
}

/// Monte Carlo `E[X_N(B)^{-a}]` together with the Jensen lower bound
/// `E[X_N(B)]^{-a}` for the same discretized ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeMoment {
    pub estimate: Estimate,
    pub jensen_bound: f64,
    pub ball_area: f64,
}

/// `E[X_N(B)^{-a}]` with `X_N(B) = ∫_B e^{βP_N X − β²σ_N/2} dV`, the ball
/// integral taken by grid quadrature at `resolution`.
#[allow(clippy::too_many_arguments)]
pub fn negative_moment_estimate(
    basis: &Arc<SpectralBasis>,
    params: &GmcParams,
    center: Point,
    radius: f64,
    a: f64,
    replicas: usize,
    stream: RngStream,
    resolution: usize,
) -> Result<NegativeMoment> {
    if replicas < 100 {
        return Err(Error::Config(format!(
            "negative moment estimate needs at least 100 replicas, got {replicas}"
        )));
    }
    if params.normalization != Normalization::WickExact {
        return Err(Error::Config(
            "negative moments are defined with Wick normalization".into(),
        ));
    }
    let geo = *basis.geometry();
    if !(radius > 0.0 && radius < geo.side_length() / 4.0) {
        return Err(domain(format!("ball radius must lie in (0, side/4), got {radius}")));
    }
    if !(a > 0.0) {
        return Err(domain(format!("moment order a must be positive, got {a}")));
    }
    let chaos = ChaosField::new(Arc::clone(basis), params, &PunctureSet::empty(), resolution)?;
    let h = geo.side_length() / resolution as f64;
    let inside: Vec<usize> = (0..resolution * resolution)
        .filter(|&j| {
            let p = Point::new((j / resolution) as f64 * h, (j % resolution) as f64 * h);
            geo.distance(p, center) < radius
        })
        .collect();
    if inside.is_empty() {
        return Err(domain("ball contains no grid points; raise the resolution"));
    }
    let cell = h * h;
    let ball_area = inside.len() as f64 * cell;
    let values = replicate(stream, replicas, |_, rng| {
        let mut c = vec![0.0; basis.dim()];
        fill_gff(basis, rng, &mut c);
        let theta = chaos.theta(&c)?;
        let s = theta.samples();
        let x: f64 = inside.iter().map(|&j| s[j]).sum::<f64>() * cell;
        Ok(x.powf(-a))
    })?;
    Ok(NegativeMoment {
        estimate: mean_estimate(&values),
        jensen_bound: ball_area.powf(-a),
        ball_area,
    })
}

/// `Var[mass_N − mass_{2N}]` for each `N` in `scales`, all chaoses built
/// from the same GFF draw per replica. Returns one estimate per scale, whose
/// error bar is the standard error of the mean squared deviation.
pub fn mass_increment_variances(
    basis: &Arc<SpectralBasis>,
    beta: f64,
    scales: &[f64],
    replicas: usize,
    stream: RngStream,
    resolution: usize,
) -> Result<Vec<Estimate>> {
    if replicas < 2 {
        return Err(Error::Config("need at least two replicas".into()));
    }
    let mut levels: Vec<f64> = scales.to_vec();
    levels.extend(scales.iter().map(|n| 2.0 * n));
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let chaoses = levels
        .iter()
        .map(|&n| {
            ChaosField::new(
                Arc::clone(basis),
                &GmcParams::new(beta, n),
                &PunctureSet::empty(),
                resolution,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let masses = replicate(stream, replicas, |_, rng| {
        let mut c = vec![0.0; basis.dim()];
        fill_gff(basis, rng, &mut c);
        chaoses
            .iter()
            .map(|ch| Ok(total_mass(&ch.theta(&c)?)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let idx = |n: f64| levels.iter().position(|&l| l == n).unwrap();
    Ok(scales
        .iter()
        .map(|&n| {
            let (i, j) = (idx(n), idx(2.0 * n));
            let d: Vec<f64> = masses.iter().map(|m| m[i] - m[j]).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let k = d.len() as f64 / (d.len() as f64 - 1.0);
            let sq: Vec<f64> = d.iter().map(|x| k * (x - mean) * (x - mean)).collect();
            mean_estimate(&sq)
        })
        .collect())
}
