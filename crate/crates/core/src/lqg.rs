//! The truncated Liouville measure: admissibility bounds, the zero-mode
//! Gamma identity, importance sampling of observables, and the lower bound
//! showing divergence of the partition function for negative `ν`.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::fields::fill_gff;
use crate::gmc::{shift_coefficients, total_mass, ChaosField, GmcParams, PunctureSet};
use crate::rng::{replicate, RngStream};
use crate::spectral::{GridField, GridTransform, Point, ScalarField, Smoothing, SpectralBasis, TorusGeometry};
use crate::stats::{effective_sample_size, jackknife_ratio, Estimate};

/// Couplings of the truncated measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqgParams {
    pub beta: f64,
    pub nu: f64,
    /// `2/β + β/2`, fixed at construction.
    pub q: f64,
    pub punctures: PunctureSet,
    pub n: f64,
    pub euler_char: i32,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl LqgParams {
    pub fn new(beta: f64, nu: f64, punctures: PunctureSet, n: f64, euler_char: i32) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(domain(format!("beta must be positive, got {beta}")));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain(format!("N must be positive, got {n}")));
        }
        if !nu.is_finite() {
            return Err(domain("nu must be finite"));
        }
        Ok(Self {
            beta,
            nu,
            q: 2.0 / beta + beta / 2.0,
            punctures,
            n,
            euler_char,
            smoothing: Smoothing::Heat,
        })
    }

    /// Torus parameters (`χ = 0`).
    pub fn torus(beta: f64, nu: f64, punctures: PunctureSet, n: f64) -> Result<Self> {
        Self::new(beta, nu, punctures, n, 0)
    }

    /// `Σ a_ℓ − χ Q`.
    pub fn charge_excess(&self) -> f64 {
        self.punctures.total_charge() - self.euler_char as f64 * self.q
    }

    /// Shape `s = (Σ a_ℓ − χQ)/β` of the zero-mode Gamma law.
    pub fn gamma_shape(&self) -> f64 {
        self.charge_excess() / self.beta
    }

    pub fn gmc(&self) -> GmcParams {
        GmcParams::new(self.beta, self.n).with_smoothing(self.smoothing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeibergMargins {
    /// `√2 − β`.
    pub l2_regime: f64,
    /// `Σ a_ℓ − χQ`.
    pub first_seiberg: f64,
    /// `2/β − max a_ℓ`; `+∞` without punctures.
    pub integrable_insertions: f64,
    /// `√(a_max² + 4) − a_max − β`, with `a_max = 0` without punctures.
    pub gwp_condition: f64,
}

/// The four admissibility conditions. Each flag is `margin > 0`; margins
/// within rounding of zero are reported as exactly zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeibergReport {
    pub l2_regime: bool,
    pub first_seiberg: bool,
    pub integrable_insertions: bool,
    pub gwp_condition: bool,
    pub margins: SeibergMargins,
    /// Names of conditions sitting exactly on their boundary.
    pub boundary: Vec<String>,
}

impl SeibergReport {
    pub fn all_hold(&self) -> bool {
        self.l2_regime && self.first_seiberg && self.integrable_insertions && self.gwp_condition
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.l2_regime {
            out.push("L2 regime (beta < sqrt 2)");
        }
        if !self.first_seiberg {
            out.push("first Seiberg bound (sum of charges > chi Q)");
        }
        if !self.integrable_insertions {
            out.push("integrable insertions (a < 2/beta)");
        }
        if !self.gwp_condition {
            out.push("well-posedness condition (beta < sqrt(a_max^2 + 4) - a_max)");
        }
        out
    }

    /// `Err(Seiberg)` naming every failing condition.
    pub fn require(&self) -> Result<()> {
        if self.all_hold() {
            Ok(())
        } else {
            Err(Error::Seiberg(self.failures().join("; ")))
        }
    }
}

fn snap(margin: f64, scale: f64) -> f64 {
    if margin.abs() <= 1e-12 * scale {
        0.0
    } else {
        margin
    }
}

pub fn check_bounds(params: &LqgParams) -> SeibergReport {
    let beta = params.beta;
    let a_max = params.punctures.max_charge();
    let sum_a = params.punctures.total_charge();
    let chi_q = params.euler_char as f64 * params.q;

    let l2 = snap(SQRT_2 - beta, SQRT_2 + beta);
    let first = snap(sum_a - chi_q, 1.0 + sum_a.abs() + chi_q.abs());
    let integrable = match a_max {
        Some(a) => snap(2.0 / beta - a, 2.0 / beta + a.abs()),
        None => f64::INFINITY,
    };
    let a = a_max.unwrap_or(0.0);
    let root = (a * a + 4.0).sqrt();
    let gwp = snap(root - a - beta, root + a.abs() + beta);

    let margins = SeibergMargins {
        l2_regime: l2,
        first_seiberg: first,
        integrable_insertions: integrable,
        gwp_condition: gwp,
    };
    let boundary = [
        ("l2_regime", l2),
        ("first_seiberg", first),
        ("integrable_insertions", integrable),
        ("gwp_condition", gwp),
    ]
    .iter()
    .filter(|(_, m)| *m == 0.0)
    .map(|(n, _)| n.to_string())
    .collect();
    SeibergReport {
        l2_regime: l2 > 0.0,
        first_seiberg: first > 0.0,
        integrable_insertions: integrable > 0.0,
        gwp_condition: gwp > 0.0,
        margins,
        boundary,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCheck {
    pub numeric: f64,
    pub analytic: f64,
    pub relative_error: f64,
    pub evaluations: usize,
}

/// `∫_ℝ exp{(Σa − χQ) X̄ − ν e^{βX̄} mass} dX̄` by double-exponential quadrature,
/// against `β^{-1} Γ(s) (ν mass)^{-s}`.
pub fn zero_mode_gamma_check(beta: f64, nu: f64, charge_excess: f64, mass: f64) -> Result<GammaCheck> {
    if !(beta > 0.0) {
        return Err(domain(format!("beta must be positive, got {beta}")));
    }
    if !(nu > 0.0) {
        return Err(domain(format!("the zero-mode integral needs nu > 0, got {nu}")));
    }
    if !(mass > 0.0) {
        return Err(domain(format!("mass must be positive, got {mass}")));
    }
    let s = charge_excess / beta;
    if !(s > 0.0) {
        return Err(Error::Seiberg(format!(
            "first Seiberg bound fails: Gamma shape s = {s} is not positive"
        )));
    }
    let log_nm = (nu * mass).ln();
    // In y = βX̄ + log(ν mass) the integrand is exp(s y − e^y), peaked at log s.
    let y_star = s.ln();
    let y_lo = y_star - 40.0 / s - 1.0;
    let y_hi = (s + 45.0).ln() + 1.0;
    let x_lo = (y_lo - log_nm) / beta;
    let x_hi = (y_hi - log_nm) / beta;
    let log_peak = s * (y_star - log_nm) - s;
    let f = |x: f64| (charge_excess * x - nu * (beta * x).exp() * mass - log_peak).exp();
    let out = quadrature::double_exponential::integrate(f, x_lo, x_hi, 1e-14 * (x_hi - x_lo));
    let numeric = out.integral * log_peak.exp();
    let analytic = (ln_gamma(s) - s * log_nm).exp() / beta;
    Ok(GammaCheck {
        numeric,
        analytic,
        relative_error: (numeric / analytic - 1.0).abs(),
        evaluations: out.num_function_evaluations as usize,
    })
}

/// What an observable sees of one importance-sampling replica.
pub struct RhoSample<'a> {
    /// Shifted non-constant part `X + 2πΣ a_ℓ (P_N⊗Id)G(x_ℓ, ·)`.
    pub field: &'a ScalarField,
    /// Zero mode `X̄ = β^{-1} log(τ / (ν Y))`.
    pub zero_mode: f64,
    /// `Y = ∫ Θ_N`.
    pub mass: f64,
    /// Gamma variable `τ = ν e^{βX̄} Y`.
    pub tau: f64,
}

pub type Observable<'o> = &'o (dyn Fn(&RhoSample<'_>) -> f64 + Sync);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoReport {
    pub estimates: Vec<Estimate>,
    pub ess: f64,
    pub ess_fraction: f64,
}

/// Self-normalized importance sampling of `observables` under `ρ_N`.
///
/// The GFF is shifted by the puncture Green functions, the zero mode is drawn
/// exactly through its Gamma law, and each replica carries weight `Y^{-s}`.
pub fn expectation_under_rho(
    params: &LqgParams,
    basis: &Arc<SpectralBasis>,
    observables: &[Observable<'_>],
    replicas: usize,
    stream: RngStream,
    resolution: usize,
    override_seiberg: bool,
) -> Result<RhoReport> {
    let report = check_bounds(params);
    if !override_seiberg {
        report.require()?;
    }
    if !(params.nu > 0.0) {
        return Err(domain(format!("sampling under rho needs nu > 0, got {}", params.nu)));
    }
    if replicas < 2 {
        return Err(Error::Config("need at least two replicas".into()));
    }
    let mut gmc = params.gmc();
    gmc.allow_beyond_l2 = override_seiberg;
    let chaos = ChaosField::new(Arc::clone(basis), &gmc, &params.punctures, resolution)?;
    let one_sided = shift_coefficients(basis, params.smoothing, params.n, &params.punctures, false);
    let s = params.gamma_shape();
    let beta = params.beta;
    let nu = params.nu;

    let rows = replicate(stream, replicas, |_, rng| {
        let mut c = vec![0.0; basis.dim()];
        fill_gff(basis, rng, &mut c);
        // Θ of the unshifted draw already carries the two-sided shift.
        let mass = total_mass(&chaos.theta(&c)?);
        for (ci, si) in c.iter_mut().zip(&one_sided) {
            *ci += si;
        }
        let field = ScalarField::new(Arc::clone(basis), c)?;
        let tau = rng.gamma(s);
        let zero_mode = (tau / (nu * mass)).ln() / beta;
        let sample = RhoSample {
            field: &field,
            zero_mode,
            mass,
            tau,
        };
        let values: Vec<f64> = observables.iter().map(|f| f(&sample)).collect();
        Ok((-s * mass.ln(), values))
    })?;

    let max_lw = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = rows.iter().map(|r| (r.0 - max_lw).exp()).collect();
    let ess = effective_sample_size(&weights);
    let ess_fraction = ess / replicas as f64;
    if ess_fraction < 0.05 {
        log::warn!("importance weights degenerate: effective sample size {ess:.1} of {replicas}");
    }
    let estimates = (0..observables.len())
        .map(|k| {
            let vals: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
            jackknife_ratio(&weights, &vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RhoReport {
        estimates,
        ess,
        ess_fraction,
    })
}

/// Smooth bumps `f_m = m · P_N 1_{B(center, radius)}` used to bound the
/// partition function from below when `ν < 0`.
#[derive(Debug)]
pub struct BumpFamily {
    profile: Vec<f64>,
    grid: GridField,
    h1_norm2: f64,
    area: f64,
}

impl BumpFamily {
    /// The family used throughout: center `(π, π)`, radius 1.5, smoothed by
    /// `P_4`, on the modes of `|λ| ≤ 24` and evaluated on a 96-point grid.
    pub fn standard(geometry: TorusGeometry) -> Result<Self> {
        let c = geometry.side_length() / 2.0;
        Self::new(geometry, Point::new(c, c), 1.5, 4.0, 24.0, 96, 512)
    }

    pub fn new(
        geometry: TorusGeometry,
        center: Point,
        radius: f64,
        smoothing_n: f64,
        cutoff: f64,
        resolution: usize,
        quadrature_resolution: usize,
    ) -> Result<Self> {
        let basis = Arc::new(crate::spectral::enumerate_modes(geometry, cutoff)?);
        let fine = GridTransform::new(Arc::clone(&basis), quadrature_resolution)?;
        let h = geometry.side_length() / quadrature_resolution as f64;
        let indicator = crate::spectral::GridField::new(
            quadrature_resolution,
            geometry.side_length(),
            (0..quadrature_resolution * quadrature_resolution)
                .map(|j| {
                    let p = Point::new(
                        (j / quadrature_resolution) as f64 * h,
                        (j % quadrature_resolution) as f64 * h,
                    );
                    if geometry.distance(p, center) < radius {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        )?;
        let mut profile = fine.project(&indicator);
        for (c, &l) in profile.iter_mut().zip(basis.eigenvalues()) {
            *c *= Smoothing::Heat.multiplier(l, smoothing_n);
        }
        let h1_norm2 = profile
            .iter()
            .zip(basis.eigenvalues())
            .map(|(c, l)| (1.0 + l) * c * c)
            .sum();
        let grid = GridTransform::new(Arc::clone(&basis), resolution)?.to_grid(&profile);
        Ok(Self {
            profile,
            grid,
            h1_norm2,
            area: geometry.area(),
        })
    }

    /// Coefficients of the unit-height profile.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// `‖f_1‖²_{H¹} = Σ (1 + λ²) f_n²`.
    pub fn h1_norm2(&self) -> f64 {
        self.h1_norm2
    }

    /// `L = −½ m² ‖f_1‖²_{H¹} − ν ∫ e^{β m f_1} dV`.
    pub fn lower_bound(&self, beta: f64, nu: f64, height: f64) -> f64 {
        let integral = self
            .grid
            .samples()
            .iter()
            .map(|f| (beta * height * f).exp())
            .sum::<f64>()
            / self.grid.samples().len() as f64
            * self.area;
        -0.5 * height * height * self.h1_norm2 - nu * integral
    }
}

/// Lower bound on `log E[exp(−ν ∫ Θ)]` from the `m`-th member of `family`.
pub fn negative_nu_lower_bound(beta: f64, nu: f64, m: f64, family: &BumpFamily) -> Result<f64> {
    if !(nu < 0.0) {
        return Err(domain(format!("the divergence bound needs nu < 0, got {nu}")));
    }
    if beta == 0.0 || !beta.is_finite() {
        return Err(domain("beta must be non-zero and finite"));
    }
    Ok(family.lower_bound(beta, nu, m))
}
