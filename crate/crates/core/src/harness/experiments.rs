use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use serde_json::json;

use super::config::ExperimentConfig;
use super::report::{num, CsvSeries, EstimateRecord, Provenance};
use crate::dynamics::{
    invariance_test, GalerkinEnergy, GalerkinParams, InvarianceConfig, InvarianceObservable, RemainderSolver,
    SIGN_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::fields::{covariance_oracle, fill_gff, OuPropagator};
use crate::gmc::{mean_oracle, second_moment_oracle, GmcParams, ProbeSampler};
use crate::lqg::{
    check_bounds, expectation_under_rho, negative_nu_lower_bound, zero_mode_gamma_check, BumpFamily, LqgParams,
    Observable, RhoSample, SeibergReport,
};
use crate::rng::{replicate, RngStream};
use crate::spectral::{
    enumerate_modes_capped, green_log_comparison, sigma_n, weyl_ratio, GridTransform, Point, SpectralBasis,
    TorusGeometry, RESOLUTION_FACTOR,
};
use crate::stats::mean_estimate;

pub(crate) struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub provenance: Provenance,
    pub stream: RngStream,
}

#[derive(Default)]
pub(crate) struct Outcome {
    pub pass: bool,
    pub estimates: Vec<EstimateRecord>,
    pub details: serde_json::Value,
    pub seiberg: Option<SeibergReport>,
    pub ess: Option<f64>,
    pub series: Vec<CsvSeries>,
    pub manifest_extra: serde_json::Value,
}

/// Probe points used when the configuration lists none.
const DEFAULT_PROBES: [Point; 3] = [Point::new(1.0, 2.0), Point::new(4.0, 2.5), Point::new(2.5, 5.0)];

const GFF_PROBES: usize = 20;

fn basis(cfg: &ExperimentConfig) -> Result<(TorusGeometry, Arc<SpectralBasis>)> {
    let geo = cfg.geometry.torus()?;
    let b = enumerate_modes_capped(geo, cfg.geometry.cutoff, cfg.geometry.mode_cap)?;
    Ok((geo, Arc::new(b)))
}

fn probes(cfg: &ExperimentConfig) -> Vec<Point> {
    if cfg.gmc.probes.is_empty() {
        DEFAULT_PROBES.to_vec()
    } else {
        cfg.gmc.probes.clone()
    }
}

fn gmc_params(cfg: &ExperimentConfig) -> GmcParams {
    let mut p = GmcParams::new(cfg.gmc.beta, cfg.gmc.n)
        .with_smoothing(cfg.gmc.smoothing)
        .with_normalization(cfg.gmc.normalization);
    p.allow_beyond_l2 = cfg.override_seiberg;
    p
}

fn lqg_params(cfg: &ExperimentConfig) -> Result<LqgParams> {
    let mut p = LqgParams::new(
        cfg.gmc.beta,
        cfg.lqg.nu,
        cfg.lqg.puncture_set()?,
        cfg.gmc.n,
        cfg.lqg.euler_char,
    )?;
    p.smoothing = cfg.gmc.smoothing;
    Ok(p)
}

fn seiberg_gate(cfg: &ExperimentConfig, params: &LqgParams) -> Result<SeibergReport> {
    let report = check_bounds(params);
    if !report.all_hold() {
        if cfg.override_seiberg {
            log::warn!(
                "admissibility bounds fail ({}); continuing on override",
                report.failures().join("; ")
            );
        } else {
            report.require()?;
        }
    }
    Ok(report)
}

fn resolution(cfg: &ExperimentConfig, basis: &SpectralBasis) -> usize {
    cfg.gmc
        .resolution
        .unwrap_or_else(|| GridTransform::min_resolution(basis))
}

fn within_z(e: &EstimateRecord, bound: f64) -> bool {
    e.z_score.is_none_or(|z| z.abs() < bound)
}

pub(crate) fn spectrum(ctx: &Context) -> Result<Outcome> {
    let (geo, basis) = basis(ctx.config)?;
    let cutoff = ctx.config.geometry.cutoff;
    let ratio = weyl_ratio(&basis)?;
    let target = geo.area() / (4.0 * PI);
    let count_ratio = basis.dim() as f64 / (cutoff * cutoff);
    let pass = (ratio / target - 1.0).abs() <= 0.02 && (count_ratio / target - 1.0).abs() <= 0.02;
    let mut series = CsvSeries::new("spectrum.csv", &["index", "k1", "k2", "eigenvalue"]);
    for (n, (k, l)) in basis.modes().iter().zip(basis.eigenvalues()).enumerate() {
        series.push(vec![n.to_string(), k.k1.to_string(), k.k2.to_string(), num(*l)]);
    }
    Ok(Outcome {
        pass,
        estimates: vec![
            EstimateRecord::exact("weyl_ratio", ratio, &ctx.provenance),
            EstimateRecord::exact("count_over_cutoff2", count_ratio, &ctx.provenance),
        ],
        details: json!({
            "dim": basis.dim(),
            "weyl_ratio": ratio,
            "weyl_target": target,
            "count_over_cutoff2": count_ratio,
            "tolerance": 0.02,
        }),
        series: vec![series],
        ..Default::default()
    })
}

struct CovProbe {
    n1: f64,
    n2: f64,
    lag: f64,
    x1: Point,
    x2: Point,
    a: Vec<f64>,
    bd: Vec<f64>,
    ba: Vec<f64>,
}

pub(crate) fn gff_covariance(ctx: &Context) -> Result<Outcome> {
    let (geo, basis) = basis(ctx.config)?;
    let n_max = basis.cutoff() / RESOLUTION_FACTOR;
    if n_max < 1.0 {
        return Err(Error::Config(format!(
            "cutoff {} resolves no smoothing scale N >= 1",
            basis.cutoff()
        )));
    }
    let mut rng = ctx.stream.child(0).rng();
    let side = geo.side_length();
    let dim = basis.dim();
    let mut probes = Vec::with_capacity(GFF_PROBES);
    for _ in 0..GFF_PROBES {
        let n1 = 1.0 + (n_max - 1.0) * rng.uniform();
        let n2 = 1.0 + (n_max - 1.0) * rng.uniform();
        let lag = 0.5 * rng.uniform();
        let x1 = Point::new(side * rng.uniform(), side * rng.uniform());
        let x2 = Point::new(side * rng.uniform(), side * rng.uniform());
        let prop = OuPropagator::new(&basis, lag)?;
        let l = basis.eigenvalues();
        let mut a = vec![0.0; dim];
        let mut bd = vec![0.0; dim];
        let mut ba = vec![0.0; dim];
        for i in 1..dim {
            a[i] = (-l[i] / (n1 * n1)).exp() * basis.basis_value(i, x1);
            let b = (-l[i] / (n2 * n2)).exp() * basis.basis_value(i, x2);
            bd[i] = b * prop.decay()[i];
            ba[i] = b * prop.amplitude()[i];
        }
        probes.push(CovProbe {
            n1,
            n2,
            lag,
            x1,
            x2,
            a,
            bd,
            ba,
        });
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let rows = replicate(ctx.stream.child(1), ctx.config.mc.replicas, |_, rng| {
        let mut x0 = vec![0.0; dim];
        fill_gff(&basis, rng, &mut x0);
        let mut xi = vec![0.0; dim];
        rng.fill_normal(&mut xi);
        Ok(probes
            .iter()
            .map(|p| dot(&p.a, &x0) * (dot(&p.bd, &x0) + dot(&p.ba, &xi)))
            .collect::<Vec<f64>>())
    })?;
    let mut estimates = Vec::with_capacity(GFF_PROBES);
    let mut series = CsvSeries::new(
        "gff_covariance.csv",
        &[
            "probe",
            "n1",
            "n2",
            "lag",
            "x1",
            "x2",
            "estimate",
            "std_error",
            "oracle",
            "z_score",
        ],
    );
    for (j, p) in probes.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let oracle = covariance_oracle(&basis, p.n1, p.n2, 0.0, p.lag, p.x1, p.x2)?;
        let rec = EstimateRecord::from_estimate(format!("covariance[{j}]"), &mean_estimate(&vals), &ctx.provenance)
            .with_oracle(oracle);
        series.push(vec![
            j.to_string(),
            num(p.n1),
            num(p.n2),
            num(p.lag),
            p.x1.to_string(),
            p.x2.to_string(),
            num(rec.value),
            num(rec.std_error),
            num(oracle),
            num(rec.z_score.unwrap_or(0.0)),
        ]);
        estimates.push(rec);
    }
    let pass = estimates.iter().all(|e| within_z(e, 3.0));
    Ok(Outcome {
        pass,
        estimates,
        details: json!({ "probes": GFF_PROBES, "dim": dim, "z_bound": 3.0 }),
        series: vec![series],
        ..Default::default()
    })
}

pub(crate) fn gmc_moments(ctx: &Context) -> Result<Outcome> {
    let (_, basis) = basis(ctx.config)?;
    let params = gmc_params(ctx.config);
    let punctures = ctx.config.lqg.puncture_set()?;
    let pts = probes(ctx.config);
    let sampler = ProbeSampler::new(Arc::clone(&basis), &params, &punctures, &pts)?;
    let k = pts.len();
    let rows = replicate(ctx.stream.child(0), ctx.config.mc.replicas, |_, rng| {
        let mut c = vec![0.0; basis.dim()];
        fill_gff(&basis, rng, &mut c);
        let mut theta = vec![0.0; k];
        sampler.theta(&c, &mut theta);
        Ok(theta)
    })?;
    let mut estimates = Vec::new();
    let mut series = CsvSeries::new(
        "gmc_moments.csv",
        &["moment", "points", "estimate", "std_error", "oracle", "z_score"],
    );
    for (j, &y) in pts.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let oracle = mean_oracle(&basis, &params, &punctures, y)?;
        let rec = EstimateRecord::from_estimate(format!("mean({y})"), &mean_estimate(&vals), &ctx.provenance)
            .with_oracle(oracle);
        series.push(vec![
            "mean".into(),
            y.to_string(),
            num(rec.value),
            num(rec.std_error),
            num(oracle),
            num(rec.z_score.unwrap_or(0.0)),
        ]);
        estimates.push(rec);
    }
    for j in 0..k.saturating_sub(1) {
        let (y1, y2) = (pts[j], pts[j + 1]);
        let vals: Vec<f64> = rows.iter().map(|r| r[j] * r[j + 1]).collect();
        let oracle = second_moment_oracle(&basis, &params, &punctures, y1, y2)?;
        let rec = EstimateRecord::from_estimate(
            format!("second_moment({y1};{y2})"),
            &mean_estimate(&vals),
            &ctx.provenance,
        )
        .with_oracle(oracle);
        series.push(vec![
            "second".into(),
            format!("{y1};{y2}"),
            num(rec.value),
            num(rec.std_error),
            num(oracle),
            num(rec.z_score.unwrap_or(0.0)),
        ]);
        estimates.push(rec);
    }
    let pass = estimates.iter().all(|e| within_z(e, 3.0));
    Ok(Outcome {
        pass,
        estimates,
        details: json!({ "gmc": params, "punctures": punctures, "dim": basis.dim(), "z_bound": 3.0 }),
        series: vec![series],
        ..Default::default()
    })
}

/// Distances at which the log-subtracted Green function is compared.
const GREEN_DISTANCES: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

pub(crate) fn green(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let geo = cfg.geometry.torus()?;
    let fine = enumerate_modes_capped(geo, cfg.geometry.cutoff, cfg.geometry.mode_cap)?;
    let coarse = enumerate_modes_capped(geo, cfg.geometry.cutoff / 2.0, cfg.geometry.mode_cap)?;
    let x = Point::new(1.0, 1.0);
    let mut estimates = Vec::new();
    let mut series = CsvSeries::new(
        "green.csv",
        &["distance", "remainder_coarse", "remainder_fine", "difference"],
    );
    let mut max_diff: f64 = 0.0;
    for d in GREEN_DISTANCES {
        let y = Point::new(x.x + d, x.y);
        let rc = green_log_comparison(&coarse, x, y)?.remainder;
        let rf = green_log_comparison(&fine, x, y)?.remainder;
        max_diff = max_diff.max((rf - rc).abs());
        series.push(vec![num(d), num(rc), num(rf), num(rf - rc)]);
        estimates.push(EstimateRecord::exact(format!("remainder(d={d})"), rf, &ctx.provenance));
    }
    let top = cfg.geometry.cutoff / (2.0 * RESOLUTION_FACTOR);
    let mut increments = Vec::new();
    for n in [top / 4.0, top / 2.0, top] {
        if n < 1.0 {
            continue;
        }
        let inc = sigma_n(&fine, 2.0 * n)? - sigma_n(&fine, n)?;
        increments.push(json!({ "n": n, "increment": inc }));
        estimates
            .push(EstimateRecord::exact(format!("sigma_increment(N={n})"), inc, &ctx.provenance).with_oracle(LN_2));
    }
    let inc_ok = increments
        .iter()
        .all(|v| (v["increment"].as_f64().unwrap_or(f64::NAN) - LN_2).abs() <= 0.02);
    Ok(Outcome {
        pass: max_diff < 0.05 && inc_ok && !increments.is_empty(),
        estimates,
        details: json!({
            "coarse_cutoff": coarse.cutoff(),
            "fine_cutoff": fine.cutoff(),
            "max_remainder_difference": max_diff,
            "remainder_tolerance": 0.05,
            "sigma_increments": increments,
            "increment_tolerance": 0.02,
        }),
        series: vec![series],
        ..Default::default()
    })
}

type BoxedObservable = Box<dyn Fn(&RhoSample<'_>) -> f64 + Sync>;

pub(crate) fn partition(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let params = lqg_params(cfg)?;
    let report = seiberg_gate(cfg, &params)?;
    let (geo, basis) = basis(cfg)?;
    let res = resolution(cfg, &basis);
    let s = params.gamma_shape();
    let gamma = zero_mode_gamma_check(params.beta, params.nu, params.charge_excess(), geo.area())?;
    let pts = probes(cfg);
    let one = |_: &RhoSample<'_>| 1.0;
    let tau = |r: &RhoSample<'_>| r.tau;
    let zero = |r: &RhoSample<'_>| r.zero_mode;
    let log_mass = |r: &RhoSample<'_>| r.mass.ln();
    let field_at: Vec<BoxedObservable> = pts
        .iter()
        .map(|&y| Box::new(move |r: &RhoSample<'_>| r.field.eval(y) + r.zero_mode) as BoxedObservable)
        .collect();
    let mut observables: Vec<Observable<'_>> = vec![&one, &tau, &zero, &log_mass];
    observables.extend(field_at.iter().map(|f| f.as_ref() as Observable<'_>));
    let mut names: Vec<String> = vec!["one".into(), "tau".into(), "zero_mode".into(), "log_mass".into()];
    names.extend(pts.iter().map(|y| format!("field({y})")));
    let rho = expectation_under_rho(
        &params,
        &basis,
        &observables,
        cfg.mc.replicas,
        ctx.stream.child(0),
        res,
        cfg.override_seiberg,
    )?;
    let mut estimates = Vec::new();
    for (name, e) in names.iter().zip(&rho.estimates) {
        let mut rec = EstimateRecord::from_estimate(name.clone(), e, &ctx.provenance);
        match name.as_str() {
            "one" => rec = rec.with_oracle(1.0),
            "tau" => rec = rec.with_oracle(s),
            _ => {}
        }
        estimates.push(rec);
    }
    let one_ok = (estimates[0].value - 1.0).abs() < 1e-12;
    let tau_ok = within_z(&estimates[1], 3.0);
    Ok(Outcome {
        pass: gamma.relative_error < 1e-8 && one_ok && tau_ok,
        estimates,
        details: json!({
            "lqg": params,
            "gamma_shape": s,
            "gamma_check": gamma,
            "ess_fraction": rho.ess_fraction,
            "resolution": res,
        }),
        seiberg: Some(report),
        ess: Some(rho.ess),
        ..Default::default()
    })
}

pub(crate) fn simulate(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let params = lqg_params(cfg)?;
    let report = seiberg_gate(cfg, &params)?;
    let (_, basis) = basis(cfg)?;
    let res = resolution(cfg, &basis);
    let solver = RemainderSolver::new(Arc::clone(&basis), &params, res)?;
    let d = &cfg.dynamics;
    let sim = solver.simulate(d.x_bar, d.dt, d.t_end, d.record_every, ctx.stream.child(0))?;
    let traj = &sim.trajectory;
    let mut coeffs = CsvSeries::new("trajectory.csv", &["time", "mode", "k1", "k2", "coefficient"]);
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        for (n, c) in snap.iter().enumerate() {
            let k = basis.mode(n);
            coeffs.push(vec![
                num(*t),
                n.to_string(),
                k.k1.to_string(),
                k.k2.to_string(),
                num(*c),
            ]);
        }
    }
    let mut diag = CsvSeries::new("diagnostics.csv", &["time", "theta_mass", "max_beta_v"]);
    for i in 0..traj.len() {
        diag.push(vec![
            num(traj.times[i]),
            num(traj.theta_mass[i]),
            num(traj.max_beta_v[i]),
        ]);
    }
    let pass = sim.guard_hits == 0 && sim.max_beta_v <= SIGN_TOLERANCE;
    Ok(Outcome {
        pass,
        estimates: vec![
            EstimateRecord::exact("max_beta_v", sim.max_beta_v, &ctx.provenance),
            EstimateRecord::exact("guard_hits", sim.guard_hits as f64, &ctx.provenance),
            EstimateRecord::exact("final_z", sim.z, &ctx.provenance),
        ],
        details: json!({
            "lqg": params,
            "resolution": res,
            "dim": basis.dim(),
            "sign_tolerance": SIGN_TOLERANCE,
        }),
        seiberg: Some(report),
        series: vec![coeffs, diag],
        manifest_extra: json!({
            "params": params,
            "seed": cfg.mc.seed,
            "dt": d.dt,
            "T": d.t_end,
            "snapshot_times": traj.times,
        }),
        ..Default::default()
    })
}

pub(crate) fn invariance(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let punctures = cfg.lqg.puncture_set()?;
    let gaussian = cfg.lqg.nu == 0.0 && punctures.is_empty();
    let seiberg = if gaussian {
        None
    } else {
        Some(seiberg_gate(cfg, &lqg_params(cfg)?)?)
    };
    let geo = cfg.geometry.torus()?;
    let mut gp = GalerkinParams::new(
        cfg.gmc.beta,
        cfg.lqg.nu,
        cfg.gmc.n,
        punctures,
        cfg.dynamics.galerkin_cutoff,
    );
    gp.resolution = cfg.gmc.resolution;
    let energy = GalerkinEnergy::new(geo, &gp)?;
    let observables: Vec<InvarianceObservable> = if gaussian {
        let mut v: Vec<InvarianceObservable> = (1..energy.basis().dim().min(5))
            .map(|mode| InvarianceObservable::CoefficientSquare { mode })
            .collect();
        v.push(InvarianceObservable::NonConstantNorm2);
        v
    } else {
        let mut v = vec![InvarianceObservable::MeanField];
        for &point in &probes(cfg) {
            v.push(InvarianceObservable::ProbeValue { point });
            v.push(InvarianceObservable::ProbeSquare { point });
        }
        v.push(InvarianceObservable::ThetaMass);
        v
    };
    let d = &cfg.dynamics;
    let ic = InvarianceConfig {
        dt: d.dt,
        t_end: d.t_end,
        replicas: cfg.mc.replicas,
        burn_in: d.burn_in,
        mala_dt: d.mala_dt,
        bias_replicas: d.bias_replicas,
    };
    let report = invariance_test(&energy, &observables, &ic, ctx.stream.child(0))?;
    let mut series = CsvSeries::new(
        "invariance.csv",
        &[
            "observable",
            "mean_t0",
            "mean_T",
            "se",
            "z_score",
            "dt_bias_band",
            "pass",
        ],
    );
    let mut estimates = Vec::new();
    for c in &report.comparisons {
        series.push(vec![
            c.observable.clone(),
            num(c.mean_t0.value),
            num(c.mean_t.value),
            num(c.se),
            num(c.z_score),
            num(c.dt_bias_band),
            c.pass.to_string(),
        ]);
        estimates.push(EstimateRecord::from_estimate(
            format!("{}@t0", c.observable),
            &c.mean_t0,
            &ctx.provenance,
        ));
        let mut rec = EstimateRecord::from_estimate(format!("{}@T", c.observable), &c.mean_t, &ctx.provenance);
        rec.z_score = Some(c.z_score);
        estimates.push(rec);
    }
    let comparisons: Vec<serde_json::Value> = report
        .comparisons
        .iter()
        .map(|c| {
            json!({
                "observable": c.observable,
                "mean_t0": c.mean_t0.value,
                "mean_T": c.mean_t.value,
                "se": c.se,
                "z_score": c.z_score,
                "dt_bias_band": c.dt_bias_band,
                "pass": c.pass,
            })
        })
        .collect();
    Ok(Outcome {
        pass: report.pass,
        estimates,
        details: json!({
            "galerkin_dim": energy.basis().dim(),
            "gaussian_case": gaussian,
            "mala_acceptance": report.mala_acceptance,
            "comparisons": comparisons,
        }),
        seiberg,
        series: vec![series],
        ..Default::default()
    })
}

/// Number of members of the bump family evaluated.
const BLOWUP_STEPS: usize = 20;

pub(crate) fn blowup(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config;
    let geo = cfg.geometry.torus()?;
    let family = BumpFamily::standard(geo)?;
    let mut series = CsvSeries::new("blowup.csv", &["m", "lower_bound"]);
    let mut bounds = Vec::with_capacity(BLOWUP_STEPS);
    for m in 1..=BLOWUP_STEPS {
        let b = negative_nu_lower_bound(cfg.gmc.beta, cfg.lqg.nu, m as f64, &family)?;
        series.push(vec![m.to_string(), num(b)]);
        bounds.push(b);
    }
    let increasing = bounds.windows(2).all(|w| w[1] > w[0]);
    let first_above = bounds.iter().position(|&b| b > 1e6).map(|i| i + 1);
    Ok(Outcome {
        pass: increasing && first_above.is_some(),
        estimates: bounds
            .iter()
            .enumerate()
            .map(|(i, &b)| EstimateRecord::exact(format!("lower_bound(m={})", i + 1), b, &ctx.provenance))
            .collect(),
        details: json!({
            "strictly_increasing": increasing,
            "first_step_above_1e6": first_above,
            "h1_norm2_unit": family.h1_norm2(),
        }),
        series: vec![series],
        ..Default::default()
    })
}
