mod common;

use std::sync::Arc;

use liouville_core::fields::fill_gff;
use liouville_core::gmc::{
    negative_moment_estimate, shift_coefficients, total_mass, ChaosField, GmcParams, ProbeSampler, Puncture,
    PunctureSet,
};
use liouville_core::rng::{replicate, RngStream};
use liouville_core::spectral::{enumerate_modes, GridTransform, Point, Smoothing, SpectralBasis, TorusGeometry};
use liouville_core::stats::mean_estimate;
use proptest::prelude::*;

fn basis(cutoff: f64) -> Arc<SpectralBasis> {
    Arc::new(enumerate_modes(TorusGeometry::standard(), cutoff).unwrap())
}

fn tuple(p: Point) -> (f64, f64) {
    (p.x, p.y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_is_strictly_positive(seed in any::<u64>(), beta in 0.1f64..1.4) {
        let b = basis(24.0);
        let chaos = ChaosField::new(
            Arc::clone(&b),
            &GmcParams::new(beta, 4.0),
            &PunctureSet::single(Point::new(1.0, 1.0), 0.5),
            GridTransform::min_resolution(&b),
        )
        .unwrap();
        let mut rng = RngStream::new(seed, 0).rng();
        let mut c = vec![0.0; b.dim()];
        fill_gff(&b, &mut rng, &mut c);
        let theta = chaos.theta(&c).unwrap();
        prop_assert!(theta.samples().iter().all(|&t| t > 0.0 && t.is_finite()));
    }
}

#[test]
fn unpunctured_chaos_has_unit_density_on_average() {
    let b = basis(48.0);
    let res = GridTransform::min_resolution(&b);
    let chaos = ChaosField::new(Arc::clone(&b), &GmcParams::new(0.8, 8.0), &PunctureSet::empty(), res).unwrap();
    let probe = (res / 3) * res + res / 5;
    let rows = replicate(RngStream::new(11, 0), 10_000, |_, rng| {
        let mut c = vec![0.0; b.dim()];
        fill_gff(&b, rng, &mut c);
        let theta = chaos.theta(&c)?;
        Ok((theta.samples()[probe], total_mass(&theta)))
    })
    .unwrap();
    let point = mean_estimate(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let mass = mean_estimate(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    assert!(point.z_score(1.0).abs() < 3.0, "{point:?}");
    assert!(mass.z_score(common::AREA).abs() < 3.0, "{mass:?}");
}

#[test]
fn punctured_mean_matches_lattice_oracle() {
    let b = basis(24.0);
    let (beta, n) = (0.8, 4.0);
    let x = Point::new(3.0, 3.0);
    let punctures = PunctureSet::single(x, 0.5);
    let mut pick = RngStream::new(12, 1).rng();
    let probes: Vec<Point> = (0..10)
        .map(|_| {
            Point::new(
                pick.uniform() * 2.0 * std::f64::consts::PI,
                pick.uniform() * 2.0 * std::f64::consts::PI,
            )
        })
        .collect();
    let sampler = ProbeSampler::new(Arc::clone(&b), &GmcParams::new(beta, n), &punctures, &probes).unwrap();
    let rows = replicate(RngStream::new(12, 0), 100_000, |_, rng| {
        let mut c = vec![0.0; b.dim()];
        fill_gff(&b, rng, &mut c);
        let mut out = vec![0.0; probes.len()];
        sampler.theta(&c, &mut out);
        Ok(out)
    })
    .unwrap();
    for (k, &y) in probes.iter().enumerate() {
        let e = mean_estimate(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
        let oracle = common::theta_mean(24.0, n, beta, &[(tuple(x), 0.5)], tuple(y));
        assert!(e.z_score(oracle).abs() < 3.5, "probe {y}: {e:?} vs {oracle}");
    }
}

#[test]
fn second_moment_matches_lattice_oracle() {
    let b = basis(24.0);
    let (beta, n) = (0.8, 4.0);
    let x = Point::new(1.0, 5.0);
    let punctures = PunctureSet::new(vec![Puncture::new(x, 0.5)]).unwrap();
    let pairs = [
        (Point::new(1.5, 5.0), Point::new(2.0, 4.5)),
        (Point::new(4.0, 1.0), Point::new(4.3, 1.2)),
        (Point::new(0.5, 0.5), Point::new(3.5, 3.5)),
    ];
    let probes: Vec<Point> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let sampler = ProbeSampler::new(Arc::clone(&b), &GmcParams::new(beta, n), &punctures, &probes).unwrap();
    let rows = replicate(RngStream::new(13, 0), 100_000, |_, rng| {
        let mut c = vec![0.0; b.dim()];
        fill_gff(&b, rng, &mut c);
        let mut out = vec![0.0; probes.len()];
        sampler.theta(&c, &mut out);
        Ok(out.chunks(2).map(|p| p[0] * p[1]).collect::<Vec<_>>())
    })
    .unwrap();
    for (k, (y1, y2)) in pairs.iter().enumerate() {
        let e = mean_estimate(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
        let oracle = common::theta_second_moment(24.0, n, beta, &[(tuple(x), 0.5)], tuple(*y1), tuple(*y2));
        assert!(e.z_score(oracle).abs() < 3.0, "{y1} {y2}: {e:?} vs {oracle}");
    }
}

fn shift_at(b: &SpectralBasis, n: f64, punctures: &PunctureSet, y: Point) -> f64 {
    let c = shift_coefficients(b, Smoothing::Heat, n, punctures, true);
    c.iter().enumerate().map(|(i, c)| c * b.basis_value(i, y)).sum()
}

#[test]
fn puncture_shift_follows_log_law() {
    let x = Point::new(2.0, 2.0);
    let a = 0.7;
    let punctures = PunctureSet::single(x, a);
    let coarse = basis(96.0);
    let fine = basis(192.0);
    for d in [0.25, 0.5, 1.0] {
        let y = Point::new(x.x + d, x.y);
        let s16 = shift_at(&coarse, 16.0, &punctures, y) + a * d.ln();
        let s32 = shift_at(&fine, 32.0, &punctures, y) + a * d.ln();
        assert!((s16 - s32).abs() < 0.1, "d = {d}: {s16} vs {s32}");
    }
    let near = shift_at(&fine, 32.0, &punctures, Point::new(x.x + 0.25, x.y));
    let far = shift_at(&fine, 32.0, &punctures, Point::new(x.x + 1.0, x.y));
    assert!((near - far - a * 4f64.ln()).abs() < 0.1, "{near} {far}");
}

#[test]
fn negative_moments_sit_above_jensen() {
    let b = basis(24.0);
    let params = GmcParams::new(0.8, 4.0);
    let c = Point::new(3.0, 3.0);
    let tiny = negative_moment_estimate(&b, &params, c, 1.0, 1e-9, 1000, RngStream::new(14, 0), 96).unwrap();
    assert!((tiny.estimate.value / tiny.jensen_bound - 1.0).abs() < 1e-8, "{tiny:?}");
    assert!(tiny.estimate.value >= tiny.jensen_bound * (1.0 - 1e-12));
    let unit = negative_moment_estimate(&b, &params, c, 1.0, 1.0, 2000, RngStream::new(14, 1), 96).unwrap();
    assert!(
        unit.estimate.value + 3.0 * unit.estimate.std_error >= unit.jensen_bound,
        "{unit:?}"
    );
    assert!((unit.ball_area - std::f64::consts::PI).abs() < 0.1);
}
