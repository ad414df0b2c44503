//! Error bars and two-sample tests for Monte Carlo output.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
}

impl Estimate {
    /// `(value - oracle) / std_error`; infinite when the error bar is zero and
    /// the values differ.
    pub fn z_score(&self, oracle: f64) -> f64 {
        let d = self.value - oracle;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }

    /// `|a - b| / sqrt(se_a² + se_b²)`.
    pub fn joint_z(&self, other: &Estimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        let d = self.value - other.value;
        if se > 0.0 {
            d / se
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample mean with standard error `s / sqrt(n)`.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    Estimate {
        value: mean(xs),
        std_error: (variance(xs) / n as f64).sqrt(),
        replicas: n,
    }
}

/// Welch z statistic for the difference of means `mean(a) - mean(b)`.
pub fn two_sample_z(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 100 || b.len() < 100 {
        return Err(domain(format!(
            "two-sample z needs at least 100 values per series, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ea = mean_estimate(a);
    let eb = mean_estimate(b);
    Ok(ea.joint_z(&eb))
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(domain("KS test needs non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, kolmogorov_q(lambda)))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Self-normalized ratio `Σ w f / Σ w` with a delete-one jackknife error.
pub fn jackknife_ratio(weights: &[f64], values: &[f64]) -> Result<Estimate> {
    if weights.len() != values.len() || weights.is_empty() {
        return Err(domain("jackknife needs equally many weights and values"));
    }
    let sw: f64 = weights.iter().sum();
    let swf: f64 = weights.iter().zip(values).map(|(w, f)| w * f).sum();
    if !(sw > 0.0) {
        return Err(crate::Error::Numerical("all importance weights vanish".into()));
    }
    let value = swf / sw;
    let n = weights.len();
    let std_error = if n < 2 {
        0.0
    } else {
        let loo: Vec<f64> = weights
            .iter()
            .zip(values)
            .map(|(w, f)| {
                let d = sw - w;
                if d > 0.0 {
                    (swf - w * f) / d
                } else {
                    value
                }
            })
            .collect();
        let m = mean(&loo);
        let ss: f64 = loo.iter().map(|x| (x - m) * (x - m)).sum();
        ((n - 1) as f64 / n as f64 * ss).sqrt()
    };
    Ok(Estimate {
        value,
        std_error,
        replicas: n,
    })
}

/// `(Σ w)² / Σ w²`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Mean of a correlated series with the standard error from `batches`
/// non-overlapping batch means.
pub fn batch_means(xs: &[f64], batches: usize) -> Result<Estimate> {
    if batches < 2 || xs.len() < batches {
        return Err(domain(format!(
            "batch means needs at least 2 batches and one value per batch ({} values, {batches} batches)",
            xs.len()
        )));
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(size).take(batches).map(mean).collect();
    let e = mean_estimate(&means);
    Ok(Estimate {
        value: e.value,
        std_error: e.std_error,
        replicas: xs.len(),
    })
}

/// Two-sided normal p-value of a z statistic.
pub fn normal_p_value(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    2.0 * (1.0 - n.cdf(z.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0).rng();
        (0..n).map(|_| r.standard_normal()).collect()
    }

    #[test]
    fn identical_series_zero_z() {
        let a = normals(1, 500);
        assert_eq!(two_sample_z(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn shifted_series_large_z() {
        let a = normals(2, 500);
        let sd = variance(&a).sqrt();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0 * sd).collect();
        assert!(two_sample_z(&a, &b).unwrap().abs() > 5.0);
    }

    #[test]
    fn short_series_rejected() {
        assert!(two_sample_z(&[0.0; 99], &[0.0; 200]).is_err());
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let a = normals(3, 2000);
        let b = normals(4, 2000);
        let (_, p) = ks_two_sample(&a, &b).unwrap();
        assert!(p > 0.01);
        let c: Vec<f64> = b.iter().map(|x| x + 0.5).collect();
        let (_, p) = ks_two_sample(&a, &c).unwrap();
        assert!(p < 1e-6);
    }

    #[test]
    fn jackknife_unit_observable_exact() {
        let w = [0.3, 2.0, 1e-3, 7.0];
        let e = jackknife_ratio(&w, &[1.0; 4]).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn jackknife_equal_weights_matches_mean_se() {
        let f = normals(5, 300);
        let e = jackknife_ratio(&vec![1.0; 300], &f).unwrap();
        let m = mean_estimate(&f);
        assert!((e.value - m.value).abs() < 1e-12);
        assert!((e.std_error - m.std_error).abs() < 1e-10);
    }

    #[test]
    fn batch_means_on_iid() {
        let x = normals(6, 10_000);
        let b = batch_means(&x, 20).unwrap();
        assert!(b.value.abs() < 4.0 * b.std_error);
    }

    proptest! {
        #[test]
        fn ess_between_one_and_n(w in proptest::collection::vec(1e-6f64..1e3, 1..50)) {
            let ess = effective_sample_size(&w);
            prop_assert!(ess >= 1.0 - 1e-9 && ess <= w.len() as f64 + 1e-9);
        }

        #[test]
        fn std_error_non_negative(x in proptest::collection::vec(-1e3f64..1e3, 2..100)) {
            prop_assert!(mean_estimate(&x).std_error >= 0.0);
        }
    }
}
