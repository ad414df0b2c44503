use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gmc::PunctureSet;
use crate::spectral::TorusGeometry;

/// The deterministic-plus-zero-mode part `z(t) = X̄ + B_0(t)/V + t Σa_ℓ/(2V)`
/// of the decomposition (the curvature term vanishes on the flat torus).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftZ {
    pub x_bar: f64,
    pub volume: f64,
    /// `Σ a_ℓ / (2V)`.
    pub rate: f64,
}

impl DriftZ {
    pub fn new(x_bar: f64, geometry: &TorusGeometry, punctures: &PunctureSet) -> Self {
        let volume = geometry.area();
        Self {
            x_bar,
            volume,
            rate: punctures.total_charge() / (2.0 * volume),
        }
    }

    /// `z(t)` given the current value of `B_0(t)/V`.
    pub fn value(&self, t: f64, bm_over_v: f64) -> f64 {
        self.x_bar + bm_over_v + t * self.rate
    }
}

/// Recorded values of `B_0(t)/V` on an increasing time grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroModePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ZeroModePath {
    pub fn starting_at_zero() -> Self {
        Self {
            times: vec![0.0],
            values: vec![0.0],
        }
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(domain(format!("path times must increase: {t} after {last}")));
            }
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Value at `t`, linear between recorded times.
    pub fn at(&self, t: f64) -> Result<f64> {
        let (Some(&t0), Some(&t1)) = (self.times.first(), self.times.last()) else {
            return Err(domain("empty zero-mode path"));
        };
        let eps = 1e-12 * (1.0 + t1.abs());
        if t < t0 - eps || t > t1 + eps {
            return Err(domain(format!("time {t} outside the recorded path [{t0}, {t1}]")));
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Ok(self.values[0]);
        }
        if k >= self.times.len() {
            return Ok(*self.values.last().unwrap());
        }
        let (a, b) = (self.times[k - 1], self.times[k]);
        let w = (t - a) / (b - a);
        Ok(self.values[k - 1] * (1.0 - w) + self.values[k] * w)
    }
}

pub fn drift_z(params: &DriftZ, t: f64, path: &ZeroModePath) -> Result<f64> {
    Ok(params.value(t, path.at(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmc::PunctureSet;
    use crate::spectral::Point;
    use std::f64::consts::PI;

    #[test]
    fn initial_value_and_no_drift() {
        let g = TorusGeometry::standard();
        let d = DriftZ::new(0.7, &g, &PunctureSet::empty());
        let mut path = ZeroModePath::starting_at_zero();
        path.push(5.0, 0.0).unwrap();
        assert_eq!(drift_z(&d, 0.0, &path).unwrap(), 0.7);
        assert_eq!(drift_z(&d, 3.0, &path).unwrap(), 0.7);
        assert!(drift_z(&d, 6.0, &path).is_err());
    }

    #[test]
    fn unit_puncture_rate() {
        let g = TorusGeometry::standard();
        let d = DriftZ::new(0.0, &g, &PunctureSet::single(Point::new(1.0, 1.0), 1.0));
        let mut path = ZeroModePath::starting_at_zero();
        path.push(1.0, 0.0).unwrap();
        let z = drift_z(&d, 1.0, &path).unwrap();
        assert!((z - 1.0 / (8.0 * PI * PI)).abs() < 1e-16);
    }
}
