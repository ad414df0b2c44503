use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};

/// Largest number of modes [`enumerate_modes`] will build.
pub const DEFAULT_MODE_CAP: usize = 4_000_000;

/// Flat square torus `[0, L)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGeometry {
    side_length: f64,
    area: f64,
}

impl TorusGeometry {
    pub fn new(side_length: f64) -> Result<Self> {
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(domain(format!("side length must be positive, got {side_length}")));
        }
        Ok(Self {
            side_length,
            area: side_length * side_length,
        })
    }

    /// The `2π` torus, where eigenvalues are the integers `|k|^2`.
    pub fn standard() -> Self {
        Self::new(2.0 * PI).unwrap()
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// `2π / L`; eigenvalue of mode `k` is `wavenumber^2 |k|^2`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.side_length
    }

    pub fn euler_characteristic(&self) -> i32 {
        0
    }

    pub fn scalar_curvature(&self) -> f64 {
        0.0
    }

    /// Minimal-image coordinate difference `a - b`.
    pub fn displacement(&self, a: Point, b: Point) -> (f64, f64) {
        let l = self.side_length;
        let wrap = |d: f64| d - l * (d / l).round();
        (wrap(a.x - b.x), wrap(a.y - b.y))
    }

    /// Geodesic distance of the flat metric.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let (dx, dy) = self.displacement(a, b);
        dx.hypot(dy)
    }

    pub fn wrap(&self, p: Point) -> Point {
        Point::new(p.x.rem_euclid(self.side_length), p.y.rem_euclid(self.side_length))
    }
}

/// A point of the torus, written `x,y` in configs and reports.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?},{:?}", self.x, self.y)
    }
}

impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!("expected a point `x,y`, got `{s}`")));
        };
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad coordinate `{t}` in `{s}`: {e}")))
        };
        Ok(Point::new(parse(a)?, parse(b)?))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Integer lattice vector labelling a Fourier mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub k1: i32,
    pub k2: i32,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { k1: 0, k2: 0 };

    pub const fn new(k1: i32, k2: i32) -> Self {
        Self { k1, k2 }
    }

    pub fn norm2(&self) -> i64 {
        let (a, b) = (self.k1 as i64, self.k2 as i64);
        a * a + b * b
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.k1, -self.k2)
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// Canonical half-lattice: carries the cosine of the `±k` pair, its
    /// negative carries the sine.
    pub fn is_positive(&self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }
}

/// Enumerated eigenmodes of `-Δ` up to a cutoff, with the real orthonormal
/// basis
///
/// * `φ_0 = V^{-1/2}`,
/// * `φ_k = (2/V)^{1/2} cos(κ k·x)` for `k` in the positive half-lattice,
/// * `φ_k = (2/V)^{1/2} sin(κ (-k)·x)` for its negative.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    geometry: TorusGeometry,
    cutoff: f64,
    modes: Vec<ModeIndex>,
    eigenvalues: Vec<f64>,
    max_index: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub side_length: f64,
    pub cutoff: f64,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
}

pub fn enumerate_modes(geometry: TorusGeometry, cutoff: f64) -> Result<SpectralBasis> {
    enumerate_modes_capped(geometry, cutoff, DEFAULT_MODE_CAP)
}

/// All modes with eigenvalue `≤ cutoff²`, sorted by eigenvalue with ties broken
/// lexicographically on `(k1, k2)`.
pub fn enumerate_modes_capped(geometry: TorusGeometry, cutoff: f64, cap: usize) -> Result<SpectralBasis> {
    if !(cutoff.is_finite() && cutoff >= 0.0) {
        return Err(domain(format!("cutoff must be finite and non-negative, got {cutoff}")));
    }
    let kappa = geometry.wavenumber();
    // Squared lattice radius, with a few ulps of slack so that exact lattice
    // shells on the boundary are kept.
    let r2 = (cutoff / kappa).powi(2) * (1.0 + 1e-12);
    if r2 > 1e15 {
        return Err(Error::Resource(format!(
            "cutoff {cutoff} is far beyond any enumerable range"
        )));
    }
    let r2_int = r2.floor() as i64;
    let kmax = (r2_int as f64).sqrt().floor() as i64;
    let k2_extent = |k1: i64| -> i64 {
        let rem = r2_int - k1 * k1;
        let mut e = (rem as f64).sqrt().floor() as i64;
        while e * e > rem {
            e -= 1;
        }
        while (e + 1) * (e + 1) <= rem {
            e += 1;
        }
        e
    };
    let count: u64 = (-kmax..=kmax).map(|k1| (2 * k2_extent(k1) + 1) as u64).sum();
    if count > cap as u64 {
        return Err(Error::Resource(format!(
            "cutoff {cutoff} yields {count} modes, above the cap of {cap}"
        )));
    }

    let mut modes = Vec::with_capacity(count as usize);
    for k1 in -kmax..=kmax {
        let e = k2_extent(k1);
        for k2 in -e..=e {
            modes.push(ModeIndex::new(k1 as i32, k2 as i32));
        }
    }
    modes.sort_unstable_by_key(|m| (m.norm2(), m.k1, m.k2));
    let k2f = kappa * kappa;
    let eigenvalues = modes.iter().map(|m| k2f * m.norm2() as f64).collect();
    let max_index = modes.iter().map(|m| m.k1.abs().max(m.k2.abs())).max().unwrap_or(0);
    Ok(SpectralBasis {
        geometry,
        cutoff,
        modes,
        eigenvalues,
        max_index,
    })
}

impl SpectralBasis {
    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, n: usize) -> ModeIndex {
        self.modes[n]
    }

    /// `λ_n^2`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.eigenvalues[n]
    }

    /// Largest `|k_i|` over all modes and both axes.
    pub fn max_index(&self) -> i32 {
        self.max_index
    }

    pub fn index_of(&self, k: ModeIndex) -> Option<usize> {
        let key = (k.norm2(), k.k1, k.k2);
        self.modes.binary_search_by_key(&key, |m| (m.norm2(), m.k1, m.k2)).ok()
    }

    /// `φ_n(p)`.
    pub fn basis_value(&self, n: usize, p: Point) -> f64 {
        let k = self.modes[n];
        let v = self.geometry.area;
        if k.is_zero() {
            return 1.0 / v.sqrt();
        }
        let kappa = self.geometry.wavenumber();
        let amp = (2.0 / v).sqrt();
        if k.is_positive() {
            amp * (kappa * (k.k1 as f64 * p.x + k.k2 as f64 * p.y)).cos()
        } else {
            amp * (-kappa * (k.k1 as f64 * p.x + k.k2 as f64 * p.y)).sin()
        }
    }

    /// `φ_n(p)` for every mode, in basis order.
    pub fn evaluate_all(&self, p: Point) -> Vec<f64> {
        (0..self.dim()).map(|n| self.basis_value(n, p)).collect()
    }

    pub fn summary(&self) -> BasisSummary {
        BasisSummary {
            side_length: self.geometry.side_length,
            cutoff: self.cutoff,
            dim: self.dim(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }
}

/// `n / λ_n^2` at the last enumerated index, which tends to `V / 4π`.
pub fn weyl_ratio(basis: &SpectralBasis) -> Result<f64> {
    weyl_ratio_from_eigenvalues(basis.eigenvalues())
}

pub fn weyl_ratio_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    if eigenvalues.len() < 2 {
        return Err(domain("Weyl ratio needs at least two eigenvalues"));
    }
    let n = eigenvalues.len() - 1;
    Ok(n as f64 / eigenvalues[n])
}
