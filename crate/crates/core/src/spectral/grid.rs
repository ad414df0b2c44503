use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::basis::{Point, SpectralBasis};
use crate::error::{domain, Result};

/// Grids used for products of fields must resolve this many points per unit
/// of the largest mode index.
pub const PSEUDO_SPECTRAL_FACTOR: usize = 4;

/// Samples on the uniform `n × n` grid `x_{ij} = (i h, j h)`, `h = L / n`,
/// stored row-major in `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    resolution: usize,
    side_length: f64,
    samples: Vec<f64>,
}

impl GridField {
    pub fn new(resolution: usize, side_length: f64, samples: Vec<f64>) -> Result<Self> {
        if resolution == 0 || samples.len() != resolution * resolution {
            return Err(domain(format!(
                "grid of resolution {resolution} needs {} samples, got {}",
                resolution * resolution,
                samples.len()
            )));
        }
        Ok(Self {
            resolution,
            side_length,
            samples,
        })
    }

    pub fn constant(resolution: usize, side_length: f64, value: f64) -> Self {
        Self {
            resolution,
            side_length,
            samples: vec![value; resolution * resolution],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn spacing(&self) -> f64 {
        self.side_length / self.resolution as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.samples[i * self.resolution + j]
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        let h = self.spacing();
        Point::new(i as f64 * h, j as f64 * h)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Periodic trapezoid rule, `V · mean`.
    pub fn integral(&self) -> f64 {
        self.mean() * self.side_length * self.side_length
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            resolution: self.resolution,
            side_length: self.side_length,
            samples: self.samples.iter().map(|&x| f(x)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Constant,
    Cos { pos: usize, neg: usize },
    Sin { pos: usize, neg: usize },
}

/// FFT-backed map between basis coefficients and grid samples.
///
/// Evaluation at grid points is exact for any resolution (wavenumbers are
/// folded modulo `n`). Projection is the grid quadrature of `⟨g, φ_n⟩`, which
/// inverts evaluation for fields band-limited below the grid Nyquist mode.
pub struct GridTransform {
    basis: Arc<SpectralBasis>,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    slots: Vec<Slot>,
}

impl std::fmt::Debug for GridTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridTransform")
            .field("dim", &self.basis.dim())
            .field("resolution", &self.n)
            .finish()
    }
}

impl GridTransform {
    pub fn new(basis: Arc<SpectralBasis>, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(domain("grid resolution must be positive"));
        }
        let n = resolution;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let fold = |k: i32| (k as i64).rem_euclid(n as i64) as usize;
        let flat = |k1: i32, k2: i32| fold(k1) * n + fold(k2);
        let slots = basis
            .modes()
            .iter()
            .map(|m| {
                if m.is_zero() {
                    Slot::Constant
                } else if m.is_positive() {
                    Slot::Cos {
                        pos: flat(m.k1, m.k2),
                        neg: flat(-m.k1, -m.k2),
                    }
                } else {
                    Slot::Sin {
                        pos: flat(-m.k1, -m.k2),
                        neg: flat(m.k1, m.k2),
                    }
                }
            })
            .collect();
        Ok(Self {
            basis,
            n,
            forward,
            inverse,
            slots,
        })
    }

    /// Like [`GridTransform::new`] but refuses grids coarser than
    /// [`PSEUDO_SPECTRAL_FACTOR`] times the largest mode index.
    pub fn pseudo_spectral(basis: Arc<SpectralBasis>, resolution: usize) -> Result<Self> {
        let need = PSEUDO_SPECTRAL_FACTOR * basis.max_index().max(1) as usize;
        if resolution < need {
            return Err(domain(format!(
                "grid resolution {resolution} is below {need} (= {PSEUDO_SPECTRAL_FACTOR} x largest mode index)"
            )));
        }
        Self::new(basis, resolution)
    }

    /// Smallest admissible pseudo-spectral resolution for `basis`.
    pub fn min_resolution(basis: &SpectralBasis) -> usize {
        PSEUDO_SPECTRAL_FACTOR * basis.max_index().max(1) as usize
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    fn fft2(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        fft.process(buf);
        transpose(buf, n);
        fft.process(buf);
        transpose(buf, n);
    }

    pub fn to_grid(&self, coeffs: &[f64]) -> GridField {
        debug_assert_eq!(coeffs.len(), self.slots.len());
        let n = self.n;
        let v = self.basis.geometry().area();
        let c0 = 1.0 / v.sqrt();
        let half = 0.5 * (2.0 / v).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        for (slot, &c) in self.slots.iter().zip(coeffs) {
            match *slot {
                Slot::Constant => buf[0].re += c * c0,
                Slot::Cos { pos, neg } => {
                    buf[pos].re += half * c;
                    buf[neg].re += half * c;
                }
                Slot::Sin { pos, neg } => {
                    buf[pos].im -= half * c;
                    buf[neg].im += half * c;
                }
            }
        }
        self.fft2(&mut buf, &self.inverse);
        let samples = buf.into_iter().map(|z| z.re).collect();
        GridField {
            resolution: n,
            side_length: self.basis.geometry().side_length(),
            samples,
        }
    }

    /// Grid quadrature `(V/n²) Σ_j g_j φ_n(x_j)` for every mode.
    pub fn project(&self, grid: &GridField) -> Vec<f64> {
        assert_eq!(grid.resolution, self.n, "grid resolution mismatch");
        let n = self.n;
        let v = self.basis.geometry().area();
        let norm = 1.0 / (n * n) as f64;
        let mut buf: Vec<Complex64> = grid.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft2(&mut buf, &self.forward);
        let s0 = v.sqrt() * norm;
        let s1 = (2.0 * v).sqrt() * norm;
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Constant => s0 * buf[0].re,
                Slot::Cos { pos, .. } => s1 * buf[pos].re,
                Slot::Sin { pos, .. } => -s1 * buf[pos].im,
            })
            .collect()
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Grid samples of `f` at resolution `n` on a torus of side `side`.
#[cfg(test)]
pub(crate) fn sample_function(n: usize, side: f64, f: impl Fn(Point) -> f64) -> GridField {
    let h = side / n as f64;
    let mut samples = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            samples.push(f(Point::new(i as f64 * h, j as f64 * h)));
        }
    }
    GridField {
        resolution: n,
        side_length: side,
        samples,
    }
}
