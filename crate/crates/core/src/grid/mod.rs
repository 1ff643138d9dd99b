//! Uniform periodic grids, sampled functions and the spectral toolkit.
//!
//! A [`GridSpec`] discretizes the box `[-L/2, L/2)^n` (n = 1 or 2) with `N`
//! points per axis; node `i` sits at `-L/2 + i*h`, `h = L/N`. All transforms
//! use the angular convention `Ff(ξ) = ∫ f(x) e^{-i x·ξ} dx`, sampled at the
//! wavenumbers `ξ_k = 2πk/L`, so a discrete convolution
//! `h^n Σ_i f(x_i) g(x - x_i)` is exactly a product of sampled transforms.

mod cube;
mod io;
mod spectrum;

pub use cube::DyadicCube;
pub use io::{read_binary, read_csv, write_binary, write_csv};
pub use spectrum::Spectrum;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{param, Error, Result};

/// Largest per-axis resolution accepted for two-dimensional grids.
pub const MAX_POINTS_2D: usize = 256;

/// Smallest per-axis resolution accepted.
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    box_length: f64,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(dimension: usize, box_length: f64, points_per_axis: usize) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return param(format!("dimension must be 1 or 2, got {dimension}"));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return param(format!("box length must be positive, got {box_length}"));
        }
        if !points_per_axis.is_power_of_two() || points_per_axis < MIN_POINTS {
            return param(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {points_per_axis}"
            ));
        }
        if dimension == 2 && points_per_axis > MAX_POINTS_2D {
            return param(format!(
                "two-dimensional grids are limited to {MAX_POINTS_2D} points per axis"
            ));
        }
        Ok(Self {
            dimension,
            box_length,
            points_per_axis,
        })
    }

    /// One-dimensional grid; shorthand for `GridSpec::new(1, l, n)`.
    pub fn line(box_length: f64, points: usize) -> Result<Self> {
        Self::new(1, box_length, points)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing `h = L/N`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of one grid cell, `h^n`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Measure of the whole box, `L^n`.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dimension as i32)
    }

    /// Coordinate of node `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    /// All per-axis coordinates.
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coordinate(i)).collect()
    }

    /// Per-axis indices of a flat (row-major) sample index.
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        if self.dimension == 1 {
            [flat, 0]
        } else {
            [flat / self.points_per_axis, flat % self.points_per_axis]
        }
    }

    /// Position of a flat sample index; the second component is zero in 1-D.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(flat);
        if self.dimension == 1 {
            [self.coordinate(i), 0.0]
        } else {
            [self.coordinate(i), self.coordinate(j)]
        }
    }

    /// Signed integer frequency index of FFT slot `k`, in `[-N/2, N/2)`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular wavenumber `2πk/L` of FFT slot `k` along one axis.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.signed_index(k) as f64 / self.box_length
    }

    /// Largest representable angular wavenumber, `πN/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points_per_axis as f64 / self.box_length
    }

    /// Wavevector of a flat spectral index.
    pub fn frequency(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(flat);
        if self.dimension == 1 {
            [self.wavenumber(i), 0.0]
        } else {
            [self.wavenumber(i), self.wavenumber(j)]
        }
    }

    pub fn frequency_norm(&self, flat: usize) -> f64 {
        let [a, b] = self.frequency(flat);
        a.hypot(b)
    }

    /// Minimum-image displacement between two axis indices.
    pub fn axis_offset(&self, from: usize, to: usize) -> f64 {
        let n = self.points_per_axis as i64;
        let mut d = (to as i64 - from as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        d as f64 * self.spacing()
    }

    /// Periodic (minimum-image) distance between two samples.
    pub fn periodic_distance(&self, a: usize, b: usize) -> f64 {
        let [ai, aj] = self.axis_indices(a);
        let [bi, bj] = self.axis_indices(b);
        let dx = self.axis_offset(ai, bi);
        if self.dimension == 1 {
            dx.abs()
        } else {
            dx.hypot(self.axis_offset(aj, bj))
        }
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Complex samples of a function on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    samples: Vec<Complex64>,
    tag: Option<String>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != spec.len() {
            return param(format!(
                "expected {} samples, got {}",
                spec.len(),
                samples.len()
            ));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return param(format!("sample {i} is not finite"));
        }
        Ok(Self {
            spec,
            samples,
            tag: None,
        })
    }

    pub fn from_real(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(spec, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples a real function of position.
    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let samples = (0..spec.len())
            .map(|i| Complex64::new(f(spec.point(i)), 0.0))
            .collect();
        Self::trusted(spec, samples)
    }

    pub fn from_fn_complex(spec: GridSpec, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let samples = (0..spec.len()).map(|i| f(spec.point(i))).collect();
        Self::trusted(spec, samples)
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::trusted(spec, vec![Complex64::new(0.0, 0.0); spec.len()])
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self::trusted(spec, vec![Complex64::new(value, 0.0); spec.len()])
    }

    /// Discrete delta of unit mass at a flat index (a single sample `1/h^n`).
    pub fn delta(spec: GridSpec, at: usize) -> Self {
        let mut out = Self::zeros(spec);
        out.samples[at] = Complex64::new(1.0 / spec.cell_measure(), 0.0);
        out
    }

    pub(crate) fn trusted(spec: GridSpec, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), spec.len());
        debug_assert!(samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self {
            spec,
            samples,
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn re(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::trusted(self.spec, self.samples.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    /// Pointwise product with a real sample vector of matching length.
    pub fn mul_real(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.len() {
            return param("factor length does not match the grid");
        }
        Ok(Self::trusted(
            self.spec,
            self.samples
                .iter()
                .zip(factors)
                .map(|(z, &w)| z * w)
                .collect(),
        ))
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Self::trusted(
            self.spec,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::from_grid(self)
    }

    /// Circular convolution `h^n Σ_i f(x_i) g(x - x_i)`, evaluated spectrally.
    pub fn convolve(&self, other: &GridFunction) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(self.spectrum().multiply(&other.spectrum())?.to_grid())
    }

    /// Derivative `D^order f` by multiplication with `(iξ)^order`.
    ///
    /// Only meaningful for inputs that are band-limited relative to the
    /// grid; odd orders drop the Nyquist mode.
    pub fn spectral_derivative(&self, order: [u32; 2]) -> Self {
        if order == [0, 0] {
            return self.clone();
        }
        let spec = self.spec;
        let half = spec.points_per_axis() / 2;
        self.spectrum()
            .multiply_by(|flat| {
                let idx = spec.axis_indices(flat);
                let freq = spec.frequency(flat);
                let mut factor = Complex64::new(1.0, 0.0);
                for axis in 0..spec.dimension() {
                    let o = order[axis];
                    if o == 0 {
                        continue;
                    }
                    if o % 2 == 1 && idx[axis] == half {
                        return Complex64::new(0.0, 0.0);
                    }
                    factor *= Complex64::new(0.0, freq[axis]).powu(o);
                }
                factor
            })
            .to_grid()
    }

    /// Rectangle rule `h^n Σ Re(f)·w`; exact for grid-constant integrands.
    pub fn integrate(&self, weight: Option<&GridFunction>) -> Result<f64> {
        Ok(self.integrate_complex(weight)?.re)
    }

    pub fn integrate_complex(&self, weight: Option<&GridFunction>) -> Result<Complex64> {
        let dv = self.spec.cell_measure();
        match weight {
            None => Ok(self.samples.iter().sum::<Complex64>() * dv),
            Some(w) => {
                self.spec.ensure_same(&w.spec)?;
                if let Some(i) = w.samples.iter().position(|z| z.re < 0.0 || z.im != 0.0) {
                    return param(format!("weight sample {i} is not a nonnegative real"));
                }
                Ok(self
                    .samples
                    .iter()
                    .zip(&w.samples)
                    .map(|(f, w)| f * w.re)
                    .sum::<Complex64>()
                    * dv)
            }
        }
    }

    /// `(∫|f|²)^{1/2}` by the rectangle rule.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.cell_measure()).sqrt()
    }

    /// `∫|f|` by the rectangle rule.
    pub fn l1_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).sum::<f64>() * self.spec.cell_measure()
    }
}

/// Convenience constructor used throughout: `make_grid(n, L, N)`.
pub fn make_grid(dimension: usize, box_length: f64, points_per_axis: usize) -> Result<GridSpec> {
    GridSpec::new(dimension, box_length, points_per_axis)
}
