use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridFunction, GridSpec};
use crate::error::Result;

type Plan = Arc<dyn Fft<f64>>;

fn plan(len: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized in-place DFT over every axis of a row-major buffer.
fn transform(spec: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = spec.points_per_axis();
    let fft = plan(n, inverse);
    // rows are contiguous
    fft.process(data);
    if spec.dimension() == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[i * n + j];
            }
            fft.process(&mut column);
            for i in 0..n {
                data[i * n + j] = column[i];
            }
        }
    }
}

/// Sign `(-1)^{k_1 + k_2}` that moves the transform origin to the box center.
fn center_sign(spec: &GridSpec, flat: usize) -> f64 {
    let [i, j] = spec.axis_indices(flat);
    if (i + j) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Samples of the continuous Fourier transform of a grid function,
/// `F̂_k ≈ ∫ f(x) e^{-i x·ξ_k} dx`, in FFT slot order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_grid(f: &GridFunction) -> Self {
        let spec = *f.spec();
        let mut values = f.samples().to_vec();
        transform(&spec, &mut values, false);
        let dv = spec.cell_measure();
        for (k, v) in values.iter_mut().enumerate() {
            *v *= dv * center_sign(&spec, k);
        }
        Self { spec, values }
    }

    /// Spectrum given directly by a multiplier on the wavevector grid.
    pub fn from_multiplier(spec: GridSpec, m: impl Fn(usize) -> Complex64) -> Self {
        Self {
            spec,
            values: (0..spec.len()).map(m).collect(),
        }
    }

    pub fn to_grid(&self) -> GridFunction {
        let spec = self.spec;
        let mut data: Vec<Complex64> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * center_sign(&spec, k))
            .collect();
        transform(&spec, &mut data, true);
        let scale = 1.0 / spec.volume();
        for v in data.iter_mut() {
            *v *= scale;
        }
        GridFunction::trusted(spec, data)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn multiply(&self, other: &Spectrum) -> Result<Spectrum> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Spectrum {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Multiplies by `m(flat index)`.
    pub fn multiply_by(&self, m: impl Fn(usize) -> Complex64) -> Spectrum {
        Spectrum {
            spec: self.spec,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| v * m(k))
                .collect(),
        }
    }

    /// Multiplies by a real radial multiplier `m(|ξ|)`.
    pub fn multiply_radial(&self, m: impl Fn(f64) -> f64) -> Spectrum {
        let spec = self.spec;
        Spectrum {
            spec,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| v * m(spec.frequency_norm(k)))
                .collect(),
        }
    }

    /// `(2π)^{-n} ∫|Ff|²`, discretized; equals `∫|f|²` by Parseval.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.spec.volume()
    }

    /// Energy weighted by a radial symbol, `(2π)^{-n} ∫ w(|ξ|)|Ff|²`.
    pub fn weighted_energy(&self, w: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| w(self.spec.frequency_norm(k)) * v.norm_sqr())
            .sum::<f64>()
            / self.spec.volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn round_trip_is_identity() {
        let g = make_grid(2, 6.0, 32).unwrap();
        let f = GridFunction::from_fn(g, |[x, y]| (x * 0.7).sin() * (-y * y).exp() + 0.1 * x);
        let back = f.spectrum().to_grid();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn gaussian_spectrum_matches_closed_form() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let f = GridFunction::from_fn(g, |[x, _]| (-x * x / 2.0).exp());
        let s = f.spectrum();
        for k in 0..g.len() {
            let xi = g.wavenumber(k);
            let expect = (2.0 * std::f64::consts::PI).sqrt() * (-xi * xi / 2.0).exp();
            assert!((s.values()[k].re - expect).abs() < 1e-10);
            assert!(s.values()[k].im.abs() < 1e-10);
        }
    }
}
