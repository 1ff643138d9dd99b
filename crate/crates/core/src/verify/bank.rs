//! Seeded test corpus: functions and exponent fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exponents::{log_weight, ExponentField, ExponentKind};
use crate::grid::{GridFunction, GridSpec};
use crate::lebesgue::ScaleLadder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    ModulatedGaussian,
    Weierstrass,
    SmoothedIndicator,
    BandLimitedNoise,
    Mixture,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub name: String,
    pub family: Family,
    /// Family parameters in generation order.
    pub parameters: Vec<f64>,
    /// Whether the spectrum vanishes beyond a fixed finite band.
    pub band_limited: bool,
}

/// Members are generated in a fixed order from one seed; every member is
/// real and evaluated in closed form, so the same entry can be resampled on
/// a refined grid.
#[derive(Clone, Debug)]
pub struct FunctionBank {
    pub seed: u64,
    pub entries: Vec<BankEntry>,
    pub functions: Vec<GridFunction>,
}

pub const WEIERSTRASS_SMOOTHNESS: [f64; 3] = [0.3, 0.5, 1.2];
pub const WEIERSTRASS_TERMS: i32 = 8;

fn weierstrass(x: f64, s: f64, base: f64) -> f64 {
    (1..=WEIERSTRASS_TERMS)
        .map(|j| (-(j as f64) * s).exp2() * ((j as f64).exp2() * base * x).cos())
        .sum()
}

/// Evaluates a bank entry on any grid.
pub fn sample_entry(entry: &BankEntry, spec: GridSpec) -> GridFunction {
    let l = spec.box_length();
    let p = entry.parameters.clone();
    let f: Box<dyn Fn(f64) -> f64> = match entry.family {
        Family::Gaussian => Box::new(move |x| (-(x - p[1]).powi(2) / (2.0 * p[0] * p[0])).exp()),
        Family::ModulatedGaussian => {
            Box::new(move |x| (-(x - p[2]).powi(2) / (2.0 * p[0] * p[0])).exp() * (p[1] * x + p[3]).cos())
        }
        Family::Weierstrass => {
            let base = 2.0 * PI / l;
            Box::new(move |x| weierstrass(x, p[0], base))
        }
        Family::SmoothedIndicator => {
            Box::new(move |x| 0.5 * (((x - p[0]) / p[2]).tanh() - ((x - p[1]) / p[2]).tanh()))
        }
        Family::BandLimitedNoise => {
            // p = [modes, a_1, b_1, a_2, b_2, ...] on wavenumbers 2πk/L
            let base = 2.0 * PI / l;
            Box::new(move |x| {
                let modes = p[0] as usize;
                (0..modes)
                    .map(|k| {
                        let w = base * (k + 1) as f64;
                        p[1 + 2 * k] * (w * x).cos() + p[2 + 2 * k] * (w * x).sin()
                    })
                    .sum()
            })
        }
        Family::Mixture => {
            let base = 2.0 * PI / l;
            Box::new(move |x| (-(x * x) / 2.0).exp() + p[1] * weierstrass(x, p[0], base))
        }
    };
    GridFunction::from_fn(spec, |[x, _]| f(x)).with_tag(entry.name.clone())
}

impl FunctionBank {
    /// The standard 20-member bank on a 1-D grid.
    pub fn generate(spec: GridSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut push = |name: String, family: Family, parameters: Vec<f64>, band_limited: bool| {
            entries.push(BankEntry {
                name,
                family,
                parameters,
                band_limited,
            })
        };
        for w in [0.5, 1.0, 2.0] {
            let c = rng.gen_range(-1.0..1.0);
            push(format!("gaussian_w{w}"), Family::Gaussian, vec![w, c], false);
        }
        for (i, omega) in [2.0, 6.0, 20.0].into_iter().enumerate() {
            let c = rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            push(
                format!("modulated_gaussian_{i}"),
                Family::ModulatedGaussian,
                vec![1.0, omega, c, phase],
                false,
            );
        }
        for s in WEIERSTRASS_SMOOTHNESS {
            push(format!("weierstrass_s{s}"), Family::Weierstrass, vec![s], true);
        }
        for (i, w) in [0.05, 0.2, 0.5].into_iter().enumerate() {
            let a = rng.gen_range(-4.0..-1.0);
            let b = rng.gen_range(1.0..4.0);
            push(
                format!("smoothed_indicator_{i}"),
                Family::SmoothedIndicator,
                vec![a, b, w],
                false,
            );
        }
        for (i, modes) in [8usize, 24, 64, 96].into_iter().enumerate() {
            let mut p = vec![modes as f64];
            for _ in 0..modes {
                p.push(rng.gen_range(-1.0..1.0));
                p.push(rng.gen_range(-1.0..1.0));
            }
            push(format!("band_limited_noise_{i}"), Family::BandLimitedNoise, p, true);
        }
        for (i, s) in [0.4, 0.8, 1.5, 0.6].into_iter().enumerate() {
            let amp = rng.gen_range(0.2..0.6);
            push(format!("mixture_{i}"), Family::Mixture, vec![s, amp], false);
        }
        let functions = entries.iter().map(|e| sample_entry(e, spec)).collect();
        Self {
            seed,
            entries,
            functions,
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// The same members sampled on another grid.
    pub fn resample(&self, spec: GridSpec) -> Self {
        Self {
            seed: self.seed,
            entries: self.entries.clone(),
            functions: self.entries.iter().map(|e| sample_entry(e, spec)).collect(),
        }
    }

    pub fn of_family(&self, family: Family) -> impl Iterator<Item = (&BankEntry, &GridFunction)> {
        self.entries
            .iter()
            .zip(&self.functions)
            .filter(move |(e, _)| e.family == family)
    }
}

/// Named exponent configuration.
#[derive(Clone, Debug)]
pub struct ExponentSet {
    pub name: String,
    pub alpha: ExponentField,
    pub p: ExponentField,
    pub q: ExponentField,
}

/// `0.5 + 0.3 sin(2πx/L)`.
pub fn sinusoidal_alpha(spec: GridSpec) -> Result<ExponentField> {
    let l = spec.box_length();
    ExponentField::from_fn(spec, ExponentKind::Alpha, Some(0.5), |[x, _]| {
        0.5 + 0.3 * (2.0 * PI * x / l).sin()
    })
}

/// `0.4 sin(2πx/L)`, changing sign across the box.
pub fn signed_alpha(spec: GridSpec) -> Result<ExponentField> {
    let l = spec.box_length();
    ExponentField::from_fn(spec, ExponentKind::Alpha, Some(0.0), |[x, _]| {
        0.4 * (2.0 * PI * x / l).sin()
    })
}

/// `2 + 0.5 sin(2πx/L)`.
pub fn sinusoidal_p(spec: GridSpec) -> Result<ExponentField> {
    let l = spec.box_length();
    ExponentField::from_fn(spec, ExponentKind::P, Some(2.0), |[x, _]| {
        2.0 + 0.5 * (2.0 * PI * x / l).sin()
    })
}

/// `q(t) = 2 + 1/log(e + 1/t)`, `q(0) = 2`.
pub fn log_decay_q(ladder: &ScaleLadder) -> Result<ExponentField> {
    ExponentField::q_on_ladder(ladder, 2.0, |t| 2.0 + 1.0 / log_weight(t))
}

/// Constant, sinusoidal and sign-changing configurations.
pub fn exponent_bank(spec: GridSpec, ladder: &ScaleLadder) -> Result<Vec<ExponentSet>> {
    Ok(vec![
        ExponentSet {
            name: "constant".into(),
            alpha: ExponentField::constant(spec, ExponentKind::Alpha, 0.5)?,
            p: ExponentField::constant(spec, ExponentKind::P, 2.0)?,
            q: ExponentField::constant_q(ladder, 2.0)?,
        },
        ExponentSet {
            name: "sinusoidal".into(),
            alpha: sinusoidal_alpha(spec)?,
            p: sinusoidal_p(spec)?,
            q: log_decay_q(ladder)?,
        },
        ExponentSet {
            name: "signed_alpha".into(),
            alpha: signed_alpha(spec)?,
            p: sinusoidal_p(spec)?,
            q: log_decay_q(ladder)?,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn bank_is_deterministic_and_resamplable() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let a = FunctionBank::generate(g, 7);
        let b = FunctionBank::generate(g, 7);
        assert_eq!(a.len(), 20);
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.functions, b.functions);
        let c = FunctionBank::generate(g, 8);
        assert_ne!(a.functions, c.functions);
        let fine = a.resample(make_grid(1, 16.0, 1024).unwrap());
        for (f, r) in a.functions.iter().zip(&fine.functions) {
            // coarse nodes are every other fine node
            assert_eq!(f.samples()[3], r.samples()[6]);
        }
        assert!(a.functions.iter().all(|f| f.max_abs() > 0.0));
    }

    #[test]
    fn exponent_bank_is_admissible() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let ladder = ScaleLadder::new(8, 4).unwrap();
        let sets = exponent_bank(g, &ladder).unwrap();
        assert_eq!(sets.len(), 3);
        assert!(sets[2].alpha.min() < 0.0 && sets[2].alpha.max() > 0.0);
        assert!(sets[1].p.min() >= 1.5 && sets[1].q.limit_value() == Some(2.0));
    }
}
