//! Radial resolutions of unity `FΦ(ξ) + ∫₀¹ Fφ(tξ) dt/t = 1`, local-mean
//! kernel pairs and the polynomial majorants `η_{t,m}`.
//!
//! The profile is a bump `b` in `z = log₂|ξ|` supported in `|z| < 1`, so
//! dilation in `t` is a shift in `z`.

use std::f64::consts::LN_2;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{write_binary, GridFunction, GridSpec, Spectrum};
use crate::lebesgue::ScaleLadder;
use crate::quadrature::gauss_legendre;

/// Cells of the cumulative profile table (and of the `c_b` quadrature).
pub const PROFILE_TABLE_CELLS: usize = 100_000;
/// Ladder refinement on which the identity residual is certified.
pub const VERIFY_NODES_PER_OCTAVE: usize = 64;
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// Fraction of `min(2^{V-1}, Nyquist)` treated as the resolved band.
pub const BAND_FRACTION: f64 = 0.9;

/// `b(z) = exp(-k/(1-z²))·(1 + skew·z)` for `|z| < 1`, zero otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub sharpness: f64,
    pub skew: f64,
}

impl BumpProfile {
    pub fn new(sharpness: f64, skew: f64) -> Result<Self> {
        if !(sharpness.is_finite() && sharpness > 0.0) {
            return param(format!("bump sharpness must be positive, got {sharpness}"));
        }
        if !(skew.abs() < 1.0) {
            return param(format!("bump skew must lie in (-1, 1), got {skew}"));
        }
        Ok(Self { sharpness, skew })
    }

    pub fn standard() -> Self {
        Self {
            sharpness: 1.0,
            skew: 0.0,
        }
    }

    /// A second, visibly different profile used for frame-independence checks.
    pub fn skewed() -> Self {
        Self {
            sharpness: 2.0,
            skew: 0.4,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z.abs() >= 1.0 {
            return 0.0;
        }
        (-self.sharpness / (1.0 - z * z)).exp() * (1.0 + self.skew * z)
    }

    pub fn id(&self) -> String {
        format!("bump(k={},skew={})", self.sharpness, self.skew)
    }
}

/// The four radial multipliers a frame provides. `Psi`/`BigPsi` are the
/// square roots of `Phi`/`BigPhi`, used as the analysis half of a
/// factorized identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Phi,
    BigPhi,
    Psi,
    BigPsi,
}

#[derive(Clone, Debug)]
pub struct CalderonFrame {
    spec: GridSpec,
    ladder: ScaleLadder,
    profile: BumpProfile,
    c_b: f64,
    /// `G(z_i) = (ln2/c_b)∫_{z_i}^1 b`, `z_i = -1 + 2i/cells`.
    table: Vec<f64>,
    residual: f64,
    working_residual: f64,
    band: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameHeader {
    pub id: String,
    pub profile: BumpProfile,
    pub octaves: u32,
    pub nodes_per_octave: usize,
    pub c_b: f64,
    pub residual: f64,
    pub residual_nodes_per_octave: usize,
    pub working_residual: f64,
    pub band: f64,
    pub grid: GridSpec,
}

impl CalderonFrame {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn ladder(&self) -> &ScaleLadder {
        &self.ladder
    }

    pub fn profile(&self) -> &BumpProfile {
        &self.profile
    }

    pub fn c_b(&self) -> f64 {
        self.c_b
    }

    /// Identity residual on the certification ladder.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Identity residual of the working ladder itself.
    pub fn working_residual(&self) -> f64 {
        self.working_residual
    }

    /// Upper end of the resolved band.
    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn id(&self) -> String {
        self.profile.id()
    }

    /// Same profile on another grid and ladder (the cumulative table is reused).
    pub fn rebuild(&self, spec: GridSpec, ladder: ScaleLadder) -> Result<Self> {
        let mut f = Self {
            spec,
            ladder,
            ..self.clone()
        };
        f.certify()?;
        Ok(f)
    }

    /// `Fφ(s) = b(log₂ s)/c_b` for `s = |ξ|`.
    pub fn phi_hat(&self, s: f64) -> f64 {
        if s <= 0.5 || s >= 2.0 {
            return 0.0;
        }
        self.profile.eval(s.log2()) / self.c_b
    }

    /// `FΦ(s) = ∫_s^∞ b(u)/c_b du/u`; exactly 1 on `s ≤ 1/2` and 0 on `s ≥ 2`.
    pub fn big_phi_hat(&self, s: f64) -> f64 {
        if s <= 0.5 {
            return 1.0;
        }
        if s >= 2.0 {
            return 0.0;
        }
        let z = s.log2();
        let cells = self.table.len() - 1;
        let dz = 2.0 / cells as f64;
        let pos = (z + 1.0) / dz;
        let i = (pos.floor() as usize).min(cells - 1);
        let u = pos - i as f64;
        let (g0, g1) = (self.table[i], self.table[i + 1]);
        let scale = -LN_2 / self.c_b * dz;
        let z0 = -1.0 + i as f64 * dz;
        let (d0, d1) = (
            scale * self.profile.eval(z0),
            scale * self.profile.eval(z0 + dz),
        );
        // cubic Hermite on the cell
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * g0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * g1
            + (u3 - u2) * d1
    }

    pub fn window_hat(&self, window: Window, s: f64) -> f64 {
        match window {
            Window::Phi => self.phi_hat(s),
            Window::BigPhi => self.big_phi_hat(s),
            Window::Psi => self.phi_hat(s).sqrt(),
            Window::BigPsi => self.big_phi_hat(s).max(0.0).sqrt(),
        }
    }

    /// `F^{-1}[F(window)(t·) Ff]` for a precomputed spectrum of `f`.
    pub fn apply(&self, f: &Spectrum, window: Window, t: f64) -> GridFunction {
        f.multiply_radial(|s| self.window_hat(window, t * s)).to_grid()
    }

    /// Spatial `window_t = t^{-n} window(·/t)`.
    pub fn synthesize(&self, window: Window, t: f64) -> GridFunction {
        let spec = self.spec;
        Spectrum::from_multiplier(spec, |k| {
            Complex64::new(self.window_hat(window, t * spec.frequency_norm(k)), 0.0)
        })
        .to_grid()
    }

    /// Spatial `φ_t`.
    pub fn synthesize_phi_t(&self, t: f64) -> Result<GridFunction> {
        if !(t > 0.0 && t <= 1.0) {
            return param(format!("scale t must lie in (0, 1], got {t}"));
        }
        Ok(self.synthesize(Window::Phi, t))
    }

    /// `max |FΦ(s) + Σ_k w_k Fφ(t_k s) - 1|` over the resolved band.
    pub fn identity_residual(&self, ladder: &ScaleLadder) -> f64 {
        let band = self.band;
        if band <= 0.25 {
            return 0.0;
        }
        // below s = 1/4 every term vanishes except FΦ = 1
        let per_octave = 2000.0;
        let count = ((band / 0.25).log2() * per_octave).ceil() as usize + 1;
        let mut worst: f64 = 0.0;
        for i in 0..count {
            let s = 0.25 * (band / 0.25).powf(i as f64 / (count - 1) as f64);
            let sum: f64 = ladder
                .nodes()
                .iter()
                .map(|n| n.weight * self.phi_hat(n.t * s))
                .sum();
            worst = worst.max((self.big_phi_hat(s) + sum - 1.0).abs());
        }
        worst
    }

    fn certify(&mut self) -> Result<()> {
        if self.ladder.nodes_per_octave() < 2 {
            return param("the ladder must have at least two nodes per octave");
        }
        self.band = BAND_FRACTION
            * ((self.ladder.octaves() as f64 - 1.0).exp2()).min(self.spec.nyquist());
        let fine = self
            .ladder
            .refined(VERIFY_NODES_PER_OCTAVE.max(self.ladder.nodes_per_octave()))?;
        self.residual = self.identity_residual(&fine);
        self.working_residual = self.identity_residual(&self.ladder.clone());
        if self.residual > RESIDUAL_TOLERANCE {
            return Err(Error::Construction(format!(
                "identity residual {:.3e} exceeds {RESIDUAL_TOLERANCE:e} on |ξ| <= {:.3} ({})",
                self.residual,
                self.band,
                self.profile.id()
            )));
        }
        Ok(())
    }

    pub fn header(&self) -> FrameHeader {
        FrameHeader {
            id: self.id(),
            profile: self.profile,
            octaves: self.ladder.octaves(),
            nodes_per_octave: self.ladder.nodes_per_octave(),
            c_b: self.c_b,
            residual: self.residual,
            residual_nodes_per_octave: VERIFY_NODES_PER_OCTAVE
                .max(self.ladder.nodes_per_octave()),
            working_residual: self.working_residual,
            band: self.band,
            grid: self.spec,
        }
    }

    /// Writes `frame.json` and the spectral samples of `Fφ` and `FΦ` (FFT
    /// slot order, stored as raw grid functions) into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = crate::json::to_string(&self.header())?;
        std::fs::write(dir.join("frame.json"), json)?;
        for (name, w) in [("phi_hat.vbgf", Window::Phi), ("big_phi_hat.vbgf", Window::BigPhi)] {
            let spec = self.spec;
            let values = (0..spec.len())
                .map(|k| Complex64::new(self.window_hat(w, spec.frequency_norm(k)), 0.0))
                .collect();
            let g = GridFunction::new(spec, values)?;
            let file = std::fs::File::create(dir.join(name))?;
            write_binary(&g, std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}

/// Normalizes the bump, tabulates `FΦ` and certifies the discretized identity.
pub fn build_resolution_of_unity(
    spec: GridSpec,
    ladder: ScaleLadder,
    profile: BumpProfile,
) -> Result<CalderonFrame> {
    let profile = BumpProfile::new(profile.sharpness, profile.skew)?;
    let cells = PROFILE_TABLE_CELLS;
    let dz = 2.0 / cells as f64;
    let (x, w) = gauss_legendre(8);
    let cell_integral = |i: usize| {
        let mid = -1.0 + (i as f64 + 0.5) * dz;
        x.iter()
            .zip(&w)
            .map(|(x, w)| w * profile.eval(mid + 0.5 * dz * x))
            .sum::<f64>()
            * 0.5
            * dz
    };
    let mut cumulative = vec![0.0; cells + 1];
    for i in (0..cells).rev() {
        cumulative[i] = cumulative[i + 1] + cell_integral(i);
    }
    let total = cumulative[0];
    let c_b = LN_2 * total;
    let table = cumulative.iter().map(|c| c / total).collect();
    let mut frame = CalderonFrame {
        spec,
        ladder,
        profile,
        c_b,
        table,
        residual: f64::NAN,
        working_residual: f64::NAN,
        band: 0.0,
    };
    frame.certify()?;
    Ok(frame)
}

/// `∫|f|` for a real band-limited grid function, accurate well beyond the
/// rectangle rule: the spectrum is zero-padded by `upsample`, the function is
/// interpolated by cubic Hermite pieces using its spectral derivative, and
/// `|·|` is integrated exactly on every piece (splitting at sign changes).
pub fn band_limited_l1(f: &GridFunction, upsample: usize) -> Result<f64> {
    let spec = *f.spec();
    if spec.dimension() != 1 {
        return Err(Error::Unsupported("band-limited L¹ is one-dimensional".into()));
    }
    if !upsample.is_power_of_two() {
        return param("upsampling factor must be a power of two");
    }
    let n = spec.points_per_axis();
    let fine = GridSpec::new(1, spec.box_length(), n * upsample)?;
    let coarse = f.spectrum();
    let padded = Spectrum::from_multiplier(fine, |k| {
        let j = fine.signed_index(k);
        if j.unsigned_abs() as usize >= n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            coarse.values()[j.rem_euclid(n as i64) as usize]
        }
    });
    let values = padded.to_grid();
    let deriv = padded
        .multiply_by(|k| Complex64::new(0.0, fine.wavenumber(k)))
        .to_grid();
    let h = fine.spacing();
    let a: Vec<f64> = values.re();
    let d: Vec<f64> = deriv.re();
    let m = a.len();
    let mut total = 0.0;
    for i in 0..m {
        let j = (i + 1) % m;
        let (f0, f1, d0, d1) = (a[i], a[j], d[i] * h, d[j] * h);
        // H(s) = c0 + c1 s + c2 s² + c3 s³ on s ∈ [0, 1]
        let c0 = f0;
        let c1 = d0;
        let c2 = -3.0 * f0 - 2.0 * d0 + 3.0 * f1 - d1;
        let c3 = 2.0 * f0 + d0 - 2.0 * f1 + d1;
        let prim = |s: f64| c0 * s + c1 * s * s / 2.0 + c2 * s.powi(3) / 3.0 + c3 * s.powi(4) / 4.0;
        let eval = |s: f64| c0 + s * (c1 + s * (c2 + s * c3));
        let mut cuts = vec![0.0];
        const PROBES: usize = 8;
        let mut prev = (0.0, eval(0.0));
        for p in 1..=PROBES {
            let s = p as f64 / PROBES as f64;
            let v = eval(s);
            if prev.1 * v < 0.0 {
                let (mut lo, mut hi) = (prev.0, s);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if eval(mid) * prev.1 > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
            prev = (s, v);
        }
        cuts.push(1.0);
        for w in cuts.windows(2) {
            total += (prim(w[1]) - prim(w[0])).abs() * h;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalMeanCertification {
    /// `min |Fk₀|` over `|ξ| < 2ε`.
    pub k0_min_on_ball: f64,
    /// `min |Fk|` over `ε/2 < |ξ| < 2ε`.
    pub k_min_on_annulus: f64,
    /// `|∫ x^β k|` for `|β| ≤ S`, in order of increasing `|β|`.
    pub moments: Vec<f64>,
    pub max_moment: f64,
}

/// Tolerance on the vanishing moments of `k`.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

/// `Fk₀(ξ) = e^{-|ξ|²/(2ε²)}` and `Fk(ξ) = |ξ|^{2m} e^{-|ξ|²/(2ε²)}`.
#[derive(Clone, Debug)]
pub struct LocalMeanPair {
    pub spec: GridSpec,
    /// Moment order `S ≥ -1`.
    pub moment_order: i32,
    pub m: u32,
    pub epsilon: f64,
    pub k0: GridFunction,
    pub k: GridFunction,
    pub certification: LocalMeanCertification,
}

impl LocalMeanPair {
    pub fn k0_hat(&self, s: f64) -> f64 {
        (-s * s / (2.0 * self.epsilon * self.epsilon)).exp()
    }

    pub fn k_hat(&self, s: f64) -> f64 {
        s.powi(2 * self.m as i32) * self.k0_hat(s)
    }

    /// `F^{-1}[Fk(t·) Ff]`.
    pub fn apply_k(&self, f: &Spectrum, t: f64) -> GridFunction {
        f.multiply_radial(|s| self.k_hat(t * s)).to_grid()
    }

    pub fn apply_k0(&self, f: &Spectrum) -> GridFunction {
        f.multiply_radial(|s| self.k0_hat(s)).to_grid()
    }

    pub fn id(&self) -> String {
        format!("local_mean(S={},m={},eps={})", self.moment_order, self.m, self.epsilon)
    }
}

fn multi_indices(dimension: usize, order: usize) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for total in 0..=order as u32 {
        if dimension == 1 {
            out.push([total, 0]);
        } else {
            for a in (0..=total).rev() {
                out.push([a, total - a]);
            }
        }
    }
    out
}

/// Builds and certifies the Gaussian local-mean pair with moments vanishing
/// through order `S` (`2m ≥ S + 1`).
pub fn build_local_mean_pair(spec: GridSpec, moment_order: i32, epsilon: f64) -> Result<LocalMeanPair> {
    if moment_order < -1 {
        return param(format!("moment order must be >= -1, got {moment_order}"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return param("epsilon must be positive");
    }
    if 8.0 * epsilon > spec.nyquist() || 8.0 / epsilon > 0.5 * spec.box_length() {
        return param(format!(
            "epsilon {epsilon} is not resolved by the grid (needs 8ε <= Nyquist and 8/ε <= L/2)"
        ));
    }
    let m = ((moment_order + 1).max(0) as u32).div_ceil(2);
    let mut pair = LocalMeanPair {
        spec,
        moment_order,
        m,
        epsilon,
        k0: GridFunction::zeros(spec),
        k: GridFunction::zeros(spec),
        certification: LocalMeanCertification {
            k0_min_on_ball: 0.0,
            k_min_on_annulus: 0.0,
            moments: vec![],
            max_moment: 0.0,
        },
    };
    let real = |f: &dyn Fn(f64) -> f64| {
        Spectrum::from_multiplier(spec, |k| Complex64::new(f(spec.frequency_norm(k)), 0.0)).to_grid()
    };
    pair.k0 = real(&|s| pair.k0_hat(s));
    pair.k = real(&|s| pair.k_hat(s));

    let probes = 4001;
    let mut ball = f64::INFINITY;
    let mut annulus = f64::INFINITY;
    for i in 0..probes {
        let u = i as f64 / (probes - 1) as f64;
        ball = ball.min(pair.k0_hat(2.0 * epsilon * u).abs());
        let s = 0.5 * epsilon * (4f64).powf(u);
        annulus = annulus.min(pair.k_hat(s).abs());
    }
    let mut moments = Vec::new();
    if moment_order >= 0 {
        for beta in multi_indices(spec.dimension(), moment_order as usize) {
            let xb = GridFunction::from_fn(spec, |[x, y]| x.powi(beta[0] as i32) * y.powi(beta[1] as i32));
            let xb = GridFunction::from_real(spec, xb.re())?;
            moments.push(pair.k.mul_real(&xb.re())?.integrate(None)?.abs());
        }
    }
    let max_moment = moments.iter().cloned().fold(0.0, f64::max);
    pair.certification = LocalMeanCertification {
        k0_min_on_ball: ball,
        k_min_on_annulus: annulus,
        moments,
        max_moment,
    };
    if !(ball > 0.0 && annulus > 0.0) || max_moment > MOMENT_TOLERANCE {
        return Err(Error::Construction(format!(
            "local-mean certification failed: ball {ball:e}, annulus {annulus:e}, moment {max_moment:e}"
        )));
    }
    Ok(pair)
}

/// `η_{t,m}(x) = t^{-n}(1 + |x|/t)^{-m}`, with `|x|` measured from the box center.
pub fn eta_kernel(spec: GridSpec, t: f64, m: f64) -> Result<GridFunction> {
    let n = spec.dimension() as f64;
    if m <= n {
        return param(format!("η_(t,m) needs m > n, got m = {m}"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return param("η scale must be positive");
    }
    Ok(GridFunction::from_fn(spec, |[x, y]| {
        t.powf(-n) * (1.0 + x.hypot(y) / t).powf(-m)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn default_frame(profile: BumpProfile) -> CalderonFrame {
        let g = make_grid(1, 16.0, 4096).unwrap();
        build_resolution_of_unity(g, ScaleLadder::new(8, 4).unwrap(), profile).unwrap()
    }

    #[test]
    fn frame_support_and_origin() {
        let f = default_frame(BumpProfile::standard());
        assert_eq!(f.big_phi_hat(0.0), 1.0);
        for s in [2.0, 2.5, 100.0] {
            assert_eq!(f.big_phi_hat(s), 0.0);
            assert_eq!(f.phi_hat(s), 0.0);
        }
        assert_eq!(f.phi_hat(0.5), 0.0);
        assert!(f.residual() <= 1e-8, "residual {}", f.residual());
        // FΦ is continuous at both ends of its transition
        assert!((f.big_phi_hat(0.5 + 1e-9) - 1.0).abs() < 1e-12);
        assert!(f.big_phi_hat(2.0 - 1e-9).abs() < 1e-12);
    }

    #[test]
    fn both_profiles_certify() {
        for p in [BumpProfile::standard(), BumpProfile::skewed()] {
            let f = default_frame(p);
            assert!(f.residual() <= RESIDUAL_TOLERANCE);
            // the working ladder itself is coarse
            assert!(f.working_residual() > f.residual());
        }
    }

    #[test]
    fn continuous_identity_by_quadrature() {
        // ∫₀^∞ Fφ(ts) dt/t = 1 for any s > 0, checked with an independent rule
        let f = default_frame(BumpProfile::skewed());
        for s in [0.3, 1.0, 7.5] {
            let v = crate::quadrature::integrate(
                |lt: f64| f.phi_hat(lt.exp() * s),
                (0.5f64 / s).ln(),
                (2.0f64 / s).ln(),
                200,
                10,
            );
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn phi_t_has_zero_mean_and_annulus_support() {
        let f = default_frame(BumpProfile::standard());
        for t in [1.0, 0.25, 1.0 / 16.0] {
            let p = f.synthesize_phi_t(t).unwrap();
            assert!(p.integrate(None).unwrap().abs() < 1e-12);
            let s = p.spectrum();
            for (k, v) in s.values().iter().enumerate() {
                let xi = f.spec().frequency_norm(k);
                if xi * t <= 0.5 || xi * t >= 2.0 {
                    assert!(v.norm() < 1e-12);
                }
            }
        }
        assert!(f.synthesize_phi_t(1.5).is_err());
    }

    #[test]
    fn phi_t_l1_is_scale_invariant() {
        let big = make_grid(1, 2048.0, 1 << 17).unwrap();
        let f = build_resolution_of_unity(big, ScaleLadder::new(8, 4).unwrap(), BumpProfile::standard())
            .unwrap();
        let m: Vec<f64> = [1.0, 0.25, 1.0 / 16.0]
            .iter()
            .map(|&t| band_limited_l1(&f.synthesize_phi_t(t).unwrap(), 2).unwrap())
            .collect();
        let spread = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - m.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread / m[0] < 1e-6, "{m:?}");
    }

    #[test]
    fn band_limited_l1_of_cosine() {
        // ∫|cos x| over one period of length 2π·k is 4k
        let g = make_grid(1, 8.0 * std::f64::consts::PI, 64).unwrap();
        let c = GridFunction::from_fn(g, |[x, _]| x.cos());
        let v = band_limited_l1(&c, 4).unwrap();
        assert!((v - 16.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn local_mean_pairs() {
        let g = make_grid(1, 16.0, 1024).unwrap();
        let p = build_local_mean_pair(g, -1, 1.0).unwrap();
        assert_eq!(p.m, 0);
        assert!(p.certification.moments.is_empty());
        let p = build_local_mean_pair(g, 1, 1.0).unwrap();
        assert_eq!(p.m, 1);
        assert!(p.certification.max_moment < 1e-10);
        let x2 = GridFunction::from_fn(g, |[x, _]| x * x);
        let second = p.k.mul_real(&x2.re()).unwrap().integrate(None).unwrap();
        assert!(second.abs() > 1e-3);
        let expect = (0.25f64 * (-0.125f64).exp()).min(4.0 * (-2.0f64).exp());
        assert!((p.certification.k_min_on_annulus - expect).abs() < 1e-12);
        assert!(build_local_mean_pair(g, -2, 1.0).is_err());
    }

    #[test]
    fn eta_kernel_mass() {
        let g = make_grid(1, 64.0, 1 << 20).unwrap();
        let m = 4.0;
        let e1 = eta_kernel(g, 1.0, m).unwrap();
        assert_eq!(e1.samples()[g.len() / 2].re, 1.0);
        let e64 = eta_kernel(g, 1.0 / 64.0, m).unwrap();
        assert_eq!(e64.samples()[g.len() / 2].re, 64.0);
        // box-truncated closed form 2/(m-1)·(1 - (1 + L/2)^{1-m})
        let exact = 2.0 / (m - 1.0) * (1.0 - 33f64.powf(1.0 - m));
        assert!((e1.l1_norm() - exact).abs() < 1e-6);
        assert!((e1.l1_norm() - e64.l1_norm()).abs() < 1e-4);
        assert!((e1.l1_norm() - 2.0 / (m - 1.0)).abs() < 1e-4);
        assert!(eta_kernel(g, 1.0, 1.0).is_err());
    }
}
