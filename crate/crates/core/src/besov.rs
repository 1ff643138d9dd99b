//! Scale profiles and the equivalent forms of the variable Besov norm:
//! the defining integral, its octave-blocked and `q(0)` variants, the
//! Peetre maximal form and the two local-mean forms.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exponents::{Axis, ExponentField, ExponentKind};
use crate::frame::{CalderonFrame, LocalMeanPair, Window};
use crate::grid::{GridFunction, GridSpec, Spectrum};
use crate::lebesgue::{luxemburg_real, t_mixed_norm, t_norm, ScaleLadder, TForm};
use crate::quadrature::ls_slope;

/// Per-node values `‖t^{-α(·)}(φ_t∗f)‖_{p(·)}` (or a variant) with the
/// coarse-scale term kept separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub ladder: ScaleLadder,
    pub values: Vec<f64>,
    pub level0: f64,
}

impl ScaleProfile {
    pub fn t_values(&self) -> Vec<f64> {
        self.ladder.nodes().iter().map(|n| n.t).collect()
    }

    /// Least-squares slope of `log₂ value` against `log₂ t` over the nodes
    /// of octaves `lo..=hi`, skipping zero values.
    pub fn log_slope(&self, lo: u32, hi: u32) -> Result<f64> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (n, v) in self.ladder.nodes().iter().zip(&self.values) {
            if n.octave >= lo && n.octave <= hi && *v > 0.0 {
                x.push(n.t.log2());
                y.push(v.log2());
            }
        }
        if x.len() < 2 {
            return param("too few nonzero profile values for a slope");
        }
        Ok(ls_slope(&x, &y))
    }

    /// CSV `node,t,weight,value`; node `-1` carries the coarse-scale term.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "node,t,weight,value")?;
        writeln!(out, "-1,{:.16e},{:.16e},{:.16e}", 1.0, 0.0, self.level0)?;
        for (k, (n, v)) in self.ladder.nodes().iter().zip(&self.values).enumerate() {
            writeln!(out, "{k},{:.16e},{:.16e},{:.16e}", n.t, n.weight, v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormForm {
    Direct,
    Discretized,
    Q0,
    Peetre,
    LocalMeanPrime,
    LocalMeanDoublePrime,
}

impl NormForm {
    pub fn name(&self) -> &'static str {
        match self {
            NormForm::Direct => "direct",
            NormForm::Discretized => "discretized",
            NormForm::Q0 => "q0",
            NormForm::Peetre => "peetre",
            NormForm::LocalMeanPrime => "local_mean_prime",
            NormForm::LocalMeanDoublePrime => "local_mean_double_prime",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "direct" => NormForm::Direct,
            "discretized" => NormForm::Discretized,
            "q0" => NormForm::Q0,
            "peetre" => NormForm::Peetre,
            "local_mean_prime" | "local-prime" | "local_prime" => NormForm::LocalMeanPrime,
            "local_mean_double_prime" | "local-double-prime" | "local_double_prime" => {
                NormForm::LocalMeanDoublePrime
            }
            other => return param(format!("unknown norm form {other:?}")),
        })
    }
}

/// Parameters echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParameters {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q0: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub a: Option<f64>,
    pub kernel: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNormReport {
    pub form: NormForm,
    pub value: f64,
    pub profile: ScaleProfile,
    pub parameters: NormParameters,
    pub warnings: Vec<String>,
}

/// The exponent triple `(α, p, q)` of a Besov space.
#[derive(Clone, Copy, Debug)]
pub struct Exponents<'a> {
    pub alpha: &'a ExponentField,
    pub p: &'a ExponentField,
    pub q: &'a ExponentField,
}

impl<'a> Exponents<'a> {
    pub fn new(alpha: &'a ExponentField, p: &'a ExponentField, q: &'a ExponentField) -> Self {
        Self { alpha, p, q }
    }

    fn echo(&self, a: Option<f64>, kernel: String) -> NormParameters {
        NormParameters {
            alpha_min: self.alpha.min(),
            alpha_max: self.alpha.max(),
            p_min: self.p.min(),
            p_max: self.p.max(),
            q0: self.q.limit_value().unwrap_or(f64::NAN),
            q_min: self.q.min(),
            q_max: self.q.max(),
            a,
            kernel,
        }
    }
}

fn check_spatial(spec: &GridSpec, alpha: &ExponentField, p: &ExponentField) -> Result<()> {
    if alpha.kind() != ExponentKind::Alpha {
        return param("α must be an alpha-kind field");
    }
    if p.kind() != ExponentKind::P {
        return param("p must be a p-kind field");
    }
    for field in [alpha, p] {
        match field.axis() {
            Axis::Grid(g) => g.ensure_same(spec)?,
            Axis::Points(_) => {
                return Err(Error::GridMismatch("spatial exponent on a t-axis".into()))
            }
        }
    }
    Ok(())
}

/// `t^{-α(x)}|g(x)|` as a real array.
fn weighted_magnitude(g: &GridFunction, alpha: &ExponentField, t: f64) -> Vec<f64> {
    let lt = t.ln();
    g.samples()
        .iter()
        .zip(alpha.samples())
        .map(|(z, a)| z.norm() * (-a * lt).exp())
        .collect()
}

/// Peetre maximal function `max_y g(y)/(1 + d(x,y)/t)^a` with `d` the
/// periodic distance; an exact maximum over all grid nodes.
pub fn peetre_maximal(g: &[f64], spec: &GridSpec, t: f64, a: f64) -> Vec<f64> {
    let n = spec.points_per_axis();
    let h = spec.spacing();
    let half = n / 2;
    let table: Vec<f64> = (0..=half)
        .map(|d| (1.0 + d as f64 * h / t).powf(-a))
        .collect();
    let gmax = g.iter().cloned().fold(0.0, f64::max);
    if spec.dimension() == 1 {
        // scan outward from x; stop once no farther node can beat the best
        (0..n)
            .into_par_iter()
            .map(|x| {
                let mut best = g[x];
                for d in 1..=half {
                    let w = table[d];
                    if w * gmax <= best {
                        break;
                    }
                    let left = g[(x + n - d) % n];
                    let right = g[(x + d) % n];
                    best = best.max(left.max(right) * w);
                }
                best
            })
            .collect()
    } else {
        let support: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
        let l = spec.box_length();
        (0..g.len())
            .into_par_iter()
            .map(|x| {
                let [xi, xj] = spec.axis_indices(x);
                let mut best = 0.0f64;
                for &y in &support {
                    let [yi, yj] = spec.axis_indices(y);
                    let di = xi.abs_diff(yi).min(n - xi.abs_diff(yi)) as f64 * h;
                    let dj = xj.abs_diff(yj).min(n - xj.abs_diff(yj)) as f64 * h;
                    let d = di.hypot(dj).min(l);
                    best = best.max(g[y] * (1.0 + d / t).powf(-a));
                }
                best
            })
            .collect()
    }
}

/// How a scale piece `t ↦ K_t ∗ f` is produced.
trait Analyzer: Sync {
    fn coarse(&self, f: &Spectrum) -> GridFunction;
    fn band(&self, f: &Spectrum, t: f64) -> GridFunction;
}

impl Analyzer for CalderonFrame {
    fn coarse(&self, f: &Spectrum) -> GridFunction {
        self.apply(f, Window::BigPhi, 1.0)
    }
    fn band(&self, f: &Spectrum, t: f64) -> GridFunction {
        self.apply(f, Window::Phi, t)
    }
}

impl Analyzer for LocalMeanPair {
    fn coarse(&self, f: &Spectrum) -> GridFunction {
        self.apply_k0(f)
    }
    fn band(&self, f: &Spectrum, t: f64) -> GridFunction {
        self.apply_k(f, t)
    }
}

fn profile_with(
    f: &GridFunction,
    analyzer: &dyn Analyzer,
    ladder: &ScaleLadder,
    alpha: &ExponentField,
    p: &ExponentField,
    peetre: Option<f64>,
) -> Result<ScaleProfile> {
    let spec = *f.spec();
    check_spatial(&spec, alpha, p)?;
    let spectrum = f.spectrum();
    let finish = |mag: Vec<f64>, t: f64| -> Result<f64> {
        let mag = match peetre {
            Some(a) => peetre_maximal(&mag, &spec, t, a),
            None => mag,
        };
        Ok(luxemburg_real(&mag, p)?.value)
    };
    let coarse = analyzer.coarse(&spectrum);
    let level0 = finish(coarse.abs(), 1.0)?;
    let values = ladder
        .nodes()
        .par_iter()
        .map(|node| {
            let piece = analyzer.band(&spectrum, node.t);
            finish(weighted_magnitude(&piece, alpha, node.t), node.t)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScaleProfile {
        ladder: ladder.clone(),
        values,
        level0,
    })
}

/// `t_k ↦ ‖t_k^{-α(·)}(φ_{t_k}∗f)‖_{p(·)}` on the frame's ladder, with
/// `level0 = ‖Φ∗f‖_{p(·)}`.
pub fn lp_profile(
    f: &GridFunction,
    frame: &CalderonFrame,
    alpha: &ExponentField,
    p: &ExponentField,
) -> Result<ScaleProfile> {
    frame.spec().ensure_same(f.spec())?;
    profile_with(f, frame, frame.ladder(), alpha, p, None)
}

fn peetre_warning(a: f64, p: &ExponentField, spec: &GridSpec) -> Option<String> {
    let needed = spec.dimension() as f64 / p.min();
    (a <= needed).then(|| format!("Peetre exponent a = {a} does not exceed n/p⁻ = {needed}"))
}

/// Profile of Peetre maximal functions `(φ_t^{*,a} t^{-α} f)`; level 0 uses `Φ`.
pub fn peetre_profile(
    f: &GridFunction,
    frame: &CalderonFrame,
    alpha: &ExponentField,
    p: &ExponentField,
    a: f64,
) -> Result<ScaleProfile> {
    frame.spec().ensure_same(f.spec())?;
    if !(a > 0.0 && a.is_finite()) {
        return param("Peetre exponent must be positive");
    }
    profile_with(f, frame, frame.ladder(), alpha, p, Some(a))
}

fn scale_norm(profile: &ScaleProfile, q: &ExponentField, form: NormForm) -> Result<f64> {
    let tail = match form {
        NormForm::Q0 => t_norm(&profile.values, q, &profile.ladder, TForm::Q0)?,
        NormForm::Discretized => t_mixed_norm(&profile.values, q, &profile.ladder)?,
        _ => t_norm(&profile.values, q, &profile.ladder, TForm::Variable)?,
    };
    Ok(profile.level0 + tail)
}

/// Frame-based norm in the `direct`, `discretized`, `q0` or `peetre` form
/// (the Peetre form uses `a`, default 2).
pub fn besov_norm(
    f: &GridFunction,
    frame: &CalderonFrame,
    exps: Exponents,
    form: NormForm,
    a: Option<f64>,
) -> Result<BesovNormReport> {
    if exps.q.kind() != ExponentKind::QOfT {
        return param("q must be a q(t) field");
    }
    let mut warnings = Vec::new();
    let (profile, a) = match form {
        NormForm::Direct | NormForm::Discretized | NormForm::Q0 => {
            (lp_profile(f, frame, exps.alpha, exps.p)?, None)
        }
        NormForm::Peetre => {
            let a = a.unwrap_or(2.0);
            warnings.extend(peetre_warning(a, exps.p, f.spec()));
            (peetre_profile(f, frame, exps.alpha, exps.p, a)?, Some(a))
        }
        NormForm::LocalMeanPrime | NormForm::LocalMeanDoublePrime => {
            return param("local-mean forms need a local-mean pair; use local_mean_norm")
        }
    };
    let value = scale_norm(&profile, exps.q, form)?;
    Ok(BesovNormReport {
        form,
        value,
        profile,
        parameters: exps.echo(a, frame.id()),
        warnings,
    })
}

/// Local-mean norms `‖f‖″` (plain) and `‖f‖′` (Peetre-maximized, exponent `a`).
pub fn local_mean_norm(
    f: &GridFunction,
    pair: &LocalMeanPair,
    ladder: &ScaleLadder,
    exps: Exponents,
    a: f64,
    form: NormForm,
) -> Result<BesovNormReport> {
    pair.spec.ensure_same(f.spec())?;
    let s_plus_one = pair.moment_order as f64 + 1.0;
    if exps.alpha.max() >= s_plus_one {
        return Err(Error::Hypothesis {
            hypothesis: "α⁺ < S + 1 (local means)".into(),
            detail: format!(
                "α⁺ = {} but the kernel has vanishing moments only through S = {}",
                exps.alpha.max(),
                pair.moment_order
            ),
        });
    }
    if exps.q.kind() != ExponentKind::QOfT {
        return param("q must be a q(t) field");
    }
    let mut warnings = Vec::new();
    let peetre = match form {
        NormForm::LocalMeanDoublePrime => None,
        NormForm::LocalMeanPrime => {
            warnings.extend(peetre_warning(a, exps.p, f.spec()));
            Some(a)
        }
        _ => return param("local_mean_norm only computes the local-mean forms"),
    };
    let profile = profile_with(f, pair, ladder, exps.alpha, exps.p, peetre)?;
    let value = scale_norm(&profile, exps.q, NormForm::Direct)?;
    Ok(BesovNormReport {
        form,
        value,
        profile,
        parameters: exps.echo(peetre, pair.id()),
        warnings,
    })
}

/// Spectral Sobolev norm `((2π)^{-n}∫(1+|ξ|²)^s |Ff|²)^{1/2}`.
pub fn sobolev_norm(f: &GridFunction, s: f64) -> f64 {
    f.spectrum()
        .weighted_energy(|xi| (1.0 + xi * xi).powf(s))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::log_weight;
    use crate::frame::{build_local_mean_pair, build_resolution_of_unity, BumpProfile};
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    struct Setup {
        frame: CalderonFrame,
        alpha: ExponentField,
        p: ExponentField,
        q: ExponentField,
    }

    fn setup(n: usize, s: f64) -> Setup {
        let g = make_grid(1, 16.0, n).unwrap();
        let ladder = ScaleLadder::new(8, 4).unwrap();
        let frame = build_resolution_of_unity(g, ladder.clone(), BumpProfile::standard()).unwrap();
        Setup {
            alpha: ExponentField::constant(g, ExponentKind::Alpha, s).unwrap(),
            p: ExponentField::constant(g, ExponentKind::P, 2.0).unwrap(),
            q: ExponentField::constant_q(&ladder, 2.0).unwrap(),
            frame,
        }
    }

    fn gaussian(g: GridSpec) -> GridFunction {
        GridFunction::from_fn(g, |[x, _]| (-x * x).exp())
    }

    #[test]
    fn zero_function_has_zero_norm_in_every_form() {
        let s = setup(1024, 0.5);
        let z = GridFunction::zeros(*s.frame.spec());
        let e = Exponents::new(&s.alpha, &s.p, &s.q);
        for form in [NormForm::Direct, NormForm::Discretized, NormForm::Q0, NormForm::Peetre] {
            let r = besov_norm(&z, &s.frame, e, form, None).unwrap();
            assert_eq!(r.value, 0.0);
            assert!(r.profile.values.iter().all(|v| *v == 0.0));
        }
        let pair = build_local_mean_pair(*s.frame.spec(), 1, 1.0).unwrap();
        for form in [NormForm::LocalMeanPrime, NormForm::LocalMeanDoublePrime] {
            let r = local_mean_norm(&z, &pair, s.frame.ladder(), e, 2.0, form).unwrap();
            assert_eq!(r.value, 0.0);
        }
    }

    #[test]
    fn pure_tone_touches_only_its_annulus() {
        let s = setup(1024, 0.0);
        let g = *s.frame.spec();
        let k0 = 40.0;
        let xi0 = 2.0 * PI * k0 / 16.0;
        let f = GridFunction::from_fn(g, |[x, _]| (xi0 * x).cos());
        let prof = lp_profile(&f, &s.frame, &s.alpha, &s.p).unwrap();
        let mut active = 0;
        for (n, v) in prof.ladder.nodes().iter().zip(&prof.values) {
            let inside = 0.5 / n.t < xi0 && xi0 < 2.0 / n.t;
            if inside {
                active += 1;
            } else {
                assert!(*v <= 1e-10, "t={} value {v}", n.t);
            }
        }
        assert!(active > 0 && active <= 2 * 4 + 1);
        assert!(prof.level0 < 1e-10);
    }

    #[test]
    fn weierstrass_slope_recovers_smoothness() {
        let s = setup(4096, 0.0);
        let g = *s.frame.spec();
        let f = GridFunction::from_fn(g, |[x, _]| {
            (1..=8)
                .map(|j| (-0.5 * j as f64).exp2() * ((j as f64 - 3.0).exp2() * PI * x).cos())
                .sum()
        });
        let prof = lp_profile(&f, &s.frame, &s.alpha, &s.p).unwrap();
        let slope = prof.log_slope(2, 5).unwrap();
        assert!((slope - 0.5).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn sobolev_ratio_and_scaling() {
        let s = setup(2048, 0.5);
        let f = gaussian(*s.frame.spec());
        let e = Exponents::new(&s.alpha, &s.p, &s.q);
        let r = besov_norm(&f, &s.frame, e, NormForm::Direct, None).unwrap();
        let ratio = r.value / sobolev_norm(&f, 0.5);
        assert!(ratio > 1.0 / 3.0 && ratio < 3.0, "ratio {ratio}");
        for form in [NormForm::Direct, NormForm::Discretized, NormForm::Q0, NormForm::Peetre] {
            let a = besov_norm(&f, &s.frame, e, form, None).unwrap().value;
            let b = besov_norm(&f.scale(-3.5), &s.frame, e, form, None).unwrap().value;
            assert!((b - 3.5 * a).abs() <= 1e-8 * b, "{form:?}");
            assert!(a >= besov_norm(&f, &s.frame, e, form, None).unwrap().profile.level0);
        }
    }

    #[test]
    fn discretized_matches_direct_for_constant_q() {
        let s = setup(1024, 0.3);
        let f = gaussian(*s.frame.spec());
        let e = Exponents::new(&s.alpha, &s.p, &s.q);
        let a = besov_norm(&f, &s.frame, e, NormForm::Direct, None).unwrap().value;
        let b = besov_norm(&f, &s.frame, e, NormForm::Discretized, None).unwrap().value;
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn q0_form_is_close_to_direct() {
        let s = setup(1024, 0.5);
        let q = ExponentField::q_on_ladder(s.frame.ladder(), 2.0, |t| 2.0 + 1.0 / log_weight(t)).unwrap();
        let f = gaussian(*s.frame.spec());
        let e = Exponents::new(&s.alpha, &s.p, &q);
        let a = besov_norm(&f, &s.frame, e, NormForm::Direct, None).unwrap().value;
        let b = besov_norm(&f, &s.frame, e, NormForm::Q0, None).unwrap().value;
        assert!(a / b > 0.5 && a / b < 2.0);
    }

    #[test]
    fn peetre_dominates_pointwise_and_is_exact_for_constants() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let c = vec![1.7; g.len()];
        let m = peetre_maximal(&c, &g, 0.25, 2.0);
        assert!(m.iter().all(|v| (*v - 1.7).abs() < 1e-15));
        let bumpy: Vec<f64> = (0..g.len()).map(|i| ((i as f64) * 0.37).sin().abs()).collect();
        let m = peetre_maximal(&bumpy, &g, 0.1, 3.0);
        assert!(m.iter().zip(&bumpy).all(|(m, b)| m >= b));
    }

    #[test]
    fn peetre_exponents_give_comparable_norms() {
        let s = setup(1024, 0.5);
        let f = gaussian(*s.frame.spec());
        let e = Exponents::new(&s.alpha, &s.p, &s.q);
        let a2 = besov_norm(&f, &s.frame, e, NormForm::Peetre, Some(2.0)).unwrap();
        let a4 = besov_norm(&f, &s.frame, e, NormForm::Peetre, Some(4.0)).unwrap();
        assert!(a2.warnings.is_empty());
        let r = a2.value / a4.value;
        assert!(r >= 1.0 && r < 3.0, "ratio {r}");
        let low = besov_norm(&f, &s.frame, e, NormForm::Peetre, Some(0.4)).unwrap();
        assert_eq!(low.warnings.len(), 1);
    }

    #[test]
    fn local_mean_hypothesis_and_ratio() {
        let s = setup(1024, 0.5);
        let g = *s.frame.spec();
        let f = gaussian(g);
        let pair = build_local_mean_pair(g, 1, 1.0).unwrap();
        let e = Exponents::new(&s.alpha, &s.p, &s.q);
        let lm = local_mean_norm(&f, &pair, s.frame.ladder(), e, 2.0, NormForm::LocalMeanDoublePrime)
            .unwrap();
        let d = besov_norm(&f, &s.frame, e, NormForm::Direct, None).unwrap();
        let r = lm.value / d.value;
        assert!(r > 0.1 && r < 10.0, "ratio {r}");
        let hot = ExponentField::constant(g, ExponentKind::Alpha, 2.5).unwrap();
        let err = local_mean_norm(
            &f,
            &pair,
            s.frame.ladder(),
            Exponents::new(&hot, &s.p, &s.q),
            2.0,
            NormForm::LocalMeanDoublePrime,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }));
    }

    #[test]
    fn profile_csv_has_one_row_per_node() {
        let s = setup(256, 0.0);
        let f = gaussian(*s.frame.spec());
        let prof = lp_profile(&f, &s.frame, &s.alpha, &s.p).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + prof.ladder.len());
    }
}
