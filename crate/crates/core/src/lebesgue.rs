//! Modulars, Luxemburg norms, mixed sequence norms and the scalar
//! `L^{q(·)}((0,1], dt/t)` norm on a scale ladder.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exponents::{Axis, ExponentField, ExponentKind};
use crate::grid::GridFunction;
use crate::quadrature::{bisect_decreasing, gauss_legendre, Bisection};

pub const NORM_RTOL: f64 = 1e-10;
pub const NORM_MAX_ITER: usize = 200;

/// One quadrature node of `dt/t` on `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleNode {
    pub t: f64,
    pub weight: f64,
    /// Octave `v` with `t ∈ [2^{-v}, 2^{1-v}]`.
    pub octave: u32,
}

/// Gauss–Legendre nodes in `log t` on each octave `[2^{-v}, 2^{1-v}]`,
/// `v = 1..=V`, listed with `t` strictly decreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    octaves: u32,
    nodes_per_octave: usize,
    nodes: Vec<ScaleNode>,
}

impl ScaleLadder {
    pub fn new(octaves: u32, nodes_per_octave: usize) -> Result<Self> {
        if octaves == 0 || octaves > 40 {
            return param(format!("octave count {octaves} outside 1..=40"));
        }
        if nodes_per_octave == 0 || nodes_per_octave > 256 {
            return param(format!("nodes per octave {nodes_per_octave} outside 1..=256"));
        }
        let (x, w) = gauss_legendre(nodes_per_octave);
        let half = 0.5 * std::f64::consts::LN_2;
        let mut nodes = Vec::with_capacity(octaves as usize * nodes_per_octave);
        for v in 1..=octaves {
            let mid = (0.5 - v as f64) * std::f64::consts::LN_2;
            // x ascending, so walk it backwards for decreasing t
            for k in (0..nodes_per_octave).rev() {
                nodes.push(ScaleNode {
                    t: (mid + half * x[k]).exp(),
                    weight: half * w[k],
                    octave: v,
                });
            }
        }
        Ok(Self {
            octaves,
            nodes_per_octave,
            nodes,
        })
    }

    pub fn octaves(&self) -> u32 {
        self.octaves
    }

    pub fn nodes_per_octave(&self) -> usize {
        self.nodes_per_octave
    }

    pub fn nodes(&self) -> &[ScaleNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index range of the nodes in octave `v` (1-based).
    pub fn octave_range(&self, v: u32) -> std::ops::Range<usize> {
        let j = self.nodes_per_octave;
        let start = (v as usize - 1) * j;
        start..start + j
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Same octaves with a different node count.
    pub fn refined(&self, nodes_per_octave: usize) -> Result<Self> {
        Self::new(self.octaves, nodes_per_octave)
    }
}

/// Midpoint `3·2^{-v-1}` of octave `v`, where `q` is read for level `v`.
pub fn octave_midpoint(v: u32) -> f64 {
    3.0 * (-(v as f64) - 1.0).exp2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub modular_at_value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

impl NormResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            modular_at_value: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
        }
    }
}

/// `∫ |f|^{p(x)} w(x) dx` on precomputed sample data.
///
/// `log_abs[i] = ln|f_i|` (may be `-∞`), `measure[i] = h^n w_i`.
fn modular_from_logs(log_abs: &[f64], p: &[f64], measure: &[f64], log_lambda: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..log_abs.len() {
        if measure[i] == 0.0 || log_abs[i] == f64::NEG_INFINITY {
            continue;
        }
        s += measure[i] * (p[i] * (log_abs[i] - log_lambda)).exp();
    }
    s
}

/// Luxemburg (quasi-)norm of sample magnitudes with per-sample exponents and
/// measures. No admissibility check, so exponents below one are allowed.
pub fn luxemburg_samples(abs: &[f64], p: &[f64], measure: &[f64]) -> NormResult {
    debug_assert_eq!(abs.len(), p.len());
    debug_assert_eq!(abs.len(), measure.len());
    let log_abs: Vec<f64> = abs.iter().map(|a| a.abs().ln()).collect();
    let r = modular_from_logs(&log_abs, p, measure, 0.0);
    if r == 0.0 {
        return NormResult::zero();
    }
    let active = || {
        (0..abs.len()).filter(|&i| measure[i] != 0.0 && log_abs[i] != f64::NEG_INFINITY)
    };
    let pmin = active().map(|i| p[i]).fold(f64::INFINITY, f64::min);
    let pmax = active().map(|i| p[i]).fold(f64::NEG_INFINITY, f64::max);
    // R^{1/p} for both extremes, clamped away from under/overflow
    let lr = r.ln();
    let (a, b) = ((lr / pmin).clamp(-700.0, 700.0), (lr / pmax).clamp(-700.0, 700.0));
    let (lo, hi) = (a.min(b).exp(), a.max(b).exp());
    let Bisection {
        root,
        value_at_root,
        iterations,
        bracket,
    } = bisect_decreasing(
        |lambda| modular_from_logs(&log_abs, p, measure, lambda.ln()),
        1.0,
        lo,
        hi,
        NORM_RTOL,
        NORM_MAX_ITER,
    );
    NormResult {
        value: root,
        modular_at_value: value_at_root,
        iterations,
        bracket,
    }
}

fn grid_exponent<'a>(f: &GridFunction, p: &'a ExponentField) -> Result<&'a [f64]> {
    match p.axis() {
        Axis::Grid(g) => {
            g.ensure_same(f.spec())?;
            Ok(p.samples())
        }
        Axis::Points(_) => Err(Error::GridMismatch(
            "exponent lives on a t-axis, not on the function's grid".into(),
        )),
    }
}

fn measures(f: &GridFunction, w: Option<&GridFunction>) -> Result<Vec<f64>> {
    let h = f.spec().cell_measure();
    match w {
        None => Ok(vec![h; f.len()]),
        Some(w) => {
            f.spec().ensure_same(w.spec())?;
            w.samples()
                .iter()
                .enumerate()
                .map(|(i, z)| {
                    if z.re < 0.0 || z.im != 0.0 {
                        param(format!("weight sample {i} is not a nonnegative real"))
                    } else {
                        Ok(h * z.re)
                    }
                })
                .collect()
        }
    }
}

/// `ρ_{p(·)}(f) = ∫|f|^{p(x)} w(x) dx`.
pub fn modular(f: &GridFunction, p: &ExponentField, w: Option<&GridFunction>) -> Result<f64> {
    let ps = grid_exponent(f, p)?;
    let m = measures(f, w)?;
    let logs: Vec<f64> = f.samples().iter().map(|z| z.norm().ln()).collect();
    Ok(modular_from_logs(&logs, ps, &m, 0.0))
}

/// `inf{λ > 0 : ρ_{p(·)}(f/λ) ≤ 1}`, optionally with a weight.
pub fn luxemburg_norm(
    f: &GridFunction,
    p: &ExponentField,
    w: Option<&GridFunction>,
) -> Result<NormResult> {
    let ps = grid_exponent(f, p)?;
    let m = measures(f, w)?;
    Ok(luxemburg_samples(&f.abs(), ps, &m))
}

/// Luxemburg norm of real magnitudes living on the exponent's grid.
pub fn luxemburg_real(abs: &[f64], p: &ExponentField) -> Result<NormResult> {
    let Some(g) = p.grid() else {
        return Err(Error::GridMismatch("exponent is not grid-based".into()));
    };
    if abs.len() != g.len() {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {}",
            abs.len(),
            g.len()
        )));
    }
    Ok(luxemburg_samples(abs, p.samples(), &vec![g.cell_measure(); abs.len()]))
}

/// Solves `Σ_v A_v μ^{-q_v} = 1` for `μ`.
fn solve_power_sum(a: &[f64], q: &[f64]) -> f64 {
    let terms: Vec<(f64, f64)> = a
        .iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, q)| (*a, *q))
        .collect();
    if terms.is_empty() {
        return 0.0;
    }
    let g = |mu: f64| {
        let lm = mu.ln();
        terms
            .iter()
            .map(|(a, q)| (a.ln() - q * lm).exp())
            .sum::<f64>()
    };
    // each single term alone gives A^{1/q}; the sum lies between their max and a multiple
    let guesses: Vec<f64> = terms.iter().map(|(a, q)| a.powf(1.0 / q)).collect();
    let lo = guesses.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = guesses.iter().cloned().fold(0.0, f64::max) * terms.len() as f64;
    bisect_decreasing(g, 1.0, lo, hi, NORM_RTOL, NORM_MAX_ITER).root
}

/// One level of a mixed norm: magnitudes with their own exponents and
/// quadrature measures.
#[derive(Clone, Debug)]
pub struct Level {
    pub magnitudes: Vec<f64>,
    pub exponents: Vec<f64>,
    pub measures: Vec<f64>,
}

/// `μ` solving `Σ_v ‖|f_v/μ|^{q_v}‖_{p_v(·)/q_v} = 1`, using the homogeneity
/// `‖|f/μ|^q‖_{p/q} = μ^{-q}‖|f|^q‖_{p/q}` so each level costs one inner
/// Luxemburg solve.
pub fn mixed_norm_raw(levels: &[Level], qs: &[f64]) -> Result<f64> {
    if levels.is_empty() {
        return Ok(0.0);
    }
    if levels.len() != qs.len() {
        return param("one q value per level is required");
    }
    let mut a = Vec::with_capacity(levels.len());
    for (lv, &q) in levels.iter().zip(qs) {
        if !q.is_finite() {
            return Err(Error::Unsupported("q⁺ = ∞ in a mixed norm".into()));
        }
        let powered: Vec<f64> = lv.magnitudes.iter().map(|x| x.abs().powf(q)).collect();
        let ratio: Vec<f64> = lv.exponents.iter().map(|p| p / q).collect();
        a.push(luxemburg_samples(&powered, &ratio, &lv.measures).value);
    }
    Ok(solve_power_sum(&a, qs))
}

/// `‖(f_v)_v‖_{ℓ^{q}(L^{p(·)})}` with one scalar exponent `q_v` per level.
pub fn mixed_norm_with_levels(
    fs: &[Vec<f64>],
    p: &ExponentField,
    qs: &[f64],
) -> Result<f64> {
    if fs.is_empty() {
        return Ok(0.0);
    }
    let Some(g) = p.grid() else {
        return Err(Error::GridMismatch("exponent is not grid-based".into()));
    };
    let mut levels = Vec::with_capacity(fs.len());
    for f in fs {
        if f.len() != g.len() {
            return Err(Error::GridMismatch("level function on a different grid".into()));
        }
        levels.push(Level {
            magnitudes: f.clone(),
            exponents: p.samples().to_vec(),
            measures: vec![g.cell_measure(); g.len()],
        });
    }
    mixed_norm_raw(&levels, qs)
}

/// Mixed `ℓ^{q(·)}(L^{p(·)})` norm of levels `v = 1, 2, …`, reading `q` at
/// the midpoint of each octave.
pub fn mixed_sequence_norm(
    fs: &[GridFunction],
    p: &ExponentField,
    q: &ExponentField,
) -> Result<f64> {
    if q.kind() != ExponentKind::QOfT {
        return param("q must be a q(t) field");
    }
    for f in fs {
        grid_exponent(f, p)?;
    }
    let levels: Vec<Vec<f64>> = fs.iter().map(|f| f.abs()).collect();
    let qs: Vec<f64> = (1..=fs.len() as u32)
        .map(|v| q.value_at_t(octave_midpoint(v)))
        .collect();
    mixed_norm_with_levels(&levels, p, &qs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TForm {
    /// Luxemburg norm with the exponent `q(t)`.
    Variable,
    /// Constant exponent `q(0)`.
    Q0,
    Sup,
}

fn check_nodes(q: &ExponentField, ladder: &ScaleLadder) -> Result<()> {
    let Axis::Points(t) = q.axis() else {
        return Err(Error::GridMismatch("q must live on the ladder's t-axis".into()));
    };
    let same = t.len() == ladder.len()
        && t
            .iter()
            .zip(ladder.nodes())
            .all(|(a, n)| (a - n.t).abs() <= 1e-14 * n.t);
    if !same {
        return Err(Error::GridMismatch("q nodes differ from ladder nodes".into()));
    }
    Ok(())
}

/// `‖g‖_{L^{q(·)}((0,1], dt/t)}` for `g` sampled at the ladder nodes.
pub fn t_norm(g: &[f64], q: &ExponentField, ladder: &ScaleLadder, form: TForm) -> Result<f64> {
    if g.len() != ladder.len() {
        return Err(Error::GridMismatch(format!(
            "{} profile values for {} ladder nodes",
            g.len(),
            ladder.len()
        )));
    }
    if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return param("profile values must be finite and nonnegative");
    }
    check_nodes(q, ladder)?;
    let w: Vec<f64> = ladder.nodes().iter().map(|n| n.weight).collect();
    Ok(match form {
        TForm::Variable => luxemburg_samples(g, q.samples(), &w).value,
        TForm::Q0 => {
            let q0 = q.limit_value().expect("q(t) carries q(0)");
            g.iter()
                .zip(&w)
                .map(|(g, w)| g.powf(q0) * w)
                .sum::<f64>()
                .powf(1.0 / q0)
        }
        TForm::Sup => g.iter().cloned().fold(0.0, f64::max),
    })
}

/// Octave-blocked form of the scale norm: levels
/// `t^{-1/q(t)} g(t) χ_{[2^{-v}, 2^{1-v}]}` in `ℓ^{q(·)}(L^{q(·)}(dt))`,
/// with `q_v` read at the octave midpoint.
pub fn t_mixed_norm(g: &[f64], q: &ExponentField, ladder: &ScaleLadder) -> Result<f64> {
    if g.len() != ladder.len() {
        return Err(Error::GridMismatch("profile length differs from the ladder".into()));
    }
    check_nodes(q, ladder)?;
    let mut levels = Vec::new();
    let mut qs = Vec::new();
    for v in 1..=ladder.octaves() {
        let r = ladder.octave_range(v);
        let nodes = &ladder.nodes()[r.clone()];
        let qk = &q.samples()[r.clone()];
        levels.push(Level {
            magnitudes: nodes
                .iter()
                .zip(&g[r.clone()])
                .zip(qk)
                .map(|((n, g), q)| n.t.powf(-1.0 / q) * g)
                .collect(),
            exponents: qk.to_vec(),
            // dt = t·(dt/t)
            measures: nodes.iter().map(|n| n.weight * n.t).collect(),
        });
        qs.push(q.value_at_t(octave_midpoint(v)));
    }
    mixed_norm_raw(&levels, &qs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn unit_box(n: usize) -> crate::grid::GridSpec {
        make_grid(1, 1.0, n).unwrap()
    }

    #[test]
    fn ladder_weights_and_order() {
        let l = ScaleLadder::new(8, 4).unwrap();
        assert_eq!(l.len(), 32);
        for v in 1..=8 {
            let s: f64 = l.nodes()[l.octave_range(v)].iter().map(|n| n.weight).sum();
            assert!((s - LN_2).abs() < 1e-12);
            for n in &l.nodes()[l.octave_range(v)] {
                assert!(n.t >= (-(v as f64)).exp2() && n.t <= (1.0 - v as f64).exp2());
            }
        }
        assert!(l.nodes().windows(2).all(|w| w[0].t > w[1].t));
        assert!(l.nodes().iter().all(|n| n.t > 0.0 && n.t <= 1.0));
    }

    #[test]
    fn modular_examples() {
        let g = make_grid(1, 4.0, 256).unwrap();
        let f = GridFunction::from_fn(g, |[x, _]| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 });
        let p = ExponentField::from_fn(g, ExponentKind::P, None, |[x, _]| 1.5 + x.sin().abs())
            .unwrap();
        assert!((modular(&f, &p, None).unwrap() - 1.0).abs() < 1e-12);

        let u = unit_box(64);
        let two = GridFunction::constant(u, 2.0);
        let p2 = ExponentField::constant(u, ExponentKind::P, 2.0).unwrap();
        assert!((modular(&two, &p2, None).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn modular_matches_dense_trapezoid() {
        // f(x) = x on [0,1], p = 1 + x; box [-1, 1) so [0,1] is resolved
        let g = make_grid(1, 2.0, 1 << 16).unwrap();
        let f = GridFunction::from_fn(g, |[x, _]| if (0.0..=1.0).contains(&x) { x } else { 0.0 });
        let p = ExponentField::from_fn(g, ExponentKind::P, None, |[x, _]| 1.0 + x.max(0.0)).unwrap();
        let got = modular(&f, &p, None).unwrap();
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let mut oracle = 0.0;
        for i in 0..=n {
            let x = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            oracle += w * x.powf(1.0 + x);
        }
        oracle *= h;
        // the grid rule is a left-endpoint sum on [0,1]: O(h) with h = 2^-15
        assert!((got - oracle).abs() < 2e-5, "{got} vs {oracle}");
    }

    #[test]
    fn norm_examples() {
        let u = unit_box(1024);
        let one = GridFunction::constant(u, 1.0);
        let p = ExponentField::from_fn(u, ExponentKind::P, None, |[x, _]| 2.0 + x).unwrap();
        assert!((luxemburg_norm(&one, &p, None).unwrap().value - 1.0).abs() < 1e-9);
        let s = GridFunction::from_fn(u, |[x, _]| (2.0 * PI * x).sin());
        let p2 = ExponentField::constant(u, ExponentKind::P, 2.0).unwrap();
        let r = luxemburg_norm(&s, &p2, None).unwrap();
        assert!((r.value - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(r.modular_at_value <= 1.0 && r.modular_at_value > 1.0 - 1e-9);
        let z = GridFunction::zeros(u);
        assert_eq!(luxemburg_norm(&z, &p2, None).unwrap().value, 0.0);
    }

    #[test]
    fn weighted_norm_scales_modular() {
        let u = unit_box(128);
        let f = GridFunction::from_fn(u, |[x, _]| 1.0 + x);
        let p = ExponentField::constant(u, ExponentKind::P, 2.0).unwrap();
        let w = GridFunction::constant(u, 4.0);
        let a = luxemburg_norm(&f, &p, None).unwrap().value;
        let b = luxemburg_norm(&f, &p, Some(&w)).unwrap().value;
        assert!((b - 2.0 * a).abs() < 1e-9 * a);
        let neg = GridFunction::constant(u, -1.0);
        assert!(luxemburg_norm(&f, &p, Some(&neg)).is_err());
    }

    #[test]
    fn mixed_norm_examples() {
        let g = make_grid(1, 4.0, 128).unwrap();
        let ladder = ScaleLadder::new(4, 2).unwrap();
        let p = ExponentField::constant(g, ExponentKind::P, 3.0).unwrap();
        let q = ExponentField::constant_q(&ladder, 3.0).unwrap();
        let f1 = GridFunction::from_fn(g, |[x, _]| (-x * x).exp());
        let single = mixed_sequence_norm(std::slice::from_ref(&f1), &p, &q).unwrap();
        let direct = luxemburg_norm(&f1, &p, None).unwrap().value;
        assert!((single - direct).abs() < 1e-8 * direct);

        let q2 = ExponentField::constant_q(&ladder, 1.5).unwrap();
        let fs: Vec<GridFunction> = (1..=4)
            .map(|v| GridFunction::from_fn(g, move |[x, _]| (v as f64) * (-(x - v as f64 * 0.3).powi(2)).exp()))
            .collect();
        let mixed = mixed_sequence_norm(&fs, &p, &q2).unwrap();
        let oracle = fs
            .iter()
            .map(|f| {
                let n = (f.abs().iter().map(|a| a.powi(3)).sum::<f64>() * g.spacing()).cbrt();
                n.powf(1.5)
            })
            .sum::<f64>()
            .powf(1.0 / 1.5);
        assert!((mixed - oracle).abs() < 1e-8 * oracle);
        let zeros = vec![GridFunction::zeros(g); 3];
        assert_eq!(mixed_sequence_norm(&zeros, &p, &q2).unwrap(), 0.0);
        assert_eq!(mixed_sequence_norm(&[], &p, &q2).unwrap(), 0.0);
    }

    #[test]
    fn t_norm_examples() {
        let ladder = ScaleLadder::new(8, 4).unwrap();
        let q = ExponentField::constant_q(&ladder, 2.0).unwrap();
        let c = 0.7;
        let g = vec![c; ladder.len()];
        let v = t_norm(&g, &q, &ladder, TForm::Variable).unwrap();
        assert!((v - c * (8.0 * LN_2).sqrt()).abs() < 1e-9);
        let mut one = vec![0.0; ladder.len()];
        one[5] = 2.0;
        let w = ladder.nodes()[5].weight;
        assert!((t_norm(&one, &q, &ladder, TForm::Variable).unwrap() - 2.0 * w.sqrt()).abs() < 1e-9);
        assert_eq!(t_norm(&one, &q, &ladder, TForm::Sup).unwrap(), 2.0);

        let qv = ExponentField::q_on_ladder(&ladder, 2.0, |t| {
            2.0 + 1.0 / crate::exponents::log_weight(t)
        })
        .unwrap();
        let prof: Vec<f64> = ladder.nodes().iter().map(|n| n.t.powf(0.3)).collect();
        let a = t_norm(&prof, &qv, &ladder, TForm::Variable).unwrap();
        let b = t_norm(&prof, &qv, &ladder, TForm::Q0).unwrap();
        assert!(a / b > 1.0 / 1.5 && a / b < 1.5, "ratio {}", a / b);
        let other = ScaleLadder::new(8, 3).unwrap();
        assert!(t_norm(&vec![1.0; other.len()], &qv, &other, TForm::Q0).is_err());
    }

    fn bank_fn(k: usize, g: crate::grid::GridSpec) -> GridFunction {
        let a = 0.3 + 0.2 * k as f64;
        let c = -2.0 + 0.2 * k as f64;
        GridFunction::from_fn(g, move |[x, _]| (1.0 + 0.5 * (a * x).sin()) * (-(x - c).powi(2) / a).exp() * (k as f64 + 0.5))
    }

    #[test]
    fn unit_ball_and_scan_oracle() {
        let g = make_grid(1, 16.0, 1024).unwrap();
        let p = ExponentField::from_fn(g, ExponentKind::P, None, |[x, _]| {
            2.0 + (2.0 * PI * x / 16.0).sin().powi(2)
        })
        .unwrap();
        for k in 0..6 {
            let f = bank_fn(k, g);
            let n = luxemburg_norm(&f, &p, None).unwrap();
            let rho = modular(&f, &p, None).unwrap();
            assert_eq!(n.value <= 1.0, rho <= 1.0 + 1e-9, "k={k}");
            // independent dense scan on a bracket around the root
            let rho_at = |l: f64| {
                f.abs()
                    .iter()
                    .zip(p.samples())
                    .map(|(a, p)| (a / l).powf(*p))
                    .sum::<f64>()
                    * g.spacing()
            };
            let (lo, hi) = (n.value * 0.999, n.value * 1.001);
            let m = 10_000;
            let mut prev = (lo, rho_at(lo) - 1.0);
            let mut root = f64::NAN;
            for i in 1..=m {
                let l = lo * (hi / lo).powf(i as f64 / m as f64);
                let v = rho_at(l) - 1.0;
                if prev.1 > 0.0 && v <= 0.0 {
                    // linear interpolation of log ρ in log λ
                    let (a, b) = ((prev.1 + 1.0).ln(), (v + 1.0).ln());
                    let s = a / (a - b);
                    root = (prev.0.ln() + s * (l.ln() - prev.0.ln())).exp();
                    break;
                }
                prev = (l, v);
            }
            assert!((root - n.value).abs() < 1e-8 * n.value, "k={k}");
        }
    }

    proptest! {
        #[test]
        fn homogeneity_and_constant_reduction(k in 0usize..10, p0 in 1.0f64..6.0) {
            let g = make_grid(1, 16.0, 512).unwrap();
            let f = bank_fn(k, g);
            let p = ExponentField::constant(g, ExponentKind::P, p0).unwrap();
            let n = luxemburg_norm(&f, &p, None).unwrap().value;
            let direct = (f.abs().iter().map(|a| a.powf(p0)).sum::<f64>() * g.spacing()).powf(1.0 / p0);
            prop_assert!((n - direct).abs() <= 1e-9 * direct);
            let pv = ExponentField::from_fn(g, ExponentKind::P, None, |[x, _]| p0 + (x / 3.0).cos().abs()).unwrap();
            let base = luxemburg_norm(&f, &pv, None).unwrap().value;
            for c in [0.1, 3.0, 100.0] {
                let scaled = luxemburg_norm(&f.scale(c), &pv, None).unwrap().value;
                prop_assert!((scaled - c * base).abs() <= 1e-9 * c * base);
            }
        }

        #[test]
        fn monotone_in_magnitude(k in 0usize..10, shrink in 0.0f64..1.0) {
            let g = make_grid(1, 16.0, 256).unwrap();
            let f = bank_fn(k, g);
            let small = GridFunction::from_fn(g, |[x, _]| shrink * (0.5 + 0.5 * x.sin())).mul_real(&f.re()).unwrap();
            let pv = ExponentField::from_fn(g, ExponentKind::P, None, |[x, _]| 1.5 + (x / 2.0).sin().powi(2)).unwrap();
            let a = luxemburg_norm(&small, &pv, None).unwrap().value;
            let b = luxemburg_norm(&f, &pv, None).unwrap().value;
            prop_assert!(a <= b + 1e-10);
        }
    }
}
