//! Atoms, the constructive atomic analysis built on a factorized frame,
//! synthesis, and the `b`-sequence norms.
//!
//! The analysis uses the square-root pair of a frame: with `Fψ = (Fφ)^{1/2}`
//! and `FΨ = (FΦ)^{1/2}` the identity `FΨ·FΨ + ∫₀¹ Fψ(t·)Fψ(t·) dt/t = 1`
//! holds, so `ψ` serves both as analysis and synthesis kernel. Each atom
//! is kept in factored form: the samples of `ψ_t∗f` on its cube for every
//! scale of its octave. Materializing it is one convolution per scale.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::besov::Exponents;
use crate::error::{param, Error, Result};
use crate::frame::{build_resolution_of_unity, BumpProfile, CalderonFrame, Window};
use crate::grid::{read_binary, write_binary, DyadicCube, GridFunction, GridSpec, Spectrum};
use crate::lebesgue::{luxemburg_real, mixed_norm_raw, octave_midpoint, Level, ScaleLadder};

/// Coefficients below this are stored as exact zeros.
pub const COEFFICIENT_FLOOR: f64 = 1e-14;
pub const SUPPORT_TOLERANCE: f64 = 1e-6;
pub const DERIVATIVE_SLACK: f64 = 1e-6;
pub const MOMENT_TOLERANCE: f64 = 1e-6;

pub(crate) fn multi_indices(dimension: usize, order: i64) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for total in 0..=order.max(-1) {
        let total = total as u32;
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

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBound {
    pub beta: [u32; 2],
    pub sup: f64,
    pub bound: f64,
    /// `sup / bound`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub beta: [u32; 2],
    pub value: f64,
    pub bound: f64,
}

/// Measured atom conditions for a cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomDescriptor {
    pub cube: DyadicCube,
    pub k: u32,
    pub l: i32,
    pub gamma: f64,
    /// Fraction of `∫|a|` outside `γQ`.
    pub support_leak: f64,
    pub support_pass: bool,
    /// Smallest dilation whose complement carries at most the tolerated mass
    /// (capped at the box, where it equals `L/ℓ(Q)`).
    pub effective_gamma: f64,
    pub derivatives: Vec<DerivativeBound>,
    /// Largest derivative ratio; the constant by which the bounds are inflated.
    pub inflation: f64,
    pub derivative_pass: bool,
    pub moments: Vec<MomentCheck>,
    pub moment_pass: bool,
    pub pass: bool,
}

impl AtomDescriptor {
    /// Whether the atom satisfies the conditions with derivative bounds
    /// inflated by `c` and support dilation `gamma`.
    pub fn accepts(&self, c: f64, gamma: f64) -> bool {
        self.inflation <= c * (1.0 + DERIVATIVE_SLACK)
            && self.effective_gamma <= gamma
            && self.moment_pass
    }
}

/// Signed displacement along one axis from `c` to `x` on the torus.
fn wrapped(x: f64, c: f64, l: f64) -> f64 {
    let d = x - c;
    d - l * (d / l).round()
}

/// Measures the support, derivative and moment conditions of a
/// `[K, L]`-atom centered at `cube`.
pub fn validate_atom(a: &GridFunction, cube: DyadicCube, k: u32, l: i32, gamma: f64) -> Result<AtomDescriptor> {
    if l < -1 {
        return param("moment order L must be >= -1");
    }
    if !(gamma > 1.0) {
        return param("support dilation γ must exceed 1");
    }
    let spec = *a.spec();
    if cube.dimension as usize != spec.dimension() {
        return Err(Error::GridMismatch("cube and grid dimensions differ".into()));
    }
    let n = spec.dimension() as f64;
    let v = cube.level as f64;
    let side = cube.side();
    let center = cube.center();
    let box_l = spec.box_length();
    let abs = a.abs();
    let total: f64 = abs.iter().sum();

    // sup-norm distance of every node from the cube center, in units of side/2
    let radius: Vec<f64> = (0..spec.len())
        .map(|i| {
            let x = spec.point(i);
            let mut r = wrapped(x[0], center[0], box_l).abs();
            if spec.dimension() == 2 {
                r = r.max(wrapped(x[1], center[1], box_l).abs());
            }
            2.0 * r / side
        })
        .collect();
    let outside: f64 = abs
        .iter()
        .zip(&radius)
        .filter(|(_, r)| **r > gamma)
        .map(|(a, _)| a)
        .sum();
    let support_leak = if total == 0.0 { 0.0 } else { outside / total };
    let effective_gamma = if total == 0.0 {
        1.0
    } else {
        let mut order: Vec<usize> = (0..spec.len()).collect();
        order.sort_by(|&i, &j| radius[j].total_cmp(&radius[i]));
        let budget = SUPPORT_TOLERANCE * total;
        let mut acc = 0.0;
        let mut gamma_eff = box_l / side;
        for &i in &order {
            if acc + abs[i] > budget {
                gamma_eff = radius[i].max(1.0);
                break;
            }
            acc += abs[i];
        }
        gamma_eff
    };

    let mut derivatives = Vec::new();
    for beta in multi_indices(spec.dimension(), k as i64) {
        let d = a.spectral_derivative(beta);
        let sup = d.max_abs();
        let order = (beta[0] + beta[1]) as f64;
        let bound = (v * (order + n / 2.0)).exp2();
        derivatives.push(DerivativeBound {
            beta,
            sup,
            bound,
            ratio: sup / bound,
        });
    }
    let inflation = derivatives.iter().map(|d| d.ratio).fold(0.0, f64::max);
    let derivative_pass = inflation <= 1.0 + DERIVATIVE_SLACK;

    let mut moments = Vec::new();
    if cube.level >= 1 {
        for beta in multi_indices(spec.dimension(), l as i64) {
            let order = (beta[0] + beta[1]) as f64;
            let mut s = Complex64::new(0.0, 0.0);
            for (i, z) in a.samples().iter().enumerate() {
                let x = spec.point(i);
                let mut w = wrapped(x[0], center[0], box_l).powi(beta[0] as i32);
                if spec.dimension() == 2 {
                    w *= wrapped(x[1], center[1], box_l).powi(beta[1] as i32);
                }
                s += z * w;
            }
            let value = s.norm() * spec.cell_measure();
            moments.push(MomentCheck {
                beta,
                value,
                bound: MOMENT_TOLERANCE * (-v * (n / 2.0 + order)).exp2(),
            });
        }
    }
    let moment_pass = moments.iter().all(|m| m.value <= m.bound);
    let support_pass = support_leak <= SUPPORT_TOLERANCE;
    Ok(AtomDescriptor {
        cube,
        k,
        l,
        gamma,
        support_leak,
        support_pass,
        effective_gamma,
        derivatives,
        inflation,
        derivative_pass,
        moments,
        moment_pass,
        pass: support_pass && derivative_pass && moment_pass,
    })
}

/// Factored atom: `ρ(x) = Σ_k w_k h^n Σ_{y∈Q} ψ_{t_k}(x−y) local_k(y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactoredAtom {
    pub window: Window,
    /// `(t_k, w_k)`; the coarse level uses the single pair `(1, 1)`.
    pub scales: Vec<(f64, f64)>,
    /// `local[k][i]` is the value at the `i`-th node of `cube.grid_indices`.
    pub local: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AtomShape {
    Zero,
    Factored(FactoredAtom),
    Sampled(GridFunction),
    /// Known coefficient without atom data (e.g. imported from CSV only).
    Missing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomEntry {
    pub cube: DyadicCube,
    pub lambda: f64,
    pub atom: AtomShape,
}

/// Coefficients and atoms keyed by dyadic cube.
#[derive(Clone, Debug)]
pub struct AtomicDecomposition {
    pub spec: GridSpec,
    pub entries: BTreeMap<DyadicCube, AtomEntry>,
    pub frame: Option<CalderonFrame>,
    /// `C_φ` for levels `v ≥ 1` and `C_Φ` for level 0.
    pub c_phi: f64,
    pub c_big_phi: f64,
    pub k: u32,
    pub l: i32,
    pub levels: u32,
}

impl AtomicDecomposition {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            spec,
            entries: BTreeMap::new(),
            frame: None,
            c_phi: f64::NAN,
            c_big_phi: f64::NAN,
            k: 0,
            l: -1,
            levels: 0,
        }
    }

    pub fn coefficient(&self, cube: &DyadicCube) -> Option<f64> {
        self.entries.get(cube).map(|e| e.lambda)
    }

    /// `Σ λ²` over all entries.
    pub fn coefficient_energy(&self) -> f64 {
        self.entries.values().map(|e| e.lambda * e.lambda).sum()
    }

    /// `Σ_m λ_{v,m} χ_{v,m}` on the grid.
    pub fn level_function(&self, v: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.len()];
        for e in self.entries.values().filter(|e| e.cube.level == v) {
            for i in e.cube.grid_indices(&self.spec) {
                out[i] += e.lambda;
            }
        }
        out
    }

    /// Dense samples of one atom.
    pub fn atom_samples(&self, cube: &DyadicCube) -> Result<GridFunction> {
        let e = self
            .entries
            .get(cube)
            .ok_or_else(|| Error::Parameter(format!("no entry for {cube:?}")))?;
        let mut single = AtomicDecomposition {
            entries: BTreeMap::new(),
            frame: self.frame.clone(),
            ..self.clone_header()
        };
        let mut unit = e.clone();
        unit.lambda = 1.0;
        single.entries.insert(*cube, unit);
        synthesize(&single)
    }

    fn clone_header(&self) -> Self {
        Self {
            spec: self.spec,
            entries: BTreeMap::new(),
            frame: None,
            c_phi: self.c_phi,
            c_big_phi: self.c_big_phi,
            k: self.k,
            l: self.l,
            levels: self.levels,
        }
    }
}

/// `max_{|β|≤K} max_t t^{n+|β|} sup|D^β window_t|` over the given scales.
fn derivative_constant(frame: &CalderonFrame, window: Window, scales: &[f64], k: u32) -> f64 {
    let n = frame.spec().dimension() as f64;
    let mut c: f64 = 0.0;
    for &t in scales {
        let kernel = frame.synthesize(window, t);
        for beta in multi_indices(frame.spec().dimension(), k as i64) {
            let order = (beta[0] + beta[1]) as f64;
            let sup = kernel.spectral_derivative(beta).max_abs();
            c = c.max(t.powf(n + order) * sup);
        }
    }
    c
}

/// Checks `K ≥ [α⁺] + 1` and `L ≥ max(-1, [-α⁻])`.
pub fn check_atom_orders(k: u32, l: i32, alpha_min: f64, alpha_max: f64) -> Result<()> {
    let need_k = alpha_max.floor() + 1.0;
    if (k as f64) < need_k {
        return Err(Error::Hypothesis {
            hypothesis: "K >= [α⁺] + 1".into(),
            detail: format!("K = {k} but α⁺ = {alpha_max} requires K >= {need_k}"),
        });
    }
    let need_l = (-alpha_min).floor().max(-1.0);
    if (l as f64) < need_l {
        return Err(Error::Hypothesis {
            hypothesis: "L >= max(-1, [-α⁻])".into(),
            detail: format!("L = {l} but α⁻ = {alpha_min} requires L >= {need_l}"),
        });
    }
    Ok(())
}

/// Canonical decomposition: level 0 from `Ψ`, levels `1..=V` from the
/// ladder octaves of `ψ_t`, coefficients
/// `λ = C (Σ_k w_k ∫_Q |ψ_{t_k}∗f|²)^{1/2}`.
pub fn analyze(
    f: &GridFunction,
    frame: &CalderonFrame,
    levels: u32,
    k: u32,
    l: i32,
    target: Option<Exponents>,
) -> Result<AtomicDecomposition> {
    let spec = *f.spec();
    frame.spec().ensure_same(&spec)?;
    let ladder = frame.ladder();
    if levels > ladder.octaves() {
        return param(format!(
            "V = {levels} exceeds the {} ladder octaves",
            ladder.octaves()
        ));
    }
    if l < -1 {
        return param("L must be >= -1");
    }
    if let Some(e) = target {
        check_atom_orders(k, l, e.alpha.min(), e.alpha.max())?;
    }
    let scales: Vec<f64> = ladder
        .nodes()
        .iter()
        .filter(|n| n.octave <= levels)
        .map(|n| n.t)
        .collect();
    let c_phi = derivative_constant(frame, Window::Psi, &scales, k);
    let c_big_phi = derivative_constant(frame, Window::BigPsi, &[1.0], k);
    let spectrum = f.spectrum();
    let dv = spec.cell_measure();
    let mut entries = BTreeMap::new();

    let mut add_level = |v: u32, window: Window, nodes: Vec<(f64, f64)>, c: f64| {
        let pieces: Vec<GridFunction> = nodes
            .iter()
            .map(|&(t, _)| frame.apply(&spectrum, window, t))
            .collect();
        for cube in DyadicCube::cubes_in_box(&spec, v) {
            let idx = cube.grid_indices(&spec);
            let mut energy = 0.0;
            for (piece, &(_, w)) in pieces.iter().zip(&nodes) {
                energy += w * idx.iter().map(|&i| piece.samples()[i].norm_sqr()).sum::<f64>() * dv;
            }
            let lambda = c * energy.sqrt();
            let entry = if lambda < COEFFICIENT_FLOOR {
                AtomEntry {
                    cube,
                    lambda: 0.0,
                    atom: AtomShape::Zero,
                }
            } else {
                AtomEntry {
                    cube,
                    lambda,
                    atom: AtomShape::Factored(FactoredAtom {
                        window,
                        scales: nodes.clone(),
                        local: pieces
                            .iter()
                            .map(|p| idx.iter().map(|&i| p.samples()[i] / lambda).collect())
                            .collect(),
                    }),
                }
            };
            entries.insert(cube, entry);
        }
    };
    add_level(0, Window::BigPsi, vec![(1.0, 1.0)], c_big_phi);
    for v in 1..=levels {
        let nodes = ladder.nodes()[ladder.octave_range(v)]
            .iter()
            .map(|n| (n.t, n.weight))
            .collect();
        add_level(v, Window::Psi, nodes, c_phi);
    }
    Ok(AtomicDecomposition {
        spec,
        entries,
        frame: Some(frame.clone()),
        c_phi,
        c_big_phi,
        k,
        l,
        levels,
    })
}

/// `Σ_{v,m} λ_{v,m} ρ_{v,m}` on the grid.
pub fn synthesize(dec: &AtomicDecomposition) -> Result<GridFunction> {
    let spec = dec.spec;
    let mut dense = vec![Complex64::new(0.0, 0.0); spec.len()];
    // per (window, t) accumulation of λ·w·local, convolved once at the end
    let mut buffers: HashMap<(Window, u64), Vec<Complex64>> = HashMap::new();
    let mut order: Vec<(Window, u64)> = Vec::new();
    for e in dec.entries.values() {
        if e.lambda == 0.0 {
            continue;
        }
        match &e.atom {
            AtomShape::Zero => {}
            AtomShape::Missing => {
                return Err(Error::Parameter(format!(
                    "coefficient for {:?} has no atom",
                    e.cube
                )))
            }
            AtomShape::Sampled(g) => {
                g.spec().ensure_same(&spec)?;
                for (d, s) in dense.iter_mut().zip(g.samples()) {
                    *d += s * e.lambda;
                }
            }
            AtomShape::Factored(fa) => {
                let idx = e.cube.grid_indices(&spec);
                for ((t, w), local) in fa.scales.iter().zip(&fa.local) {
                    let key = (fa.window, t.to_bits());
                    let buf = buffers.entry(key).or_insert_with(|| {
                        order.push(key);
                        vec![Complex64::new(0.0, 0.0); spec.len()]
                    });
                    for (&i, z) in idx.iter().zip(local) {
                        buf[i] += z * (e.lambda * w);
                    }
                }
            }
        }
    }
    if !buffers.is_empty() {
        let frame = dec
            .frame
            .as_ref()
            .ok_or_else(|| Error::Parameter("factored atoms need their frame".into()))?;
        order.sort_by(|a, b| (a.0 as u8, a.1).cmp(&(b.0 as u8, b.1)));
        for key in order {
            let buf = buffers.remove(&key).expect("buffer registered");
            let g = GridFunction::new(spec, buf)?;
            let piece = frame.apply(&Spectrum::from_grid(&g), key.0, f64::from_bits(key.1));
            for (d, s) in dense.iter_mut().zip(piece.samples()) {
                *d += s;
            }
        }
    }
    GridFunction::new(spec, dense)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceForm {
    Continuous,
    Discrete,
}

/// Sign of the `n/2` shift in the level weights `2^{v(α(·) ± n/2)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfShift {
    Plus,
    Minus,
}

impl HalfShift {
    fn sign(self) -> f64 {
        match self {
            HalfShift::Plus => 1.0,
            HalfShift::Minus => -1.0,
        }
    }
}

/// `‖λ‖_b`: the level-0 term plus either the octave-blocked ladder norm of
/// `t^{-(α(·)±n/2)} Σ_m λ_{v,m}χ_{v,m}` or the discrete `q(0)` sum of
/// `2^{v(α(·)±n/2)} Σ_m λ_{v,m}χ_{v,m}`.
pub fn sequence_norm_b(
    dec: &AtomicDecomposition,
    exps: Exponents,
    ladder: &ScaleLadder,
    form: SequenceForm,
    shift: HalfShift,
) -> Result<f64> {
    let spec = dec.spec;
    for field in [exps.alpha, exps.p] {
        match field.grid() {
            Some(g) => g.ensure_same(&spec)?,
            None => return Err(Error::GridMismatch("spatial exponent on a t-axis".into())),
        }
    }
    let half = shift.sign() * spec.dimension() as f64 / 2.0;
    let level0 = luxemburg_real(&dec.level_function(0), exps.p)?.value;
    let top = dec
        .entries
        .keys()
        .map(|c| c.level)
        .max()
        .unwrap_or(0)
        .min(ladder.octaves());
    let tail = match form {
        SequenceForm::Discrete => {
            let q0 = exps
                .q
                .limit_value()
                .ok_or_else(|| Error::Parameter("q(0) is required".into()))?;
            let mut s = 0.0;
            for v in 1..=top {
                let lv = dec.level_function(v);
                let weighted: Vec<f64> = lv
                    .iter()
                    .zip(exps.alpha.samples())
                    .map(|(l, a)| l * (v as f64 * (a + half)).exp2())
                    .collect();
                s += luxemburg_real(&weighted, exps.p)?.value.powf(q0);
            }
            s.powf(1.0 / q0)
        }
        SequenceForm::Continuous => {
            let mut levels = Vec::new();
            let mut qs = Vec::new();
            for v in 1..=top {
                let lv = dec.level_function(v);
                let r = ladder.octave_range(v);
                let nodes = &ladder.nodes()[r.clone()];
                let qk = &exps.q.samples()[r.clone()];
                let mut mags = Vec::with_capacity(nodes.len());
                for (node, q) in nodes.iter().zip(qk) {
                    let lt = node.t.ln();
                    let weighted: Vec<f64> = lv
                        .iter()
                        .zip(exps.alpha.samples())
                        .map(|(l, a)| l * (-(a + half) * lt).exp())
                        .collect();
                    let g = luxemburg_real(&weighted, exps.p)?.value;
                    mags.push(node.t.powf(-1.0 / q) * g);
                }
                levels.push(Level {
                    magnitudes: mags,
                    exponents: qk.to_vec(),
                    measures: nodes.iter().map(|n| n.weight * n.t).collect(),
                });
                qs.push(exps.q.value_at_t(octave_midpoint(v)));
            }
            mixed_norm_raw(&levels, &qs)?
        }
    };
    Ok(level0 + tail)
}

/// `v,m1,m2,lambda` rows, one per entry.
pub fn write_coefficients_csv(dec: &AtomicDecomposition, mut out: impl Write) -> Result<()> {
    writeln!(out, "v,m1,m2,lambda")?;
    for e in dec.entries.values() {
        writeln!(
            out,
            "{},{},{},{:.16e}",
            e.cube.level, e.cube.index[0], e.cube.index[1], e.lambda
        )?;
    }
    Ok(())
}

fn atom_file_name(cube: &DyadicCube) -> String {
    format!("atom_v{}_m{}_{}.vbgf", cube.level, cube.index[0], cube.index[1])
}

/// Writes dense samples of the nonzero atoms at levels `<= max_level`.
pub fn export_atoms(dec: &AtomicDecomposition, dir: &Path, max_level: u32) -> Result<usize> {
    std::fs::create_dir_all(dir)?;
    let mut count = 0;
    for e in dec.entries.values() {
        if e.lambda == 0.0 || e.cube.level > max_level {
            continue;
        }
        let a = dec.atom_samples(&e.cube)?;
        let file = std::fs::File::create(dir.join(atom_file_name(&e.cube)))?;
        write_binary(&a, std::io::BufWriter::new(file))?;
        count += 1;
    }
    Ok(count)
}

/// Reads a coefficient CSV; atoms are taken from `atom_dir` when a file for
/// the cube exists there, otherwise the entry is marked as missing.
pub fn read_coefficients_csv(
    spec: GridSpec,
    input: impl BufRead,
    atom_dir: Option<&Path>,
) -> Result<AtomicDecomposition> {
    let mut dec = AtomicDecomposition::empty(spec);
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != "v,m1,m2,lambda" {
                return Err(Error::Format(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| Error::Format(format!("line {}: bad {what}", lineno + 1));
        if cols.len() != 4 {
            return Err(bad("column count"));
        }
        let v: u32 = cols[0].parse().map_err(|_| bad("level"))?;
        let m1: i64 = cols[1].parse().map_err(|_| bad("index"))?;
        let m2: i64 = cols[2].parse().map_err(|_| bad("index"))?;
        let lambda: f64 = cols[3].parse().map_err(|_| bad("coefficient"))?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(bad("coefficient"));
        }
        let cube = DyadicCube::new(spec.dimension(), v, [m1, m2]);
        let atom = if lambda == 0.0 {
            AtomShape::Zero
        } else {
            match atom_dir.map(|d| d.join(atom_file_name(&cube))) {
                Some(path) if path.exists() => {
                    let file = std::fs::File::open(path)?;
                    AtomShape::Sampled(read_binary(std::io::BufReader::new(file))?)
                }
                _ => AtomShape::Missing,
            }
        };
        dec.levels = dec.levels.max(v);
        dec.entries.insert(cube, AtomEntry { cube, lambda, atom });
    }
    Ok(dec)
}

/// Self-contained serialized form (coefficients, factored atoms and the
/// frame recipe).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub grid: GridSpec,
    pub profile: Option<BumpProfile>,
    pub octaves: u32,
    pub nodes_per_octave: usize,
    pub c_phi: f64,
    pub c_big_phi: f64,
    pub k: u32,
    pub l: i32,
    pub levels: u32,
    pub entries: Vec<AtomEntry>,
}

impl DecompositionFile {
    pub fn from_decomposition(dec: &AtomicDecomposition) -> Self {
        let (profile, octaves, j) = match &dec.frame {
            Some(f) => (
                Some(*f.profile()),
                f.ladder().octaves(),
                f.ladder().nodes_per_octave(),
            ),
            None => (None, 0, 0),
        };
        Self {
            grid: dec.spec,
            profile,
            octaves,
            nodes_per_octave: j,
            c_phi: dec.c_phi,
            c_big_phi: dec.c_big_phi,
            k: dec.k,
            l: dec.l,
            levels: dec.levels,
            entries: dec.entries.values().cloned().collect(),
        }
    }

    pub fn into_decomposition(self) -> Result<AtomicDecomposition> {
        let frame = match self.profile {
            Some(p) => Some(build_resolution_of_unity(
                self.grid,
                ScaleLadder::new(self.octaves, self.nodes_per_octave)?,
                p,
            )?),
            None => None,
        };
        Ok(AtomicDecomposition {
            spec: self.grid,
            entries: self.entries.into_iter().map(|e| (e.cube, e)).collect(),
            frame,
            c_phi: self.c_phi,
            c_big_phi: self.c_big_phi,
            k: self.k,
            l: self.l,
            levels: self.levels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{log_weight, ExponentField, ExponentKind};
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn frame(n: usize) -> CalderonFrame {
        let g = make_grid(1, 16.0, n).unwrap();
        build_resolution_of_unity(g, ScaleLadder::new(8, 4).unwrap(), BumpProfile::standard()).unwrap()
    }

    fn bump_atom(g: GridSpec, cube: DyadicCube, with_mean: bool) -> GridFunction {
        let v = cube.level as f64;
        let c = cube.center()[0];
        GridFunction::from_fn(g, move |[x, _]| {
            let u = (x - c) * v.exp2();
            if u.abs() >= 1.0 {
                return 0.0;
            }
            let b = (-1.0 / (1.0 - u * u)).exp();
            // odd profile has zero mean
            let shape = if with_mean { b } else { u * b };
            v.exp2().sqrt() * shape
        })
    }

    #[test]
    fn validator_examples() {
        let g = make_grid(1, 16.0, 4096).unwrap();
        let cube = DyadicCube::line(3, 2);
        let a = bump_atom(g, cube, true);
        let d = validate_atom(&a, cube, 1, -1, 3.0).unwrap();
        assert!(d.pass, "{d:?}");
        assert!(d.support_leak == 0.0 && d.effective_gamma <= 2.0 + 1e-9);
        let d = validate_atom(&a, cube, 1, 0, 3.0).unwrap();
        assert!(!d.pass && !d.moment_pass);
        assert!(d.moments[0].value > d.moments[0].bound);
        let odd = bump_atom(g, cube, false);
        assert!(validate_atom(&odd, cube, 1, 0, 3.0).unwrap().moment_pass);
        let z = GridFunction::zeros(g);
        for (k, l) in [(0, -1), (2, 1), (3, 2)] {
            assert!(validate_atom(&z, cube, k, l, 3.0).unwrap().pass);
        }
    }

    #[test]
    fn zero_function_gives_zero_decomposition() {
        let fr = frame(1024);
        let z = GridFunction::zeros(*fr.spec());
        let dec = analyze(&z, &fr, 8, 1, -1, None).unwrap();
        assert!(dec.entries.values().all(|e| e.lambda == 0.0 && e.atom == AtomShape::Zero));
        assert!(synthesize(&dec).unwrap().is_zero());
        assert!(synthesize(&AtomicDecomposition::empty(*fr.spec())).unwrap().is_zero());
    }

    fn smooth_fn(g: GridSpec) -> GridFunction {
        GridFunction::from_fn(g, |[x, _]| {
            (-x * x).exp() * (1.0 + 0.5 * (3.0 * x).cos()) + 0.3 * (-(x - 2.0).powi(2) * 4.0).exp()
        })
    }

    #[test]
    fn round_trip_and_coefficient_energy() {
        let fr = frame(2048);
        let f = smooth_fn(*fr.spec());
        let dec = analyze(&f, &fr, 8, 1, -1, None).unwrap();
        let back = synthesize(&dec).unwrap();
        let err = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(err <= 0.05, "relative error {err}");
        // Σλ² equals the weighted ψ energies exactly
        let s = f.spectrum();
        let mut rhs = dec.c_big_phi.powi(2) * fr.apply(&s, Window::BigPsi, 1.0).l2_norm().powi(2);
        for n in fr.ladder().nodes() {
            rhs += dec.c_phi.powi(2) * n.weight * fr.apply(&s, Window::Psi, n.t).l2_norm().powi(2);
        }
        let lhs = dec.coefficient_energy();
        assert!((lhs - rhs).abs() < 1e-10 * rhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn single_entry_synthesizes_its_atom() {
        let fr = frame(512);
        let f = smooth_fn(*fr.spec());
        let dec = analyze(&f, &fr, 4, 1, -1, None).unwrap();
        let cube = DyadicCube::line(2, 1);
        let atom = dec.atom_samples(&cube).unwrap();
        let mut single = dec.clone();
        single.entries.retain(|c, _| *c == cube);
        single.entries.get_mut(&cube).unwrap().lambda = 1.0;
        let s = synthesize(&single).unwrap();
        assert!(s.sub(&atom).unwrap().max_abs() == 0.0);
        let d = validate_atom(&atom, cube, 1, -1, 3.0).unwrap();
        assert!(d.inflation <= 1.0, "inflation {}", d.inflation);
        assert!(d.accepts(d.inflation, d.effective_gamma));
    }

    #[test]
    fn order_hypotheses() {
        let fr = frame(256);
        let g = *fr.spec();
        let alpha = ExponentField::constant(g, ExponentKind::Alpha, 1.5).unwrap();
        let p = ExponentField::constant(g, ExponentKind::P, 2.0).unwrap();
        let q = ExponentField::constant_q(fr.ladder(), 2.0).unwrap();
        let f = smooth_fn(g);
        let err = analyze(&f, &fr, 4, 1, -1, Some(Exponents::new(&alpha, &p, &q))).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }));
        assert!(analyze(&f, &fr, 4, 2, -1, Some(Exponents::new(&alpha, &p, &q))).is_ok());
        assert!(check_atom_orders(1, -1, -0.5, 0.5).is_err());
        assert!(check_atom_orders(1, 0, -0.5, 0.5).is_ok());
    }

    #[test]
    fn sequence_norm_examples() {
        let g = make_grid(1, 16.0, 256).unwrap();
        let ladder = ScaleLadder::new(8, 4).unwrap();
        let alpha = ExponentField::constant(g, ExponentKind::Alpha, 0.5).unwrap();
        let p = ExponentField::constant(g, ExponentKind::P, 2.0).unwrap();
        let q = ExponentField::constant_q(&ladder, 2.0).unwrap();
        let e = Exponents::new(&alpha, &p, &q);
        let mut dec = AtomicDecomposition::empty(g);
        for form in [SequenceForm::Continuous, SequenceForm::Discrete] {
            assert_eq!(sequence_norm_b(&dec, e, &ladder, form, HalfShift::Plus).unwrap(), 0.0);
        }
        let c = DyadicCube::line(0, 0);
        dec.entries.insert(c, AtomEntry { cube: c, lambda: 1.0, atom: AtomShape::Missing });
        let v = sequence_norm_b(&dec, e, &ladder, SequenceForm::Continuous, HalfShift::Plus).unwrap();
        assert!((v - 1.0).abs() < 1e-9);

        let qv = ExponentField::q_on_ladder(&ladder, 2.0, |t| 2.0 + 1.0 / log_weight(t)).unwrap();
        let e = Exponents::new(&alpha, &p, &qv);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for v in 1..=6 {
            for cube in DyadicCube::cubes_in_box(&g, v) {
                dec.entries.insert(cube, AtomEntry { cube, lambda: rng.gen::<f64>(), atom: AtomShape::Missing });
            }
        }
        let a = sequence_norm_b(&dec, e, &ladder, SequenceForm::Continuous, HalfShift::Plus).unwrap();
        let b = sequence_norm_b(&dec, e, &ladder, SequenceForm::Discrete, HalfShift::Plus).unwrap();
        assert!(a / b > 0.5 && a / b < 2.0, "ratio {}", a / b);
        let m = sequence_norm_b(&dec, e, &ladder, SequenceForm::Discrete, HalfShift::Minus).unwrap();
        assert!(m < b);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let fr = frame(256);
        let f = GridFunction::from_fn(*fr.spec(), |[x, _]| (-x * x).exp() * (2.0 * PI * x / 4.0).cos());
        let dec = analyze(&f, &fr, 3, 1, -1, None).unwrap();
        let mut csv = Vec::new();
        write_coefficients_csv(&dec, &mut csv).unwrap();
        let back = read_coefficients_csv(*fr.spec(), &csv[..], None).unwrap();
        for (c, e) in &dec.entries {
            assert_eq!(back.coefficient(c), Some(e.lambda));
        }
        let dir = tempfile::tempdir().unwrap();
        let n = export_atoms(&dec, dir.path(), 1).unwrap();
        assert!(n > 0);
        let with_atoms = read_coefficients_csv(*fr.spec(), &csv[..], Some(dir.path())).unwrap();
        let mut low = with_atoms.clone();
        low.entries.retain(|c, _| c.level <= 1);
        let mut ref_low = dec.clone();
        ref_low.entries.retain(|c, _| c.level <= 1);
        let diff = synthesize(&low).unwrap().sub(&synthesize(&ref_low).unwrap()).unwrap();
        assert!(diff.max_abs() < 1e-12);

        let json = serde_json::to_string(&DecompositionFile::from_decomposition(&dec)).unwrap();
        let file: DecompositionFile = serde_json::from_str(&json).unwrap();
        let re = file.into_decomposition().unwrap();
        let d = synthesize(&re).unwrap().sub(&synthesize(&dec).unwrap()).unwrap();
        assert!(d.max_abs() < 1e-12);
    }
}
