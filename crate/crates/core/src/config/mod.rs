//! Plain-text run configuration.
//!
//! One `key = value` per line; `#` starts a comment. Keys and defaults:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `dimension` | `1` | 1 or 2 |
//! | `box_length` | `16` | side `L` of the periodic box `[-L/2, L/2)^n` |
//! | `points` | `1024` | samples per axis |
//! | `octaves` | `7` | ladder octaves `V` |
//! | `nodes_per_octave` | `4` | ladder nodes per octave `J` |
//! | `alpha` | `0.5` | `α(x)`, an expression in `x` (and `y`) or `file:<csv>` |
//! | `alpha_limit` | none | value of `α` at infinity |
//! | `p` | `2` | `p(x)`, as for `alpha`; must be `>= 1` |
//! | `p_limit` | none | value of `p` at infinity |
//! | `q` | `2` | `q(t)` on `(0, 1]`, an expression in `t` or `file:<csv>` with `t,q` rows |
//! | `q0` | `q` at `t = 0` | value `q(0)` |
//! | `function` | `exp(-x^2)` | input function for `norm` and `decompose` |
//! | `frame_sharpness`, `frame_skew` | `1`, `0` | bump profile of the frame |
//! | `kernel_order`, `kernel_epsilon` | `1`, `1` | local-mean moment order `S` and width |
//! | `peetre_a` | `2` | Peetre exponent |
//! | `atom_k`, `atom_l` | `1`, `-1` | atom smoothness `K` and moment order `L` |
//! | `seed` | `7` | |
//! | `out` | `vbesov-out` | output directory |
//! | `jobs` | `0` | worker count, `0` = all logical cores |
//! | `budget` | `1` | multiplier on verification sample budgets |
//!
//! Relative `file:` paths are resolved against the directory of the config.

pub mod expr;

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

pub use expr::{ExprError, Expression, Var};

use crate::error::{Error, Result};
use crate::exponents::{Axis, ExponentField, ExponentKind};
use crate::frame::{build_local_mean_pair, build_resolution_of_unity, BumpProfile, CalderonFrame, LocalMeanPair};
use crate::grid::{make_grid, read_csv, GridFunction, GridSpec};
use crate::lebesgue::ScaleLadder;
use crate::verify::SuiteConfig;

/// An expression or a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Expr(Expression),
    File(PathBuf),
}

impl Source {
    fn expr(s: &str) -> Self {
        Source::Expr(Expression::parse(s).expect("built-in default parses"))
    }

    fn emit(&self) -> String {
        match self {
            Source::Expr(e) => e.source().to_string(),
            Source::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dimension: usize,
    pub box_length: f64,
    pub points: usize,
    pub octaves: u32,
    pub nodes_per_octave: usize,
    pub alpha: Source,
    pub alpha_limit: Option<f64>,
    pub p: Source,
    pub p_limit: Option<f64>,
    pub q: Source,
    pub q0: Option<f64>,
    pub function: Source,
    pub frame_sharpness: f64,
    pub frame_skew: f64,
    pub kernel_order: i32,
    pub kernel_epsilon: f64,
    pub peetre_a: f64,
    pub atom_k: u32,
    pub atom_l: i32,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub budget: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            box_length: 16.0,
            points: 1024,
            octaves: 7,
            nodes_per_octave: 4,
            alpha: Source::expr("0.5"),
            alpha_limit: None,
            p: Source::expr("2"),
            p_limit: None,
            q: Source::expr("2"),
            q0: None,
            function: Source::expr("exp(-x^2)"),
            frame_sharpness: 1.0,
            frame_skew: 0.0,
            kernel_order: 1,
            kernel_epsilon: 1.0,
            peetre_a: 2.0,
            atom_k: 1,
            atom_l: -1,
            seed: 7,
            out: PathBuf::from("vbesov-out"),
            jobs: 0,
            budget: 1.0,
        }
    }
}

fn parse_error<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        column,
        message: message.into(),
    })
}

fn number<T: std::str::FromStr>(text: &str, line: usize, column: usize, what: &str) -> Result<T> {
    text.parse::<T>()
        .or_else(|_| parse_error(line, column, format!("expected {what}, found {text:?}")))
}

impl RunConfig {
    /// Parses configuration text; `base` resolves relative `file:` paths.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.chars().take_while(|c| c.is_whitespace()).count() + 1;
                return parse_error(line, col, "expected `key = value`");
            };
            let key = content[..eq].trim();
            let key_col = content[..eq].chars().take_while(|c| c.is_whitespace()).count() + 1;
            let after = &content[eq + 1..];
            let value = after.trim();
            let col = content[..eq].chars().count() + 2 + after.chars().take_while(|c| c.is_whitespace()).count();
            if key.is_empty() {
                return parse_error(line, key_col, "missing key");
            }
            if value.is_empty() {
                return parse_error(line, col, format!("missing value for {key}"));
            }
            if !seen.insert(key.to_string()) {
                return parse_error(line, key_col, format!("duplicate key {key}"));
            }
            let source = |allowed: &[Var]| -> Result<Source> {
                if let Some(path) = value.strip_prefix("file:") {
                    let path = PathBuf::from(path.trim());
                    let path = match base {
                        Some(b) if path.is_relative() => b.join(path),
                        _ => path,
                    };
                    return Ok(Source::File(path));
                }
                let e = Expression::parse(value).or_else(|e| parse_error(line, col + e.column - 1, e.message))?;
                for v in e.variables() {
                    if !allowed.contains(&v) {
                        let at = e.column_of(v).unwrap_or(1);
                        return parse_error(line, col + at - 1, format!("variable {v} is not allowed in {key}"));
                    }
                }
                Ok(Source::Expr(e))
            };
            let spatial = [Var::X, Var::Y];
            match key {
                "dimension" => cfg.dimension = number(value, line, col, "an integer")?,
                "box_length" => cfg.box_length = number(value, line, col, "a number")?,
                "points" => cfg.points = number(value, line, col, "an integer")?,
                "octaves" => cfg.octaves = number(value, line, col, "an integer")?,
                "nodes_per_octave" => cfg.nodes_per_octave = number(value, line, col, "an integer")?,
                "alpha" => cfg.alpha = source(&spatial)?,
                "alpha_limit" => cfg.alpha_limit = Some(number(value, line, col, "a number")?),
                "p" => cfg.p = source(&spatial)?,
                "p_limit" => cfg.p_limit = Some(number(value, line, col, "a number")?),
                "q" => cfg.q = source(&[Var::T])?,
                "q0" => cfg.q0 = Some(number(value, line, col, "a number")?),
                "function" => cfg.function = source(&spatial)?,
                "frame_sharpness" => cfg.frame_sharpness = number(value, line, col, "a number")?,
                "frame_skew" => cfg.frame_skew = number(value, line, col, "a number")?,
                "kernel_order" => cfg.kernel_order = number(value, line, col, "an integer")?,
                "kernel_epsilon" => cfg.kernel_epsilon = number(value, line, col, "a number")?,
                "peetre_a" => cfg.peetre_a = number(value, line, col, "a number")?,
                "atom_k" => cfg.atom_k = number(value, line, col, "a nonnegative integer")?,
                "atom_l" => cfg.atom_l = number(value, line, col, "an integer")?,
                "seed" => cfg.seed = number(value, line, col, "a nonnegative integer")?,
                "out" => cfg.out = PathBuf::from(value),
                "jobs" => cfg.jobs = number(value, line, col, "a nonnegative integer")?,
                "budget" => cfg.budget = number(value, line, col, "a number")?,
                other => return parse_error(line, key_col, format!("unknown key {other:?}")),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    /// Text that parses back to this configuration.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("dimension", self.dimension.to_string());
        kv("box_length", self.box_length.to_string());
        kv("points", self.points.to_string());
        kv("octaves", self.octaves.to_string());
        kv("nodes_per_octave", self.nodes_per_octave.to_string());
        kv("alpha", self.alpha.emit());
        if let Some(v) = self.alpha_limit {
            kv("alpha_limit", v.to_string());
        }
        kv("p", self.p.emit());
        if let Some(v) = self.p_limit {
            kv("p_limit", v.to_string());
        }
        kv("q", self.q.emit());
        if let Some(v) = self.q0 {
            kv("q0", v.to_string());
        }
        kv("function", self.function.emit());
        kv("frame_sharpness", self.frame_sharpness.to_string());
        kv("frame_skew", self.frame_skew.to_string());
        kv("kernel_order", self.kernel_order.to_string());
        kv("kernel_epsilon", self.kernel_epsilon.to_string());
        kv("peetre_a", self.peetre_a.to_string());
        kv("atom_k", self.atom_k.to_string());
        kv("atom_l", self.atom_l.to_string());
        kv("seed", self.seed.to_string());
        kv("out", self.out.display().to_string());
        kv("jobs", self.jobs.to_string());
        kv("budget", self.budget.to_string());
        s
    }

    pub fn grid(&self) -> Result<GridSpec> {
        make_grid(self.dimension, self.box_length, self.points)
    }

    pub fn ladder(&self) -> Result<ScaleLadder> {
        ScaleLadder::new(self.octaves, self.nodes_per_octave)
    }

    fn grid_values(&self, source: &Source, spec: GridSpec) -> Result<Vec<f64>> {
        match source {
            Source::Expr(e) => Ok((0..spec.len())
                .map(|i| {
                    let [x, y] = spec.point(i);
                    e.eval(x, y, 0.0)
                })
                .collect()),
            Source::File(path) => {
                let f = read_csv(BufReader::new(fs::File::open(path)?))?;
                f.spec().ensure_same(&spec)?;
                Ok(f.re())
            }
        }
    }

    fn spatial_field(&self, source: &Source, spec: GridSpec, kind: ExponentKind, limit: Option<f64>) -> Result<ExponentField> {
        let values = self.grid_values(source, spec)?;
        ExponentField::on_grid(spec, values, kind, limit)
    }

    pub fn alpha_field(&self, spec: GridSpec) -> Result<ExponentField> {
        self.spatial_field(&self.alpha, spec, ExponentKind::Alpha, self.alpha_limit)
    }

    pub fn p_field(&self, spec: GridSpec) -> Result<ExponentField> {
        self.spatial_field(&self.p, spec, ExponentKind::P, self.p_limit)
    }

    /// `q(t)` on the ladder nodes; file data is interpolated in `log t`.
    pub fn q_field(&self, ladder: &ScaleLadder) -> Result<ExponentField> {
        match &self.q {
            Source::Expr(e) => {
                let q0 = self.q0.unwrap_or_else(|| e.eval(0.0, 0.0, 0.0));
                if !q0.is_finite() {
                    return Err(Error::Parameter(format!(
                        "q(0) of {:?} is not finite; set q0 explicitly",
                        e.source()
                    )));
                }
                ExponentField::q_on_ladder(ladder, q0, |t| e.eval(0.0, 0.0, t))
            }
            Source::File(path) => {
                let text = fs::read_to_string(path)?;
                let mut ts = Vec::new();
                let mut qs = Vec::new();
                for (i, row) in text.lines().enumerate().filter(|(_, r)| !r.trim().is_empty()) {
                    let cols: Vec<&str> = row.split(',').map(str::trim).collect();
                    if i == 0 && cols.first() == Some(&"t") {
                        continue;
                    }
                    let parsed: Option<(f64, f64)> = match cols.as_slice() {
                        [t, q] => t.parse().ok().zip(q.parse().ok()),
                        _ => None,
                    };
                    let (t, q) = parsed.ok_or_else(|| {
                        Error::Format(format!("{}: line {}: expected `t,q`", path.display(), i + 1))
                    })?;
                    ts.push(t);
                    qs.push(q);
                }
                let q0 = self.q0.ok_or_else(|| Error::Parameter("q from a file needs q0".into()))?;
                let raw = ExponentField::new(Axis::Points(ts), qs, ExponentKind::P, Some(q0))?;
                ExponentField::q_on_ladder(ladder, q0, |t| raw.value_at_t(t))
            }
        }
    }

    pub fn input_function(&self, spec: GridSpec) -> Result<GridFunction> {
        GridFunction::from_real(spec, self.grid_values(&self.function, spec)?)
    }

    pub fn profile(&self) -> Result<BumpProfile> {
        BumpProfile::new(self.frame_sharpness, self.frame_skew)
    }

    pub fn frame(&self) -> Result<CalderonFrame> {
        build_resolution_of_unity(self.grid()?, self.ladder()?, self.profile()?)
    }

    pub fn local_mean_pair(&self) -> Result<LocalMeanPair> {
        build_local_mean_pair(self.grid()?, self.kernel_order, self.kernel_epsilon)
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            box_length: self.box_length,
            points: self.points,
            octaves: self.octaves,
            nodes_per_octave: self.nodes_per_octave,
            budget: self.budget,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.emit(), None).unwrap(), c);
        assert_eq!(RunConfig::parse("", None).unwrap(), c);
    }

    #[test]
    fn parse_errors_have_positions() {
        let text = "points = 256\n  p = 2 + sin(x\n";
        match RunConfig::parse(text, None).unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 16)),
            e => panic!("{e}"),
        }
        match RunConfig::parse("octaves = seven", None).unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (1, 11)),
            e => panic!("{e}"),
        }
        match RunConfig::parse("# c\nfoo = 1", None).unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 1)),
            e => panic!("{e}"),
        }
        match RunConfig::parse("q = 2 + x", None).unwrap_err() {
            Error::Parse { line, column, message } => {
                assert_eq!((line, column), (1, 9));
                assert!(message.contains("variable x"));
            }
            e => panic!("{e}"),
        }
        assert!(RunConfig::parse("seed = 1\nseed = 2", None).is_err());
        assert!(RunConfig::parse("just words", None).is_err());
    }

    #[test]
    fn fields_and_admissibility() {
        let c = RunConfig::parse("points = 64\np = 0.5", None).unwrap();
        let g = c.grid().unwrap();
        assert!(matches!(c.p_field(g).unwrap_err(), Error::Admissibility(_)));
        let c = RunConfig::parse("points = 64\nq = 2 + 1/log(e + 1/t)\nalpha = 0.5 + 0.3*sin(2*pi*x/16)", None).unwrap();
        let q = c.q_field(&c.ladder().unwrap()).unwrap();
        assert_eq!(q.limit_value(), Some(2.0));
        let a = c.alpha_field(c.grid().unwrap()).unwrap();
        assert!((a.max() - 0.8).abs() < 1e-3);
    }

    #[test]
    fn file_sources() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(1, 16.0, 32).unwrap();
        let f = GridFunction::from_fn(g, |[x, _]| 2.0 + 0.1 * x.cos());
        crate::grid::write_csv(&f, fs::File::create(dir.path().join("p.csv")).unwrap()).unwrap();
        fs::write(dir.path().join("q.csv"), "t,q\n0.001,2.5\n1,3\n").unwrap();
        let text = "points = 32\np = file:p.csv\nq = file:q.csv\nq0 = 2.5\n";
        let c = RunConfig::parse(text, Some(dir.path())).unwrap();
        assert_eq!(c.p_field(g).unwrap().samples(), &f.re()[..]);
        let q = c.q_field(&c.ladder().unwrap()).unwrap();
        assert!(q.min() >= 2.5 && q.max() <= 3.0);
        assert_eq!(RunConfig::parse(&c.emit(), None).unwrap(), c);
    }

    fn expression() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "2".to_string(),
            "0.5 + 0.3*sin(2*pi*x/16)".into(),
            "abs(x)/(1 + abs(x))".into(),
            "exp(-x^2)".into(),
        ])
    }

    proptest! {
        #[test]
        fn emit_parse_round_trip(
            box_length in 0.5f64..100.0,
            points in 8usize..4096,
            octaves in 1u32..20,
            j in 1usize..16,
            alpha in expression(),
            limit in prop::option::of(-3.0f64..3.0),
            skew in -0.9f64..0.9,
            seed in any::<u64>(),
            atom_l in -1i32..4,
            budget in 0.01f64..10.0,
        ) {
            let c = RunConfig {
                box_length,
                points,
                octaves,
                nodes_per_octave: j,
                alpha: Source::expr(&alpha),
                alpha_limit: limit,
                q: Source::expr("2 + 1/log(e + 1/t)"),
                frame_skew: skew,
                seed,
                atom_l,
                budget,
                ..RunConfig::default()
            };
            prop_assert_eq!(RunConfig::parse(&c.emit(), None).unwrap(), c);
        }
    }
}
