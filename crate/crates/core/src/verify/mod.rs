//! Numerical verification harness. Each check evaluates both sides of an
//! inequality over seeded samples and reports the smallest constant that
//! makes it hold, refinement stability, and the designed failure runs.

pub mod bank;
mod lemmas;
mod theorems;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::frame::{build_resolution_of_unity, BumpProfile, CalderonFrame};
use crate::grid::{make_grid, GridSpec};
use crate::lebesgue::ScaleLadder;

pub use bank::{exponent_bank, BankEntry, ExponentSet, Family, FunctionBank};
pub use lemmas::{
    check_eta_algebra, check_hardy, check_kernel_decay, check_key_modular, check_mixed_equivalence,
    check_pointwise_shift, check_subconvolution, HardyInput, KeyMode,
};
pub use theorems::{check_atomic, check_embeddings, check_norm_equivalences, EquivalenceMatrix};

/// Relative change allowed between a configuration and its refinement.
pub const STABILITY_TOLERANCE: f64 = 0.25;

pub const CHECK_IDS: [&str; 10] = [
    "pointwise_shift",
    "subconvolution",
    "eta_algebra",
    "hardy",
    "key_modular",
    "mixed_equivalence",
    "kernel_decay",
    "embeddings",
    "norm_equivalences",
    "atomic",
];

/// Grid and ladder shared by the suite; refinement doubles `points` and
/// `nodes_per_octave`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub box_length: f64,
    pub points: usize,
    pub octaves: u32,
    pub nodes_per_octave: usize,
    /// Multiplier on the per-check sample budgets.
    pub budget: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            box_length: 16.0,
            points: 1024,
            octaves: 7,
            nodes_per_octave: 4,
            budget: 1.0,
        }
    }
}

impl SuiteConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        make_grid(1, self.box_length, self.points)
    }

    pub fn ladder(&self) -> Result<ScaleLadder> {
        ScaleLadder::new(self.octaves, self.nodes_per_octave)
    }

    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points,
            nodes_per_octave: 2 * self.nodes_per_octave,
            ..self.clone()
        }
    }

    pub fn frame(&self, profile: BumpProfile) -> Result<CalderonFrame> {
        build_resolution_of_unity(self.grid()?, self.ladder()?, profile)
    }

    pub(crate) fn samples(&self, base: usize) -> usize {
        ((base as f64 * self.budget).round() as usize).max(1)
    }

    pub(crate) fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub label: String,
    pub parameters: Value,
    /// Minimal admissible constant over the samples of this configuration.
    pub constant: f64,
    pub samples: usize,
    pub detail: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub config: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub label: String,
    pub coarse: f64,
    pub fine: f64,
    pub relative_change: f64,
    pub limit: f64,
}

/// A designed expectation such as a hypothesis-violation run degrading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub label: String,
    pub statement: String,
    pub observed: f64,
    pub holds: bool,
}

/// Wall-clock data, kept apart so the rest of the document is reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub started_unix_seconds: u64,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub seed: u64,
    pub suite: Value,
    pub configs: Vec<ConfigResult>,
    pub constants: BTreeMap<String, f64>,
    pub stability: Vec<Stability>,
    pub expectations: Vec<Expectation>,
    pub violations: Vec<Violation>,
    pub pass: bool,
    pub timestamp: Option<Timestamp>,
}

impl CheckReport {
    pub fn new(id: &str, suite: &SuiteConfig) -> Self {
        Self {
            id: id.into(),
            seed: suite.seed,
            suite: suite.echo(),
            configs: Vec::new(),
            constants: BTreeMap::new(),
            stability: Vec::new(),
            expectations: Vec::new(),
            violations: Vec::new(),
            pass: true,
            timestamp: None,
        }
    }

    /// Records a configuration; a non-finite constant is a violation.
    pub fn record(&mut self, label: &str, parameters: Value, constant: f64, samples: usize, detail: Map<String, Value>) {
        if !constant.is_finite() {
            self.violate(label, format!("no finite constant (measured {constant})"));
        }
        self.constants.insert(label.into(), constant);
        self.configs.push(ConfigResult {
            label: label.into(),
            parameters,
            constant,
            samples,
            detail,
        });
    }

    pub fn violate(&mut self, config: &str, detail: String) {
        self.violations.push(Violation {
            config: config.into(),
            detail,
        });
        self.pass = false;
    }

    /// Fails the check unless `holds`.
    pub fn expect(&mut self, label: &str, statement: &str, observed: f64, holds: bool) {
        self.expectations.push(Expectation {
            label: label.into(),
            statement: statement.into(),
            observed,
            holds,
        });
        if !holds {
            self.violate(label, format!("expectation failed: {statement} (observed {observed})"));
        }
    }

    /// Requires `|fine/coarse - 1| <= limit`.
    pub fn stable(&mut self, label: &str, coarse: f64, fine: f64, limit: f64) {
        let relative_change = if coarse == fine {
            0.0
        } else {
            (fine / coarse - 1.0).abs()
        };
        self.stability.push(Stability {
            label: label.into(),
            coarse,
            fine,
            relative_change,
            limit,
        });
        if !(relative_change <= limit) {
            self.violate(
                label,
                format!("refinement changed the constant by {relative_change:.3} ({coarse} -> {fine})"),
            );
        }
    }

    /// Serializes with the timestamp removed.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp = None;
        crate::json::to_string(&copy)
    }
}

/// Running maximum that also keeps the maximum over the first half of the
/// samples, so that "max over subset <= max over set" can be asserted.
#[derive(Clone, Debug, Default)]
pub(crate) struct SampledMax {
    pub max: f64,
    pub prefix_max: f64,
    pub count: usize,
    pub prefix_len: usize,
}

impl SampledMax {
    pub fn new(total: usize) -> Self {
        Self {
            max: f64::NEG_INFINITY,
            prefix_max: f64::NEG_INFINITY,
            count: 0,
            prefix_len: total / 2,
        }
    }

    pub fn push(&mut self, v: f64) {
        if v > self.max || v.is_nan() {
            self.max = if v.is_nan() { f64::INFINITY } else { v };
        }
        if self.count < self.prefix_len {
            self.prefix_max = self.max;
        }
        self.count += 1;
    }

    pub fn monotone(&self) -> bool {
        self.prefix_max <= self.max
    }
}

pub(crate) fn detail(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Runs one check by id.
pub fn run_check(id: &str, suite: &SuiteConfig) -> Result<CheckReport> {
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let mut report = match id {
        "pointwise_shift" => check_pointwise_shift(suite)?,
        "subconvolution" => check_subconvolution(suite)?,
        "eta_algebra" => check_eta_algebra(suite)?,
        "hardy" => check_hardy(suite)?,
        "key_modular" => check_key_modular(suite)?,
        "mixed_equivalence" => check_mixed_equivalence(suite)?,
        "kernel_decay" => check_kernel_decay(suite)?,
        "embeddings" => check_embeddings(suite)?,
        "norm_equivalences" => check_norm_equivalences(suite)?.0,
        "atomic" => check_atomic(suite)?,
        other => {
            return Err(Error::Parameter(format!(
                "unknown check {other:?}; known: {}",
                CHECK_IDS.join(", ")
            )))
        }
    };
    report.timestamp = Some(Timestamp {
        started_unix_seconds: started,
        runtime_seconds: clock.elapsed().as_secs_f64(),
    });
    Ok(report)
}

/// Runs the given checks on a pool of `jobs` workers; reports come back in
/// the order of `ids`.
pub fn run_suite(ids: &[&str], suite: &SuiteConfig, jobs: usize) -> Result<Vec<CheckReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
    pool.install(|| {
        use rayon::prelude::*;
        ids.par_iter().map(|id| run_check(id, suite)).collect()
    })
}

/// `id,pass,configs,violations,max_constant,runtime_seconds` per report.
pub fn write_rollup_csv(reports: &[CheckReport], mut out: impl Write) -> Result<()> {
    writeln!(out, "id,pass,configs,violations,max_constant,runtime_seconds")?;
    for r in reports {
        let max = r
            .constants
            .values()
            .cloned()
            .filter(|c| c.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.3}",
            r.id,
            r.pass,
            r.configs.len(),
            r.violations.len(),
            max,
            r.timestamp.as_ref().map_or(0.0, |t| t.runtime_seconds)
        )?;
    }
    Ok(())
}
