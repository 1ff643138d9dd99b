//! Command-line front end.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::atomic::{
    analyze, export_atoms, read_coefficients_csv, sequence_norm_b, synthesize, write_coefficients_csv,
    DecompositionFile, HalfShift, SequenceForm,
};
use crate::besov::{besov_norm, local_mean_norm, Exponents, NormForm};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::frame::build_resolution_of_unity;
use crate::grid::{read_csv, write_csv, GridFunction};
use crate::verify::{run_suite, write_rollup_csv, CheckReport, FunctionBank, CHECK_IDS};

#[derive(Debug, Parser)]
#[command(name = "vbesov", version, about = "Variable-exponent Besov norms, frames and atomic decompositions")]
pub struct Cli {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker count (0 = all logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the seeded function bank as CSV files with a manifest.
    GenBank,
    /// Besov norm of the configured function (or `--input` CSV) as JSON.
    Norm {
        /// direct, discretized, q0, peetre, local_mean_prime or local_mean_double_prime.
        #[arg(long, default_value = "direct")]
        form: String,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Atomic decomposition: coefficients CSV, decomposition JSON and the round-trip residual.
    Decompose {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also export dense atoms up to this level.
        #[arg(long)]
        atoms_up_to: Option<u32>,
    },
    /// Rebuild a function from a decomposition JSON or a coefficients CSV.
    Synthesize {
        #[arg(long)]
        input: PathBuf,
        /// Directory of exported atoms, for CSV input.
        #[arg(long)]
        atoms: Option<PathBuf>,
        /// Grid function to compare against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run verification checks (`all` or one id; `--check` may repeat).
    Verify {
        id: Option<String>,
        #[arg(long)]
        check: Vec<String>,
    },
    /// Roll-up CSV of the check reports in a directory.
    Report { dir: Option<PathBuf> },
    /// Print the effective configuration.
    Config,
}

/// 2 for input errors, 3 for violated theorem hypotheses, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Admissibility(_)
        | Error::Parameter(_)
        | Error::GridMismatch(_)
        | Error::Format(_)
        | Error::Unsupported(_) => 2,
        Error::Hypothesis { .. } => 3,
        Error::Construction(_) | Error::Io(_) | Error::Json(_) => 1,
    }
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, crate::json::to_string(value)? + "\n")?;
    Ok(())
}

fn read_grid(path: &Path) -> Result<GridFunction> {
    read_csv(BufReader::new(fs::File::open(path)?))
}

struct Context {
    cfg: RunConfig,
    out_given: bool,
}

impl Context {
    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.cfg.out)?;
        Ok(&self.cfg.out)
    }

    fn jobs(&self) -> usize {
        match self.cfg.jobs {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }

    fn input(&self, path: Option<&Path>) -> Result<GridFunction> {
        match path {
            Some(p) => read_grid(p),
            None => self.cfg.input_function(self.cfg.grid()?),
        }
    }
}

/// Runs the command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    let ctx = Context {
        cfg,
        out_given: cli.out.is_some(),
    };
    match cli.command {
        Command::GenBank => gen_bank(&ctx),
        Command::Norm { form, input } => norm(&ctx, &form, input.as_deref()),
        Command::Decompose { input, atoms_up_to } => decompose(&ctx, input.as_deref(), atoms_up_to),
        Command::Synthesize { input, atoms, reference } => synthesize_cmd(&ctx, &input, atoms.as_deref(), reference.as_deref()),
        Command::Verify { id, check } => verify(&ctx, id, check),
        Command::Report { dir } => report(&ctx, dir),
        Command::Config => {
            print!("{}", ctx.cfg.emit());
            Ok(0)
        }
    }
}

fn gen_bank(ctx: &Context) -> Result<i32> {
    let spec = ctx.cfg.grid()?;
    let bank = FunctionBank::generate(spec, ctx.cfg.seed);
    let dir = ctx.out_dir()?.join("bank");
    fs::create_dir_all(&dir)?;
    for (e, f) in bank.entries.iter().zip(&bank.functions) {
        write_csv(f, BufWriter::new(fs::File::create(dir.join(format!("{}.csv", e.name)))?))?;
    }
    write_json(&dir.join("manifest.json"), &json!({"seed": bank.seed, "grid": spec, "entries": bank.entries}))?;
    println!("wrote {} bank members to {}", bank.len(), dir.display());
    Ok(0)
}

fn norm(ctx: &Context, form: &str, input: Option<&Path>) -> Result<i32> {
    let form = NormForm::parse(form)?;
    let f = ctx.input(input)?;
    let spec = *f.spec();
    let ladder = ctx.cfg.ladder()?;
    let alpha = ctx.cfg.alpha_field(spec)?;
    let p = ctx.cfg.p_field(spec)?;
    let q = ctx.cfg.q_field(&ladder)?;
    let e = Exponents::new(&alpha, &p, &q);
    let report = match form {
        NormForm::LocalMeanPrime | NormForm::LocalMeanDoublePrime => {
            let pair = crate::frame::build_local_mean_pair(spec, ctx.cfg.kernel_order, ctx.cfg.kernel_epsilon)?;
            local_mean_norm(&f, &pair, &ladder, e, ctx.cfg.peetre_a, form)?
        }
        _ => {
            let frame = build_resolution_of_unity(spec, ladder, ctx.cfg.profile()?)?;
            besov_norm(&f, &frame, e, form, Some(ctx.cfg.peetre_a))?
        }
    };
    let text = crate::json::to_string(&report)?;
    println!("{text}");
    if ctx.out_given {
        fs::write(ctx.out_dir()?.join(format!("norm_{}.json", form.name())), text + "\n")?;
    }
    Ok(0)
}

fn decompose(ctx: &Context, input: Option<&Path>, atoms_up_to: Option<u32>) -> Result<i32> {
    let f = ctx.input(input)?;
    let spec = *f.spec();
    let ladder = ctx.cfg.ladder()?;
    let alpha = ctx.cfg.alpha_field(spec)?;
    let p = ctx.cfg.p_field(spec)?;
    let q = ctx.cfg.q_field(&ladder)?;
    let e = Exponents::new(&alpha, &p, &q);
    let frame = build_resolution_of_unity(spec, ladder.clone(), ctx.cfg.profile()?)?;
    let dec = analyze(&f, &frame, ctx.cfg.octaves, ctx.cfg.atom_k, ctx.cfg.atom_l, Some(e))?;
    let back = synthesize(&dec)?;
    let scale = f.l2_norm();
    let residual = back.sub(&f)?.l2_norm();
    let summary = json!({
        "entries": dec.entries.len(),
        "levels": dec.levels,
        "K": dec.k,
        "L": dec.l,
        "c_phi": dec.c_phi,
        "c_big_phi": dec.c_big_phi,
        "coefficient_energy": dec.coefficient_energy(),
        "residual_l2": residual,
        "relative_l2_error": if scale > 0.0 { residual / scale } else { residual },
        "sequence_norm_b": sequence_norm_b(&dec, e, &ladder, SequenceForm::Continuous, HalfShift::Plus)?,
        "besov_norm": besov_norm(&f, &frame, e, NormForm::Direct, None)?.value,
    });
    let dir = ctx.out_dir()?;
    write_coefficients_csv(&dec, BufWriter::new(fs::File::create(dir.join("coefficients.csv"))?))?;
    write_json(&dir.join("decomposition.json"), &DecompositionFile::from_decomposition(&dec))?;
    write_json(&dir.join("residual.json"), &summary)?;
    if let Some(level) = atoms_up_to {
        export_atoms(&dec, &dir.join("atoms"), level)?;
    }
    println!("{}", crate::json::to_string(&summary)?);
    Ok(0)
}

fn synthesize_cmd(ctx: &Context, input: &Path, atoms: Option<&Path>, reference: Option<&Path>) -> Result<i32> {
    let dec = if input.extension().is_some_and(|e| e == "json") {
        let file: DecompositionFile = serde_json::from_reader(BufReader::new(fs::File::open(input)?))?;
        file.into_decomposition()?
    } else {
        read_coefficients_csv(ctx.cfg.grid()?, BufReader::new(fs::File::open(input)?), atoms)?
    };
    let g = synthesize(&dec)?;
    let path = ctx.out_dir()?.join("synthesized.csv");
    write_csv(&g, BufWriter::new(fs::File::create(&path)?))?;
    let mut summary = json!({"output": path.display().to_string(), "entries": dec.entries.len()});
    if let Some(r) = reference {
        let f = read_grid(r)?;
        let residual = g.sub(&f)?.l2_norm();
        let scale = f.l2_norm();
        summary["residual_l2"] = json!(residual);
        summary["relative_l2_error"] = json!(if scale > 0.0 { residual / scale } else { residual });
    }
    println!("{}", crate::json::to_string(&summary)?);
    Ok(0)
}

fn rollup_text(reports: &[CheckReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_rollup_csv(reports, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn verify(ctx: &Context, id: Option<String>, checks: Vec<String>) -> Result<i32> {
    let mut ids: Vec<String> = id.into_iter().chain(checks).collect();
    if ids.is_empty() || ids.iter().any(|i| i == "all") {
        ids = CHECK_IDS.iter().map(|s| s.to_string()).collect();
    }
    for i in &ids {
        if !CHECK_IDS.contains(&i.as_str()) {
            return Err(Error::Parameter(format!("unknown check {i:?}; known: all, {}", CHECK_IDS.join(", "))));
        }
    }
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let reports = run_suite(&refs, &ctx.cfg.suite(), ctx.jobs())?;
    let dir = ctx.out_dir()?;
    for r in &reports {
        write_json(&dir.join(format!("{}.json", r.id)), r)?;
    }
    let rollup = rollup_text(&reports)?;
    fs::write(dir.join("rollup.csv"), &rollup)?;
    print!("{rollup}");
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}

fn report(ctx: &Context, dir: Option<PathBuf>) -> Result<i32> {
    let dir = dir.unwrap_or_else(|| ctx.cfg.out.clone());
    let mut reports = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    for p in paths {
        // other JSON artifacts may share the directory
        if let Ok(r) = serde_json::from_reader::<_, CheckReport>(BufReader::new(fs::File::open(&p)?)) {
            reports.push(r);
        }
    }
    if reports.is_empty() {
        return Err(Error::Parameter(format!("no check reports in {}", dir.display())));
    }
    let rank = |id: &str| CHECK_IDS.iter().position(|c| *c == id).unwrap_or(CHECK_IDS.len());
    reports.sort_by(|a, b| rank(&a.id).cmp(&rank(&b.id)).then(a.id.cmp(&b.id)));
    let rollup = rollup_text(&reports)?;
    fs::write(dir.join("report.csv"), &rollup)?;
    print!("{rollup}");
    Ok(0)
}
