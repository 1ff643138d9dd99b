//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use vbesov::besov::{besov_norm, lp_profile, sobolev_norm, Exponents, NormForm};
use vbesov::exponents::{ExponentField, ExponentKind};
use vbesov::frame::{build_resolution_of_unity, BumpProfile, Window};
use vbesov::grid::make_grid;
use vbesov::lebesgue::{luxemburg_norm, modular, ScaleLadder};
use vbesov::verify::bank::{sinusoidal_p, WEIERSTRASS_SMOOTHNESS};
use vbesov::verify::{
    check_atomic, check_embeddings, check_eta_algebra, check_hardy, check_kernel_decay, check_key_modular,
    check_mixed_equivalence, check_norm_equivalences, check_pointwise_shift, check_subconvolution, CheckReport,
    Family, FunctionBank, SuiteConfig, CHECK_IDS,
};

type Outcome = Result<(bool, String), String>;

/// Smallest `λ` on successively refined geometric scans with `ρ(f/λ) <= 1`.
fn scan_norm(rho: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    while hi / lo - 1.0 > 1e-12 {
        let steps = 1000;
        let mut first = hi;
        for k in 0..=steps {
            let lambda = lo * (hi / lo).powf(k as f64 / steps as f64);
            if rho(lambda) <= 1.0 {
                first = lambda;
                let prev = lo * (hi / lo).powf((k.max(1) - 1) as f64 / steps as f64);
                lo = prev;
                break;
            }
        }
        hi = first;
    }
    hi
}

fn criterion_1() -> Outcome {
    let spec = make_grid(1, 16.0, 1024).map_err(|e| e.to_string())?;
    let bank = FunctionBank::generate(spec, 7);
    let p = sinusoidal_p(spec).map_err(|e| e.to_string())?;
    let mut ball = true;
    let mut reduction: f64 = 0.0;
    let mut scan: f64 = 0.0;
    for f in &bank.functions {
        let n = luxemburg_norm(f, &p, None).map_err(|e| e.to_string())?.value;
        for c in [0.25, 0.9, 0.999_999, 1.000_001, 1.1, 4.0] {
            let g = f.scale(c / n);
            let gn = luxemburg_norm(&g, &p, None).unwrap().value;
            let rho = modular(&g, &p, None).unwrap();
            if (gn - 1.0).abs() > 1e-9 {
                ball &= (gn <= 1.0) == (rho <= 1.0);
            }
        }
        for p0 in [1.0, 1.5, 2.0, 3.0] {
            let pc = ExponentField::constant(spec, ExponentKind::P, p0).unwrap();
            let lux = luxemburg_norm(f, &pc, None).unwrap().value;
            let direct = (f.abs().iter().map(|a| a.powf(p0)).sum::<f64>() * spec.spacing()).powf(1.0 / p0);
            reduction = reduction.max((lux / direct - 1.0).abs());
        }
        let oracle = scan_norm(|l| modular(&f.scale(1.0 / l), &p, None).unwrap());
        scan = scan.max((n / oracle - 1.0).abs());
    }
    let pass = ball && reduction <= 1e-9 && scan <= 1e-8;
    Ok((pass, format!("unit ball {ball}, constant-p error {reduction:.2e}, scan error {scan:.2e}")))
}

fn criterion_2() -> Outcome {
    let spec = make_grid(1, 16.0, 1024).map_err(|e| e.to_string())?;
    let ladder = ScaleLadder::new(7, 4).unwrap();
    let fine = ladder.refined(64).unwrap();
    let bank = FunctionBank::generate(spec, 7);
    let mut worst: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for profile in [BumpProfile::standard(), BumpProfile::skewed()] {
        let frame = build_resolution_of_unity(spec, ladder.clone(), profile).map_err(|e| e.to_string())?;
        worst = worst.max(frame.residual());
        // Φ∗f + Σ w φ_t∗f reproduces band-limited members
        for (_, f) in bank.of_family(Family::BandLimitedNoise) {
            let s = f.spectrum();
            let mut g = frame.apply(&s, Window::BigPhi, 1.0);
            for n in fine.nodes() {
                g = g.add(&frame.apply(&s, Window::Phi, n.t).scale(n.weight)).unwrap();
            }
            recon = recon.max(g.sub(f).unwrap().max_abs() / f.max_abs());
        }
    }
    Ok((worst <= 1e-6 && recon <= 1e-6, format!("identity residual {worst:.2e}, reconstruction error {recon:.2e}")))
}

fn sobolev_ratios(points: usize, octaves: u32) -> Vec<f64> {
    let spec = make_grid(1, 16.0, points).unwrap();
    let frame = build_resolution_of_unity(spec, ScaleLadder::new(octaves, 4).unwrap(), BumpProfile::standard()).unwrap();
    let bank = FunctionBank::generate(spec, 7);
    let p = ExponentField::constant(spec, ExponentKind::P, 2.0).unwrap();
    let q = ExponentField::constant_q(frame.ladder(), 2.0).unwrap();
    let mut out = Vec::new();
    for s in [0.3, 0.5, 1.2] {
        let alpha = ExponentField::constant(spec, ExponentKind::Alpha, s).unwrap();
        for f in &bank.functions {
            let b = besov_norm(f, &frame, Exponents::new(&alpha, &p, &q), NormForm::Direct, None).unwrap().value;
            out.push(b / sobolev_norm(f, s));
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let coarse = sobolev_ratios(1024, 7);
    let fine = sobolev_ratios(2048, 14);
    let lo = coarse.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = coarse.iter().cloned().fold(0.0, f64::max);
    let drift = coarse.iter().zip(&fine).map(|(c, f)| (f / c - 1.0).abs()).fold(0.0, f64::max);
    let pass = lo >= 1.0 / 3.0 && hi <= 3.0 && drift <= 0.25;
    Ok((pass, format!("ratio range [{lo:.3}, {hi:.3}], refinement drift {drift:.3}")))
}

fn criterion_4() -> Outcome {
    let spec = make_grid(1, 16.0, 1024).unwrap();
    let frame = build_resolution_of_unity(spec, ScaleLadder::new(7, 4).unwrap(), BumpProfile::standard()).unwrap();
    let bank = FunctionBank::generate(spec, 7);
    let alpha = ExponentField::constant(spec, ExponentKind::Alpha, 0.0).unwrap();
    let p = ExponentField::constant(spec, ExponentKind::P, 2.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut slopes = Vec::new();
    for ((_, f), s) in bank.of_family(Family::Weierstrass).zip(WEIERSTRASS_SMOOTHNESS) {
        let slope = lp_profile(f, &frame, &alpha, &p).unwrap().log_slope(2, 6).unwrap();
        worst = worst.max((slope - s).abs());
        slopes.push(format!("s={s}: {slope:.3}"));
    }
    Ok((worst <= 0.1, format!("{} (max deviation {worst:.3})", slopes.join(", "))))
}

fn criterion_5() -> Outcome {
    let suite = SuiteConfig {
        points: 2048,
        octaves: 8,
        ..SuiteConfig::default()
    };
    let (report, matrix) = check_norm_equivalences(&suite).map_err(|e| e.to_string())?;
    let (s, i, j, w) = matrix.worst();
    let msg = format!(
        "worst ratio {w:.3} ({} / {}, {} exponents), violations {}",
        matrix.forms[i],
        matrix.forms[j],
        matrix.exponent_sets[s],
        report.violations.len()
    );
    Ok((report.pass && matrix.within(10.0), msg))
}

fn constant(r: &CheckReport, label: &str) -> f64 {
    r.constants.get(label).copied().unwrap_or(f64::NAN)
}

fn criterion_6() -> Outcome {
    let suite = SuiteConfig {
        points: 2048,
        octaves: 8,
        ..SuiteConfig::default()
    };
    let r = check_atomic(&suite).map_err(|e| e.to_string())?;
    let msg = format!(
        "round-trip error {:.2e}, b/B constant {:.3}, atom inflation {:.3}, violations {}",
        constant(&r, "round_trip"),
        constant(&r, "b_over_B"),
        constant(&r, "atom_validation"),
        r.violations.len()
    );
    Ok((r.pass, msg))
}

fn criterion_7() -> Outcome {
    let suite = SuiteConfig::default();
    let runs = [
        check_pointwise_shift(&suite),
        check_subconvolution(&suite),
        check_eta_algebra(&suite),
        check_hardy(&suite),
        check_key_modular(&suite),
        check_mixed_equivalence(&suite),
        check_kernel_decay(&suite),
    ];
    let mut failed = Vec::new();
    let mut degradation = Vec::new();
    for r in runs {
        let r = r.map_err(|e| e.to_string())?;
        if !r.pass {
            failed.push(r.id.clone());
        }
        for e in r.expectations.iter().filter(|e| e.label == "sinusoidal_R0" || e.label == "M=-1") {
            degradation.push(format!("{}: {:.3}", e.label, e.observed));
        }
    }
    let msg = format!("failed [{}], hypothesis-violation runs [{}]", failed.join(", "), degradation.join(", "));
    Ok((failed.is_empty() && degradation.len() == 2, msg))
}

fn criterion_8() -> Outcome {
    let r = check_embeddings(&SuiteConfig::default()).map_err(|e| e.to_string())?;
    let msg = format!(
        "smoothness gap {:.3}, q-monotone {:.3}, Sobolev line c = {:.3}, variable Sobolev line c = {:.3}",
        constant(&r, "smoothness_gap"),
        constant(&r, "q_monotone_constant"),
        constant(&r, "sobolev_constant"),
        constant(&r, "sobolev_variable")
    );
    Ok((r.pass, msg))
}

fn verify_all(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_vbesov"))
        .args(["verify", "all", "--seed", "7", "--out"])
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("verify all exited with {status}"))
    }
}

fn without_timestamp(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("report is not an object")?.remove("timestamp");
    Ok(v.to_string())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    verify_all(&a)?;
    verify_all(&b)?;
    let mut differing = Vec::new();
    for id in CHECK_IDS {
        let name = format!("{id}.json");
        if without_timestamp(&a.join(&name))? != without_timestamp(&b.join(&name))? {
            differing.push(id);
        }
    }
    Ok((differing.is_empty(), format!("{} reports compared, differing: {differing:?}", CHECK_IDS.len())))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; a bare word selects criteria by number
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(u32, &str, f64, fn() -> Outcome); 9] = [
        (1, "Luxemburg correctness", 10.0, criterion_1),
        (2, "frame identity", 5.0, criterion_2),
        (3, "Sobolev oracle", 60.0, criterion_3),
        (4, "smoothness slope", 30.0, criterion_4),
        (5, "equivalence matrix", 600.0, criterion_5),
        (6, "atomic round trip", 300.0, criterion_6),
        (7, "lemma suite", 900.0, criterion_7),
        (8, "embedding suite", 180.0, criterion_8),
        (9, "determinism", f64::INFINITY, criterion_9),
    ];
    let mut failures = 0;
    for (n, name, budget, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == &n.to_string()) {
            continue;
        }
        let clock = Instant::now();
        let outcome = run();
        let secs = clock.elapsed().as_secs_f64();
        let (pass, msg) = match outcome {
            Ok((pass, msg)) => (pass && secs <= budget, msg),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        let limit = if budget.is_finite() { format!(" (limit {budget:.0} s)") } else { String::new() };
        println!(
            "criterion {n} [{name}]: {} - {msg}; {secs:.1} s{limit}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
