//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use dhym_cli::config::{RunConfig, VerifySpec};
use dhym_cli::{run_config, run_file, Manifest, RunOptions, Status};
use dhym_core::lab::{de_giorgi_threshold, envelope_estimate};
use dhym_core::suites::{Suite, SuiteReport};
use dhym_core::torus::io::read_scalar;
use dhym_core::{HermitianField, SolveConfig, TorusGrid};
use num_complex::Complex64;
use serde_json::Value;

const SEED: u64 = 42;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Scratch(tempfile::TempDir);

impl Scratch {
    fn new() -> Self {
        Self(tempfile::tempdir().expect("temp dir"))
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

/// Runs a bundled config in-process and returns its manifest.
fn run(scratch: &Scratch, name: &str) -> Result<Manifest> {
    let out = scratch.dir(name);
    let outcome = run_file(
        &configs().join(format!("{name}.json")),
        &RunOptions {
            jobs: None,
            out: Some(out),
        },
    );
    if outcome.status != Status::Ok {
        return Err(anyhow!("{name}: {:?} {:?}", outcome.status, outcome.manifest.failure));
    }
    Ok(outcome.manifest)
}

fn verify(scratch: &Scratch, suite: Suite, samples: usize) -> Result<SuiteReport> {
    let config = RunConfig {
        verify: Some(VerifySpec { suite, samples }),
        seed: Some(SEED),
        ..serde_json::from_str(r#"{"mode": "verify"}"#)?
    };
    let raw = serde_json::to_value(&config)?;
    let out = scratch.dir(suite.name());
    let outcome = run_config(
        &config,
        raw,
        &RunOptions {
            jobs: None,
            out: Some(out.clone()),
        },
    );
    let violations: Value = serde_json::from_str(&std::fs::read_to_string(out.join("violations.json"))?)?;
    let m = outcome.manifest;
    let report = SuiteReport {
        suite,
        seed: SEED,
        samples,
        checks: serde_json::from_value(m.results["checks"].clone())?,
        chen_margins: serde_json::from_value(m.results["chen_margins"].clone())?,
        runtime_secs: m.results["runtime_secs"].as_f64().unwrap_or(f64::NAN),
    };
    let total = violations["total"].as_u64().context("violations file")? as usize;
    if total != report.violations() || (total == 0) != (outcome.status == Status::Ok) {
        return Err(anyhow!("violations file disagrees with the run status"));
    }
    Ok(report)
}

fn num(v: &Value, path: &[&str]) -> Result<f64> {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64().ok_or_else(|| anyhow!("missing number at {path:?}"))
}

type Outcome = Result<(bool, String)>;

fn check_summary(report: &SuiteReport, names: &[&str]) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let c = report.check(name).ok_or_else(|| anyhow!("no check {name}"))?;
        ok &= c.violations == 0 && c.applicable > 0;
        parts.push(format!(
            "{name}: {}/{} bad, worst {:.3e}",
            c.violations, c.applicable, c.worst
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c1(s: &Scratch) -> Outcome {
    let t = Instant::now();
    let r = verify(s, Suite::Algebra, 100_000)?;
    let secs = t.elapsed().as_secs_f64();
    let (ok, detail) = check_summary(
        &r,
        &["re_equals_cos_phase_times_modulus", "im_equals_sin_phase_times_modulus"],
    )?;
    Ok((ok && secs < 10.0, format!("{detail}; {secs:.2} s < 10 s")))
}

fn c2(s: &Scratch) -> Outcome {
    let t = Instant::now();
    let r = verify(s, Suite::Reformulations, 10_000)?;
    let secs = t.elapsed().as_secs_f64();
    let (ok, detail) = check_summary(&r, &["dim2_rewriting_agreement", "dim3_rewriting_agreement"])?;
    let tol_ok = r.checks.iter().all(|c| c.tolerance <= 1e-10);
    Ok((ok && tol_ok && secs < 5.0, format!("{detail}; {secs:.2} s < 5 s")))
}

fn c3_c5(s: &Scratch) -> Result<(Outcome, Outcome)> {
    let r = verify(s, Suite::Cones, 100_000)?;
    let wy = check_summary(&r, &["wang_yuan_clauses_for_phase_at_most_pi"]);
    let conc = check_summary(&r, &["sk_ratio_midpoint_concavity"]).map(|(ok, d)| {
        let tol = r
            .check("sk_ratio_midpoint_concavity")
            .map(|c| c.tolerance)
            .unwrap_or(f64::NAN);
        (ok && tol >= -1e-12, d)
    });
    Ok((wy, conc))
}

fn c4(s: &Scratch) -> Outcome {
    let r = verify(s, Suite::Chen, 10_000)?;
    let (ok, detail) = check_summary(
        &r,
        &[
            "gradient_positive",
            "gradient_matches_central_differences",
            "hessian_max_eigenvalue",
        ],
    )?;
    let fd = r
        .check("gradient_matches_central_differences")
        .map(|c| c.tolerance)
        .unwrap_or(f64::NAN);
    let hess = r
        .check("hessian_max_eigenvalue")
        .map(|c| c.tolerance)
        .unwrap_or(f64::NAN);
    let m = r.chen_margins.ok_or_else(|| anyhow!("no n = 4 margins"))?;
    Ok((
        ok && fd <= 1e-5 && hess <= 1e-7,
        format!(
            "{detail}; eps1 = {} ({} of {} negative-shift probes failed)",
            m.epsilon1, m.negative_failures, m.negative_samples
        ),
    ))
}

fn c6(s: &Scratch) -> Outcome {
    let t = Instant::now();
    let m = run(s, "balanced_solve")?;
    let secs = t.elapsed().as_secs_f64();
    let phi = read_scalar(&s.dir("balanced_solve").join("fields/phi"))?;
    let sup = phi.sup_norm();
    let ct = num(&m.results, &["c_t"])?;
    let iters = num(&m.results, &["newton_iters"])?;
    let ok = sup <= 1e-10 && (ct - 8.125).abs() <= 1e-12 && iters <= 3.0 && secs < 5.0;
    Ok((
        ok,
        format!("|phi| = {sup:.1e}, c_t = {ct}, {iters} Newton steps, {secs:.3} s"),
    ))
}

fn c7(s: &Scratch) -> Outcome {
    let t = Instant::now();
    let m = run(s, "manufactured_solve")?;
    let secs = t.elapsed().as_secs_f64();
    let err = num(&m.results, &["sup_error"])?;
    let res = num(&m.results, &["residual_sup"])?;
    let defect = num(&m.results, &["compatibility_defect"])?;
    let ok = err <= 1e-8 && res <= 1e-10 && defect <= 1e-12 && secs < 60.0;
    Ok((
        ok,
        format!("sup error {err:.1e}, residual {res:.1e}, compatibility defect {defect:.1e}, {secs:.3} s"),
    ))
}

/// `(1/vol)∫(Re − cot θ₀ Im)(λ + i)ⁿ` for constant `λ`.
fn closed_form_ct(lambda: f64, n: i32, theta0: f64) -> f64 {
    let z = Complex64::new(lambda, 1.0).powi(n);
    z.re - z.im / theta0.tan()
}

fn c8(s: &Scratch) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["constant_path", "varying_path"] {
        let m = run(s, name)?;
        let states = m.results["states"].as_array().ok_or_else(|| anyhow!("no states"))?;
        let pts: Vec<(f64, f64)> = states
            .iter()
            .map(|st| Ok((num(st, &["t"])?, num(st, &["c_t"])?)))
            .collect::<Result<_>>()?;
        let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let increasing = pts.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
        ok &= increasing && ts == [1.0, 0.5, 0.25, 0.1, 0.05];
        parts.push(format!(
            "{name}: c_t = [{}]",
            pts.iter().map(|p| format!("{:.4}", p.1)).collect::<Vec<_>>().join(", ")
        ));
        if name == "constant_path" {
            // χ = 2ω, χ̃ = ω, f = 1, θ₀ = π/3.
            let worst = pts
                .iter()
                .map(|&(t, c)| (c - closed_form_ct(3.0 + t, 3, std::f64::consts::FRAC_PI_3)).abs() / c.abs())
                .fold(0.0, f64::max);
            ok &= worst <= 1e-12;
            parts.push(format!("closed form rel err {worst:.1e}"));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn c9(s: &Scratch) -> Outcome {
    // χ̃ + tω = 2ω at t = 0.5, so u_β = (3/β) ln 2.
    let g = TorusGrid::reduced(3, &[0], 8)?;
    let omega = HermitianField::scaled_identity(&g, 1.0);
    let chi_tilde = HermitianField::scaled_identity(&g, 1.5);
    let betas = [10.0, 20.0, 40.0, 80.0];
    let e = envelope_estimate(&chi_tilde, &omega, 0.5, &betas, &SolveConfig::default())?;
    let closed = e
        .u_betas
        .iter()
        .zip(betas)
        .map(|(u, b)| {
            u.values()
                .iter()
                .map(|v| (v - 3.0 / b * 2f64.ln()).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let m = run(s, "envelope")?;
    let runs = m.results["runs"].as_array().ok_or_else(|| anyhow!("no runs"))?;
    let mut doublings = usize::MAX;
    let mut decreasing = true;
    for r in runs {
        let norms: Vec<f64> = serde_json::from_value(r["cauchy_norms"].clone())?;
        doublings = doublings.min(norms.len());
        decreasing &= norms.windows(2).all(|w| w[1] < w[0]);
    }
    let excess = m.results["ordering"]
        .as_array()
        .ok_or_else(|| anyhow!("no ordering"))?
        .iter()
        .map(|o| num(o, &["excess"]))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = closed <= 1e-10 && decreasing && doublings >= 4 && excess <= 1e-8;
    Ok((
        ok,
        format!(
            "closed-form error {closed:.1e}; Cauchy norms strictly decreasing over {doublings} doublings: {decreasing}; ordering excess {excess:.2e}"
        ),
    ))
}

fn c10(s: &Scratch) -> Outcome {
    let m = run(s, "degenerate_audit")?;
    let lin = &m.results["linfty"];
    let finite = lin["finite"] == Value::Bool(true);
    let kmax = num(lin, &["k_max"])?;
    let rel = num(lin, &["relative_variation"])?;
    let steps = m.results["states"].as_array().map_or(0, Vec::len);
    Ok((
        finite && rel <= 0.1 && steps == 8,
        format!(
            "{steps} steps, K finite: {finite}, max K {kmax:.4}, last-decade variation {:.2}% of max K",
            100.0 * rel
        ),
    ))
}

fn c11(s: &Scratch) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, exponent) in [
        ("stability_general", 1.0 / 6.0),
        ("stability_hypercritical", 1.0 / 6.0),
        ("stability_supercritical", 0.2),
    ] {
        let m = run(s, name)?;
        let r = &m.results;
        let ratios: Vec<f64> = r["reports"]
            .as_array()
            .ok_or_else(|| anyhow!("no reports"))?
            .iter()
            .map(|x| num(x, &["ratio"]))
            .collect::<Result<_>>()?;
        let slope = num(r, &["slope"])?;
        let got = num(r, &["exponent"])?;
        let gamma2 = r["closed_gamma2"] == Value::Bool(true);
        let pass = ratios.len() == 3
            && ratios.iter().all(|&x| x <= 1.0)
            && (got - exponent).abs() < 1e-15
            && slope >= exponent - 0.05
            && (name != "stability_supercritical" || gamma2);
        ok &= pass;
        parts.push(format!(
            "{}: exponent {got:.4}, max ratio {:.3}, slope {slope:.3}",
            name.trim_start_matches("stability_"),
            ratios.iter().copied().fold(0.0, f64::max)
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c12(s: &Scratch) -> Outcome {
    let arithmetic = de_giorgi_threshold(1.0, 1.0, 1.0) == 4.0
        && de_giorgi_threshold(2.0, 0.5, 0.25) == 8.0
        && de_giorgi_threshold(3.7, 0.3, 0.0) == 0.0;
    let m = run(s, "manufactured_audit")?;
    let mut rdr = csv::Reader::from_path(s.dir("manufactured_audit").join("degiorgi.csv"))?;
    let rows: Vec<std::collections::HashMap<String, String>> = rdr.deserialize().collect::<Result<_, _>>()?;
    let flag = |r: &std::collections::HashMap<String, String>, k: &str| r.get(k).map(String::as_str) == Some("true");
    let verified = !rows.is_empty()
        && rows
            .iter()
            .all(|r| flag(r, "pass") && flag(r, "vanishing_checked") && flag(r, "vanished"));
    let err = m.results["sup_error_vs_phi_star"][0].as_f64().unwrap_or(f64::NAN);
    let first = rows.first().cloned().unwrap_or_default();
    Ok((
        arithmetic && verified && err <= 1e-8,
        format!(
            "threshold examples exact: {arithmetic}; {} fits verified and vanishing (first: C = {}, delta = {}, threshold = {})",
            rows.len(),
            first.get("c").map_or("?", String::as_str),
            first.get("delta").map_or("?", String::as_str),
            first.get("threshold").map_or("?", String::as_str),
        ),
    ))
}

fn c13(s: &Scratch) -> Outcome {
    let exe = env!("CARGO_BIN_EXE_dhym");
    let config = configs().join("manufactured_solve.json");
    let mut outputs = Vec::new();
    for jobs in [1, 8] {
        let out = s.dir(&format!("determinism_{jobs}"));
        let status = Command::new(exe)
            .args(["run", "--config"])
            .arg(&config)
            .args(["--jobs", &jobs.to_string(), "--out"])
            .arg(&out)
            .output()?;
        if !status.status.success() {
            let err = String::from_utf8_lossy(&status.stderr).into_owned();
            return Err(anyhow!("run with --jobs {jobs} exited with {}: {err}", status.status));
        }
        outputs.push((
            std::fs::read(out.join("summary.csv"))?,
            std::fs::read(out.join("fields/phi.bin"))?,
        ));
    }
    let same_csv = outputs[0].0 == outputs[1].0;
    let same_field = outputs[0].1 == outputs[1].1;
    Ok((
        same_csv && same_field,
        format!("summary CSV identical: {same_csv}; solution field identical: {same_field}"),
    ))
}

fn main() {
    let scratch = Scratch::new();
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |id, name, f: &dyn Fn(&Scratch) -> Outcome| {
        let t = Instant::now();
        let r = f(&scratch);
        results.push((id, name, r, t.elapsed().as_secs_f64()));
    };
    record(1, "phase identities", &c1);
    record(2, "reformulation identities", &c2);
    let t = Instant::now();
    let cones = c3_c5(&scratch);
    let cones_secs = t.elapsed().as_secs_f64();
    let (wy, conc) = match cones {
        Ok(pair) => pair,
        Err(e) => (Err(anyhow!("{e:#}")), Err(e)),
    };
    record(4, "Chen lemma certification", &c4);
    record(6, "balanced solve", &c6);
    record(7, "manufactured solve", &c7);
    record(8, "c_t monotonicity", &c8);
    record(9, "envelope", &c9);
    record(10, "L-infinity uniformity", &c10);
    record(11, "stability exponents", &c11);
    record(12, "De Giorgi", &c12);
    record(13, "determinism across --jobs", &c13);
    results.push((3, "Wang-Yuan cone audit", wy, cones_secs));
    results.push((5, "S_{k+1}/S_k concavity", conc, cones_secs));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (id, name, outcome, secs) in &results {
        let (pass, detail) = match outcome {
            Ok((p, d)) => (*p, d.clone()),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += usize::from(!pass);
        println!(
            "[{}] criterion {id:>2} {name}: {detail} ({secs:.2} s)",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
