//! Mode execution: resolves a configuration, runs the solvers and audits,
//! writes artifacts and the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dhym_core::lab::{
    closed_gamma2, de_giorgi_verify, decreasing_limit_audit, envelope_estimate, envelope_ordering_excess,
    fit_de_giorgi, gradient_diagnostic, level_profile, linfty_audit, log_moment, lq_norm, stability_sweep,
    weight_density, DecaySamples, EnvelopeRun, StabilitySetup,
};
use dhym_core::solver::{continuity_path, newton_solve, PathRun};
use dhym_core::suites::run_suite;
use dhym_core::torus::{normalize_density, volume_vt};
use dhym_core::{PathState, PotentialField, ScalarField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, Perturbations, Resolved, RunConfig};
use crate::manifest::{Artifacts, Failure, Manifest, Status, Versions, SUMMARY_FILE};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for the numerical kernels; results do not depend on it.
    pub jobs: Option<usize>,
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    /// Where the manifest was written, if anywhere.
    pub dir: Option<PathBuf>,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

/// Why a run stopped early.
enum Stop {
    Config(String),
    Solver(String),
}

impl Stop {
    fn failure(&self) -> Failure {
        match self {
            Stop::Config(m) => Failure {
                kind: Status::ConfigError,
                message: m.clone(),
            },
            Stop::Solver(m) => Failure {
                kind: Status::SolverFailure,
                message: m.clone(),
            },
        }
    }
}

fn solver<T>(r: dhym_core::Result<T>) -> Result<T, Stop> {
    r.map_err(|e| Stop::Solver(e.to_string()))
}

fn output<T>(r: anyhow::Result<T>) -> Result<T, Stop> {
    r.map_err(|e| Stop::Config(format!("cannot write artifacts: {e:#}")))
}

/// Results of one mode plus the audit checks that failed.
struct ModeOutput {
    results: Value,
    audit_failures: Vec<String>,
}

#[derive(Serialize)]
struct StateRow {
    t: f64,
    c_t: f64,
    residual_sup: f64,
    margin: f64,
    iters: usize,
}

impl From<&PathState> for StateRow {
    fn from(s: &PathState) -> Self {
        Self {
            t: s.t,
            c_t: s.c_t,
            residual_sup: s.residual_sup,
            margin: s.cone_margin_min,
            iters: s.newton_iters,
        }
    }
}

#[derive(Serialize)]
struct KRow {
    t: f64,
    k: f64,
    c_t: f64,
    margin: f64,
}

#[derive(Serialize)]
struct LevelRow {
    t: f64,
    s: f64,
    mass: f64,
    excess: f64,
}

#[derive(Serialize)]
struct EnvelopeRow {
    t: f64,
    beta: f64,
    u_min: f64,
    u_max: f64,
    newton_iters: usize,
    /// Sup distance to the previous β; empty for the first.
    cauchy: Option<f64>,
}

#[derive(Serialize)]
struct GradientRow {
    t: f64,
    l: f64,
    lhs: f64,
    rhs: f64,
    pass: bool,
}

#[derive(Serialize)]
struct DeGiorgiRow {
    t: f64,
    epsilon: f64,
    c: f64,
    delta: f64,
    threshold: f64,
    max_ratio: f64,
    vanishing_checked: bool,
    vanished: bool,
    pass: bool,
}

#[derive(Serialize)]
struct CalibrationRow {
    amplitude: f64,
    sup_diff: f64,
    plus_norm: f64,
}

#[derive(Serialize)]
struct StabilityRow {
    amplitude: f64,
    sup_diff: f64,
    plus_norm: f64,
    bound_rhs: f64,
    ratio: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CheckRow<'a> {
    check: &'a str,
    applicable: usize,
    violations: usize,
    worst: f64,
    tolerance: f64,
}

/// Reads and runs a configuration file.
pub fn run_file(path: &Path, opts: &RunOptions) -> RunOutcome {
    match fs::read_to_string(path) {
        Ok(text) => run_text(&text, opts),
        Err(e) => config_failure(Value::Null, format!("cannot read {}: {e}", path.display()), opts),
    }
}

/// Parses and runs a JSON configuration.
pub fn run_text(text: &str, opts: &RunOptions) -> RunOutcome {
    let raw: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return config_failure(Value::Null, format!("invalid JSON: {e}"), opts),
    };
    match serde_json::from_value::<RunConfig>(raw.clone()) {
        Ok(config) => run_config(&config, raw, opts),
        Err(e) => config_failure(raw, format!("schema violation: {e}"), opts),
    }
}

fn config_failure(raw: Value, message: String, opts: &RunOptions) -> RunOutcome {
    let manifest = Manifest {
        run_id: String::new(),
        mode: raw.get("mode").and_then(Value::as_str).map(str::to_string),
        status: Status::ConfigError,
        exit_code: Status::ConfigError.exit_code(),
        failure: Some(Failure {
            kind: Status::ConfigError,
            message,
        }),
        config: raw,
        seed: None,
        jobs: opts.jobs,
        versions: Versions::default(),
        timings: BTreeMap::new(),
        artifacts: Vec::new(),
        results: Value::Null,
    };
    let dir = opts.out.clone().filter(|d| manifest.write(d).is_ok());
    RunOutcome {
        status: Status::ConfigError,
        dir,
        manifest,
    }
}

/// Default run directory: `runs/<first 12 hex digits of the run id>`.
pub fn default_run_dir(run_id: &str) -> PathBuf {
    PathBuf::from("runs").join(&run_id[..12])
}

/// Runs a parsed configuration; `raw` is echoed into the manifest.
pub fn run_config(config: &RunConfig, raw: Value, opts: &RunOptions) -> RunOutcome {
    let total = Instant::now();
    let run_id = dhym_core::torus::io::sha256_hex(config.canonical_json().as_bytes());
    let dir = opts
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| default_run_dir(&run_id));
    let mut timings = BTreeMap::new();
    let mut manifest = Manifest {
        run_id,
        mode: Some(config.mode.name().into()),
        status: Status::Ok,
        exit_code: 0,
        failure: None,
        config: raw,
        seed: config.seed,
        jobs: opts.jobs,
        versions: Versions::default(),
        timings: BTreeMap::new(),
        artifacts: Vec::new(),
        results: Value::Null,
    };
    let mut artifacts = None;
    let outcome = (|| -> Result<ModeOutput, Stop> {
        let t = Instant::now();
        let resolved = config.resolve().map_err(|e| Stop::Config(format!("{e:#}")))?;
        timings.insert("resolve".to_string(), t.elapsed().as_secs_f64());
        let a = artifacts.insert(output(Artifacts::new(&dir))?);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs.unwrap_or(0))
            .build()
            .map_err(|e| Stop::Config(format!("cannot start {:?} workers: {e}", opts.jobs)))?;
        let t = Instant::now();
        let out = pool.install(|| execute(config, resolved.as_ref(), a));
        timings.insert("execute".to_string(), t.elapsed().as_secs_f64());
        out
    })();
    match outcome {
        Ok(out) => {
            manifest.results = out.results;
            if !out.audit_failures.is_empty() {
                manifest.status = Status::AuditFailure;
                manifest.failure = Some(Failure {
                    kind: Status::AuditFailure,
                    message: out.audit_failures.join("; "),
                });
            }
        }
        Err(stop) => {
            let f = stop.failure();
            manifest.status = f.kind;
            manifest.failure = Some(f);
        }
    }
    manifest.exit_code = manifest.status.exit_code();
    if let Some(a) = artifacts {
        manifest.artifacts = a.into_entries();
    }
    timings.insert("total".to_string(), total.elapsed().as_secs_f64());
    manifest.timings = timings;
    let dir = match manifest.write(&dir) {
        Ok(()) => Some(dir),
        Err(e) => {
            if manifest.failure.is_none() {
                manifest.status = Status::ConfigError;
                manifest.exit_code = Status::ConfigError.exit_code();
                manifest.failure = Some(Failure {
                    kind: Status::ConfigError,
                    message: format!("cannot write manifest: {e:#}"),
                });
            }
            None
        }
    };
    RunOutcome {
        status: manifest.status,
        dir,
        manifest,
    }
}

fn execute(config: &RunConfig, resolved: Option<&Resolved>, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    match (config.mode, resolved) {
        (Mode::Verify, _) => verify_mode(config, a),
        (Mode::Solve, Some(r)) => solve_mode(config, r, a),
        (Mode::Path, Some(r)) => path_mode(config, r, a),
        (Mode::Envelope, Some(r)) => envelope_mode(config, r, a),
        (Mode::Stability, Some(r)) => stability_mode(config, r, a),
        (Mode::Audit, Some(r)) => audit_mode(config, r, a),
        (_, None) => Err(Stop::Config("mode needs geometry".into())),
    }
}

fn sup_error(phi: &PotentialField, star: &PotentialField) -> Result<f64, Stop> {
    Ok(solver(phi.zip_map(star, |a, b| a - b))?.sup_norm())
}

fn state_json(s: &PathState) -> Value {
    json!({
        "t": s.t,
        "c_t": s.c_t,
        "residual_sup": s.residual_sup,
        "cone_margin_min": s.cone_margin_min,
        "newton_iters": s.newton_iters,
        "compatibility_defect": s.compatibility_defect,
        "trace_min": s.trace_min,
    })
}

fn solve_mode(config: &RunConfig, r: &Resolved, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    let window = r.window.expect("solve mode has a window");
    let zero = PotentialField::zeros(r.backgrounds.grid());
    let state = solver(newton_solve(
        &r.backgrounds,
        &zero,
        config.schedule[0],
        &r.f,
        window,
        &config.solver,
    ))?;
    output(a.csv(SUMMARY_FILE, &[StateRow::from(&state)]))?;
    output(a.field("fields/phi", &state.phi))?;
    let mut results = state_json(&state);
    if let Some(star) = &r.phi_star {
        results["sup_error"] = json!(sup_error(&state.phi, star)?);
    }
    Ok(ModeOutput {
        results,
        audit_failures: Vec::new(),
    })
}

struct PathOutput {
    run: PathRun,
    envelopes: Vec<EnvelopeRun>,
    results: Value,
}

/// Shared by the path and audit modes: the continuity path, one envelope
/// per step and the `K` table.
fn path_stage(config: &RunConfig, r: &Resolved, a: &mut Artifacts) -> Result<PathOutput, Stop> {
    let window = r.window.expect("path mode has a window");
    let b = &r.backgrounds;
    let run = solver(continuity_path(b, &config.schedule, &r.f, window, &config.solver))?;
    let envelopes = run
        .states
        .iter()
        .map(|s| {
            solver(envelope_estimate(
                &b.chi_tilde,
                &b.omega,
                s.t,
                &config.envelope.betas,
                &config.solver,
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let estimates: Vec<PotentialField> = envelopes.iter().map(|e| e.estimate().clone()).collect();
    let linfty = solver(linfty_audit(&run.states, &estimates))?;
    let rows: Vec<StateRow> = run.states.iter().map(StateRow::from).collect();
    output(a.csv(SUMMARY_FILE, &rows))?;
    let krows: Vec<KRow> = linfty
        .samples
        .iter()
        .map(|s| KRow {
            t: s.t,
            k: s.k,
            c_t: s.c_t,
            margin: s.margin,
        })
        .collect();
    output(a.csv("linfty.csv", &krows))?;
    for (i, (s, u)) in run.states.iter().zip(&estimates).enumerate() {
        output(a.field(&format!("fields/phi_{i:03}"), &s.phi))?;
        output(a.field(&format!("fields/envelope_{i:03}"), u))?;
    }
    // The schedule decreases, so c_t increasing in t means decreasing along it.
    let ct_increasing = run.states.windows(2).all(|w| w[1].c_t < w[0].c_t);
    let mut results = json!({
        "states": run.states.iter().map(state_json).collect::<Vec<_>>(),
        "warmup": run.warmup,
        "inserted": run.inserted,
        "c_t_increasing_in_t": ct_increasing,
        "linfty": {
            "k_max": linfty.k_max,
            "last_decade_variation": linfty.last_decade_variation,
            "relative_variation": linfty.relative_variation,
            "finite": linfty.finite(),
        },
    });
    if let Some(star) = &r.phi_star {
        let errs = run
            .states
            .iter()
            .map(|s| sup_error(&s.phi, star))
            .collect::<Result<Vec<_>, _>>()?;
        results["sup_error_vs_phi_star"] = json!(errs);
    }
    Ok(PathOutput {
        run,
        envelopes,
        results,
    })
}

fn path_mode(config: &RunConfig, r: &Resolved, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    let p = path_stage(config, r, a)?;
    Ok(ModeOutput {
        results: p.results,
        audit_failures: Vec::new(),
    })
}

fn envelope_mode(config: &RunConfig, r: &Resolved, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    let b = &r.backgrounds;
    let betas = &config.envelope.betas;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (i, &t) in config.schedule.iter().enumerate() {
        let run = solver(envelope_estimate(&b.chi_tilde, &b.omega, t, betas, &config.solver))?;
        for (k, u) in run.u_betas.iter().enumerate() {
            rows.push(EnvelopeRow {
                t,
                beta: run.betas[k],
                u_min: u.min(),
                u_max: u.max(),
                newton_iters: run.newton_iters[k],
                cauchy: k.checked_sub(1).map(|j| run.cauchy_norms[j]),
            });
        }
        if !run.cauchy_decreasing() {
            failures.push(format!("Cauchy norms not strictly decreasing at t = {t}"));
        }
        output(a.field(&format!("fields/envelope_{i:03}"), run.estimate()))?;
        runs.push(run);
    }
    // Consecutive schedule entries decrease in t.
    let mut ordering = Vec::new();
    for w in runs.windows(2) {
        let excess = solver(envelope_ordering_excess(w[1].estimate(), w[0].estimate()))?;
        if excess > config.envelope.ordering_tol {
            failures.push(format!(
                "envelope ordering fails between t = {} and t = {}",
                w[1].t, w[0].t
            ));
        }
        ordering.push(json!({"lower_t": w[1].t, "upper_t": w[0].t, "excess": excess}));
    }
    output(a.csv(SUMMARY_FILE, &rows))?;
    let results = json!({
        "runs": runs.iter().map(|r| json!({
            "t": r.t,
            "estimate_min": r.estimate().min(),
            "estimate_max": r.estimate().max(),
            "cauchy_norms": r.cauchy_norms,
            "cauchy_decreasing": r.cauchy_decreasing(),
        })).collect::<Vec<_>>(),
        "ordering": ordering,
    });
    Ok(ModeOutput {
        results,
        audit_failures: failures,
    })
}

fn perturbations(f1: &ScalarField, r: &Resolved, p: &Perturbations) -> Result<Vec<ScalarField>, Stop> {
    let shape = p
        .shape
        .evaluate(r.backgrounds.grid())
        .map_err(|e| Stop::Config(e.to_string()))?;
    p.amplitudes
        .iter()
        .map(|&amp| {
            let g = solver(f1.zip_map(&shape, |v, w| v * (1.0 + amp * w)))?;
            if g.min() <= 0.0 {
                return Err(Stop::Config(format!(
                    "perturbation amplitude {amp} makes the density non-positive"
                )));
            }
            solver(normalize_density(&g, &r.backgrounds.omega))
        })
        .collect()
}

fn stability_mode(config: &RunConfig, r: &Resolved, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    let spec = config.stability.as_ref().expect("validated");
    let b = &r.backgrounds;
    let setup = StabilitySetup {
        backgrounds: b.clone(),
        t: spec.t,
        window: r.window.expect("stability mode has a window"),
        q: spec.q,
        regime: spec.regime,
        config: config.solver,
    };
    let env = solver(envelope_estimate(
        &b.chi_tilde,
        &b.omega,
        spec.t,
        &config.envelope.betas,
        &config.solver,
    ))?;
    let u_min = env.estimate().min();
    let calibration = perturbations(&r.f, r, &spec.calibration)?;
    let sweep: Vec<(f64, ScalarField)> = spec
        .sweep
        .amplitudes
        .iter()
        .copied()
        .zip(perturbations(&r.f, r, &spec.sweep)?)
        .collect();
    let result = solver(stability_sweep(&setup, &r.f, u_min, &calibration, &sweep))?;
    let (gamma2, gamma2_worst) = solver(closed_gamma2(b))?;
    let rows: Vec<StabilityRow> = result
        .amplitudes
        .iter()
        .zip(&result.reports)
        .map(|(&amplitude, rep)| StabilityRow {
            amplitude,
            sup_diff: rep.sup_diff,
            plus_norm: rep.plus_norm,
            bound_rhs: rep.bound_rhs,
            ratio: rep.ratio,
            pass: rep.pass,
        })
        .collect();
    output(a.csv(SUMMARY_FILE, &rows))?;
    let cal_rows: Vec<CalibrationRow> = spec
        .calibration
        .amplitudes
        .iter()
        .zip(&result.calibration)
        .map(|(&amplitude, p)| CalibrationRow {
            amplitude,
            sup_diff: p.sup_diff,
            plus_norm: p.plus_norm,
        })
        .collect();
    output(a.csv("calibration.csv", &cal_rows))?;
    let mut failures = Vec::new();
    for (row, amp) in rows.iter().zip(&result.amplitudes) {
        if !row.pass {
            failures.push(format!("stability bound ratio {} > 1 at amplitude {amp}", row.ratio));
        }
    }
    let slope_floor = result.exponent - spec.slope_slack;
    match result.slope {
        Some(s) if s >= slope_floor => {}
        Some(s) => failures.push(format!("fitted slope {s} below {slope_floor}")),
        None => failures.push("slope undefined: fewer than two positive pairs".into()),
    }
    let results = json!({
        "regime": result.regime,
        "exponent": result.exponent,
        "c": result.c,
        "u_min": result.u_min,
        "slope": result.slope,
        "slope_floor": slope_floor,
        "closed_gamma2": gamma2,
        "closed_gamma2_worst": gamma2_worst,
        "reports": result.reports,
    });
    Ok(ModeOutput {
        results,
        audit_failures: failures,
    })
}

fn verify_mode(config: &RunConfig, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    let v = config.verify.as_ref().expect("validated");
    let seed = config.seed.expect("validated");
    let report = run_suite(v.suite, v.samples, seed).map_err(|e| Stop::Config(e.to_string()))?;
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            check: &c.name,
            applicable: c.applicable,
            violations: c.violations,
            worst: c.worst,
            tolerance: c.tolerance,
        })
        .collect();
    output(a.csv(SUMMARY_FILE, &rows))?;
    let total = report.violations();
    let listed: Vec<Value> = report
        .checks
        .iter()
        .filter(|c| c.violations > 0)
        .map(|c| json!({"check": c.name, "count": c.violations, "first": c.first_violation}))
        .collect();
    output(a.json(
        "violations.json",
        &json!({"suite": v.suite, "seed": seed, "samples": v.samples, "total": total, "violations": listed}),
    ))?;
    let failures = if total > 0 {
        vec![format!("{total} violations in suite {}", v.suite)]
    } else {
        Vec::new()
    };
    Ok(ModeOutput {
        results: json!({
            "suite": v.suite,
            "samples": v.samples,
            "violations": total,
            "checks": report.checks,
            "chen_margins": report.chen_margins,
            "runtime_secs": report.runtime_secs,
        }),
        audit_failures: failures,
    })
}

/// De Giorgi fit and verification on the level masses of one state.
fn degiorgi_row(t: f64, epsilon: f64, s: &[f64], mass: &[f64], deltas: &[f64]) -> Result<DeGiorgiRow, String> {
    let samples = DecaySamples::new(s.to_vec(), mass.to_vec()).map_err(|e| e.to_string())?;
    let fit = fit_de_giorgi(&samples, 0.0, deltas).map_err(|e| e.to_string())?;
    let rep = de_giorgi_verify(&samples, fit.c, fit.delta, 0.0).map_err(|e| e.to_string())?;
    Ok(DeGiorgiRow {
        t,
        epsilon,
        c: rep.c,
        delta: rep.delta,
        threshold: rep.threshold,
        max_ratio: rep.max_ratio,
        vanishing_checked: rep.vanishing_checked,
        vanished: rep.vanished,
        pass: rep.pass(),
    })
}

fn audit_mode(config: &RunConfig, r: &Resolved, a: &mut Artifacts) -> Result<ModeOutput, Stop> {
    let spec = &config.audit;
    let b = &r.backgrounds;
    let n = b.grid().complex_dim();
    let PathOutput {
        run,
        envelopes,
        mut results,
    } = path_stage(config, r, a)?;
    let mut failures = Vec::new();

    let lin = &results["linfty"];
    let variation = lin["relative_variation"].as_f64().unwrap_or(f64::NAN);
    if lin["finite"] != json!(true) {
        failures.push("K(t) is not finite".into());
    } else if !(variation <= spec.max_k_variation) {
        failures.push(format!("K variation {variation} exceeds {}", spec.max_k_variation));
    }

    let budget = spec.decreasing_budget.unwrap_or(f64::INFINITY);
    let dec = solver(decreasing_limit_audit(&run.states, budget))?;
    if !dec.pass {
        failures.push(match dec.c {
            Some(c) => format!("decreasing-sequence constant {c} exceeds budget {budget}"),
            None => "path is not ordered by decreasing t".into(),
        });
    }

    let mut grad_rows = Vec::new();
    for s in &run.states {
        let g = solver(gradient_diagnostic(&s.phi, spec.sigma, &b.omega))?;
        if !g.pass() {
            failures.push(format!("gradient inequality fails at t = {}", s.t));
        }
        grad_rows.push(GradientRow {
            t: s.t,
            l: g.l,
            lhs: g.lhs,
            rhs: g.rhs,
            pass: g.pass(),
        });
    }
    output(a.csv("gradient.csv", &grad_rows))?;

    let mut level_rows = Vec::new();
    let mut dg_rows = Vec::new();
    let mut sensitivity: f64 = 0.0;
    for (st, env) in run.states.iter().zip(&envelopes) {
        let v_t = solver(volume_vt(&b.chi_tilde, &b.omega, st.t))?;
        let mut thresholds = Vec::new();
        for (k, eps) in [spec.epsilon, spec.epsilon / 10.0].into_iter().enumerate() {
            let g = solver(weight_density(spec.weight_constant, st.c_t, &r.f, eps))?;
            let profile = solver(level_profile(
                &st.phi,
                env.estimate(),
                &g,
                &b.omega,
                v_t,
                spec.level_samples,
                spec.level_overshoot,
            ))?;
            if k == 0 {
                level_rows.extend(profile.iter().map(|l| LevelRow {
                    t: st.t,
                    s: l.s,
                    mass: l.mass,
                    excess: l.excess,
                }));
            }
            let s: Vec<f64> = profile.iter().map(|l| l.s).collect();
            let mass: Vec<f64> = profile.iter().map(|l| l.mass).collect();
            if mass[0] == 0.0 {
                // −φ + U ≤ 0 everywhere: nothing to iterate on.
                continue;
            }
            match degiorgi_row(st.t, eps, &s, &mass, &spec.deltas) {
                Ok(row) => {
                    if !row.pass {
                        failures.push(format!("level masses do not vanish past the threshold at t = {}", st.t));
                    }
                    thresholds.push(row.threshold);
                    dg_rows.push(row);
                }
                Err(e) => failures.push(format!("De Giorgi audit at t = {}: {e}", st.t)),
            }
        }
        if let [a0, a1] = thresholds[..] {
            sensitivity = sensitivity.max((a1 - a0).abs() / a0.abs().max(f64::MIN_POSITIVE));
        }
    }
    output(a.csv("levels.csv", &level_rows))?;
    output(a.csv("degiorgi.csv", &dg_rows))?;

    let log_p = n as f64 + 1.0;
    results["audits"] = json!({
        "decreasing_limit": dec,
        "gradient": grad_rows.iter().map(|g| json!({"t": g.t, "l": g.l, "lhs": g.lhs, "rhs": g.rhs})).collect::<Vec<_>>(),
        "degiorgi_vanishing_checked": dg_rows.iter().filter(|r| r.vanishing_checked).count(),
        "degiorgi_fits": dg_rows.len(),
        "epsilon_threshold_sensitivity": sensitivity,
        "density_log_moment": {"p": log_p, "value": solver(log_moment(&r.f, &b.omega, log_p))?},
        "density_l2_norm": solver(lq_norm(&r.f, &b.omega, 2.0))?,
    });
    Ok(ModeOutput {
        results,
        audit_failures: failures,
    })
}
