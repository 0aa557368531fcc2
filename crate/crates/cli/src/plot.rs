//! Plot-ready series extracted from a finished run directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::{Artifacts, Manifest, SUMMARY_FILE};

pub const PLOT_DIR: &str = "plot";

#[derive(Deserialize)]
struct TK {
    t: f64,
    k: f64,
}

#[derive(Deserialize, Serialize)]
struct TCt {
    t: f64,
    c_t: f64,
}

#[derive(Deserialize, Serialize)]
struct SMass {
    t: f64,
    s: f64,
    mass: f64,
}

#[derive(Deserialize)]
struct Stab {
    amplitude: f64,
    sup_diff: f64,
    plus_norm: f64,
}

#[derive(Serialize)]
struct TKOut {
    t: f64,
    k: f64,
}

#[derive(Serialize)]
struct LogLog {
    amplitude: f64,
    log_plus_norm: f64,
    log_sup_diff: f64,
}

fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    r.deserialize().map(|x| x.map_err(anyhow::Error::from)).collect()
}

/// Writes the `(t, K)`, `(t, c_t)`, `(s, mass)` and log-log stability
/// series that the run produced into `<run>/plot/`, returning their paths.
pub fn emit_plot_data(run_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let manifest = Manifest::read(run_dir)?;
    let has = |name: &str| manifest.artifacts.iter().any(|a| a.path == name) && run_dir.join(name).is_file();
    let mode = manifest.mode.as_deref().unwrap_or("");
    let mut out = Artifacts::new(&run_dir.join(PLOT_DIR))?;
    let mut index = Vec::new();

    if has("linfty.csv") {
        let mut rows: Vec<TK> = read(&run_dir.join("linfty.csv"))?;
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        out.csv(
            "t_k.csv",
            &rows.iter().map(|r| TKOut { t: r.t, k: r.k }).collect::<Vec<_>>(),
        )?;
        index.push("t_k.csv");
    }
    if matches!(mode, "solve" | "path" | "audit") && has(SUMMARY_FILE) {
        let mut rows: Vec<TCt> = read(&run_dir.join(SUMMARY_FILE))?;
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        out.csv("t_ct.csv", &rows)?;
        index.push("t_ct.csv");
    }
    if has("levels.csv") {
        let rows: Vec<SMass> = read(&run_dir.join("levels.csv"))?;
        out.csv("s_mass.csv", &rows)?;
        index.push("s_mass.csv");
    }
    if mode == "stability" && has(SUMMARY_FILE) {
        let rows: Vec<Stab> = read(&run_dir.join(SUMMARY_FILE))?;
        let pts: Vec<LogLog> = rows
            .iter()
            .filter(|r| r.plus_norm > 0.0 && r.sup_diff > 0.0)
            .map(|r| LogLog {
                amplitude: r.amplitude,
                log_plus_norm: r.plus_norm.ln(),
                log_sup_diff: r.sup_diff.ln(),
            })
            .collect();
        out.csv("stability_loglog.csv", &pts)?;
        index.push("stability_loglog.csv");
    }
    if index.is_empty() {
        bail!("run at {} has no plottable artifacts", run_dir.display());
    }
    let entries = out.into_entries();
    let mut idx = Artifacts::new(&run_dir.join(PLOT_DIR))?;
    idx.json(
        "index.json",
        &json!({
            "run_id": manifest.run_id,
            "mode": manifest.mode,
            "slope": manifest.results.get("slope"),
            "exponent": manifest.results.get("exponent"),
            "series": entries,
        }),
    )?;
    Ok(index.iter().map(|f| run_dir.join(PLOT_DIR).join(f)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_data(dir.path()).is_err());
    }
}
