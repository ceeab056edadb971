//! Two-column plot data from a finished run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::output::{parse_csv, Table};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("missing run artifact {0}")]
    Missing(String),
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn two_columns(names: (&str, &str), a: &[f64], b: &[f64]) -> String {
    let mut out = format!("# {} {}\n", names.0, names.1);
    for (x, y) in a.iter().zip(b) {
        writeln!(out, "{x:.16e} {y:.16e}").unwrap();
    }
    out
}

/// Writes plot files into `<run_dir>/plot` and returns their paths. A run
/// with no plottable artifacts produces no files.
pub fn emit_plot_data(run_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let manifest_path = run_dir.join("run.json");
    let manifest = std::fs::read_to_string(&manifest_path).map_err(|_| PlotError::Missing(manifest_path.display().to_string()))?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest).map_err(|e| PlotError::Parse {
        file: "run.json".into(),
        message: e.to_string(),
    })?;
    let files: Vec<String> = manifest["files"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_default();

    let load = |name: &str| -> Result<Table, PlotError> {
        let path = run_dir.join(name);
        let text = std::fs::read_to_string(&path).map_err(|_| PlotError::Missing(path.display().to_string()))?;
        parse_csv(&text).map_err(|message| PlotError::Parse { file: name.into(), message })
    };
    let column = |t: &Table, file: &str, c: &str| {
        t.column(c).ok_or_else(|| PlotError::Parse { file: file.into(), message: format!("no column {c}") })
    };

    let mut outputs: Vec<(String, String)> = Vec::new();
    for name in &files {
        if name == "beam_params.csv" || name == "beam_ode.csv" {
            let t = load(name)?;
            let ts = column(&t, name, "t")?;
            let suffix = if name == "beam_ode.csv" { "_ode" } else { "" };
            outputs.push((format!("width{suffix}.txt"), two_columns(("t", "w/w0"), &ts, &column(&t, name, "w_over_w0")?)));
            outputs.push((format!("gouy{suffix}.txt"), two_columns(("t", "phi"), &ts, &column(&t, name, "phi")?)));
        } else if name == "rays.csv" {
            let t = load(name)?;
            outputs.push(("ray_xt.txt".into(), two_columns(("x", "t"), &column(&t, name, "x")?, &column(&t, name, "t")?)));
        } else if let Some(stem) = name.strip_suffix(".csv") {
            let section = if let Some(idx) = stem.strip_prefix("field_t") {
                format!("section_t{idx}.txt")
            } else if let Some(idx) = stem.strip_prefix("oracle_t") {
                format!("oracle_section_t{idx}.txt")
            } else {
                continue;
            };
            let t = load(name)?;
            outputs.push((section, two_columns(("x", "psi"), &column(&t, name, "x")?, &column(&t, name, "psi")?)));
        }
    }
    if outputs.is_empty() {
        return Ok(Vec::new());
    }
    let dir = run_dir.join("plot");
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| PlotError::Io { path: path.clone(), source }
    };
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    let mut written = Vec::new();
    for (name, body) in outputs {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
