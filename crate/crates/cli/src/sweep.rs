//! Parameter sweeps over a base scenario.
//!
//! ```toml
//! base_preset = "fig2a"     # or an inline [base] scenario table
//! max_points = 64           # optional grid cap
//!
//! [[axes]]
//! param = "Omega"
//! values = [0.0, 5e-4]
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RawScenario, Scenario};
use crate::error::{CliError, Result};
use crate::io::ensure_dir;
use crate::scenario::{run_scenario, write_run};

pub const DEFAULT_MAX_POINTS: usize = 256;
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base_preset: Option<String>,
    #[serde(default)]
    pub base: Option<RawScenario>,
    pub axes: Vec<Axis>,
    #[serde(default = "default_cap")]
    pub max_points: usize,
}

fn default_cap() -> usize {
    DEFAULT_MAX_POINTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: Vec<toml::Value>,
}

/// One row of summary.csv.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub values: Vec<toml::Value>,
    pub status: &'static str,
    pub chi: Option<usize>,
    pub c: Option<usize>,
    pub xi: Option<usize>,
    pub mutual_info_final: Option<f64>,
    pub message: String,
}

impl SweepSpec {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Base scenario in raw form, with every parameter spelled out.
    pub fn base_raw(&self) -> Result<RawScenario> {
        match (&self.base_preset, &self.base) {
            (Some(p), None) => Ok(Scenario::from_preset(p)?.to_raw()),
            (None, Some(raw)) => Ok(Scenario::from_raw(raw.clone())?.to_raw()),
            _ => Err(CliError::Config("a sweep needs exactly one of `base_preset` or `base`".into())),
        }
    }

    /// Grid points in lexicographic order (last axis fastest).
    pub fn grid(&self) -> Result<Vec<Vec<toml::Value>>> {
        if self.axes.is_empty() {
            return Err(CliError::Config("a sweep needs at least one axis".into()));
        }
        let mut total: usize = 1;
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(CliError::Config(format!("axis `{}` has no values", a.param)));
            }
            total = total.saturating_mul(a.values.len());
        }
        if total > self.max_points {
            return Err(CliError::Config(format!("grid of {total} points exceeds max_points = {}", self.max_points)));
        }
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.axes.len()];
        loop {
            out.push(idx.iter().zip(&self.axes).map(|(&i, a)| a.values[i].clone()).collect());
            let mut k = self.axes.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.axes[k].values.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// Validates the sweep, runs every grid point (in parallel) and writes
/// `point_NNNN/` directories plus summary.csv.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<Vec<SweepRow>> {
    let base = spec.base_raw()?;
    for a in &spec.axes {
        if !base.params.contains_key(&a.param) {
            let known: Vec<&str> = base.params.keys().map(String::as_str).collect();
            return Err(CliError::Config(format!(
                "axis parameter `{}` is not a parameter of model `{}` (known: {})",
                a.param,
                base.model,
                known.join(", ")
            )));
        }
    }
    let grid = spec.grid()?;
    ensure_dir(out)?;
    let rows: Vec<SweepRow> = grid
        .into_par_iter()
        .enumerate()
        .map(|(point, values)| {
            let mut raw = base.clone();
            for (a, v) in spec.axes.iter().zip(&values) {
                raw.params.insert(a.param.clone(), v.clone());
            }
            let dir = out.join(format!("point_{point:04}"));
            let result = Scenario::from_raw(raw).and_then(|sc| {
                let run = run_scenario(&sc)?;
                write_run(&dir, &run)?;
                Ok(run)
            });
            match result {
                Ok(run) => SweepRow {
                    point,
                    values,
                    status: "ok",
                    chi: Some(run.report.analysis.chi),
                    c: Some(run.report.analysis.c),
                    xi: Some(run.report.analysis.xi),
                    mutual_info_final: run.report.analysis.mutual_info_final,
                    message: String::new(),
                },
                Err(e) => SweepRow {
                    point,
                    values,
                    status: match e.exit_code() {
                        2 => "config_error",
                        3 => "truncation",
                        4 => "io_error",
                        _ => "failed",
                    },
                    chi: None,
                    c: None,
                    xi: None,
                    mutual_info_final: None,
                    message: e.to_string(),
                },
            }
        })
        .collect();
    write_summary(&out.join(SUMMARY_FILE), spec, &rows)?;
    if rows.iter().all(|r| r.status != "ok") {
        return Err(CliError::SweepFailed(rows.len()));
    }
    Ok(rows)
}

fn write_summary(path: &Path, spec: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Schema(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut head = vec!["point".to_string()];
    head.extend(spec.axes.iter().map(|a| a.param.clone()));
    head.extend(["status", "chi", "c", "xi", "mutual_info_final", "message"].map(String::from));
    w.write_record(&head).map_err(io)?;
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let mut rec = vec![r.point.to_string()];
        rec.extend(r.values.iter().map(|v| match v {
            toml::Value::Float(f) => format!("{f:?}"),
            other => other.to_string(),
        }));
        rec.push(r.status.to_string());
        rec.push(opt(r.chi));
        rec.push(opt(r.c));
        rec.push(opt(r.xi));
        rec.push(r.mutual_info_final.map(|m| format!("{m:?}")).unwrap_or_default());
        rec.push(r.message.clone());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
