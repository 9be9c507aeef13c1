//! `run` and `analyze`.

use std::path::{Path, PathBuf};

use qsync_core::lindblad::{evolve_observed, EvolveOptions, Trajectory};
use qsync_core::models::{moment_catalog, pauli_catalog, ModelParams};
use qsync_core::syncmeter::{analyze, mari_measure, mutual_information, SeriesView, SyncReport, Thresholds};
use qsync_core::CMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{default_window, RawScenario, Scenario};
use crate::error::{CliError, Result};
use crate::io::{ensure_dir, read_columns, write_columns, write_json};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MUTUAL_INFO_FILE: &str = "mutual_info.csv";
pub const SC_FILE: &str = "sc.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    pub fn current() -> Self {
        Self { name: env!("CARGO_PKG_NAME").to_string(), version: env!("CARGO_PKG_VERSION").to_string() }
    }
}

/// Integrator diagnostics summarised over the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub samples: usize,
    pub steps: usize,
    pub max_trace_error: f64,
    pub min_eigenvalue: Option<f64>,
    pub renormalizations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sc_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sc_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub software: Software,
    pub config: RawScenario,
    pub run: RunSummary,
    pub analysis: SyncReport,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    /// `(time, I(q1:q2))` for qubit models.
    pub mutual_info: Option<Vec<(f64, f64)>>,
    /// `(time, S_c)` for the oscillator model.
    pub sc: Option<Vec<(f64, f64)>>,
    pub report: RunReport,
}

/// Catalog analysed for a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogSpec {
    Pauli,
    Moments(usize),
}

impl CatalogSpec {
    pub fn for_params(p: &ModelParams) -> Self {
        match p {
            ModelParams::Vdp(v) => Self::Moments(v.n),
            _ => Self::Pauli,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "pauli" {
            return Ok(Self::Pauli);
        }
        if let Some(n) = s.strip_prefix("moments:") {
            if let Ok(n) = n.parse::<usize>() {
                return Ok(Self::Moments(n));
            }
        }
        Err(CliError::Config(format!("catalog `{s}` is not `pauli` or `moments:N`")))
    }

    pub fn operators(&self) -> Result<Vec<(String, CMatrix)>> {
        match self {
            Self::Pauli => Ok(pauli_catalog()),
            Self::Moments(n) => Ok(moment_catalog(*n)?),
        }
    }
}

/// Integrates a scenario and analyses the trajectory.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    let model = sc.params.build()?;
    let rho0 = sc.initial_density()?;
    let opts = EvolveOptions::new(sc.run.t_end, sc.run.sample_dt)
        .with_tolerances(sc.run.tolerances)
        .with_eigen_stride(sc.run.eigen_stride);
    let bosonic = sc.params.is_bosonic_pair();
    let (s1, s2) = sc.params.subsystem_slots();
    let mut mi = Vec::new();
    let mut scs = Vec::new();
    let trajectory = evolve_observed(&model, &rho0, &opts, &mut |t, rho| {
        if bosonic {
            scs.push((t, mari_measure(rho)?));
        } else {
            mi.push((t, mutual_information(rho, &[s1], &[s2])?));
        }
        Ok(())
    })?;
    let (mutual_info, sc_series) = if bosonic { (None, Some(scs)) } else { (Some(mi), None) };

    let window = window_for(sc.analysis.window, &trajectory.times);
    let catalog = CatalogSpec::for_params(&sc.params).operators()?;
    let view = SeriesView { times: &trajectory.times, names: &trajectory.names, rows: &trajectory.values };
    let mi_final = mutual_info.as_ref().and_then(|m| m.last().map(|p| p.1));
    let analysis = analyze(&view, &catalog, window, &sc.analysis.thresholds, mi_final)?;

    let sc_vals = sc_series.as_ref().map(|v| v.iter().map(|p| p.1).collect::<Vec<_>>());
    let summary = RunSummary {
        samples: trajectory.times.len(),
        steps: trajectory.steps,
        max_trace_error: trajectory.max_trace_error(),
        min_eigenvalue: trajectory.min_eigenvalue(),
        renormalizations: trajectory.diagnostics.iter().filter(|d| d.renormalized).count(),
        sc_min: sc_vals.as_ref().and_then(|v| v.iter().copied().reduce(f64::min)),
        sc_max: sc_vals.as_ref().and_then(|v| v.iter().copied().reduce(f64::max)),
    };
    let report = RunReport { software: Software::current(), config: sc.to_raw(), run: summary, analysis };
    Ok(RunOutput { trajectory, mutual_info, sc: sc_series, report })
}

fn window_for(configured: Option<[f64; 2]>, times: &[f64]) -> (f64, f64) {
    configured.map(|[a, b]| (a, b)).unwrap_or_else(|| default_window(times))
}

/// Writes trajectory.csv, mutual_info.csv or sc.csv, and report.json.
pub fn write_run(out: &Path, run: &RunOutput) -> Result<()> {
    ensure_dir(out)?;
    let t = &run.trajectory;
    write_columns(&out.join(TRAJECTORY_FILE), &t.names, &t.times, &t.values)?;
    let pairs = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<Vec<f64>>) { v.iter().map(|p| (p.0, vec![p.1])).unzip() };
    if let Some(mi) = &run.mutual_info {
        let (ts, rows) = pairs(mi);
        write_columns(&out.join(MUTUAL_INFO_FILE), &["mutual_info".into()], &ts, &rows)?;
    }
    if let Some(sc) = &run.sc {
        let (ts, rows) = pairs(sc);
        write_columns(&out.join(SC_FILE), &["sc".into()], &ts, &rows)?;
    }
    write_json(&out.join(REPORT_FILE), &run.report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeInput {
    pub trajectory: PathBuf,
    pub catalog: CatalogSpec,
    pub mutual_info: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub software: Software,
    pub input: AnalyzeInput,
    pub analysis: SyncReport,
}

/// Re-analyses a trajectory file. Without an explicit catalog it is inferred
/// from the columns (and a sibling report.json for oscillator truncation);
/// a sibling mutual_info.csv supplies the final mutual information.
pub fn analyze_file(
    trajectory: &Path,
    catalog: Option<CatalogSpec>,
    window: Option<(f64, f64)>,
    thresholds: &Thresholds,
) -> Result<AnalyzeReport> {
    let cols = read_columns(trajectory)?;
    let dir = trajectory.parent().unwrap_or(Path::new("."));
    let catalog = match catalog {
        Some(c) => c,
        None => infer_catalog(&cols.names, dir)?,
    };
    let mi_path = dir.join(MUTUAL_INFO_FILE);
    let (mutual_info, mi_final) = if mi_path.exists() {
        let mi = read_columns(&mi_path)?;
        let last = mi.rows.last().and_then(|r| r.first().copied());
        (Some(mi_path), last)
    } else {
        (None, None)
    };
    let window = window.unwrap_or_else(|| default_window(&cols.times));
    let view = SeriesView { times: &cols.times, names: &cols.names, rows: &cols.rows };
    let analysis = analyze(&view, &catalog.operators()?, window, thresholds, mi_final)?;
    Ok(AnalyzeReport {
        software: Software::current(),
        input: AnalyzeInput { trajectory: trajectory.to_path_buf(), catalog, mutual_info },
        analysis,
    })
}

fn infer_catalog(names: &[String], dir: &Path) -> Result<CatalogSpec> {
    let has = |n: &str| names.iter().any(|c| c == n);
    if has("sx_1") {
        return Ok(CatalogSpec::Pauli);
    }
    if has("x_1") {
        let report = dir.join(REPORT_FILE);
        if let Ok(text) = std::fs::read_to_string(&report) {
            if let Ok(r) = serde_json::from_str::<RunReport>(&text) {
                if let Ok(sc) = Scenario::from_raw(r.config) {
                    return Ok(CatalogSpec::for_params(&sc.params));
                }
            }
        }
        return Err(CliError::Config(
            "oscillator moments need `--catalog moments:N` (no readable report.json next to the trajectory)".into(),
        ));
    }
    Err(CliError::Schema("cannot infer a catalog: no `sx_1` or `x_1` column".into()))
}
