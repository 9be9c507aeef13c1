//! Scenario files.
//!
//! ```toml
//! model = "cavity_qubit"          # cavity_qubit | reduced_qubit | vdp
//! initial_state = "standard"      # or a preset name, or [initial_state] factors = [...]
//!
//! [params]
//! delta1 = 10.0
//! # ...
//!
//! [run]
//! t_end = 4000.0
//! sample_dt = 5.0
//! tolerances = { rel = 1e-8, abs = 1e-10 }   # optional
//!
//! [analysis]                      # optional
//! window = [2000.0, 4000.0]
//! thresholds = { tol_freq = 0.01 }
//! ```

use qsync_core::lindblad::Tolerances;
use qsync_core::models::{
    preset, standard_initial_state, CavityQubitParams, ModelParams, ReducedQubitParams, VdpParams, PRESET_NAMES,
};
use qsync_core::syncmeter::Thresholds;
use qsync_core::{DensityMatrix, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MODEL_KINDS: [&str; 3] = ["cavity_qubit", "reduced_qubit", "vdp"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub model: String,
    pub params: toml::Table,
    #[serde(default = "standard_state")]
    pub initial_state: InitialStateSpec,
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn standard_state() -> InitialStateSpec {
    InitialStateSpec::Named("standard".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStateSpec {
    /// `standard` or a preset name.
    Named(String),
    Explicit(ExplicitState),
}

/// Product of pure factor states; one amplitude list per factor, each entry a
/// real number or a `[re, im]` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitState {
    pub factors: Vec<Vec<Amplitude>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    fn value(self) -> C64 {
        match self {
            Self::Real(r) => C64::new(r, 0.0),
            Self::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_end: f64,
    pub sample_dt: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Minimum-eigenvalue diagnostic every this many samples (0 disables).
    #[serde(default = "one")]
    pub eigen_stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

/// Validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub initial_state: InitialStateSpec,
    pub run: RunConfig,
    pub analysis: AnalysisConfig,
}

fn schema(e: impl std::fmt::Display) -> CliError {
    CliError::Schema(e.to_string())
}

impl Scenario {
    pub fn parse_toml(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawScenario) -> Result<Self> {
        let params_value = toml::Value::Table(raw.params);
        let params = match raw.model.as_str() {
            "cavity_qubit" => ModelParams::CavityQubit(
                CavityQubitParams::deserialize(params_value).map_err(|e| schema(format!("[params] {e}")))?,
            ),
            "reduced_qubit" => ModelParams::ReducedQubit(
                ReducedQubitParams::deserialize(params_value).map_err(|e| schema(format!("[params] {e}")))?,
            ),
            "vdp" => {
                ModelParams::Vdp(VdpParams::deserialize(params_value).map_err(|e| schema(format!("[params] {e}")))?)
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown model `{other}`; expected one of {}",
                    MODEL_KINDS.join(", ")
                )))
            }
        };
        let sc = Self { params, initial_state: raw.initial_state, run: raw.run, analysis: raw.analysis };
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<()> {
        match &self.params {
            ModelParams::CavityQubit(p) => p.validate()?,
            ModelParams::ReducedQubit(p) => p.validate()?,
            ModelParams::Vdp(p) => p.validate()?,
        }
        if let InitialStateSpec::Named(name) = &self.initial_state {
            let fits = match name.as_str() {
                "standard" => true,
                "fig2a" | "fig2b" | "fig2c" => !self.params.is_bosonic_pair(),
                "fig3" => self.params.is_bosonic_pair(),
                other => {
                    return Err(CliError::Config(format!(
                        "unknown initial_state `{other}`; expected `standard`, one of {}, or an explicit factor table",
                        PRESET_NAMES.join(", ")
                    )))
                }
            };
            if !fits {
                return Err(CliError::Config(format!(
                    "initial_state `{name}` does not apply to model `{}`",
                    self.params.kind()
                )));
            }
        }
        if let Some([t0, t1]) = self.analysis.window {
            if !(t0 < t1) {
                return Err(CliError::Config(format!("analysis.window [{t0}, {t1}] is empty")));
            }
        }
        self.analysis.thresholds.validate()?;
        Ok(())
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        let p = preset(name)?;
        Ok(Self {
            params: p.params,
            initial_state: InitialStateSpec::Named(name.to_string()),
            run: RunConfig {
                t_end: p.t_end,
                sample_dt: p.sample_dt,
                tolerances: Tolerances::default(),
                eigen_stride: default_eigen_stride(&p.params),
            },
            analysis: AnalysisConfig { window: Some([p.window.0, p.window.1]), thresholds: Thresholds::default() },
        })
    }

    pub fn to_raw(&self) -> RawScenario {
        let value = serde_json::to_value(self.params).expect("params serialize");
        let table: toml::Table = serde_json::from_value(value["params"].clone()).expect("params are a table");
        RawScenario {
            model: self.params.kind().to_string(),
            params: table,
            initial_state: self.initial_state.clone(),
            run: self.run,
            analysis: self.analysis,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("scenario serializes to TOML")
    }

    pub fn initial_density(&self) -> Result<DensityMatrix> {
        match &self.initial_state {
            InitialStateSpec::Named(_) => Ok(standard_initial_state(&self.params)?),
            InitialStateSpec::Explicit(e) => {
                let layout = self.params.build()?.layout().clone();
                let factors: Vec<Vec<C64>> = e.factors.iter().map(|f| f.iter().map(|a| a.value()).collect()).collect();
                Ok(DensityMatrix::product_pure(layout, &factors)?)
            }
        }
    }
}

/// Large bosonic spaces check positivity every tenth sample.
pub fn default_eigen_stride(params: &ModelParams) -> usize {
    match params {
        ModelParams::Vdp(p) if p.n > 12 => 10,
        _ => 1,
    }
}

/// Final half of the samples: `[times[len / 2], times[len - 1]]`.
pub fn default_window(times: &[f64]) -> (f64, f64) {
    match times.len() {
        0 => (0.0, 0.0),
        n => (times[n / 2], times[n - 1]),
    }
}

/// Parses `T0:T1`.
pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let bad = || CliError::Config(format!("window `{s}` is not of the form T0:T1"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let t0: f64 = a.trim().parse().map_err(|_| bad())?;
    let t1: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(t0 < t1) {
        return Err(CliError::Config(format!("window `{s}` is empty")));
    }
    Ok((t0, t1))
}
