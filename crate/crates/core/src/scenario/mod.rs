//! Config-driven scenarios: parse a TOML document, check it, run it, and
//! write figure-ready CSV tables plus a JSON summary.
//!
//! CSV columns by kind:
//!
//! | kind | columns |
//! |------|---------|
//! | `single_qubit_gate` | `t_us, pop_0, pop_1, pop_e, fidelity` |
//! | `two_qubit_single_cavity`, `two_qubit_fiber` | `t_us, pop_00, pop_01, pop_10, pop_11, pop_e1, pop_e2, photons, fidelity` |
//! | `sweep` | `theta_rad, fidelity` |
//! | `model_validation` (delta scan) | `scaling, doubling, G, Omega, delta, g1, g2, max_infidelity, improvement` |
//! | `model_validation` (sign check) | `n_max, amp11_re, amp11_im` |
//!
//! Two-qubit populations are those of the NV pair with the photon modes
//! traced out; `fidelity` is measured against the target on the NV pair.

mod bundled;
pub mod config;
mod run;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

pub use bundled::{bundled_config, list_scenarios, BundledScenario};
pub use config::*;

use crate::error::{Error, Result};
use crate::metrics::FidelityReport;
use crate::quantum::DensityDiagnostics;

/// Acceptance bounds on integrator health.
pub const HYGIENE_TRACE_DRIFT: f64 = 1e-8;
pub const HYGIENE_HERMITICITY: f64 = 1e-10;
pub const HYGIENE_MIN_EIGENVALUE: f64 = -1e-8;
pub const HYGIENE_STEP_HALVING: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Where to write files; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sweeps.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: None,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

/// A CSV table held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file_name: String, header: &[&str]) -> Self {
        Self {
            file_name,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| v.to_string()).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[j].parse().ok()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Worst density-matrix health over every propagation in a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hygiene {
    pub trace_drift: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Largest change in a reported fidelity when the step is halved;
    /// absent for exact propagation or when the check is off.
    pub step_halving_change: Option<f64>,
}

impl Hygiene {
    fn from_diagnostics(d: DensityDiagnostics) -> Self {
        Self {
            trace_drift: d.trace_drift,
            hermiticity_defect: d.hermiticity_defect,
            min_eigenvalue: d.min_eigenvalue,
            step_halving_change: None,
        }
    }

    fn merge(&mut self, d: DensityDiagnostics) {
        self.trace_drift = self.trace_drift.max(d.trace_drift);
        self.hermiticity_defect = self.hermiticity_defect.max(d.hermiticity_defect);
        self.min_eigenvalue = self.min_eigenvalue.min(d.min_eigenvalue);
    }

    /// Every bound met; a missing step-halving figure counts as met.
    pub fn passes(&self) -> bool {
        self.trace_drift <= HYGIENE_TRACE_DRIFT
            && self.hermiticity_defect <= HYGIENE_HERMITICITY
            && self.min_eigenvalue >= HYGIENE_MIN_EIGENVALUE
            && self
                .step_halving_change
                .is_none_or(|c| c < HYGIENE_STEP_HALVING)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegratorReport {
    pub method: Method,
    /// RK4 step in µs; zero for exact propagation.
    pub step_us: f64,
    pub steps: usize,
    /// Largest step allowed by the stability bound.
    pub step_bound_us: f64,
    pub safety: f64,
    pub record_every: usize,
    pub recorded_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub final_fidelities: BTreeMap<String, f64>,
    pub peak_leakage: Option<f64>,
    pub integrator: Option<IntegratorReport>,
    pub hygiene: Hygiene,
    pub report: Option<FidelityReport>,
    /// Kind-specific results.
    pub details: BTreeMap<String, serde_json::Value>,
    /// The configuration with every quantity in rad/µs and radians.
    pub config: ScenarioConfig,
    pub outputs: Vec<String>,
}

impl Summary {
    pub fn fidelity(&self, key: &str) -> Option<f64> {
        self.final_fidelities.get(key).copied()
    }

    pub fn detail(&self, key: &str) -> Option<&serde_json::Value> {
        self.details.get(key)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub tables: Vec<Table>,
    /// Files written, empty for in-memory runs.
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn table(&self, file_name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file_name == file_name)
    }
}

/// Derived quantities computed by [`validate`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub kind: Option<ScenarioKind>,
    pub derived: BTreeMap<String, f64>,
}

/// Read a scenario from a file path or, failing that, a bundled name.
pub fn load(name_or_path: &str) -> Result<ScenarioConfig> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        return ScenarioConfig::from_toml(&text);
    }
    match bundled_config(name_or_path) {
        Some(text) => ScenarioConfig::from_toml(text),
        None => Err(Error::Config(format!(
            "no file or bundled scenario named {name_or_path:?}"
        ))),
    }
}

/// Run every precondition check without propagating anything.
pub fn validate(config: &ScenarioConfig) -> Result<ValidationReport> {
    config.check_fields()?;
    let derived = run::prepare(config)?;
    Ok(ValidationReport {
        scenario: config.name.clone(),
        kind: Some(config.kind),
        derived,
    })
}

/// Validate and run a scenario, writing outputs when `options.out_dir` is
/// set.
pub fn run(config: &ScenarioConfig, options: &RunOptions) -> Result<Outcome> {
    validate(config)?;
    info!("running scenario {} ({})", config.name, config.kind.as_str());
    let (mut summary, tables) = run::execute(config, options)?;
    let mut files = Vec::new();
    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir)?;
        for t in &tables {
            let path = dir.join(&t.file_name);
            fs::write(&path, t.to_csv())?;
            files.push(path);
        }
        summary.outputs = tables.iter().map(|t| t.file_name.clone()).collect();
        summary.outputs.push(config.summary_name());
        let path = dir.join(config.summary_name());
        fs::write(&path, summary.to_json()? + "\n")?;
        files.push(path);
    }
    Ok(Outcome {
        summary,
        tables,
        files,
    })
}
