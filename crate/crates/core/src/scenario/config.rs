//! TOML scenario documents.
//!
//! Every frequency is written as a `{ value, unit }` pair so that factors of
//! 2π are never implicit. Angles use the same shape with `pi` or `rad`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorOptions, NvRates, RelaxationConvention, DEFAULT_SAFETY};
use crate::error::{Error, Result};
use crate::model::{CavityNv, CavityQubitModel, FiberModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[serde(rename = "2pi_GHz")]
    TwoPiGHz,
    #[serde(rename = "2pi_MHz")]
    TwoPiMHz,
    #[serde(rename = "2pi_kHz")]
    TwoPiKHz,
    #[serde(rename = "rad_per_us")]
    RadPerUs,
}

/// An angular frequency with an explicit unit tag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frequency {
    pub value: f64,
    pub unit: FrequencyUnit,
}

impl Frequency {
    pub fn rad_per_us(value: f64) -> Self {
        Self {
            value,
            unit: FrequencyUnit::RadPerUs,
        }
    }

    /// The value in rad/µs.
    pub fn get(&self) -> f64 {
        match self.unit {
            FrequencyUnit::TwoPiGHz => TAU * 1e3 * self.value,
            FrequencyUnit::TwoPiMHz => TAU * self.value,
            FrequencyUnit::TwoPiKHz => TAU * 1e-3 * self.value,
            FrequencyUnit::RadPerUs => self.value,
        }
    }

    fn normalized(&self) -> Self {
        Self::rad_per_us(self.get())
    }

    fn finite(&self, field: &str) -> Result<f64> {
        let v = self.get();
        if !v.is_finite() {
            return Err(Error::param(field, "must be finite"));
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    Pi,
    Rad,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Angle {
    pub value: f64,
    pub unit: AngleUnit,
}

impl Angle {
    pub fn radians(value: f64) -> Self {
        Self {
            value,
            unit: AngleUnit::Rad,
        }
    }

    pub fn get(&self) -> f64 {
        match self.unit {
            AngleUnit::Pi => PI * self.value,
            AngleUnit::Rad => self.value,
        }
    }

    fn normalized(&self) -> Self {
        Self::radians(self.get())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SingleQubitGate,
    TwoQubitSingleCavity,
    TwoQubitFiber,
    Sweep,
    ModelValidation,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SingleQubitGate => "single_qubit_gate",
            Self::TwoQubitSingleCavity => "two_qubit_single_cavity",
            Self::TwoQubitFiber => "two_qubit_fiber",
            Self::Sweep => "sweep",
            Self::ModelValidation => "model_validation",
        }
    }
}

/// Gate target. Single-qubit scenarios use `theta` and `gamma`; two-qubit
/// scenarios may state `vartheta`, which must agree with the couplings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub theta: Option<Angle>,
    pub gamma: Option<Angle>,
    pub vartheta: Option<Angle>,
}

/// Total Rabi frequency and one-photon detuning of a single Λ-system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(rename = "Omega")]
    pub omega: Frequency,
    #[serde(rename = "Delta")]
    pub delta: Frequency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NvConfig {
    #[serde(rename = "G")]
    pub g_cav: Frequency,
    #[serde(rename = "Omega")]
    pub omega: Frequency,
    pub delta: Frequency,
}

impl NvConfig {
    fn resolve(&self, k: usize) -> Result<CavityNv> {
        Ok(CavityNv {
            g_cav: self.g_cav.finite(&format!("nv{k}.G"))?,
            omega: self.omega.finite(&format!("nv{k}.Omega"))?,
            delta: self.delta.finite(&format!("nv{k}.delta"))?,
        })
    }

    fn normalized(&self) -> Self {
        Self {
            g_cav: self.g_cav.normalized(),
            omega: self.omega.normalized(),
            delta: self.delta.normalized(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub n_max: usize,
    pub nv1: NvConfig,
    pub nv2: NvConfig,
}

impl CavityConfig {
    pub fn model(&self) -> Result<CavityQubitModel> {
        let model = CavityQubitModel {
            nv1: self.nv1.resolve(1)?,
            nv2: self.nv2.resolve(2)?,
            n_max: self.n_max,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub n_max: usize,
    pub nv1: NvConfig,
    pub nv2: NvConfig,
    #[serde(rename = "J")]
    pub j: Frequency,
    pub varphi: Angle,
    pub delta: Frequency,
    /// Also propagate the reduced single-mode model and report the
    /// discrepancy.
    #[serde(default)]
    pub compare_reduced: bool,
    /// Retune each drive so that the second-order light shifts of `|1>` and
    /// of a `c2` photon coincide.
    #[serde(default)]
    pub stark_compensation: bool,
}

impl FiberConfig {
    pub fn model(&self) -> Result<FiberModel> {
        let model = FiberModel {
            nv1: self.nv1.resolve(1)?,
            nv2: self.nv2.resolve(2)?,
            j: self.j.finite("fiber.J")?,
            varphi: self.varphi.get(),
            delta: self.delta.finite("fiber.delta")?,
            n_max: self.n_max,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Cavity loss from a wavelength (m) and quality factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityQuality {
    pub wavelength_m: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub relaxation: RelaxationConvention,
    /// Single-qubit runs: also run the other `S⁻` convention and report it.
    #[serde(default)]
    pub compare_relaxation: bool,
    pub gamma_x: Option<Frequency>,
    pub gamma_y: Option<Frequency>,
    pub gamma_z: Option<Frequency>,
    /// Cavity loss given directly ...
    pub kappa: Option<Frequency>,
    /// ... or through the cavity quality factor.
    pub cavity: Option<CavityQuality>,
    /// Loss of the fiber mode.
    pub kappa_fiber: Option<Frequency>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            relaxation: RelaxationConvention::Decay,
            compare_relaxation: false,
            gamma_x: None,
            gamma_y: None,
            gamma_z: None,
            kappa: None,
            cavity: None,
            kappa_fiber: None,
        }
    }
}

impl NoiseConfig {
    /// NV rates, all zero when noise is disabled.
    pub fn rates(&self) -> Result<NvRates> {
        if !self.enabled {
            return Ok(NvRates::default());
        }
        let rate = |f: &Option<Frequency>, name: &str| -> Result<f64> {
            let v = f.map(|f| f.get()).unwrap_or(0.0);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("noise.{name}"), "rate must be finite and >= 0"));
            }
            Ok(v)
        };
        Ok(NvRates {
            gamma_x: rate(&self.gamma_x, "gamma_x")?,
            gamma_y: rate(&self.gamma_y, "gamma_y")?,
            gamma_z: rate(&self.gamma_z, "gamma_z")?,
        })
    }

    /// Cavity loss in rad/µs, zero when noise is disabled.
    pub fn kappa(&self) -> Result<f64> {
        if !self.enabled {
            return Ok(0.0);
        }
        let kappa = match (&self.kappa, &self.cavity) {
            (Some(_), Some(_)) => {
                return Err(Error::param("noise.kappa", "give either kappa or cavity, not both"))
            }
            (Some(k), None) => k.get(),
            (None, Some(c)) => crate::dynamics::cavity_kappa(c.wavelength_m, c.q)?,
            (None, None) => 0.0,
        };
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::param("noise.kappa", "must be finite and >= 0"));
        }
        Ok(kappa)
    }

    pub fn kappa_fiber(&self) -> Result<f64> {
        if !self.enabled {
            return Ok(0.0);
        }
        let k = self.kappa_fiber.map(|f| f.get()).unwrap_or(0.0);
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::param("noise.kappa_fiber", "must be finite and >= 0"));
        }
        Ok(k)
    }

    fn normalized(&self) -> Result<Self> {
        let kappa = match (&self.kappa, &self.cavity) {
            (None, None) => None,
            _ => Some(Frequency::rad_per_us(self.kappa()?)),
        };
        Ok(Self {
            enabled: self.enabled,
            relaxation: self.relaxation,
            compare_relaxation: self.compare_relaxation,
            gamma_x: self.gamma_x.map(|f| f.normalized()),
            gamma_y: self.gamma_y.map(|f| f.normalized()),
            gamma_z: self.gamma_z.map(|f| f.normalized()),
            kappa: if self.enabled { kappa } else { self.kappa.map(|f| f.normalized()) },
            cavity: if self.enabled { None } else { self.cavity },
            kappa_fiber: self.kappa_fiber.map(|f| f.normalized()),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact propagation without noise, RK4 otherwise.
    #[default]
    Auto,
    Rk4,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub safety: f64,
    pub record_every: usize,
    pub refinement: usize,
    /// Rerun with half the step and report the change in final fidelity.
    pub check_step_halving: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let o = IntegratorOptions::default();
        Self {
            method: Method::Auto,
            safety: o.safety,
            record_every: o.record_every,
            refinement: o.refinement,
            check_step_halving: true,
        }
    }
}

impl IntegratorConfig {
    pub fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            safety: self.safety,
            record_every: self.record_every,
            refinement: self.refinement,
            keep_states: false,
        }
    }

    /// The concrete method for a run with or without dissipation.
    pub fn method_for(&self, noisy: bool) -> Method {
        match self.method {
            Method::Auto if noisy => Method::Rk4,
            Method::Auto => Method::Exact,
            m => m,
        }
    }

    fn validate(&self) -> Result<()> {
        self.options().validate()?;
        if self.safety < DEFAULT_SAFETY {
            return Err(Error::param("integrator.safety", "below the stability bound"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationCheck {
    EffectiveVsFullDeltaScan,
    N11SignCheck,
}

/// How the drive is rescaled when `delta` doubles with `g` held fixed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaScaling {
    /// `G` and `Omega` both grow by √2, so `G/delta` and `Omega/delta` shrink.
    #[default]
    GAndOmega,
    /// Only `Omega` doubles; `Omega/delta` stays fixed.
    OmegaOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    pub check: ValidationCheck,
    /// Delta scan: number of doublings.
    pub doublings: Option<usize>,
    /// Delta scan: rescaling rules to run; the first is the primary one.
    pub scalings: Option<Vec<DeltaScaling>>,
    /// Delta scan: intervals of the comparison grid.
    pub grid_intervals: Option<usize>,
    /// Sign check: equal effective coupling for the `|11>` amplitude.
    pub g: Option<Frequency>,
    /// Sign check: Fock cutoffs for the `|11>` amplitude.
    pub cutoffs: Option<Vec<usize>>,
    /// Sign check: an asymmetric angle that separates `±sin ϑ`.
    pub vartheta: Option<Angle>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV file name inside the output directory.
    pub csv: Option<String>,
    /// Summary file name inside the output directory.
    pub summary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub description: String,
    /// Initial basis state: `0`, `1`, `e` for one NV, `q1 q2` such as `01`
    /// for two.
    pub initial: Option<String>,
    pub gate: Option<GateConfig>,
    pub drive: Option<DriveConfig>,
    pub cavity: Option<CavityConfig>,
    pub fiber: Option<FiberConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub sweep: Option<SweepConfig>,
    pub validation: Option<ValidationConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn require<'a, T>(value: &'a Option<T>, field: &str, kind: ScenarioKind) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::param(field, format!("required for kind {}", kind.as_str())))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn gate(&self) -> Result<&GateConfig> {
        require(&self.gate, "gate", self.kind)
    }

    pub fn drive(&self) -> Result<&DriveConfig> {
        require(&self.drive, "drive", self.kind)
    }

    pub fn cavity(&self) -> Result<&CavityConfig> {
        require(&self.cavity, "cavity", self.kind)
    }

    pub fn fiber(&self) -> Result<&FiberConfig> {
        require(&self.fiber, "fiber", self.kind)
    }

    pub fn sweep(&self) -> Result<&SweepConfig> {
        require(&self.sweep, "sweep", self.kind)
    }

    pub fn validation(&self) -> Result<&ValidationConfig> {
        require(&self.validation, "validation", self.kind)
    }

    pub fn initial(&self) -> Result<&str> {
        Ok(require(&self.initial, "initial", self.kind)?.as_str())
    }

    pub fn csv_name(&self) -> String {
        self.output
            .csv
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn summary_name(&self) -> String {
        self.output
            .summary
            .clone()
            .unwrap_or_else(|| format!("{}.summary.json", self.name))
    }

    /// Field-level checks that need no physics; `scenario::validate` runs
    /// these first.
    pub(crate) fn check_fields(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::param("name", "must be a non-empty [A-Za-z0-9_-] identifier"));
        }
        self.integrator.validate()?;
        self.noise.rates()?;
        self.noise.kappa()?;
        self.noise.kappa_fiber()?;
        for (field, name) in [("output.csv", &self.output.csv), ("output.summary", &self.output.summary)] {
            if let Some(n) = name {
                if n.is_empty() || n.contains('/') || n.contains('\\') || n == ".." {
                    return Err(Error::param(field, "must be a plain file name"));
                }
            }
        }
        Ok(())
    }

    /// A copy with every frequency in rad/µs and every angle in radians.
    pub fn normalized(&self) -> Result<Self> {
        let mut c = self.clone();
        if let Some(g) = &mut c.gate {
            g.theta = g.theta.map(|a| a.normalized());
            g.gamma = g.gamma.map(|a| a.normalized());
            g.vartheta = g.vartheta.map(|a| a.normalized());
        }
        if let Some(d) = &mut c.drive {
            d.omega = d.omega.normalized();
            d.delta = d.delta.normalized();
        }
        if let Some(cav) = &mut c.cavity {
            cav.nv1 = cav.nv1.normalized();
            cav.nv2 = cav.nv2.normalized();
        }
        if let Some(f) = &mut c.fiber {
            f.nv1 = f.nv1.normalized();
            f.nv2 = f.nv2.normalized();
            f.j = f.j.normalized();
            f.delta = f.delta.normalized();
            f.varphi = f.varphi.normalized();
        }
        if let Some(v) = &mut c.validation {
            v.g = v.g.map(|f| f.normalized());
            v.vartheta = v.vartheta.map(|a| a.normalized());
        }
        c.noise = self.noise.normalized()?;
        Ok(c)
    }
}
