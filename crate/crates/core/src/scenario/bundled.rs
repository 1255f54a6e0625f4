//! Scenario configs compiled into the binary.

use serde::Serialize;

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../scenarios/", $name, ".toml")))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundle![
    "fig2a_hadamard",
    "fig2b_not",
    "fig2c_sweep_hadamard",
    "fig2c_sweep_not",
    "fig3_swaplike",
    "effective_vs_full_delta_scan",
    "fiber_reduction_check",
    "n11_sign_check",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundledScenario {
    pub name: String,
    pub kind: String,
    pub description: String,
}

/// TOML text of a bundled scenario.
pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn list_scenarios() -> Vec<BundledScenario> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let c = super::ScenarioConfig::from_toml(text).expect("bundled config parses");
            BundledScenario {
                name: name.to_string(),
                kind: c.kind.as_str().to_string(),
                description: c.description,
            }
        })
        .collect()
}
