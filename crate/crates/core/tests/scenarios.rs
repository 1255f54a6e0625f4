use nvhqc::scenario::{self, list_scenarios, RunOptions, ScenarioConfig};
use nvhqc::Error;

const NOISELESS_NOT: &str = r#"
name = "quiet_not"
kind = "single_qubit_gate"
initial = "1"

[gate]
theta = { value = 0.5, unit = "pi" }
gamma = { value = 1.0, unit = "pi" }

[drive]
Omega = { value = 300.0, unit = "2pi_MHz" }
Delta = { value = 6.0, unit = "2pi_GHz" }
"#;

fn with(extra: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml(&format!("{NOISELESS_NOT}\n{extra}")).unwrap()
}

fn field_of(e: Error) -> String {
    match e {
        Error::InvalidParameter { field, .. } => field,
        other => panic!("expected a parameter error, got {other}"),
    }
}

#[test]
fn bundled_scenarios_load_by_name() {
    let names: Vec<String> = list_scenarios().into_iter().map(|s| s.name).collect();
    assert_eq!(names.len(), 8);
    for n in &names {
        let c = scenario::load(n).unwrap();
        assert_eq!(&c.name, n);
    }
    assert!(matches!(scenario::load("no_such_scenario"), Err(Error::Config(_))));
}

#[test]
fn csv_has_one_row_per_recorded_time() {
    let c = with("");
    let out = scenario::run(&c, &RunOptions::default()).unwrap();
    let table = out.table("quiet_not.csv").unwrap();
    let integ = out.summary.integrator.as_ref().unwrap();
    assert_eq!(table.rows.len(), integ.recorded_points);
    let t = table.column("t_us").unwrap();
    assert_eq!(t[0], 0.0);
    assert!((t.last().unwrap() - out.summary.details["tau_us"].as_f64().unwrap()).abs() < 1e-12);
    // Populations stay a probability distribution.
    for row in 0..table.rows.len() {
        let s: f64 = ["pop_0", "pop_1", "pop_e"].iter().map(|c| table.column(c).unwrap()[row]).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}

#[test]
fn noiseless_not_stays_within_the_leakage_bound() {
    let out = scenario::run(&with(""), &RunOptions::default()).unwrap();
    let f = out.summary.fidelity("state").unwrap();
    assert!(f > 1.0 - 1.0 / 401.0, "{f}");
    assert!(out.summary.hygiene.passes());
}

#[test]
fn runs_are_deterministic() {
    let c = with("");
    let a = scenario::run(&c, &RunOptions::default()).unwrap();
    let b = scenario::run(&c, &RunOptions::default()).unwrap();
    assert_eq!(a.summary.to_json().unwrap(), b.summary.to_json().unwrap());
    assert_eq!(a.tables, b.tables);
}

#[test]
fn sweep_summary_does_not_depend_on_workers() {
    let text = NOISELESS_NOT
        .replace("single_qubit_gate", "sweep")
        .replace("initial = \"1\"", "")
        + "\n[sweep]\nn_samples = 7\n[noise]\nenabled = true\ngamma_x = { value = 1.5, unit = \"2pi_MHz\" }\n";
    let c = ScenarioConfig::from_toml(&text).unwrap();
    let run = |workers| {
        scenario::run(&c, &RunOptions { out_dir: None, workers })
            .unwrap()
            .summary
            .to_json()
            .unwrap()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        workers: 1,
    };
    let out = scenario::run(&scenario::load("n11_sign_check").unwrap(), &opts).unwrap();
    assert_eq!(out.files.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("n11_sign_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("n11_sign_check.summary.json")).unwrap()).unwrap();
    assert_eq!(json["details"]["realized"], "u2_times_zz");
    assert_eq!(json["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn preconditions_are_checked_before_running() {
    let mut c = with("");
    c.initial = Some("e".into());
    assert_eq!(field_of(scenario::validate(&c).unwrap_err()), "initial");

    let c = with("[integrator]\nmethod = \"exact\"\n[noise]\nenabled = true\ngamma_x = { value = 1.0, unit = \"2pi_MHz\" }");
    assert_eq!(field_of(scenario::validate(&c).unwrap_err()), "integrator.method");

    let mut c = scenario::load("fig3_swaplike").unwrap();
    c.gate.as_mut().unwrap().vartheta.as_mut().unwrap().value = 0.3;
    assert_eq!(field_of(scenario::validate(&c).unwrap_err()), "gate.vartheta");

    let mut c = scenario::load("fig2c_sweep_not").unwrap();
    c.sweep.as_mut().unwrap().n_samples = 1;
    assert_eq!(field_of(scenario::validate(&c).unwrap_err()), "sweep.n_samples");

    let mut c = scenario::load("fiber_reduction_check").unwrap();
    c.fiber.as_mut().unwrap().j.value = 0.4;
    assert!(scenario::validate(&c).unwrap_err().is_config_error());
}

#[test]
fn validate_reports_derived_quantities() {
    let r = scenario::validate(&scenario::load("fig3_swaplike").unwrap()).unwrap();
    // g = G Ω / δ = G / 10
    let g = std::f64::consts::TAU * 100.0;
    assert!((r.derived["g1"] - g).abs() < 1e-9);
    assert!((r.derived["g2"] - g).abs() < 1e-9);
    assert!((r.derived["vartheta"] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}
