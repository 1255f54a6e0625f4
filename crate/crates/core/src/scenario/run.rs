//! Scenario execution.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::Mutex;

use log::{info, warn};
use serde_json::{json, Value};

use super::config::*;
use super::{Hygiene, IntegratorReport, RunOptions, Summary, Table};
use crate::dynamics::{
    evolve_unitary, fiber_noise, integrate, single_qubit_noise, step_bound, two_qubit_noise,
    NoiseModel, Observable, Probe, RelaxationConvention, StepPlan, Trajectory, DEFAULT_SAFETY,
};
use crate::error::{Error, Result};
use crate::holonomy::{
    holonomic_unitary, synthesize_single_qubit, two_qubit_pulse_params, u2, SingleQubitGateSpec,
    TwoQubitGateSpec,
};
use crate::metrics::{
    apply_embedded, gate_fidelity_sweep, gate_overlap_infidelity, state_fidelity, sweep_angles,
    sweep_state, trace_distance, FidelityReport,
};
use crate::model::{
    computational_projector, fiber_reduced_hamiltonian, fiber_slot, fiber_stark_compensation,
    fiber_static_hamiltonian, level, level_projector, single_qubit_hamiltonian,
    two_qubit_effective_hamiltonian, two_qubit_index, two_qubit_static_hamiltonian, CavityNv,
    CavityQubitModel, FiberModel, SingleQubitDrive, CAVITY_SLOT, NV_SLOTS,
};
use crate::quantum::{
    annihilation_operator, basis_index, basis_levels, basis_projector, basis_vector, embed,
    matrix_exponential_propagator, projector, CMatrix, CVector, DensityDiagnostics, Operator,
    QuantumState, C64, ONE,
};

/// Tolerance for a stated `vartheta` against the one the couplings give.
const VARTHETA_TOL: f64 = 1e-9;

fn convention_name(c: RelaxationConvention) -> &'static str {
    match c {
        RelaxationConvention::Decay => "decay",
        RelaxationConvention::Literal => "literal",
    }
}

fn other_convention(c: RelaxationConvention) -> RelaxationConvention {
    match c {
        RelaxationConvention::Decay => RelaxationConvention::Literal,
        RelaxationConvention::Literal => RelaxationConvention::Decay,
    }
}

fn check_method(config: &ScenarioConfig, noise: &NoiseModel) -> Result<()> {
    if config.integrator.method == Method::Exact && !noise.is_empty() {
        return Err(Error::param(
            "integrator.method",
            "exact propagation cannot include dissipation; use rk4 or disable noise",
        ));
    }
    Ok(())
}

fn parse_single_initial(label: &str) -> Result<usize> {
    match label {
        "0" => Ok(level::G0),
        "1" => Ok(level::G1),
        _ => Err(Error::param(
            "initial",
            format!("{label:?} is not a qubit basis state (expected \"0\" or \"1\")"),
        )),
    }
}

fn parse_pair_initial(label: &str) -> Result<(usize, usize)> {
    let bits: Vec<usize> = label
        .chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::param("initial", format!("{label:?} is not a two-qubit label")))?;
    match bits.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::param(
            "initial",
            format!("{label:?} must name two qubits, e.g. \"01\""),
        )),
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn check_vartheta(config: &ScenarioConfig, spec: &TwoQubitGateSpec) -> Result<()> {
    let stated = config.gate.as_ref().and_then(|g| g.vartheta);
    if let Some(v) = stated {
        let diff = wrap_angle(v.get() - spec.vartheta);
        if diff.abs() > VARTHETA_TOL {
            return Err(Error::param(
                "gate.vartheta",
                format!(
                    "couplings give vartheta = {:.12} rad but the target is {:.12} rad",
                    spec.vartheta,
                    v.get()
                ),
            ));
        }
    }
    Ok(())
}

struct SingleSetup {
    spec: SingleQubitGateSpec,
    drive: SingleQubitDrive,
    h: Operator,
    ideal: Operator,
    noise: NoiseModel,
}

fn single_setup(config: &ScenarioConfig) -> Result<SingleSetup> {
    let gate = config.gate()?;
    let theta = gate
        .theta
        .ok_or_else(|| Error::param("gate.theta", "required for single-qubit gates"))?;
    let gamma = gate
        .gamma
        .ok_or_else(|| Error::param("gate.gamma", "required for single-qubit gates"))?;
    let spec = SingleQubitGateSpec::new(theta.get(), gamma.get())?;
    let d = config.drive()?;
    let drive = synthesize_single_qubit(&spec, d.omega.get(), d.delta.get())?;
    let rates = config.noise.rates()?;
    let noise = if config.noise.enabled {
        single_qubit_noise(&rates, config.noise.relaxation)?
    } else {
        NoiseModel::none()
    };
    check_method(config, &noise)?;
    Ok(SingleSetup {
        spec,
        drive,
        h: single_qubit_hamiltonian(&drive),
        ideal: holonomic_unitary(&spec)?,
        noise,
    })
}

struct CavitySetup {
    model: CavityQubitModel,
    g: (f64, f64),
    spec: TwoQubitGateSpec,
    h: Operator,
    noise: NoiseModel,
    kappa: f64,
}

fn cavity_setup(config: &ScenarioConfig) -> Result<CavitySetup> {
    let model = config.cavity()?.model()?;
    let g = model.effective_couplings();
    let spec = two_qubit_pulse_params(g.0, g.1)?;
    check_vartheta(config, &spec)?;
    for k in [1, 2] {
        let r = model.nv(k).validity_ratio();
        if r < 5.0 {
            warn!("nv{k}: delta/max(G, |Omega|) = {r:.2}; the effective model is unreliable");
        }
    }
    let kappa = config.noise.kappa()?;
    let noise = if config.noise.enabled {
        two_qubit_noise(&config.noise.rates()?, kappa, model.n_max, config.noise.relaxation)?
    } else {
        NoiseModel::none()
    };
    check_method(config, &noise)?;
    Ok(CavitySetup {
        h: two_qubit_static_hamiltonian(&model)?,
        model,
        g,
        spec,
        noise,
        kappa,
    })
}

struct FiberSetup {
    model: FiberModel,
    g: (f64, f64),
    spec: TwoQubitGateSpec,
    h: Operator,
    noise: NoiseModel,
    reduced: Option<(Operator, NoiseModel)>,
    kappa: f64,
    kappa_fiber: f64,
}

fn fiber_setup(config: &ScenarioConfig) -> Result<FiberSetup> {
    let fc = config.fiber()?;
    let model = fc.model()?;
    let g = model.effective_couplings();
    let spec = two_qubit_pulse_params(0.5 * g.0, 0.5 * g.1)?;
    check_vartheta(config, &spec)?;
    let mut h = fiber_static_hamiltonian(&model)?;
    if fc.stark_compensation {
        h = &h + &fiber_stark_compensation(&model)?;
    }
    let rates = config.noise.rates()?;
    let kappa = config.noise.kappa()?;
    let kappa_fiber = config.noise.kappa_fiber()?;
    let conv = config.noise.relaxation;
    let noise = if config.noise.enabled {
        fiber_noise(&rates, kappa, kappa_fiber, &model, conv)?
    } else {
        NoiseModel::none()
    };
    check_method(config, &noise)?;
    let reduced = if fc.compare_reduced {
        let hr = fiber_reduced_hamiltonian(&model)?;
        // c2 = (a1 + e^{-iφ} a2 - √2 b)/2 inherits a quarter of each cavity
        // loss and half of the fiber loss.
        let nr = if config.noise.enabled {
            two_qubit_noise(&rates, 0.5 * (kappa + kappa_fiber), model.n_max, conv)?
        } else {
            NoiseModel::none()
        };
        Some((hr, nr))
    } else {
        None
    };
    Ok(FiberSetup {
        model,
        g,
        spec,
        h,
        noise,
        reduced,
        kappa,
        kappa_fiber,
    })
}

fn scale_nv(nv: &CavityNv, scaling: DeltaScaling, factor: f64) -> CavityNv {
    match scaling {
        DeltaScaling::GAndOmega => CavityNv {
            g_cav: nv.g_cav * factor.sqrt(),
            omega: nv.omega * factor.sqrt(),
            delta: nv.delta * factor,
        },
        DeltaScaling::OmegaOnly => CavityNv {
            g_cav: nv.g_cav,
            omega: nv.omega * factor,
            delta: nv.delta * factor,
        },
    }
}

fn scaling_name(s: DeltaScaling) -> &'static str {
    match s {
        DeltaScaling::GAndOmega => "g_and_omega",
        DeltaScaling::OmegaOnly => "omega_only",
    }
}

struct ScanSetup {
    base: CavityQubitModel,
    doublings: usize,
    scalings: Vec<DeltaScaling>,
    intervals: usize,
    initial: (usize, usize),
    spec: TwoQubitGateSpec,
}

fn scan_setup(config: &ScenarioConfig) -> Result<ScanSetup> {
    let v = config.validation()?;
    let base = config.cavity()?.model()?;
    let doublings = v.doublings.unwrap_or(3);
    if doublings == 0 {
        return Err(Error::param("validation.doublings", "must be >= 1"));
    }
    let scalings = v
        .scalings
        .clone()
        .unwrap_or_else(|| vec![DeltaScaling::GAndOmega, DeltaScaling::OmegaOnly]);
    if scalings.is_empty() {
        return Err(Error::param("validation.scalings", "must list at least one rule"));
    }
    let intervals = v.grid_intervals.unwrap_or(200);
    if intervals == 0 {
        return Err(Error::param("validation.grid_intervals", "must be >= 1"));
    }
    let initial = parse_pair_initial(config.initial.as_deref().unwrap_or("10"))?;
    let (g1, g2) = base.effective_couplings();
    let spec = two_qubit_pulse_params(g1, g2)?;
    Ok(ScanSetup {
        base,
        doublings,
        scalings,
        intervals,
        initial,
        spec,
    })
}

struct SignSetup {
    g: f64,
    cutoffs: Vec<usize>,
    vartheta: f64,
}

fn sign_setup(config: &ScenarioConfig) -> Result<SignSetup> {
    let v = config.validation()?;
    let g = v.g.map(|f| f.get()).unwrap_or(TAU * 100.0);
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::param("validation.g", "must be finite and > 0"));
    }
    let cutoffs = v.cutoffs.clone().unwrap_or_else(|| vec![1, 2]);
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::param("validation.cutoffs", "need at least one cutoff, each >= 1"));
    }
    let vartheta = v.vartheta.map(|a| a.get()).unwrap_or(PI / 4.0);
    if !(vartheta > 0.0 && vartheta < PI) {
        return Err(Error::param("validation.vartheta", "must lie in (0, π)"));
    }
    Ok(SignSetup {
        g,
        cutoffs,
        vartheta,
    })
}

fn bound_of(h: &Operator, noise: &NoiseModel) -> Result<f64> {
    step_bound(h, noise, DEFAULT_SAFETY)
}

/// Build everything a run needs and report the derived parameters.
pub(super) fn prepare(config: &ScenarioConfig) -> Result<BTreeMap<String, f64>> {
    let mut d = BTreeMap::new();
    match config.kind {
        ScenarioKind::SingleQubitGate | ScenarioKind::Sweep => {
            let s = single_setup(config)?;
            if config.kind == ScenarioKind::SingleQubitGate {
                parse_single_initial(config.initial()?)?;
            } else {
                sweep_angles(config.sweep()?.n_samples)
                    .map_err(|e| Error::param("sweep.n_samples", e.to_string()))?;
            }
            d.insert("omega0".into(), s.drive.omega0);
            d.insert("omega1".into(), s.drive.omega1);
            d.insert("Delta".into(), s.drive.delta);
            d.insert("tau_us".into(), s.drive.tau);
            d.insert("theta".into(), s.spec.theta);
            d.insert("gamma".into(), s.spec.gamma);
            d.insert("step_bound_us".into(), bound_of(&s.h, &s.noise)?);
        }
        ScenarioKind::TwoQubitSingleCavity => {
            let s = cavity_setup(config)?;
            parse_pair_initial(config.initial()?)?;
            d.insert("g1".into(), s.g.0);
            d.insert("g2".into(), s.g.1);
            d.insert("vartheta".into(), s.spec.vartheta);
            d.insert("lambda".into(), s.spec.lambda_eff);
            d.insert("tau2_us".into(), s.spec.tau2);
            d.insert("kappa".into(), s.kappa);
            d.insert("step_bound_us".into(), bound_of(&s.h, &s.noise)?);
        }
        ScenarioKind::TwoQubitFiber => {
            let s = fiber_setup(config)?;
            parse_pair_initial(config.initial()?)?;
            d.insert("g1_prime".into(), s.g.0);
            d.insert("g2_prime".into(), s.g.1);
            d.insert("vartheta".into(), s.spec.vartheta);
            d.insert("lambda".into(), s.spec.lambda_eff);
            d.insert("tau2_us".into(), s.spec.tau2);
            d.insert("reduction_ratio".into(), s.model.reduction_ratio());
            d.insert("kappa".into(), s.kappa);
            d.insert("kappa_fiber".into(), s.kappa_fiber);
            d.insert("step_bound_us".into(), bound_of(&s.h, &s.noise)?);
        }
        ScenarioKind::ModelValidation => match config.validation()?.check {
            ValidationCheck::EffectiveVsFullDeltaScan => {
                let s = scan_setup(config)?;
                d.insert("tau2_us".into(), s.spec.tau2);
                d.insert("doublings".into(), s.doublings as f64);
                d.insert("g1".into(), s.base.effective_couplings().0);
                d.insert("g2".into(), s.base.effective_couplings().1);
            }
            ValidationCheck::N11SignCheck => {
                let s = sign_setup(config)?;
                d.insert("g".into(), s.g);
                d.insert("tau2_us".into(), PI / (SQRT_2 * s.g));
                d.insert("vartheta".into(), s.vartheta);
            }
        },
    }
    Ok(d)
}

struct Propagation {
    traj: Trajectory,
    report: IntegratorReport,
}

/// Propagate on the grid of a [`StepPlan`]. Exact runs sample probes a few
/// times per recorded interval so that peaks are not missed.
fn propagate(
    h: &Operator,
    noise: &NoiseModel,
    initial: &QuantumState,
    t_end: f64,
    icfg: &IntegratorConfig,
    refinement: usize,
    probes: &[Probe],
) -> Result<Propagation> {
    h.ensure_hermitian()?;
    let method = icfg.method_for(!noise.is_empty());
    let mut options = icfg.options();
    options.refinement *= refinement;
    let bound = bound_of(h, noise)?;
    let plan = StepPlan::new(t_end, step_bound(h, noise, options.safety)?, &options)?;
    if plan.step > bound {
        return Err(Error::StepTooLarge {
            step: plan.step,
            bound,
        });
    }
    let traj = match method {
        Method::Exact => {
            if !noise.is_empty() {
                return Err(Error::param("integrator.method", "exact propagation cannot include dissipation"));
            }
            exact_on_plan(h, initial, &plan, probes)?
        }
        _ => integrate(h, noise, initial, &plan, false, probes)?,
    };
    let rk4 = method != Method::Exact;
    let report = IntegratorReport {
        method: if rk4 { Method::Rk4 } else { Method::Exact },
        step_us: if rk4 { plan.step } else { 0.0 },
        steps: if rk4 { plan.steps } else { 0 },
        step_bound_us: bound,
        safety: options.safety,
        record_every: plan.record_every,
        recorded_points: traj.time_grid.len(),
    };
    Ok(Propagation { traj, report })
}

fn exact_on_plan(
    h: &Operator,
    initial: &QuantumState,
    plan: &StepPlan,
    probes: &[Probe],
) -> Result<Trajectory> {
    let every = plan.record_every;
    let per_record = (16..=every).find(|k| every.is_multiple_of(*k)).unwrap_or(every);
    let stride = every / per_record;
    let dense: Vec<f64> = (0..=plan.steps / stride)
        .map(|i| (i * stride) as f64 * plan.step)
        .collect();
    let full = evolve_unitary(h, initial, &dense, probes)?;
    let observables = full
        .observables
        .into_iter()
        .map(|o| Observable {
            values: o.values.iter().step_by(per_record).copied().collect(),
            name: o.name,
            peak: o.peak,
        })
        .collect();
    Ok(Trajectory {
        time_grid: plan.record_times(),
        states: Vec::new(),
        final_state: full.final_state,
        observables,
        diagnostics: full.diagnostics,
        step: 0.0,
        steps: 0,
    })
}

fn series(traj: &Trajectory, name: &str) -> Vec<f64> {
    traj.observable(name).map(|v| v.to_vec()).unwrap_or_default()
}

fn peak(traj: &Trajectory, name: &str) -> Option<f64> {
    traj.observables.iter().find(|o| o.name == name).map(|o| o.peak)
}

fn trajectory_table(file_name: String, traj: &Trajectory, columns: &[&str]) -> Table {
    let mut header = vec!["t_us"];
    header.extend_from_slice(columns);
    let mut table = Table::new(file_name, &header);
    let cols: Vec<Vec<f64>> = columns.iter().map(|c| series(traj, c)).collect();
    for (i, t) in traj.time_grid.iter().enumerate() {
        let mut row = vec![*t];
        row.extend(cols.iter().map(|c| c[i]));
        table.push_numbers(&row);
    }
    table
}

fn summary(config: &ScenarioConfig) -> Result<Summary> {
    Ok(Summary {
        scenario: config.name.clone(),
        kind: config.kind,
        final_fidelities: BTreeMap::new(),
        peak_leakage: None,
        integrator: None,
        hygiene: Hygiene {
            trace_drift: 0.0,
            hermiticity_defect: 0.0,
            min_eigenvalue: 0.0,
            step_halving_change: None,
        },
        report: None,
        details: BTreeMap::new(),
        config: config.normalized()?,
        outputs: Vec::new(),
    })
}

pub(super) fn execute(config: &ScenarioConfig, options: &RunOptions) -> Result<(Summary, Vec<Table>)> {
    match config.kind {
        ScenarioKind::SingleQubitGate => run_single(config),
        ScenarioKind::Sweep => run_sweep(config, options),
        ScenarioKind::TwoQubitSingleCavity => run_cavity(config),
        ScenarioKind::TwoQubitFiber => run_fiber(config),
        ScenarioKind::ModelValidation => match config.validation()?.check {
            ValidationCheck::EffectiveVsFullDeltaScan => run_delta_scan(config),
            ValidationCheck::N11SignCheck => run_sign_check(config),
        },
    }
}

const SINGLE_COLUMNS: [&str; 4] = ["pop_0", "pop_1", "pop_e", "fidelity"];

fn run_single(config: &ScenarioConfig) -> Result<(Summary, Vec<Table>)> {
    let s = single_setup(config)?;
    let dims = vec![level::COUNT];
    let psi0 = basis_vector(&dims, parse_single_initial(config.initial()?)?);
    let target = apply_embedded(&s.ideal, &psi0);
    let initial = QuantumState::pure(psi0, dims.clone())?;
    let probes = vec![
        Probe::new("pop_0", basis_projector(&dims, level::G0)?),
        Probe::new("pop_1", basis_projector(&dims, level::G1)?),
        Probe::new("pop_e", basis_projector(&dims, level::E)?),
        Probe::new("fidelity", projector(&target, &dims)?),
    ];
    let tau = s.drive.tau;
    let p = propagate(&s.h, &s.noise, &initial, tau, &config.integrator, 1, &probes)?;
    let fidelity = state_fidelity(&p.traj.final_state, &target)?;

    let mut out = summary(config)?;
    out.final_fidelities.insert("state".into(), fidelity);
    out.hygiene = Hygiene::from_diagnostics(p.traj.diagnostics);
    if config.noise.enabled && config.noise.compare_relaxation {
        let other = other_convention(config.noise.relaxation);
        let noise = single_qubit_noise(&config.noise.rates()?, other)?;
        let q = propagate(&s.h, &noise, &initial, tau, &config.integrator, 1, &[])?;
        let f = state_fidelity(&q.traj.final_state, &target)?;
        out.final_fidelities
            .insert(format!("state_{}_relaxation", convention_name(other)), f);
        out.hygiene.merge(q.traj.diagnostics);
    }
    if config.integrator.check_step_halving && p.report.method == Method::Rk4 {
        let q = propagate(&s.h, &s.noise, &initial, tau, &config.integrator, 2, &[])?;
        let f = state_fidelity(&q.traj.final_state, &target)?;
        out.hygiene.merge(q.traj.diagnostics);
        out.hygiene.step_halving_change = Some((f - fidelity).abs());
    }
    out.peak_leakage = peak(&p.traj, "pop_e");
    out.report = Some(FidelityReport {
        scenario: config.name.clone(),
        final_fidelity: fidelity,
        series: series(&p.traj, "fidelity"),
        samples: Vec::new(),
        mean_fidelity: None,
    });
    out.details.insert("relaxation".into(), json!(convention_name(config.noise.relaxation)));
    out.details.insert("tau_us".into(), json!(tau));
    out.details.insert("omega0".into(), json!(s.drive.omega0));
    out.details.insert("omega1".into(), json!(s.drive.omega1));
    out.details.insert("Delta".into(), json!(s.drive.delta));
    out.integrator = Some(p.report);
    let table = trajectory_table(config.csv_name(), &p.traj, &SINGLE_COLUMNS);
    Ok((out, vec![table]))
}

fn run_sweep(config: &ScenarioConfig, options: &RunOptions) -> Result<(Summary, Vec<Table>)> {
    let s = single_setup(config)?;
    let n = config.sweep()?.n_samples;
    let dims = vec![level::COUNT];
    let pop_e = vec![Probe::new("pop_e", basis_projector(&dims, level::E)?)];
    let tau = s.drive.tau;
    let worst: Mutex<Option<DensityDiagnostics>> = Mutex::new(None);
    let peak_e = Mutex::new(0.0_f64);
    let report = Mutex::new(None);
    let simulate = |initial: &QuantumState| -> Result<QuantumState> {
        let p = propagate(&s.h, &s.noise, initial, tau, &config.integrator, 1, &pop_e)?;
        let d = p.traj.diagnostics;
        let mut w = worst.lock().expect("worker poisoned");
        *w = Some(w.map_or(d, |w| w.worst(d)));
        let mut pk = peak_e.lock().expect("worker poisoned");
        *pk = pk.max(peak(&p.traj, "pop_e").unwrap_or(0.0));
        report.lock().expect("worker poisoned").get_or_insert(p.report);
        Ok(p.traj.final_state)
    };
    info!("sweep {}: {n} samples on {} workers", config.name, options.workers);
    let fr = gate_fidelity_sweep(&config.name, level::COUNT, &s.ideal, n, options.workers, simulate)?;

    let mut out = summary(config)?;
    let worst = worst.into_inner().expect("worker poisoned");
    out.hygiene = Hygiene::from_diagnostics(worst.expect("at least two samples"));
    let integrator: Option<IntegratorReport> = report.into_inner().expect("worker poisoned");
    if config.integrator.check_step_halving
        && integrator.as_ref().map(|r| r.method) == Some(Method::Rk4)
    {
        let mut change = 0.0_f64;
        for i in [0, n / 2, n - 1] {
            let sample = &fr.samples[i];
            let psi = sweep_state(sample.angle, level::COUNT);
            let target = apply_embedded(&s.ideal, &psi);
            let initial = QuantumState::pure(psi, dims.clone())?;
            let q = propagate(&s.h, &s.noise, &initial, tau, &config.integrator, 2, &[])?;
            out.hygiene.merge(q.traj.diagnostics);
            change = change.max((state_fidelity(&q.traj.final_state, &target)? - sample.fidelity).abs());
        }
        out.hygiene.step_halving_change = Some(change);
    }
    out.final_fidelities.insert("mean".into(), fr.mean_fidelity.unwrap_or(fr.final_fidelity));
    out.peak_leakage = Some(peak_e.into_inner().expect("worker poisoned"));
    out.integrator = integrator;
    out.details.insert("n_samples".into(), json!(n));
    out.details.insert("tau_us".into(), json!(tau));
    out.details.insert("relaxation".into(), json!(convention_name(config.noise.relaxation)));
    let mut table = Table::new(config.csv_name(), &["theta_rad", "fidelity"]);
    for sample in &fr.samples {
        table.push_numbers(&[sample.angle, sample.fidelity]);
    }
    out.report = Some(fr);
    Ok((out, vec![table]))
}

/// Lift an operator on the NV pair (`3 ⊗ 3`) into a larger space, acting as
/// the identity on every other subsystem.
fn lift_pair(op: &CMatrix, dims: &[usize], slots: [usize; 2]) -> Result<Operator> {
    let n: usize = dims.iter().product();
    let levels: Vec<Vec<usize>> = (0..n).map(|i| basis_levels(dims, i)).collect();
    let rest = |l: &[usize]| -> Vec<usize> {
        l.iter()
            .enumerate()
            .filter(|(s, _)| !slots.contains(s))
            .map(|(_, &v)| v)
            .collect()
    };
    let rests: Vec<Vec<usize>> = levels.iter().map(|l| rest(l)).collect();
    let pair = |l: &[usize]| level::COUNT * l[slots[0]] + l[slots[1]];
    let mut m = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if rests[r] == rests[c] {
                m[(r, c)] = op[(pair(&levels[r]), pair(&levels[c]))];
            }
        }
    }
    Operator::new(m, dims.to_vec())
}

fn pair_dims() -> Vec<usize> {
    vec![level::COUNT, level::COUNT]
}

/// `U2(ϑ)` applied to `|q1 q2>`, written on the NV pair.
fn pair_target(vartheta: f64, (q1, q2): (usize, usize)) -> CVector {
    let u = u2(vartheta);
    let mut out = CVector::zeros(level::COUNT * level::COUNT);
    for a in 0..2 {
        for b in 0..2 {
            out[level::COUNT * a + b] = u.get(2 * a + b, 2 * q1 + q2);
        }
    }
    out
}

/// The same target with every mode in vacuum.
fn embed_pair_vector(v: &CVector, dims: &[usize], slots: [usize; 2]) -> Result<CVector> {
    let mut out = CVector::zeros(dims.iter().product());
    for a in 0..level::COUNT {
        for b in 0..level::COUNT {
            let mut levels = vec![0; dims.len()];
            levels[slots[0]] = a;
            levels[slots[1]] = b;
            out[basis_index(dims, &levels)?] = v[level::COUNT * a + b];
        }
    }
    Ok(out)
}

const PAIR_COLUMNS: [&str; 8] = [
    "pop_00", "pop_01", "pop_10", "pop_11", "pop_e1", "pop_e2", "photons", "fidelity",
];

fn pair_probes(dims: &[usize], slots: [usize; 2], modes: &[usize], target: &CVector) -> Result<Vec<Probe>> {
    let pd = pair_dims();
    let mut probes = Vec::new();
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let p = basis_projector(&pd, level::COUNT * a + b)?;
        probes.push(Probe::new(format!("pop_{a}{b}"), lift_pair(p.matrix(), dims, slots)?));
    }
    probes.push(Probe::new("pop_e1", level_projector(dims, slots[0], level::E)?));
    probes.push(Probe::new("pop_e2", level_projector(dims, slots[1], level::E)?));
    let mut photons = Operator::zeros(dims);
    for &m in modes {
        let a = annihilation_operator(dims[m] - 1)?;
        photons = &photons + &embed(&(&a.dagger() * &a), m, dims)?;
    }
    probes.push(Probe::new("photons", photons));
    let t = projector(target, &pd)?;
    probes.push(Probe::new("fidelity", lift_pair(t.matrix(), dims, slots)?));
    let comp = computational_projector(dims, &slots)?;
    probes.push(Probe::new("leakage", &Operator::identity(dims) - &comp));
    Ok(probes)
}

struct PairRun {
    propagation: Propagation,
    traced: f64,
    vacuum: f64,
    pair_state: QuantumState,
}

#[allow(clippy::too_many_arguments)]
fn run_pair(
    h: &Operator,
    noise: &NoiseModel,
    dims: &[usize],
    slots: [usize; 2],
    modes: &[usize],
    initial: (usize, usize),
    spec: &TwoQubitGateSpec,
    icfg: &IntegratorConfig,
    refinement: usize,
    with_probes: bool,
) -> Result<PairRun> {
    let mut levels = vec![0; dims.len()];
    levels[slots[0]] = initial.0;
    levels[slots[1]] = initial.1;
    let init = QuantumState::basis(dims, basis_index(dims, &levels)?)?;
    let target = pair_target(spec.vartheta, initial);
    let probes = if with_probes {
        pair_probes(dims, slots, modes, &target)?
    } else {
        Vec::new()
    };
    let propagation = propagate(h, noise, &init, spec.tau2, icfg, refinement, &probes)?;
    let fin = &propagation.traj.final_state;
    let pair_state = fin.partial_trace(&slots)?;
    let traced = state_fidelity(&pair_state, &target)?;
    let vacuum = state_fidelity(fin, &embed_pair_vector(&target, dims, slots)?)?;
    Ok(PairRun {
        propagation,
        traced,
        vacuum,
        pair_state,
    })
}

fn run_cavity(config: &ScenarioConfig) -> Result<(Summary, Vec<Table>)> {
    let s = cavity_setup(config)?;
    let initial = parse_pair_initial(config.initial()?)?;
    let dims = s.model.dims();
    let modes = [CAVITY_SLOT];
    let run = |refinement, probes| {
        run_pair(&s.h, &s.noise, &dims, NV_SLOTS, &modes, initial, &s.spec, &config.integrator, refinement, probes)
    };
    let r = run(1, true)?;
    let mut out = summary(config)?;
    out.final_fidelities.insert("traced".into(), r.traced);
    out.final_fidelities.insert("cavity_vacuum".into(), r.vacuum);
    out.hygiene = Hygiene::from_diagnostics(r.propagation.traj.diagnostics);
    if config.integrator.check_step_halving && r.propagation.report.method == Method::Rk4 {
        let q = run(2, false)?;
        out.hygiene.merge(q.propagation.traj.diagnostics);
        out.hygiene.step_halving_change = Some((q.traced - r.traced).abs().max((q.vacuum - r.vacuum).abs()));
    }
    let traj = &r.propagation.traj;
    out.peak_leakage = peak(traj, "leakage");
    out.report = Some(FidelityReport {
        scenario: config.name.clone(),
        final_fidelity: r.traced,
        series: series(traj, "fidelity"),
        samples: Vec::new(),
        mean_fidelity: None,
    });
    out.details.insert("g1".into(), json!(s.g.0));
    out.details.insert("g2".into(), json!(s.g.1));
    out.details.insert("vartheta".into(), json!(s.spec.vartheta));
    out.details.insert("lambda".into(), json!(s.spec.lambda_eff));
    out.details.insert("tau2_us".into(), json!(s.spec.tau2));
    out.details.insert("kappa".into(), json!(s.kappa));
    out.details.insert("n_max".into(), json!(s.model.n_max));
    out.integrator = Some(r.propagation.report);
    let table = trajectory_table(config.csv_name(), traj, &PAIR_COLUMNS);
    Ok((out, vec![table]))
}

fn reduced_csv_name(config: &ScenarioConfig) -> String {
    let main = config.csv_name();
    match main.strip_suffix(".csv") {
        Some(stem) => format!("{stem}.reduced.csv"),
        None => format!("{main}.reduced"),
    }
}

fn run_fiber(config: &ScenarioConfig) -> Result<(Summary, Vec<Table>)> {
    let s = fiber_setup(config)?;
    let initial = parse_pair_initial(config.initial()?)?;
    let dims = s.model.dims();
    let slots = [fiber_slot::NV1, fiber_slot::NV2];
    let modes = [fiber_slot::A1, fiber_slot::A2, fiber_slot::B];
    let icfg = &config.integrator;
    let full = |refinement, probes| {
        run_pair(&s.h, &s.noise, &dims, slots, &modes, initial, &s.spec, icfg, refinement, probes)
    };
    let r = full(1, true)?;
    let mut out = summary(config)?;
    out.final_fidelities.insert("full_traced".into(), r.traced);
    out.final_fidelities.insert("full_vacuum".into(), r.vacuum);
    out.hygiene = Hygiene::from_diagnostics(r.propagation.traj.diagnostics);
    let mut tables = vec![trajectory_table(config.csv_name(), &r.propagation.traj, &PAIR_COLUMNS)];
    let mut halving = None;
    if icfg.check_step_halving && r.propagation.report.method == Method::Rk4 {
        let q = full(2, false)?;
        out.hygiene.merge(q.propagation.traj.diagnostics);
        halving = Some((q.traced - r.traced).abs());
    }
    if let Some((hr, nr)) = &s.reduced {
        let rdims = hr.dims().to_vec();
        let reduced = |refinement, probes| {
            run_pair(hr, nr, &rdims, NV_SLOTS, &[CAVITY_SLOT], initial, &s.spec, icfg, refinement, probes)
        };
        let rr = reduced(1, true)?;
        out.final_fidelities.insert("reduced_traced".into(), rr.traced);
        out.final_fidelities.insert("reduced_vacuum".into(), rr.vacuum);
        out.hygiene.merge(rr.propagation.traj.diagnostics);
        if halving.is_some() {
            let q = reduced(2, false)?;
            out.hygiene.merge(q.propagation.traj.diagnostics);
            halving = halving.map(|h: f64| h.max((q.traced - rr.traced).abs()));
        }
        let discrepancy = trace_distance(&r.pair_state, &rr.pair_state)?;
        out.details.insert("discrepancy_trace_distance".into(), json!(discrepancy));
        out.details.insert(
            "discrepancy_fidelity_gap".into(),
            json!((r.traced - rr.traced).abs()),
        );
        tables.push(trajectory_table(reduced_csv_name(config), &rr.propagation.traj, &PAIR_COLUMNS));
    }
    out.hygiene.step_halving_change = halving;
    let traj = &r.propagation.traj;
    out.peak_leakage = peak(traj, "leakage");
    out.report = Some(FidelityReport {
        scenario: config.name.clone(),
        final_fidelity: r.traced,
        series: series(traj, "fidelity"),
        samples: Vec::new(),
        mean_fidelity: None,
    });
    out.details.insert("g1_prime".into(), json!(s.g.0));
    out.details.insert("g2_prime".into(), json!(s.g.1));
    out.details.insert("vartheta".into(), json!(s.spec.vartheta));
    out.details.insert("tau2_us".into(), json!(s.spec.tau2));
    out.details.insert("reduction_ratio".into(), json!(s.model.reduction_ratio()));
    out.details.insert("stark_compensation".into(), json!(config.fiber()?.stark_compensation));
    out.details.insert("n_max".into(), json!(s.model.n_max));
    out.integrator = Some(r.propagation.report);
    Ok((out, tables))
}

/// Largest `1 - |<ψ_full(t)|ψ_eff(t)>|²` over the grid.
fn max_trajectory_infidelity(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let (x, y) = (x.as_pure().expect("pure"), y.as_pure().expect("pure"));
            1.0 - x.dotc(y).norm_sqr()
        })
        .fold(0.0, f64::max)
}

fn run_delta_scan(config: &ScenarioConfig) -> Result<(Summary, Vec<Table>)> {
    let s = scan_setup(config)?;
    let dims = s.base.dims();
    let n_max = s.base.n_max;
    let init = QuantumState::basis(&dims, two_qubit_index(n_max, s.initial.0, s.initial.1))?;
    let grid = crate::dynamics::uniform_grid(s.spec.tau2, s.intervals);
    let (g1, g2) = s.base.effective_couplings();
    let effective = evolve_unitary(&two_qubit_effective_hamiltonian(g1, g2, n_max)?, &init, &grid, &[])?;

    let mut out = summary(config)?;
    out.hygiene = Hygiene::from_diagnostics(init.diagnostics());
    let mut table = Table::new(
        config.csv_name(),
        &["scaling", "doubling", "G", "Omega", "delta", "g1", "g2", "max_infidelity", "improvement"],
    );
    let mut per_scaling = serde_json::Map::new();
    for &scaling in &s.scalings {
        let mut infidelities = Vec::new();
        let mut improvements = Vec::new();
        for d in 0..=s.doublings {
            let factor = (1u64 << d) as f64;
            let model = CavityQubitModel {
                nv1: scale_nv(&s.base.nv1, scaling, factor),
                nv2: scale_nv(&s.base.nv2, scaling, factor),
                n_max,
            };
            let (h1, h2) = model.effective_couplings();
            let full = evolve_unitary(&two_qubit_static_hamiltonian(&model)?, &init, &grid, &[])?;
            out.hygiene.merge(full.diagnostics);
            let inf = max_trajectory_infidelity(&full, &effective);
            let improvement = infidelities.last().map(|p: &f64| p / inf);
            if let Some(r) = improvement {
                improvements.push(r);
            }
            infidelities.push(inf);
            let nv = &model.nv1;
            let mut row = vec![scaling_name(scaling).to_string(), d.to_string()];
            row.extend(
                [nv.g_cav, nv.omega, nv.delta, h1, h2, inf]
                    .iter()
                    .map(|v| v.to_string()),
            );
            row.push(improvement.map_or(String::new(), |r| r.to_string()));
            table.rows.push(row);
        }
        per_scaling.insert(
            scaling_name(scaling).into(),
            json!({ "max_infidelity": infidelities, "improvement": improvements }),
        );
    }
    out.details.insert("primary_scaling".into(), json!(scaling_name(s.scalings[0])));
    out.details.insert("scalings".into(), Value::Object(per_scaling));
    out.details.insert("tau2_us".into(), json!(s.spec.tau2));
    out.details.insert("grid_intervals".into(), json!(s.intervals));
    Ok((out, vec![table]))
}

fn qubit_block(u: &Operator, n_max: usize) -> Result<Operator> {
    let idx: Vec<usize> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(a, b)| two_qubit_index(n_max, a, b))
        .collect();
    Operator::new(u.restrict(&idx), vec![2, 2])
}

fn zz() -> Operator {
    let mut m = CMatrix::identity(4, 4);
    m[(1, 1)] = -ONE;
    m[(2, 2)] = -ONE;
    Operator::new(m, vec![2, 2]).expect("4x4")
}

fn run_sign_check(config: &ScenarioConfig) -> Result<(Summary, Vec<Table>)> {
    let s = sign_setup(config)?;
    let mut out = summary(config)?;
    let mut table = Table::new(config.csv_name(), &["n_max", "amp11_re", "amp11_im"]);
    let tau = PI / (SQRT_2 * s.g);
    let mut amplitudes = serde_json::Map::new();
    for &n in &s.cutoffs {
        let u = matrix_exponential_propagator(&two_qubit_effective_hamiltonian(s.g, s.g, n)?, tau)?;
        let i = two_qubit_index(n, 1, 1);
        let amp: C64 = u.get(i, i);
        table.push_numbers(&[n as f64, amp.re, amp.im]);
        amplitudes.insert(n.to_string(), json!([amp.re, amp.im]));
    }
    out.details.insert("amp11_by_cutoff".into(), Value::Object(amplitudes));
    out.details.insert("tau2_us".into(), json!(tau));

    // Asymmetric couplings separate U2(ϑ) from U2(ϑ)·(Z⊗Z).
    let lambda = SQRT_2 * s.g;
    let (g1, g2) = (lambda * (0.5 * s.vartheta).sin(), lambda * (0.5 * s.vartheta).cos());
    let spec = two_qubit_pulse_params(g1, g2)?;
    let u = matrix_exponential_propagator(&two_qubit_effective_hamiltonian(g1, g2, 1)?, spec.tau2)?;
    let block = qubit_block(&u, 1)?;
    let printed = u2(s.vartheta);
    let alt = &printed * &zz();
    let inf_printed = gate_overlap_infidelity(&block, &printed)?;
    let inf_alt = gate_overlap_infidelity(&block, &alt)?;
    let realized = if inf_alt < inf_printed { "u2_times_zz" } else { "u2" };
    out.details.insert("sign_check_vartheta".into(), json!(s.vartheta));
    out.details.insert("infidelity_vs_u2".into(), json!(inf_printed));
    out.details.insert("infidelity_vs_u2_times_zz".into(), json!(inf_alt));
    out.details.insert("realized".into(), json!(realized));
    out.final_fidelities.insert("sign_check_best".into(), 1.0 - inf_printed.min(inf_alt));
    Ok((out, vec![table]))
}
