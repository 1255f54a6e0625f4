//! Time evolution: exact unitary propagation and fixed-step RK4 integration
//! of the Lindblad master equation.
//!
//! Dissipators use the convention `(γ/2)(2AρA† - A†Aρ - ρA†A)`, which is the
//! standard GKSL term `γ D[A]ρ`. With this convention an amplitude-damping
//! operator depletes its source level as `exp(-γ t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    fiber_slot, level, nv_transition, two_qubit_dims, FiberModel, CAVITY_SLOT, NV_SLOTS,
};
use crate::quantum::{
    annihilation_operator, embed, CMatrix, CVector, DensityDiagnostics, HermitianEigen, Operator,
    QuantumState, StateKind, C64, I, ZERO,
};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default step-size safety factor: `h <= 1 / (50 ω_max)`.
pub const DEFAULT_SAFETY: f64 = 50.0;

/// Which operator plays the role of excited-state relaxation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationConvention {
    /// `S⁻ = |0><e| + |1><e|`: decay out of the excited level.
    #[default]
    Decay,
    /// `S⁻ = |e><0| + |e><1|`, exactly as printed; pumps into `|e>`.
    Literal,
}

/// One `(rate, collapse operator)` pair.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub label: String,
    pub rate: f64,
    pub collapse: Operator,
}

#[derive(Clone, Debug, Default)]
pub struct NoiseModel {
    pub terms: Vec<Dissipator>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, rate: f64, collapse: Operator) -> Result<()> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::param(label.into(), format!("rate {rate} must be >= 0")));
        }
        if let Some(first) = self.terms.first() {
            if first.collapse.dims() != collapse.dims() {
                return Err(Error::DimensionMismatch {
                    expected: first.collapse.dim(),
                    got: collapse.dim(),
                });
            }
        }
        self.terms.push(Dissipator {
            label: label.into(),
            rate,
            collapse,
        });
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.terms.iter().all(|t| t.rate == 0.0)
    }

    fn check_space(&self, dims: &[usize]) -> Result<()> {
        for t in &self.terms {
            if t.collapse.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims.iter().product(),
                    got: t.collapse.dim(),
                });
            }
        }
        Ok(())
    }

    /// `Σ γ ‖A†A‖`, the fastest decay scale of the generator.
    pub fn total_rate(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.rate > 0.0)
            .map(|t| {
                let ata = &t.collapse.dagger() * &t.collapse;
                t.rate * HermitianEigen::of_matrix(ata.matrix()).spectral_radius()
            })
            .sum()
    }
}

/// NV relaxation and dephasing rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NvRates {
    /// Excited-state relaxation through `S⁻`.
    pub gamma_x: f64,
    /// Ground-state relaxation `|0> -> |1>` through `A⁻`.
    pub gamma_y: f64,
    /// Dephasing through `S^z`.
    pub gamma_z: f64,
}

/// The three NV collapse operators `(A⁻, S⁻, S^z)` on one three-level centre.
pub fn nv_collapse_operators(convention: RelaxationConvention) -> [Operator; 3] {
    let a_minus = nv_transition(level::G1, level::G0);
    let s_minus = match convention {
        RelaxationConvention::Decay => {
            &nv_transition(level::G0, level::E) + &nv_transition(level::G1, level::E)
        }
        RelaxationConvention::Literal => {
            &nv_transition(level::E, level::G0) + &nv_transition(level::E, level::G1)
        }
    };
    let s_z = &(&nv_transition(level::E, level::E) - &nv_transition(level::G0, level::G0))
        - &nv_transition(level::G1, level::G1);
    [a_minus, s_minus, s_z]
}

pub fn single_qubit_noise(rates: &NvRates, convention: RelaxationConvention) -> Result<NoiseModel> {
    let [a_minus, s_minus, s_z] = nv_collapse_operators(convention);
    let mut noise = NoiseModel::none();
    noise.push("gamma_y", rates.gamma_y, a_minus)?;
    noise.push("gamma_x", rates.gamma_x, s_minus)?;
    noise.push("gamma_z", rates.gamma_z, s_z)?;
    Ok(noise)
}

/// NV dissipators on both centres plus cavity loss `(κ, a)` on
/// `NV1 ⊗ cavity ⊗ NV2`.
pub fn two_qubit_noise(
    rates: &NvRates,
    kappa: f64,
    n_max: usize,
    convention: RelaxationConvention,
) -> Result<NoiseModel> {
    let dims = two_qubit_dims(n_max);
    let mut noise = NoiseModel::none();
    for (k, &slot) in NV_SLOTS.iter().enumerate() {
        let [a_minus, s_minus, s_z] = nv_collapse_operators(convention);
        noise.push(format!("nv{}.gamma_y", k + 1), rates.gamma_y, embed(&a_minus, slot, &dims)?)?;
        noise.push(format!("nv{}.gamma_x", k + 1), rates.gamma_x, embed(&s_minus, slot, &dims)?)?;
        noise.push(format!("nv{}.gamma_z", k + 1), rates.gamma_z, embed(&s_z, slot, &dims)?)?;
    }
    let a = embed(&annihilation_operator(n_max)?, CAVITY_SLOT, &dims)?;
    noise.push("kappa", kappa, a)?;
    Ok(noise)
}

/// NV dissipators on both centres, loss `kappa` on each cavity mode and
/// `kappa_fiber` on the fiber mode of a [`FiberModel`] space.
pub fn fiber_noise(
    rates: &NvRates,
    kappa: f64,
    kappa_fiber: f64,
    model: &FiberModel,
    convention: RelaxationConvention,
) -> Result<NoiseModel> {
    let dims = model.dims();
    let mut noise = NoiseModel::none();
    for (k, slot) in [(1, fiber_slot::NV1), (2, fiber_slot::NV2)] {
        let [a_minus, s_minus, s_z] = nv_collapse_operators(convention);
        noise.push(format!("nv{k}.gamma_y"), rates.gamma_y, embed(&a_minus, slot, &dims)?)?;
        noise.push(format!("nv{k}.gamma_x"), rates.gamma_x, embed(&s_minus, slot, &dims)?)?;
        noise.push(format!("nv{k}.gamma_z"), rates.gamma_z, embed(&s_z, slot, &dims)?)?;
    }
    let a = annihilation_operator(model.n_max)?;
    noise.push("kappa.a1", kappa, embed(&a, fiber_slot::A1, &dims)?)?;
    noise.push("kappa.a2", kappa, embed(&a, fiber_slot::A2, &dims)?)?;
    noise.push("kappa_fiber", kappa_fiber, embed(&a, fiber_slot::B, &dims)?)?;
    Ok(noise)
}

/// Cavity loss rate `2πc / (λ Q)` in rad/µs for a wavelength in metres.
pub fn cavity_kappa(wavelength: f64, quality: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::param("wavelength", "must be finite and > 0"));
    }
    if !(quality > 0.0) {
        return Err(Error::param("Q", "must be > 0"));
    }
    Ok(std::f64::consts::TAU * SPEED_OF_LIGHT / (wavelength * quality) * 1e-6)
}

/// `-i[H, ρ] + Σ (γ/2)(2AρA† - A†Aρ - ρA†A)`, evaluated densely.
pub fn rhs(rho: &CMatrix, h: &Operator, noise: &NoiseModel) -> Result<CMatrix> {
    if rho.nrows() != h.dim() || !rho.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: rho.nrows(),
        });
    }
    noise.check_space(h.dims())?;
    let hm = h.matrix();
    let mut out = (hm * rho - rho * hm) * (-I);
    for t in &noise.terms {
        let a = t.collapse.matrix();
        let ad = a.adjoint();
        let ata = &ad * a;
        let l = (a * rho * &ad) * C64::new(2.0, 0.0) - &ata * rho - rho * &ata;
        out += l * C64::new(0.5 * t.rate, 0.0);
    }
    Ok(out)
}

/// Sparse triplet form of an operator, used inside the integrator.
#[derive(Clone, Debug)]
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `Re Tr(ρ A)` for a column-major `ρ`.
    fn trace_with(&self, rho: &[C64], n: usize) -> f64 {
        self.entries
            .iter()
            .map(|&(i, k, v)| v * rho[i * n + k])
            .sum::<C64>()
            .re
    }
}

/// The master-equation generator in sparse form:
/// `-i(K ρ - ρ K†) + Σ γ A ρ A†` with `K = H - (i/2) Σ γ A†A`.
#[derive(Clone, Debug)]
struct Generator {
    n: usize,
    k: Sparse,
    jumps: Vec<(f64, Sparse)>,
}

impl Generator {
    fn new(h: &Operator, noise: &NoiseModel) -> Self {
        let mut k = h.matrix().clone();
        let mut jumps = Vec::new();
        for t in noise.terms.iter().filter(|t| t.rate > 0.0) {
            let a = t.collapse.matrix();
            k -= (a.adjoint() * a) * C64::new(0.0, 0.5 * t.rate);
            jumps.push((t.rate, Sparse::from_dense(a)));
        }
        Self {
            n: h.dim(),
            k: Sparse::from_dense(&k),
            jumps,
        }
    }

    /// Column-major `out = L(rho)`; `scratch` must have the same length.
    fn apply(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let n = self.n;
        out.fill(ZERO);
        // -i K ρ
        for &(i, k, v) in &self.k.entries {
            let w = -I * v;
            for j in 0..n {
                out[j * n + i] += w * rho[j * n + k];
            }
        }
        // + i ρ K†: (ρK†)[i,j] = Σ_k ρ[i,k] conj(K[j,k])
        for &(j, k, v) in &self.k.entries {
            let w = I * v.conj();
            let (dst, src) = (j * n, k * n);
            for i in 0..n {
                out[dst + i] += w * rho[src + i];
            }
        }
        for (rate, a) in &self.jumps {
            // scratch = A ρ
            scratch.fill(ZERO);
            for &(i, k, v) in &a.entries {
                for j in 0..n {
                    scratch[j * n + i] += v * rho[j * n + k];
                }
            }
            // out += γ (Aρ) A†
            for &(j, l, v) in &a.entries {
                let w = v.conj() * *rate;
                let (dst, src) = (j * n, l * n);
                for i in 0..n {
                    out[dst + i] += w * scratch[src + i];
                }
            }
        }
    }
}

/// Expectation value recorded along a trajectory: `Re Tr(ρ op)`.
#[derive(Clone, Debug)]
pub struct Probe {
    pub name: String,
    pub op: Operator,
}

impl Probe {
    pub fn new(name: impl Into<String>, op: Operator) -> Self {
        Self {
            name: name.into(),
            op,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observable {
    pub name: String,
    pub values: Vec<f64>,
    /// Largest value seen during the run. RK4 runs evaluate every step, so
    /// this can exceed the maximum of the recorded `values`.
    pub peak: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub time_grid: Vec<f64>,
    /// Recorded states; empty when the caller asked not to keep them.
    pub states: Vec<QuantumState>,
    pub final_state: QuantumState,
    pub observables: Vec<Observable>,
    /// Worst-case health of the recorded density matrices.
    pub diagnostics: DensityDiagnostics,
    /// Integration step in µs (zero for exact propagation).
    pub step: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.values.as_slice())
    }
}

fn probe_values(probes: &[Probe], record: impl Fn(&Operator) -> C64) -> Vec<f64> {
    probes.iter().map(|p| record(&p.op).re).collect()
}

/// Exact propagation `|ψ(t)> = exp(-iHt)|ψ0>` (or `UρU†`) at each grid time.
pub fn evolve_unitary(
    h: &Operator,
    initial: &QuantumState,
    grid: &[f64],
    probes: &[Probe],
) -> Result<Trajectory> {
    if initial.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: initial.dim(),
        });
    }
    check_grid(grid)?;
    let eig = HermitianEigen::new(h)?;
    let dims = h.dims().to_vec();
    let mut states = Vec::with_capacity(grid.len());
    let mut series = vec![Vec::with_capacity(grid.len()); probes.len()];
    let mut worst = initial.diagnostics();
    match initial.kind() {
        StateKind::Pure => {
            let psi0 = initial.as_pure().expect("pure");
            let coeffs = eig.vectors.adjoint() * psi0;
            for &t in grid {
                let rotated = CVector::from_iterator(
                    coeffs.len(),
                    coeffs
                        .iter()
                        .zip(&eig.values)
                        .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
                );
                let psi = &eig.vectors * rotated;
                let state = QuantumState::pure(psi, dims.clone())?;
                for (s, v) in series.iter_mut().zip(probe_values(probes, |op| {
                    crate::quantum::expectation(&state, op).expect("dims checked")
                })) {
                    s.push(v);
                }
                states.push(state);
            }
        }
        StateKind::Density => {
            let rho0 = initial.density_matrix();
            for &t in grid {
                let u = eig.propagator(t);
                let rho = &u * &rho0 * u.adjoint();
                let state = QuantumState::density_unchecked(rho, dims.clone());
                worst = worst.worst(state.diagnostics());
                for (s, v) in series.iter_mut().zip(probe_values(probes, |op| {
                    crate::quantum::expectation(&state, op).expect("dims checked")
                })) {
                    s.push(v);
                }
                states.push(state);
            }
        }
    }
    let final_state = states.last().cloned().unwrap_or_else(|| initial.clone());
    Ok(Trajectory {
        time_grid: grid.to_vec(),
        states,
        final_state,
        observables: probes
            .iter()
            .zip(series)
            .map(|(p, values)| Observable {
                name: p.name.clone(),
                peak: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                values,
            })
            .collect(),
        diagnostics: worst,
        step: 0.0,
        steps: 0,
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Usage("empty time grid".into()));
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Usage("time grid must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("time grid must increase strictly".into()));
    }
    Ok(())
}

/// `n_intervals + 1` equally spaced times on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, n_intervals: usize) -> Vec<f64> {
    (0..=n_intervals)
        .map(|k| t_end * k as f64 / n_intervals as f64)
        .collect()
}

/// Fixed-step RK4 settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    /// Steps are bounded by `1 / (safety · ω_max)`.
    pub safety: f64,
    /// Integration steps between recorded points.
    pub record_every: usize,
    /// Multiplies the step count (and `record_every`); 2 halves the step
    /// while keeping the recorded grid.
    pub refinement: usize,
    /// Keep every recorded density matrix in the trajectory.
    pub keep_states: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            safety: DEFAULT_SAFETY,
            record_every: 500,
            refinement: 1,
            keep_states: false,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety >= DEFAULT_SAFETY) || !self.safety.is_finite() {
            return Err(Error::param(
                "integrator.safety",
                format!("must be >= {DEFAULT_SAFETY} for a stable step"),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::param("integrator.record_every", "must be >= 1"));
        }
        if self.refinement == 0 {
            return Err(Error::param("integrator.refinement", "must be >= 1"));
        }
        Ok(())
    }
}

/// The frequency scale that bounds the RK4 step: spectral radius of `H`
/// plus the total dissipation rate.
pub fn frequency_scale(h: &Operator, noise: &NoiseModel) -> Result<f64> {
    Ok(HermitianEigen::new(h)?.spectral_radius() + noise.total_rate())
}

/// Largest admissible step for `H` and `noise`.
pub fn step_bound(h: &Operator, noise: &NoiseModel, safety: f64) -> Result<f64> {
    let omega = frequency_scale(h, noise)?;
    Ok(if omega > 0.0 {
        1.0 / (safety * omega)
    } else {
        f64::INFINITY
    })
}

/// Integration plan: number of steps and recorded times for a duration.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPlan {
    pub step: f64,
    pub steps: usize,
    pub record_every: usize,
}

impl StepPlan {
    pub fn new(t_end: f64, bound: f64, options: &IntegratorOptions) -> Result<Self> {
        options.validate()?;
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::param("duration", "must be finite and > 0"));
        }
        let every = options.record_every;
        let base = if bound.is_finite() {
            (t_end / bound).ceil() as usize
        } else {
            1
        };
        let base = base.max(1).div_ceil(every) * every;
        let steps = base * options.refinement;
        Ok(Self {
            step: t_end / steps as f64,
            steps,
            record_every: every * options.refinement,
        })
    }

    pub fn with_step(t_end: f64, step: f64, bound: f64, options: &IntegratorOptions) -> Result<Self> {
        if step > bound {
            return Err(Error::StepTooLarge { step, bound });
        }
        let steps = (t_end / step).round() as usize;
        if steps == 0 || ((steps as f64) * step - t_end).abs() > 1e-9 * t_end {
            return Err(Error::Usage(format!(
                "step {step} does not divide the duration {t_end}"
            )));
        }
        if !steps.is_multiple_of(options.record_every) {
            return Err(Error::Usage("record_every must divide the step count".into()));
        }
        Ok(Self {
            step,
            steps,
            record_every: options.record_every,
        })
    }

    pub fn record_times(&self) -> Vec<f64> {
        (0..=self.steps / self.record_every)
            .map(|k| (k * self.record_every) as f64 * self.step)
            .collect()
    }
}

/// Per-step trace and hermiticity tolerances for aborting a run; a bit looser
/// than the acceptance thresholds so that the recorded diagnostics, not the
/// abort, report marginal cases.
const ABORT_TRACE: f64 = 1e-6;
const ABORT_HERMITIAN: f64 = 1e-8;
const ABORT_EIGENVALUE: f64 = -1e-6;

/// Integrate the master equation with fixed-step RK4 from `t = 0` to
/// `t_end`, recording probes on the plan's grid.
pub fn evolve_master(
    h: &Operator,
    noise: &NoiseModel,
    initial: &QuantumState,
    t_end: f64,
    options: &IntegratorOptions,
    probes: &[Probe],
) -> Result<Trajectory> {
    h.ensure_hermitian()?;
    noise.check_space(h.dims())?;
    if initial.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: initial.dim(),
        });
    }
    let bound = step_bound(h, noise, DEFAULT_SAFETY)?;
    let plan = StepPlan::new(t_end, step_bound(h, noise, options.safety)?, options)?;
    if plan.step > bound {
        return Err(Error::StepTooLarge {
            step: plan.step,
            bound,
        });
    }
    integrate(h, noise, initial, &plan, options.keep_states, probes)
}

/// Run a prepared plan. Exposed so that callers can reuse one plan for
/// several initial states.
pub fn integrate(
    h: &Operator,
    noise: &NoiseModel,
    initial: &QuantumState,
    plan: &StepPlan,
    keep_states: bool,
    probes: &[Probe],
) -> Result<Trajectory> {
    let dims = h.dims().to_vec();
    let n = h.dim();
    let generator = Generator::new(h, noise);
    let rho0 = initial.density_matrix();
    if let Some(v) = DensityDiagnostics::of(&rho0).violation() {
        return Err(Error::param("initial_state", v));
    }
    let mut rho: Vec<C64> = rho0.as_slice().to_vec();
    let len = n * n;
    let mut k1 = vec![ZERO; len];
    let mut k2 = vec![ZERO; len];
    let mut k3 = vec![ZERO; len];
    let mut k4 = vec![ZERO; len];
    let mut tmp = vec![ZERO; len];
    let mut scratch = vec![ZERO; len];
    let h_step = plan.step;
    let half = C64::new(0.5 * h_step, 0.0);
    let full = C64::new(h_step, 0.0);
    let sixth = C64::new(h_step / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let record_times = plan.record_times();
    let mut states = Vec::new();
    let mut series = vec![Vec::with_capacity(record_times.len()); probes.len()];
    let mut worst = DensityDiagnostics::of(&rho0);

    let mut record = |rho: &[C64], worst: &mut DensityDiagnostics, t: f64| -> Result<QuantumState> {
        let m = CMatrix::from_column_slice(n, n, rho);
        let d = DensityDiagnostics::of(&m);
        *worst = worst.worst(d);
        if d.min_eigenvalue < ABORT_EIGENVALUE {
            return Err(Error::InvariantBreach {
                time: t,
                detail: format!("negative eigenvalue {:.3e}", d.min_eigenvalue),
            });
        }
        for (s, p) in series.iter_mut().zip(probes) {
            s.push(crate::quantum::trace_product(&m, p.op.matrix()).re);
        }
        Ok(QuantumState::density_unchecked(m, dims.clone()))
    };

    let probe_ops: Vec<Sparse> = probes.iter().map(|p| Sparse::from_dense(p.op.matrix())).collect();
    let mut peaks: Vec<f64> = probe_ops.iter().map(|a| a.trace_with(&rho, n)).collect();
    let first = record(&rho, &mut worst, 0.0)?;
    if keep_states {
        states.push(first);
    }
    for step in 1..=plan.steps {
        generator.apply(&rho, &mut k1, &mut scratch);
        for i in 0..len {
            tmp[i] = rho[i] + half * k1[i];
        }
        generator.apply(&tmp, &mut k2, &mut scratch);
        for i in 0..len {
            tmp[i] = rho[i] + half * k2[i];
        }
        generator.apply(&tmp, &mut k3, &mut scratch);
        for i in 0..len {
            tmp[i] = rho[i] + full * k3[i];
        }
        generator.apply(&tmp, &mut k4, &mut scratch);
        for i in 0..len {
            rho[i] += sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
        }

        let t = step as f64 * h_step;
        let trace: C64 = (0..n).map(|i| rho[i * n + i]).sum();
        let drift = (trace - C64::new(1.0, 0.0)).norm();
        if !drift.is_finite() || drift > ABORT_TRACE {
            return Err(Error::InvariantBreach {
                time: t,
                detail: format!("trace drift {drift:.3e}"),
            });
        }
        for (peak, a) in peaks.iter_mut().zip(&probe_ops) {
            *peak = peak.max(a.trace_with(&rho, n));
        }
        if step % plan.record_every == 0 {
            let herm = hermiticity_defect_slice(&rho, n);
            if herm > ABORT_HERMITIAN {
                return Err(Error::InvariantBreach {
                    time: t,
                    detail: format!("hermiticity defect {herm:.3e}"),
                });
            }
            let state = record(&rho, &mut worst, t)?;
            if keep_states {
                states.push(state);
            }
        }
    }
    let final_state =
        QuantumState::density_unchecked(CMatrix::from_column_slice(n, n, &rho), dims.clone());
    Ok(Trajectory {
        time_grid: record_times,
        states,
        final_state,
        observables: probes
            .iter()
            .zip(series)
            .zip(peaks)
            .map(|((p, values), peak)| Observable {
                name: p.name.clone(),
                values,
                peak,
            })
            .collect(),
        diagnostics: worst,
        step: plan.step,
        steps: plan.steps,
    })
}

fn hermiticity_defect_slice(rho: &[C64], n: usize) -> f64 {
    let mut defect = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            defect = defect.max((rho[j * n + i] - rho[i * n + j].conj()).norm());
        }
    }
    defect
}
