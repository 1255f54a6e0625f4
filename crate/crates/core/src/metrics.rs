//! Populations, fidelities and gate benchmarks.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{expectation, CVector, Operator, QuantumState, C64};

/// `Tr(ρ P)`.
pub fn population(state: &QuantumState, projector: &Operator) -> Result<f64> {
    Ok(expectation(state, projector)?.re)
}

/// `<ψ|ρ|ψ>` for a pure target.
pub fn state_fidelity(state: &QuantumState, target: &CVector) -> Result<f64> {
    if target.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: target.len(),
        });
    }
    let f = match state.as_pure() {
        Some(psi) => target.dotc(psi).norm_sqr(),
        None => (target.adjoint() * state.density_matrix() * target)[(0, 0)].re,
    };
    Ok(f)
}

/// `1 - |Tr(U_ideal† U)| / d`; zero when the two agree up to a global phase.
pub fn gate_overlap_infidelity(actual: &Operator, ideal: &Operator) -> Result<f64> {
    if actual.dim() != ideal.dim() {
        return Err(Error::DimensionMismatch {
            expected: ideal.dim(),
            got: actual.dim(),
        });
    }
    let overlap = (ideal.matrix().adjoint() * actual.matrix()).trace();
    Ok((1.0 - overlap.norm() / actual.dim() as f64).max(0.0))
}

/// Population outside the computational subspace, `1 - Tr(ρ P_comp)`.
pub fn leakage(state: &QuantumState, computational: &Operator) -> Result<f64> {
    Ok(1.0 - population(state, computational)?)
}

/// `n` equally spaced angles covering `[0, π/2]`, both ends included.
pub fn sweep_angles(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Usage(format!("sweep needs at least 2 samples, got {n}")));
    }
    Ok((0..n)
        .map(|k| FRAC_PI_2 * k as f64 / (n - 1) as f64)
        .collect())
}

/// `cos Θ |0> + sin Θ |1>` on a qubit embedded in the first two levels of a
/// `dim`-level system.
pub fn sweep_state(angle: f64, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[0] = C64::new(angle.cos(), 0.0);
    v[1] = C64::new(angle.sin(), 0.0);
    v
}

/// Apply a gate acting on the leading levels to a vector of a larger space.
pub fn apply_embedded(gate: &Operator, v: &CVector) -> CVector {
    let k = gate.dim();
    let mut out = v.clone();
    let head = gate.matrix() * v.rows(0, k);
    out.rows_mut(0, k).copy_from(&head);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSample {
    pub angle: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub scenario: String,
    pub final_fidelity: f64,
    pub series: Vec<f64>,
    pub samples: Vec<SweepSample>,
    pub mean_fidelity: Option<f64>,
}

impl FidelityReport {
    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }
}

/// Arithmetic mean of the sample fidelities.
pub fn mean_fidelity(samples: &[SweepSample]) -> f64 {
    samples.iter().map(|s| s.fidelity).sum::<f64>() / samples.len() as f64
}

/// Run `simulate` for each initial state `cos Θ|0> + sin Θ|1>` and score the
/// final state against `ideal_gate` applied to the same input.
///
/// Samples are evaluated on `workers` threads and merged by index, so the
/// result does not depend on the worker count.
pub fn gate_fidelity_sweep<F>(
    scenario: &str,
    dim: usize,
    ideal_gate: &Operator,
    n_samples: usize,
    workers: usize,
    simulate: F,
) -> Result<FidelityReport>
where
    F: Fn(&QuantumState) -> Result<QuantumState> + Sync,
{
    let angles = sweep_angles(n_samples)?;
    if ideal_gate.dim() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: ideal_gate.dim(),
        });
    }
    let run_one = |&angle: &f64| -> Result<SweepSample> {
        let psi = sweep_state(angle, dim);
        let initial = QuantumState::pure(psi.clone(), vec![dim])?;
        let target = apply_embedded(ideal_gate, &psi);
        let fin = simulate(&initial)?;
        Ok(SweepSample {
            angle,
            fidelity: state_fidelity(&fin, &target)?,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let samples: Vec<SweepSample> =
        pool.install(|| angles.par_iter().map(run_one).collect::<Result<Vec<_>>>())?;
    let mean = mean_fidelity(&samples);
    Ok(FidelityReport {
        scenario: scenario.to_string(),
        final_fidelity: mean,
        series: samples.iter().map(|s| s.fidelity).collect(),
        samples,
        mean_fidelity: Some(mean),
    })
}

/// Trace distance `½‖ρ − σ‖₁` between two density matrices.
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let diff = a.density_matrix() - b.density_matrix();
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    let eig = crate::quantum::HermitianEigen::of_matrix(&herm);
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}
