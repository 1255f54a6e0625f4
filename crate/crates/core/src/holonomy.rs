//! Closed-form holonomic gates and the pulse parameters that realize them.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SingleQubitDrive;
use crate::quantum::{CMatrix, Operator, C64, I};

/// Target of a single-qubit holonomic gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitGateSpec {
    /// Polar angle of the rotation axis `(sin θ, 0, cos θ)`.
    pub theta: f64,
    /// Accumulated pulse area.
    pub gamma: f64,
}

impl SingleQubitGateSpec {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        let spec = Self { theta, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::param("theta", format!("{} not in [0, pi]", self.theta)));
        }
        if !(0.0..TAU).contains(&self.gamma) {
            return Err(Error::param("gamma", format!("{} not in [0, 2pi)", self.gamma)));
        }
        Ok(())
    }
}

/// Parameters of the cavity-mediated two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitGateSpec {
    pub vartheta: f64,
    /// Effective Rabi frequency `sqrt(g1² + g2²)`.
    pub lambda_eff: f64,
    /// Gate time with `lambda_eff * tau2 = π`.
    pub tau2: f64,
}

/// Rate at which the bright state accumulates phase,
/// `(sqrt(Δ² + Ω²) - Δ) / 2`, evaluated without cancellation for `Δ >> Ω`.
pub fn phase_rate(omega: f64, delta: f64) -> f64 {
    let r = delta.hypot(omega);
    if delta > 0.0 {
        0.5 * omega * omega / (r + delta)
    } else {
        0.5 * (r - delta)
    }
}

/// Pulse area of a square pulse, `(sqrt(Δ² + Ω²) - Δ) τ / 2`.
pub fn pulse_area(omega: f64, delta: f64, tau: f64) -> f64 {
    phase_rate(omega, delta) * tau
}

/// Square-pulse duration that accumulates the area `gamma`.
pub fn duration_for_area(omega: f64, delta: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", "must be finite and >= 0"));
    }
    let rate = phase_rate(omega, delta);
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::param("omega", "pulse area does not grow for this drive"));
    }
    Ok(gamma / rate)
}

/// `e^{iγ/2} exp(-i (γ/2) n·σ)` with `n = (sin θ, 0, cos θ)`.
pub fn holonomic_unitary(spec: &SingleQubitGateSpec) -> Result<Operator> {
    spec.validate()?;
    let (sg, cg) = (0.5 * spec.gamma).sin_cos();
    let (st, ct) = spec.theta.sin_cos();
    let global = C64::from_polar(1.0, 0.5 * spec.gamma);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(cg, -sg * ct),
            C64::new(0.0, -sg * st),
            C64::new(0.0, -sg * st),
            C64::new(cg, sg * ct),
        ],
    ) * global;
    Operator::new(m, vec![2])
}

/// `[[cos θ, sin θ], [sin θ, -cos θ]]`, the gate reached at `γ = π`.
pub fn u1(theta: f64) -> Operator {
    let (s, c) = theta.sin_cos();
    Operator::from_real_rows(&[&[c, s], &[s, -c]]).expect("2x2")
}

/// Two-qubit gate on `{|00>, |01>, |10>, |11>}`.
pub fn u2(vartheta: f64) -> Operator {
    let (s, c) = vartheta.sin_cos();
    let m = Operator::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, c, s, 0.0],
        &[0.0, s, -c, 0.0],
        &[0.0, 0.0, 0.0, -1.0],
    ])
    .expect("4x4");
    Operator::new(m.into_matrix(), vec![2, 2]).expect("two qubits")
}

pub fn hadamard() -> Operator {
    u1(PI / 4.0)
}

pub fn not_gate() -> Operator {
    u1(PI / 2.0)
}

pub fn two_qubit_pulse_params(g1: f64, g2: f64) -> Result<TwoQubitGateSpec> {
    let lambda_eff = g1.hypot(g2);
    if !(lambda_eff > 0.0) || !lambda_eff.is_finite() {
        return Err(Error::param("g1", "effective couplings must not both vanish"));
    }
    Ok(TwoQubitGateSpec {
        vartheta: 2.0 * g1.atan2(g2),
        lambda_eff,
        tau2: PI / lambda_eff,
    })
}

/// Drive amplitudes and duration that realize the holonomic gate
/// `(theta, gamma)` at total Rabi frequency `omega` and detuning `delta`.
pub fn synthesize_single_qubit(
    spec: &SingleQubitGateSpec,
    omega: f64,
    delta: f64,
) -> Result<SingleQubitDrive> {
    spec.validate()?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::param("omega", "must be finite and > 0"));
    }
    let (s, c) = (0.5 * spec.theta).sin_cos();
    let tau = duration_for_area(omega, delta, spec.gamma)?;
    let drive = SingleQubitDrive {
        omega0: omega * s,
        omega1: omega * c,
        delta,
        tau,
    };
    drive.validate()?;
    Ok(drive)
}

/// Restrict a three-level operator to `span{|0>, |1>}`.
pub fn project_to_qubit(u: &Operator) -> Result<Operator> {
    if u.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: u.dim(),
        });
    }
    Operator::new(u.restrict(&[0, 1]), vec![2])
}

/// `exp(-i (φ/2) σ_x)`-style helper used by tests: `exp(-i a M)` for a
/// Hermitian involution `M`.
pub fn involution_exponential(m: &Operator, a: f64) -> Operator {
    let id = Operator::identity(m.dims());
    &id.scale_real(a.cos()) + &m.scale(-I * a.sin())
}

/// `e^{i alpha}` times an operator.
pub fn with_phase(op: &Operator, alpha: f64) -> Operator {
    op.scale(C64::from_polar(1.0, alpha))
}
