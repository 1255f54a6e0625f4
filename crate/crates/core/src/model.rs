//! Hamiltonians of the driven NV Λ-system and of the cavity-coupled
//! two-qubit setups.
//!
//! Units: angular frequencies in rad/µs, times in µs, ħ = 1. Each NV centre
//! is a three-level system with basis order `{|0>, |1>, |e>}`. Interaction
//! pictures with explicit `exp(i δ t)` factors are replaced by the
//! equivalent static rotating frame, where the detunings appear on the
//! diagonal.

use std::f64::consts::SQRT_2;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    annihilation_operator, basis_projector, embed, tensor, CMatrix, CVector, Operator, C64, ONE,
};

/// Level indices of a single NV centre.
pub mod level {
    pub const G0: usize = 0;
    pub const G1: usize = 1;
    pub const E: usize = 2;
    pub const COUNT: usize = 3;
}

/// `|to><from|` on one NV centre.
pub fn nv_transition(to: usize, from: usize) -> Operator {
    let mut m = CMatrix::zeros(level::COUNT, level::COUNT);
    m[(to, from)] = ONE;
    Operator::new(m, vec![level::COUNT]).expect("3x3 operator")
}

/// Square-pulse drive of a single Λ-system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitDrive {
    pub omega0: f64,
    pub omega1: f64,
    pub delta: f64,
    pub tau: f64,
}

impl SingleQubitDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 >= 0.0) || !self.omega0.is_finite() {
            return Err(Error::param("omega0", "must be finite and >= 0"));
        }
        if !(self.omega1 >= 0.0) || !self.omega1.is_finite() {
            return Err(Error::param("omega1", "must be finite and >= 0"));
        }
        if self.omega0 == 0.0 && self.omega1 == 0.0 {
            return Err(Error::param("omega0", "omega0 and omega1 cannot both be zero"));
        }
        if !self.delta.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::param("tau", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Total Rabi frequency `sqrt(omega0² + omega1²)`.
    pub fn omega(&self) -> f64 {
        self.omega0.hypot(self.omega1)
    }
}

/// Λ-system Hamiltonian in the basis `{|0>, |1>, |e>}`.
///
/// Only the amplitudes and detuning enter, so an all-zero drive is accepted
/// here (the duration is irrelevant).
pub fn single_qubit_hamiltonian(drive: &SingleQubitDrive) -> Operator {
    let (o0, o1, d) = (drive.omega0, drive.omega1, drive.delta);
    Operator::from_real_rows(&[
        &[0.0, 0.0, 0.5 * o0],
        &[0.0, 0.0, -0.5 * o1],
        &[0.5 * o0, -0.5 * o1, d],
    ])
    .expect("3x3")
}

/// Dark, bright and dressed eigenstates of the Λ-system.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedBasis {
    /// Mixing angle with `tan(theta/2) = omega0 / omega1`.
    pub theta: f64,
    /// Bright/excited mixing angle with `tan(2 phi) = omega / delta`.
    pub phi: f64,
    pub omega: f64,
    pub delta: f64,
    pub d: CVector,
    pub b: CVector,
    pub plus: CVector,
    pub minus: CVector,
}

impl DressedBasis {
    /// `(delta ± sqrt(delta² + omega²)) / 2`, eigenvalues of `|+>` and `|->`.
    pub fn energies(&self) -> (f64, f64) {
        let r = self.delta.hypot(self.omega);
        (0.5 * (self.delta + r), 0.5 * (self.delta - r))
    }

    /// Unitary whose columns are `|b>, |e>, |d>` in the bare basis.
    pub fn frame_unitary(&self) -> CMatrix {
        let mut v = CMatrix::zeros(3, 3);
        v.set_column(0, &self.b);
        v[(level::E, 1)] = ONE;
        v.set_column(2, &self.d);
        v
    }
}

fn real3(a: f64, b: f64, c: f64) -> CVector {
    CVector::from_vec(vec![C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0)])
}

pub fn dressed_decomposition(drive: &SingleQubitDrive) -> Result<DressedBasis> {
    let omega = drive.omega();
    if !(omega > 0.0) {
        return Err(Error::param(
            "omega0",
            "mixing angle undefined for zero total Rabi frequency",
        ));
    }
    let theta = 2.0 * drive.omega0.atan2(drive.omega1);
    let phi = 0.5 * omega.atan2(drive.delta);
    let (s, c) = (0.5 * theta).sin_cos();
    let (sp, cp) = phi.sin_cos();
    let d = real3(c, s, 0.0);
    let b = real3(s, -c, 0.0);
    let e = real3(0.0, 0.0, 1.0);
    let plus = &b * C64::new(sp, 0.0) + &e * C64::new(cp, 0.0);
    let minus = &b * C64::new(cp, 0.0) - &e * C64::new(sp, 0.0);
    Ok(DressedBasis {
        theta,
        phi,
        omega,
        delta: drive.delta,
        d,
        b,
        plus,
        minus,
    })
}

/// `(Ω/2)(|b><e| + |e><b|) + Δ|e><e|` in the basis `{|b>, |e>, |d>}`.
pub fn dressed_frame_hamiltonian(drive: &SingleQubitDrive) -> Operator {
    let half = 0.5 * drive.omega();
    Operator::from_real_rows(&[
        &[0.0, half, 0.0],
        &[half, drive.delta, 0.0],
        &[0.0, 0.0, 0.0],
    ])
    .expect("3x3")
}

/// Coupling record of one NV centre in a cavity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityNv {
    /// Vacuum coupling to the cavity mode on `|0> <-> |e>`.
    #[serde(rename = "G")]
    pub g_cav: f64,
    /// Laser Rabi frequency on `|1> <-> |e>`; the sign carries the laser
    /// phase.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// Raman detuning of the excited level.
    pub delta: f64,
}

impl CavityNv {
    fn validate(&self, k: usize) -> Result<()> {
        let field = |name: &str| format!("nv{k}.{name}");
        if !(self.g_cav >= 0.0) || !self.g_cav.is_finite() {
            return Err(Error::param(field("G"), "must be finite and >= 0"));
        }
        if !self.omega.is_finite() {
            return Err(Error::param(field("Omega"), "must be finite"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::param(field("delta"), "must be finite and > 0"));
        }
        Ok(())
    }

    /// `delta / max(G, Omega)`; large values justify adiabatic elimination.
    pub fn validity_ratio(&self) -> f64 {
        self.delta / self.g_cav.max(self.omega.abs())
    }
}

/// Two NV centres sharing one cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityQubitModel {
    pub nv1: CavityNv,
    pub nv2: CavityNv,
    pub n_max: usize,
}

/// Drive phase sign `(-1)^k` for NV `k` in `{1, 2}`.
pub fn drive_sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl CavityQubitModel {
    pub fn validate(&self) -> Result<()> {
        self.nv1.validate(1)?;
        self.nv2.validate(2)?;
        if self.n_max < 1 {
            return Err(Error::param("n_max", "Fock cutoff must be >= 1"));
        }
        Ok(())
    }

    pub fn nv(&self, k: usize) -> &CavityNv {
        if k == 1 {
            &self.nv1
        } else {
            &self.nv2
        }
    }

    /// Subsystem dimensions `[NV1, cavity, NV2]`.
    pub fn dims(&self) -> Vec<usize> {
        two_qubit_dims(self.n_max)
    }

    pub fn effective_couplings(&self) -> (f64, f64) {
        (
            effective_coupling(self.nv1.g_cav, self.nv1.omega, self.nv1.delta, 1),
            effective_coupling(self.nv2.g_cav, self.nv2.omega, self.nv2.delta, 2),
        )
    }
}

/// Space `NV1 ⊗ cavity ⊗ NV2`.
pub fn two_qubit_dims(n_max: usize) -> Vec<usize> {
    vec![level::COUNT, n_max + 1, level::COUNT]
}

/// NV positions inside the single-cavity space.
pub const NV_SLOTS: [usize; 2] = [0, 2];
pub const CAVITY_SLOT: usize = 1;

fn mode_op(op: &Operator, position: usize, dims: &[usize]) -> Operator {
    embed(op, position, dims).expect("valid subsystem")
}

/// Static-frame Hamiltonian of two driven NV centres coupled to one cavity.
pub fn two_qubit_static_hamiltonian(model: &CavityQubitModel) -> Result<Operator> {
    model.validate()?;
    let dims = model.dims();
    let a = mode_op(&annihilation_operator(model.n_max)?, CAVITY_SLOT, &dims);
    let mut h = Operator::zeros(&dims);
    for (k, slot) in [(1usize, NV_SLOTS[0]), (2, NV_SLOTS[1])] {
        let nv = model.nv(k);
        let ee = mode_op(&nv_transition(level::E, level::E), slot, &dims);
        let e0 = mode_op(&nv_transition(level::E, level::G0), slot, &dims);
        let e1 = mode_op(&nv_transition(level::E, level::G1), slot, &dims);
        let cavity_term = (&a * &e0).scale_real(nv.g_cav);
        let drive_term = e1.scale_real(drive_sign(k) * nv.omega);
        let coupling = &cavity_term + &drive_term;
        h = &h + &ee.scale_real(nv.delta);
        h = &h + &coupling;
        h = &h + &coupling.dagger();
    }
    Ok(h)
}

/// `a†a + Σ_k (|e><e|_k + |1><1|_k)` for the single-cavity space.
pub fn excitation_number(n_max: usize) -> Result<Operator> {
    let dims = two_qubit_dims(n_max);
    let a = mode_op(&annihilation_operator(n_max)?, CAVITY_SLOT, &dims);
    let mut n = &a.dagger() * &a;
    for &slot in &NV_SLOTS {
        n = &n + &mode_op(&nv_transition(level::E, level::E), slot, &dims);
        n = &n + &mode_op(&nv_transition(level::G1, level::G1), slot, &dims);
    }
    Ok(n)
}

/// Cavity-mediated Raman coupling `(-1)^(k+1) G Ω / δ_k`.
pub fn effective_coupling(g_cav: f64, omega: f64, delta_k: f64, k: usize) -> f64 {
    -drive_sign(k) * g_cav * omega / delta_k
}

/// `Σ_k g_k (a σ_k⁺ + h.c.)` with `σ⁺ = |1><0|`, on `NV1 ⊗ cavity ⊗ NV2`.
///
/// The excited levels are kept (uncoupled) so that states of the effective
/// and static models live on the same space.
pub fn two_qubit_effective_hamiltonian(g1: f64, g2: f64, n_max: usize) -> Result<Operator> {
    let dims = two_qubit_dims(n_max);
    let a = mode_op(&annihilation_operator(n_max)?, CAVITY_SLOT, &dims);
    raman_chain(&a, &[(g1, NV_SLOTS[0]), (g2, NV_SLOTS[1])], &dims)
}

fn raman_chain(mode: &Operator, couplings: &[(f64, usize)], dims: &[usize]) -> Result<Operator> {
    let mut h = Operator::zeros(dims);
    for &(g, slot) in couplings {
        if !g.is_finite() {
            return Err(Error::param("g", "effective coupling must be finite"));
        }
        let sigma_plus = mode_op(&nv_transition(level::G1, level::G0), slot, dims);
        let term = (mode * &sigma_plus).scale_real(g);
        h = &h + &term;
        h = &h + &term.dagger();
    }
    Ok(h)
}

/// Two cavities, each holding one NV centre, joined by a single fiber mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberModel {
    pub nv1: CavityNv,
    pub nv2: CavityNv,
    /// Cavity-fiber coupling.
    #[serde(rename = "J")]
    pub j: f64,
    /// Fiber phase.
    pub varphi: f64,
    /// Two-photon offset of the laser relative to the cavity resonance.
    pub delta: f64,
    pub n_max: usize,
}

/// Subsystem positions in the fiber space `NV1 ⊗ a1 ⊗ a2 ⊗ NV2 ⊗ b`.
pub mod fiber_slot {
    pub const NV1: usize = 0;
    pub const A1: usize = 1;
    pub const A2: usize = 2;
    pub const NV2: usize = 3;
    pub const B: usize = 4;
}

/// Smallest accepted `δ / (|g'_k| / 2)` for the reduced fiber model.
pub const FIBER_RATIO_MIN: f64 = 5.0;
/// Below this ratio the reduced model is accepted with a warning.
pub const FIBER_RATIO_WARN: f64 = 10.0;

impl FiberModel {
    pub fn validate(&self) -> Result<()> {
        self.nv1.validate(1)?;
        self.nv2.validate(2)?;
        if self.n_max < 1 {
            return Err(Error::param("n_max", "Fock cutoff must be >= 1"));
        }
        if !(self.j >= 0.0) || !self.j.is_finite() {
            return Err(Error::param("J", "must be finite and >= 0"));
        }
        if !self.varphi.is_finite() {
            return Err(Error::param("varphi", "must be finite"));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::param("delta", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn nv(&self, k: usize) -> &CavityNv {
        if k == 1 {
            &self.nv1
        } else {
            &self.nv2
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        let m = self.n_max + 1;
        vec![level::COUNT, m, m, level::COUNT, m]
    }

    pub fn effective_couplings(&self) -> (f64, f64) {
        (
            fiber_effective_coupling(self.nv1.g_cav, self.nv1.omega, self.nv1.delta, self.delta, 1),
            fiber_effective_coupling(self.nv2.g_cav, self.nv2.omega, self.nv2.delta, self.delta, 2),
        )
    }

    /// `δ / (|g'_k| / 2)` for the weaker of the two separations.
    pub fn reduction_ratio(&self) -> f64 {
        let (g1, g2) = self.effective_couplings();
        let g = 0.5 * g1.abs().max(g2.abs());
        if g == 0.0 {
            f64::INFINITY
        } else {
            self.delta / g
        }
    }

    fn modes(&self) -> Result<(Operator, Operator, Operator)> {
        let dims = self.dims();
        let a = annihilation_operator(self.n_max)?;
        Ok((
            mode_op(&a, fiber_slot::A1, &dims),
            mode_op(&a, fiber_slot::A2, &dims),
            mode_op(&a, fiber_slot::B, &dims),
        ))
    }
}

/// `J b (a1† + e^{iφ} a2†) + h.c.`
pub fn fiber_coupler_hamiltonian(model: &FiberModel) -> Result<Operator> {
    model.validate()?;
    let (a1, a2, b) = model.modes()?;
    let phase = C64::from_polar(1.0, model.varphi);
    let term = (&(&a1.dagger() + &a2.dagger().scale(phase)) * &b).scale_real(model.j);
    Ok(&term + &term.dagger())
}

/// Static-frame Hamiltonian of the fiber-linked two-cavity system, including
/// the coupler.
///
/// The NV2 drive carries the phase `e^{iφ}` that cancels the fiber phase in
/// the reduced coupling to the `c2` normal mode.
pub fn fiber_static_hamiltonian(model: &FiberModel) -> Result<Operator> {
    model.validate()?;
    let dims = model.dims();
    let (a1, a2, _) = model.modes()?;
    let mut h = fiber_coupler_hamiltonian(model)?;
    for (k, slot, mode) in [(1usize, fiber_slot::NV1, &a1), (2, fiber_slot::NV2, &a2)] {
        let nv = model.nv(k);
        let ee = mode_op(&nv_transition(level::E, level::E), slot, &dims);
        let g1g1 = mode_op(&nv_transition(level::G1, level::G1), slot, &dims);
        let e0 = mode_op(&nv_transition(level::E, level::G0), slot, &dims);
        let e1 = mode_op(&nv_transition(level::E, level::G1), slot, &dims);
        let compensation = if k == 2 { model.varphi } else { 0.0 };
        let drive = C64::from_polar(drive_sign(k) * nv.omega, compensation);
        let coupling = &(mode * &e0).scale_real(nv.g_cav) + &e1.scale(drive);
        h = &h + &ee.scale_real(nv.delta);
        h = &h + &g1g1.scale_real(-model.delta);
        h = &h + &coupling;
        h = &h + &coupling.dagger();
    }
    Ok(h)
}

/// Drive retuning that equalizes the second-order light shifts of `|1>_k`
/// and of one photon in the `c2` mode:
/// `Σ_k (Ω_k²/(δ_k+δ) - Σ_j G_j²/(4(δ_j+δ))) |1><1|_k`.
///
/// Added to [`fiber_static_hamiltonian`] it moves each laser frequency; it
/// is not part of the reduced model.
pub fn fiber_stark_compensation(model: &FiberModel) -> Result<Operator> {
    model.validate()?;
    let dims = model.dims();
    let photon_shift: f64 = [&model.nv1, &model.nv2]
        .iter()
        .map(|nv| nv.g_cav * nv.g_cav / (4.0 * (nv.delta + model.delta)))
        .sum();
    let mut h = Operator::zeros(&dims);
    for (k, slot) in [(1usize, fiber_slot::NV1), (2, fiber_slot::NV2)] {
        let nv = model.nv(k);
        let shift = nv.omega * nv.omega / (nv.delta + model.delta) - photon_shift;
        let p = mode_op(&nv_transition(level::G1, level::G1), slot, &dims);
        h = &h + &p.scale_real(shift);
    }
    Ok(h)
}

/// Excitation number of the fiber space.
pub fn fiber_excitation_number(model: &FiberModel) -> Result<Operator> {
    let dims = model.dims();
    let (a1, a2, b) = model.modes()?;
    let mut n = &(&(&a1.dagger() * &a1) + &(&a2.dagger() * &a2)) + &(&b.dagger() * &b);
    for slot in [fiber_slot::NV1, fiber_slot::NV2] {
        n = &n + &mode_op(&nv_transition(level::E, level::E), slot, &dims);
        n = &n + &mode_op(&nv_transition(level::G1, level::G1), slot, &dims);
    }
    Ok(n)
}

/// Raman coupling through a cavity and detuned laser,
/// `(-1)^(k+1) G Ω (1/(δ_k + δ) + 1/δ_k) / 2`.
pub fn fiber_effective_coupling(g_cav: f64, omega: f64, delta_k: f64, delta: f64, k: usize) -> f64 {
    -drive_sign(k) * g_cav * omega * (1.0 / (delta_k + delta) + 1.0 / delta_k) / 2.0
}

/// Bosonic normal modes of the coupler, as operators on the fiber space.
#[derive(Clone, Debug)]
pub struct NormalModes {
    /// `(a1 - e^{-iφ} a2)/√2`, decoupled from the fiber.
    pub c: Operator,
    /// `(a1 + e^{-iφ} a2 + √2 b)/2`, at frequency `+√2 J`.
    pub c1: Operator,
    /// `(a1 + e^{-iφ} a2 - √2 b)/2`, at frequency `-√2 J`.
    pub c2: Operator,
}

pub fn normal_mode_transform(model: &FiberModel) -> Result<NormalModes> {
    model.validate()?;
    let (a1, a2, b) = model.modes()?;
    let rotated = a2.scale(C64::from_polar(1.0, -model.varphi));
    let sym = &a1 + &rotated;
    let b_part = b.scale_real(SQRT_2);
    Ok(NormalModes {
        c: (&a1 - &rotated).scale_real(1.0 / SQRT_2),
        c1: (&sym + &b_part).scale_real(0.5),
        c2: (&sym - &b_part).scale_real(0.5),
    })
}

/// `Σ_k (g'_k/2)(c2 σ_k⁺ + h.c.)` on `NV1 ⊗ c2 ⊗ NV2`.
pub fn fiber_reduced_hamiltonian(model: &FiberModel) -> Result<Operator> {
    model.validate()?;
    let resonance = 2f64.sqrt() * model.j;
    if (model.delta - resonance).abs() > 1e-9 * resonance.max(1.0) {
        return Err(Error::param(
            "delta",
            format!(
                "reduced model requires delta = sqrt(2) J = {resonance}, got {}",
                model.delta
            ),
        ));
    }
    let ratio = model.reduction_ratio();
    if ratio < FIBER_RATIO_MIN {
        return Err(Error::param(
            "delta",
            format!("delta / (|g'|/2) = {ratio:.3} is below {FIBER_RATIO_MIN}"),
        ));
    }
    if ratio < FIBER_RATIO_WARN {
        warn!("fiber reduction ratio delta/(|g'|/2) = {ratio:.2} is below {FIBER_RATIO_WARN}");
    }
    let (g1, g2) = model.effective_couplings();
    let dims = two_qubit_dims(model.n_max);
    let c2 = mode_op(&annihilation_operator(model.n_max)?, CAVITY_SLOT, &dims);
    raman_chain(&c2, &[(0.5 * g1, NV_SLOTS[0]), (0.5 * g2, NV_SLOTS[1])], &dims)
}

/// Two-qubit computational basis `|q1 q2>` as a flat index of the
/// `NV1 ⊗ cavity ⊗ NV2` space with the cavity in vacuum.
pub fn two_qubit_index(n_max: usize, q1: usize, q2: usize) -> usize {
    let dims = two_qubit_dims(n_max);
    crate::quantum::basis_index(&dims, &[q1, 0, q2]).expect("qubit levels in range")
}

/// Projector onto a bare level of one NV centre in a composite space.
pub fn level_projector(dims: &[usize], slot: usize, lvl: usize) -> Result<Operator> {
    embed(&basis_projector(&[dims[slot]], lvl)?, slot, dims)
}

/// Projector onto `span{|0>,|1>}` of every listed NV slot with every other
/// subsystem in its ground (vacuum) level.
pub fn computational_projector(dims: &[usize], qubit_slots: &[usize]) -> Result<Operator> {
    let n: usize = dims.iter().product();
    let mut m = CMatrix::zeros(n, n);
    for idx in 0..n {
        let levels = crate::quantum::basis_levels(dims, idx);
        let inside = levels.iter().enumerate().all(|(slot, &l)| {
            if qubit_slots.contains(&slot) {
                l == level::G0 || l == level::G1
            } else {
                l == 0
            }
        });
        if inside {
            m[(idx, idx)] = ONE;
        }
    }
    Operator::new(m, dims.to_vec())
}

/// Tensor a list of single-NV operators with cavity identities in between.
pub fn two_qubit_operator(op1: &Operator, op2: &Operator, n_max: usize) -> Result<Operator> {
    tensor(&[op1.clone(), Operator::identity(&[n_max + 1]), op2.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{commutator, HermitianEigen};
    use std::f64::consts::PI;

    fn drive(o0: f64, o1: f64, d: f64) -> SingleQubitDrive {
        SingleQubitDrive {
            omega0: o0,
            omega1: o1,
            delta: d,
            tau: 1.0,
        }
    }

    #[test]
    fn zero_drive_is_diagonal_detuning() {
        let h = single_qubit_hamiltonian(&drive(0.0, 0.0, 3.5));
        let expected = Operator::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 3.5]]).unwrap();
        assert_eq!(h, expected);
    }

    #[test]
    fn symmetric_drive_matrix_entries() {
        let omega = 2.0;
        let o = omega / SQRT_2;
        let h = single_qubit_hamiltonian(&drive(o, o, 0.7));
        assert!((h.get(0, 2).re - omega / (2.0 * SQRT_2)).abs() < 1e-15);
        assert!((h.get(1, 2).re + omega / (2.0 * SQRT_2)).abs() < 1e-15);
        assert_eq!(h.get(2, 2).re, 0.7);
        assert!(h.is_hermitian());
    }

    #[test]
    fn eigenvalues_match_closed_form() {
        let (o0, o1, d) = (1.3, 0.4, -2.2);
        let h = single_qubit_hamiltonian(&drive(o0, o1, d));
        let mut got = HermitianEigen::new(&h).unwrap().values;
        got.sort_by(f64::total_cmp);
        let r = d.hypot(o0.hypot(o1));
        let mut want = vec![0.0, 0.5 * (d + r), 0.5 * (d - r)];
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn dressed_states_limits() {
        let sym = dressed_decomposition(&drive(1.0, 1.0, 5.0)).unwrap();
        assert!((sym.theta - PI / 2.0).abs() < 1e-15);
        let r = 1.0 / SQRT_2;
        assert!((sym.d[0].re - r).abs() < 1e-15 && (sym.d[1].re - r).abs() < 1e-15);
        assert!((sym.b[0].re - r).abs() < 1e-15 && (sym.b[1].re + r).abs() < 1e-15);

        let lim = dressed_decomposition(&drive(0.0, 1.0, 5.0)).unwrap();
        assert_eq!(lim.theta, 0.0);
        assert_eq!(lim.d[0].re, 1.0);
        assert_eq!(lim.b[1].re, -1.0);

        assert!(dressed_decomposition(&drive(0.0, 0.0, 5.0)).is_err());
    }

    #[test]
    fn dressed_states_are_eigenvectors() {
        for &(o0, o1, d) in &[(0.3, 1.7, 4.0), (2.0, 0.1, -3.0), (1.0, 1.0, 0.0)] {
            let dr = drive(o0, o1, d);
            let h = single_qubit_hamiltonian(&dr).into_matrix();
            let basis = dressed_decomposition(&dr).unwrap();
            let (ep, em) = basis.energies();
            assert!((&h * &basis.d).norm() < 1e-12);
            assert!((&h * &basis.plus - &basis.plus * C64::new(ep, 0.0)).norm() < 1e-12);
            assert!((&h * &basis.minus - &basis.minus * C64::new(em, 0.0)).norm() < 1e-12);
            for (x, y) in [(&basis.d, &basis.b), (&basis.d, &basis.plus), (&basis.d, &basis.minus), (&basis.plus, &basis.minus)] {
                assert!(x.dotc(y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dressed_frame_is_unitarily_equivalent() {
        let dr = drive(0.8, 1.9, 6.0);
        let v = dressed_decomposition(&dr).unwrap().frame_unitary();
        let h = single_qubit_hamiltonian(&dr).into_matrix();
        let rotated = v.adjoint() * h * &v;
        let h1 = dressed_frame_hamiltonian(&dr).into_matrix();
        assert!(crate::quantum::max_abs(&(rotated - h1)) < 1e-12);
        let zero = dressed_frame_hamiltonian(&drive(0.0, 0.0, 2.0));
        assert_eq!(zero.get(1, 1).re, 2.0);
        assert_eq!(zero.get(0, 1).re, 0.0);
    }

    fn cavity_model(n_max: usize) -> CavityQubitModel {
        CavityQubitModel {
            nv1: CavityNv { g_cav: 1.0, omega: 1.4, delta: 14.0 },
            nv2: CavityNv { g_cav: 0.7, omega: 1.1, delta: 12.0 },
            n_max,
        }
    }

    #[test]
    fn cavity_hamiltonian_element_and_conservation() {
        let m = cavity_model(2);
        let h = two_qubit_static_hamiltonian(&m).unwrap();
        assert!(h.is_hermitian());
        let dims = m.dims();
        let bra = crate::quantum::basis_index(&dims, &[level::E, 0, 0]).unwrap();
        let ket = crate::quantum::basis_index(&dims, &[0, 1, 0]).unwrap();
        assert_eq!(h.get(bra, ket).re, 1.0);
        let n = excitation_number(2).unwrap();
        assert!(commutator(&h, &n).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn cavity_hamiltonian_without_couplings() {
        let mut m = cavity_model(1);
        m.nv1.g_cav = 0.0;
        m.nv1.omega = 0.0;
        m.nv2.g_cav = 0.0;
        m.nv2.omega = 0.0;
        let h = two_qubit_static_hamiltonian(&m).unwrap();
        let dims = m.dims();
        for idx in 0..h.dim() {
            let l = crate::quantum::basis_levels(&dims, idx);
            let want = if l[0] == level::E { 14.0 } else { 0.0 } + if l[2] == level::E { 12.0 } else { 0.0 };
            assert_eq!(h.get(idx, idx).re, want);
        }
        assert_eq!(h.max_abs(), 26.0);
    }

    #[test]
    fn effective_coupling_signs() {
        let g = 1.0;
        let omega = SQRT_2 * g;
        let delta = 10.0 * omega;
        assert!((effective_coupling(g, omega, delta, 1) - g / 10.0).abs() < 1e-15);
        assert!((effective_coupling(g, omega, delta, 2) + g / 10.0).abs() < 1e-15);
        assert_eq!(effective_coupling(0.0, omega, delta, 1), 0.0);
    }

    #[test]
    fn fiber_coupling_values() {
        let g = 1.0;
        let omega = SQRT_2 * g;
        let gp = fiber_effective_coupling(g, omega, 10.0 * omega, omega / 2.0, 1);
        // G Ω (1/10.5Ω + 1/10Ω)/2 = G (1/10.5 + 1/10)/2
        let direct = (1.0 / 10.5 + 0.1) / 2.0;
        assert!((gp - direct).abs() < 1e-14);
        assert!((g / gp - 10.244).abs() < 1e-3);
        let single = fiber_effective_coupling(g, omega, 7.0, 0.0, 2);
        assert!((single - effective_coupling(g, omega, 7.0, 2)).abs() < 1e-15);
    }

    #[test]
    fn effective_chain_in_single_excitation_sector() {
        let (g1, g2) = (0.3, 0.8);
        let h = two_qubit_effective_hamiltonian(g1, g2, 2).unwrap();
        let dims = two_qubit_dims(2);
        let idx = |l: [usize; 3]| crate::quantum::basis_index(&dims, &l).unwrap();
        let sector = [idx([1, 0, 0]), idx([0, 1, 0]), idx([0, 0, 1])];
        let block = h.restrict(&sector);
        let expected = [[0.0, g1, 0.0], [g1, 0.0, g2], [0.0, g2, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((block[(i, j)].re - expected[i][j]).abs() < 1e-15);
                assert_eq!(block[(i, j)].im, 0.0);
            }
        }
        let zero = two_qubit_effective_hamiltonian(0.0, 0.0, 2).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    fn fiber_model(varphi: f64) -> FiberModel {
        let g = 1.0;
        let omega = SQRT_2 * g;
        let delta = omega / 2.0;
        FiberModel {
            nv1: CavityNv { g_cav: g, omega, delta: 10.0 * omega },
            nv2: CavityNv { g_cav: g, omega, delta: 10.0 * omega },
            j: delta / SQRT_2,
            varphi,
            delta,
            n_max: 1,
        }
    }

    #[test]
    fn fiber_hamiltonian_is_hermitian_and_conserving() {
        let m = fiber_model(0.4);
        let h = fiber_static_hamiltonian(&m).unwrap();
        assert!(h.is_hermitian());
        let n = fiber_excitation_number(&m).unwrap();
        assert!(commutator(&h, &n).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn coupler_in_normal_modes() {
        for &phi in &[0.0, 0.4, 2.1] {
            let m = fiber_model(phi);
            let hc = fiber_coupler_hamiltonian(&m).unwrap();
            let modes = normal_mode_transform(&m).unwrap();
            let diag = &(&modes.c1.dagger() * &modes.c1) - &(&modes.c2.dagger() * &modes.c2);
            let diag = diag.scale_real(SQRT_2 * m.j);
            assert!(hc.max_abs_diff(&diag) < 1e-10, "varphi = {phi}");
        }
    }

    #[test]
    fn normal_modes_are_canonical_on_low_sector() {
        let m = fiber_model(0.9);
        let modes = normal_mode_transform(&m).unwrap();
        let dims = m.dims();
        let vacuum = crate::quantum::basis_vector(&dims, 0);
        let ops = [&modes.c, &modes.c1, &modes.c2];
        for (i, ci) in ops.iter().enumerate() {
            for (j, cj) in ops.iter().enumerate() {
                // [c_i, c_j†] on the vacuum involves at most one photon.
                let comm = commutator(ci, &cj.dagger()).unwrap();
                let out = comm.apply(&vacuum);
                let want = if i == j { vacuum.clone() } else { CVector::zeros(vacuum.len()) };
                assert!((out - want).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn reduced_model_checks_resonance_and_ratio() {
        let m = fiber_model(0.0);
        assert!(fiber_reduced_hamiltonian(&m).is_ok());
        let mut off = m;
        off.j *= 1.1;
        assert!(fiber_reduced_hamiltonian(&off).is_err());
        let mut weak = m;
        weak.delta = 0.01;
        weak.j = 0.01 / SQRT_2;
        assert!(fiber_reduced_hamiltonian(&weak).is_err());
    }
}
