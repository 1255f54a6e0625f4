//! The library against independent reference computations.

use std::f64::consts::{PI, TAU};

use nvhqc::dynamics::{evolve_master, single_qubit_noise, two_qubit_noise, IntegratorOptions, NvRates, RelaxationConvention};
use nvhqc::holonomy::{holonomic_unitary, project_to_qubit, synthesize_single_qubit, SingleQubitGateSpec};
use nvhqc::metrics::gate_overlap_infidelity;
use nvhqc::model::{
    level, single_qubit_hamiltonian, two_qubit_dims, two_qubit_effective_hamiltonian,
    two_qubit_static_hamiltonian, CavityNv, CavityQubitModel,
};
use nvhqc::oracles::{
    chain_propagator_oracle, expm_taylor, jacobi_eigen, lindblad_closed_forms, sector_propagator_oracle,
    two_excitation_return_amplitude, two_excitation_sector, two_level_dressed_oracle,
};
use nvhqc::quantum::{
    annihilation_operator, basis_index, embed, expectation, matrix_exponential_propagator, CMatrix,
    HermitianEigen, Operator, QuantumState, C64,
};

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sub_block(u: &Operator, idx: &[usize]) -> CMatrix {
    u.restrict(idx)
}

fn cavity_model() -> CavityQubitModel {
    let g = TAU * 1000.0;
    let omega = 2f64.sqrt() * g;
    CavityQubitModel {
        nv1: CavityNv { g_cav: g, omega, delta: 10.0 * omega },
        nv2: CavityNv { g_cav: g, omega: -omega, delta: 10.0 * omega },
        n_max: 2,
    }
}

#[test]
fn eigensolver_agrees_with_jacobi() {
    let h = two_excitation_sector(1.3, 0.4);
    let (mut jacobi, _) = jacobi_eigen(&h);
    jacobi.sort_by(f64::total_cmp);
    let rows: Vec<&[f64]> = h.iter().map(|r| r.as_slice()).collect();
    let op = Operator::from_real_rows(&rows).unwrap();
    let eig = HermitianEigen::new(&op).unwrap();
    let mut lib: Vec<f64> = eig.values.to_vec();
    lib.sort_by(f64::total_cmp);
    for (a, b) in jacobi.iter().zip(&lib) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn propagator_agrees_with_taylor_series() {
    let h = two_qubit_static_hamiltonian(&cavity_model()).unwrap();
    let t = 2e-4;
    let u = matrix_exponential_propagator(&h, t).unwrap();
    let reference = expm_taylor(&(h.matrix() * C64::new(0.0, -t)));
    assert!(max_diff(u.matrix(), &reference) < 1e-9);
}

#[test]
fn single_excitation_sector_is_a_three_site_chain() {
    let (g1, g2) = (0.8, 1.7);
    let dims = two_qubit_dims(1);
    let h = two_qubit_effective_hamiltonian(g1, g2, 1).unwrap();
    let idx: Vec<usize> = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        .iter()
        .map(|l| basis_index(&dims, l).unwrap())
        .collect();
    for t in [0.3, 1.1, PI / (g1 * g1 + g2 * g2).sqrt()] {
        let u = matrix_exponential_propagator(&h, t).unwrap();
        assert!(max_diff(&sub_block(&u, &idx), &chain_propagator_oracle(&[g1, g2], t)) < 1e-12);
    }
}

#[test]
fn two_excitation_sector_matches_closed_form() {
    let (g1, g2) = (0.9, 0.6);
    let dims = two_qubit_dims(2);
    let h = two_qubit_effective_hamiltonian(g1, g2, 2).unwrap();
    let idx: Vec<usize> = [[1, 0, 1], [0, 1, 1], [1, 1, 0], [0, 2, 0]]
        .iter()
        .map(|l| basis_index(&dims, l).unwrap())
        .collect();
    let t = 0.77;
    let u = matrix_exponential_propagator(&h, t).unwrap();
    assert!(max_diff(&sub_block(&u, &idx), &sector_propagator_oracle(&two_excitation_sector(g1, g2), t)) < 1e-12);

    let g = 2.0;
    let tau = PI / (2f64.sqrt() * g);
    let u = matrix_exponential_propagator(&two_qubit_effective_hamiltonian(g, g, 2).unwrap(), tau).unwrap();
    let i = basis_index(&dims, &[1, 0, 1]).unwrap();
    assert!((u.get(i, i).re - two_excitation_return_amplitude()).abs() < 1e-12);
}

#[test]
fn bright_state_follows_the_dressed_two_level_oracle() {
    let spec = SingleQubitGateSpec::new(PI / 4.0, PI).unwrap();
    let omega = TAU * 300.0;
    let drive = synthesize_single_qubit(&spec, omega, 20.0 * omega).unwrap();
    let u = matrix_exponential_propagator(&single_qubit_hamiltonian(&drive), drive.tau).unwrap();
    let om = drive.omega();
    // Bright and dark states in the ground manifold.
    let bright = [drive.omega0 / om, -drive.omega1 / om];
    let dark = [drive.omega1 / om, drive.omega0 / om];
    let amp = |bra: [f64; 2], ket: [f64; 2]| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                s += u.get(i, j) * bra[i] * ket[j];
            }
        }
        s
    };
    let oracle = two_level_dressed_oracle(om, drive.delta, drive.tau);
    assert!((amp(bright, bright) - oracle[(0, 0)]).norm() < 1e-10);
    assert!((amp(dark, dark) - C64::new(1.0, 0.0)).norm() < 1e-10);
    let e_from_b = u.get(level::E, 0) * bright[0] + u.get(level::E, 1) * bright[1];
    assert!((e_from_b - oracle[(1, 0)]).norm() < 1e-10);

    // The projected gate sits within the leakage bound of the ideal.
    let projected = project_to_qubit(&u).unwrap();
    let ideal = holonomic_unitary(&spec).unwrap();
    assert!(gate_overlap_infidelity(&projected, &ideal).unwrap() < 1.0 / 401.0);
}

fn run_master(noise: &nvhqc::dynamics::NoiseModel, h: &Operator, init: QuantumState, t: f64) -> QuantumState {
    evolve_master(h, noise, &init, t, &IntegratorOptions::default(), &[]).unwrap().final_state
}

#[test]
fn ground_relaxation_matches_exponential_decay() {
    let rates = NvRates { gamma_y: 0.8, ..NvRates::default() };
    let noise = single_qubit_noise(&rates, RelaxationConvention::Decay).unwrap();
    let h = Operator::zeros(&[3]);
    let t = 1.3;
    let rho = run_master(&noise, &h, QuantumState::basis(&[3], level::G0).unwrap(), t).density_matrix();
    assert!((rho[(0, 0)].re - lindblad_closed_forms::amplitude_damping(0.8, t)).abs() < 1e-9);
}

#[test]
fn excited_dephasing_matches_closed_form() {
    let rates = NvRates { gamma_z: 0.5, ..NvRates::default() };
    let noise = single_qubit_noise(&rates, RelaxationConvention::Decay).unwrap();
    let h = Operator::zeros(&[3]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = nvhqc::quantum::CVector::zeros(3);
    psi[level::G0] = C64::new(s, 0.0);
    psi[level::E] = C64::new(s, 0.0);
    let init = QuantumState::pure(psi, vec![3]).unwrap();
    let t = 0.9;
    let rho = run_master(&noise, &h, init, t).density_matrix();
    let expected = lindblad_closed_forms::pure_dephasing(0.5, 1.0, -1.0, 0.5, t);
    assert!((rho[(level::E, level::G0)].re - expected).abs() < 1e-9);
    // Both ground levels share an eigenvalue, so their coherence is untouched.
    let init = QuantumState::pure(nvhqc::metrics::sweep_state(PI / 4.0, 3), vec![3]).unwrap();
    let rho = run_master(&noise, &h, init, t).density_matrix();
    assert!((rho[(0, 1)].re - 0.5).abs() < 1e-9);
}

#[test]
fn cavity_loss_matches_photon_decay() {
    let kappa = 0.6;
    let noise = two_qubit_noise(&NvRates::default(), kappa, 2, RelaxationConvention::Decay).unwrap();
    let dims = two_qubit_dims(2);
    let h = Operator::zeros(&dims);
    let init = QuantumState::basis(&dims, basis_index(&dims, &[0, 2, 0]).unwrap()).unwrap();
    let t = 0.7;
    let fin = run_master(&noise, &h, init, t);
    let a = embed(&annihilation_operator(2).unwrap(), 1, &dims).unwrap();
    let n = expectation(&fin, &(&a.dagger() * &a)).unwrap().re;
    assert!((n - lindblad_closed_forms::cavity_decay(kappa, 2.0, t)).abs() < 1e-9);
}
