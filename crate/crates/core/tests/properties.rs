//! Invariants that must hold for any input.

use nvhqc::dynamics::{evolve_master, evolve_unitary, rhs, IntegratorOptions, NoiseModel};
use nvhqc::metrics::{gate_fidelity_sweep, gate_overlap_infidelity, state_fidelity};
use nvhqc::quantum::{
    matrix_exponential_propagator, tensor, CMatrix, CVector, Operator, QuantumState, C64,
};
use proptest::prelude::*;

fn complex_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0, -1.0..1.0), n)
}

fn matrix(dim: usize, entries: &[(f64, f64)]) -> CMatrix {
    CMatrix::from_iterator(dim, dim, entries.iter().map(|&(re, im)| C64::new(re, im)))
}

fn hermitian(dim: usize, entries: &[(f64, f64)]) -> Operator {
    let m = matrix(dim, entries);
    Operator::new((&m + m.adjoint()) * C64::new(0.5, 0.0), vec![dim]).unwrap()
}

fn density(dim: usize, entries: &[(f64, f64)]) -> QuantumState {
    let a = matrix(dim, entries);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    QuantumState::density(rho / tr, vec![dim]).unwrap()
}

fn ket(entries: &[(f64, f64)]) -> CVector {
    let v = CVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| C64::new(re, im)));
    let n = v.norm();
    v / C64::new(n.max(1e-3), 0.0)
}

fn sized(max: usize) -> impl Strategy<Value = (usize, Vec<(f64, f64)>)> {
    (1..=max).prop_flat_map(|d| (Just(d), complex_entries(d * d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tensor_product_is_associative(
        (da, a) in sized(3), (db, b) in sized(3), (dc, c) in sized(2),
    ) {
        let (a, b, c) = (hermitian(da, &a), hermitian(db, &b), hermitian(dc, &c));
        let left = tensor(&[tensor(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = tensor(&[a, tensor(&[b, c]).unwrap()]).unwrap();
        prop_assert!(left.matrix().iter().zip(right.matrix().iter()).all(|(x, y)| (x - y).norm() < 1e-14));
    }

    #[test]
    fn propagators_compose((d, h) in sized(6), t1 in 0.0..2.0f64, t2 in 0.0..2.0f64) {
        let h = hermitian(d, &h);
        let u1 = matrix_exponential_propagator(&h, t1).unwrap();
        let u2 = matrix_exponential_propagator(&h, t2).unwrap();
        let u12 = matrix_exponential_propagator(&h, t1 + t2).unwrap();
        prop_assert!((&u2 * &u1).max_abs_diff(&u12) < 1e-12);
        prop_assert!(u12.is_unitary(1e-12));
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity(
        (d, h) in sized(5), rho in complex_entries(25), l in complex_entries(25), rate in 0.0..3.0f64,
    ) {
        let h = hermitian(d, &h);
        let rho = density(d, &rho[..d * d]).density_matrix();
        let mut noise = NoiseModel::none();
        noise.push("l", rate, Operator::new(matrix(d, &l[..d * d]), vec![d]).unwrap()).unwrap();
        let drho = rhs(&rho, &h, &noise).unwrap();
        prop_assert!(drho.trace().norm() < 1e-12);
        prop_assert!((&drho - drho.adjoint()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn fidelity_is_linear_in_the_state(
        (d, a) in sized(4), b in complex_entries(16), t in complex_entries(4), p in 0.0..1.0f64,
    ) {
        let (ra, rb) = (density(d, &a), density(d, &b[..d * d]));
        let target = ket(&t[..d]);
        let mix = ra.density_matrix() * C64::new(p, 0.0) + rb.density_matrix() * C64::new(1.0 - p, 0.0);
        let mix = QuantumState::density(mix, vec![d]).unwrap();
        let fa = state_fidelity(&ra, &target).unwrap();
        let fb = state_fidelity(&rb, &target).unwrap();
        prop_assert!((state_fidelity(&mix, &target).unwrap() - (p * fa + (1.0 - p) * fb)).abs() < 1e-12);
    }

    #[test]
    fn fidelities_ignore_global_phase((d, h) in sized(4), s in complex_entries(4), alpha in -4.0..4.0f64) {
        let phase = C64::from_polar(1.0, alpha);
        let psi = ket(&s[..d]);
        let state = QuantumState::pure_normalized(psi.clone(), vec![d]).unwrap();
        let target = state.as_pure().unwrap().clone();
        let f0 = state_fidelity(&state, &target).unwrap();
        let f1 = state_fidelity(&state, &(target * phase)).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-12);
        let u = matrix_exponential_propagator(&hermitian(d, &h), 1.0).unwrap();
        prop_assert!(gate_overlap_infidelity(&u.scale(phase), &u).unwrap().abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noiseless_master_equation_matches_unitary_evolution(
        d in 2usize..=24, seed in complex_entries(24 * 24), s in complex_entries(24),
    ) {
        let h = hermitian(d, &seed[..d * d]);
        let psi = ket(&s[..d]);
        let init = QuantumState::pure_normalized(psi, vec![d]).unwrap();
        let t_end = 0.7;
        let m = evolve_master(&h, &NoiseModel::none(), &init.to_density(), t_end, &IntegratorOptions::default(), &[]).unwrap();
        let u = evolve_unitary(&h, &init, &[0.0, t_end], &[]).unwrap();
        let expected = u.final_state.density_matrix();
        let got = m.final_state.density_matrix();
        prop_assert!((&got - &expected).iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn sweep_is_independent_of_worker_count(workers in 2usize..6, n in 2usize..40) {
        let gate = nvhqc::holonomy::hadamard();
        // A fixed imperfect map: slight rotation away from the ideal gate.
        let h = Operator::from_real_rows(&[&[0.0, 0.1], &[0.1, 0.3]]).unwrap();
        let u = &gate * &matrix_exponential_propagator(&h, 0.2).unwrap();
        let simulate = |s: &QuantumState| {
            Ok(QuantumState::pure(u.apply(s.as_pure().unwrap()), vec![2]).unwrap())
        };
        let one = gate_fidelity_sweep("t", 2, &gate, n, 1, simulate).unwrap();
        let many = gate_fidelity_sweep("t", 2, &gate, n, workers, simulate).unwrap();
        prop_assert_eq!(one.samples, many.samples);
        prop_assert_eq!(one.mean_fidelity, many.mean_fidelity);
    }
}
