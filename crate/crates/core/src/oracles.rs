//! Small brute-force reference computations.
//!
//! These deliberately avoid the main code paths: real symmetric problems are
//! diagonalized with cyclic Jacobi rotations, matrix exponentials go through
//! scaling-and-squaring of a Taylor series, and decay curves are closed
//! forms. Everything here works on problems of dimension ≤ 6 or so.

use crate::quantum::{CMatrix, C64};

/// Eigenvalues and orthonormal eigenvectors (columns) of a real symmetric
/// matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

/// `exp(-i H t)` for a real symmetric `H` given row by row.
pub fn sector_propagator_oracle(h: &[Vec<f64>], t: f64) -> CMatrix {
    let n = h.len();
    let (values, vectors) = jacobi_eigen(h);
    CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| C64::from_polar(vectors[i][k] * vectors[j][k], -values[k] * t))
            .sum()
    })
}

/// Propagator of a nearest-neighbour chain with the given couplings and
/// zero on-site energies.
pub fn chain_propagator_oracle(couplings: &[f64], t: f64) -> CMatrix {
    let n = couplings.len() + 1;
    let mut h = vec![vec![0.0; n]; n];
    for (k, &g) in couplings.iter().enumerate() {
        h[k][k + 1] = g;
        h[k + 1][k] = g;
    }
    sector_propagator_oracle(&h, t)
}

/// Raman-coupled two-excitation sector in the order
/// `{|101>, |011>, |110>, |020>}` (NV1, photons, NV2).
pub fn two_excitation_sector(g1: f64, g2: f64) -> Vec<Vec<f64>> {
    let r2 = 2f64.sqrt();
    vec![
        vec![0.0, g1, g2, 0.0],
        vec![g1, 0.0, 0.0, r2 * g2],
        vec![g2, 0.0, 0.0, r2 * g1],
        vec![0.0, r2 * g2, r2 * g1, 0.0],
    ]
}

/// `<101|U|101>` after the `λτ = π` pulse with equal couplings, when the
/// two-photon level is available: `2/3 + cos(π√3)/3`.
pub fn two_excitation_return_amplitude() -> f64 {
    2.0 / 3.0 + (std::f64::consts::PI * 3f64.sqrt()).cos() / 3.0
}

/// Closed-form propagator of the `{|b>, |e>}` block
/// `[[0, Ω/2], [Ω/2, Δ]]`.
pub fn two_level_dressed_oracle(omega: f64, delta: f64, tau: f64) -> CMatrix {
    let r = delta.hypot(omega);
    let (s, c) = (0.5 * r * tau).sin_cos();
    let phase = C64::from_polar(1.0, -0.5 * delta * tau);
    let (sx, sz) = if r > 0.0 { (omega / r, -delta / r) } else { (0.0, 0.0) };
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, -s * sz),
            C64::new(0.0, -s * sx),
            C64::new(0.0, -s * sx),
            C64::new(c, s * sz),
        ],
    );
    m * phase
}

/// `exp(M)` by scaling-and-squaring of a truncated Taylor series.
pub fn expm_taylor(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm: f64 = m.iter().map(|z| z.norm()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * C64::new(scale, 0.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &a * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Reference single-dissipator decays for the `(γ/2) L(A)` convention.
pub mod lindblad_closed_forms {
    /// Population left in the source level of `A = |j><i|`.
    pub fn amplitude_damping(rate: f64, t: f64) -> f64 {
        (-rate * t).exp()
    }

    /// Coherence between eigenvectors of a Hermitian `A` with eigenvalues
    /// `a` and `b`, starting from `c0`.
    pub fn pure_dephasing(rate: f64, a: f64, b: f64, c0: f64, t: f64) -> f64 {
        c0 * (-0.5 * rate * (a - b).powi(2) * t).exp()
    }

    /// Mean photon number under cavity loss `(κ, a)`.
    pub fn cavity_decay(kappa: f64, n0: f64, t: f64) -> f64 {
        n0 * (-kappa * t).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn jacobi_diagonalizes() {
        let h = two_excitation_sector(0.4, 1.3);
        let (vals, vecs) = jacobi_eigen(&h);
        for k in 0..4 {
            for i in 0..4 {
                let hv: f64 = (0..4).map(|j| h[i][j] * vecs[j][k]).sum();
                assert!((hv - vals[k] * vecs[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_state_chain_pi_pulse() {
        let g = 0.8;
        let u = chain_propagator_oracle(&[g, g], PI / (2f64.sqrt() * g));
        assert!((u[(2, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((u[(1, 1)] + C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_state_chain_half_period() {
        let g = 1.7;
        let u = chain_propagator_oracle(&[g], PI / g);
        assert!((u[(0, 0)] + C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_excitation_closed_form() {
        let g = 0.9;
        let u = sector_propagator_oracle(&two_excitation_sector(g, g), PI / (2f64.sqrt() * g));
        assert!((u[(0, 0)].re - two_excitation_return_amplitude()).abs() < 1e-12);
        assert!(u[(0, 0)].im.abs() < 1e-12);
    }

    #[test]
    fn dressed_oracle_phase_is_pulse_area() {
        let omega = 1.0_f64;
        let delta = 20.0_f64;
        let r = delta.hypot(omega);
        for m in 1..6 {
            let tau = 2.0 * PI * m as f64 / r;
            let u = two_level_dressed_oracle(omega, delta, tau);
            let gamma = crate::holonomy::pulse_area(omega, delta, tau);
            assert!(u[(0, 0)].norm_sqr() > 1.0 - 1e-6);
            let diff = (u[(0, 0)] * C64::from_polar(1.0, -gamma)).arg();
            assert!(diff.abs() < 1e-10, "m = {m}: {diff}");
        }
    }

    #[test]
    fn taylor_exponential_of_rotation() {
        let a = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, -1.0), C64::new(0.0, 0.0)]);
        let u = expm_taylor(&(a * C64::new(PI / 2.0, 0.0)));
        // exp(-i π/2 σx) = -i σx
        assert!((u[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-13);
        assert!(u[(0, 0)].norm() < 1e-13);
    }
}
