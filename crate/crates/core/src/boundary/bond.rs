//! Dephased entangled pairs, concurrence, and the closed-form boundaries.

use crate::error::{CqcError, Result};
use crate::noise::{paulis, C64};
use nalgebra::{Matrix4, SymmetricEigen};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

pub type M4 = Matrix4<C64>;

/// `σ_a ⊗ σ_b`, first factor on the high bit.
pub fn pauli2(a: usize, b: usize) -> M4 {
    let p = paulis();
    p[a].kronecker(&p[b]).fixed_view::<4, 4>(0, 0).into_owned()
}

/// `Tr(ρ σ_a⊗σ_b)` for all 16 pairs, index `4a + b`.
pub fn pauli_coords(rho: &M4) -> [f64; 16] {
    let mut r = [0.0; 16];
    for a in 0..4 {
        for b in 0..4 {
            r[4 * a + b] = (rho * pauli2(a, b)).trace().re;
        }
    }
    r
}

/// `Σ r_ab σ_a⊗σ_b / 4`.
pub fn from_pauli_coords(r: &[f64; 16]) -> M4 {
    let mut m = M4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            if r[4 * a + b] != 0.0 {
                m += pauli2(a, b) * C64::new(r[4 * a + b] / 4.0, 0.0);
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondState {
    pub theta: f64,
    pub q_bond: f64,
    pub rho: M4,
}

/// `P(q)⊗P(q)` applied to `exp(iθZZ)|++⟩`.
pub fn bond_density_matrix(theta: f64, q_bond: f64) -> Result<BondState> {
    if !(0.0..=FRAC_PI_4 + 1e-15).contains(&theta) {
        return Err(CqcError::OutOfRange(format!("theta {theta} outside [0, π/4]")));
    }
    if !(0.0..=0.5).contains(&q_bond) {
        return Err(CqcError::OutOfRange(format!("bond dephasing {q_bond} outside [0, 1/2]")));
    }
    let s = 1.0 - 2.0 * q_bond;
    let (c2, s2) = (bond_cos(theta), bond_sin(theta));
    let mut r = [0.0; 16];
    r[0] = 1.0;
    r[1] = s * c2; // IX
    r[4] = s * c2; // XI
    r[4 * 3 + 2] = -s * s2; // ZY
    r[4 * 2 + 3] = -s * s2; // YZ
    r[4 + 1] = s * s; // XX
    Ok(BondState { theta, q_bond, rho: from_pauli_coords(&r) })
}

/// `cos 2θ` via `sin 2(π/4 − θ)` so that θ = π/4 gives exactly 0.
fn bond_cos(theta: f64) -> f64 {
    (2.0 * (FRAC_PI_4 - theta)).sin()
}

fn bond_sin(theta: f64) -> f64 {
    (2.0 * theta).sin()
}

fn hermitian_eigen(m: &M4) -> SymmetricEigen<C64, nalgebra::U4> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h)
}

/// Wootters concurrence `max(0, λ₁−λ₂−λ₃−λ₄)`, with `λ_i²` the eigenvalues
/// of `√ρ ρ̃ √ρ` and `ρ̃ = (Y⊗Y) ρ* (Y⊗Y)`.
pub fn concurrence(rho: &M4) -> Result<f64> {
    let eig = hermitian_eigen(rho);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 || ((rho - rho.adjoint()).norm() > 1e-10) {
        return Err(CqcError::OutOfRange(format!("not a density matrix (min eigenvalue {min})")));
    }
    let sqrt_vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    let sqrt_rho = eig.eigenvectors * M4::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    // λ_i are the singular values of √ρ √ρ̃, avoiding square roots of
    // eigenvalues that round to ±1e−17.
    let yy = pauli2(2, 2);
    let sqrt_tilde = yy * sqrt_rho.map(|z| z.conj()) * yy;
    let mut lam: Vec<f64> = (sqrt_rho * sqrt_tilde).singular_values().iter().cloned().collect();
    lam.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

/// Largest `1 − 2q` per bond keeping the pair separable.
pub fn separable_factor(theta: f64) -> f64 {
    let s = bond_sin(theta);
    -s + (s * s + 1.0).sqrt()
}

/// Largest `1 − 2q` per bond keeping the pair a stabilizer mixture.
pub fn stabilizer_factor(theta: f64) -> f64 {
    let (c, s) = (bond_cos(theta).max(0.0), bond_sin(theta).max(0.0));
    c + s - (2.0 * c * s).sqrt()
}

/// Largest `1 − 2q_k` keeping `exp(iαZ)|+⟩` inside the octahedron.
pub fn input_factor(alpha: f64) -> f64 {
    1.0 / ((2.0 * alpha).cos().abs() + (2.0 * alpha).sin().abs())
}

/// Per-bond `(q_sep, q_stab)`: the pair is separable for `q ≥ q_sep` and a
/// stabilizer mixture for `q ≥ q_stab`.
pub fn boundary_thresholds(theta: f64) -> Result<(f64, f64)> {
    if !(0.0..=FRAC_PI_4 + 1e-15).contains(&theta) {
        return Err(CqcError::OutOfRange(format!("theta {theta} outside [0, π/4]")));
    }
    Ok(((1.0 - separable_factor(theta)) / 2.0, (1.0 - stabilizer_factor(theta)) / 2.0))
}

/// Global separable criterion at `φ = |π/4 − θ|`: two separable bonds per
/// site, `1 − 2q ≤ f_sep²`.
pub fn global_separable_q(phi: f64) -> f64 {
    (1.0 - separable_factor(FRAC_PI_4 - phi).powi(2)) / 2.0
}

/// Global stabilizer-mixture criterion at `φ`: four stabilizer bonds and an
/// octahedron input, `1 − 2q ≤ f_stab⁴ / √2`.
pub fn global_stabilizer_q(phi: f64) -> f64 {
    (1.0 - FRAC_1_SQRT_2 * stabilizer_factor(phi).powi(4)) / 2.0
}

/// Largest deviation in `q` between the concurrence-zero boundary and the
/// closed form, bisecting each of `n` angles in (0, π/4].
pub fn concurrence_boundary_deviation(n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..=n {
        let theta = FRAC_PI_4 * i as f64 / n as f64;
        let entangled = |q: f64| concurrence(&bond_density_matrix(theta, q).unwrap().rho).map_or(true, |c| c > 1e-12);
        let (mut lo, mut hi) = (0.0, 0.5);
        while hi - lo > 1e-12 {
            let m = 0.5 * (lo + hi);
            if entangled(m) {
                lo = m;
            } else {
                hi = m;
            }
        }
        let q_sep = (1.0 - separable_factor(theta)) / 2.0;
        worst = worst.max((lo - q_sep).abs());
    }
    worst
}
