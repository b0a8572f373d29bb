//! Single-qubit noise channels, twirling, and the depolarizing model.

use crate::error::{CqcError, Result};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// The Pauli matrices `[I, X, Y, Z]`.
pub fn paulis() -> [Matrix2<C64>; 4] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

/// A channel given by Kraus operators `W_i = Σ_l c_il σ_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptpSpec {
    pub kraus_coeffs: Vec<[C64; 4]>,
}

impl CptpSpec {
    pub fn new(kraus_coeffs: Vec<[C64; 4]>) -> Result<Self> {
        let spec = CptpSpec { kraus_coeffs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kraus(&self) -> Vec<Matrix2<C64>> {
        let p = paulis();
        self.kraus_coeffs
            .iter()
            .map(|c| p.iter().zip(c).fold(Matrix2::zeros(), |acc, (s, &w)| acc + s * w))
            .collect()
    }

    /// Checks `Σ W_i† W_i = I` to 1e-10.
    pub fn validate(&self) -> Result<()> {
        let sum = self.kraus().iter().fold(Matrix2::<C64>::zeros(), |acc, w| acc + w.adjoint() * w);
        let dev = (sum - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(CqcError::InvalidChannel(format!("completeness violated by {dev:e}")));
        }
        Ok(())
    }

    /// Apply the channel to a density matrix.
    pub fn apply(&self, rho: &Matrix2<C64>) -> Matrix2<C64> {
        self.kraus().iter().fold(Matrix2::zeros(), |acc, w| acc + w * rho * w.adjoint())
    }

    /// Pauli probabilities of the twirled channel, `p_l = Σ_i |c_il|²`.
    pub fn twirl(&self) -> PauliChannel {
        let mut p = [0.0; 4];
        for c in &self.kraus_coeffs {
            for l in 0..4 {
                p[l] += c[l].norm_sqr();
            }
        }
        PauliChannel { p_i: p[0], p_x: p[1], p_y: p[2], p_z: p[3] }
    }
}

/// Dephasing rate seen by X-basis measurements after twirling:
/// `q = Σ_i |c_i2|² + |c_i3|²`.
pub fn twirl_to_dephasing(chan: &CptpSpec) -> Result<f64> {
    chan.validate()?;
    let t = chan.twirl();
    Ok((t.p_y + t.p_z).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel {
    pub p_i: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl PauliChannel {
    pub fn new(p_i: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<Self> {
        let c = PauliChannel { p_i, p_x, p_y, p_z };
        let probs = c.probs();
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(CqcError::InvalidChannel(format!("not a probability vector: {probs:?}")));
        }
        Ok(c)
    }

    pub fn identity() -> Self {
        PauliChannel { p_i: 1.0, p_x: 0.0, p_y: 0.0, p_z: 0.0 }
    }

    pub fn dephasing(q: f64) -> Result<Self> {
        Self::new(1.0 - q, 0.0, 0.0, q)
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::new(1.0 - p, p / 3.0, p / 3.0, p / 3.0)
    }

    pub fn probs(&self) -> [f64; 4] {
        [self.p_i, self.p_x, self.p_y, self.p_z]
    }

    /// Kraus form `{√p_l σ_l}`.
    pub fn to_cptp(&self) -> CptpSpec {
        let mut coeffs = Vec::new();
        for (l, p) in self.probs().into_iter().enumerate() {
            let mut c = [C64::new(0.0, 0.0); 4];
            c[l] = C64::new(p.sqrt(), 0.0);
            coeffs.push(c);
        }
        CptpSpec { kraus_coeffs: coeffs }
    }
}

/// `ε = 1 − p_I`, so dephasing at rate `q` has `ε = q`.
pub fn pauli_channel_distance(chan: &PauliChannel) -> f64 {
    1.0 - chan.p_i
}

/// Single-qubit depolarizing rate `p1` after each qubit, two-qubit
/// depolarizing rate `p2` after each gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolModel {
    pub p1: f64,
    pub p2: f64,
}

impl DepolModel {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(0.0..=0.75).contains(&p1) || !(0.0..=15.0 / 16.0).contains(&p2) {
            return Err(CqcError::OutOfRange(format!("p1 = {p1} must be in [0, 3/4], p2 = {p2} in [0, 15/16]")));
        }
        Ok(DepolModel { p1, p2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolRates {
    pub q_ind: f64,
    pub q_cor: f64,
    pub p_s: f64,
    pub q_eff: f64,
}

pub fn depolarizing_rates(model: &DepolModel) -> Result<DepolRates> {
    let DepolModel { p1, p2 } = *model;
    let a = 1.0 - 16.0 * p2 / 15.0;
    if a < 0.0 {
        return Err(CqcError::OutOfRange(format!("1 - 16 p2 / 15 = {a} < 0")));
    }
    let q_ind = 0.5 * (1.0 - a.powi(4) * (1.0 - 4.0 * p1 / 3.0).powi(2));
    let q_cor = 0.5 * (1.0 - a.sqrt());
    let p_s = (8.0 * p2 / 15.0 + 3.0 * p1 / 3.0) + (4.0 * p2 / 15.0 + 2.0 * p1 / 3.0) / 2.0;
    let q_eff = q_ind + 4.0 * q_cor + q_cor.sqrt();
    Ok(DepolRates { q_ind, q_cor, p_s, q_eff })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum NoiseModel {
    Dephasing { q: f64 },
    Depolarizing { p1: f64, p2: f64 },
}

/// Analytic `⟨S_u⟩` for ±1-valued cell parities.
pub fn expected_parity(noise: &NoiseModel) -> Result<f64> {
    match *noise {
        NoiseModel::Dephasing { q } => {
            if !(0.0..=1.0).contains(&q) {
                return Err(CqcError::OutOfRange(format!("q = {q}")));
            }
            Ok((1.0 - 2.0 * q).powi(6))
        }
        NoiseModel::Depolarizing { p1, p2 } => {
            let r = depolarizing_rates(&DepolModel::new(p1, p2)?)?;
            Ok(((1.0 - 2.0 * r.q_ind) * (1.0 - 2.0 * r.q_cor).powi(4)).powi(6))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Dense route: Pauli-transfer entry `R_XX = Tr(X N(X)) / 2`; the twirl
    /// keeps it, and `R_XX = 1 − 2q` for the resulting channel.
    fn ptm_dephasing(chan: &CptpSpec) -> f64 {
        let x = paulis()[1];
        let out = chan.apply(&x);
        let rxx = (x * out).trace().re / 2.0;
        (1.0 - rxx) / 2.0
    }

    /// Random channel: Kraus operators from an isometry obtained by
    /// Gram-Schmidt on random complex columns.
    fn random_cptp(seed: &[f64]) -> CptpSpec {
        let k = 3;
        let mut cols: Vec<Vec<C64>> = (0..2)
            .map(|j| (0..2 * k).map(|r| C64::new(seed[(j * 2 * k + r) % seed.len()], seed[(j * 2 * k + r + 7) % seed.len()])).collect())
            .collect();
        for j in 0..2 {
            for i in 0..j {
                let proj: C64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let ci = cols[i].clone();
                for (b, a) in cols[j].iter_mut().zip(ci) {
                    *b -= proj * a;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            cols[j].iter_mut().for_each(|z| *z /= norm);
        }
        let p = paulis();
        let mut coeffs = Vec::new();
        for i in 0..k {
            let w = Matrix2::new(cols[0][2 * i], cols[1][2 * i], cols[0][2 * i + 1], cols[1][2 * i + 1]);
            let mut ci = [c(0.0); 4];
            for l in 0..4 {
                ci[l] = (p[l] * w).trace() / 2.0;
            }
            coeffs.push(ci);
        }
        CptpSpec::new(coeffs).unwrap()
    }

    #[test]
    fn twirl_examples() {
        let id = CptpSpec::new(vec![[c(1.0), c(0.0), c(0.0), c(0.0)]]).unwrap();
        assert_eq!(twirl_to_dephasing(&id).unwrap(), 0.0);
        let p: f64 = 0.3;
        let deph = CptpSpec::new(vec![[c((1.0 - p).sqrt()), c(0.0), c(0.0), c(0.0)], [c(0.0), c(0.0), c(0.0), c(p.sqrt())]])
            .unwrap();
        assert!((twirl_to_dephasing(&deph).unwrap() - p).abs() < 1e-15);
        let depol = PauliChannel::depolarizing(p).unwrap().to_cptp();
        assert!((twirl_to_dephasing(&depol).unwrap() - 2.0 * p / 3.0).abs() < 1e-15);
        let bad = CptpSpec { kraus_coeffs: vec![[c(0.5), c(0.0), c(0.0), c(0.0)]] };
        assert!(twirl_to_dephasing(&bad).is_err());
    }

    #[test]
    fn distance_convention() {
        assert_eq!(pauli_channel_distance(&PauliChannel::identity()), 0.0);
        assert!((pauli_channel_distance(&PauliChannel::dephasing(0.1).unwrap()) - 0.1).abs() < 1e-15);
        assert!((pauli_channel_distance(&PauliChannel::depolarizing(0.1).unwrap()) - 0.1).abs() < 1e-15);
        assert!(PauliChannel::new(0.5, 0.5, 0.1, 0.0).is_err());
    }

    #[test]
    fn depol_rates_at_zero() {
        let r = depolarizing_rates(&DepolModel::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!((r.q_ind, r.q_cor, r.p_s, r.q_eff), (0.0, 0.0, 0.0, 0.0));
        assert!(DepolModel::new(0.8, 0.0).is_err());
    }

    #[test]
    fn parity_anchors() {
        let d = expected_parity(&NoiseModel::Dephasing { q: 0.134 }).unwrap();
        assert!((d - 0.154).abs() < 1e-3);
        let p = expected_parity(&NoiseModel::Depolarizing { p1: 0.027, p2: 0.027 }).unwrap();
        assert!((p - 0.225).abs() < 1e-3);
        assert_eq!(expected_parity(&NoiseModel::Dephasing { q: 0.0 }).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn twirl_matches_transfer_matrix(seed in proptest::collection::vec(-1.0f64..1.0, 16)) {
            prop_assume!(seed.iter().map(|v| v.abs()).sum::<f64>() > 0.5);
            let chan = random_cptp(&seed);
            let q = twirl_to_dephasing(&chan).unwrap();
            prop_assert!((q - ptm_dephasing(&chan)).abs() < 1e-9);
        }

        #[test]
        fn parity_decreasing(a in 0.0f64..0.5, b in 0.0f64..0.5) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let pl = expected_parity(&NoiseModel::Dephasing { q: lo }).unwrap();
            let ph = expected_parity(&NoiseModel::Dephasing { q: hi }).unwrap();
            prop_assert!(pl > ph);
            prop_assert!((-1.0..=1.0).contains(&ph));
        }
    }
}
