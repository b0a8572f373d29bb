//! Dense reference simulator: statevector for unitary circuits, density
//! matrix once channels appear.

use super::circuit::{Circuit, Gate, Op};
use super::tableau::{Basis, Pauli};
use crate::error::{CqcError, Result};
use crate::noise::{paulis, PauliChannel, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MAX_PURE_QUBITS: usize = 14;
pub const MAX_MIXED_QUBITS: usize = 10;

type M2 = [[C64; 2]; 2];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn matrix_of(g: &Gate) -> Option<M2> {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Some(match *g {
        Gate::H(_) => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        Gate::S(_) => [[l, o], [o, c(0.0, 1.0)]],
        Gate::Sdg(_) => [[l, o], [o, c(0.0, -1.0)]],
        Gate::X(_) => [[o, l], [l, o]],
        Gate::Y(_) => [[o, c(0.0, -1.0)], [c(0.0, 1.0), o]],
        Gate::Z(_) => [[l, o], [o, -l]],
        Gate::Rz(_, t) => [[C64::from_polar(1.0, t), o], [o, C64::from_polar(1.0, -t)]],
        _ => return None,
    })
}

fn conj(m: &M2) -> M2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

fn apply_1q(v: &mut [C64], bit: usize, m: &M2) {
    let mask = 1usize << bit;
    for i in 0..v.len() {
        if i & mask == 0 {
            let (a, b) = (v[i], v[i | mask]);
            v[i] = m[0][0] * a + m[0][1] * b;
            v[i | mask] = m[1][0] * a + m[1][1] * b;
        }
    }
}

/// `phase[z_a + 2 z_b]` on every basis state.
fn apply_diag2(v: &mut [C64], a: usize, b: usize, phase: &[C64; 4], conj_phase: bool) {
    for (i, x) in v.iter_mut().enumerate() {
        let k = (i >> a & 1) + 2 * (i >> b & 1);
        *x *= if conj_phase { phase[k].conj() } else { phase[k] };
    }
}

fn apply_cnot(v: &mut [C64], a: usize, b: usize) {
    let (ma, mb) = (1usize << a, 1usize << b);
    for i in 0..v.len() {
        if i & ma != 0 && i & mb == 0 {
            v.swap(i, i | mb);
        }
    }
}

struct Dense {
    n: usize,
    mixed: bool,
    /// Statevector, or `ρ` with index `row | col << n`.
    v: Vec<C64>,
}

impl Dense {
    fn new(n: usize, basis: Basis, mixed: bool) -> Self {
        let dim = 1usize << n;
        let len = if mixed { dim * dim } else { dim };
        let mut v = vec![c(0.0, 0.0); len];
        match basis {
            Basis::AllZero => v[0] = c(1.0, 0.0),
            Basis::AllPlus => {
                let amp = if mixed { 1.0 / dim as f64 } else { 1.0 / (dim as f64).sqrt() };
                v.iter_mut().for_each(|x| *x = c(amp, 0.0));
            }
        }
        Dense { n, mixed, v }
    }

    fn one(&mut self, q: usize, m: &M2) {
        apply_1q(&mut self.v, q, m);
        if self.mixed {
            apply_1q(&mut self.v, q + self.n, &conj(m));
        }
    }

    fn diag2(&mut self, a: usize, b: usize, phase: [C64; 4]) {
        apply_diag2(&mut self.v, a, b, &phase, false);
        if self.mixed {
            apply_diag2(&mut self.v, a + self.n, b + self.n, &phase, true);
        }
    }

    fn cnot(&mut self, a: usize, b: usize) {
        apply_cnot(&mut self.v, a, b);
        if self.mixed {
            apply_cnot(&mut self.v, a + self.n, b + self.n);
        }
    }

    fn gate(&mut self, g: &Gate) {
        let l = c(1.0, 0.0);
        match *g {
            Gate::Cz(a, b) => self.diag2(a, b, [l, l, l, -l]),
            Gate::ZzQuarter(a, b) => {
                let p = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                let m = p.conj();
                self.diag2(a, b, [p, m, m, p])
            }
            Gate::Cnot(a, b) => self.cnot(a, b),
            _ => {
                let m = matrix_of(g).expect("single-qubit gate");
                self.one(g.qubits()[0], &m)
            }
        }
    }

    /// `ρ ↦ Σ_k K_k ρ K_k†` on qubit `q`.
    fn kraus(&mut self, q: usize, ks: &[M2]) {
        let mut acc = vec![c(0.0, 0.0); self.v.len()];
        for k in ks {
            let mut t = self.v.clone();
            apply_1q(&mut t, q, k);
            apply_1q(&mut t, q + self.n, &conj(k));
            acc.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        }
        self.v = acc;
    }

    /// Distribution of X outcomes, outcome bit `q` at index bit `q`.
    fn x_distribution(mut self) -> Vec<f64> {
        let h = matrix_of(&Gate::H(0)).unwrap();
        for q in 0..self.n {
            self.one(q, &h);
        }
        let dim = 1usize << self.n;
        if self.mixed {
            (0..dim).map(|i| self.v[i | i << self.n].re).collect()
        } else {
            self.v.iter().map(|a| a.norm_sqr()).collect()
        }
    }
}

fn to_m2(m: &nalgebra::Matrix2<C64>) -> M2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Exact X-basis outcome distribution (`2^n` entries) of `circuit`.
pub fn dense_oracle(circuit: &Circuit) -> Result<Vec<f64>> {
    let n = circuit.n;
    let mixed = circuit.has_channels();
    let cap = if mixed { MAX_MIXED_QUBITS } else { MAX_PURE_QUBITS };
    if n == 0 || n > cap {
        return Err(CqcError::TooManyQubits(n));
    }
    let mut st = Dense::new(n, circuit.basis, mixed);
    let check = |q: usize| if q < n { Ok(()) } else { Err(CqcError::UnknownQubit(q)) };
    let sigma: Vec<M2> = paulis().iter().map(to_m2).collect();
    for op in &circuit.ops {
        match op {
            Op::Gate(g) => {
                let qs = g.qubits();
                qs.iter().try_for_each(|&q| check(q))?;
                if qs.len() == 2 && qs[0] == qs[1] {
                    return Err(CqcError::OutOfRange(format!("two-qubit gate on a single qubit {}", qs[0])));
                }
                st.gate(g)
            }
            Op::Noise { site, channel } => {
                check(*site)?;
                let ks: Vec<M2> = channel
                    .probs()
                    .iter()
                    .zip(&sigma)
                    .map(|(p, s)| s.map(|row| row.map(|x| x * p.sqrt())))
                    .collect();
                st.kraus(*site, &ks)
            }
            Op::Channel { site, channel } => {
                check(*site)?;
                channel.validate()?;
                let ks: Vec<M2> = channel.kraus().iter().map(to_m2).collect();
                st.kraus(*site, &ks)
            }
        }
    }
    Ok(st.x_distribution())
}

/// `P(X_q = +1)` for each qubit.
pub fn x_marginals(dist: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|q| dist.iter().enumerate().filter(|(i, _)| i >> q & 1 == 0).map(|(_, p)| p).sum()).collect()
}

/// Random Clifford circuit on `2..=n_max` qubits with one sampled Pauli
/// trajectory of a fixed channel inserted after every layer.
pub fn random_clifford_trajectory<R: Rng + ?Sized>(n_max: usize, rng: &mut R) -> Result<Circuit> {
    if n_max < 2 {
        return Err(CqcError::OutOfRange(format!("n_max = {n_max} < 2")));
    }
    let n = rng.gen_range(2..=n_max);
    let basis = if rng.gen() { Basis::AllPlus } else { Basis::AllZero };
    let noise = PauliChannel::new(0.7, 0.1, 0.1, 0.1)?;
    let mut c = Circuit::new(n, basis);
    for _ in 0..rng.gen_range(1..=12) {
        for a in 0..n {
            let b = (a + rng.gen_range(1..n)) % n;
            let g = match rng.gen_range(0..8) {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 => Gate::Sdg(a),
                3 => Gate::Cz(a, b),
                4 => Gate::Cnot(a, b),
                5 => Gate::ZzQuarter(a, b),
                6 => Gate::Rz(a, rng.gen_range(-3i32..=3) as f64 * std::f64::consts::FRAC_PI_4),
                _ => continue,
            };
            c.ops.push(Op::Gate(g));
        }
        for a in 0..n {
            if let Some(g) = Gate::pauli(a, Pauli::sample(&noise, rng)) {
                c.ops.push(Op::Gate(g));
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub cases: usize,
    pub max_qubits: usize,
    /// Largest `|P_tableau(X_q=+1) − P_dense(X_q=+1)|` over all cases and qubits.
    pub max_deviation: f64,
}

/// Compare tableau X-marginals with the dense oracle on `cases` random
/// circuits of at most `n_max` qubits.
pub fn oracle_check(cases: usize, n_max: usize, seed: u64) -> Result<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deviation: f64 = 0.0;
    let mut max_qubits = 0;
    for _ in 0..cases {
        let c = random_clifford_trajectory(n_max, &mut rng)?;
        let dense = x_marginals(&dense_oracle(&c)?, c.n);
        let mut t = c.run_tableau(&mut rng)?;
        for (q, d) in dense.iter().enumerate() {
            max_deviation = max_deviation.max((t.x_marginal(q) - d).abs());
        }
        max_qubits = max_qubits.max(c.n);
    }
    Ok(OracleCheck { cases, max_qubits, max_deviation })
}
