//! Convex decompositions of bond and input states by linear feasibility.

use super::bond::{concurrence, from_pauli_coords, pauli_coords, M4};
use crate::error::{CqcError, Result};
use crate::noise::C64;
use crate::stabilizer::Gate;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::OnceLock;

pub const NUM_TWO_QUBIT_STABILIZER_STATES: usize = 60;
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// A pure two-qubit stabilizer state with a Clifford preparation from |00⟩.
/// Amplitude index `2 b₀ + b₁`; gates act on local qubits 0 and 1.
#[derive(Debug, Clone)]
pub struct StabilizerState {
    pub id: usize,
    pub amplitudes: [C64; 4],
    pub coords: [f64; 16],
    pub prep: Vec<Gate>,
}

fn apply(g: &Gate, v: &[C64; 4]) -> [C64; 4] {
    let mut w = *v;
    let i = C64::new(0.0, 1.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // Local qubit 0 is the high bit.
    let pairs = |q: usize| if q == 0 { [(0, 2), (1, 3)] } else { [(0, 1), (2, 3)] };
    match *g {
        Gate::H(q) => {
            for (a, b) in pairs(q) {
                w[a] = (v[a] + v[b]) * h;
                w[b] = (v[a] - v[b]) * h;
            }
        }
        Gate::S(q) => {
            for (_, b) in pairs(q) {
                w[b] = v[b] * i;
            }
        }
        Gate::Cnot(0, 1) => w.swap(2, 3),
        _ => unreachable!("generator set"),
    }
    w
}

fn phase_key(v: &[C64; 4]) -> Vec<i64> {
    let lead = v.iter().find(|a| a.norm() > 1e-6).expect("normalized");
    let ph = lead.conj() / lead.norm();
    v.iter().flat_map(|a| {
        let b = a * ph;
        [(b.re * 1e6).round() as i64, (b.im * 1e6).round() as i64]
    })
    .collect()
}

fn vector_coords(v: &[C64; 4]) -> [f64; 16] {
    let psi = nalgebra::Vector4::from_column_slice(v);
    pauli_coords(&(psi * psi.adjoint())).map(|x| x.round())
}

/// All pure two-qubit stabilizer states, reached by breadth-first search over
/// `{H₀, H₁, S₀, S₁, CNOT₀₁}` from |00⟩.
pub fn two_qubit_stabilizer_states() -> &'static [StabilizerState] {
    static STATES: OnceLock<Vec<StabilizerState>> = OnceLock::new();
    STATES.get_or_init(|| {
        let gens = [Gate::H(0), Gate::H(1), Gate::S(0), Gate::S(1), Gate::Cnot(0, 1)];
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let start = [one, zero, zero, zero];
        let mut seen = HashMap::new();
        seen.insert(phase_key(&start), ());
        let mut out = vec![StabilizerState { id: 0, amplitudes: start, coords: vector_coords(&start), prep: vec![] }];
        let mut head = 0;
        while head < out.len() {
            let cur = out[head].clone();
            head += 1;
            for g in &gens {
                let v = apply(g, &cur.amplitudes);
                if seen.insert(phase_key(&v), ()).is_none() {
                    let mut prep = cur.prep.clone();
                    prep.push(*g);
                    out.push(StabilizerState { id: out.len(), amplitudes: v, coords: vector_coords(&v), prep });
                }
            }
        }
        out
    })
}

/// Bloch vectors of the six Pauli eigenstates: +X, −X, +Y, −Y, +Z, −Z.
pub const PAULI_EIGENSTATES: [[f64; 3]; 6] =
    [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];

/// Preparation of each Pauli eigenstate from |0⟩.
pub fn pauli_eigenstate_prep(id: usize, q: usize) -> Vec<Gate> {
    match id {
        0 => vec![Gate::H(q)],
        1 => vec![Gate::H(q), Gate::Z(q)],
        2 => vec![Gate::H(q), Gate::S(q)],
        3 => vec![Gate::H(q), Gate::Sdg(q)],
        4 => vec![],
        _ => vec![Gate::X(q)],
    }
}

/// The 26 directions `{−1,0,1}³ \ {0}`, normalized.
pub fn bloch_frame() -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(26);
    for x in -1..=1 {
        for y in -1..=1 {
            for z in -1..=1 {
                if (x, y, z) != (0, 0, 0) {
                    let n = ((x * x + y * y + z * z) as f64).sqrt();
                    out.push([x as f64 / n, y as f64 / n, z as f64 / n]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    Separable,
    StabilizerMixture,
    Entangled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Component {
    /// Product of two pure states given by Bloch vectors.
    Product { weight: f64, left: [f64; 3], right: [f64; 3] },
    /// Index into [`two_qubit_stabilizer_states`].
    Stabilizer { weight: f64, id: usize },
}

impl Component {
    pub fn weight(&self) -> f64 {
        match *self {
            Component::Product { weight, .. } | Component::Stabilizer { weight, .. } => weight,
        }
    }

    pub fn coords(&self) -> [f64; 16] {
        match self {
            Component::Product { left, right, .. } => product_coords(left, right),
            Component::Stabilizer { id, .. } => two_qubit_stabilizer_states()[*id].coords,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondDecomposition {
    pub kind: DecompositionKind,
    pub components: Vec<Component>,
}

impl BondDecomposition {
    pub fn reconstruct(&self) -> M4 {
        let mut r = [0.0; 16];
        for c in &self.components {
            for (acc, x) in r.iter_mut().zip(c.coords()) {
                *acc += c.weight() * x;
            }
        }
        from_pauli_coords(&r)
    }
}

fn product_coords(u: &[f64; 3], v: &[f64; 3]) -> [f64; 16] {
    let a = [1.0, u[0], u[1], u[2]];
    let b = [1.0, v[0], v[1], v[2]];
    let mut r = [0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            r[4 * i + j] = a[i] * b[j];
        }
    }
    r
}

/// Nonnegative weights `w` with `Σ_k w_k points[k] = target`; the first
/// coordinate of every point is 1, so the weights sum to `target[0]`.
fn convex_weights(points: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (row, &t) in target.iter().enumerate() {
        let terms: Vec<_> = vars.iter().zip(points).filter(|(_, p)| p[row] != 0.0).map(|(&v, p)| (v, p[row])).collect();
        if terms.is_empty() {
            if t.abs() > RECONSTRUCTION_TOL {
                return Err(CqcError::Infeasible(format!("coordinate {row} unreachable")));
            }
            continue;
        }
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, t);
    }
    let sol = lp.solve().map_err(|e| CqcError::Infeasible(e.to_string()))?;
    let mut w: Vec<f64> = vars.iter().map(|&v| sol[v].max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let worst = (0..target.len())
        .map(|row| (points.iter().zip(&w).map(|(p, x)| p[row] * x).sum::<f64>() - target[row]).abs())
        .fold(0.0, f64::max);
    if worst > RECONSTRUCTION_TOL {
        return Err(CqcError::Infeasible(format!("reconstruction error {worst:.2e}")));
    }
    Ok(w)
}

fn check_density(rho: &M4) -> Result<[f64; 16]> {
    let r = pauli_coords(rho);
    if (r[0] - 1.0).abs() > 1e-10 {
        return Err(CqcError::OutOfRange(format!("trace {}", r[0])));
    }
    Ok(r)
}

/// Convex decomposition over the 60 pure two-qubit stabilizer states.
pub fn stabilizer_decompose(rho: &M4) -> Result<BondDecomposition> {
    let target = check_density(rho)?;
    let states = two_qubit_stabilizer_states();
    let points: Vec<Vec<f64>> = states.iter().map(|s| s.coords.to_vec()).collect();
    let w = convex_weights(&points, &target)?;
    let components = w
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 1e-13)
        .map(|(id, &weight)| Component::Stabilizer { weight, id })
        .collect();
    Ok(BondDecomposition { kind: DecompositionKind::StabilizerMixture, components })
}

/// Weights over the six Pauli eigenstates (order of [`PAULI_EIGENSTATES`]).
pub fn stabilizer_decompose_qubit(bloch: [f64; 3]) -> Result<Vec<(f64, usize)>> {
    let points: Vec<Vec<f64>> = PAULI_EIGENSTATES.iter().map(|b| vec![1.0, b[0], b[1], b[2]]).collect();
    let w = convex_weights(&points, &[1.0, bloch[0], bloch[1], bloch[2]])?;
    Ok(w.into_iter().enumerate().filter(|(_, x)| *x > 1e-13).map(|(i, x)| (x, i)).collect())
}

/// Convex decomposition over products of the 26-point Bloch frame on each
/// side. Fails when the state is entangled or too close to the separable
/// boundary for the frame to resolve.
pub fn separable_decompose(rho: &M4) -> Result<BondDecomposition> {
    let target = check_density(rho)?;
    let frame = bloch_frame();
    let mut pairs = Vec::with_capacity(frame.len() * frame.len());
    for u in &frame {
        for v in &frame {
            pairs.push((*u, *v));
        }
    }
    let points: Vec<Vec<f64>> = pairs.iter().map(|(u, v)| product_coords(u, v).to_vec()).collect();
    let w = convex_weights(&points, &target)?;
    let components = w
        .iter()
        .zip(&pairs)
        .filter(|(&x, _)| x > 1e-13)
        .map(|(&weight, &(left, right))| Component::Product { weight, left, right })
        .collect();
    Ok(BondDecomposition { kind: DecompositionKind::Separable, components })
}

/// Stabilizer mixture if possible, else a frame-resolved separable mixture,
/// else `Entangled` with no components.
pub fn decompose_bond(rho: &M4) -> Result<BondDecomposition> {
    if let Ok(d) = stabilizer_decompose(rho) {
        return Ok(d);
    }
    if concurrence(rho)? < 1e-12 {
        if let Ok(d) = separable_decompose(rho) {
            return Ok(d);
        }
    }
    Ok(BondDecomposition { kind: DecompositionKind::Entangled, components: vec![] })
}
