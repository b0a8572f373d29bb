//! Circuit descriptions, randomized input compilation, and the noisy
//! cluster-state circuit run by Pauli-frame sampling.

use super::tableau::{Basis, Pauli, StabilizerTableau};
use crate::error::{CqcError, Result};
use crate::lattice::{QubitId, Region, RhgLattice};
use crate::noise::{CptpSpec, PauliChannel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cz(usize, usize),
    Cnot(usize, usize),
    /// `exp(iπ/4 Z⊗Z)`.
    ZzQuarter(usize, usize),
    /// `exp(iθZ)`; Clifford only for multiples of π/4.
    Rz(usize, f64),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(a) | Gate::S(a) | Gate::Sdg(a) | Gate::X(a) | Gate::Y(a) | Gate::Z(a) | Gate::Rz(a, _) => vec![a],
            Gate::Cz(a, b) | Gate::Cnot(a, b) | Gate::ZzQuarter(a, b) => vec![a, b],
        }
    }

    /// Same gate with every qubit index passed through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::H(a) => Gate::H(f(a)),
            Gate::S(a) => Gate::S(f(a)),
            Gate::Sdg(a) => Gate::Sdg(f(a)),
            Gate::X(a) => Gate::X(f(a)),
            Gate::Y(a) => Gate::Y(f(a)),
            Gate::Z(a) => Gate::Z(f(a)),
            Gate::Rz(a, t) => Gate::Rz(f(a), t),
            Gate::Cz(a, b) => Gate::Cz(f(a), f(b)),
            Gate::Cnot(a, b) => Gate::Cnot(f(a), f(b)),
            Gate::ZzQuarter(a, b) => Gate::ZzQuarter(f(a), f(b)),
        }
    }

    pub fn pauli(site: usize, p: Pauli) -> Option<Gate> {
        match p {
            Pauli::I => None,
            Pauli::X => Some(Gate::X(site)),
            Pauli::Y => Some(Gate::Y(site)),
            Pauli::Z => Some(Gate::Z(site)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Op {
    Gate(Gate),
    /// Stochastic Pauli channel on one qubit.
    Noise { site: usize, channel: PauliChannel },
    /// General single-qubit channel; only the dense oracle accepts it.
    Channel { site: usize, channel: CptpSpec },
}

/// A circuit on `n` qubits starting from a product basis state and ending
/// with X-basis measurement of every qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub basis: Basis,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n: usize, basis: Basis) -> Self {
        Circuit { n, basis, ops: Vec::new() }
    }

    pub fn gate(mut self, g: Gate) -> Self {
        self.ops.push(Op::Gate(g));
        self
    }

    pub fn has_channels(&self) -> bool {
        self.ops.iter().any(|op| !matches!(op, Op::Gate(_)))
    }

    /// One trajectory: Pauli channels are sampled, general channels rejected.
    pub fn run_tableau<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StabilizerTableau> {
        let mut t = StabilizerTableau::new(self.n, self.basis)?;
        for op in &self.ops {
            match op {
                Op::Gate(g) => t.apply_gate(g)?,
                Op::Noise { site, channel } => {
                    t.apply_pauli_noise(channel, *site, rng)?;
                }
                Op::Channel { .. } => {
                    return Err(CqcError::InvalidChannel("tableau path needs a Pauli channel; twirl first".into()))
                }
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum InputState {
    Zero,
    Plus,
    /// `exp(iθZ)|+⟩`.
    Rotated { theta: f64 },
}

/// Inputs after randomized compilation: qubit `j` is prepared as
/// `X^ξ_j Z^ν̄_j |input_j⟩`, and its outcome is read as `m ⊕ ν_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledInputs {
    pub inputs: Vec<InputState>,
    pub xi: Vec<bool>,
    pub nu_bar: Vec<bool>,
    pub nu: Vec<bool>,
}

pub fn compile_with_masks(
    inputs: &[InputState],
    neighbors: &[Vec<QubitId>],
    xi: &[bool],
    nu: &[bool],
) -> Result<CompiledInputs> {
    let n = inputs.len();
    if neighbors.len() != n || xi.len() != n || nu.len() != n {
        return Err(CqcError::OutOfRange(format!(
            "adjacency/masks sized {}/{}/{} for {n} inputs",
            neighbors.len(),
            xi.len(),
            nu.len()
        )));
    }
    let mut nu_bar = nu.to_vec();
    for (j, nb) in neighbors.iter().enumerate() {
        for &k in nb {
            if k >= n {
                return Err(CqcError::UnknownQubit(k));
            }
            nu_bar[j] ^= xi[k];
        }
    }
    Ok(CompiledInputs { inputs: inputs.to_vec(), xi: xi.to_vec(), nu_bar, nu: nu.to_vec() })
}

/// Draw `ξ, ν` uniformly from a generator keyed by `seed`.
pub fn compile_randomized_inputs(inputs: &[InputState], neighbors: &[Vec<QubitId>], seed: u64) -> Result<CompiledInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi: Vec<bool> = (0..inputs.len()).map(|_| rng.gen()).collect();
    let nu: Vec<bool> = (0..inputs.len()).map(|_| rng.gen()).collect();
    compile_with_masks(inputs, neighbors, &xi, &nu)
}

/// Weights on the eigenstates `+X, −X, +Y, −Y, +Z, −Z` reproducing a Bloch
/// vector inside the octahedron.
pub fn pauli_mixture(bloch: [f64; 3]) -> Result<[f64; 6]> {
    let l1: f64 = bloch.iter().map(|v| v.abs()).sum();
    if !(l1 <= 1.0 + 1e-12) {
        return Err(CqcError::OutsideOctahedron(l1));
    }
    let mut w = [0.0; 6];
    for (a, &v) in bloch.iter().enumerate() {
        w[2 * a] = v.max(0.0);
        w[2 * a + 1] = (-v).max(0.0);
    }
    let rest = (1.0 - l1).max(0.0) / 2.0;
    w[4] += rest;
    w[5] += rest;
    Ok(w)
}

/// Mixture for `exp(iθZ)|+⟩` after dephasing `q`.
pub fn octahedron_mixture(theta: f64, q: f64) -> Result<[f64; 6]> {
    if !(0.0..=1.0).contains(&q) {
        return Err(CqcError::OutOfRange(format!("dephasing rate {q}")));
    }
    let s = 1.0 - 2.0 * q;
    pauli_mixture([s * (2.0 * theta).cos(), -s * (2.0 * theta).sin(), 0.0])
}

/// A noisy run of the depth-four cluster-state circuit.
#[derive(Debug, Clone)]
pub struct CircuitRun {
    pub lattice: RhgLattice,
    pub inputs: Vec<InputState>,
    /// Post-gate channel per qubit.
    pub noise: Vec<PauliChannel>,
    pub seed: u64,
    /// Apply the `X^ξ Z^ν̄` input randomization and reinterpret outcomes.
    pub randomize: bool,
}

impl CircuitRun {
    pub fn new(lattice: RhgLattice, inputs: Vec<InputState>, noise: Vec<PauliChannel>, seed: u64) -> Result<Self> {
        let n = lattice.num_qubits();
        if inputs.len() != n || noise.len() != n {
            return Err(CqcError::OutOfRange(format!(
                "{} inputs and {} channels for {n} qubits",
                inputs.len(),
                noise.len()
            )));
        }
        for (q, inp) in inputs.iter().enumerate() {
            if matches!(inp, InputState::Rotated { .. }) && lattice.region(q) == Region::Defect {
                return Err(CqcError::InvalidSite(format!("rotated input on defect qubit {q}")));
            }
        }
        Ok(CircuitRun { lattice, inputs, noise, seed, randomize: false })
    }

    /// Every qubit in `|+⟩` with the same post-gate channel.
    pub fn uniform(lattice: RhgLattice, channel: PauliChannel, seed: u64) -> Result<Self> {
        let n = lattice.num_qubits();
        Self::new(lattice, vec![InputState::Plus; n], vec![channel; n], seed)
    }

    pub fn with_randomization(mut self, on: bool) -> Self {
        self.randomize = on;
        self
    }
}

/// One shot of a [`CircuitRun`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    /// Raw X outcomes, `true` for eigenvalue −1.
    pub outcomes: Vec<bool>,
    /// The `ν` mask.
    pub reinterpretation: Vec<bool>,
    pub reinterpreted: Vec<bool>,
    /// `S_u = ±1` per cell.
    pub parities: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Axis {
    X,
    Y,
    Z,
}

const CACHE_LIMIT: usize = 6;

struct FrameSimulator<'a> {
    run: &'a CircuitRun,
    neighbors: Vec<Vec<QubitId>>,
    rotated: Vec<usize>,
    mixtures: Vec<[f64; 6]>,
    cache: Mutex<HashMap<Vec<Axis>, Arc<Vec<bool>>>>,
}

impl<'a> FrameSimulator<'a> {
    fn new(run: &'a CircuitRun) -> Result<Self> {
        let lat = &run.lattice;
        let neighbors = (0..lat.num_qubits()).map(|q| lat.adjacency(q).map(|a| a.to_vec())).collect::<Result<Vec<_>>>()?;
        let mut rotated = Vec::new();
        let mut mixtures = Vec::new();
        for (q, inp) in run.inputs.iter().enumerate() {
            if let InputState::Rotated { theta } = *inp {
                let ch = run.noise[q];
                rotated.push(q);
                mixtures.push(octahedron_mixture(theta, ch.p_y + ch.p_z)?);
            }
        }
        Ok(FrameSimulator { run, neighbors, rotated, mixtures, cache: Mutex::new(HashMap::new()) })
    }

    /// A noiseless X-basis sample for the given axes of the rotated qubits.
    fn reference(&self, axes: &[Axis]) -> Result<Arc<Vec<bool>>> {
        if self.rotated.len() <= CACHE_LIMIT {
            if let Some(r) = self.cache.lock().unwrap().get(axes) {
                return Ok(r.clone());
            }
        }
        let lat = &self.run.lattice;
        let n = lat.num_qubits();
        let mut axis = vec![Axis::X; n];
        for (q, inp) in self.run.inputs.iter().enumerate() {
            if *inp == InputState::Zero {
                axis[q] = Axis::Z;
            }
        }
        for (&q, &a) in self.rotated.iter().zip(axes) {
            axis[q] = a;
        }
        let mut t = StabilizerTableau::new(n, Basis::AllPlus)?;
        for (q, a) in axis.iter().enumerate() {
            match a {
                Axis::X => {}
                Axis::Y => t.s(q),
                Axis::Z => t.h(q),
            }
        }
        for layer in lat.gate_schedule() {
            for (a, b) in layer {
                t.cz(a, b);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sample: Vec<bool> = (0..n).map(|q| t.measure_x(q, &mut rng)).collect();
        let sample = Arc::new(sample);
        if self.rotated.len() <= CACHE_LIMIT {
            self.cache.lock().unwrap().insert(axes.to_vec(), sample.clone());
        }
        Ok(sample)
    }

    fn shot(&self, shot: u64) -> Result<Shot> {
        let run = self.run;
        let lat = &run.lattice;
        let n = lat.num_qubits();
        let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
        rng.set_stream(shot);

        let mut fx = vec![false; n];
        let mut fz = vec![false; n];
        let mut axes = Vec::with_capacity(self.rotated.len());
        let mut rot_iter = self.rotated.iter().zip(&self.mixtures).peekable();
        for q in 0..n {
            let (axis, minus) = match run.inputs[q] {
                InputState::Zero => (Axis::Z, false),
                InputState::Plus => (Axis::X, false),
                InputState::Rotated { .. } => {
                    let (_, w) = rot_iter.next().expect("rotated list in qubit order");
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut k = 5;
                    for (i, wi) in w.iter().enumerate() {
                        acc += wi;
                        if u < acc {
                            k = i;
                            break;
                        }
                    }
                    let axis = [Axis::X, Axis::Y, Axis::Z][k / 2];
                    axes.push(axis);
                    (axis, k % 2 == 1)
                }
            };
            // Random stabilizer of the input, so the frame carries the
            // measurement randomness.
            let r: bool = rng.gen();
            match axis {
                Axis::X => fx[q] ^= r,
                Axis::Z => fz[q] ^= r,
                Axis::Y => {
                    fx[q] ^= r;
                    fz[q] ^= r;
                }
            }
            if minus {
                match axis {
                    Axis::X | Axis::Y => fz[q] ^= true,
                    Axis::Z => fx[q] ^= true,
                }
            }
        }

        let mut nu = vec![false; n];
        if run.randomize {
            let xi: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            for v in nu.iter_mut() {
                *v = rng.gen();
            }
            let compiled = compile_with_masks(&run.inputs, &self.neighbors, &xi, &nu)?;
            for q in 0..n {
                fx[q] ^= compiled.xi[q];
                fz[q] ^= compiled.nu_bar[q];
            }
        }

        // CZ maps X_j to X_j Z_{N(j)}; the Z frame is untouched.
        let mut out_z = fz;
        for (q, nb) in self.neighbors.iter().enumerate() {
            for &k in nb {
                out_z[q] ^= fx[k];
            }
        }

        for q in 0..n {
            if matches!(run.inputs[q], InputState::Rotated { .. }) {
                continue;
            }
            let (_, z) = Pauli::sample(&run.noise[q], &mut rng).bits();
            out_z[q] ^= z;
        }

        let reference = self.reference(&axes)?;
        let outcomes: Vec<bool> = (0..n).map(|q| reference[q] ^ out_z[q]).collect();
        let reinterpreted: Vec<bool> = outcomes.iter().zip(&nu).map(|(m, v)| m ^ v).collect();
        let parities = lat
            .cells()
            .iter()
            .map(|c| if c.faces.iter().filter(|&&f| reinterpreted[f]).count() % 2 == 0 { 1 } else { -1 })
            .collect();
        Ok(Shot { outcomes, reinterpretation: nu, reinterpreted, parities })
    }
}

/// Sample shot number `shot` of `run`.
pub fn run_noisy_circuit(run: &CircuitRun, shot: u64) -> Result<Shot> {
    FrameSimulator::new(run)?.shot(shot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityStats {
    pub mean: f64,
    /// Standard error from the spread of per-shot means.
    pub std_error: f64,
    pub shots: u64,
    pub cells: usize,
}

/// Mean of `S_u` over all cells and `shots` shots, run in parallel.
pub fn parity_statistics(run: &CircuitRun, shots: u64) -> Result<ParityStats> {
    if shots < 2 {
        return Err(CqcError::OutOfRange("need at least two shots".into()));
    }
    let sim = FrameSimulator::new(run)?;
    let cells = run.lattice.cells().len();
    if cells == 0 {
        return Err(CqcError::OutOfRange("lattice has no cells".into()));
    }
    // Integer accumulation keeps the result independent of scheduling.
    let (sum, sum_sq) = (0..shots)
        .into_par_iter()
        .map(|s| {
            let shot = sim.shot(s)?;
            let t: i64 = shot.parities.iter().map(|&p| p as i64).sum();
            Ok::<_, CqcError>((t as i128, (t as i128) * (t as i128)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let c = cells as f64;
    let n = shots as f64;
    let mean_t = sum as f64 / n;
    let var_t = (sum_sq as f64 - n * mean_t * mean_t) / (n - 1.0);
    Ok(ParityStats { mean: mean_t / c, std_error: (var_t.max(0.0) / n).sqrt() / c, shots, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, RegionSpec};
    use crate::noise::CptpSpec;
    use num_complex::Complex64 as C;
    use std::f64::consts::PI;

    fn cube(l: usize) -> RhgLattice {
        RhgLattice::new([l; 3], Boundary::Periodic, &RegionSpec::default()).unwrap()
    }

    #[test]
    fn compile_trivial_cases() {
        let inputs = [InputState::Rotated { theta: 0.3 }];
        let c = compile_with_masks(&inputs, &[vec![]], &[false], &[false]).unwrap();
        assert_eq!((c.xi[0], c.nu_bar[0], c.nu[0]), (false, false, false));
        let c = compile_with_masks(&inputs, &[vec![]], &[true], &[false]).unwrap();
        assert_eq!((c.xi[0], c.nu_bar[0], c.nu[0]), (true, false, false));
        assert!(compile_with_masks(&inputs, &[vec![1]], &[true], &[false]).is_err());

        let two = [InputState::Plus, InputState::Plus];
        let c = compile_with_masks(&two, &[vec![1], vec![0]], &[true, false], &[false, false]).unwrap();
        assert_eq!(c.nu_bar, vec![false, true]);
    }

    #[test]
    fn mixtures() {
        let w = octahedron_mixture(0.0, 0.0).unwrap();
        assert_eq!(w, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let w = octahedron_mixture(PI / 8.0, 0.146447).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(octahedron_mixture(PI / 8.0, 0.10), Err(CqcError::OutsideOctahedron(_))));
    }

    #[test]
    fn noiseless_parities_are_even() {
        let run = CircuitRun::uniform(cube(2), PauliChannel::identity(), 11).unwrap();
        for s in 0..20 {
            let shot = run_noisy_circuit(&run, s).unwrap();
            assert!(shot.parities.iter().all(|&p| p == 1));
        }
        let run = run.with_randomization(true);
        for s in 0..20 {
            assert!(run_noisy_circuit(&run, s).unwrap().parities.iter().all(|&p| p == 1));
        }
    }

    #[test]
    fn single_face_error_flips_two_cells() {
        let lat = cube(3);
        let face = lat.cells()[5].faces[3];
        let mut noise = vec![PauliChannel::identity(); lat.num_qubits()];
        noise[face] = PauliChannel::dephasing(1.0).unwrap();
        let expected: Vec<usize> = lat.cells_of_face(face);
        let inputs = vec![InputState::Plus; lat.num_qubits()];
        let run = CircuitRun::new(lat, inputs, noise, 5).unwrap();
        let shot = run_noisy_circuit(&run, 0).unwrap();
        let flipped: Vec<usize> = (0..shot.parities.len()).filter(|&c| shot.parities[c] == -1).collect();
        assert_eq!(flipped, expected);
        assert_eq!(flipped.len(), 2);
    }

    #[test]
    fn reproducible_shots() {
        let run = CircuitRun::uniform(cube(2), PauliChannel::dephasing(0.2).unwrap(), 42).unwrap();
        assert_eq!(run_noisy_circuit(&run, 3).unwrap(), run_noisy_circuit(&run, 3).unwrap());
        assert_ne!(run_noisy_circuit(&run, 3).unwrap(), run_noisy_circuit(&run, 4).unwrap());
    }

    #[test]
    fn parity_mean_matches_dephasing() {
        for q in [0.0, 0.05, 0.25, 0.4] {
            let run = CircuitRun::uniform(cube(2), PauliChannel::dephasing(q).unwrap(), 9).unwrap();
            let st = parity_statistics(&run, 20_000).unwrap();
            let exact = (1.0 - 2.0 * q).powi(6);
            assert!((st.mean - exact).abs() <= 3.0 * st.std_error + 1e-12, "q={q} {st:?}");
        }
    }

    #[test]
    fn rotated_inputs_reproduce_magic_parity() {
        // A π/8 rotated face qubit with dephasing at the octahedron edge:
        // ⟨X⟩ = (1−2q)cos(π/4) on it, so ⟨S_u⟩ carries that factor for both cells.
        let lat = cube(2);
        let q = 0.15;
        let n = lat.num_qubits();
        let face = lat.cells()[0].faces[0];
        let mut inputs = vec![InputState::Plus; n];
        inputs[face] = InputState::Rotated { theta: PI / 8.0 };
        let mut noise = vec![PauliChannel::identity(); n];
        noise[face] = PauliChannel::dephasing(q).unwrap();
        let run = CircuitRun::new(lat.clone(), inputs, noise, 3).unwrap().with_randomization(true);
        let sim = FrameSimulator::new(&run).unwrap();
        let shots = 40_000;
        let cells = lat.cells_of_face(face);
        let mut sum = 0.0;
        for s in 0..shots {
            sum += sim.shot(s).unwrap().parities[cells[0]] as f64;
        }
        let mean = sum / shots as f64;
        let exact = (1.0 - 2.0 * q) * (PI / 4.0).cos();
        assert!((mean - exact).abs() < 4.0 / (shots as f64).sqrt(), "{mean} vs {exact}");
    }

    #[test]
    fn tableau_path_rejects_general_channel() {
        let id = C::new(1.0, 0.0);
        let z = C::new(0.0, 0.0);
        let chan = CptpSpec::new(vec![[id, z, z, z]]).unwrap();
        let mut c = Circuit::new(1, Basis::AllPlus);
        c.ops.push(Op::Channel { site: 0, channel: chan });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(c.run_tableau(&mut rng).is_err());
    }
}
