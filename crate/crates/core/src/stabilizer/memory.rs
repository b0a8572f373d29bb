//! Postselected memory experiment under face dephasing.
//!
//! A Z error on a face flips the parities of its two cells, so error sets
//! with every `S_u = +1` are cycles on the dual graph (cells joined through
//! faces). A trial fails when its cycle crosses the plane of z-normal faces
//! at `z = 0` an odd number of times.

use crate::error::{CqcError, Result};
use crate::lattice::{Boundary, QubitId, QubitKind, Region, RhgLattice};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Below this many accepted rejection trials the logical rate comes from
/// the conditional chain instead.
pub const MIN_ACCEPTED: u64 = 2000;
const CHUNK: u64 = 4096;
const BATCHES: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryMethod {
    Rejection,
    ConditionalMcmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryResult {
    pub postselect_rate: f64,
    pub accepted: u64,
    pub logical_error_rate: f64,
    pub std_error: f64,
    pub method: MemoryMethod,
}

struct DualGraph {
    faces: Vec<QubitId>,
    /// Both cells of each face.
    ends: Vec<[usize; 2]>,
    cut: Vec<bool>,
    normal: Vec<usize>,
    cells: usize,
    /// Four faces around each edge.
    plaquettes: Vec<[usize; 4]>,
    /// Straight non-contractible face lines.
    lines: Vec<Vec<usize>>,
}

fn normal_axis(c: [i32; 3]) -> usize {
    (0..3).find(|&a| c[a].rem_euclid(2) == 0).expect("face has one even coordinate")
}

impl DualGraph {
    fn new(lat: &RhgLattice) -> Result<Self> {
        if lat.boundary() != Boundary::Periodic {
            return Err(CqcError::OutOfRange("memory experiment needs a periodic lattice".into()));
        }
        if lat.dims().iter().any(|&d| d < 2) {
            return Err(CqcError::OutOfRange(format!("dims {:?} must all be at least 2", lat.dims())));
        }
        if lat.regions().iter().any(|&r| r != Region::Vacuum) {
            return Err(CqcError::InvalidSite("memory experiment needs a defect-free lattice".into()));
        }
        let faces: Vec<QubitId> = (0..lat.num_qubits()).filter(|&q| lat.kind(q) == QubitKind::Face).collect();
        let mut index = vec![usize::MAX; lat.num_qubits()];
        for (i, &f) in faces.iter().enumerate() {
            index[f] = i;
        }
        let mut ends = Vec::with_capacity(faces.len());
        let mut cut = Vec::with_capacity(faces.len());
        let mut normal = Vec::with_capacity(faces.len());
        let mut line_map: BTreeMap<(usize, [i32; 3]), Vec<usize>> = BTreeMap::new();
        for (i, &f) in faces.iter().enumerate() {
            let cs = lat.cells_of_face(f);
            if cs.len() != 2 {
                return Err(CqcError::InvalidSite(format!("face {f} borders {} cells", cs.len())));
            }
            ends.push([cs[0], cs[1]]);
            let c = lat.coord(f);
            let a = normal_axis(c);
            normal.push(a);
            cut.push(a == 2 && c[2] == 0);
            let mut key = c;
            key[a] = 0;
            line_map.entry((a, key)).or_default().push(i);
        }
        let plaquettes = (0..lat.num_qubits())
            .filter(|&q| lat.kind(q) == QubitKind::Edge)
            .map(|e| {
                let nb = lat.adjacency(e)?;
                let mut p = [0; 4];
                if nb.len() != 4 {
                    return Err(CqcError::InvalidSite(format!("edge {e} has {} faces", nb.len())));
                }
                for (k, &f) in nb.iter().enumerate() {
                    p[k] = index[f];
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DualGraph {
            faces,
            ends,
            cut,
            normal,
            cells: lat.cells().len(),
            plaquettes,
            lines: line_map.into_values().collect(),
        })
    }

    fn crossing(&self, err: &[bool]) -> bool {
        err.iter().zip(&self.cut).filter(|(e, c)| **e && **c).count() % 2 == 1
    }

    fn syndrome_free(&self, err: &[bool], scratch: &mut [bool]) -> bool {
        scratch.fill(false);
        for (i, &e) in err.iter().enumerate() {
            if e {
                scratch[self.ends[i][0]] ^= true;
                scratch[self.ends[i][1]] ^= true;
            }
        }
        scratch.iter().all(|&s| !s)
    }
}

fn rejection(g: &DualGraph, q: f64, trials: u64, seed: u64) -> (u64, u64) {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(trials - c * CHUNK);
            let mut err = vec![false; g.faces.len()];
            let mut scratch = vec![false; g.cells];
            let (mut acc, mut fail) = (0u64, 0u64);
            for _ in 0..n {
                err.iter_mut().for_each(|e| *e = rng.gen::<f64>() < q);
                if g.syndrome_free(&err, &mut scratch) {
                    acc += 1;
                    fail += g.crossing(&err) as u64;
                }
            }
            (acc, fail)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Metropolis chain on cycles with weight `t^|E|`, `t = q/(1−q)`.
/// Returns the failure fraction and its batch-means standard error.
fn conditional_chain(g: &DualGraph, q: f64, sweeps: u64, seed: u64) -> (f64, f64) {
    let t = q / (1.0 - q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut err = vec![false; g.faces.len()];
    let moves = g.plaquettes.len() + g.lines.len();
    let step = |err: &mut Vec<bool>, rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(0..moves);
        let set: &[usize] = if k < g.plaquettes.len() { &g.plaquettes[k] } else { &g.lines[k - g.plaquettes.len()] };
        let on = set.iter().filter(|&&f| err[f]).count() as i32;
        let delta = set.len() as i32 - 2 * on;
        if delta <= 0 || rng.gen::<f64>() < t.powi(delta) {
            for &f in set {
                err[f] ^= true;
            }
        }
    };
    let burn = (sweeps / 10).max(200);
    for _ in 0..burn * moves as u64 {
        step(&mut err, &mut rng);
    }
    let per_batch = (sweeps / BATCHES).max(1);
    let mut batch_means = Vec::with_capacity(BATCHES as usize);
    for _ in 0..BATCHES {
        let mut fails = 0u64;
        for _ in 0..per_batch {
            for _ in 0..moves {
                step(&mut err, &mut rng);
            }
            fails += g.crossing(&err) as u64;
        }
        batch_means.push(fails as f64 / per_batch as f64);
    }
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Rejection-sample `trials` error patterns for the postselection rate;
/// the logical rate uses the accepted trials when there are enough of them
/// and otherwise a chain of `trials` sweeps on the postselected ensemble.
pub fn postselected_memory_experiment(lattice: &RhgLattice, q: f64, trials: u64, seed: u64) -> Result<MemoryResult> {
    if !(0.0..1.0).contains(&q) {
        return Err(CqcError::OutOfRange(format!("dephasing rate {q}")));
    }
    if trials == 0 {
        return Err(CqcError::OutOfRange("zero trials".into()));
    }
    let g = DualGraph::new(lattice)?;
    let (accepted, fails) = rejection(&g, q, trials, seed);
    let postselect_rate = accepted as f64 / trials as f64;
    if q == 0.0 {
        return Ok(MemoryResult { postselect_rate, accepted, logical_error_rate: 0.0, std_error: 0.0, method: MemoryMethod::Rejection });
    }
    if accepted >= MIN_ACCEPTED {
        let p = fails as f64 / accepted as f64;
        return Ok(MemoryResult {
            postselect_rate,
            accepted,
            logical_error_rate: p,
            std_error: (p * (1.0 - p) / accepted as f64).sqrt(),
            method: MemoryMethod::Rejection,
        });
    }
    let (p, se) = conditional_chain(&g, q, trials.max(BATCHES), seed);
    Ok(MemoryResult { postselect_rate, accepted, logical_error_rate: p, std_error: se, method: MemoryMethod::ConditionalMcmc })
}

/// Largest `Lx·Ly` the transfer-matrix oracle accepts.
pub const MAX_LAYER_CELLS: usize = 10;

/// Exact `(postselect_rate, logical_error_rate)` from the Ising
/// high-temperature expansion: with `s_u = ±1` on cells,
/// `Σ_s Π_faces (1 + J_f t s_u s_v) = 2^V Σ_cycles t^|C| Π_{f∈C} J_f`,
/// so flipping `J` on the cut plane gives the crossing-parity bias.
pub fn exact_memory_rates(lattice: &RhgLattice, q: f64) -> Result<(f64, f64)> {
    let g = DualGraph::new(lattice)?;
    let [lx, ly, lz] = lattice.dims();
    if lx * ly > MAX_LAYER_CELLS {
        return Err(CqcError::TooManyQubits(lx * ly));
    }
    let t = q / (1.0 - q);
    let cell_pos = |c: usize| {
        let [i, j, k] = lattice.cell_ijk(c);
        (i as usize + lx * j as usize, k as usize)
    };
    let states = 1usize << (lx * ly);
    let spin = |a: usize, p: usize| if a >> p & 1 == 1 { -1.0 } else { 1.0 };

    let mut z = [0.0f64; 2];
    for (s, zs) in z.iter_mut().enumerate() {
        let mut prod = DMatrix::<f64>::identity(states, states);
        for layer in 0..lz {
            let mut tm = DMatrix::<f64>::from_element(states, states, 1.0);
            for (f, &[u, v]) in g.ends.iter().enumerate() {
                let (pu, ku) = cell_pos(u);
                let (pv, _) = cell_pos(v);
                let j = if s == 1 && g.cut[f] { -1.0 } else { 1.0 };
                if g.normal[f] != 2 {
                    if ku != layer {
                        continue;
                    }
                    for a in 0..states {
                        let w = 1.0 + j * t * spin(a, pu) * spin(a, pv);
                        tm.row_mut(a).scale_mut(w);
                    }
                } else {
                    // z-normal face joining this layer to the next.
                    let c = lattice.coord(g.faces[f])[2] as usize / 2;
                    if c != (layer + 1) % lz {
                        continue;
                    }
                    let p = if ku == layer { pu } else { pv };
                    for a in 0..states {
                        for b in 0..states {
                            tm[(a, b)] *= 1.0 + j * t * spin(a, p) * spin(b, p);
                        }
                    }
                }
            }
            prod = prod * tm;
        }
        *zs = prod.trace();
    }
    let v = g.cells as f64;
    let n = g.faces.len() as f64;
    let postselect = (1.0 - q).powf(n) * z[0] / 2f64.powf(v);
    Ok((postselect, (1.0 - z[1] / z[0]) / 2.0))
}
