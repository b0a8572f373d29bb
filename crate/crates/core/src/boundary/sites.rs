//! Square lattices of circuit qubits joined by dephased bonds.

use super::bond::{bond_density_matrix, input_factor, separable_factor, stabilizer_factor, BondState};
use crate::error::{CqcError, Result};
use crate::noise::C64;
use serde::{Deserialize, Serialize};

pub const MAX_ORACLE_SITES: usize = 12;
const SPLIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMode {
    SeparableMps,
    StabilizerMixture,
}

/// Input `exp(iαZ)|+⟩` followed by dephasing `q_input`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub alpha: f64,
    pub q_input: f64,
}

impl Site {
    pub fn bloch(&self) -> [f64; 3] {
        let s = 1.0 - 2.0 * self.q_input;
        [s * (2.0 * self.alpha).cos(), -s * (2.0 * self.alpha).sin(), 0.0]
    }
}

/// Bond between sites `a < b`; the first tensor factor of `state` sits at `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub state: BondState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteLattice {
    pub rows: usize,
    pub cols: usize,
    /// Total dephasing of every physical qubit.
    pub q: f64,
    pub sites: Vec<Site>,
    pub bonds: Vec<Bond>,
}

fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize, bool)> {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                e.push((i, i + 1, false));
            }
            if r + 1 < rows {
                e.push((i, i + cols, true));
            }
        }
    }
    e
}

impl SiteLattice {
    /// Uniform `θ`, input angle `α` and total dephasing `q`, with the noise
    /// split chosen for `mode`:
    ///
    /// * stabilizer mixture: inputs take up to their octahedron factor, the
    ///   rest is shared equally among each site's bonds;
    /// * separable: vertical bonds absorb all noise and are decomposed, the
    ///   noiseless horizontal bonds form the matrix-product chains.
    ///
    /// Bonds shared by sites with different demands take the smaller share,
    /// the input absorbs the remainder. Errors if the point lies outside the
    /// mode's region.
    pub fn grid(rows: usize, cols: usize, theta: f64, alpha: f64, q: f64, mode: SimulationMode) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CqcError::OutOfRange("empty lattice".into()));
        }
        if !(0.0..=0.5).contains(&q) {
            return Err(CqcError::OutOfRange(format!("q {q} outside [0, 1/2]")));
        }
        let n = rows * cols;
        let s = 1.0 - 2.0 * q;
        let edges = grid_edges(rows, cols);
        let absorbs = |vertical: bool| match mode {
            SimulationMode::StabilizerMixture => true,
            SimulationMode::SeparableMps => vertical,
        };
        let mut count = vec![0usize; n];
        for &(a, b, v) in &edges {
            if absorbs(v) {
                count[a] += 1;
                count[b] += 1;
            }
        }
        let demand = |i: usize| -> f64 {
            let g = match mode {
                SimulationMode::StabilizerMixture => input_factor(alpha).clamp(s, 1.0),
                SimulationMode::SeparableMps => 1.0,
            };
            (s / g).powf(1.0 / count[i] as f64)
        };
        let mut factor = vec![1.0; n];
        let mut bonds = Vec::with_capacity(edges.len());
        for &(a, b, v) in &edges {
            let f = if absorbs(v) { demand(a).max(demand(b)) } else { 1.0 };
            let limit = match mode {
                SimulationMode::StabilizerMixture => stabilizer_factor(theta),
                SimulationMode::SeparableMps if v => separable_factor(theta),
                SimulationMode::SeparableMps => 1.0,
            };
            if f > limit + SPLIT_TOL {
                return Err(CqcError::OutOfRange(format!(
                    "bond factor {f:.6} exceeds {limit:.6}: (θ={theta}, q={q}) outside the {mode:?} region"
                )));
            }
            factor[a] *= f;
            factor[b] *= f;
            bonds.push(Bond { a, b, state: bond_density_matrix(theta, (1.0 - f) / 2.0)? });
        }
        let mut sites = Vec::with_capacity(n);
        for &fi in &factor {
            let g = (s / fi).min(1.0);
            if mode == SimulationMode::StabilizerMixture && g > input_factor(alpha) + SPLIT_TOL {
                return Err(CqcError::OutOfRange(format!(
                    "input factor {g:.6} leaves exp(iαZ)|+⟩ outside the octahedron at α={alpha}"
                )));
            }
            sites.push(Site { alpha, q_input: (1.0 - g) / 2.0 });
        }
        let lat = SiteLattice { rows, cols, q, sites, bonds };
        lat.validate()?;
        Ok(lat)
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn bonds_at(&self, i: usize) -> Vec<usize> {
        self.bonds.iter().enumerate().filter(|(_, b)| b.a == i || b.b == i).map(|(k, _)| k).collect()
    }

    /// Degree ≤ 4 and `1−2q = (1−2q_k) Π (1−2q_ij)` at every site.
    pub fn validate(&self) -> Result<()> {
        if self.sites.len() != self.rows * self.cols {
            return Err(CqcError::OutOfRange("site count does not match the grid".into()));
        }
        for (i, site) in self.sites.iter().enumerate() {
            let bonds = self.bonds_at(i);
            if bonds.len() > 4 {
                return Err(CqcError::InvalidSite(format!("site {i} has degree {}", bonds.len())));
            }
            let prod: f64 = bonds.iter().map(|&k| 1.0 - 2.0 * self.bonds[k].state.q_bond).product();
            let total = (1.0 - 2.0 * site.q_input) * prod;
            if (total - (1.0 - 2.0 * self.q)).abs() > SPLIT_TOL {
                return Err(CqcError::InvalidSite(format!("site {i}: noise split gives {total}, want {}", 1.0 - 2.0 * self.q)));
            }
        }
        for b in &self.bonds {
            if b.a >= b.b || b.b >= self.sites.len() {
                return Err(CqcError::InvalidSite(format!("bond ({}, {})", b.a, b.b)));
            }
        }
        Ok(())
    }

    /// Exact X-outcome distribution of the physical circuit: inputs, the
    /// diagonal gates `exp(iθZZ)`, then total dephasing `q` on every qubit.
    /// Bit `i` of the index is site `i`, 1 meaning outcome −1.
    pub fn dense_distribution(&self) -> Result<Vec<f64>> {
        let n = self.num_sites();
        if n > MAX_ORACLE_SITES {
            return Err(CqcError::TooManyQubits(n));
        }
        let dim = 1usize << n;
        let mut psi = vec![C64::new((dim as f64).sqrt().recip(), 0.0); dim];
        for (z, amp) in psi.iter_mut().enumerate() {
            let sign = |i: usize| if z >> i & 1 == 0 { 1.0 } else { -1.0 };
            let mut phase: f64 = self.sites.iter().enumerate().map(|(i, s)| s.alpha * sign(i)).sum();
            phase += self.bonds.iter().map(|b| b.state.theta * sign(b.a) * sign(b.b)).sum::<f64>();
            *amp *= C64::from_polar(1.0, phase);
        }
        // Hadamard on every qubit maps X outcomes to computational ones.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for q in 0..n {
            let m = 1usize << q;
            for z in 0..dim {
                if z & m == 0 {
                    let (a, b) = (psi[z], psi[z | m]);
                    psi[z] = (a + b) * h;
                    psi[z | m] = (a - b) * h;
                }
            }
        }
        let mut p: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
        // Dephasing before an X measurement flips the outcome with prob. q.
        for q in 0..n {
            let m = 1usize << q;
            for z in 0..dim {
                if z & m == 0 {
                    let (a, b) = (p[z], p[z | m]);
                    p[z] = (1.0 - self.q) * a + self.q * b;
                    p[z | m] = self.q * a + (1.0 - self.q) * b;
                }
            }
        }
        Ok(p)
    }
}
