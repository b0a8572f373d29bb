//! Classical sampling of the X outcomes of a site lattice whose bonds are
//! convex mixtures of simulable states.
//!
//! Each site carries the projection `|0⟩⟨0…0| + |1⟩⟨1…1|` from its virtual
//! qubits (input plus one end of every bond) onto the physical qubit, and an
//! X measurement of the physical qubit is `Π_a X_a` on the virtual ones.

use super::decompose::{
    pauli_eigenstate_prep, separable_decompose, stabilizer_decompose, stabilizer_decompose_qubit,
    two_qubit_stabilizer_states, BondDecomposition, Component, PAULI_EIGENSTATES,
};
use super::sites::{SimulationMode, SiteLattice};
use crate::error::{CqcError, Result};
use crate::noise::C64;
use crate::stabilizer::{Basis, StabilizerTableau};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// How one bond enters the sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum BondPlan {
    /// Convex mixture of stabilizer or product states.
    Mixture(BondDecomposition),
    /// `exp(iθZZ)|++⟩` with a Z on side a, side b, both, or neither, weights
    /// indexed by `fa + 2 fb`. Kept entangled for the chain contraction.
    Pure { theta: f64, flips: [f64; 4] },
}

/// One pure input component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputComponent {
    /// Pauli eigenstate, index into [`PAULI_EIGENSTATES`].
    Pauli(usize),
    /// `exp(iαZ)|+⟩`, optionally followed by Z.
    Rotated { alpha: f64, flip: bool },
}

impl InputComponent {
    /// `⟨b|τ|b⟩`.
    fn diag(&self, b: bool) -> f64 {
        match *self {
            InputComponent::Pauli(i) => (1.0 + if b { -1.0 } else { 1.0 } * PAULI_EIGENSTATES[i][2]) / 2.0,
            InputComponent::Rotated { .. } => 0.5,
        }
    }

    fn amplitudes(&self) -> [C64; 2] {
        match *self {
            InputComponent::Rotated { alpha, flip } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let one = C64::from_polar(h, -alpha);
                [C64::from_polar(h, alpha), if flip { -one } else { one }]
            }
            InputComponent::Pauli(i) => bloch_amplitudes(&PAULI_EIGENSTATES[i]),
        }
    }
}

/// `|u⟩ = cos(t/2)|0⟩ + e^{iφ} sin(t/2)|1⟩` for a unit Bloch vector.
pub fn bloch_amplitudes(u: &[f64; 3]) -> [C64; 2] {
    let t = u[2].clamp(-1.0, 1.0).acos();
    let phi = u[1].atan2(u[0]);
    [C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), phi)]
}

/// `⟨b_a b_b|σ|b_a b_b⟩` from Pauli coordinates.
fn bond_diag(r: &[f64; 16], ba: bool, bb: bool) -> f64 {
    let sa = if ba { -1.0 } else { 1.0 };
    let sb = if bb { -1.0 } else { 1.0 };
    (1.0 + sa * r[12] + sb * r[3] + sa * sb * r[15]) / 4.0
}

/// A site lattice with every bond and input expanded into components.
#[derive(Debug, Clone)]
pub struct PreparedLattice {
    pub lattice: SiteLattice,
    pub mode: SimulationMode,
    pub bonds: Vec<BondPlan>,
    pub inputs: Vec<Vec<(f64, InputComponent)>>,
}

/// Component choice for one bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondChoice {
    Component(usize),
    Flips(usize),
}

/// One posterior draw of all components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Resolved {
    pub bonds: Vec<BondChoice>,
    pub inputs: Vec<usize>,
}

fn dephasing_flips(q: f64) -> [f64; 4] {
    [(1.0 - q) * (1.0 - q), q * (1.0 - q), q * (1.0 - q), q * q]
}

/// Expands every bond and input for `mode`. In separable mode the bonds
/// joining rows are decomposed over the product frame and the bonds along
/// rows stay entangled.
pub fn prepare(lattice: &SiteLattice, mode: SimulationMode) -> Result<PreparedLattice> {
    lattice.validate()?;
    let outside = |what: String, e: CqcError| CqcError::OutOfRange(format!("{what} not simulable in {mode:?} mode: {e}"));
    let mut bonds = Vec::with_capacity(lattice.bonds.len());
    for bond in &lattice.bonds {
        let st = &bond.state;
        let plan = match mode {
            SimulationMode::StabilizerMixture => BondPlan::Mixture(
                stabilizer_decompose(&st.rho).map_err(|e| outside(format!("bond ({}, {})", bond.a, bond.b), e))?,
            ),
            SimulationMode::SeparableMps if bond.b - bond.a == lattice.cols => BondPlan::Mixture(
                separable_decompose(&st.rho).map_err(|e| outside(format!("bond ({}, {})", bond.a, bond.b), e))?,
            ),
            SimulationMode::SeparableMps => BondPlan::Pure { theta: st.theta, flips: dephasing_flips(st.q_bond) },
        };
        bonds.push(plan);
    }
    let mut inputs = Vec::with_capacity(lattice.sites.len());
    for (i, site) in lattice.sites.iter().enumerate() {
        let comps = match mode {
            SimulationMode::StabilizerMixture => stabilizer_decompose_qubit(site.bloch())
                .map_err(|e| outside(format!("input {i}"), e))?
                .into_iter()
                .map(|(w, k)| (w, InputComponent::Pauli(k)))
                .collect(),
            SimulationMode::SeparableMps => {
                let q = site.q_input;
                vec![
                    (1.0 - q, InputComponent::Rotated { alpha: site.alpha, flip: false }),
                    (q, InputComponent::Rotated { alpha: site.alpha, flip: true }),
                ]
            }
        };
        inputs.push(comps);
    }
    Ok(PreparedLattice { lattice: lattice.clone(), mode, bonds, inputs })
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(CqcError::ZeroProbability);
    }
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return Ok(i);
        }
        u -= w;
    }
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap())
}

impl PreparedLattice {
    /// Prior weight of each option of bond `k` and its diagonal at `(b_a, b_b)`.
    fn bond_weights(&self, k: usize, ba: bool, bb: bool) -> Vec<f64> {
        match &self.bonds[k] {
            BondPlan::Mixture(d) => d.components.iter().map(|c| c.weight() * bond_diag(&c.coords(), ba, bb)).collect(),
            BondPlan::Pure { flips, .. } => flips.iter().map(|w| w / 4.0).collect(),
        }
    }

    /// Unnormalized posterior `Π w · Tr(P_code ⊗ σ)` of a full choice,
    /// summing the code branches explicitly.
    pub fn posterior_weight(&self, r: &Resolved) -> f64 {
        let n = self.lattice.num_sites();
        let prior: f64 = r.bonds.iter().enumerate().map(|(k, c)| self.option_weight(k, *c)).product::<f64>()
            * r.inputs.iter().enumerate().map(|(i, &c)| self.inputs[i][c].0).product::<f64>();
        let mut success = 0.0;
        for branch in 0..1usize << n {
            let b = |i: usize| branch >> i & 1 == 1;
            let mut t: f64 = r.inputs.iter().enumerate().map(|(i, &c)| self.inputs[i][c].1.diag(b(i))).product();
            for (k, c) in r.bonds.iter().enumerate() {
                let bond = &self.lattice.bonds[k];
                t *= match (c, &self.bonds[k]) {
                    (BondChoice::Component(j), BondPlan::Mixture(d)) => bond_diag(&d.components[*j].coords(), b(bond.a), b(bond.b)),
                    _ => 0.25,
                };
            }
            success += t;
        }
        prior * success
    }

    fn option_weight(&self, k: usize, c: BondChoice) -> f64 {
        match (c, &self.bonds[k]) {
            (BondChoice::Component(j), BondPlan::Mixture(d)) => d.components[j].weight(),
            (BondChoice::Flips(j), BondPlan::Pure { flips, .. }) => flips[j],
            _ => 0.0,
        }
    }

    /// Every component choice (for brute-force checks on small lattices).
    pub fn all_choices(&self) -> Vec<Resolved> {
        let mut out = vec![Resolved { bonds: vec![], inputs: vec![] }];
        for plan in &self.bonds {
            let opts: Vec<BondChoice> = match plan {
                BondPlan::Mixture(d) => (0..d.components.len()).map(BondChoice::Component).collect(),
                BondPlan::Pure { .. } => (0..4).map(BondChoice::Flips).collect(),
            };
            out = out
                .into_iter()
                .flat_map(|r| {
                    opts.iter().map(move |o| {
                        let mut r = r.clone();
                        r.bonds.push(*o);
                        r
                    })
                })
                .collect();
        }
        for comps in &self.inputs {
            out = out
                .into_iter()
                .flat_map(|r| {
                    (0..comps.len()).map(move |j| {
                        let mut r = r.clone();
                        r.inputs.push(j);
                        r
                    })
                })
                .collect();
        }
        out
    }
}

/// Largest lattice whose code branches are enumerated when the bond and
/// input diagonals are not uniform.
pub const MAX_BRANCH_SITES: usize = 20;

/// Draws all bond and input components from their posterior given that
/// every site projection succeeds.
///
/// The success probability is a sum over one code branch `b_i ∈ {0,1}` per
/// site of products of Z-basis diagonals. The branches are drawn first from
/// their marginal (fair coins when every bond and input mixture has a
/// uniform diagonal, as the dephased bonds do; exact enumeration otherwise);
/// given them, components are independent with weight `w_k ⟨b|σ_k|b⟩`.
/// This samples the joint posterior exactly, also on lattices with loops.
pub fn posterior_bond_sampling<R: Rng + ?Sized>(lattice: &PreparedLattice, rng: &mut R) -> Result<Resolved> {
    let branch = sample_branches(lattice, rng)?;
    let mut bonds = Vec::with_capacity(lattice.bonds.len());
    for (k, bond) in lattice.lattice.bonds.iter().enumerate() {
        let w = lattice.bond_weights(k, branch[bond.a], branch[bond.b]);
        let j = pick(&w, rng)?;
        bonds.push(match lattice.bonds[k] {
            BondPlan::Mixture(_) => BondChoice::Component(j),
            BondPlan::Pure { .. } => BondChoice::Flips(j),
        });
    }
    let mut inputs = Vec::with_capacity(branch.len());
    for (i, comps) in lattice.inputs.iter().enumerate() {
        let w: Vec<f64> = comps.iter().map(|(w, c)| w * c.diag(branch[i])).collect();
        inputs.push(pick(&w, rng)?);
    }
    Ok(Resolved { bonds, inputs })
}

fn sample_branches<R: Rng + ?Sized>(lattice: &PreparedLattice, rng: &mut R) -> Result<Vec<bool>> {
    let n = lattice.lattice.num_sites();
    let bond_diag_sum = |k: usize, ba: bool, bb: bool| lattice.bond_weights(k, ba, bb).iter().sum::<f64>();
    let input_diag_sum = |i: usize, b: bool| lattice.inputs[i].iter().map(|(w, c)| w * c.diag(b)).sum::<f64>();
    let flat = |x: f64, want: f64| (x - want).abs() < 1e-12;
    let uniform = (0..lattice.bonds.len())
        .all(|k| [(false, false), (false, true), (true, false), (true, true)].iter().all(|&(a, b)| flat(bond_diag_sum(k, a, b), 0.25)))
        && (0..n).all(|i| flat(input_diag_sum(i, false), 0.5) && flat(input_diag_sum(i, true), 0.5));
    if uniform {
        return Ok((0..n).map(|_| rng.gen()).collect());
    }
    if n > MAX_BRANCH_SITES {
        return Err(CqcError::TooManyQubits(n));
    }
    let weights: Vec<f64> = (0..1usize << n)
        .map(|z| {
            let b = |i: usize| z >> i & 1 == 1;
            let bonds: f64 = lattice.lattice.bonds.iter().enumerate().map(|(k, bd)| bond_diag_sum(k, b(bd.a), b(bd.b))).product();
            bonds * (0..n).map(|i| input_diag_sum(i, b(i))).product::<f64>()
        })
        .collect();
    let z = pick(&weights, rng)?;
    Ok((0..n).map(|i| z >> i & 1 == 1).collect())
}

/// Virtual qubit layout: bond `k` owns `2k` (side a) and `2k+1` (side b),
/// input `i` is `2·#bonds + i`.
fn site_qubits(lattice: &SiteLattice, i: usize) -> Vec<usize> {
    let mut qs = vec![2 * lattice.bonds.len() + i];
    for (k, b) in lattice.bonds.iter().enumerate() {
        if b.a == i {
            qs.push(2 * k);
        }
        if b.b == i {
            qs.push(2 * k + 1);
        }
    }
    qs
}

/// Stabilizer state of all virtual qubits for a choice of stabilizer
/// components, with every site projected onto its code space. Returns the
/// tableau and `Tr(P_code ⊗ σ)`.
pub fn project_components(lattice: &PreparedLattice, r: &Resolved) -> Result<(StabilizerTableau, f64)> {
    let lat = &lattice.lattice;
    let nq = 2 * lat.bonds.len() + lat.num_sites();
    let mut t = StabilizerTableau::new(nq, Basis::AllZero)?;
    let states = two_qubit_stabilizer_states();
    for (k, c) in r.bonds.iter().enumerate() {
        let id = match (c, &lattice.bonds[k]) {
            (BondChoice::Component(j), BondPlan::Mixture(d)) => match d.components[*j] {
                Component::Stabilizer { id, .. } => id,
                Component::Product { .. } => return Err(CqcError::NonClifford("product component in tableau path".into())),
            },
            _ => return Err(CqcError::NonClifford("entangled bond in tableau path".into())),
        };
        for g in &states[id].prep {
            t.apply_gate(&g.remap(|q| 2 * k + q))?;
        }
    }
    for (i, &c) in r.inputs.iter().enumerate() {
        let q = 2 * lat.bonds.len() + i;
        match lattice.inputs[i][c].1 {
            InputComponent::Pauli(id) => {
                for g in pauli_eigenstate_prep(id, q) {
                    t.apply_gate(&g)?;
                }
            }
            InputComponent::Rotated { .. } => return Err(CqcError::NonClifford("rotated input in tableau path".into())),
        }
    }
    let mut prob = 1.0;
    for i in 0..lat.num_sites() {
        let qs = site_qubits(lat, i);
        for &q in &qs[1..] {
            t.cnot(qs[0], q);
            prob *= t.postselect_z(q, false)?;
            t.cnot(qs[0], q);
        }
    }
    Ok((t, prob))
}

fn sample_stabilizer<R: Rng + ?Sized>(lattice: &PreparedLattice, r: &Resolved, rng: &mut R) -> Result<Vec<bool>> {
    let (mut t, _) = project_components(lattice, r)?;
    let lat = &lattice.lattice;
    let mut out = Vec::with_capacity(lat.num_sites());
    for i in 0..lat.num_sites() {
        let qs = site_qubits(lat, i);
        for &q in &qs {
            t.h(q);
        }
        for &q in &qs[1..] {
            t.cnot(q, qs[0]);
        }
        out.push(t.measure_z(qs[0], rng));
        for &q in &qs[1..] {
            t.cnot(q, qs[0]);
        }
        for &q in &qs {
            t.h(q);
        }
    }
    Ok(out)
}

/// A 1D chain of sites after all transverse bonds are resolved: `local[i][b]`
/// is the product of the single-qubit amplitudes `⟨b|·⟩` at site `i`, and
/// `links[i][b][b']` is `⟨b b'|bond⟩` between sites `i` and `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiChain {
    pub local: Vec<[C64; 2]>,
    pub links: Vec<[[C64; 2]; 2]>,
}

type Env = [[C64; 2]; 2];

impl QuasiChain {
    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }

    /// `M_i(m)[b] = local[i][b] (−1)^{mb} / √2`, the site's GHZ projection.
    fn site(&self, i: usize, m: bool) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let [a, b] = self.local[i];
        [a * h, if m { -b * h } else { b * h }]
    }

    /// Right environments summed over all outcomes to the right of each site.
    fn right_envs(&self) -> Vec<Env> {
        let n = self.len();
        let one = C64::new(1.0, 0.0);
        let mut envs = vec![[[one; 2]; 2]; n];
        for i in (0..n.saturating_sub(1)).rev() {
            let next = &envs[i + 1];
            // Σ_m M M* is diagonal in the branch index.
            let d: [f64; 2] = [self.local[i + 1][0].norm_sqr(), self.local[i + 1][1].norm_sqr()];
            let t = &self.links[i];
            let mut e = [[C64::new(0.0, 0.0); 2]; 2];
            for b in 0..2 {
                for bp in 0..2 {
                    for c in 0..2 {
                        for cp in 0..2 {
                            if c == cp {
                                e[b][bp] += t[b][c] * t[bp][cp].conj() * d[c] * next[c][cp];
                            }
                        }
                    }
                }
            }
            envs[i] = e;
        }
        envs
    }

    fn extend(&self, left: Option<&Env>, i: usize, m: bool) -> Env {
        let mi = self.site(i, m);
        let mut e = [[C64::new(0.0, 0.0); 2]; 2];
        for b in 0..2 {
            for bp in 0..2 {
                let amp = match left {
                    None => C64::new(1.0, 0.0),
                    Some(l) => {
                        let t = &self.links[i - 1];
                        let mut s = C64::new(0.0, 0.0);
                        for c in 0..2 {
                            for cp in 0..2 {
                                s += l[c][cp] * t[c][b] * t[cp][bp].conj();
                            }
                        }
                        s
                    }
                };
                e[b][bp] = amp * mi[b] * mi[bp].conj();
            }
        }
        e
    }

    fn close(left: &Env, right: &Env) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for b in 0..2 {
            for bp in 0..2 {
                s += left[b][bp] * right[b][bp];
            }
        }
        s.re
    }

    /// Sequential contraction: for each site the conditional probabilities of
    /// `m = 0, 1` given the outcomes already fixed, drawing from them with
    /// `choose`. Returns the outcomes, conditionals, and the norm `Σ_m |A(m)|²`.
    fn sweep(&self, mut choose: impl FnMut(usize, [f64; 2]) -> bool) -> Result<(Vec<bool>, Vec<[f64; 2]>, f64)> {
        if self.is_empty() || self.links.len() + 1 != self.len() {
            return Err(CqcError::NotOneDimensional("chain links do not match its sites".into()));
        }
        let right = self.right_envs();
        let mut left: Option<Env> = None;
        let mut norm = 0.0;
        let mut outcomes = Vec::with_capacity(self.len());
        let mut conds = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let cand = [self.extend(left.as_ref(), i, false), self.extend(left.as_ref(), i, true)];
            let p = [Self::close(&cand[0], &right[i]), Self::close(&cand[1], &right[i])];
            let total = p[0] + p[1];
            if i == 0 {
                norm = total;
            }
            if !(total > 0.0) {
                return Err(CqcError::ZeroProbability);
            }
            let c = [p[0] / total, p[1] / total];
            let m = choose(i, c);
            outcomes.push(m);
            conds.push(c);
            left = Some(cand[m as usize]);
        }
        Ok((outcomes, conds, norm))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<bool>> {
        Ok(self.sweep(|_, c| rng.gen::<f64>() >= c[0])?.0)
    }

    /// Conditional distributions along a fixed outcome string.
    pub fn conditionals(&self, outcomes: &[bool]) -> Result<Vec<[f64; 2]>> {
        Ok(self.sweep(|i, _| outcomes[i])?.1)
    }

    /// `P(m)` for a full outcome string.
    pub fn probability(&self, outcomes: &[bool]) -> Result<f64> {
        let conds = self.conditionals(outcomes)?;
        Ok(conds.iter().zip(outcomes).map(|(c, &m)| c[m as usize]).product())
    }

    /// `P(m_i = +1)` for every site, by summing the exact distribution.
    pub fn marginals(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n > 20 {
            return Err(CqcError::TooManyQubits(n));
        }
        let mut marg = vec![0.0; n];
        for z in 0..1usize << n {
            let m: Vec<bool> = (0..n).map(|i| z >> i & 1 == 1).collect();
            let p = self.probability(&m)?;
            for i in 0..n {
                if !m[i] {
                    marg[i] += p;
                }
            }
        }
        Ok(marg)
    }
}

/// Outcome distribution of one chain: conditionals at each site along the
/// given outcomes (each pair sums to 1).
pub fn contract_quasi_1d(chain: &QuasiChain, outcomes: &[bool]) -> Result<Vec<[f64; 2]>> {
    chain.conditionals(outcomes)
}

/// Splits the sites into chains along the entangled bonds. Errors if the
/// entangled bonds do not form disjoint paths.
fn chains(lattice: &PreparedLattice) -> Result<Vec<Vec<(usize, Option<usize>)>>> {
    let lat = &lattice.lattice;
    let n = lat.num_sites();
    let mut nbrs: Vec<Vec<(usize, usize)>> = vec![vec![]; n];
    for (k, b) in lat.bonds.iter().enumerate() {
        if matches!(lattice.bonds[k], BondPlan::Pure { .. }) {
            nbrs[b.a].push((b.b, k));
            nbrs[b.b].push((b.a, k));
        }
    }
    if let Some(i) = nbrs.iter().position(|v| v.len() > 2) {
        return Err(CqcError::NotOneDimensional(format!("site {i} has {} entangled bonds", nbrs[i].len())));
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let starts: Vec<usize> = (0..n).filter(|&i| nbrs[i].len() < 2).chain(0..n).collect();
    for s in starts {
        if seen[s] {
            continue;
        }
        if nbrs[s].len() == 2 {
            return Err(CqcError::NotOneDimensional(format!("entangled bonds form a loop through site {s}")));
        }
        // Each entry: site and the bond to the previous site.
        let mut chain = vec![(s, None)];
        seen[s] = true;
        let mut cur = s;
        while let Some(&(next, k)) = nbrs[cur].iter().find(|(j, _)| !seen[*j]) {
            seen[next] = true;
            chain.push((next, Some(k)));
            cur = next;
        }
        out.push(chain);
    }
    Ok(out)
}

fn pure_bond(theta: f64, flip: usize) -> [[C64; 2]; 2] {
    let mut t = [[C64::new(0.0, 0.0); 2]; 2];
    for (ba, row) in t.iter_mut().enumerate() {
        for (bb, x) in row.iter_mut().enumerate() {
            let zz = if ba == bb { 1.0 } else { -1.0 };
            let sign = if (flip & 1 == 1 && ba == 1) ^ (flip & 2 == 2 && bb == 1) { -1.0 } else { 1.0 };
            *x = C64::from_polar(0.5 * sign, theta * zz);
        }
    }
    t
}

fn sample_chains<R: Rng + ?Sized>(lattice: &PreparedLattice, r: &Resolved, rng: &mut R) -> Result<Vec<bool>> {
    let lat = &lattice.lattice;
    let n = lat.num_sites();
    let one = C64::new(1.0, 0.0);
    let mut local = vec![[one; 2]; n];
    for (i, &c) in r.inputs.iter().enumerate() {
        let a = lattice.inputs[i][c].1.amplitudes();
        local[i] = [local[i][0] * a[0], local[i][1] * a[1]];
    }
    for (k, c) in r.bonds.iter().enumerate() {
        if let (BondChoice::Component(j), BondPlan::Mixture(d)) = (c, &lattice.bonds[k]) {
            let Component::Product { left, right, .. } = d.components[*j] else {
                return Err(CqcError::NotOneDimensional("entangled stabilizer component in chain path".into()));
            };
            let b = &lat.bonds[k];
            for (site, u) in [(b.a, left), (b.b, right)] {
                let a = bloch_amplitudes(&u);
                local[site] = [local[site][0] * a[0], local[site][1] * a[1]];
            }
        }
    }
    let mut out = vec![false; n];
    for chain in chains(lattice)? {
        let mut qc = QuasiChain { local: Vec::with_capacity(chain.len()), links: vec![] };
        for (pos, &(site, link)) in chain.iter().enumerate() {
            qc.local.push(local[site]);
            if let Some(k) = link {
                let (BondPlan::Pure { theta, .. }, BondChoice::Flips(f)) = (&lattice.bonds[k], r.bonds[k]) else {
                    unreachable!("chain links are pure bonds");
                };
                let mut t = pure_bond(*theta, f);
                // Orient as (previous site, this site).
                if lat.bonds[k].a != chain[pos - 1].0 {
                    t = [[t[0][0], t[1][0]], [t[0][1], t[1][1]]];
                }
                qc.links.push(t);
            }
        }
        for (&(site, _), m) in chain.iter().zip(qc.sample(rng)?) {
            out[site] = m;
        }
    }
    Ok(out)
}

/// Prepared lattice ready for repeated sampling.
#[derive(Debug, Clone)]
pub struct GeneralSampler {
    pub prepared: PreparedLattice,
}

impl GeneralSampler {
    pub fn new(lattice: &SiteLattice, mode: SimulationMode) -> Result<Self> {
        let prepared = prepare(lattice, mode)?;
        if mode == SimulationMode::SeparableMps {
            chains(&prepared)?;
        }
        Ok(GeneralSampler { prepared })
    }

    /// One shot: X outcomes per site, `true` meaning −1.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<bool>> {
        let r = posterior_bond_sampling(&self.prepared, rng)?;
        match self.prepared.mode {
            SimulationMode::StabilizerMixture => sample_stabilizer(&self.prepared, &r, rng),
            SimulationMode::SeparableMps => sample_chains(&self.prepared, &r, rng),
        }
    }

    /// Empirical outcome distribution over `shots`, indexed like
    /// [`SiteLattice::dense_distribution`]. Shot `s` uses stream `s` of `seed`.
    pub fn histogram(&self, shots: u64, seed: u64) -> Result<Vec<f64>> {
        let n = self.prepared.lattice.num_sites();
        if n > 20 {
            return Err(CqcError::TooManyQubits(n));
        }
        let counts = (0..shots)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s);
                let m = self.sample(&mut rng)?;
                Ok::<_, CqcError>(m.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum::<usize>())
            })
            .try_fold(|| vec![0u64; 1 << n], |mut acc, idx| {
                acc[idx?] += 1;
                Ok::<_, CqcError>(acc)
            })
            .try_reduce(|| vec![0u64; 1 << n], |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            })?;
        Ok(counts.into_iter().map(|c| c as f64 / shots as f64).collect())
    }
}

/// One classical sample of the lattice's X outcomes.
pub fn simulate_general_circuit(lattice: &SiteLattice, mode: SimulationMode, seed: u64) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GeneralSampler::new(lattice, mode)?.sample(&mut rng)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

/// Expected TV between `p` and an empirical histogram of `shots` draws from
/// it, in the normal approximation.
pub fn expected_sampling_tv(p: &[f64], shots: u64) -> f64 {
    let n = shots as f64;
    p.iter().map(|&x| (2.0 * (x * (1.0 - x)).max(0.0) / (std::f64::consts::PI * n)).sqrt()).sum::<f64>() / 2.0
}
