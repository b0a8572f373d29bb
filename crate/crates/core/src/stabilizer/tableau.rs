//! Aaronson-Gottesman stabilizer tableau with destabilizers.
//!
//! Rows `0..n` are destabilizers, `n..2n` stabilizers, row `2n` is scratch.
//! A row `(x, z, r)` denotes `(-1)^r · Π_j P(x_j, z_j)` with `P(1,1) = Y`.

use super::circuit::Gate;
use crate::error::{CqcError, Result};
use crate::noise::PauliChannel;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    AllZero,
    AllPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Draw `I, X, Y, Z` with the channel's probabilities.
    pub fn sample<R: Rng + ?Sized>(chan: &PauliChannel, rng: &mut R) -> Self {
        let u: f64 = rng.gen();
        if u < chan.p_x {
            Pauli::X
        } else if u < chan.p_x + chan.p_y {
            Pauli::Y
        } else if u < chan.p_x + chan.p_y + chan.p_z {
            Pauli::Z
        } else {
            Pauli::I
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

/// Exponent of `i` picked up by multiplying in one word of Pauli `(x1, z1)`
/// on the left of `(x2, z2)`, summed over bits.
fn phase_word(x1: u64, z1: u64, x2: u64, z2: u64) -> i32 {
    let plus = (x1 & z1 & !x2 & z2) | (x1 & !z1 & x2 & z2) | (!x1 & z1 & x2 & !z2);
    let minus = (x1 & z1 & x2 & !z2) | (x1 & !z1 & !x2 & z2) | (!x1 & z1 & x2 & z2);
    plus.count_ones() as i32 - minus.count_ones() as i32
}

impl StabilizerTableau {
    pub fn new(n: usize, basis: Basis) -> Result<Self> {
        if n == 0 {
            return Err(CqcError::OutOfRange("tableau needs at least one qubit".into()));
        }
        let words = n.div_ceil(64);
        let rows = 2 * n + 1;
        let mut t = StabilizerTableau {
            n,
            words,
            x: vec![0; rows * words],
            z: vec![0; rows * words],
            r: vec![false; rows],
        };
        for i in 0..n {
            // |0...0>: destabilizer X_i, stabilizer Z_i.
            t.set_x(i, i, true);
            t.set_z(n + i, i, true);
        }
        if basis == Basis::AllPlus {
            for i in 0..n {
                t.h(i);
            }
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    fn get_x(&self, row: usize, q: usize) -> bool {
        self.x[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn get_z(&self, row: usize, q: usize) -> bool {
        self.z[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn set_x(&mut self, row: usize, q: usize, v: bool) {
        let w = &mut self.x[row * self.words + q / 64];
        *w = (*w & !(1 << (q % 64))) | ((v as u64) << (q % 64));
    }

    fn set_z(&mut self, row: usize, q: usize, v: bool) {
        let w = &mut self.z[row * self.words + q / 64];
        *w = (*w & !(1 << (q % 64))) | ((v as u64) << (q % 64));
    }

    /// Stabilizer generator `i` as a sign and Pauli string.
    pub fn stabilizer(&self, i: usize) -> (bool, Vec<Pauli>) {
        let row = self.n + i;
        let ps = (0..self.n).map(|q| Pauli::from_bits(self.get_x(row, q), self.get_z(row, q))).collect();
        (self.r[row], ps)
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(CqcError::OutOfRange(format!("qubit {q} of {}", self.n)));
        }
        Ok(())
    }

    fn rows(&self) -> usize {
        2 * self.n
    }

    pub fn h(&mut self, a: usize) {
        for row in 0..self.rows() {
            let (x, z) = (self.get_x(row, a), self.get_z(row, a));
            self.r[row] ^= x & z;
            self.set_x(row, a, z);
            self.set_z(row, a, x);
        }
    }

    pub fn s(&mut self, a: usize) {
        for row in 0..self.rows() {
            let (x, z) = (self.get_x(row, a), self.get_z(row, a));
            self.r[row] ^= x & z;
            self.set_z(row, a, z ^ x);
        }
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        for row in 0..self.rows() {
            let (xa, za, xb, zb) = (self.get_x(row, a), self.get_z(row, a), self.get_x(row, b), self.get_z(row, b));
            self.r[row] ^= xa & zb & !(xb ^ za);
            self.set_x(row, b, xb ^ xa);
            self.set_z(row, a, za ^ zb);
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        self.h(b);
        self.cnot(a, b);
        self.h(b);
    }

    pub fn pauli(&mut self, a: usize, p: Pauli) {
        let (px, pz) = p.bits();
        for row in 0..self.rows() {
            // The row flips sign when it anticommutes with p on qubit a.
            let (x, z) = (self.get_x(row, a), self.get_z(row, a));
            self.r[row] ^= (x & pz) ^ (z & px);
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let qs = gate.qubits();
        for &q in &qs {
            self.check(q)?;
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(CqcError::OutOfRange(format!("two-qubit gate on a single qubit {}", qs[0])));
        }
        match *gate {
            Gate::H(a) => self.h(a),
            Gate::S(a) => self.s(a),
            Gate::Sdg(a) => {
                self.s(a);
                self.s(a);
                self.s(a);
            }
            Gate::X(a) => self.pauli(a, Pauli::X),
            Gate::Y(a) => self.pauli(a, Pauli::Y),
            Gate::Z(a) => self.pauli(a, Pauli::Z),
            Gate::Cz(a, b) => self.cz(a, b),
            Gate::Cnot(a, b) => self.cnot(a, b),
            Gate::ZzQuarter(a, b) => {
                // exp(iπ/4 ZZ) ∝ CZ · (S† ⊗ S†)
                self.cz(a, b);
                for q in [a, b] {
                    self.s(q);
                    self.s(q);
                    self.s(q);
                }
            }
            Gate::Rz(a, theta) => {
                // exp(iθZ) ∝ (S†)^k for θ = kπ/4.
                let k = theta / std::f64::consts::FRAC_PI_4;
                if (k - k.round()).abs() > 1e-12 {
                    return Err(CqcError::NonClifford(format!("Rz({theta})")));
                }
                let k = (k.round() as i64).rem_euclid(4);
                for _ in 0..(4 - k) % 4 {
                    self.s(a);
                }
            }
        }
        Ok(())
    }

    /// Sample a Pauli from `chan` and apply it to qubit `site`.
    pub fn apply_pauli_noise<R: Rng + ?Sized>(&mut self, chan: &PauliChannel, site: usize, rng: &mut R) -> Result<Pauli> {
        self.check(site)?;
        let p = Pauli::sample(chan, rng);
        self.pauli(site, p);
        Ok(p)
    }

    /// Left-multiply row `h` by row `i`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let mut e = 2 * (self.r[h] as i32) + 2 * (self.r[i] as i32);
        for k in 0..w {
            let (x1, z1) = (self.x[i * w + k], self.z[i * w + k]);
            let (x2, z2) = (self.x[h * w + k], self.z[h * w + k]);
            e += phase_word(x1, z1, x2, z2);
            self.x[h * w + k] = x1 ^ x2;
            self.z[h * w + k] = z1 ^ z2;
        }
        self.r[h] = e.rem_euclid(4) == 2;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.x.copy_within(src * w..(src + 1) * w, dst * w);
        self.z.copy_within(src * w..(src + 1) * w, dst * w);
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// Measure `Z_a`; returns the outcome bit (`true` for eigenvalue −1).
    fn random_pivot(&self, a: usize) -> Option<usize> {
        (self.n..2 * self.n).find(|&row| self.get_x(row, a))
    }

    fn collapse(&mut self, p: usize, a: usize, outcome: bool) {
        for row in 0..2 * self.n {
            if row != p && self.get_x(row, a) {
                self.rowsum(row, p);
            }
        }
        self.copy_row(p - self.n, p);
        self.clear_row(p);
        self.set_z(p, a, true);
        self.r[p] = outcome;
    }

    fn deterministic_z(&mut self, a: usize) -> bool {
        let scratch = 2 * self.n;
        self.clear_row(scratch);
        for i in 0..self.n {
            if self.get_x(i, a) {
                self.rowsum(scratch, i + self.n);
            }
        }
        self.r[scratch]
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, a: usize, rng: &mut R) -> bool {
        match self.random_pivot(a) {
            Some(p) => {
                let outcome = rng.gen::<bool>();
                self.collapse(p, a, outcome);
                outcome
            }
            None => self.deterministic_z(a),
        }
    }

    /// Projects qubit `a` onto Z outcome `want` (true = −1) and returns the
    /// probability that outcome had.
    pub fn postselect_z(&mut self, a: usize, want: bool) -> Result<f64> {
        self.check(a)?;
        match self.random_pivot(a) {
            Some(p) => {
                self.collapse(p, a, want);
                Ok(0.5)
            }
            None if self.deterministic_z(a) == want => Ok(1.0),
            None => Err(CqcError::ZeroProbability),
        }
    }

    pub fn measure_x<R: Rng + ?Sized>(&mut self, a: usize, rng: &mut R) -> bool {
        self.h(a);
        let m = self.measure_z(a, rng);
        self.h(a);
        m
    }

    /// `Some(±1)` if the Pauli string is (up to sign) in the stabilizer
    /// group, else `None` (expectation zero).
    pub fn expectation(&mut self, paulis: &[(usize, Pauli)]) -> Option<i8> {
        let n = self.n;
        let w = self.words;
        let mut px = vec![0u64; w];
        let mut pz = vec![0u64; w];
        for &(q, p) in paulis {
            let (bx, bz) = p.bits();
            px[q / 64] ^= (bx as u64) << (q % 64);
            pz[q / 64] ^= (bz as u64) << (q % 64);
        }
        let anticommutes = |t: &Self, row: usize| -> bool {
            let mut acc = 0u32;
            for k in 0..w {
                acc += ((t.x[row * w + k] & pz[k]) ^ (t.z[row * w + k] & px[k])).count_ones();
            }
            acc % 2 == 1
        };
        if (n..2 * n).any(|row| anticommutes(self, row)) {
            return None;
        }
        let scratch = 2 * n;
        self.clear_row(scratch);
        for i in 0..n {
            if anticommutes(self, i) {
                self.rowsum(scratch, i + n);
            }
        }
        debug_assert!((0..w).all(|k| self.x[scratch * w + k] == px[k] && self.z[scratch * w + k] == pz[k]));
        Some(if self.r[scratch] { -1 } else { 1 })
    }

    /// `P(X_a = +1)`: 0, 1/2 or 1.
    pub fn x_marginal(&mut self, a: usize) -> f64 {
        match self.expectation(&[(a, Pauli::X)]) {
            None => 0.5,
            Some(s) => (1.0 + s as f64) / 2.0,
        }
    }

    /// Generators commute pairwise and have full rank.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        let w = self.words;
        let sym = |a: usize, b: usize| -> u32 {
            (0..w)
                .map(|k| ((self.x[a * w + k] & self.z[b * w + k]) ^ (self.z[a * w + k] & self.x[b * w + k])).count_ones())
                .sum::<u32>()
                % 2
        };
        for i in 0..n {
            for j in 0..n {
                // Stabilizers commute; destabilizer i pairs only with stabilizer i.
                if sym(n + i, n + j) != 0 || sym(i, n + j) != (i == j) as u32 {
                    return false;
                }
            }
        }
        true
    }
}
