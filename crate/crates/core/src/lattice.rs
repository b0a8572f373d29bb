//! The RHG cluster-state lattice.
//!
//! Coordinates are doubled integers. With unit cells of side 2:
//!
//! | parity (odd coordinates) | object                 |
//! |--------------------------|------------------------|
//! | none                     | primal vertex          |
//! | one                      | edge qubit             |
//! | two                      | face qubit             |
//! | three                    | cell (cube) center     |
//!
//! Cell `(i, j, k)` has center `(2i+1, 2j+1, 2k+1)`. Under periodic
//! boundaries coordinates live in `[0, 2L)` per axis; under open boundaries
//! in `[0, 2L]`, so the outer faces and edges are present.

use crate::error::{CqcError, Result};
use serde::{Deserialize, Serialize};

pub type QubitId = usize;
pub type Coord = [i32; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitKind {
    Face,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    #[default]
    Vacuum,
    Defect,
    Singular,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub coord: Coord,
    pub region: Region,
}

/// Region labels by coordinate. Unlisted qubits are vacuum.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub assignments: Vec<RegionAssignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub center: Coord,
    /// Boundary faces in the order -x, +x, -y, +y, -z, +z.
    pub faces: [QubitId; 6],
}

/// Serialized form of a lattice: geometry plus non-vacuum regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDoc {
    pub dims: [usize; 3],
    pub boundary: Boundary,
    pub regions: RegionSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhgLattice {
    dims: [usize; 3],
    boundary: Boundary,
    coords: Vec<Coord>,
    kinds: Vec<QubitKind>,
    neighbors: Vec<Vec<QubitId>>,
    cells: Vec<Cell>,
    regions: Vec<Region>,
    extent: [i32; 3],
    lookup: Vec<u32>,
}

const NONE: u32 = u32::MAX;

pub(crate) fn unit(axis: usize, sign: i32) -> Coord {
    let mut v = [0; 3];
    v[axis] = sign;
    v
}

pub(crate) fn add(a: Coord, b: Coord) -> Coord {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn odd_count(c: Coord) -> usize {
    c.iter().filter(|v| v.rem_euclid(2) == 1).count()
}

/// Build a lattice. See [`RhgLattice::new`].
pub fn build_lattice(dims: [usize; 3], boundary: Boundary, regions: &RegionSpec) -> Result<RhgLattice> {
    RhgLattice::new(dims, boundary, regions)
}

/// Neighbors of `q`. See [`RhgLattice::adjacency`].
pub fn adjacency(lattice: &RhgLattice, q: QubitId) -> Result<&[QubitId]> {
    lattice.adjacency(q)
}

/// `(cell id, six faces)` for every cell.
pub fn unit_cells(lattice: &RhgLattice) -> Vec<(usize, [QubitId; 6])> {
    lattice.cells.iter().enumerate().map(|(i, c)| (i, c.faces)).collect()
}

impl RhgLattice {
    pub fn new(dims: [usize; 3], boundary: Boundary, regions: &RegionSpec) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(CqcError::EmptyLattice(dims));
        }
        let extent: [i32; 3] = match boundary {
            Boundary::Periodic => [2 * dims[0] as i32, 2 * dims[1] as i32, 2 * dims[2] as i32],
            Boundary::Open => [2 * dims[0] as i32 + 1, 2 * dims[1] as i32 + 1, 2 * dims[2] as i32 + 1],
        };
        let volume = (extent[0] * extent[1] * extent[2]) as usize;
        let mut lookup = vec![NONE; volume];
        let mut coords = Vec::new();
        let mut kinds = Vec::new();
        for x in 0..extent[0] {
            for y in 0..extent[1] {
                for z in 0..extent[2] {
                    let c = [x, y, z];
                    let kind = match odd_count(c) {
                        1 => QubitKind::Edge,
                        2 => QubitKind::Face,
                        _ => continue,
                    };
                    lookup[((x * extent[1] + y) * extent[2] + z) as usize] = coords.len() as u32;
                    coords.push(c);
                    kinds.push(kind);
                }
            }
        }
        let mut lat = RhgLattice {
            dims,
            boundary,
            coords,
            kinds,
            neighbors: Vec::new(),
            cells: Vec::new(),
            regions: Vec::new(),
            extent,
            lookup,
        };
        lat.neighbors = (0..lat.coords.len()).map(|q| lat.compute_neighbors(q)).collect();
        let mut cells = Vec::with_capacity(dims.iter().product());
        for i in 0..dims[0] as i32 {
            for j in 0..dims[1] as i32 {
                for k in 0..dims[2] as i32 {
                    let center = [2 * i + 1, 2 * j + 1, 2 * k + 1];
                    let mut faces = [0; 6];
                    for axis in 0..3 {
                        for (s, sign) in [-1, 1].into_iter().enumerate() {
                            faces[2 * axis + s] = lat
                                .qubit_at(add(center, unit(axis, sign)))
                                .expect("cell faces always exist");
                        }
                    }
                    cells.push(Cell { center, faces });
                }
            }
        }
        lat.cells = cells;
        lat.regions = vec![Region::Vacuum; lat.coords.len()];
        lat.apply_regions(regions)?;
        Ok(lat)
    }

    fn compute_neighbors(&self, q: QubitId) -> Vec<QubitId> {
        let c = self.coords[q];
        let mut out = Vec::with_capacity(4);
        for axis in 0..3 {
            let odd = c[axis].rem_euclid(2) == 1;
            // Faces step along their odd axes; edges along their even axes.
            let step = match self.kinds[q] {
                QubitKind::Face => odd,
                QubitKind::Edge => !odd,
            };
            if !step {
                continue;
            }
            for sign in [-1, 1] {
                if let Some(p) = self.qubit_at(add(c, unit(axis, sign))) {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn apply_regions(&mut self, spec: &RegionSpec) -> Result<()> {
        let mut seen = vec![false; self.coords.len()];
        for a in &spec.assignments {
            let q = self.qubit_at(a.coord).ok_or(CqcError::UnknownCoordinate(a.coord))?;
            if seen[q] {
                return Err(CqcError::ConflictingRegion(a.coord));
            }
            seen[q] = true;
            self.regions[q] = a.region;
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_qubits(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, q: QubitId) -> Coord {
        self.coords[q]
    }

    pub fn kind(&self, q: QubitId) -> QubitKind {
        self.kinds[q]
    }

    pub fn region(&self, q: QubitId) -> Region {
        self.regions[q]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Wrap a coordinate into the stored range, or `None` if it lies
    /// outside an open lattice.
    pub fn normalize(&self, c: Coord) -> Option<Coord> {
        let mut out = c;
        for a in 0..3 {
            match self.boundary {
                Boundary::Periodic => out[a] = c[a].rem_euclid(self.extent[a]),
                Boundary::Open => {
                    if c[a] < 0 || c[a] >= self.extent[a] {
                        return None;
                    }
                }
            }
        }
        Some(out)
    }

    pub fn qubit_at(&self, c: Coord) -> Option<QubitId> {
        let c = self.normalize(c)?;
        let id = self.lookup[((c[0] * self.extent[1] + c[1]) * self.extent[2] + c[2]) as usize];
        (id != NONE).then_some(id as usize)
    }

    pub fn adjacency(&self, q: QubitId) -> Result<&[QubitId]> {
        self.neighbors.get(q).map(|v| v.as_slice()).ok_or(CqcError::UnknownQubit(q))
    }

    /// Cell id for integer cell indices, wrapping under periodic boundary.
    pub fn cell_index(&self, ijk: [i64; 3]) -> Option<usize> {
        let mut v = [0usize; 3];
        for a in 0..3 {
            let d = self.dims[a] as i64;
            let x = match self.boundary {
                Boundary::Periodic => ijk[a].rem_euclid(d),
                Boundary::Open if (0..d).contains(&ijk[a]) => ijk[a],
                Boundary::Open => return None,
            };
            v[a] = x as usize;
        }
        Some((v[0] * self.dims[1] + v[1]) * self.dims[2] + v[2])
    }

    /// Integer indices `(i, j, k)` of a cell id.
    pub fn cell_ijk(&self, cell: usize) -> [i64; 3] {
        let k = cell % self.dims[2];
        let j = (cell / self.dims[2]) % self.dims[1];
        let i = cell / (self.dims[1] * self.dims[2]);
        [i as i64, j as i64, k as i64]
    }

    /// The (one or two) cells bordering a face qubit.
    pub fn cells_of_face(&self, f: QubitId) -> Vec<usize> {
        let c = self.coords[f];
        let normal = (0..3).find(|&a| c[a].rem_euclid(2) == 0).expect("face has an even axis");
        let mut out = Vec::with_capacity(2);
        for sign in [-1, 1] {
            let center = add(c, unit(normal, sign));
            let ijk = center.map(|v| (v as i64 - 1).div_euclid(2));
            if let Some(id) = self.cell_index(ijk) {
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        }
        out
    }

    /// The (up to four) cells around an edge qubit.
    pub fn cells_of_edge(&self, e: QubitId) -> Vec<usize> {
        let c = self.coords[e];
        let t = (0..3).find(|&a| c[a].rem_euclid(2) == 1).expect("edge has an odd axis");
        let (a, b) = ((t + 1) % 3, (t + 2) % 3);
        let mut out = Vec::with_capacity(4);
        for sa in [-1, 1] {
            for sb in [-1, 1] {
                let center = add(add(c, unit(a, sa)), unit(b, sb));
                let ijk = center.map(|v| (v as i64 - 1).div_euclid(2));
                if let Some(id) = self.cell_index(ijk) {
                    if !out.contains(&id) {
                        out.push(id);
                    }
                }
            }
        }
        out
    }

    /// The depth-4 CZ schedule as a proper 4-edge-coloring.
    ///
    /// A face with normal axis `n` has in-plane axes `a1 = n+1`, `a2 = n+2`
    /// (mod 3) and meets its edges in the order `+a1, -a1, +a2, -a2`. Each
    /// edge qubit then sees one face per layer.
    pub fn gate_schedule(&self) -> [Vec<(QubitId, QubitId)>; 4] {
        let mut layers: [Vec<(QubitId, QubitId)>; 4] = Default::default();
        for f in 0..self.num_qubits() {
            if self.kinds[f] != QubitKind::Face {
                continue;
            }
            let c = self.coords[f];
            let n = (0..3).find(|&a| c[a].rem_euclid(2) == 0).unwrap();
            let (a1, a2) = ((n + 1) % 3, (n + 2) % 3);
            let offsets = [unit(a1, 1), unit(a1, -1), unit(a2, 1), unit(a2, -1)];
            for (layer, off) in offsets.iter().enumerate() {
                if let Some(e) = self.qubit_at(add(c, *off)) {
                    layers[layer].push((f, e));
                }
            }
        }
        layers
    }

    /// Whether `layers` is a proper coloring covering every graph edge once.
    pub fn is_proper_schedule(&self, layers: &[Vec<(QubitId, QubitId)>]) -> bool {
        let mut covered = std::collections::BTreeSet::new();
        for layer in layers {
            let mut busy = vec![false; self.num_qubits()];
            for &(a, b) in layer {
                if busy[a] || busy[b] || !self.neighbors[a].contains(&b) {
                    return false;
                }
                busy[a] = true;
                busy[b] = true;
                if !covered.insert((a.min(b), a.max(b))) {
                    return false;
                }
            }
        }
        let total: usize = self.neighbors.iter().map(|n| n.len()).sum::<usize>() / 2;
        covered.len() == total
    }

    pub(crate) fn set_region(&mut self, q: QubitId, r: Region) {
        self.regions[q] = r;
    }

    pub fn to_doc(&self) -> LatticeDoc {
        let assignments = (0..self.num_qubits())
            .filter(|&q| self.regions[q] != Region::Vacuum)
            .map(|q| RegionAssignment { coord: self.coords[q], region: self.regions[q] })
            .collect();
        LatticeDoc { dims: self.dims, boundary: self.boundary, regions: RegionSpec { assignments } }
    }

    pub fn from_doc(doc: &LatticeDoc) -> Result<Self> {
        Self::new(doc.dims, doc.boundary, &doc.regions)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(n: usize) -> RhgLattice {
        build_lattice([n, n, n], Boundary::Periodic, &RegionSpec::default()).unwrap()
    }

    #[test]
    fn single_cell_counts() {
        let l = periodic(1);
        assert_eq!(l.num_qubits(), 6);
        let faces = (0..6).filter(|&q| l.kind(q) == QubitKind::Face).count();
        assert_eq!(faces, 3);
        assert_eq!(l.cells().len(), 1);
        assert_eq!(l.cells()[0].faces.len(), 6);
    }

    #[test]
    fn empty_dims_rejected() {
        let e = build_lattice([0, 1, 1], Boundary::Periodic, &RegionSpec::default());
        assert!(matches!(e, Err(CqcError::EmptyLattice(_))));
    }

    #[test]
    fn periodic_two_is_four_regular() {
        let l = periodic(2);
        assert_eq!(l.num_qubits(), 48);
        for q in 0..l.num_qubits() {
            let adj = l.adjacency(q).unwrap();
            assert_eq!(adj.len(), 4);
            for &p in adj {
                assert_ne!(l.kind(p), l.kind(q));
                assert!(l.adjacency(p).unwrap().contains(&q));
            }
        }
    }

    #[test]
    fn open_corner_edge_has_low_degree() {
        let l = build_lattice([1, 1, 1], Boundary::Open, &RegionSpec::default()).unwrap();
        let e = l.qubit_at([1, 0, 0]).unwrap();
        assert_eq!(l.kind(e), QubitKind::Edge);
        assert_eq!(l.adjacency(e).unwrap().len(), 2);
        for q in 0..l.num_qubits() {
            if l.kind(q) == QubitKind::Face {
                assert_eq!(l.adjacency(q).unwrap().len(), 4);
            }
        }
    }

    #[test]
    fn unknown_qubit_errors() {
        assert!(periodic(2).adjacency(48).is_err());
    }

    #[test]
    fn every_face_in_two_cells() {
        for n in [2, 3] {
            let l = periodic(n);
            assert_eq!(unit_cells(&l).len(), n * n * n);
            let mut count = vec![0; l.num_qubits()];
            for (_, faces) in unit_cells(&l) {
                for f in faces {
                    count[f] += 1;
                }
            }
            for q in 0..l.num_qubits() {
                let want = if l.kind(q) == QubitKind::Face { 2 } else { 0 };
                assert_eq!(count[q], want);
                if l.kind(q) == QubitKind::Face {
                    assert_eq!(l.cells_of_face(q).len(), 2);
                }
            }
        }
    }

    #[test]
    fn schedule_is_proper_four_coloring() {
        for n in [2, 3, 4] {
            let l = periodic(n);
            assert!(l.is_proper_schedule(&l.gate_schedule()));
        }
        let open = build_lattice([2, 3, 2], Boundary::Open, &RegionSpec::default()).unwrap();
        assert!(open.is_proper_schedule(&open.gate_schedule()));
    }

    #[test]
    fn region_spec_validation() {
        let bad = RegionSpec { assignments: vec![RegionAssignment { coord: [1, 1, 1], region: Region::Defect }] };
        assert!(matches!(
            build_lattice([2, 2, 2], Boundary::Periodic, &bad),
            Err(CqcError::UnknownCoordinate(_))
        ));
        let twice = RegionSpec {
            assignments: vec![
                RegionAssignment { coord: [1, 1, 0], region: Region::Defect },
                RegionAssignment { coord: [1, 1, 0], region: Region::Singular },
            ],
        };
        assert!(matches!(
            build_lattice([2, 2, 2], Boundary::Periodic, &twice),
            Err(CqcError::ConflictingRegion(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let spec = RegionSpec { assignments: vec![RegionAssignment { coord: [1, 0, 0], region: Region::Defect }] };
        let l = build_lattice([2, 2, 3], Boundary::Open, &spec).unwrap();
        let back = RhgLattice::from_json(&l.to_json().unwrap()).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn deterministic_indexing() {
        assert_eq!(periodic(3), periodic(3));
        let l = periodic(2);
        for q in 1..l.num_qubits() {
            assert!(l.coord(q - 1) < l.coord(q));
        }
    }
}
