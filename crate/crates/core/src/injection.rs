//! Magic-state injection site: a singular face qubit between the tips of two
//! defect cones.
//!
//! Cone cells are given in integer cell offsets relative to the lower tip
//! cell; the upper tip sits at `(0, 0, 1)` and the singular qubit is the
//! face between them. Each cone is a single-cell neck followed by square
//! blocks that widen by a fixed amount per layer. The blocks are anchored
//! at the neck column and open into opposite quadrants for the two cones.

use crate::error::{CqcError, Result};
use crate::lattice::{add, unit, Boundary, QubitId, QubitKind, Region, RegionSpec, RhgLattice};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

/// Version tag of the default (calibrated) geometry.
pub const GEOMETRY_VERSION: &str = "rhg-injection-pyramid-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionGeometry {
    /// Layers of single-cell neck per cone, counted from the tip.
    pub neck_depth: usize,
    /// Side of the first square block after the neck.
    pub first_side: usize,
    /// Side increment per further layer.
    pub growth: usize,
    /// Quadrant signs `(sx, sy)` the lower blocks open into.
    pub lower_quadrant: [i32; 2],
    pub upper_quadrant: [i32; 2],
    /// An edge qubit is defect when at least this many of its cells are
    /// cone cells.
    pub edge_rule: usize,
}

impl Default for InjectionGeometry {
    fn default() -> Self {
        InjectionGeometry {
            neck_depth: 3,
            first_side: 2,
            growth: 1,
            lower_quadrant: [1, 1],
            upper_quadrant: [-1, -1],
            edge_rule: 4,
        }
    }
}

impl InjectionGeometry {
    pub fn version(&self) -> String {
        if *self == Self::default() {
            GEOMETRY_VERSION.to_string()
        } else {
            format!(
                "custom:neck{}-side{}-grow{}-lo{:?}-up{:?}-r{}",
                self.neck_depth,
                self.first_side,
                self.growth,
                self.lower_quadrant,
                self.upper_quadrant,
                self.edge_rule
            )
        }
    }

    /// Block side at depth `d` from the tip (1 inside the neck).
    pub fn side(&self, d: usize) -> usize {
        if d < self.neck_depth {
            1
        } else {
            self.first_side + (d - self.neck_depth) * self.growth
        }
    }

    fn layer(&self, d: usize, quadrant: [i32; 2], z: i64, out: &mut Vec<[i64; 3]>) {
        let s = self.side(d) as i64;
        for i in 0..s {
            for j in 0..s {
                out.push([quadrant[0] as i64 * i, quadrant[1] as i64 * j, z]);
            }
        }
    }

    /// Cone cells (relative offsets) for cones reaching `depth_lower` and
    /// `depth_upper` layers.
    pub fn cones(&self, depth_lower: usize, depth_upper: usize) -> (Vec<[i64; 3]>, Vec<[i64; 3]>) {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for d in 0..depth_lower {
            self.layer(d, self.lower_quadrant, -(d as i64), &mut lower);
        }
        for d in 0..depth_upper {
            self.layer(d, self.upper_quadrant, 1 + d as i64, &mut upper);
        }
        (lower, upper)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionSite {
    pub lattice: RhgLattice,
    pub singular_qubit: QubitId,
    /// Absolute indices of the lower tip cell.
    pub origin: [i64; 3],
    /// Neck cells of both cones, lower tip to upper tip.
    pub defect_tube: Vec<usize>,
    pub lower_cone: BTreeSet<usize>,
    pub upper_cone: BTreeSet<usize>,
    /// Non-vacuum qubits; chains never traverse them.
    pub exclusion: BTreeSet<QubitId>,
    pub geometry_version: String,
}

/// Place the geometry at the lattice center and label its qubits.
pub fn injection_site(lattice: &RhgLattice, geometry: &InjectionGeometry) -> Result<InjectionSite> {
    let dims = lattice.dims().map(|d| d as i64);
    let origin = [dims[0] / 2, dims[1] / 2, (dims[2] - 1) / 2];
    let neck = geometry.neck_depth.max(1) as i64;
    if origin[2] - (neck - 1) < 0 || origin[2] + neck >= dims[2] {
        return Err(CqcError::GeometryDoesNotFit(format!(
            "neck depth {} needs {} layers along z, lattice has {}",
            geometry.neck_depth,
            2 * neck,
            dims[2]
        )));
    }
    if lattice.boundary() == Boundary::Periodic && dims.iter().any(|&d| d < 2 * neck + 2) {
        return Err(CqcError::GeometryDoesNotFit("periodic lattice wraps onto the tube".into()));
    }
    let depth_lower = (origin[2] + 2) as usize;
    let depth_upper = (dims[2] - origin[2]) as usize;
    let (lower, upper) = geometry.cones(depth_lower, depth_upper);
    InjectionSite::from_cones(
        lattice,
        origin,
        &lower,
        &upper,
        geometry.neck_depth,
        geometry.edge_rule,
        geometry.version(),
    )
}

impl InjectionSite {
    /// Build a site from explicit cone cells (offsets relative to `origin`).
    /// Cells falling outside the lattice are dropped; under periodic
    /// boundary offsets are kept within half a period.
    pub fn from_cones(
        lattice: &RhgLattice,
        origin: [i64; 3],
        lower: &[[i64; 3]],
        upper: &[[i64; 3]],
        neck_depth: usize,
        edge_rule: usize,
        geometry_version: String,
    ) -> Result<Self> {
        let dims = lattice.dims().map(|d| d as i64);
        let in_range = |rel: &[i64; 3]| match lattice.boundary() {
            Boundary::Open => (0..3).all(|a| (0..dims[a]).contains(&(origin[a] + rel[a]))),
            Boundary::Periodic => (0..3).all(|a| rel[a] > -(dims[a] + 1) / 2 && rel[a] <= dims[a] / 2),
        };
        let place = |cells: &[[i64; 3]]| -> BTreeSet<usize> {
            cells
                .iter()
                .filter(|r| in_range(r))
                .filter_map(|r| lattice.cell_index([origin[0] + r[0], origin[1] + r[1], origin[2] + r[2]]))
                .collect()
        };
        let lower_cone = place(lower);
        let upper_cone = place(upper);
        let lower_tip = lattice.cell_index(origin).ok_or_else(|| CqcError::InvalidSite("origin outside".into()))?;
        let upper_tip = lattice
            .cell_index([origin[0], origin[1], origin[2] + 1])
            .ok_or_else(|| CqcError::GeometryDoesNotFit("upper tip outside lattice".into()))?;
        if !lower_cone.contains(&lower_tip) || !upper_cone.contains(&upper_tip) {
            return Err(CqcError::InvalidSite("cones must contain their tips".into()));
        }
        if !lower_cone.is_disjoint(&upper_cone) {
            return Err(CqcError::InvalidSite("cones overlap".into()));
        }

        // Membership by relative offset, so cones continue past an open
        // surface instead of exposing the axis there.
        let wrap = |ijk: [i64; 3]| -> [i64; 3] {
            let mut rel = [0; 3];
            for a in 0..3 {
                rel[a] = ijk[a] - origin[a];
                if lattice.boundary() == Boundary::Periodic {
                    rel[a] = rel[a].rem_euclid(dims[a]);
                    if rel[a] > dims[a] / 2 {
                        rel[a] -= dims[a];
                    }
                }
            }
            rel
        };
        let cone_rel: HashSet<[i64; 3]> = lower
            .iter()
            .chain(upper)
            .filter(|r| lattice.boundary() == Boundary::Open || in_range(r))
            .copied()
            .collect();
        let in_cone = |center: [i32; 3]| cone_rel.contains(&wrap(center.map(|v| (v as i64 - 1).div_euclid(2))));

        let mut lat = lattice.clone();
        let tip_center = lat.cells()[lower_tip].center;
        let singular = lat.qubit_at(add(tip_center, unit(2, 1))).expect("face above the lower tip");
        let mut exclusion = BTreeSet::new();
        for q in 0..lat.num_qubits() {
            let c = lat.coord(q);
            let region = match lat.kind(q) {
                _ if q == singular => Region::Singular,
                QubitKind::Face => {
                    let n = (0..3).find(|&a| c[a].rem_euclid(2) == 0).unwrap();
                    if in_cone(add(c, unit(n, -1))) && in_cone(add(c, unit(n, 1))) {
                        Region::Defect
                    } else {
                        Region::Vacuum
                    }
                }
                QubitKind::Edge => {
                    let t = (0..3).find(|&a| c[a].rem_euclid(2) == 1).unwrap();
                    let (a, b) = ((t + 1) % 3, (t + 2) % 3);
                    let mut n = 0;
                    for sa in [-1, 1] {
                        for sb in [-1, 1] {
                            n += in_cone(add(add(c, unit(a, sa)), unit(b, sb))) as usize;
                        }
                    }
                    if n >= edge_rule {
                        Region::Defect
                    } else {
                        Region::Vacuum
                    }
                }
            };
            if region != Region::Vacuum {
                exclusion.insert(q);
            }
            lat.set_region(q, region);
        }

        let mut defect_tube = Vec::new();
        for d in (0..neck_depth as i64).rev() {
            defect_tube.extend(lat.cell_index([origin[0], origin[1], origin[2] - d]));
        }
        for d in 0..neck_depth as i64 {
            defect_tube.extend(lat.cell_index([origin[0], origin[1], origin[2] + 1 + d]));
        }

        let site = InjectionSite {
            lattice: lat,
            singular_qubit: singular,
            origin,
            defect_tube,
            lower_cone,
            upper_cone,
            exclusion,
            geometry_version,
        };
        site.validate()?;
        Ok(site)
    }

    /// Check the structural invariants of the site.
    pub fn validate(&self) -> Result<()> {
        let lat = &self.lattice;
        if lat.region(self.singular_qubit) != Region::Singular {
            return Err(CqcError::InvalidSite("singular qubit is not labelled singular".into()));
        }
        for w in self.defect_tube.windows(2) {
            let a = lat.cells()[w[0]].center;
            let b = lat.cells()[w[1]].center;
            let step: i32 = (0..3).map(|i| (a[i] - b[i]).abs()).sum();
            if step != 2 {
                return Err(CqcError::InvalidSite("defect tube is not connected".into()));
            }
        }
        let first = *self.defect_tube.first().ok_or_else(|| CqcError::InvalidSite("empty tube".into()))?;
        let last = *self.defect_tube.last().unwrap();
        if !self.lower_cone.contains(&first) || !self.upper_cone.contains(&last) {
            return Err(CqcError::InvalidSite("cones do not touch the tube".into()));
        }
        Ok(())
    }

    /// Region labels as a spec, e.g. for serialization.
    pub fn region_spec(&self) -> RegionSpec {
        self.lattice.to_doc().regions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    fn open(n: usize) -> RhgLattice {
        build_lattice([n, n, n], Boundary::Open, &RegionSpec::default()).unwrap()
    }

    #[test]
    fn default_site_invariants() {
        let site = injection_site(&open(8), &InjectionGeometry::default()).unwrap();
        assert_eq!(site.lattice.region(site.singular_qubit), Region::Singular);
        assert_eq!(site.defect_tube.len(), 6);
        assert_eq!(site.geometry_version, GEOMETRY_VERSION);
        assert!(site.exclusion.contains(&site.singular_qubit));
        // The neck carries no defect edges: its edges touch at most 2 cone cells.
        let tip = site.lattice.cells()[site.defect_tube[2]].center;
        let e = site.lattice.qubit_at([tip[0] + 1, tip[1], tip[2] + 1]).unwrap();
        assert_eq!(site.lattice.region(e), Region::Vacuum);
    }

    #[test]
    fn tube_longer_than_lattice() {
        let g = InjectionGeometry { neck_depth: 6, ..Default::default() };
        assert!(matches!(injection_site(&open(8), &g), Err(CqcError::GeometryDoesNotFit(_))));
    }

    #[test]
    fn pyramid_sides() {
        let g = InjectionGeometry::default();
        let sides: Vec<usize> = (0..7).map(|d| g.side(d)).collect();
        assert_eq!(sides, vec![1, 1, 1, 2, 3, 4, 5]);
        let (lo, up) = g.cones(4, 4);
        assert_eq!(lo.len(), 3 + 4);
        assert!(up.contains(&[-1, -1, 4]));
        assert!(lo.contains(&[1, 1, -3]));
    }

    #[test]
    fn region_spec_round_trips() {
        let site = injection_site(&open(8), &InjectionGeometry::default()).unwrap();
        let spec = site.region_spec();
        let rebuilt = build_lattice([8, 8, 8], Boundary::Open, &spec).unwrap();
        assert_eq!(rebuilt, site.lattice);
    }
}
