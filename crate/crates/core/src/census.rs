//! Exact census of self-avoiding error chains around an injection site.
//!
//! Dual chains live on the cell lattice. A dual chain starts in a lower-cone
//! cell, crosses vacuum faces through free cells, and stops on first entering
//! an upper-cone cell; its length is the number of faces crossed.
//!
//! Primal chains live on the vertex lattice (edges are edge qubits). A primal
//! chain is a self-avoiding polygon over vacuum edges whose winding number
//! around the neck axis is odd. Winding parity is the parity of crossings of
//! the half-plane `{y = axis, x > axis}`. The singular qubit itself is
//! counted as the single primal chain of length 1.

use crate::error::{CqcError, Result};
use crate::injection::InjectionSite;
use crate::lattice::{Boundary, QubitKind, Region};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default resource guard on `max_len`.
pub const DEFAULT_HARD_CAP: usize = 16;

/// Open lattice side on which every chain up to length 14 stays clear of
/// the guard band.
pub const CENSUS_LATTICE_SIDE: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Primal,
    Dual,
}

impl ChainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainKind::Primal => "primal",
            ChainKind::Dual => "dual",
        }
    }
}

impl std::str::FromStr for ChainKind {
    type Err = CqcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primal" => Ok(ChainKind::Primal),
            "dual" => Ok(ChainKind::Dual),
            other => Err(CqcError::Parse(format!("unknown chain kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCensus {
    pub kind: ChainKind,
    /// Count per length, for every length in `1..=max_len`.
    pub counts: BTreeMap<usize, u64>,
    pub max_len: usize,
    pub geometry_version: String,
}

impl WalkCensus {
    pub fn count(&self, len: usize) -> u64 {
        self.counts.get(&len).copied().unwrap_or(0)
    }

    pub fn as_vec(&self) -> Vec<u64> {
        (1..=self.max_len).map(|l| self.count(l)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CensusOptions {
    pub hard_cap: usize,
    /// Walk prefixes of this many steps are distributed to workers.
    pub prefix_depth: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { hard_cap: DEFAULT_HARD_CAP, prefix_depth: 4 }
    }
}

const NONE: u32 = u32::MAX;
const FAR: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Free,
    /// Free, but a counted chain through it would feel the lattice edge.
    Guard,
    Lower,
    Upper,
}

/// Lattice of cells (dual) or vertices (primal) with up to six neighbors.
struct ChainGraph {
    nbr: Vec<[u32; 6]>,
    /// Qubit id of the connecting face or edge qubit per slot.
    via: Vec<[u32; 6]>,
    /// Bit `s` set when slot `s` crosses the winding cut.
    cut: Vec<u8>,
    class: Vec<Node>,
}

fn near_edge(off: i64, len: i64, boundary: Boundary, origin: i64) -> bool {
    match boundary {
        Boundary::Open => off == 0 || off == len - 1,
        Boundary::Periodic => {
            let rel = (off - origin).rem_euclid(len);
            let rel = if rel > len / 2 { rel - len } else { rel };
            rel == len / 2 || rel == -((len - 1) / 2)
        }
    }
}

fn dual_graph(site: &InjectionSite) -> ChainGraph {
    let lat = &site.lattice;
    let dims = lat.dims().map(|d| d as i64);
    let n = lat.cells().len();
    let mut nbr = vec![[NONE; 6]; n];
    let mut via = vec![[NONE; 6]; n];
    let mut class = vec![Node::Free; n];
    for c in 0..n {
        let ijk = lat.cell_ijk(c);
        if site.lower_cone.contains(&c) {
            class[c] = Node::Lower;
        } else if site.upper_cone.contains(&c) {
            class[c] = Node::Upper;
        } else if (0..3).any(|a| near_edge(ijk[a], dims[a], lat.boundary(), site.origin[a])) {
            class[c] = Node::Guard;
        }
        for (slot, &f) in lat.cells()[c].faces.iter().enumerate() {
            if lat.region(f) != Region::Vacuum {
                continue;
            }
            let axis = slot / 2;
            let sign = if slot % 2 == 0 { -1 } else { 1 };
            let mut other = ijk;
            other[axis] += sign;
            if let Some(o) = lat.cell_index(other) {
                if o != c {
                    nbr[c][slot] = o as u32;
                    via[c][slot] = f as u32;
                }
            }
        }
    }
    ChainGraph { nbr, via, cut: vec![0; n], class }
}

fn primal_graph(site: &InjectionSite) -> ChainGraph {
    let lat = &site.lattice;
    let dims = lat.dims().map(|d| d as i64);
    let per_axis = match lat.boundary() {
        Boundary::Open => dims.map(|d| d + 1),
        Boundary::Periodic => dims,
    };
    let n = (per_axis[0] * per_axis[1] * per_axis[2]) as usize;
    let index = |v: [i64; 3]| -> Option<usize> {
        let mut w = [0i64; 3];
        for a in 0..3 {
            w[a] = match lat.boundary() {
                Boundary::Periodic => v[a].rem_euclid(per_axis[a]),
                Boundary::Open if (0..per_axis[a]).contains(&v[a]) => v[a],
                Boundary::Open => return None,
            };
        }
        Some(((w[0] * per_axis[1] + w[1]) * per_axis[2] + w[2]) as usize)
    };
    // Axis through the neck column, in doubled coordinates.
    let ax = 2 * site.origin[0] + 1;
    let ay = 2 * site.origin[1] + 1;
    let period = dims.map(|d| 2 * d);
    let mut nbr = vec![[NONE; 6]; n];
    let mut via = vec![[NONE; 6]; n];
    let mut cut = vec![0u8; n];
    let mut class = vec![Node::Free; n];
    for i in 0..per_axis[0] {
        for j in 0..per_axis[1] {
            for k in 0..per_axis[2] {
                let v = [i, j, k];
                let id = index(v).unwrap();
                let guard = (0..3).any(|a| match lat.boundary() {
                    Boundary::Open => v[a] == 0 || v[a] == dims[a],
                    Boundary::Periodic => near_edge(v[a], dims[a], Boundary::Periodic, site.origin[a]),
                });
                if guard {
                    class[id] = Node::Guard;
                }
                for slot in 0..6 {
                    let axis = slot / 2;
                    let sign: i64 = if slot % 2 == 0 { -1 } else { 1 };
                    let doubled = [2 * i, 2 * j, 2 * k];
                    let mut e = doubled;
                    e[axis] += sign;
                    let Some(q) = lat.qubit_at([e[0] as i32, e[1] as i32, e[2] as i32]) else { continue };
                    debug_assert_eq!(lat.kind(q), QubitKind::Edge);
                    if lat.region(q) != Region::Vacuum {
                        continue;
                    }
                    let mut w = v;
                    w[axis] += sign;
                    let Some(o) = index(w) else { continue };
                    if o == id {
                        continue;
                    }
                    nbr[id][slot] = o as u32;
                    via[id][slot] = q as u32;
                    if axis == 1 && e[1].rem_euclid(period[1]) == ay.rem_euclid(period[1]) {
                        let mut dx = (e[0] - ax).rem_euclid(period[0]);
                        if lat.boundary() == Boundary::Open {
                            dx = e[0] - ax;
                        } else if dx > period[0] / 2 {
                            dx -= period[0];
                        }
                        if dx > 0 {
                            cut[id] |= 1 << slot;
                        }
                    }
                }
            }
        }
    }
    ChainGraph { nbr, via, cut, class }
}

/// Breadth-first distances from `sources` through free and guard nodes.
fn distances(g: &ChainGraph, sources: &[u32]) -> Vec<u16> {
    let mut dist = vec![FAR; g.nbr.len()];
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        dist[s as usize] = 0;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        for slot in 0..6 {
            let a = g.nbr[v as usize][slot];
            if a == NONE || dist[a as usize] != FAR {
                continue;
            }
            if matches!(g.class[a as usize], Node::Free | Node::Guard) {
                dist[a as usize] = dv + 1;
                queue.push_back(a);
            }
        }
    }
    dist
}

/// Shortest return walks to `home` on the two-sheeted cover: entry `[p]`
/// is the length of the shortest walk back whose crossing parity is `p`.
fn parity_distances(g: &ChainGraph, home: u32, banned_below: u32) -> Vec<[u16; 2]> {
    let mut dist = vec![[FAR; 2]; g.nbr.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[home as usize][0] = 0;
    queue.push_back((home, 0u8));
    while let Some((v, p)) = queue.pop_front() {
        let dv = dist[v as usize][p as usize];
        for slot in 0..6 {
            let a = g.nbr[v as usize][slot];
            if a == NONE {
                continue;
            }
            let crossing = g.cut[v as usize] >> slot & 1;
            if crossing == 1 && g.via[v as usize][slot] < banned_below {
                continue;
            }
            let np = p ^ crossing;
            if dist[a as usize][np as usize] == FAR {
                dist[a as usize][np as usize] = dv + 1;
                queue.push_back((a, np));
            }
        }
    }
    dist
}

struct Walker<'a> {
    g: &'a ChainGraph,
    dist: &'a [u16],
    pdist: &'a [[u16; 2]],
    max_len: usize,
    visited: Vec<bool>,
    counts: Vec<u64>,
    guard_hit: Option<usize>,
    /// Primal only: start vertex, root edge id, winding parity so far.
    home: u32,
    root: u32,
    parity: u8,
}

impl<'a> Walker<'a> {
    fn new(g: &'a ChainGraph, dist: &'a [u16], pdist: &'a [[u16; 2]], max_len: usize) -> Self {
        Walker {
            g,
            dist,
            pdist,
            max_len,
            visited: vec![false; g.nbr.len()],
            counts: vec![0; max_len + 1],
            guard_hit: None,
            home: NONE,
            root: NONE,
            parity: 0,
        }
    }

    /// Whether a chain at node `a` after `len` steps can still complete
    /// within `max_len` given remaining distance `d`. Records guard contact.
    fn admit(&mut self, a: u32, len: usize, d: u16) -> bool {
        if d == FAR || len + d as usize > self.max_len {
            return false;
        }
        if self.g.class[a as usize] == Node::Guard {
            let total = len + d as usize;
            self.guard_hit = Some(self.guard_hit.map_or(total, |h: usize| h.min(total)));
            return false;
        }
        true
    }

    fn reachable(&mut self, a: u32, len: usize) -> bool {
        self.admit(a, len, self.dist[a as usize])
    }

    /// Primal: parity after stepping onto `a` is `parity`; the way home must
    /// flip it to odd.
    fn reachable_odd(&mut self, a: u32, len: usize, parity: u8) -> bool {
        self.admit(a, len, self.pdist[a as usize][(1 ^ parity) as usize])
    }

    fn dual(&mut self, v: u32, len: usize) {
        for slot in 0..6 {
            let a = self.g.nbr[v as usize][slot];
            if a == NONE {
                continue;
            }
            match self.g.class[a as usize] {
                Node::Upper => self.counts[len + 1] += 1,
                Node::Lower => {}
                Node::Free | Node::Guard => {
                    if self.visited[a as usize] || !self.reachable(a, len + 1) {
                        continue;
                    }
                    self.visited[a as usize] = true;
                    self.dual(a, len + 1);
                    self.visited[a as usize] = false;
                }
            }
        }
    }

    fn primal(&mut self, v: u32, len: usize) {
        let vi = v as usize;
        for slot in 0..6 {
            let a = self.g.nbr[vi][slot];
            if a == NONE {
                continue;
            }
            let crossing = self.g.cut[vi] >> slot & 1;
            if crossing == 1 && self.g.via[vi][slot] <= self.root {
                continue;
            }
            if a == self.home {
                if len + 1 >= 3 && (self.parity ^ crossing) == 1 {
                    self.counts[len + 1] += 1;
                }
                continue;
            }
            if self.visited[a as usize] || !self.reachable_odd(a, len + 1, self.parity ^ crossing) {
                continue;
            }
            self.visited[a as usize] = true;
            self.parity ^= crossing;
            self.primal(a, len + 1);
            self.parity ^= crossing;
            self.visited[a as usize] = false;
        }
    }
}

/// A unit of parallel work: a walk prefix and its winding parity.
#[derive(Clone)]
struct Task {
    path: Vec<u32>,
    parity: u8,
}

fn check_len(max_len: usize, opts: &CensusOptions) -> Result<()> {
    if max_len == 0 {
        return Err(CqcError::OutOfRange("max_len must be at least 1".into()));
    }
    if max_len > opts.hard_cap {
        return Err(CqcError::ResourceGuard { requested: max_len, cap: opts.hard_cap });
    }
    Ok(())
}

fn finish(kind: ChainKind, site: &InjectionSite, max_len: usize, counts: Vec<u64>, guard: Option<usize>) -> Result<WalkCensus> {
    if let Some(length) = guard {
        return Err(CqcError::LatticeTooSmall { length });
    }
    Ok(WalkCensus {
        kind,
        counts: (1..=max_len).map(|l| (l, counts[l])).collect(),
        max_len,
        geometry_version: site.geometry_version.clone(),
    })
}

fn merge(mut a: (Vec<u64>, Option<usize>), b: (Vec<u64>, Option<usize>)) -> (Vec<u64>, Option<usize>) {
    for (x, y) in a.0.iter_mut().zip(&b.0) {
        *x = x.checked_add(*y).expect("census count overflow");
    }
    a.1 = match (a.1, b.1) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    a
}

/// Enumerate chains with the default options.
pub fn enumerate_chains(site: &InjectionSite, kind: ChainKind, max_len: usize) -> Result<WalkCensus> {
    enumerate_chains_with(site, kind, max_len, &CensusOptions::default())
}

/// Pruned, parallel enumeration. Results are exact and independent of the
/// number of worker threads.
pub fn enumerate_chains_with(
    site: &InjectionSite,
    kind: ChainKind,
    max_len: usize,
    opts: &CensusOptions,
) -> Result<WalkCensus> {
    check_len(max_len, opts)?;
    match kind {
        ChainKind::Dual => enumerate_dual(site, max_len, opts),
        ChainKind::Primal => enumerate_primal(site, max_len, opts),
    }
}

fn enumerate_dual(site: &InjectionSite, max_len: usize, opts: &CensusOptions) -> Result<WalkCensus> {
    let g = dual_graph(site);
    let uppers: Vec<u32> = (0..g.class.len() as u32).filter(|&c| g.class[c as usize] == Node::Upper).collect();
    let dist = distances(&g, &uppers);

    // Expand prefixes serially; completions found on the way are tallied.
    let mut head = Walker::new(&g, &dist, &[], max_len);
    let mut tasks = Vec::new();
    let mut frontier: Vec<Vec<u32>> = (0..g.class.len() as u32)
        .filter(|&c| g.class[c as usize] == Node::Lower)
        .map(|c| vec![c])
        .collect();
    for _ in 0..opts.prefix_depth.max(1) {
        let mut next = Vec::new();
        for path in frontier {
            let v = *path.last().unwrap();
            let len = path.len() - 1;
            for slot in 0..6 {
                let a = g.nbr[v as usize][slot];
                if a == NONE {
                    continue;
                }
                match g.class[a as usize] {
                    Node::Upper => head.counts[len + 1] += 1,
                    Node::Lower => {}
                    _ => {
                        if path.contains(&a) || !head.reachable(a, len + 1) {
                            continue;
                        }
                        let mut p = path.clone();
                        p.push(a);
                        next.push(p);
                    }
                }
            }
        }
        frontier = next;
    }
    tasks.extend(frontier.into_iter().map(|path| Task { path, parity: 0 }));

    let (counts, guard) = tasks
        .par_iter()
        .map_init(
            || Walker::new(&g, &dist, &[], max_len),
            |w, t| {
                w.counts.iter_mut().for_each(|c| *c = 0);
                w.guard_hit = None;
                for &v in &t.path {
                    w.visited[v as usize] = true;
                }
                w.dual(*t.path.last().unwrap(), t.path.len() - 1);
                for &v in &t.path {
                    w.visited[v as usize] = false;
                }
                (w.counts.clone(), w.guard_hit)
            },
        )
        .reduce(|| (vec![0; max_len + 1], None), merge);
    let (counts, guard) = merge((counts, guard), (head.counts, head.guard_hit));
    finish(ChainKind::Dual, site, max_len, counts, guard)
}

fn enumerate_primal(site: &InjectionSite, max_len: usize, opts: &CensusOptions) -> Result<WalkCensus> {
    let g = primal_graph(site);
    // Each polygon is rooted at its smallest cut edge, traversed from the
    // lower-indexed endpoint across that edge.
    let mut roots = Vec::new();
    for v in 0..g.nbr.len() {
        for slot in 0..6 {
            let a = g.nbr[v][slot];
            if g.cut[v] >> slot & 1 == 1 && (v as u32) < a {
                roots.push((g.via[v][slot], v as u32, a));
            }
        }
    }
    roots.sort_unstable();

    let per_root: Vec<(Vec<u64>, Option<usize>)> = roots
        .par_iter()
        .map(|&(root, home, first)| {
            let pdist = parity_distances(&g, home, root + 1);
            let mut w = Walker::new(&g, &[], &pdist, max_len);
            w.home = home;
            w.root = root;
            let back = pdist[first as usize][0];
            if back == FAR || 1 + back as usize > max_len {
                return (w.counts, None);
            }
            if g.class[first as usize] == Node::Guard || g.class[home as usize] == Node::Guard {
                return (w.counts, Some(1 + back as usize));
            }
            let mut frontier = vec![Task { path: vec![home, first], parity: 1 }];
            for _ in 1..opts.prefix_depth.max(1) {
                let mut next = Vec::new();
                for t in frontier {
                    let v = *t.path.last().unwrap() as usize;
                    let len = t.path.len() - 1;
                    for slot in 0..6 {
                        let a = g.nbr[v][slot];
                        if a == NONE {
                            continue;
                        }
                        let crossing = g.cut[v] >> slot & 1;
                        if crossing == 1 && g.via[v][slot] <= root {
                            continue;
                        }
                        if a == home {
                            if len + 1 >= 3 && (t.parity ^ crossing) == 1 {
                                w.counts[len + 1] += 1;
                            }
                            continue;
                        }
                        if t.path.contains(&a) || !w.reachable_odd(a, len + 1, t.parity ^ crossing) {
                            continue;
                        }
                        let mut p = t.path.clone();
                        p.push(a);
                        next.push(Task { path: p, parity: t.parity ^ crossing });
                    }
                }
                frontier = next;
            }
            let head = (std::mem::take(&mut w.counts), w.guard_hit);
            let rest = frontier
                .par_iter()
                .map_init(
                    || {
                        let mut w = Walker::new(&g, &[], &pdist, max_len);
                        w.home = home;
                        w.root = root;
                        w
                    },
                    |w, t| {
                        w.counts.iter_mut().for_each(|c| *c = 0);
                        w.guard_hit = None;
                        w.parity = t.parity;
                        for &v in &t.path {
                            w.visited[v as usize] = true;
                        }
                        w.primal(*t.path.last().unwrap(), t.path.len() - 1);
                        for &v in &t.path {
                            w.visited[v as usize] = false;
                        }
                        (w.counts.clone(), w.guard_hit)
                    },
                )
                .reduce(|| (vec![0; max_len + 1], None), merge);
            merge(head, rest)
        })
        .collect();
    let (mut counts, guard) = per_root.into_iter().fold((vec![0; max_len + 1], None), merge);
    if site.lattice.region(site.singular_qubit) == Region::Singular {
        counts[1] += 1;
    }
    finish(ChainKind::Primal, site, max_len, counts, guard)
}

/// Plain recursive enumeration without distance pruning, used as an
/// independent check of [`enumerate_chains`].
///
/// Dual chains are grown from every lower-cone cell. Primal polygons are
/// grown from every vertex within `max_len / 2 + 1` cells of the neck axis,
/// kept only when the start is the smallest vertex, and halved for the two
/// traversal directions.
pub fn reference_census(site: &InjectionSite, kind: ChainKind, max_len: usize) -> Result<WalkCensus> {
    check_len(max_len, &CensusOptions::default())?;
    let mut counts = vec![0u64; max_len + 1];
    match kind {
        ChainKind::Dual => {
            let g = dual_graph(site);
            fn walk(g: &ChainGraph, v: usize, len: usize, max: usize, seen: &mut [bool], counts: &mut [u64]) {
                for &a in &g.nbr[v] {
                    if a == NONE {
                        continue;
                    }
                    let a = a as usize;
                    match g.class[a] {
                        Node::Upper => counts[len + 1] += 1,
                        Node::Lower => {}
                        _ if seen[a] || len + 1 >= max => {}
                        _ => {
                            seen[a] = true;
                            walk(g, a, len + 1, max, seen, counts);
                            seen[a] = false;
                        }
                    }
                }
            }
            let mut seen = vec![false; g.nbr.len()];
            for s in 0..g.nbr.len() {
                if g.class[s] == Node::Lower {
                    walk(&g, s, 0, max_len, &mut seen, &mut counts);
                }
            }
        }
        ChainKind::Primal => {
            let g = primal_graph(site);
            let lat = &site.lattice;
            let dims = lat.dims().map(|d| d as i64);
            let per_axis = match lat.boundary() {
                Boundary::Open => dims.map(|d| d + 1),
                Boundary::Periodic => dims,
            };
            let reach = max_len as i64 / 2 + 1;
            struct Ctx<'a> {
                g: &'a ChainGraph,
                start: usize,
                max: usize,
                seen: Vec<bool>,
                counts: &'a mut [u64],
            }
            fn walk(c: &mut Ctx, v: usize, len: usize, parity: u8) {
                for slot in 0..6 {
                    let a = c.g.nbr[v][slot];
                    if a == NONE {
                        continue;
                    }
                    let a = a as usize;
                    let p = parity ^ (c.g.cut[v] >> slot & 1);
                    if a == c.start {
                        if len + 1 >= 3 && p == 1 {
                            c.counts[len + 1] += 1;
                        }
                        continue;
                    }
                    if a < c.start || c.seen[a] || len + 1 >= c.max {
                        continue;
                    }
                    c.seen[a] = true;
                    walk(c, a, len + 1, p);
                    c.seen[a] = false;
                }
            }
            let mut ctx = Ctx { g: &g, start: 0, max: max_len, seen: vec![false; g.nbr.len()], counts: &mut counts };
            for i in 0..per_axis[0] {
                for j in 0..per_axis[1] {
                    if (i - site.origin[0]).abs() > reach || (j - site.origin[1]).abs() > reach {
                        continue;
                    }
                    for k in 0..per_axis[2] {
                        let s = ((i * per_axis[1] + j) * per_axis[2] + k) as usize;
                        ctx.start = s;
                        ctx.seen[s] = true;
                        walk(&mut ctx, s, 0, 0);
                        ctx.seen[s] = false;
                    }
                }
            }
            for c in counts.iter_mut() {
                *c /= 2;
            }
            if site.lattice.region(site.singular_qubit) == Region::Singular {
                counts[1] += 1;
            }
        }
    }
    finish(kind, site, max_len, counts, None)
}

/// Coefficients of the logical error polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ErrorPolynomials {
    pub x_coeffs: BTreeMap<usize, u64>,
    pub z_coeffs: BTreeMap<usize, u64>,
    pub truncation_degree: usize,
}

/// Copy dual counts into the X polynomial and primal counts into the Z
/// polynomial, up to `truncation`. Zero coefficients are omitted.
pub fn census_to_polynomials(primal: &WalkCensus, dual: &WalkCensus, truncation: usize) -> Result<ErrorPolynomials> {
    if primal.kind != ChainKind::Primal {
        return Err(CqcError::KindMismatch { expected: "primal".into(), got: primal.kind.as_str().into() });
    }
    if dual.kind != ChainKind::Dual {
        return Err(CqcError::KindMismatch { expected: "dual".into(), got: dual.kind.as_str().into() });
    }
    if primal.geometry_version != dual.geometry_version {
        return Err(CqcError::GeometryMismatch(primal.geometry_version.clone(), dual.geometry_version.clone()));
    }
    if truncation > primal.max_len.min(dual.max_len) {
        return Err(CqcError::OutOfRange(format!(
            "truncation {truncation} exceeds census length {}",
            primal.max_len.min(dual.max_len)
        )));
    }
    let take = |c: &WalkCensus| -> BTreeMap<usize, u64> {
        (1..=truncation).filter(|&d| c.count(d) != 0).map(|d| (d, c.count(d))).collect()
    };
    Ok(ErrorPolynomials { x_coeffs: take(dual), z_coeffs: take(primal), truncation_degree: truncation })
}

impl ErrorPolynomials {
    pub fn eval_x(&self, q: f64) -> f64 {
        eval(&self.x_coeffs, q)
    }

    pub fn eval_z(&self, q: f64) -> f64 {
        eval(&self.z_coeffs, q)
    }
}

fn eval(coeffs: &BTreeMap<usize, u64>, q: f64) -> f64 {
    coeffs.iter().map(|(&d, &c)| c as f64 * q.powi(d as i32)).sum()
}

/// `(q̄_X, q̄_Z)` at dephasing rate `q`.
pub fn logical_error_rates(polys: &ErrorPolynomials, q: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.5).contains(&q) {
        return Err(CqcError::OutOfRange(format!("q = {q} outside [0, 1/2]")));
    }
    Ok((polys.eval_x(q), polys.eval_z(q)))
}

/// The counting bound `N (6/5) 5^L` on self-avoiding walks of length `L`
/// from `N` starting points. Overflows to infinity for huge `L`.
pub fn saw_upper_bound(n: u64, len: u32) -> f64 {
    n as f64 * 1.2 * 5f64.powi(len as i32)
}

/// Tail estimate for `Σ_{L ≥ from_len} count(L) q^L`: exact counts up to
/// `max_len`, then growth by at most 5 per step from the last exact counts,
/// `count(L) ≤ a·5^{L−max_len}` with `a = max(count(M), 5·count(M−1))`
/// capped by `saw_upper_bound(1, M)`. The growth step holds for walk
/// prefixes; for completed chains it is an assumption. With no nonzero
/// anchor the unanchored `saw_upper_bound(1, L)` is used.
pub fn truncation_tail(census: &WalkCensus, q: f64, from_len: usize) -> Result<f64> {
    if from_len > census.max_len + 1 {
        return Err(CqcError::OutOfRange(format!("from_len {from_len} beyond max_len + 1")));
    }
    if !(0.0..0.5).contains(&q) {
        return Err(CqcError::OutOfRange(format!("q = {q} outside [0, 1/2)")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if 5.0 * q >= 1.0 {
        return Err(CqcError::BoundDiverges(format!("5q = {} >= 1", 5.0 * q)));
    }
    let m = census.max_len;
    let exact: f64 = (from_len.max(1)..=m).map(|l| census.count(l) as f64 * q.powi(l as i32)).sum();
    let start = (m + 1).max(from_len);
    let cap = saw_upper_bound(1, m as u32);
    let last = census.count(m) as f64;
    let before = if m >= 2 { 5.0 * census.count(m - 1) as f64 } else { 0.0 };
    let anchor = match last.max(before) {
        a if a > 0.0 => a.min(cap),
        _ => cap,
    };
    let r = 5.0 * q;
    let beyond = anchor * q.powi(m as i32) * r.powi((start - m) as i32) / (1.0 - r);
    Ok(exact + beyond)
}

/// CSV with header `kind,length,count,geometry_version`.
pub fn census_to_csv(censuses: &[WalkCensus]) -> String {
    let mut out = String::from("kind,length,count,geometry_version\n");
    for c in censuses {
        for l in 1..=c.max_len {
            out.push_str(&format!("{},{},{},{}\n", c.kind.as_str(), l, c.count(l), c.geometry_version));
        }
    }
    out
}

/// Parse CSV written by [`census_to_csv`]; one census per kind present.
pub fn census_from_csv(text: &str) -> Result<Vec<WalkCensus>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "kind,length,count,geometry_version" => {}
        _ => return Err(CqcError::Parse("missing census CSV header".into())),
    }
    let mut by_kind: BTreeMap<ChainKind, WalkCensus> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(CqcError::Parse(format!("line {}: expected 4 fields", i + 2)));
        }
        let kind: ChainKind = f[0].parse()?;
        let len: usize = f[1].parse().map_err(|e| CqcError::Parse(format!("line {}: {e}", i + 2)))?;
        let count: u64 = f[2].parse().map_err(|e| CqcError::Parse(format!("line {}: {e}", i + 2)))?;
        let entry = by_kind.entry(kind).or_insert_with(|| WalkCensus {
            kind,
            counts: BTreeMap::new(),
            max_len: 0,
            geometry_version: f[3].to_string(),
        });
        if entry.geometry_version != f[3] {
            return Err(CqcError::GeometryMismatch(entry.geometry_version.clone(), f[3].to_string()));
        }
        entry.counts.insert(len, count);
        entry.max_len = entry.max_len.max(len);
    }
    Ok(by_kind.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::injection::{injection_site, InjectionGeometry};
    use crate::lattice::{build_lattice, RegionSpec};

    fn site(n: usize) -> InjectionSite {
        let lat = build_lattice([n, n, n], Boundary::Open, &RegionSpec::default()).unwrap();
        injection_site(&lat, &InjectionGeometry::default()).unwrap()
    }

    fn census(kind: ChainKind, counts: &[u64]) -> WalkCensus {
        WalkCensus {
            kind,
            counts: counts.iter().enumerate().map(|(i, &c)| (i + 1, c)).collect(),
            max_len: counts.len(),
            geometry_version: "t".into(),
        }
    }

    #[test]
    fn small_site_census() {
        let s = site(8);
        assert_eq!(enumerate_chains(&s, ChainKind::Primal, 1).unwrap().count(1), 1);
        assert_eq!(enumerate_chains(&s, ChainKind::Dual, 3).unwrap().count(3), 4);
    }

    #[test]
    fn first_rows() {
        let s = site(12);
        let p = enumerate_chains(&s, ChainKind::Primal, 6).unwrap();
        assert_eq!(p.as_vec(), vec![1, 0, 0, 7, 0, 106]);
        let d = enumerate_chains(&s, ChainKind::Dual, 6).unwrap();
        assert_eq!(d.as_vec(), vec![0, 0, 4, 8, 52, 200]);
    }

    #[test]
    fn guard_and_cap() {
        let s = site(8);
        assert!(matches!(
            enumerate_chains(&s, ChainKind::Dual, 17),
            Err(CqcError::ResourceGuard { requested: 17, cap: 16 })
        ));
        assert!(matches!(enumerate_chains(&s, ChainKind::Dual, 12), Err(CqcError::LatticeTooSmall { .. })));
        let opts = CensusOptions { hard_cap: 20, ..Default::default() };
        assert!(enumerate_chains_with(&s, ChainKind::Dual, 17, &opts).is_err_and(|e| !matches!(e, CqcError::ResourceGuard { .. })));
    }

    #[test]
    fn polynomials_and_rates() {
        let p = census(ChainKind::Primal, &[1, 0, 0, 7, 0, 106]);
        let d = census(ChainKind::Dual, &[0, 0, 4, 8, 52, 200]);
        let polys = census_to_polynomials(&p, &d, 6).unwrap();
        assert_eq!(polys.x_coeffs, BTreeMap::from([(3, 4), (4, 8), (5, 52), (6, 200)]));
        assert_eq!(polys.z_coeffs, BTreeMap::from([(1, 1), (4, 7), (6, 106)]));
        let short = census_to_polynomials(&p, &d, 4).unwrap();
        assert_eq!(short.x_coeffs, BTreeMap::from([(3, 4), (4, 8)]));
        let (qx, qz) = logical_error_rates(&polys, 0.1).unwrap();
        assert!((qx - 0.00552).abs() < 1e-15);
        assert!((qz - 0.100806).abs() < 1e-15);
        assert_eq!(logical_error_rates(&polys, 0.0).unwrap(), (0.0, 0.0));
        assert!(logical_error_rates(&polys, 0.6).is_err());
        let empty = census_to_polynomials(&census(ChainKind::Primal, &[]), &census(ChainKind::Dual, &[]), 0).unwrap();
        assert!(empty.x_coeffs.is_empty() && empty.z_coeffs.is_empty());
    }

    #[test]
    fn polynomial_guards() {
        let p = census(ChainKind::Primal, &[1]);
        let mut d = census(ChainKind::Dual, &[0]);
        d.geometry_version = "other".into();
        assert!(matches!(census_to_polynomials(&p, &d, 1), Err(CqcError::GeometryMismatch(..))));
        assert!(census_to_polynomials(&d, &p, 1).is_err());
    }

    #[test]
    fn bounds() {
        assert!((saw_upper_bound(1, 1) - 6.0).abs() < 1e-12);
        assert!((saw_upper_bound(1, 3) - 150.0).abs() < 1e-9);
        let c = census(ChainKind::Dual, &[0, 0, 4]);
        assert_eq!(truncation_tail(&c, 0.0, 4).unwrap(), 0.0);
        assert!(matches!(truncation_tail(&c, 0.25, 4), Err(CqcError::BoundDiverges(_))));
        // Anchored on count(3) = 4: count(L) ≤ 4·5^{L−3}.
        let t = truncation_tail(&c, 0.1, 4).unwrap();
        let oracle: f64 = (4..400).map(|l| 4.0 * 5f64.powi(l - 3) * 0.1f64.powi(l)).sum();
        assert!((t - oracle).abs() < 1e-12);
        // Exact terms inside the census are summed directly.
        let t3 = truncation_tail(&c, 0.1, 3).unwrap();
        assert!((t3 - t - 4.0 * 0.001).abs() < 1e-12);
        // Odd-length zeros: the anchor falls back to 5·count(M−1).
        let p = census(ChainKind::Primal, &[1, 0, 0, 7, 0]);
        let oracle: f64 = (6..400).map(|l| 35.0 * 5f64.powi(l - 5) * 0.1f64.powi(l)).sum();
        assert!((truncation_tail(&p, 0.1, 6).unwrap() - oracle).abs() < 1e-12);
        // No nonzero anchor: unanchored walk bound.
        let z = census(ChainKind::Dual, &[0, 0]);
        let oracle: f64 = (3..400).map(|l| saw_upper_bound(1, l as u32) * 0.1f64.powi(l)).sum();
        assert!((truncation_tail(&z, 0.1, 3).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let p = census(ChainKind::Primal, &[1, 0, 0, 7]);
        let d = census(ChainKind::Dual, &[0, 0, 4, 8]);
        let text = census_to_csv(&[p.clone(), d.clone()]);
        assert_eq!(census_from_csv(&text).unwrap(), vec![p, d]);
        assert!(census_from_csv("nope\n").is_err());
    }
}
