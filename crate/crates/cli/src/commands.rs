//! Command implementations. Every number comes from a `cqc_core` call;
//! this layer only orchestrates, compares against references and formats.

use crate::config::*;
use crate::error::{CliError, ErrorKind};
use crate::reference as refv;
use crate::report::{to_value, Report};
use cqc_core::boundary::{
    classical_crossing, global_stabilizer_q, landscape, linspace, total_variation, expected_sampling_tv, GeneralSampler,
    Landscape, LandscapeOptions, SimulationMode, SiteLattice,
};
use cqc_core::census::{
    census_to_csv, census_to_polynomials, enumerate_chains_with, truncation_tail, CensusOptions, ChainKind, ErrorPolynomials,
    WalkCensus,
};
use cqc_core::injection::{injection_site, InjectionGeometry, InjectionSite};
use cqc_core::lattice::{Boundary, RegionSpec, RhgLattice};
use cqc_core::noise::{expected_parity, NoiseModel, PauliChannel};
use cqc_core::stabilizer::{oracle_check, parity_statistics, CircuitRun};
use cqc_core::thresholds::{
    dephasing_topological_threshold, distillation_threshold, single_shot_verdict, solve_depolarizing_threshold,
    solve_depth4_boundary, solve_topological_threshold, Method, Reconstruction, ThresholdReport,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

/// What a command produced.
pub struct Outcome {
    pub report: Report,
    /// Primary artifact and where it goes (`None`: standard output).
    pub artifact: Option<(Format, String, Option<PathBuf>)>,
    /// Extra files, always written to disk.
    pub extra: Vec<(PathBuf, String)>,
    /// Set when a check or reproduction diff failed.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn report(report: Report) -> Self {
        Outcome { report, artifact: None, extra: vec![], failure: None }
    }
}

pub struct Progress {
    pub quiet: bool,
}

impl Progress {
    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("[cqc] {}", msg.as_ref());
        }
    }
}

/// A computed value against a reference with tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub delta: f64,
    pub pass: bool,
    /// Whether a failure fails the run.
    pub gating: bool,
}

impl Check {
    fn new(name: &str, computed: f64, (reference, tolerance): (f64, f64), gating: bool) -> Self {
        let delta = computed - reference;
        Check { name: name.into(), computed, reference, tolerance, delta, pass: delta.abs() <= tolerance, gating }
    }
}

fn failed_checks(checks: &[Check]) -> Option<CliError> {
    let bad: Vec<&Check> = checks.iter().filter(|c| c.gating && !c.pass).collect();
    if bad.is_empty() {
        return None;
    }
    let names: Vec<&str> = bad.iter().map(|c| c.name.as_str()).collect();
    Some(
        CliError::new(ErrorKind::Computation, format!("{} check(s) outside tolerance: {}", bad.len(), names.join(", ")))
            .with_details(to_value(&bad).unwrap_or(Value::Null)),
    )
}

fn census_site(side: usize) -> Result<InjectionSite, CliError> {
    let lat = RhgLattice::new([side; 3], Boundary::Open, &RegionSpec::default())?;
    Ok(injection_site(&lat, &InjectionGeometry::default())?)
}

fn run_census_kinds(
    side: usize,
    kinds: &[ChainKind],
    max_len: usize,
    opts: &CensusOptions,
    progress: &Progress,
) -> Result<Vec<WalkCensus>, CliError> {
    let site = census_site(side)?;
    kinds
        .iter()
        .map(|&kind| {
            progress.note(format!("census: {} chains up to length {max_len} on side {side}", kind.as_str()));
            let c = enumerate_chains_with(&site, kind, max_len, opts)?;
            progress.note(format!("census: {} done", kind.as_str()));
            Ok(c)
        })
        .collect()
}

fn polynomials(len: usize, side: usize, progress: &Progress) -> Result<(ErrorPolynomials, Vec<WalkCensus>), CliError> {
    let opts = CensusOptions { hard_cap: CensusOptions::default().hard_cap.max(len), ..Default::default() };
    let cs = run_census_kinds(side, &[ChainKind::Primal, ChainKind::Dual], len, &opts, progress)?;
    Ok((census_to_polynomials(&cs[0], &cs[1], len)?, cs))
}

fn distillation_report() -> ThresholdReport {
    ThresholdReport {
        name: "distillation".into(),
        solved_value: distillation_threshold(),
        paper_value: Some(refv::DISTILLATION.0),
        method: Method::ClosedForm,
        bracket: (0.0, 0.5),
        tolerance: 0.0,
        residual: 0.0,
    }
}

pub fn census(p: &CensusParams, progress: &Progress) -> Result<Outcome, CliError> {
    let opts = CensusOptions { hard_cap: p.hard_cap, prefix_depth: p.prefix_depth };
    let cs = run_census_kinds(p.side, &p.kinds, p.max_len, &opts, progress)?;
    let artifact = match p.format {
        Format::Csv => census_to_csv(&cs),
        Format::Json => serde_json::to_string_pretty(&cs).map_err(|e| CliError::config(e.to_string()))? + "\n",
    };
    let report = Report::new("census", p, p.seed, json!({ "censuses": cs }))?;
    Ok(Outcome { artifact: Some((p.format, artifact, p.out.clone())), ..Outcome::report(report) })
}

#[derive(Serialize)]
struct TruncationTails {
    at: f64,
    from_len: usize,
    primal: f64,
    dual: f64,
}

fn threshold_rows(rows: &[ThresholdReport]) -> String {
    let mut s = String::from("name,solved_value,paper_value,method,bracket_lo,bracket_hi,tolerance,residual\n");
    for r in rows {
        let paper = r.paper_value.map(|v| v.to_string()).unwrap_or_default();
        let method = match r.method {
            Method::ClosedForm => "closed-form",
            Method::RootFind => "root-find",
        };
        s.push_str(&format!(
            "{},{:.12},{},{},{},{},{:e},{:e}\n",
            r.name, r.solved_value, paper, method, r.bracket.0, r.bracket.1, r.tolerance, r.residual
        ));
    }
    s
}

pub fn thresholds(p: &ThresholdParams, progress: &Progress) -> Result<Outcome, CliError> {
    let (polys, cs) = polynomials(p.census_len, p.side, progress)?;
    let depth4 = solve_depth4_boundary(&polys)?;
    let from_len = p.census_len + 1;
    let tails = TruncationTails {
        at: depth4.solved_value,
        from_len,
        primal: truncation_tail(&cs[0], depth4.solved_value, from_len)?,
        dual: truncation_tail(&cs[1], depth4.solved_value, from_len)?,
    };
    let mut rows = vec![distillation_report(), dephasing_topological_threshold(), depth4];
    if p.all {
        for k in 1..=p.max_k {
            rows.push(solve_topological_threshold(k)?);
        }
        for rec in [Reconstruction::PsPlusHigherOrders, Reconstruction::LeadingOnly] {
            let d = solve_depolarizing_threshold(&polys, rec)?;
            let tag = match rec {
                Reconstruction::PsPlusHigherOrders => "ps-plus-higher-orders",
                Reconstruction::LeadingOnly => "leading-only",
            };
            for mut r in [d.distillation, d.classical] {
                r.name = format!("{}[{tag}]", r.name);
                rows.push(r);
            }
        }
    }
    let artifact = match p.format {
        Format::Csv => Some((Format::Csv, threshold_rows(&rows), p.out.clone())),
        Format::Json => p.out.clone().map(|o| (Format::Json, serde_json::to_string_pretty(&rows).unwrap() + "\n", Some(o))),
    };
    let result = json!({ "thresholds": rows, "polynomials": polys, "truncation_tails": tails });
    let report = Report::new("thresholds", p, p.seed, result)?;
    Ok(Outcome { artifact, ..Outcome::report(report) })
}

fn magic_bound(b: MagicBound, census_len: usize, side: usize, progress: &Progress) -> Result<f64, CliError> {
    match b {
        MagicBound::Named(NamedBound::Distillation) => Ok(distillation_threshold()),
        MagicBound::Named(NamedBound::DepthFour) => {
            let (polys, _) = polynomials(census_len, side, progress)?;
            Ok(solve_depth4_boundary(&polys)?.solved_value)
        }
        MagicBound::Value(v) if (0.0..=0.5).contains(&v) => Ok(v),
        MagicBound::Value(v) => Err(CliError::config(format!("magic_bound {v} outside [0, 1/2]"))),
    }
}

fn curves_json(l: &Landscape) -> String {
    let v = json!({
        "magic_bound": l.magic_bound,
        "crossing": { "phi": l.crossing_phi, "q": l.crossing_q },
        "curves": l.curves,
    });
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn build_landscape(phi_points: usize, q_points: usize, bound: f64) -> Result<Landscape, CliError> {
    if phi_points == 0 || q_points == 0 {
        return Err(CliError::config("phi_points and q_points must be positive"));
    }
    Ok(landscape(&linspace(0.0, FRAC_PI_4, phi_points), &linspace(0.0, 0.5, q_points), &LandscapeOptions { magic_bound: bound })?)
}

pub fn landscape_cmd(p: &LandscapeParams, progress: &Progress) -> Result<Outcome, CliError> {
    let bound = magic_bound(p.magic_bound, p.census_len, p.side, progress)?;
    progress.note(format!("landscape: {}×{} grid, magic bound {bound:.6}", p.phi_points, p.q_points));
    let l = build_landscape(p.phi_points, p.q_points, bound)?;
    let artifact = match p.format {
        Format::Csv => l.to_csv(),
        Format::Json => serde_json::to_string_pretty(&l).unwrap() + "\n",
    };
    let extra = p.curves_out.iter().map(|path| (path.clone(), curves_json(&l))).collect();
    let result = json!({
        "magic_bound": bound,
        "crossing_phi": l.crossing_phi,
        "crossing_q": l.crossing_q,
        "stabilizer_curve_at_zero": global_stabilizer_q(0.0),
        "points": l.points.len(),
    });
    let report = Report::new("landscape", p, p.seed, result)?;
    Ok(Outcome { artifact: Some((p.format, artifact, p.out.clone())), extra, ..Outcome::report(report) })
}

fn histogram_csv(hist: &[f64], n: usize) -> String {
    let mut s = String::from("index,outcomes,frequency\n");
    for (i, f) in hist.iter().enumerate() {
        let bits: String = (0..n).map(|k| if i >> k & 1 == 1 { '1' } else { '0' }).collect();
        s.push_str(&format!("{i},{bits},{f}\n"));
    }
    s
}

fn boundary_kind(b: BoundaryKind) -> Boundary {
    match b {
        BoundaryKind::Open => Boundary::Open,
        BoundaryKind::Periodic => Boundary::Periodic,
    }
}

pub fn simulate(p: &SimulateParams, progress: &Progress) -> Result<Outcome, CliError> {
    match p.target {
        SimTarget::Parity => {
            let lat = RhgLattice::new(p.dims, boundary_kind(p.boundary), &RegionSpec::default())?;
            progress.note(format!("simulate: {} shots on {:?} ({} qubits)", p.shots, p.dims, lat.num_qubits()));
            let run = CircuitRun::uniform(lat, PauliChannel::dephasing(p.q)?, p.seed)?;
            let stats = parity_statistics(&run, p.shots)?;
            let expected = expected_parity(&NoiseModel::Dephasing { q: p.q })?;
            let report = Report::new("simulate", p, p.seed, json!({ "parity": stats, "expected_parity": expected }))?;
            Ok(Outcome::report(report))
        }
        SimTarget::Boundary => {
            let lat = SiteLattice::grid(p.rows, p.cols, p.theta, p.alpha, p.q, p.mode)?;
            progress.note(format!("simulate: {} shots on a {}×{} site lattice", p.shots, p.rows, p.cols));
            let hist = GeneralSampler::new(&lat, p.mode)?.histogram(p.shots, p.seed)?;
            let mut result = json!({ "sites": lat.num_sites(), "mode": p.mode });
            if p.compare_dense {
                let dense = lat.dense_distribution()?;
                result["total_variation"] = json!(total_variation(&hist, &dense));
                result["expected_sampling_tv"] = json!(expected_sampling_tv(&dense, p.shots));
            }
            let n = lat.num_sites();
            let artifact = match p.format {
                Format::Csv => Some((Format::Csv, histogram_csv(&hist, n), p.out.clone())),
                Format::Json => {
                    result["histogram"] = json!(hist);
                    None
                }
            };
            let report = Report::new("simulate", p, p.seed, result)?;
            Ok(Outcome { artifact, ..Outcome::report(report) })
        }
    }
}

pub fn verify(p: &VerifyParams) -> Result<Outcome, CliError> {
    let mean = p.mean.ok_or_else(|| CliError::config("verify needs --mean"))?;
    let v = single_shot_verdict(mean, p.cells, p.delta, p.noise_class)?;
    Ok(Outcome::report(Report::new("verify", p, p.seed, v)?))
}

/// Small in-region lattices for the boundary-sampler oracle check.
const BOUNDARY_POINTS: [(SimulationMode, f64, f64, f64); 2] = [
    (SimulationMode::StabilizerMixture, FRAC_PI_4, 0.0, 0.1),
    (SimulationMode::SeparableMps, std::f64::consts::FRAC_PI_8, 0.0, 0.45),
];
const BOUNDARY_TV_TOLERANCE: f64 = 0.01;

pub fn oracle(p: &OracleParams, progress: &Progress) -> Result<Outcome, CliError> {
    progress.note(format!("oracle-check: {} random circuits, n ≤ {}", p.cases, p.max_qubits));
    let stab = oracle_check(p.cases, p.max_qubits, p.seed)?;
    let mut checks = vec![Check::new("stabilizer-max-deviation", stab.max_deviation, (0.0, p.tolerance), true)];
    if p.boundary_shots > 0 {
        for (mode, theta, alpha, q) in BOUNDARY_POINTS {
            progress.note(format!("oracle-check: {mode:?} sampler, {} shots", p.boundary_shots));
            let lat = SiteLattice::grid(2, 2, theta, alpha, q, mode)?;
            let hist = GeneralSampler::new(&lat, mode)?.histogram(p.boundary_shots, p.seed)?;
            let tv = total_variation(&hist, &lat.dense_distribution()?);
            let name = format!("boundary-tv[{mode:?} θ={theta:.6} q={q}]");
            checks.push(Check::new(&name, tv, (0.0, BOUNDARY_TV_TOLERANCE), true));
        }
    }
    let failure = failed_checks(&checks);
    let report = Report::new("oracle-check", p, p.seed, json!({ "stabilizer": stab, "checks": checks }))?;
    Ok(Outcome { failure, ..Outcome::report(report) })
}

#[derive(Serialize)]
struct CellDelta {
    kind: ChainKind,
    length: usize,
    computed: u64,
    reference: u64,
    delta: i64,
}

fn reproduce_table1(p: &ReproduceParams, progress: &Progress) -> Result<Outcome, CliError> {
    if p.max_len > refv::PRIMAL_COUNTS.len() {
        return Err(CliError::config(format!("reference counts stop at length {}", refv::PRIMAL_COUNTS.len())));
    }
    let (_, cs) = polynomials(p.max_len, p.side, progress)?;
    let mut cells = Vec::new();
    for (c, reference) in cs.iter().zip([&refv::PRIMAL_COUNTS, &refv::DUAL_COUNTS]) {
        for len in 1..=p.max_len {
            let (got, want) = (c.count(len), reference[len - 1]);
            cells.push(CellDelta { kind: c.kind, length: len, computed: got, reference: want, delta: got as i64 - want as i64 });
        }
    }
    let mismatches: Vec<&CellDelta> = cells.iter().filter(|d| d.delta != 0).collect();
    let failure = (!mismatches.is_empty()).then(|| {
        CliError::new(ErrorKind::Computation, format!("{} of {} cells differ from the reference", mismatches.len(), cells.len()))
            .with_details(to_value(&mismatches).unwrap_or(Value::Null))
    });
    let result = json!({ "matched": cells.len() - mismatches.len(), "cells": cells });
    let report = Report::new("reproduce", p, p.seed, result)?;
    let artifact = p.out.clone().map(|o| (Format::Csv, census_to_csv(&cs), Some(o)));
    Ok(Outcome { artifact, failure, ..Outcome::report(report) })
}

fn reproduce_thresholds(p: &ReproduceParams, progress: &Progress) -> Result<Outcome, CliError> {
    let (polys, _) = polynomials(p.max_len, p.side, progress)?;
    let depth4 = solve_depth4_boundary(&polys)?;
    let depol = solve_depolarizing_threshold(&polys, Reconstruction::PsPlusHigherOrders)?;
    let checks = vec![
        Check::new("distillation", distillation_threshold(), refv::DISTILLATION, true),
        Check::new("dephasing-topological", dephasing_topological_threshold().solved_value, refv::DEPHASING_TOPOLOGICAL, true),
        Check::new("depth-four-boundary", depth4.solved_value, refv::DEPTH_FOUR, true),
        Check::new("depolarizing-distillation", depol.distillation.solved_value, refv::DEPOLARIZING_DISTILLATION, false),
        Check::new("depolarizing-classical", depol.classical.solved_value, refv::DEPOLARIZING_CLASSICAL, false),
    ];
    let failure = failed_checks(&checks);
    let report = Report::new("reproduce", p, p.seed, json!({ "checks": checks }))?;
    Ok(Outcome { failure, ..Outcome::report(report) })
}

fn reproduce_fig5(p: &ReproduceParams, progress: &Progress) -> Result<Outcome, CliError> {
    let bound = magic_bound(MagicBound::Named(NamedBound::DepthFour), p.max_len, p.side, progress)?;
    let l = build_landscape(p.phi_points, p.q_points, bound)?;
    let (phi_star, _) = classical_crossing()?;
    let checks = vec![
        Check::new("stabilizer-curve-at-zero", global_stabilizer_q(0.0), refv::STABILIZER_CURVE_AT_ZERO, true),
        Check::new("crossing-phi", phi_star, refv::CROSSING_PHI, true),
    ];
    let failure = failed_checks(&checks);
    let result = json!({ "magic_bound": bound, "crossing_q": l.crossing_q, "checks": checks });
    let report = Report::new("reproduce", p, p.seed, result)?;
    let artifact = p.out.clone().map(|o| (Format::Csv, l.to_csv(), Some(o)));
    Ok(Outcome { artifact, failure, ..Outcome::report(report) })
}

fn reproduce_parity(p: &ReproduceParams, progress: &Progress) -> Result<Outcome, CliError> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &q in &p.q_grid {
        let lat = RhgLattice::new(p.dims, Boundary::Periodic, &RegionSpec::default())?;
        progress.note(format!("parity-mc: q = {q}, {} shots", p.shots));
        let stats = parity_statistics(&CircuitRun::uniform(lat, PauliChannel::dephasing(q)?, p.seed)?, p.shots)?;
        let expected = expected_parity(&NoiseModel::Dephasing { q })?;
        checks.push(Check::new(&format!("parity[q={q}]"), stats.mean, (expected, refv::PARITY_SIGMAS * stats.std_error), true));
        rows.push(json!({ "q": q, "stats": stats, "expected": expected }));
    }
    let failure = failed_checks(&checks);
    let report = Report::new("reproduce", p, p.seed, json!({ "runs": rows, "checks": checks }))?;
    Ok(Outcome { failure, ..Outcome::report(report) })
}

pub fn reproduce(p: &ReproduceParams, progress: &Progress) -> Result<Outcome, CliError> {
    progress.note(format!("reproduce: {}", p.manifest.as_str()));
    match p.manifest {
        ManifestId::Table1 => reproduce_table1(p, progress),
        ManifestId::Thresholds => reproduce_thresholds(p, progress),
        ManifestId::Fig5 => reproduce_fig5(p, progress),
        ManifestId::ParityMc => reproduce_parity(p, progress),
    }
}
