//! Run configuration: a JSON document per run, overridden by flags.

use crate::error::CliError;
use cqc_core::boundary::SimulationMode;
use cqc_core::census::{ChainKind, CENSUS_LATTICE_SIDE, DEFAULT_HARD_CAP};
use cqc_core::thresholds::NoiseClass;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusParams {
    pub max_len: usize,
    pub side: usize,
    pub kinds: Vec<ChainKind>,
    pub hard_cap: usize,
    pub prefix_depth: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for CensusParams {
    fn default() -> Self {
        CensusParams {
            max_len: 12,
            side: CENSUS_LATTICE_SIDE,
            kinds: vec![ChainKind::Primal, ChainKind::Dual],
            hard_cap: DEFAULT_HARD_CAP,
            prefix_depth: 4,
            format: Format::Csv,
            out: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdParams {
    /// Include the postselected topological family and the depolarizing roots.
    pub all: bool,
    /// Census length feeding the error polynomials.
    pub census_len: usize,
    pub side: usize,
    /// Largest `k` of the postselected topological family.
    pub max_k: u32,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams {
            all: false,
            census_len: 14,
            side: CENSUS_LATTICE_SIDE,
            max_k: 3,
            format: Format::Json,
            out: None,
            seed: 0,
        }
    }
}

/// Upper cap of the intractable region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MagicBound {
    Named(NamedBound),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedBound {
    Distillation,
    DepthFour,
}

impl std::str::FromStr for MagicBound {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "distillation" => Ok(MagicBound::Named(NamedBound::Distillation)),
            "depth-four" => Ok(MagicBound::Named(NamedBound::DepthFour)),
            _ => s.parse().map(MagicBound::Value).map_err(|_| format!("expected distillation, depth-four or a number, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeParams {
    pub phi_points: usize,
    pub q_points: usize,
    pub magic_bound: MagicBound,
    /// Census length used when `magic_bound` is `depth-four`.
    pub census_len: usize,
    pub side: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// JSON curve objects for plotting.
    pub curves_out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for LandscapeParams {
    fn default() -> Self {
        LandscapeParams {
            phi_points: 101,
            q_points: 101,
            magic_bound: MagicBound::Named(NamedBound::Distillation),
            census_len: 14,
            side: CENSUS_LATTICE_SIDE,
            format: Format::Csv,
            out: None,
            curves_out: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SimTarget {
    /// Cell parities of the noisy cluster-state circuit.
    Parity,
    /// Classical sampler for a dephased site lattice.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub target: SimTarget,
    pub dims: [usize; 3],
    pub boundary: BoundaryKind,
    pub rows: usize,
    pub cols: usize,
    pub theta: f64,
    pub alpha: f64,
    pub mode: SimulationMode,
    /// Compare the boundary sampler's histogram with the dense distribution.
    pub compare_dense: bool,
    pub q: f64,
    pub shots: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            target: SimTarget::Parity,
            dims: [4, 4, 4],
            boundary: BoundaryKind::Periodic,
            rows: 2,
            cols: 2,
            theta: std::f64::consts::FRAC_PI_4,
            alpha: 0.0,
            mode: SimulationMode::StabilizerMixture,
            compare_dense: false,
            q: 0.1,
            shots: 10_000,
            format: Format::Json,
            out: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub mean: Option<f64>,
    pub cells: u64,
    pub delta: f64,
    pub noise_class: NoiseClass,
    pub seed: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { mean: None, cells: 0, delta: 1e-6, noise_class: NoiseClass::Dephasing1Local, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub cases: usize,
    pub max_qubits: usize,
    /// Boundary-sampler shots per lattice point; 0 skips that check.
    pub boundary_shots: u64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams { cases: 200, max_qubits: 10, boundary_shots: 100_000, tolerance: 1e-9, seed: 2024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ManifestId {
    Table1,
    Thresholds,
    Fig5,
    ParityMc,
}

impl ManifestId {
    pub fn as_str(self) -> &'static str {
        match self {
            ManifestId::Table1 => "table1",
            ManifestId::Thresholds => "thresholds",
            ManifestId::Fig5 => "fig5",
            ManifestId::ParityMc => "parity-mc",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceParams {
    pub manifest: ManifestId,
    pub max_len: usize,
    pub side: usize,
    pub shots: u64,
    pub q_grid: Vec<f64>,
    pub dims: [usize; 3],
    pub phi_points: usize,
    pub q_points: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ReproduceParams {
    fn default() -> Self {
        ReproduceParams {
            manifest: ManifestId::Table1,
            max_len: 14,
            side: CENSUS_LATTICE_SIDE,
            shots: 100_000,
            q_grid: vec![0.05, 0.134, 0.25],
            dims: [4, 4, 4],
            phi_points: 201,
            q_points: 201,
            out: None,
            seed: 5,
        }
    }
}

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::config(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(CliError::config(format!("{}: {e}", path.display()))),
    }
}

/// Effective parameters: defaults, then file values, then flags. A file
/// naming a different command is rejected.
pub fn resolve<P, F>(command: &str, file: Option<Map<String, Value>>, flags: &F) -> Result<P, CliError>
where
    P: DeserializeOwned,
    F: Serialize,
{
    let mut merged = file.unwrap_or_default();
    match merged.remove("command") {
        None => {}
        Some(Value::String(c)) if c == command => {}
        Some(other) => return Err(CliError::config(format!("config is for command {other}, not {command:?}"))),
    }
    match serde_json::to_value(flags).map_err(|e| CliError::config(e.to_string()))? {
        Value::Object(f) => merged.extend(f),
        _ => unreachable!("flag structs serialize to objects"),
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::config(format!("invalid config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[derive(Serialize)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        max_len: Option<usize>,
    }

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_override_file() {
        let file = obj(json!({"command": "census", "max_len": 8, "side": 20}));
        let p: CensusParams = resolve("census", Some(file.clone()), &Flags { max_len: Some(10) }).unwrap();
        assert_eq!((p.max_len, p.side), (10, 20));
        let p: CensusParams = resolve("census", Some(file), &Flags { max_len: None }).unwrap();
        assert_eq!(p.max_len, 8);
    }

    #[test]
    fn schema_violations() {
        let wrong = obj(json!({"command": "landscape"}));
        assert!(resolve::<CensusParams, _>("census", Some(wrong), &Flags { max_len: None }).is_err());
        let unknown = obj(json!({"maxlen": 3}));
        assert!(resolve::<CensusParams, _>("census", Some(unknown), &Flags { max_len: None }).is_err());
        let typed = obj(json!({"max_len": "twelve"}));
        assert!(resolve::<CensusParams, _>("census", Some(typed), &Flags { max_len: None }).is_err());
    }

    #[test]
    fn magic_bound_forms() {
        assert_eq!("depth-four".parse::<MagicBound>().unwrap(), MagicBound::Named(NamedBound::DepthFour));
        assert_eq!("0.12".parse::<MagicBound>().unwrap(), MagicBound::Value(0.12));
        let p: LandscapeParams = serde_json::from_value(json!({"magic_bound": 0.1})).unwrap();
        assert_eq!(p.magic_bound, MagicBound::Value(0.1));
        assert!("sharp".parse::<MagicBound>().is_err());
    }
}
