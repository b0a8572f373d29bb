//! Threshold formulas and root solvers.

use crate::census::ErrorPolynomials;
use crate::error::{CqcError, Result};
use crate::noise::{depolarizing_rates, DepolModel};
use serde::{Deserialize, Serialize};

/// Absolute tolerance of every bisection.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// `⟨S_u⟩` above which a 1-local dephased circuit is certified hard.
pub const PARITY_THRESHOLD_DEPHASING: f64 = 0.154;
/// `⟨S_u⟩` above which a depolarized circuit is certified hard.
pub const PARITY_THRESHOLD_DEPOLARIZING: f64 = 0.225;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    RootFind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub name: String,
    pub solved_value: f64,
    pub paper_value: Option<f64>,
    pub method: Method,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    /// `|f(solved_value)|` for root finds, 0 for closed forms.
    pub residual: f64,
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(CqcError::NoSignChange { lo, hi });
    }
    let sa = fa.signum();
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureBound {
    pub value: f64,
    pub base: f64,
    /// Base ≥ 1: the sum grows with `N` instead of converging.
    pub divergent: bool,
}

fn geometric(base: f64, from: usize, to: usize) -> f64 {
    (from..=to).map(|l| base.powi(l as i32)).sum()
}

/// `N (6/5) Σ_{L=L_d}^{N} [5·2^{2k²−2k+1} (2ε/(1−ε))^{1/(2k−1)}]^L`.
pub fn postselected_failure_bound(eps: f64, k: u32, l_d: usize, n: usize) -> Result<FailureBound> {
    if !(0.0..1.0).contains(&eps) || k == 0 || l_d == 0 || l_d > n {
        return Err(CqcError::OutOfRange(format!("eps = {eps}, k = {k}, L_d = {l_d}, N = {n}")));
    }
    let k = k as i32;
    let ratio = 2.0 * eps / (1.0 - eps);
    let base = 5.0 * 2f64.powi(2 * k * k - 2 * k + 1) * ratio.powf(1.0 / (2 * k - 1) as f64);
    Ok(FailureBound { value: n as f64 * 1.2 * geometric(base, l_d, n), base, divergent: base >= 1.0 })
}

/// `N (6/5) Σ_{L=L_d}^{N} [5q/(1−q)]^L`.
pub fn dephasing_failure_bound(q: f64, l_d: usize, n: usize) -> Result<FailureBound> {
    if !(0.0..1.0).contains(&q) || l_d == 0 || l_d > n {
        return Err(CqcError::OutOfRange(format!("q = {q}, L_d = {l_d}, N = {n}")));
    }
    let base = 5.0 * q / (1.0 - q);
    Ok(FailureBound { value: n as f64 * 1.2 * geometric(base, l_d, n), base, divergent: base >= 1.0 })
}

/// The dephasing bound with the sum running to infinity.
pub fn dephasing_failure_bound_infinite(q: f64, l_d: usize, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&q) || l_d == 0 {
        return Err(CqcError::OutOfRange(format!("q = {q}, L_d = {l_d}")));
    }
    let base = 5.0 * q / (1.0 - q);
    if base >= 1.0 {
        return Err(CqcError::BoundDiverges(format!("base {base} >= 1")));
    }
    Ok(n as f64 * 1.2 * base.powi(l_d as i32) / (1.0 - base))
}

/// `x = (5·2^{2k²−2k+1})^{−(2k−1)}`, the critical value of `2ε/(1−ε)`.
fn topological_x(k: u32) -> f64 {
    let k = k as i32;
    (5.0 * 2f64.powi(2 * k * k - 2 * k + 1)).powi(-(2 * k - 1))
}

/// Closed-form `ε* = x / (2 + x)` at which the postselected base equals 1.
pub fn solve_topological_threshold(k: u32) -> Result<ThresholdReport> {
    if k == 0 {
        return Err(CqcError::OutOfRange("k must be at least 1".into()));
    }
    let x = topological_x(k);
    Ok(ThresholdReport {
        name: format!("topological-k{k}"),
        solved_value: x / (2.0 + x),
        paper_value: None,
        method: Method::ClosedForm,
        bracket: (0.0, 1.0),
        tolerance: 0.0,
        residual: 0.0,
    })
}

/// Dephasing case: `5q/(1−q) = 1`, so `q* = 1/6`.
pub fn dephasing_topological_threshold() -> ThresholdReport {
    ThresholdReport {
        name: "topological-dephasing".into(),
        solved_value: 1.0 / 6.0,
        paper_value: Some(0.167),
        method: Method::ClosedForm,
        bracket: (0.0, 0.5),
        tolerance: 0.0,
        residual: 0.0,
    }
}

/// `(1 − √2/2) / 2`: the octahedron face at the magic-state axis.
pub fn distillation_threshold() -> f64 {
    (1.0 - std::f64::consts::FRAC_1_SQRT_2) / 2.0
}

/// Root of `q̄_X(q)/2 + q̄_Z(q) = (1−√2/2)/2` on `[0, (1−√2/2)/2]`.
pub fn solve_depth4_boundary(polys: &ErrorPolynomials) -> Result<ThresholdReport> {
    let target = distillation_threshold();
    let f = |q: f64| polys.eval_x(q) / 2.0 + polys.eval_z(q) - target;
    let hi = target;
    let root = bisect(f, 0.0, hi, ROOT_TOLERANCE)?;
    Ok(ThresholdReport {
        name: "depth-four-boundary".into(),
        solved_value: root,
        paper_value: Some(0.134),
        method: Method::RootFind,
        bracket: (0.0, hi),
        tolerance: ROOT_TOLERANCE,
        residual: f(root).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseClass {
    #[serde(rename = "dephasing-1local")]
    Dephasing1Local,
    Depolarizing,
}

impl NoiseClass {
    pub fn parity_threshold(self) -> f64 {
        match self {
            NoiseClass::Dephasing1Local => PARITY_THRESHOLD_DEPHASING,
            NoiseClass::Depolarizing => PARITY_THRESHOLD_DEPOLARIZING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    QuantumSide,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    /// `observed_mean − t − threshold`; positive iff quantum side.
    pub margin: f64,
    pub deviation: f64,
    pub threshold: f64,
}

/// Hoeffding test of an observed mean cell parity against the hardness
/// threshold, with `t = √(2 ln(1/δ) / n)` for ±1 variables.
pub fn single_shot_verdict(observed_mean: f64, n_cells: u64, delta: f64, class: NoiseClass) -> Result<Verdict> {
    if n_cells == 0 || !(-1.0..=1.0).contains(&observed_mean) || !(delta > 0.0 && delta < 1.0) {
        return Err(CqcError::OutOfRange(format!("mean = {observed_mean}, n = {n_cells}, delta = {delta}")));
    }
    let t = (2.0 * (1.0 / delta).ln() / n_cells as f64).sqrt();
    let threshold = class.parity_threshold();
    let margin = observed_mean - t - threshold;
    let verdict = if observed_mean - t > threshold { VerdictKind::QuantumSide } else { VerdictKind::Inconclusive };
    Ok(Verdict { verdict, margin, deviation: t, threshold })
}

/// How the depolarizing-model distillation condition is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reconstruction {
    /// `p_s + [q̄_Z(q_eff) − q_eff] + q̄_X(q_eff)/2 ≤ (1−√2/2)/2`.
    PsPlusHigherOrders,
    /// `p_s ≤ (1−√2/2)/2`, all chain terms dropped.
    LeadingOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepolThresholds {
    pub reconstruction: Reconstruction,
    pub distillation: ThresholdReport,
    pub classical: ThresholdReport,
}

/// Left-hand side of the reconstructed condition at `p1 = p2 = p`.
pub fn depolarizing_condition(polys: &ErrorPolynomials, rec: Reconstruction, p: f64) -> Result<f64> {
    let r = depolarizing_rates(&DepolModel::new(p, p)?)?;
    Ok(match rec {
        Reconstruction::LeadingOnly => r.p_s,
        Reconstruction::PsPlusHigherOrders => {
            r.p_s + (polys.eval_z(r.q_eff) - polys.z_coeffs.get(&1).copied().unwrap_or(0) as f64 * r.q_eff)
                + polys.eval_x(r.q_eff) / 2.0
        }
    })
}

/// Roots in `p = p1 = p2` of the reconstructed distillation condition and
/// of the classical-side condition `p_s = (1−√2/2)/2`.
pub fn solve_depolarizing_threshold(polys: &ErrorPolynomials, rec: Reconstruction) -> Result<DepolThresholds> {
    let target = distillation_threshold();
    let bracket = (0.0, 0.15);
    let lhs = |p: f64| depolarizing_condition(polys, rec, p).map(|v| v - target).unwrap_or(f64::NAN);
    let root = bisect(lhs, bracket.0, bracket.1, ROOT_TOLERANCE)?;
    let ps = |p: f64| depolarizing_condition(polys, Reconstruction::LeadingOnly, p).unwrap_or(f64::NAN) - target;
    let classical = bisect(ps, bracket.0, bracket.1, ROOT_TOLERANCE)?;
    Ok(DepolThresholds {
        reconstruction: rec,
        distillation: ThresholdReport {
            name: "depolarizing-distillation".into(),
            solved_value: root,
            paper_value: Some(0.0270),
            method: Method::RootFind,
            bracket,
            tolerance: ROOT_TOLERANCE,
            residual: lhs(root).abs(),
        },
        classical: ThresholdReport {
            name: "depolarizing-classical".into(),
            solved_value: classical,
            paper_value: Some(0.0998),
            method: Method::RootFind,
            bracket,
            tolerance: ROOT_TOLERANCE,
            residual: ps(classical).abs(),
        },
    })
}

/// Exact `(numerator, denominator)` of the postselection probability for
/// `n ≤ 20`, scaled by `2^{2n+1}` to clear the negative powers of two.
pub fn postbqp_probability_exact(n: u32, s: u64, k: i32) -> Result<(u128, u128)> {
    check_postbqp(n, s, k)?;
    if n > 20 {
        return Err(CqcError::OutOfRange(format!("exact arithmetic needs n <= 20, got {n}")));
    }
    let two_n = 1u128 << n;
    let s = s as u128;
    let diff = two_n.abs_diff(2 * s);
    let scale = 2 * n + 1;
    let e = (2 * k + 2 * n as i32) as u32;
    let num = (s * s << scale) + (diff * diff << e);
    let den = ((1u128 << scale) + (1u128 << (e + 1))) * (s * s + (two_n - s) * (two_n - s));
    Ok((num, den))
}

fn check_postbqp(n: u32, s: u64, k: i32) -> Result<()> {
    if !(1..=30).contains(&n) || s > 1u64 << n || k.unsigned_abs() > n {
        return Err(CqcError::OutOfRange(format!("n = {n}, s = {s}, k = {k}")));
    }
    Ok(())
}

/// `(s² + 2^{2k−1}(2ⁿ−2s)²) / ((1+2^{2k}) [s² + (2ⁿ−s)²])`.
pub fn postbqp_probability(n: u32, s: u64, k: i32) -> Result<f64> {
    check_postbqp(n, s, k)?;
    if n <= 20 {
        let (num, den) = postbqp_probability_exact(n, s, k)?;
        return Ok(num as f64 / den as f64);
    }
    let two_n = 2f64.powi(n as i32);
    let s = s as f64;
    let num = s * s + 2f64.powi(2 * k - 1) * (two_n - 2.0 * s).powi(2);
    let den = (1.0 + 2f64.powi(2 * k)) * (s * s + (two_n - s).powi(2));
    Ok(num / den)
}
