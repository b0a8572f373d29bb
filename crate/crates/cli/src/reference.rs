//! Published reference values the `reproduce` manifests diff against.

/// Primal chain counts for lengths 1..=14.
pub const PRIMAL_COUNTS: [u64; 14] = [1, 0, 0, 7, 0, 106, 0, 1520, 0, 24220, 0, 409208, 0, 7165474];

/// Dual chain counts for lengths 1..=14.
pub const DUAL_COUNTS: [u64; 14] =
    [0, 0, 4, 8, 52, 200, 1060, 4084, 23128, 90636, 507936, 2039320, 11220284, 45854572];

pub const DISTILLATION: (f64, f64) = (0.14645, 5e-6);
pub const DEPHASING_TOPOLOGICAL: (f64, f64) = (0.16667, 5e-6);
/// Printed to three digits.
pub const DEPTH_FOUR: (f64, f64) = (0.134, 5e-4);
/// Depolarizing roots; reported but not gating.
pub const DEPOLARIZING_DISTILLATION: (f64, f64) = (0.0270, 5e-5);
pub const DEPOLARIZING_CLASSICAL: (f64, f64) = (0.0998, 5e-5);

/// Classical-curve crossing angle.
pub const CROSSING_PHI: (f64, f64) = (0.0144, 0.002);
/// Stabilizer-mixture curve at zero angle offset.
pub const STABILIZER_CURVE_AT_ZERO: (f64, f64) = (0.146447, 1e-4);

/// Monte Carlo acceptance in standard errors.
pub const PARITY_SIGMAS: f64 = 3.0;
