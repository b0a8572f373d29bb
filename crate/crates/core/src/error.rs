use thiserror::Error;

#[derive(Debug, Error)]
pub enum CqcError {
    #[error("empty lattice: every dimension must be at least 1, got {0:?}")]
    EmptyLattice([usize; 3]),
    #[error("no qubit at coordinate {0:?}")]
    UnknownCoordinate([i32; 3]),
    #[error("unknown qubit id {0}")]
    UnknownQubit(usize),
    #[error("qubit at {0:?} assigned more than one region")]
    ConflictingRegion([i32; 3]),
    #[error("geometry does not fit: {0}")]
    GeometryDoesNotFit(String),
    #[error("invalid injection site: {0}")]
    InvalidSite(String),
    #[error("lattice too small: a chain of length {length} reaches the lattice guard band")]
    LatticeTooSmall { length: usize },
    #[error("max_len {requested} exceeds the hard cap {cap}")]
    ResourceGuard { requested: usize, cap: usize },
    #[error("geometry version mismatch: {0} vs {1}")]
    GeometryMismatch(String, String),
    #[error("census kind mismatch: expected {expected}, got {got}")]
    KindMismatch { expected: String, got: String },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("bound diverges: {0}")]
    BoundDiverges(String),
    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("non-Clifford gate requested: {0}")]
    NonClifford(String),
    #[error("state outside the stabilizer octahedron (|x|+|y|+|z| = {0})")]
    OutsideOctahedron(f64),
    #[error("infeasible decomposition: {0}")]
    Infeasible(String),
    #[error("too many qubits for the dense oracle: {0}")]
    TooManyQubits(usize),
    #[error("zero-probability projection event")]
    ZeroProbability,
    #[error("residual graph is not one-dimensional: {0}")]
    NotOneDimensional(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CqcError>;
