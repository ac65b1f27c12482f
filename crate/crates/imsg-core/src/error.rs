use thiserror::Error;

/// Unified error type for the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state space must contain at least one state")]
    EmptyStateSpace,
    #[error("duplicate state label: {0}")]
    DuplicateLabel(String),
    #[error("duplicate member name: {0}")]
    DuplicateName(String),
    #[error("dimension mismatch: {context} expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("objects live on different state spaces ({context})")]
    StateSpaceMismatch { context: &'static str },
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("negative off-diagonal rate at ({row}, {col}): {value}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("generator row {row} sums to {sum}, exceeding tolerance {tol}")]
    RowSumViolation { row: usize, sum: f64, tol: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("value out of domain: {context} (got {value})")]
    OutOfDomain { context: &'static str, value: f64 },
    #[error("probability weights invalid: {0}")]
    InvalidMeasure(String),
    #[error("invariant measure is not unique: null space dimension {null_dim}")]
    NotUniquelyErgodic { null_dim: usize },
    #[error("generator is not reversible: symmetrization residual {residual:.3e} exceeds {tol:.3e}")]
    NotReversible { residual: f64, tol: f64 },
    #[error("integration by parts mismatch: sum of measure-weighted carre du champ {gamma_route:.12e} vs generator route {generator_route:.12e}")]
    IntegrationByPartsViolation {
        gamma_route: f64,
        generator_route: f64,
    },
    #[error("supplied derivative bundle is inconsistent with finite differences at u = {probe}: reported {reported}, measured {measured}")]
    PsiInconsistent {
        probe: f64,
        reported: f64,
        measured: f64,
    },
    #[error("diffusion coefficient a(x) = {value} is not positive at grid node {node} (x = {x})")]
    EllipticityViolation { node: usize, x: f64, value: f64 },
    #[error("grid invalid: {0}")]
    InvalidGrid(String),
    #[error("coefficient expression error: {0}")]
    ExprError(String),
    #[error("relation is not transitive: {i} below {j} and {j} below {k}, but {i} vs {k} is {outcome}; reduce eps_order or refine the time grid")]
    IntransitiveRelation {
        i: String,
        j: String,
        k: String,
        outcome: String,
    },
    #[error("members {i} and {j} compare equal but relate differently to {k}; reduce eps_order or refine the time grid")]
    InconsistentEquality { i: String, j: String, k: String },
    #[error("family has no {0} element")]
    MissingExtremes(&'static str),
    #[error("collection too large for exhaustive enumeration: {size} members exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("semigroup did not reach its ergodic limit: sup error {final_error:.3e} at t = {t_max} exceeds {tol:.3e}")]
    NoConvergence {
        final_error: f64,
        t_max: f64,
        tol: f64,
    },
    #[error("family must contain at least one member")]
    EmptyFamily,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
