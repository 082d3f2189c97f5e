use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("universe must contain at least one element")]
    EmptyUniverse,
    #[error("universe of {n} elements exceeds the configured maximum of {max}")]
    UniverseTooLarge { n: usize, max: usize },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("universes differ: {left} vs {right} elements")]
    UniverseMismatch { left: usize, right: usize },
    #[error("value on the empty set must be 0, got {value}")]
    BoundaryViolation { value: f64 },
    #[error("value {value} on subset {subset} is negative")]
    NegativeValue { subset: usize, value: f64 },
    #[error("value {value} is not a finite number (subset {subset})")]
    NonFinite { subset: usize, value: f64 },
    #[error(
        "monotonicity violated: subset {subset} has {subset_value} > {superset_value} on superset {superset}"
    )]
    MonotonicityViolation {
        subset: usize,
        superset: usize,
        subset_value: f64,
        superset_value: f64,
    },
    #[error("set function is not the transform of a measure: {reason}")]
    NotAMeasure { reason: String },
    #[error("{which} is not a belief function")]
    NotBelief { which: &'static str },
    #[error("total masses differ: {left} vs {right}")]
    TotalMassMismatch { left: f64, right: f64 },
    #[error("marginals are not probability vectors: {reason}")]
    MarginalMismatch { reason: String },
    #[error("kappa {kappa} must exceed the largest ground cost {max_cost}")]
    KappaTooSmall { kappa: f64, max_cost: f64 },
    #[error("need kappa_plus ({kappa_plus}) > kappa ({kappa}) > max cost ({max_cost})")]
    KappaOrderViolation {
        kappa: f64,
        kappa_plus: f64,
        max_cost: f64,
    },
    #[error("cost entry {value} at ({row}, {col}) must be finite and nonnegative")]
    InvalidCost { row: usize, col: usize, value: f64 },
    #[error("absolute-value variable {var} has negative objective weight {weight}")]
    NegativeWeightOnAbs { var: usize, weight: f64 },
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error(
        "linear program too large for the dense solver ({entries} tableau entries, limit {limit})"
    )]
    LpTooLarge { entries: usize, limit: usize },
    #[error("solver finished with status {0}")]
    Solver(LpStatus),
    #[error("oracle limits exceeded: {vars} variables, {rows} equality rows (max 20 / 16)")]
    OracleTooLarge { vars: usize, rows: usize },
    #[error("no basic feasible solution exists")]
    InfeasibleEverywhere,
    #[error("plan shape does not match: {0}")]
    PlanShape(String),
}
