use thiserror::Error;

/// Errors produced across the synthesis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by the zero transfer function")]
    DivisionByZero,

    #[error("transfer function is improper (relative degree {0})")]
    Improper(i64),

    #[error("transfer function has a pole on the unit circle at omega = {0}")]
    PoleOnGrid(f64),

    #[error("denominator must not be the zero polynomial")]
    ZeroDenominator,

    #[error("signal horizon too short: need more than {needed} samples, got {got}")]
    HorizonTooShort { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ill-posed interconnection: static feedthrough loop condition number {0:e}")]
    IllPosed(f64),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid network specification: {0}")]
    InvalidNetwork(String),

    #[error("node {node}: 1 - T_i is identically zero")]
    UnitReference { node: usize },

    #[error("node {node}: plant G_i is identically zero")]
    ZeroPlant { node: usize },

    #[error("controller entry {entry} is not representable in the parametrization (residual {residual:e})")]
    NotRepresentable { entry: String, residual: f64 },

    #[error("regressor matrix for node {node} is rank deficient (rank {rank} < {cols})")]
    RankDeficient {
        node: usize,
        rank: usize,
        cols: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("network assumption violated: {0}")]
    Assumption(String),

    #[error("ideal controller is not realizable: {0}")]
    Unrealizable(String),

    #[error("insufficient excitation: {0}")]
    Excitation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
