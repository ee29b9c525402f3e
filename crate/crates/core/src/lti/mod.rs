//! Scalar discrete-time LTI building blocks: polynomials and rational
//! transfer functions in the forward shift `q`, filtering, realization, and
//! interconnection of scalar blocks into a global state-space model.

pub mod interconnect;
pub mod polynomial;
pub mod realization;
pub mod signal;
pub mod tf;

pub use interconnect::{GraphRealization, Link, SignalGraph, Source};
pub use polynomial::Polynomial;
pub use realization::{realize, StateSpace};
pub use signal::{filter, filter_slice, inverse_filter, inverse_filter_slice, Signal};
pub use tf::{tf_arith, ArithKind, RationalTF, DEFAULT_CANCEL_TOL, REL_DEGREE_INF};

/// `n` frequencies `π k / n`, `k = 1..=n`.
///
/// Zero is excluded: unit-DC-gain reference models and integrating
/// controllers are singular there.
pub fn frequency_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}
