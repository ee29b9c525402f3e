//! Closed-loop assembly, simulation and model-reference performance of
//! distributed controllers, and the Monte Carlo study over controller
//! classes.

pub mod closed_loop;
pub mod controller;
pub mod montecarlo;

pub use closed_loop::{
    assemble_closed_loop, closed_loop_transfer_eval, controller_transfer_eval, estimate_jmr,
    performance_metric, simulate_closed_loop, ClosedLoopResponse, ClosedLoopSystem,
};
pub use controller::{ControllerNode, DistributedController};
pub use montecarlo::{
    generate_data, monte_carlo, step_references, synthesize, ClassSummary, ControllerClass,
    MonteCarloConfig, MonteCarloResult, ReplicateRecord,
};
