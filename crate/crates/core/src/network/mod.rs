//! Interconnected plant and structured reference model over an undirected
//! graph: specification, simulation, frequency-domain transfers and
//! assumption checks.

pub mod presets;
pub mod simulate;
pub mod spec;
pub mod transfer;

pub use simulate::{
    plant_graph, reference_graph, simulate_plant, simulate_reference, sinusoid, white_noise,
};
pub use spec::{EdgeSignals, Graph, MultiSignal, NetworkSpec, ReferenceNodeSpec, SubsystemSpec};
pub use transfer::{
    plant_transfer_eval, reference_transfer_eval, validate_network, ValidationReport,
};
