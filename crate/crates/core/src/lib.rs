//! Workflow Petri nets: firing semantics, PNML interchange, explicit state
//! spaces and complexity metrics (density, extended cyclomatic,
//! structuredness).

pub mod fixtures;
pub mod marking;
pub mod metrics;
pub mod net;
pub mod pnml;
pub mod state_space;
pub mod structure;

pub use marking::Marking;
pub use metrics::{full_report, MetricsError, MetricsReport};
pub use net::{validate_workflow, NetBuilder, PetriNet, WorkflowNet};
pub use pnml::{parse_pnml, write_pnml};
pub use state_space::{reachability_graph, scc_decompose, soundness_check, DEFAULT_STATE_CAP};
pub use structure::{ComponentKind, ComponentMatch};

/// Exact rational used for densities and structuredness weights.
pub type Rational = num_rational::Ratio<i128>;

pub(crate) fn serialize_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}
