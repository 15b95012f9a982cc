//! Explicit-state model checking for software-defined networks whose flow
//! entries can time out.
//!
//! A network state holds host, switch and controller queues. The checker
//! enumerates every interleaving of the labelled actions in [`semantics`],
//! checks a [`proplang::Property`] on each state and transition, and can
//! prune flow-removed interleavings with the reduction in [`por`].

pub mod canonical;
pub mod controller;
pub mod error;
pub mod explorer;
pub mod model;
pub mod por;
pub mod proplang;
pub mod report;
pub mod semantics;
pub mod topology;

pub use canonical::{canonical_hash, StateDigest};
pub use controller::{builtin_controller, ControllerProgram, LoadBalancer};
pub use error::ConfigError;
pub use explorer::{explore, ExplorationOptions, ExplorationReport, SearchOrder, Verdict};
pub use model::GlobalState;
pub use proplang::{builtin_property, Property};
pub use semantics::{apply, enabled_actions, Action};
pub use topology::{build_topology, generate_topology, initial_state, Topology, TopologyConfig};
