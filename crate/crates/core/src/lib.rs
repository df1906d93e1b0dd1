//! Jellyfish interconnect workbench.
//!
//! Builds random regular graph (RRG) switch topologies, computes multi-path
//! route sets under four k-shortest-path selection schemes, and evaluates
//! routing mechanisms three ways: an analytic multipath throughput model, a
//! cycle-level packet simulator, and message-level workload replay.

pub mod experiment;
pub mod model;
pub mod pathsel;
pub mod rng;
pub mod simnet;
pub mod topology;
pub mod traffic;

pub use model::{flow_rates, link_loads, FlowRateReport, LinkLoads, ModelError};
pub use pathsel::{build_pathset, quality_report, Path, PathQualityReport, PathSet, Scheme};
pub use simnet::{replay, run, saturation_sweep, Mechanism, SimConfig, SimError, SimStats};
pub use topology::{Graph, NodeId, SwitchId, TopoSpec, Topology, TopologyError};
pub use traffic::{TrafficPattern, Workload};
