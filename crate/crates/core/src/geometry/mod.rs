//! Metric spaces, topology generation and the communication graph.

mod generate;
mod io;
mod metric;
mod topology;

pub use generate::{generate_topology, line_spacing_for_hops, TopologyFamily, MAX_RESAMPLES};
pub use io::{format_real, parse_topology, read_topology, write_topology, write_topology_string};
pub use metric::{covering_bound, dist, MetricPoint, MetricSpace};
pub use topology::{ball_members, build_comm_graph, hop_distances, CommGraph, NetworkTopology, Station, StationId};
